"""Diagonal space-time metrics and their Gabor-regularized versions.

Signature is ``(+, -, -, -)``.  Polynomial metric components (Minkowski in
curvilinear coordinates, the uniformly accelerated frame) are regularized
component-wise with :mod:`phase4d`.  Schwarzschild is handled through the
radial profiles ``Ũ_p``, ``Ṽ_p`` and ``L_p`` of an isotropic probability
``p`` on space-time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import numerics
from .errors import NumericalError, QuadratureError
from .phase4d import Field4, Probe4, portrait_field, quantize_field

__all__ = [
    "MetricField",
    "METRIC_CATALOG",
    "build_metric",
    "regularize_gaussian",
    "RadialProbability",
    "SchwarzschildProfiles",
    "ProfileLimits",
    "schwarzschild_profiles",
    "profile_limits",
    "shifted_radius",
    "profile_table",
    "fixed_point_residual",
]

COORDINATES = ("cartesian", "cylindrical", "spherical", "accelerated")


# -- coordinate maps to the Cartesian frame used by phase4d -----------------


def _identity(x):
    return np.asarray(x, dtype=float)


def _cylindrical_to_cartesian(x):
    x = np.asarray(x, dtype=float)
    t, rho, th, z = np.moveaxis(x, -1, 0)
    return np.stack([t, rho * np.cos(th), rho * np.sin(th), z], axis=-1)


def _spherical_to_cartesian(x):
    x = np.asarray(x, dtype=float)
    t, r, th, ph = np.moveaxis(x, -1, 0)
    s = np.sin(th)
    return np.stack([t, r * s * np.cos(ph), r * s * np.sin(ph), r * np.cos(th)], axis=-1)


_TO_CARTESIAN = {
    "cartesian": _identity,
    "accelerated": _identity,
    "cylindrical": _cylindrical_to_cartesian,
    "spherical": _spherical_to_cartesian,
}


@dataclass(frozen=True)
class MetricField:
    """Diagonal metric ``g = diag(g_00, g_11, g_22, g_33)``.

    ``fields`` holds, when available, the components as :class:`Field4`
    objects in Cartesian coordinates; they make Gaussian regularization
    possible.  ``native_poly`` holds components that are polynomials in the
    native coordinates, which gives closed-form derivatives.
    """

    name: str
    coordinates: str
    components: tuple
    params: Mapping[str, float] = field(default_factory=dict)
    fields: tuple | None = None
    native_poly: tuple | None = None
    domain: Callable | None = None

    def __post_init__(self):
        if self.coordinates not in COORDINATES:
            raise ValueError(f"unknown coordinate system {self.coordinates!r}")
        if len(self.components) != 4:
            raise ValueError("a diagonal metric needs four components")

    def diagonal(self, x) -> np.ndarray:
        """Components at ``x`` (shape ``(..., 4)``) stacked on the last axis."""
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(np.asarray(g(x), dtype=float), x.shape[:-1])
                         for g in self.components], axis=-1)

    def matrix(self, x) -> np.ndarray:
        return np.diag(self.diagonal(np.asarray(x, dtype=float)))

    def determinant(self, x) -> np.ndarray:
        return np.prod(self.diagonal(x), axis=-1)

    def in_domain(self, x) -> bool:
        return True if self.domain is None else bool(self.domain(np.asarray(x, dtype=float)))

    def signature_ok(self, x) -> bool:
        d = self.diagonal(x)
        return bool(d[0] > 0 and np.all(d[1:] < 0))

    @property
    def has_closed_derivatives(self) -> bool:
        return self.native_poly is not None

    def derivatives(self, x):
        """Closed-form ``(g, ∂g, ∂∂g)`` for native-polynomial components.

        Shapes ``(4,)``, ``(4, 4)`` indexed ``[component, direction]`` and
        ``(4, 4, 4)``.
        """
        if self.native_poly is None:
            raise ValueError(f"{self.name} has no closed-form derivatives")
        x = np.asarray(x, dtype=float)
        g = np.zeros(4)
        dg = np.zeros((4, 4))
        ddg = np.zeros((4, 4, 4))
        for mu, coeffs in enumerate(self.native_poly):
            for a, c in coeffs.items():
                a = np.array(a)
                g[mu] += c * np.prod(x ** a)
                for i in range(4):
                    if a[i]:
                        ai = a.copy()
                        ai[i] -= 1
                        dg[mu, i] += c * a[i] * np.prod(x ** ai)
                        for j in range(4):
                            if ai[j]:
                                aij = ai.copy()
                                aij[j] -= 1
                                ddg[mu, i, j] += c * a[i] * ai[j] * np.prod(x ** aij)
        return g, dg, ddg


def _poly_component(coeffs):
    return lambda x, cf=coeffs: _eval_native(cf, x)


def _eval_native(coeffs, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    for a, c in coeffs.items():
        term = np.full(x.shape[:-1], float(c))
        for i, k in enumerate(a):
            if k:
                term = term * x[..., i] ** k
        out = out + term
    return out


def _const(c):
    return {(0, 0, 0, 0): float(c)}


def _required(params, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ValueError(f"missing parameter(s): {', '.join(missing)}")
    return [float(params[k]) for k in keys]


def _minkowski_cartesian(params):
    native = (_const(1), _const(-1), _const(-1), _const(-1))
    fields = tuple(Field4.polynomial(c, name=f"g{i}{i}") for i, c in enumerate(native))
    return MetricField("minkowski-cartesian", "cartesian",
                       tuple(_poly_component(c) for c in native), dict(params), fields, native)


def _minkowski_cylindrical(params):
    # coordinates (t, ρ, θ, z); g_θθ = -ρ² = -((x¹)² + (x²)²)
    native = (_const(1), _const(-1), {(0, 2, 0, 0): -1.0}, _const(-1))
    rho2 = Field4.cylindrical_radius_squared()
    fields = (Field4.constant(1.0), Field4.constant(-1.0),
              Field4.polynomial({k: -v for k, v in rho2.poly.items()}, "g_thth",
                                "polynomial-cylindrical"),
              Field4.constant(-1.0))
    return MetricField("minkowski-cylindrical", "cylindrical",
                       tuple(_poly_component(c) for c in native), dict(params), fields, native,
                       domain=lambda x: x[1] > 0)


def _minkowski_spherical(params):
    # coordinates (t, r, θ, φ); g_θθ = -r², g_φφ = -r² sin²θ = -ρ²
    r2 = Field4.radius_squared()
    rho2 = Field4.cylindrical_radius_squared()
    fields = (Field4.constant(1.0), Field4.constant(-1.0),
              Field4.polynomial({k: -v for k, v in r2.poly.items()}, "g_thth", "polynomial-radial"),
              Field4.polynomial({k: -v for k, v in rho2.poly.items()}, "g_phph",
                                "polynomial-cylindrical"))
    comps = (lambda x: np.ones(np.shape(x)[:-1]),
             lambda x: -np.ones(np.shape(x)[:-1]),
             lambda x: -np.asarray(x)[..., 1] ** 2,
             lambda x: -(np.asarray(x)[..., 1] * np.sin(np.asarray(x)[..., 2])) ** 2)
    return MetricField("minkowski-spherical", "spherical", comps, dict(params), fields,
                       domain=lambda x: x[1] > 0 and math.sin(x[2]) != 0)


def _accelerated(params):
    (alpha,) = _required(params, "alpha")
    varsigma = float(params.get("varsigma", 0.0))
    g00 = {(0, 2, 0, 0): alpha ** 2}
    if varsigma:
        g00[(0, 0, 0, 0)] = varsigma
    native = (g00, _const(-1), _const(-1), _const(-1))
    fields = tuple(Field4.polynomial(c, name=f"g{i}{i}") for i, c in enumerate(native))
    name = "einstein-rosen" if varsigma else "accelerated"
    p = {"alpha": alpha, "varsigma": varsigma}
    return MetricField(name, "accelerated", tuple(_poly_component(c) for c in native), p,
                       fields, native,
                       domain=(lambda x: True) if varsigma > 0 else (lambda x: x[1] != 0))


def _schwarzschild(params):
    (m,) = _required(params, "m")
    if not m > 0:
        raise ValueError("mass parameter m must be positive")

    def U(x):
        return 1 - 2 * m / np.asarray(x)[..., 1]

    comps = (U, lambda x: -1 / U(x),
             lambda x: -np.asarray(x)[..., 1] ** 2,
             lambda x: -(np.asarray(x)[..., 1] * np.sin(np.asarray(x)[..., 2])) ** 2)
    return MetricField("schwarzschild", "spherical", comps, {"m": m},
                       domain=lambda x: x[1] > 2 * m)


def _de_sitter(params):
    (lam,) = _required(params, "Lambda")
    if not lam > 0:
        raise ValueError("cosmological constant must be positive")

    def U(x):
        return 1 - lam * np.asarray(x)[..., 1] ** 2 / 3

    comps = (U, lambda x: -1 / U(x),
             lambda x: -np.asarray(x)[..., 1] ** 2,
             lambda x: -(np.asarray(x)[..., 1] * np.sin(np.asarray(x)[..., 2])) ** 2)
    return MetricField("de-sitter", "spherical", comps, {"Lambda": lam},
                       domain=lambda x: 0 < x[1] < math.sqrt(3 / lam))


METRIC_CATALOG: dict[str, Callable] = {
    "minkowski-cartesian": _minkowski_cartesian,
    "minkowski-cylindrical": _minkowski_cylindrical,
    "minkowski-spherical": _minkowski_spherical,
    "accelerated": _accelerated,
    "einstein-rosen": _accelerated,
    "schwarzschild": _schwarzschild,
    "de-sitter": _de_sitter,
}


def build_metric(name: str, params: Mapping[str, float] | None = None) -> MetricField:
    """Metric from the catalog.

    ``accelerated`` needs ``alpha``; ``einstein-rosen`` needs ``alpha`` and
    ``varsigma``; ``schwarzschild`` needs ``m``; ``de-sitter`` needs
    ``Lambda``.
    """
    params = dict(params or {})
    if name not in METRIC_CATALOG:
        raise ValueError(f"unknown metric {name!r}; choose from {sorted(METRIC_CATALOG)}")
    if name == "einstein-rosen":
        _required(params, "alpha", "varsigma")
    return METRIC_CATALOG[name](params)


def regularize_gaussian(metric: MetricField, sigma, mode: str = "portrait") -> MetricField:
    """Component-wise Gaussian regularization of a polynomial metric.

    ``mode="portrait"`` applies the semi-classical portrait (each squared
    Cartesian coordinate gains ``σ_μ²``); ``mode="operator"`` applies the
    multiplier symbol (gain ``σ_μ²/2``).
    """
    if metric.fields is None:
        raise ValueError(f"{metric.name} has non-polynomial components; "
                         "use schwarzschild_profiles for radial regularization")
    if mode not in ("portrait", "operator"):
        raise ValueError(f"unknown mode {mode!r}")
    probe = Probe4.separable_gaussian(sigma)
    op = portrait_field if mode == "portrait" else quantize_field
    new_fields = tuple(op(f, probe) for f in metric.fields)
    to_cart = _TO_CARTESIAN[metric.coordinates]
    comps = tuple((lambda x, f=f: f(to_cart(x))) for f in new_fields)
    params = dict(metric.params)
    params["sigma"] = tuple(float(s) for s in probe.sigma)
    native = None
    if metric.coordinates in ("cartesian", "accelerated"):
        native = tuple(dict(f.poly) for f in new_fields)
    elif metric.coordinates == "cylindrical":
        # ρ² + const is polynomial in (t, ρ, θ, z)
        native = tuple(_cylindrical_native(f.poly) for f in new_fields)
        if any(n is None for n in native):
            native = None
    name = f"{metric.name}+gauss-{mode}"
    if metric.coordinates == "accelerated":
        alpha = metric.params["alpha"]
        shift = probe.sigma[1] ** 2 * (1.0 if mode == "portrait" else 0.5)
        params["varsigma"] = metric.params.get("varsigma", 0.0) + alpha ** 2 * shift
    return MetricField(name, metric.coordinates, comps, params, new_fields, native)


def _cylindrical_native(poly):
    out = {}
    for a, c in poly.items():
        if a == (0, 0, 0, 0) or a == (0, 0, 0, 2) or a == (2, 0, 0, 0):
            out[a] = out.get(a, 0.0) + c
        elif a in ((0, 2, 0, 0), (0, 0, 2, 0)):
            # (x¹)² and (x²)² appear together as ρ²; their coefficients must agree
            key = (0, 2, 0, 0)
            if key in out and out[key] != c:
                return None
            out[key] = c
        else:
            return None
    if ((0, 2, 0, 0) in poly) != ((0, 0, 2, 0) in poly):
        return None
    return out


# -- isotropic probabilities on space-time ----------------------------------


class RadialProbability:
    """Spatially isotropic probability ``p(t, r)`` on space-time.

    Only the radial law ``P(r') = 4π r'² ∫ p(t, r') dt`` enters the
    Schwarzschild profiles, so that is what is stored (normalized so
    ``∫ P = 1``).  ``density`` keeps ``p`` itself when it is known.
    """

    def __init__(self, radial_pdf: Callable, support: tuple[float, float],
                 density: Callable | None = None, label: str = "p",
                 breakpoints=(), tol: float = 1e-12):
        lo, hi = float(support[0]), float(support[1])
        if not (0 <= lo < hi and math.isfinite(hi)):
            raise ValueError(f"bad radial support {support}")
        self.support = (lo, hi)
        self.label = label
        self.breakpoints = tuple(sorted(b for b in breakpoints if lo < b < hi))
        self._raw = radial_pdf
        self.tol = tol
        mass = numerics.integrate(radial_pdf, lo, hi, tol, self.breakpoints).value
        if not (math.isfinite(mass) and mass > 0):
            raise ValueError("radial probability is not normalizable")
        self.raw_mass = mass
        self._density = density
        self._cache: dict = {}
        self.params: dict = {}

    # -- constructors ------------------------------------------------------

    @classmethod
    def shell(cls, rc: float, sr: float, st: float = 1.0, tol: float = 1e-12) -> "RadialProbability":
        """``p ∝ exp(-t²/2st²) exp(-(r-rc)²/2sr²)`` on ``r ≥ 0``."""
        if not (sr > 0 and st > 0 and rc >= 0):
            raise ValueError("shell probe needs rc >= 0, sr > 0, st > 0")
        lo = max(0.0, rc - 14 * sr)
        hi = rc + 14 * sr

        def radial(r):
            r = np.asarray(r, dtype=float)
            return r * r * np.exp(-(r - rc) ** 2 / (2 * sr * sr))

        # the t factor integrates to st √(2π) and cancels on normalization
        obj = cls(radial, (lo, hi), label=f"shell(rc={rc:g},sr={sr:g},st={st:g})",
                  breakpoints=(rc,), tol=tol)
        z = 4 * math.pi * st * math.sqrt(2 * math.pi) * obj.raw_mass

        def density(t, r):
            t = np.asarray(t, dtype=float)
            r = np.asarray(r, dtype=float)
            return np.where(r >= 0, np.exp(-t * t / (2 * st * st) - (r - rc) ** 2 / (2 * sr * sr)),
                            0.0) / z

        obj._density = density
        obj.params = {"rc": rc, "sr": sr, "st": st}
        return obj

    @classmethod
    def from_density(cls, density: Callable, t_max: float, r_max: float,
                     label: str = "p", tol: float = 1e-12) -> "RadialProbability":
        """Radial law of an arbitrary isotropic density ``p(t, r)``."""
        tn, tw = numerics.gl_nodes(-t_max, t_max, 16)

        def radial(r):
            r = np.asarray(r, dtype=float)
            return 4 * math.pi * r * r * (density(tn[:, None], r.reshape(1, -1)).T @ tw).reshape(r.shape)

        return cls(radial, (0.0, r_max), density=density, label=label, tol=tol)

    @classmethod
    def from_samples(cls, r, pdf, label: str = "sampled", tol: float = 1e-12) -> "RadialProbability":
        """Radial law from samples of ``P(r)`` (cubic spline, clipped at 0)."""
        r = np.asarray(r, dtype=float)
        spline = CubicSpline(r, np.asarray(pdf, dtype=float), extrapolate=False)

        def radial(x):
            v = spline(np.asarray(x, dtype=float))
            return np.where(np.isnan(v), 0.0, np.maximum(v, 0.0))

        # spline knots as break points keep each panel polynomial
        return cls(radial, (float(r[0]), float(r[-1])), label=label, breakpoints=tuple(r[1:-1]),
                   tol=tol)

    # -- basic quantities --------------------------------------------------

    def pdf(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.support
        inside = (r >= lo) & (r <= hi)
        return np.where(inside, self._raw(np.clip(r, lo, hi)), 0.0) / self.raw_mass

    def density(self, t, r):
        if self._density is None:
            raise ValueError("this probability only knows its radial law")
        return self._density(t, r)

    def expect(self, g: Callable, a: float | None = None, b: float | None = None,
               points=(), endpoint_singular: bool = False) -> float:
        """``∫_a^b g(r') P(r') dr'`` clipped to the support."""
        lo, hi = self.support
        a = lo if a is None else max(a, lo)
        b = hi if b is None else min(b, hi)
        if not a < b:
            return 0.0
        pts = sorted(set(p for p in (*points, *self.breakpoints) if a < p < b))
        return numerics.integrate(lambda r: g(r) * self.pdf(r), a, b, self.tol, pts,
                                  endpoint_singular).value

    def normalization(self) -> float:
        """``∫ P`` after normalization; 1 up to quadrature error."""
        return self.expect(lambda r: np.ones_like(r))

    def normalization_4d(self) -> float:
        """``4π ∬ r² p(t, r) dr dt`` from the stored density."""
        lo, hi = self.support
        return numerics.integrate_2d(lambda t, r: 4 * math.pi * r * r * self.density(t, r),
                                     (-40.0 * max(1.0, self.params.get("st", 1.0)),
                                      40.0 * max(1.0, self.params.get("st", 1.0))),
                                     (lo, hi), 1e-10).value

    def cdf(self, r: float) -> float:
        """``⟨𝟙_[0,r]⟩``."""
        return self.expect(lambda x: np.ones_like(x), None, r)

    def upper_inverse(self, r: float) -> float:
        """``⟨Y_r(r')/r'⟩ = ∫_r^∞ P(r')/r' dr'``."""
        return self.expect(lambda x: 1 / x, r, None)

    def mean_inverse(self) -> float:
        """``⟨1/r'⟩``."""
        if "inv" not in self._cache:
            lo, _ = self.support
            if lo == 0.0 and self.pdf(1e-300) > 0:
                raise NumericalError("⟨1/r'⟩ diverges: P does not vanish at the origin")
            self._cache["inv"] = self.expect(lambda x: 1 / np.where(x > 0, x, np.inf))
        return self._cache["inv"]

    def second_moment(self) -> float:
        """``⟨r'²⟩``."""
        if "r2" not in self._cache:
            self._cache["r2"] = self.expect(lambda x: x * x)
        return self._cache["r2"]

    def autocorrelated(self, points: int = 1601) -> "RadialProbability":
        """Radial law of ``X - X'`` for independent spatial vectors distributed as ``P``.

        For isotropic laws the difference has radial density
        ``Q(s) = (s/2) ∫ (P(a)/a) [K(s+a) - K(|s-a|)] da`` with
        ``K(x) = ∫_0^x P(b)/b db``.  Sampled and splined on ``[0, 2 r_max]``.
        """
        lo, hi = self.support
        a, wa = numerics.gl_nodes(lo, hi, 64)
        pa = self.pdf(a) / a
        # K by cumulative Gauss-Legendre over the support
        kcum = np.array([self.expect(lambda x: 1 / x, None, x) if x > lo else 0.0
                         for x in np.linspace(lo, hi, points)])
        kgrid = np.linspace(lo, hi, points)
        K = CubicSpline(kgrid, kcum)

        def Kf(x):
            x = np.asarray(x, dtype=float)
            return np.where(x <= lo, 0.0, np.where(x >= hi, kcum[-1], K(np.clip(x, lo, hi))))

        s = np.linspace(0.0, 2 * hi, points)
        diff = Kf(s[:, None] + a[None, :]) - Kf(np.abs(s[:, None] - a[None, :]))
        Q = 0.5 * s * (diff @ (pa * wa))
        return RadialProbability.from_samples(s, Q, label=f"autocorrelation[{self.label}]",
                                              tol=self.tol)


# -- Schwarzschild profiles --------------------------------------------------


def _log_ratio(num, den):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(num)) - np.log(np.abs(den))


@dataclass(frozen=True)
class SchwarzschildProfiles:
    """Regularized ``g_00 = Ũ_p(r)`` and ``-g_rr = Ṽ_p(r)`` of Schwarzschild."""

    probe: RadialProbability
    m: float

    def U(self, r: float) -> float:
        """``1 - (2m/r) ⟨𝟙_[0,r]⟩ - 2m ⟨Y_r/r'⟩``."""
        r = float(r)
        if not r > 0:
            raise ValueError("profiles are defined for r > 0")
        m = self.m
        return 1 - (2 * m / r) * self.probe.cdf(r) - 2 * m * self.probe.upper_inverse(r)

    def dU(self, r: float) -> float:
        """``dŨ/dr = (2m/r²) ⟨𝟙_[0,r]⟩``."""
        return 2 * self.m / r ** 2 * self.probe.cdf(r)

    def L(self, r: float) -> float:
        """Logarithmic part of ``Ṽ``; the log singularities are split out."""
        r = float(r)
        if not r > 0:
            raise ValueError("profiles are defined for r > 0")
        m = self.m
        c = r - 2 * m
        lo, hi = self.probe.support

        def inner(x):
            return _log_ratio(x + c, x - c) / x

        def outer(x):
            return _log_ratio(x + c, x - (r + 2 * m)) / x

        sing = [abs(c), r + 2 * m]
        first = self.probe.expect(inner, None, r, points=sing, endpoint_singular=True)
        second = self.probe.expect(outer, r, None, points=sing, endpoint_singular=True)
        return 2 * m * m / r * (first + second)

    def V(self, r: float) -> float:
        """``2 - Ũ + L``."""
        return 2 - self.U(r) + self.L(r)

    def L_first_form(self, r: float) -> float:
        """``L`` through the other rearrangement (whole-line log plus Heaviside part)."""
        r = float(r)
        m = self.m
        c = r - 2 * m
        sing = [abs(c), r + 2 * m]
        whole = self.probe.expect(lambda x: _log_ratio(x + c, x - c) / x,
                                  points=sing + [r], endpoint_singular=True)
        upper = self.probe.expect(lambda x: _log_ratio(x - c, x - (r + 2 * m)) / x, r, None,
                                  points=sing, endpoint_singular=True)
        return 2 * m * m / r * (whole + upper)

    def U_min(self) -> float:
        """``Ũ(0⁺) = 1 - ⟨2m/r'⟩``."""
        return 1 - 2 * self.m * self.probe.mean_inverse()

    def V_at_zero(self, tol: float = 1e-10) -> float:
        """``Ṽ(0⁺) = 1 + ⟨2m/r'⟩ + 4m² p.v.⟨1/(r'(r'-2m))⟩``.

        The principal value is ``-π H[u](2m)`` with ``u(τ) = P(τ)/τ`` on
        ``τ > 0``.
        """
        m = self.m
        lo, hi = self.probe.support

        def u(tau):
            tau = np.asarray(tau, dtype=float)
            safe = np.where(tau > 0, tau, 1.0)
            return np.where(tau > 0, self.probe.pdf(tau) / safe, 0.0)

        if hi <= 2 * m or lo >= 2 * m:
            pv = self.probe.expect(lambda x: 1 / (x * (x - 2 * m)))
        else:
            kinks = [p for p in (0.0, lo, hi, *self.probe.breakpoints) if p != 2 * m]
            width = min(2 * m - lo, hi - 2 * m) if lo < 2 * m < hi else None
            h = numerics.hilbert_transform(u, 2 * m, tol, width=width, points=kinks)
            pv = -math.pi * h.value
        return 1 + 2 * m * self.probe.mean_inverse() + 4 * m * m * pv


def schwarzschild_profiles(p: RadialProbability, m: float) -> SchwarzschildProfiles:
    if not m > 0:
        raise ValueError("mass parameter m must be positive")
    return SchwarzschildProfiles(p, float(m))


class ProfileLimits(NamedTuple):
    U_min: float
    U_at_2m: float
    V_at_2m: float
    V_at_0: float
    U_inf: float
    V_inf: float
    flags: tuple


def profile_limits(profiles: SchwarzschildProfiles) -> ProfileLimits:
    """Limits at ``0⁺``, ``2m`` and infinity; PV failures are flagged, not raised."""
    flags = []
    m = profiles.m
    try:
        v0 = profiles.V_at_zero()
    except QuadratureError as exc:
        v0 = float("nan") if exc.estimate is None else float(exc.estimate)
        flags.append(f"V_at_0: {exc}")
    return ProfileLimits(profiles.U_min(), profiles.U(2 * m), profiles.V(2 * m), v0,
                         1.0, 1.0, tuple(flags))


def shifted_radius(profiles: SchwarzschildProfiles, xtol: float = 1e-15):
    """Root ``r_s0 ∈ (0, 2m)`` of ``Ũ``, or ``None`` when ``Ũ_min > 0``.

    ``Ũ`` is increasing, so the root is unique; it is bracketed by moving the
    left end towards 0 until ``Ũ`` changes sign.
    """
    m = profiles.m
    umin = profiles.U_min()
    if umin > 0:
        return None
    right = 2 * m
    u_right = profiles.U(right)
    left = m
    u_left = profiles.U(left)
    tries = 0
    while u_left >= 0:
        left *= 0.5
        tries += 1
        if tries > 200:
            raise NumericalError(
                f"could not bracket the shifted radius: U_min={umin:.3g}, "
                f"U({left:.3g})={u_left:.3g}, U(2m)={u_right:.3g}")
        u_left = profiles.U(left)
    if not u_right > 0:
        raise NumericalError(
            f"U(2m)={u_right:.3g} is not positive; contradicts monotone increase to 1")
    root = brentq(profiles.U, left, right, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    resid = abs(profiles.U(root))
    if resid > 1e-10:
        raise NumericalError(f"shifted radius residual {resid:.3g} exceeds 1e-10")
    return root


def fixed_point_residual(profiles: SchwarzschildProfiles, r: float) -> float:
    """``r - 2m ⟨𝟙_[0,r]⟩ / (1 - 2m ⟨Y_r/r'⟩)``."""
    m = profiles.m
    return r - 2 * m * profiles.probe.cdf(r) / (1 - 2 * m * profiles.probe.upper_inverse(r))


def profile_table(profiles: SchwarzschildProfiles, radii) -> dict:
    """``Ũ``, ``Ṽ``, ``L`` on ``radii``; failing samples become NaN with a flag."""
    radii = np.asarray(radii, dtype=float)
    out = {k: np.full(radii.shape, np.nan) for k in ("U", "V", "L")}
    flagged = np.zeros(radii.shape, dtype=bool)
    for i, r in enumerate(radii):
        try:
            u = profiles.U(r)
            L = profiles.L(r)
        except QuadratureError:
            flagged[i] = True
            continue
        out["U"][i] = u
        out["L"][i] = L
        out["V"][i] = 2 - u + L
    out["r"] = radii
    out["flagged"] = flagged
    return out
