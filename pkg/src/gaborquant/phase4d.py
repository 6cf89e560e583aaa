"""Quantization of space-time scalar fields with a 4-D probe.

A real field ``u(x)`` on space-time becomes the multiplication operator by
``u * |ψ|²``; its semi-classical portrait is ``u * R``, where ``R`` is the
autocorrelation of ``|ψ|²``.  Polynomial fields are handled by moment
shifts; anything else by tensorized Gauss-Legendre quadrature.

Coordinates are ``x = (x⁰, x¹, x², x³)`` with ``x⁰`` the time coordinate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import comb

from . import numerics
from .errors import NumericalError
from .gabor1d import gaussian_moment

__all__ = ["Probe4", "Field4", "quantize_field", "portrait_field"]

Index4 = tuple[int, int, int, int]


def _double_factorial_odd(k: int) -> float:
    """``(k-1)!!`` for even ``k`` (the sphere-average numerator)."""
    return float(np.prod(np.arange(k - 1, 0, -2), initial=1.0))


def sphere_average(a: int, b: int, c: int) -> float:
    """Average of ``n₁^a n₂^b n₃^c`` over the unit sphere."""
    if a % 2 or b % 2 or c % 2:
        return 0.0
    num = _double_factorial_odd(a) * _double_factorial_odd(b) * _double_factorial_odd(c)
    return num / float(np.prod(np.arange(a + b + c + 1, 0, -2), initial=1.0))


class Probe4:
    """Unit-norm probe on space-time.

    ``separable_gaussian`` is the product of four 1-D Gaussians with widths
    ``sigma``.  ``isotropic`` holds a density ``p(t, r) = |ψ|²`` depending
    on time and spatial radius only.
    """

    def __init__(self, sigma=None, density: Callable | None = None,
                 t_max: float | None = None, r_max: float | None = None, knots=None):
        self.sigma = None
        self._density = None
        self._knots = knots
        if sigma is not None:
            sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (4,)).copy()
            if not np.all(sigma > 0):
                raise ValueError(f"probe widths must be positive, got {sigma}")
            sigma.setflags(write=False)
            self.sigma = sigma
            return
        if density is None or t_max is None or r_max is None:
            raise ValueError("isotropic probes need density, t_max and r_max")
        self.t_max = float(t_max)
        self.r_max = float(r_max)
        self._density = density
        norm = self._tr_integral(lambda t, r: 4 * math.pi * r * r * density(t, r))
        if not (math.isfinite(norm) and norm > 0):
            raise ValueError("isotropic density is not normalizable")
        self._norm = norm
        self._moment_cache: dict = {}

    def _tr_integral(self, f: Callable) -> float:
        """``∫∫ f(t, r) dt dr`` over the probe's ``(t, r)`` box.

        Sampled probes use one Gauss-Legendre panel per spline cell, which is
        exact for the piecewise-cubic density times low-order monomials.
        """
        if self._knots is not None:
            t, wt = numerics.gl_nodes_on_breaks(self._knots[0])
            r, wr = numerics.gl_nodes_on_breaks(self._knots[1])
            return float(wt @ f(t[:, None], r[None, :]) @ wr)
        return numerics.integrate_2d(f, (-self.t_max, self.t_max), (0.0, self.r_max),
                                     1e-12).value

    @classmethod
    def separable_gaussian(cls, sigma) -> "Probe4":
        return cls(sigma=sigma)

    @classmethod
    def isotropic(cls, density: Callable, t_max: float, r_max: float) -> "Probe4":
        """Probe with ``|ψ(x)|² ∝ density(x⁰, |x⃗|)``, renormalized."""
        return cls(density=density, t_max=t_max, r_max=r_max)

    @classmethod
    def sampled_isotropic(cls, t, r, values) -> "Probe4":
        """Isotropic probe from samples of ``|ψ|²`` on a ``(t, r)`` grid."""
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        spline = RectBivariateSpline(t, r, np.asarray(values, dtype=float), kx=3, ky=3)
        t_lim = max(abs(t[0]), abs(t[-1]))

        def density(tt, rr):
            tt, rr = np.broadcast_arrays(tt, rr)
            out = spline.ev(tt, rr)
            inside = (tt >= t[0]) & (tt <= t[-1]) & (rr >= r[0]) & (rr <= r[-1])
            return np.where(inside, np.maximum(out, 0.0), 0.0)

        knots = (np.union1d(t, [-t_lim, t_lim]), r)
        return cls(density=density, t_max=t_lim, r_max=float(r[-1]), knots=knots)

    @property
    def is_gaussian(self) -> bool:
        return self.sigma is not None

    def __repr__(self):
        if self.is_gaussian:
            return f"Probe4.separable_gaussian({self.sigma.tolist()})"
        return f"Probe4.isotropic(t_max={self.t_max}, r_max={self.r_max})"

    def density(self, x) -> np.ndarray:
        """``|ψ(x)|²`` at points ``x`` of shape ``(..., 4)``."""
        x = np.asarray(x, dtype=float)
        if self.is_gaussian:
            var = self.sigma ** 2 / 2
            return np.prod(np.exp(-x * x / (2 * var)) / np.sqrt(2 * math.pi * var), axis=-1)
        r = np.sqrt(np.sum(x[..., 1:] ** 2, axis=-1))
        return self._density(x[..., 0], r) / self._norm

    def norm_by_quadrature(self) -> float:
        if self.is_gaussian:
            return float(np.prod([numerics.integrate(
                lambda t, s=s: np.exp(-t * t / s ** 2) / (math.sqrt(math.pi) * s),
                -math.inf, math.inf, 1e-12).value for s in self.sigma]))
        return self._tr_integral(lambda t, r: 4 * math.pi * r * r * self._density(t, r)) / self._norm

    def moment(self, a: Index4) -> float:
        """``E[∏ X_μ^{a_μ}]`` for ``X`` distributed as ``|ψ|²``."""
        a = tuple(int(k) for k in a)
        if self.is_gaussian:
            return float(np.prod([gaussian_moment(k, s * s / 2) for k, s in zip(a, self.sigma)]))
        ang = sphere_average(*a[1:])
        if ang == 0.0:
            return 0.0
        key = (a[0], sum(a[1:]))
        if key not in self._moment_cache:
            k0, ks = key
            self._moment_cache[key] = self._tr_integral(
                lambda t, r: t ** k0 * r ** ks * 4 * math.pi * r * r * self._density(t, r)
            ) / self._norm
        return self._moment_cache[key] * ang

    def difference_moment(self, a: Index4) -> float:
        """Moment of ``X - X'`` for independent ``X, X'`` distributed as ``|ψ|²``."""
        total = 0.0
        for b in itertools.product(*(range(k + 1) for k in a)):
            rest = tuple(k - j for k, j in zip(a, b))
            coef = np.prod([comb(k, j, exact=True) for k, j in zip(a, b)]) * (-1) ** sum(rest)
            mb = self.moment(b)
            if mb:
                total += coef * mb * self.moment(rest)
        return float(total)

    def nodes(self, panels: int = 2):
        """Tensor quadrature nodes and weights for expectations under ``|ψ|²``.

        Returns ``(points (n, 4), weights (n,))``.
        """
        if self.is_gaussian:
            axes = []
            for s in self.sigma:
                # |G_s|² has standard deviation s/√2; cover 8.5 of them
                reach = 6.0 * s
                t, w = numerics.gl_nodes(-reach, reach, panels)
                var = s * s / 2
                axes.append((t, w * np.exp(-t * t / (2 * var)) / math.sqrt(2 * math.pi * var)))
            grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
            weights = np.einsum("i,j,k,l->ijkl", *[a[1] for a in axes])
            pts = np.stack([g.ravel() for g in grids], axis=-1)
            return pts, weights.ravel()
        t, wt = numerics.gl_nodes(-self.t_max, self.t_max, panels)
        r, wr = numerics.gl_nodes(0.0, self.r_max, panels)
        c, wc = numerics.gl_nodes(-1.0, 1.0, 1)
        nphi = 24
        phi = 2 * math.pi * np.arange(nphi) / nphi
        wphi = np.full(nphi, 2 * math.pi / nphi)
        T, R, C, P = np.meshgrid(t, r, c, phi, indexing="ij")
        S = np.sqrt(1 - C * C)
        pts = np.stack([T, R * S * np.cos(P), R * S * np.sin(P), R * C], axis=-1).reshape(-1, 4)
        W = np.einsum("i,j,k,l->ijkl", wt, wr * r * r, wc, wphi)
        dens = self._density(T, R) / self._norm
        return pts, (W * dens).ravel()


def _poly_eval4(coeffs: Mapping[Index4, float], x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    for a, c in coeffs.items():
        term = np.full(x.shape[:-1], float(c))
        for mu, k in enumerate(a):
            if k:
                term = term * x[..., mu] ** k
        out = out + term
    return out


@dataclass(frozen=True)
class Field4:
    """Real scalar field on space-time.

    ``poly`` maps exponent tuples ``(a0, a1, a2, a3)`` to coefficients.
    ``tag`` is one of ``polynomial``, ``polynomial-radial``,
    ``polynomial-cylindrical`` or ``general``.
    """

    evaluator: Callable
    tag: str = "general"
    poly: Mapping[Index4, float] | None = None
    name: str = "u"

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))

    @classmethod
    def polynomial(cls, coeffs: Mapping[Index4, float], name: str = "poly",
                   tag: str = "polynomial") -> "Field4":
        coeffs = {tuple(int(k) for k in a): float(c) for a, c in coeffs.items() if c != 0}
        for a in coeffs:
            if len(a) != 4 or min(a) < 0:
                raise ValueError(f"bad exponent tuple {a}")
        return cls(lambda x, cf=coeffs: _poly_eval4(cf, x), tag, coeffs, name)

    @classmethod
    def constant(cls, c: float = 1.0) -> "Field4":
        return cls.polynomial({(0, 0, 0, 0): c}, name=f"{c}")

    @classmethod
    def coordinate(cls, mu: int, power: int = 1, coeff: float = 1.0) -> "Field4":
        a = [0, 0, 0, 0]
        a[mu] = power
        return cls.polynomial({tuple(a): coeff}, name=f"x{mu}^{power}")

    @classmethod
    def cylindrical_radius_squared(cls) -> "Field4":
        """``ρ² = (x¹)² + (x²)²``."""
        return cls.polynomial({(0, 2, 0, 0): 1.0, (0, 0, 2, 0): 1.0}, "rho^2",
                              "polynomial-cylindrical")

    @classmethod
    def radius_squared(cls) -> "Field4":
        """``r² = (x¹)² + (x²)² + (x³)²``."""
        return cls.polynomial({(0, 2, 0, 0): 1.0, (0, 0, 2, 0): 1.0, (0, 0, 0, 2): 1.0},
                              "r^2", "polynomial-radial")

    @classmethod
    def general(cls, f: Callable, name: str = "u") -> "Field4":
        return cls(f, "general", None, name)


def _shift_polynomial(coeffs: Mapping[Index4, float], moment: Callable[[Index4], float]):
    """Coefficients of ``x ↦ E[u(x - Y)]`` given the moments of ``Y``."""
    out: dict[Index4, float] = {}
    for a, c in coeffs.items():
        for b in itertools.product(*(range(k + 1) for k in a)):
            mb = moment(b)
            if not mb:
                continue
            coef = c * mb * (-1) ** sum(b) * np.prod([comb(k, j, exact=True) for k, j in zip(a, b)])
            key = tuple(k - j for k, j in zip(a, b))
            out[key] = out.get(key, 0.0) + float(coef)
    return {k: v for k, v in out.items() if v != 0}


def _quadrature_field(u: Field4, pts: np.ndarray, weights: np.ndarray, name: str) -> Field4:
    def ev(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 4)
        out = np.empty(len(flat))
        for i, xi in enumerate(flat):
            out[i] = np.dot(u(xi[None, :] - pts), weights)
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"convolution of {u.name} diverged")
        return out.reshape(x.shape[:-1])

    return Field4.general(ev, name)


def quantize_field(u: Field4, psi: Probe4, method: str = "auto", panels: int = 2) -> Field4:
    """Multiplier symbol ``(u * |ψ|²)(x)`` of the quantized field.

    Polynomial fields are shifted in closed form (each squared coordinate
    gains half the probe variance ``σ_μ²/2`` for a separable Gaussian).
    """
    if method == "auto" and u.poly is not None:
        return Field4.polynomial(_shift_polynomial(u.poly, psi.moment), f"A[{u.name}]", u.tag)
    pts, weights = psi.nodes(panels)
    return _quadrature_field(u, pts, weights, f"A[{u.name}]")


def portrait_field(u: Field4, psi: Probe4, method: str = "auto", panels: int = 2) -> Field4:
    """Semi-classical portrait ``(u * R)(x)``, ``R`` the autocorrelation of ``|ψ|²``.

    For a separable Gaussian each squared coordinate gains ``σ_μ²``.
    """
    if method == "auto" and u.poly is not None:
        return Field4.polynomial(_shift_polynomial(u.poly, psi.difference_moment),
                                 f"portrait[{u.name}]", u.tag)
    if not psi.is_gaussian:
        raise NotImplementedError("non-polynomial portraits need a separable Gaussian probe")
    # X - X' of two independent Gaussians is Gaussian with widths √2 σ
    pts, weights = Probe4.separable_gaussian(math.sqrt(2) * psi.sigma).nodes(panels)
    return _quadrature_field(u, pts, weights, f"portrait[{u.name}]")
