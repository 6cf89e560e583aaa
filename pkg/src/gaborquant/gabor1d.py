"""Gabor analysis, reconstruction and quantization on the time-frequency plane.

Coherent states are ``ψ_{b,ω}(t) = exp(iωt) ψ(t - b)`` and the phase-space
measure is ``db dω / 2π``.  A symbol ``f(b, ω)`` is mapped to the operator
``A_f = ∫ f(b,ω) |ψ_{b,ω}⟩⟨ψ_{b,ω}| db dω/2π`` acting on sampled signals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import comb

from . import numerics
from .errors import NumericalError
from .numerics import Grid1D, SampledFunction

__all__ = [
    "Probe",
    "PhaseSpacePoint",
    "PhaseSpaceFunction",
    "OperatorKernel",
    "GridResolutionWarning",
    "gaussian",
    "gaussian_moment",
    "default_grid",
    "gabor_transform",
    "gabor_reconstruct",
    "plancherel_defect",
    "quantize",
    "apply",
    "autocorrelation",
    "overlap",
    "portrait",
]

SQRT_2PI = math.sqrt(2 * math.pi)


class GridResolutionWarning(UserWarning):
    """Grids too coarse or too narrow for the requested transform."""


def gaussian(t, sigma: float = 1.0):
    """Unit-norm centred Gaussian window ``π^{-1/4} σ^{-1/2} exp(-t²/2σ²)``."""
    t = np.asarray(t, dtype=float)
    return np.exp(-t * t / (2 * sigma * sigma)) / (math.pi ** 0.25 * math.sqrt(sigma))


def gaussian_moment(k: int, variance: float) -> float:
    """Raw moment ``E[X^k]`` of a centred normal variable."""
    if k % 2:
        return 0.0
    # (k-1)!! variance^(k/2)
    return float(np.prod(np.arange(k - 1, 0, -2), initial=1.0)) * variance ** (k // 2)


class PhaseSpacePoint(NamedTuple):
    b: float
    w: float


class Probe:
    """Unit-norm window on the line.

    Build with :meth:`gaussian` for the analytic Gaussian or :meth:`sampled`
    for arbitrary samples (renormalized on construction).
    """

    def __init__(self, sigma: float | None = None, samples: SampledFunction | None = None):
        if (sigma is None) == (samples is None):
            raise ValueError("give exactly one of sigma or samples")
        self.sigma = None if sigma is None else float(sigma)
        self._samples = None
        if sigma is not None:
            if not sigma > 0:
                raise ValueError(f"sigma must be positive, got {sigma}")
            return
        norm = samples.norm()
        if not norm > 0:
            raise ValueError("sampled probe has zero norm")
        self._samples = SampledFunction(samples.grid, samples.values / norm)
        t = samples.grid.points
        vals = self._samples.values
        self._re = CubicSpline(t, vals.real, extrapolate=False)
        self._im = CubicSpline(t, np.imag(vals), extrapolate=False)

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "Probe":
        return cls(sigma=sigma)

    @classmethod
    def sampled(cls, samples: SampledFunction) -> "Probe":
        return cls(samples=samples)

    @property
    def is_gaussian(self) -> bool:
        return self.sigma is not None

    @property
    def samples(self) -> SampledFunction | None:
        return self._samples

    def __repr__(self):
        if self.is_gaussian:
            return f"Probe.gaussian(sigma={self.sigma})"
        return f"Probe.sampled(<{self._samples.grid.count} samples>)"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_gaussian:
            return gaussian(t, self.sigma).astype(complex)
        out = self._re(t) + 1j * self._im(t)
        return np.where(np.isnan(out), 0.0, out)

    @property
    def support(self) -> tuple[float, float]:
        """Interval outside which the probe is negligible."""
        if self.is_gaussian:
            return -12.0 * self.sigma, 12.0 * self.sigma
        return self._samples.grid.start, self._samples.grid.stop

    @property
    def time_scale(self) -> float:
        if self.is_gaussian:
            return self.sigma
        return math.sqrt(2 * self.var_time)

    @property
    def freq_scale(self) -> float:
        if self.is_gaussian:
            return 1.0 / self.sigma
        return math.sqrt(2 * self.var_freq)

    def fourier(self, w):
        """``ψ̂(ω) = (2π)^{-1/2} ∫ ψ(t) exp(-iωt) dt``."""
        w = np.asarray(w, dtype=float)
        if self.is_gaussian:
            s = self.sigma
            return (math.pi ** -0.25 * math.sqrt(s) * np.exp(-s * s * w * w / 2)).astype(complex)
        g = self._samples.grid
        t = g.points
        phase = np.exp(-1j * np.multiply.outer(w, t))
        return phase @ self._samples.values * g.step / SQRT_2PI

    # -- moments -------------------------------------------------------------

    def time_moment(self, k: int) -> float:
        """``∫ t^k |ψ(t)|² dt``."""
        if self.is_gaussian:
            return gaussian_moment(k, self.sigma ** 2 / 2)
        g = self._samples.grid
        return float(np.sum(g.points ** k * np.abs(self._samples.values) ** 2) * g.step)

    def freq_moment(self, k: int) -> float:
        """``∫ ω^k |ψ̂(ω)|² dω``, i.e. ``⟨ψ|Ω^k|ψ⟩``."""
        if self.is_gaussian:
            return gaussian_moment(k, 1 / (2 * self.sigma ** 2))
        if k == 0:
            return 1.0
        g = self._samples.grid
        vals = self._samples.values
        if k > 2 * 6:
            raise ValueError("frequency moments above order 12 are not supported")
        dk = numerics.derivative(vals, g.step, k)
        return float(np.real(np.sum(np.conj(vals) * (-1j) ** k * dk) * g.step))

    @cached_property
    def mean_time(self) -> float:
        return self.time_moment(1)

    @cached_property
    def mean_freq(self) -> float:
        return self.freq_moment(1)

    @cached_property
    def var_time(self) -> float:
        return self.time_moment(2) - self.time_moment(1) ** 2

    @cached_property
    def var_freq(self) -> float:
        return self.freq_moment(2) - self.freq_moment(1) ** 2

    def norm_by_quadrature(self, tol: float = 1e-12) -> float:
        lo, hi = self.support
        return numerics.integrate(lambda t: np.abs(self(t)) ** 2, lo, hi, tol).value

    def is_even(self, tol: float = 1e-10) -> bool:
        if self.is_gaussian:
            return True
        lo, hi = self.support
        t = np.linspace(max(lo, -hi), min(hi, -lo), 101)
        return bool(np.max(np.abs(self(t) - self(-t))) < tol)


# -- symbols ----------------------------------------------------------------

SYMBOL_KINDS = ("time", "frequency", "separable", "general")


def _poly_eval(coeffs: Mapping[tuple[int, int], complex], b, w):
    b = np.asarray(b, dtype=float)
    w = np.asarray(w, dtype=float)
    out = np.zeros(np.broadcast(b, w).shape, dtype=complex)
    for (j, k), c in coeffs.items():
        out = out + c * b ** j * w ** k
    return out


@dataclass(frozen=True)
class PhaseSpaceFunction:
    """Symbol ``f(b, ω)`` with optional structure used to pick a fast path.

    ``poly`` holds polynomial coefficients ``{(j, k): c}`` for ``c b^j ω^k``;
    it enables closed-form moment formulas.  ``extent`` bounds the region of
    the plane where a non-polynomial ``f`` is significant.
    """

    evaluator: Callable
    kind: str = "general"
    u: Callable | None = None
    v: Callable | None = None
    poly: Mapping[tuple[int, int], complex] | None = None
    extent: tuple[float, float] = (40.0, 40.0)
    name: str = "f"

    def __post_init__(self):
        if self.kind not in SYMBOL_KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "separable" and (self.u is None or self.v is None):
            raise ValueError("separable symbols need both u and v")

    def __call__(self, b, w):
        return self.evaluator(np.asarray(b, dtype=float), np.asarray(w, dtype=float))

    @classmethod
    def polynomial(cls, coeffs: Mapping[tuple[int, int], complex], name: str = "poly",
                   kind: str | None = None) -> "PhaseSpaceFunction":
        coeffs = {tuple(map(int, key)): c for key, c in coeffs.items() if c != 0}
        if kind is None:
            if all(k == 0 for _, k in coeffs):
                kind = "time"
            elif all(j == 0 for j, _ in coeffs):
                kind = "frequency"
            elif len(coeffs) == 1:
                kind = "separable"
            else:
                kind = "general"
        u = v = None
        if kind == "time":
            u = lambda b, cf=coeffs: _poly_eval(cf, b, 0.0)
        elif kind == "frequency":
            v = lambda w, cf=coeffs: _poly_eval(cf, 0.0, w)
        elif kind == "separable":
            ((j, k), c), = coeffs.items()
            u = lambda b, j=j, c=c: c * np.asarray(b, dtype=float) ** j
            v = lambda w, k=k: np.asarray(w, dtype=float) ** k
        return cls(lambda b, w, cf=coeffs: _poly_eval(cf, b, w), kind, u, v, coeffs, name=name)

    @classmethod
    def monomial(cls, j: int, k: int, coeff: complex = 1.0) -> "PhaseSpaceFunction":
        name = "".join(
            part for part in (
                "" if j == 0 else ("b" if j == 1 else f"b^{j}"),
                "" if k == 0 else ("w" if k == 1 else f"w^{k}"),
            )) or "1"
        return cls.polynomial({(j, k): coeff}, name=name)

    @classmethod
    def constant(cls, c: complex = 1.0) -> "PhaseSpaceFunction":
        return cls.polynomial({(0, 0): c}, name=str(c), kind="time")

    @classmethod
    def time_only(cls, u: Callable, name: str = "u", extent: float = 40.0) -> "PhaseSpaceFunction":
        return cls(lambda b, w: u(b) + 0 * w, "time", u=u, extent=(extent, 0.0), name=name)

    @classmethod
    def frequency_only(cls, v: Callable, name: str = "v", extent: float = 40.0) -> "PhaseSpaceFunction":
        return cls(lambda b, w: v(w) + 0 * b, "frequency", v=v, extent=(0.0, extent), name=name)

    @classmethod
    def separable(cls, u: Callable, v: Callable, name: str = "uv",
                  extent: tuple[float, float] = (40.0, 40.0)) -> "PhaseSpaceFunction":
        return cls(lambda b, w: u(b) * v(w), "separable", u=u, v=v, extent=extent, name=name)

    @classmethod
    def general(cls, f: Callable, name: str = "f",
                extent: tuple[float, float] = (40.0, 40.0)) -> "PhaseSpaceFunction":
        return cls(f, "general", extent=extent, name=name)

    def shifted(self, b0: float, w0: float) -> "PhaseSpaceFunction":
        """The translate ``(b, ω) ↦ f(b - b0, ω - w0)`` as a general symbol."""
        f = self.evaluator
        return PhaseSpaceFunction.general(lambda b, w: f(b - b0, w - w0),
                                          name=f"{self.name}@({b0},{w0})",
                                          extent=self.extent)

    def check_declared(self, rng_points: int = 16, tol: float = 1e-9) -> bool:
        """Spot-check that the evaluator agrees with the declared structure."""
        b = np.linspace(-2.3, 3.1, rng_points)
        w = np.linspace(-1.7, 2.9, rng_points)[::-1]
        vals = self(b, w)
        if self.kind == "time":
            ref = self.u(b) if self.u is not None else self(b, 0 * w)
            return bool(np.allclose(vals, ref, atol=tol) and np.allclose(vals, self(b, w + 1.3), atol=tol))
        if self.kind == "frequency":
            return bool(np.allclose(vals, self(b + 1.3, w), atol=tol))
        if self.kind == "separable":
            return bool(np.allclose(vals, self.u(b) * self.v(w), atol=tol))
        return True


def _shifted_poly_moments(coeffs: Mapping[int, complex], x, moment: Callable[[int], float]):
    """``E[p(x - Y)]`` for a polynomial ``p`` given the raw moments of ``Y``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    for j, c in coeffs.items():
        for k in range(j + 1):
            mk = moment(k)
            if mk:
                out = out + c * comb(j, k, exact=True) * x ** (j - k) * (-1) ** k * mk
    return out


# -- operator kernels --------------------------------------------------------

KERNEL_KINDS = ("multiplier", "convolver", "dense")


@dataclass(frozen=True)
class OperatorKernel:
    """Integral kernel ``𝒜_f(t, t')`` in one of three representations.

    multiplier
        ``(A s)(t) = m(t) s(t)``.
    convolver
        ``(A s)(t) = ∫ c(t - t') s(t') dt'``; for polynomial symbols the
        kernel is a distribution and the operator is kept as the polynomial
        ``spectral_poly`` in ``Ω = -i d/dt``.
    dense
        Matrix ``K`` on ``grid`` with ``(A s)_i = Σ_j K_ij s_j step``.
    """

    kind: str
    multiplier: Callable | None = None
    convolver: Callable | None = None
    spectral_poly: Mapping[int, complex] | None = None
    matrix: np.ndarray | None = None
    grid: Grid1D | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "dense" and (self.matrix is None or self.grid is None):
            raise ValueError("dense kernels need a matrix and a grid")

    def spectral(self, w):
        """Fourier multiplier of a convolver with polynomial symbol."""
        w = np.asarray(w, dtype=float)
        return sum(c * w ** k for k, c in self.spectral_poly.items()) + 0j * w

    def to_dense(self, grid: Grid1D) -> np.ndarray:
        """Matrix of this kernel on ``grid`` (same weighting as ``dense``)."""
        t = grid.points
        if self.kind == "multiplier":
            return np.diag(self.multiplier(t).astype(complex)) / grid.step
        if self.kind == "dense":
            if grid != self.grid:
                raise ValueError("dense kernel lives on a different grid")
            return self.matrix
        diff = t[:, None] - t[None, :]
        if self.convolver is not None:
            return np.asarray(self.convolver(diff), dtype=complex)
        band = _band_sum(lambda w: self.spectral(w)[None, :], grid)[0]
        n = grid.count
        idx = np.subtract.outer(np.arange(n), np.arange(n)) % (2 * n)
        return band[idx]

    def apply(self, s: SampledFunction) -> SampledFunction:
        return apply(self, s)


def _band_nodes(grid: Grid1D):
    """Symmetric frequency nodes covering the Nyquist band of ``grid``.

    ``2N`` intervals so that the discrete kernel has period ``2N`` steps,
    twice the grid length; the end nodes carry half weight.
    """
    n = grid.count
    h = grid.step
    m = np.arange(-n, n + 1)
    w = math.pi * m / (n * h)
    weights = np.ones(len(m))
    weights[0] = weights[-1] = 0.5
    dw = math.pi / (n * h)
    return w, weights * dw


def _band_sum(values_at: Callable, grid: Grid1D) -> np.ndarray:
    """``(2π)^{-1} ∫_band F(ω) exp(iωkh) dω`` for ``k = 0..2N-1`` (mod 2N).

    ``values_at(w)`` returns an array of shape ``(rows, len(w))``.
    """
    n = grid.count
    w, weights = _band_nodes(grid)
    vals = np.asarray(values_at(w)) * weights[None, :] / (2 * math.pi)
    # fold m = -n..n onto the 2n-periodic DFT index
    folded = np.zeros((vals.shape[0], 2 * n), dtype=complex)
    m = np.arange(-n, n + 1) % (2 * n)
    np.add.at(folded, (slice(None), m), vals)
    # sum_m F_m exp(i pi m k / n) = 2n * ifft(F)[k]
    return np.fft.ifft(folded, axis=1) * (2 * n)


def default_grid(psi: Probe, count: int = 1024) -> Grid1D:
    scale = psi.time_scale
    return Grid1D.from_range(-8 * scale, 8 * scale, count)


def _b_nodes(psi: Probe, grid: Grid1D):
    lo, hi = psi.support
    reach = max(abs(lo), abs(hi))
    hb = min(grid.step, psi.time_scale / 4)
    start = grid.start - reach
    stop = grid.stop + reach
    count = int(math.ceil((stop - start) / hb)) + 1
    b = np.linspace(start, stop, count)
    return b, np.full(count, b[1] - b[0])


def _dense_kernel(f: PhaseSpaceFunction, psi: Probe, grid: Grid1D) -> np.ndarray:
    n = grid.count
    t = grid.points
    b, wb = _b_nodes(psi, grid)
    psi_tb = psi(t[None, :] - b[:, None])  # (nb, n)
    idx = np.subtract.outer(np.arange(n), np.arange(n)) % (2 * n)
    if f.kind in ("time", "separable"):
        if f.kind == "time":
            vhat = np.zeros(2 * n, dtype=complex)
            vhat[0] = 1.0 / grid.step
        else:
            vhat = _band_sum(lambda w: np.atleast_2d(f.v(w)), grid)[0]
        ub = np.asarray(f.u(b), dtype=complex) * wb
        gram = (psi_tb * ub[:, None]).T @ np.conj(psi_tb)
        return vhat[idx] * gram
    if f.kind == "frequency":
        vhat = _band_sum(lambda w: np.atleast_2d(f.v(w)), grid)[0]
        gram = (psi_tb * wb[:, None]).T @ np.conj(psi_tb)
        return vhat[idx] * gram
    out = np.zeros((n, n), dtype=complex)
    chunk = 64
    for start in range(0, len(b), chunk):
        bs = b[start:start + chunk]
        fb = _band_sum(lambda w: f(bs[:, None], w[None, :]), grid)
        for r in range(len(bs)):
            p = psi_tb[start + r]
            out += wb[start + r] * np.outer(p, np.conj(p)) * fb[r][idx]
    return out


def _frequency_convolver(f: PhaseSpaceFunction, psi: Probe) -> Callable:
    """``c(y) = (2π)^{-1/2} R_ψψ(y) v̂(-y)`` for a square-integrable ``v``."""
    R = autocorrelation(psi)
    wmax = f.extent[1]
    nodes, weights = numerics.gl_nodes(-wmax, wmax, 64)
    vw = np.asarray(f.v(nodes), dtype=complex) * weights

    def c(y):
        y = np.asarray(y, dtype=float)
        vhat_minus_y = (np.exp(1j * np.multiply.outer(y, nodes)) @ vw) / SQRT_2PI
        return R(y) * vhat_minus_y / SQRT_2PI

    return c


def _time_multiplier_quadrature(u: Callable, psi: Probe) -> Callable:
    lo, hi = psi.support
    nodes, weights = numerics.gl_nodes(lo, hi, 32)
    dens = np.abs(psi(nodes)) ** 2 * weights

    def m(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(u(np.subtract.outer(t, nodes)), dtype=complex) @ dens

    return m


def quantize(f: PhaseSpaceFunction, psi: Probe, grid: Grid1D | None = None,
             method: str = "auto") -> OperatorKernel:
    """Gabor quantization of the symbol ``f`` with window ``psi``.

    Time-only symbols give the multiplier ``u * |ψ|²``; frequency-only
    symbols give a convolution operator; separable and general symbols give
    a dense kernel on ``grid`` (default: ``±8`` time scales, 1024 points).

    ``method="quadrature"`` skips the closed-form polynomial formulas.
    """
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    closed = method == "auto" and f.poly is not None
    if f.kind == "time":
        if closed:
            tcoef = {j: c for (j, _), c in f.poly.items()}
            return OperatorKernel("multiplier",
                                  multiplier=lambda t: _shifted_poly_moments(tcoef, t, psi.time_moment),
                                  label=f"A[{f.name}]")
        u = f.u if f.u is not None else (lambda b: f(b, 0.0 * b))
        return OperatorKernel("multiplier", multiplier=_time_multiplier_quadrature(u, psi),
                              label=f"A[{f.name}]")
    if f.kind == "frequency":
        if f.poly is not None:
            wcoef = {k: c for (_, k), c in f.poly.items()}
            degree = max(wcoef)
            spectral = {}
            for k in range(degree + 1):
                # E[v(ω - Z)] expanded in powers of ω, Z ~ |ψ̂|²
                total = 0j
                for j, c in wcoef.items():
                    if j >= k:
                        total += c * comb(j, k, exact=True) * (-1) ** (j - k) * psi.freq_moment(j - k)
                if total:
                    spectral[k] = total
            return OperatorKernel("convolver", spectral_poly=spectral, label=f"A[{f.name}]")
        return OperatorKernel("convolver", convolver=_frequency_convolver(f, psi),
                              label=f"A[{f.name}]")
    if grid is None:
        grid = default_grid(psi)
    matrix = _dense_kernel(f, psi, grid)
    if not np.all(np.isfinite(matrix)):
        raise NumericalError(f"partial Fourier transform of {f.name} diverged on the grid")
    return OperatorKernel("dense", matrix=matrix, grid=grid, label=f"A[{f.name}]")


def apply(k: OperatorKernel, s: SampledFunction) -> SampledFunction:
    """Action of a quantized operator on a sampled signal."""
    t = s.grid.points
    if k.kind == "multiplier":
        return SampledFunction(s.grid, k.multiplier(t) * s.values)
    if k.kind == "dense":
        if k.grid != s.grid:
            raise ValueError("signal grid does not match the kernel grid")
        return SampledFunction(s.grid, k.matrix @ s.values * s.grid.step)
    if k.spectral_poly is not None:
        out = np.zeros(s.grid.count, dtype=complex)
        for order, c in k.spectral_poly.items():
            if order == 0:
                out = out + c * s.values
            else:
                out = out + c * (-1j) ** order * numerics.derivative(s.values, s.grid.step, order)
        return SampledFunction(s.grid, out)
    n = s.grid.count
    offsets = Grid1D(-(n - 1) * s.grid.step, s.grid.step, 2 * n - 1)
    cs = SampledFunction.from_callable(k.convolver, offsets)
    full = numerics.convolve(cs, s)
    return SampledFunction(s.grid, full.values[n - 1:2 * n - 1])


# -- analysis and synthesis --------------------------------------------------


def plancherel_defect(S: np.ndarray, bgrid: Grid1D, wgrid: Grid1D, s: SampledFunction) -> float:
    """Relative mismatch between ``‖S‖²/2π`` and ``‖s‖²``."""
    energy_s = s.norm() ** 2
    energy_S = float(np.sum(np.abs(S) ** 2) * bgrid.step * wgrid.step / (2 * math.pi))
    return abs(energy_S - energy_s) / energy_s


def gabor_transform(s: SampledFunction, psi: Probe, bgrid: Grid1D, wgrid: Grid1D) -> np.ndarray:
    """``S(b, ω) = ⟨ψ_{b,ω}|s⟩`` on the product grid, shape ``(len(b), len(ω))``.

    Emits :class:`GridResolutionWarning` when the discrete Plancherel defect
    exceeds 5%.
    """
    t = s.grid.points
    b = bgrid.points
    w = wgrid.points
    windowed = np.conj(psi(t[None, :] - b[:, None])) * s.values[None, :]
    S = windowed @ np.exp(-1j * np.multiply.outer(t, w)) * s.grid.step
    defect = plancherel_defect(S, bgrid, wgrid, s)
    if defect > 0.05:
        warnings.warn(f"Plancherel defect {defect:.2%}: grids too coarse or narrow",
                      GridResolutionWarning, stacklevel=2)
    return S


def gabor_reconstruct(S: np.ndarray, psi: Probe, bgrid: Grid1D, wgrid: Grid1D,
                      tgrid: Grid1D) -> SampledFunction:
    """``s(t) = (2π)^{-1} ∬ S(b,ω) ψ_{b,ω}(t) db dω`` on ``tgrid``."""
    S = np.asarray(S)
    if S.shape != (bgrid.count, wgrid.count):
        raise ValueError(f"S has shape {S.shape}, grids need {(bgrid.count, wgrid.count)}")
    t = tgrid.points
    b = bgrid.points
    w = wgrid.points
    per_b = S @ np.exp(1j * np.multiply.outer(w, t))  # (nb, nt)
    vals = np.sum(per_b * psi(t[None, :] - b[:, None]), axis=0)
    return SampledFunction(tgrid, vals * bgrid.step * wgrid.step / (2 * math.pi))


# -- autocorrelation, overlaps, portraits -----------------------------------


def autocorrelation(psi: Probe) -> Callable:
    """``R_ψψ(t) = ∫ ψ(t') conj(ψ(t' - t)) dt'`` as a callable."""
    if psi.is_gaussian:
        s2 = psi.sigma ** 2
        return lambda t: np.exp(-np.asarray(t, dtype=float) ** 2 / (4 * s2)) + 0j
    samples = psi.samples
    g = samples.grid
    flipped = SampledFunction(Grid1D(-g.stop, g.step, g.count), np.conj(samples.values[::-1]))
    corr = numerics.convolve(samples, flipped)
    x = corr.grid.points
    re = CubicSpline(x, corr.values.real, extrapolate=False)
    im = CubicSpline(x, np.imag(corr.values), extrapolate=False)

    def R(t):
        t = np.asarray(t, dtype=float)
        out = re(t) + 1j * im(t)
        return np.where(np.isnan(out), 0.0, out)

    return R


def overlap(psi: Probe, p: PhaseSpacePoint, q: PhaseSpacePoint, method: str = "auto",
            tol: float = 1e-12) -> complex:
    """Inner product ``⟨ψ_p|ψ_q⟩`` (antilinear in the first slot)."""
    b, w = p
    bq, wq = q
    if method == "auto" and psi.is_gaussian:
        s = psi.sigma
        phase = np.exp(1j * (wq - w) * (b + bq) / 2)
        return complex(phase * np.exp(-(b - bq) ** 2 / (4 * s * s))
                       * np.exp(-s * s * (w - wq) ** 2 / 4))
    lo, hi = psi.support

    def integrand(t):
        return np.exp(1j * (wq - w) * t) * np.conj(psi(t - b)) * psi(t - bq)

    a0 = max(lo + b, lo + bq)
    a1 = min(hi + b, hi + bq)
    if not a0 < a1:
        return 0j
    return complex(numerics.integrate(integrand, a0, a1, tol).value)


def _overlap_sq_density(psi: Probe, b: float, w: float):
    """``(b', ω') ↦ |⟨ψ_{b,ω}|ψ_{b',ω'}⟩|² / 2π`` on a column of ``b'`` and a row of ``ω'``."""
    if psi.is_gaussian:
        s2 = psi.sigma ** 2

        def dens(bp, wp):
            return (np.exp(-(bp - b) ** 2 / (2 * s2)) * np.exp(-s2 * (wp - w) ** 2 / 2)
                    / (2 * math.pi))
        return dens
    samples = psi.samples
    g = samples.grid
    t = g.points
    vals = samples.values

    def dens(bp, wp):
        # tensor grid: bp is a column, wp a row
        bcol = np.asarray(bp, dtype=float).reshape(-1)
        wrow = np.asarray(wp, dtype=float).reshape(-1)
        windows = np.conj(vals)[None, :] * psi(t[None, :] - (bcol - b)[:, None])
        ov = windows @ np.exp(1j * np.multiply.outer(t, wrow - w)) * g.step
        return np.abs(ov) ** 2 / (2 * math.pi)
    return dens


def _difference_moment(psi: Probe, k: int, which: str) -> float:
    """Raw moment of ``Y1 - Y2`` for iid ``Y`` with density ``|ψ|²`` or ``|ψ̂|²``."""
    mom = psi.time_moment if which == "time" else psi.freq_moment
    return sum(comb(k, i, exact=True) * mom(i) * (-1) ** (k - i) * mom(k - i)
               for i in range(k + 1))


def portrait(f: PhaseSpaceFunction, psi: Probe, p: PhaseSpacePoint, method: str = "auto",
             tol: float = 1e-10) -> complex:
    """Semi-classical portrait ``f̌(b,ω) = ⟨ψ_{b,ω}|A_f|ψ_{b,ω}⟩``.

    Polynomial symbols use moment formulas (any polynomial for Gaussian
    windows; time-only or frequency-only polynomials for other windows).
    Everything else is integrated against ``|overlap|²/2π``.
    """
    b, w = p
    if method == "auto" and f.poly is not None:
        if psi.is_gaussian:
            vb = psi.sigma ** 2
            vw = 1 / psi.sigma ** 2
            total = 0j
            for (j, k), c in f.poly.items():
                eb = sum(comb(j, i, exact=True) * b ** (j - i) * gaussian_moment(i, vb)
                         for i in range(j + 1))
                ew = sum(comb(k, i, exact=True) * w ** (k - i) * gaussian_moment(i, vw)
                         for i in range(k + 1))
                total += c * eb * ew
            return complex(total)
        if f.kind == "time":
            tcoef = {j: c for (j, _), c in f.poly.items()}
            return complex(_shifted_poly_moments(tcoef, b, lambda k: _difference_moment(psi, k, "time")))
        if f.kind == "frequency":
            wcoef = {k: c for (_, k), c in f.poly.items()}
            return complex(_shifted_poly_moments(wcoef, w, lambda k: _difference_moment(psi, k, "freq")))
    dens = _overlap_sq_density(psi, b, w)
    rb = 12 * psi.time_scale
    rw = 12 * psi.freq_scale
    res = numerics.integrate_2d(lambda bp, wp: f(bp, wp) * dens(bp, wp),
                                (b - rb, b + rb), (w - rw, w + rw), tol)
    if not np.isfinite(res.value):
        raise NumericalError(f"portrait of {f.name} diverged at {p}")
    return complex(res.value)
