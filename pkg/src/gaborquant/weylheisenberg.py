"""Covariant Weyl-Heisenberg quantization with a general apodization.

Displacement operators in the harmonic-oscillator (Fock) basis, apodization
functions Π, the symplectic Fourier transform, Wigner functions and the
density operators ``𝔔₀`` obtained from Π.  Units are ``ω₀ = t₀ = 1`` and
``z = (b + iω)/√2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from . import numerics
from .errors import NumericalError
from .gabor1d import (OperatorKernel, PhaseSpaceFunction, PhaseSpacePoint, Probe,
                      _band_sum, default_grid)
from .numerics import Grid1D

__all__ = [
    "Apodization",
    "DensityOperator",
    "FockTruncation",
    "displacement_matrix",
    "symplectic_fourier",
    "symplectic_fourier_sampled",
    "apodization_from_probe",
    "wigner_of_probe",
    "boltzmann_planck",
    "laguerre_transform",
    "q0_from_apodization",
    "q0_from_laplace_weight",
    "quantize_general",
    "hermite_functions",
    "fock_coefficients",
    "temperature_from_laplace",
    "laplace_from_temperature",
]

SQRT_2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class FockTruncation:
    """Basis ``|0⟩ … |N-1⟩`` of the harmonic oscillator."""

    N: int = 64

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"Fock truncation needs N >= 2, got {self.N}")


def _trunc(trunc) -> FockTruncation:
    return trunc if isinstance(trunc, FockTruncation) else FockTruncation(int(trunc))


# -- density operators -------------------------------------------------------


class DensityOperator:
    """Truncated Fock-basis matrix meant to represent a density operator.

    Construction does not enforce positivity; use :meth:`is_density` or
    :meth:`positivity` to inspect it.
    """

    def __init__(self, matrix):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density operator must be a square matrix")
        m.setflags(write=False)
        self.matrix = m

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return np.linalg.eigvalsh(h)

    def positivity(self, tol: float = 1e-8) -> dict:
        """Smallest eigenvalue and whether it clears ``-tol``."""
        lam = self.eigenvalues()
        return {"min_eigenvalue": float(lam[0]), "positive": bool(lam[0] >= -tol)}

    def is_density(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10,
                   eig_tol: float = 1e-10) -> bool:
        return (self.hermiticity_defect() <= herm_tol
                and abs(self.trace - 1) <= trace_tol
                and self.eigenvalues()[0] >= -eig_tol)

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    def __repr__(self):
        return f"DensityOperator(N={self.N}, trace={self.trace.real:.12g})"


# -- displacement operator ---------------------------------------------------


def displacement_matrix(b: float, w: float, trunc=FockTruncation()) -> np.ndarray:
    """Matrix elements ``⟨m|D(b,ω)|n⟩`` of ``D = exp(z a† - z̄ a)``.

    Factorial ratios go through log-gamma so the entries stay finite up to
    ``N`` of a few hundred.
    """
    N = _trunc(trunc).N
    z = (b + 1j * w) / math.sqrt(2)
    u = abs(z) ** 2
    D = np.zeros((N, N), dtype=complex)
    if u == 0:
        return np.eye(N, dtype=complex)
    logu = math.log(u)
    lg = gammaln(np.arange(N) + 1)
    phase = z / abs(z)
    for k in range(N):
        # L_n^{(k)}(u) for n = 0..N-1-k
        L = numerics.laguerre_all(N - 1 - k, k, np.array([u]))[:, 0]
        n = np.arange(N - k)
        m = n + k
        logamp = 0.5 * (lg[n] - lg[m]) - u / 2 + 0.5 * k * logu
        amp = np.exp(logamp) * L
        D[m, n] = amp * phase ** k
        if k:
            D[n, m] = amp * (-np.conj(phase)) ** k
    if not np.all(np.isfinite(D)):
        raise NumericalError(f"displacement matrix overflowed at |z|^2={u:g}, N={N}")
    return D


def _displacement_radial(N: int, u: np.ndarray):
    """Radial factors ``√(n!/m!) e^{-u/2} u^{k/2} L_n^{(k)}(u)`` for ``k = m - n ≥ 0``.

    Returns an array of shape ``(N, N, len(u))`` indexed ``[n, k]``; entries
    with ``n + k >= N`` are zero.
    """
    out = np.zeros((N, N, len(u)))
    lg = gammaln(np.arange(N) + 1)
    with np.errstate(divide="ignore"):
        logu = np.log(u)
    for k in range(N):
        L = numerics.laguerre_all(N - 1 - k, k, u)
        n = np.arange(N - k)
        logamp = (0.5 * (lg[n] - lg[n + k]))[:, None] - u[None, :] / 2
        if k:
            logamp = logamp + 0.5 * k * logu[None, :]
        out[n, k] = np.exp(logamp) * L
    return out


# -- apodizations ------------------------------------------------------------


@dataclass(frozen=True)
class Apodization:
    """Apodization ``Π(b, ω)`` with optional closed forms.

    ``partial_fourier(b, y)`` is ``(2π)^{-1/2} ∫ Π(b,ω) exp(-iωy) dω``.
    ``reach`` and ``scale`` describe how far, and on which length scale, the
    partial transform extends in its second argument.
    """

    evaluator: Callable
    provenance: str = "custom"
    partial_fourier: Callable | None = None
    isotropic: Callable | None = None
    reach: float = 12.0
    scale: float = 1.0
    extent: float = 40.0

    def __call__(self, b, w):
        return self.evaluator(np.asarray(b, dtype=float), np.asarray(w, dtype=float))

    @classmethod
    def gaussian(cls, sigma: float, tau: float) -> "Apodization":
        """``Π(b,ω) = exp(-b²/2σ²) exp(-ω²/2τ²)``."""
        if not (sigma > 0 and tau > 0):
            raise ValueError("sigma and tau must be positive")
        iso = None
        if sigma == tau:
            iso = lambda u, s=sigma: np.exp(-np.asarray(u, dtype=float) / (s * s))
        return cls(
            lambda b, w: np.exp(-b * b / (2 * sigma ** 2) - w * w / (2 * tau ** 2)) + 0j,
            f"gaussian(sigma={sigma}, tau={tau})",
            partial_fourier=lambda b, y: tau * np.exp(-b * b / (2 * sigma ** 2)
                                                      - tau * tau * y * y / 2) + 0j,
            isotropic=iso,
            reach=12.0 / tau,
            scale=1.0 / tau,
            extent=12.0 * max(sigma, tau),
        )

    @classmethod
    def constant_one(cls) -> "Apodization":
        """``Π ≡ 1``: no filtering, the Weyl-Wigner choice."""
        return cls(lambda b, w: np.ones(np.broadcast(b, w).shape, dtype=complex),
                   "constant-one", isotropic=lambda u: np.ones_like(np.asarray(u, dtype=float)),
                   reach=0.0, scale=0.0)

    @classmethod
    def custom(cls, evaluator: Callable, partial_fourier: Callable | None = None,
               reach: float = 12.0, scale: float = 1.0, extent: float = 40.0) -> "Apodization":
        return cls(evaluator, "custom", partial_fourier, reach=reach, scale=scale, extent=extent)

    def cp_defect(self, b, w) -> float:
        """``max |conj Π(b,ω) - Π(-b,-ω)|`` over the given points."""
        b = np.asarray(b, dtype=float)
        w = np.asarray(w, dtype=float)
        return float(np.max(np.abs(np.conj(self(b, w)) - self(-b, -w))))

    def partial_fourier_at(self, b, y):
        """Partial transform in ω; numerical when no closed form is attached."""
        if self.partial_fourier is not None:
            return self.partial_fourier(np.asarray(b, dtype=float), np.asarray(y, dtype=float))
        if self.provenance == "constant-one":
            raise ValueError("the constant apodization has a distributional partial transform")
        nodes, weights = numerics.gl_nodes(-self.extent, self.extent, 64)
        b, y = np.broadcast_arrays(np.asarray(b, dtype=float), np.asarray(y, dtype=float))
        vals = self(b[..., None], nodes) * np.exp(-1j * y[..., None] * nodes)
        return vals @ weights / SQRT_2PI


def apodization_from_probe(psi: Probe, method: str = "auto") -> Apodization:
    """``Π_ψ(b,ω) = ⟨ψ|D(-b,-ω)ψ⟩ = e^{-ibω/2} ∫ conj ψ(s) e^{-iωs} ψ(s+b) ds``."""
    lo, hi = psi.support

    def pf(b, y):
        b = np.asarray(b, dtype=float)
        y = np.asarray(y, dtype=float)
        return SQRT_2PI * np.conj(psi(-y - b / 2)) * psi(b / 2 - y)

    if method == "auto" and psi.is_gaussian:
        s2 = psi.sigma ** 2
        ev = lambda b, w: np.exp(-b * b / (4 * s2) - s2 * w * w / 4) + 0j
    else:
        nodes, weights = numerics.gl_nodes(lo, hi, 48)
        base = np.conj(psi(nodes)) * weights

        def ev(b, w):
            b, w = np.broadcast_arrays(np.asarray(b, dtype=float), np.asarray(w, dtype=float))
            shifted = psi(nodes + b[..., None]) * np.exp(-1j * w[..., None] * nodes)
            return np.exp(-1j * b * w / 2) * (shifted @ base)

    return Apodization(ev, f"from-probe({psi!r})", partial_fourier=pf,
                       reach=max(abs(lo), abs(hi)), scale=psi.time_scale,
                       extent=12 * psi.freq_scale)


# -- symplectic Fourier transform and Wigner function -------------------------


def symplectic_fourier(F: Callable, p: PhaseSpacePoint, extent=(20.0, 20.0),
                       tol: float = 1e-10) -> complex:
    """``(2π)^{-1} ∬ exp(-i(bω' - b'ω)) F(b',ω') db' dω'`` over a truncated box."""
    b, w = p
    eb, ew = (extent, extent) if np.isscalar(extent) else extent

    def integrand(bp, wp):
        return np.exp(-1j * (b * wp - bp * w)) * F(bp, wp)

    res = numerics.integrate_2d(integrand, (-eb, eb), (-ew, ew), tol, panels=8)
    return complex(res.value) / (2 * math.pi)


def symplectic_fourier_sampled(values: np.ndarray, bgrid: Grid1D, wgrid: Grid1D,
                               out_b: np.ndarray, out_w: np.ndarray) -> np.ndarray:
    """Symplectic Fourier transform of samples on a product grid.

    Trapezoid weights on ``(bgrid, wgrid)``; the result has shape
    ``(len(out_b), len(out_w))``.
    """
    bp = bgrid.points
    wp = wgrid.points
    wb = np.full(bgrid.count, bgrid.step)
    wb[[0, -1]] *= 0.5
    ww = np.full(wgrid.count, wgrid.step)
    ww[[0, -1]] *= 0.5
    left = np.exp(1j * np.multiply.outer(np.asarray(out_w, dtype=float), bp)) * wb  # e^{i b' ω}
    right = np.exp(-1j * np.multiply.outer(wp, np.asarray(out_b, dtype=float))) * ww[:, None]
    # result[i, j] for (out_b[i], out_w[j]); left is indexed by out_w
    core = left @ values @ right  # (n_w, n_b)
    return core.T / (2 * math.pi)


def wigner_of_probe(psi: Probe, p: PhaseSpacePoint, method: str = "auto",
                    tol: float = 1e-12) -> float:
    """``𝒲_ψ(b,ω) = (2π)^{-1} ∫ exp(iωt) conj ψ(b + t/2) ψ(b - t/2) dt``.

    With this sign ``𝔣_s[Π_ψ](b,ω) = 2π 𝒲_ψ(-b,-ω)``.
    """
    b, w = p
    if method == "auto" and psi.is_gaussian:
        s2 = psi.sigma ** 2
        return math.exp(-b * b / s2 - s2 * w * w) / math.pi
    lo, hi = psi.support
    # both b ± t/2 must lie in the support
    t0 = max(2 * (lo - b), 2 * (b - hi))
    t1 = min(2 * (hi - b), 2 * (b - lo))
    if not t0 < t1:
        return 0.0

    def integrand(t):
        return (np.exp(1j * w * t) * np.conj(psi(b + t / 2)) * psi(b - t / 2)).real

    return numerics.integrate(integrand, t0, t1, tol).value / (2 * math.pi)


# -- Fock-basis density operators --------------------------------------------


def boltzmann_planck(theta: float, trunc=FockTruncation()) -> DensityOperator:
    """Diagonal ``(1 - e^{-1/Θ}) e^{-n/Θ}``, renormalized on the truncation."""
    N = _trunc(trunc).N
    if not theta > 0:
        raise ValueError(f"temperature must be positive, got {theta}")
    if math.exp(-N / theta) > 1e-12:
        warnings.warn(f"truncation tail e^(-N/theta) = {math.exp(-N / theta):.3g} exceeds 1e-12",
                      RuntimeWarning, stacklevel=2)
    n = np.arange(N)
    weights = np.exp(-n / theta) * -math.expm1(-1 / theta)
    return DensityOperator(np.diag(weights / weights.sum()))


def laguerre_transform(w: Callable, n: int, tol: float = 1e-12) -> float:
    """``ℒ_n(w) = ∫₀^∞ e^{-u/2} L_n(u) w(u) du``."""
    if n < 0:
        raise ValueError("n must be non-negative")

    def integrand(u):
        u = np.asarray(u, dtype=float)
        return np.exp(-u / 2) * numerics.laguerre(n, 0, u) * w(u)

    # split where L_n oscillates so each piece is smooth
    edge = 4.0 * n + 8.0
    head = numerics.integrate(integrand, 0.0, edge, tol)
    tail = numerics.integrate(integrand, edge, math.inf, tol)
    total = head.value + tail.value
    if not math.isfinite(total):
        raise NumericalError("Laguerre transform diverged")
    return float(total)


def laplace_from_temperature(theta):
    """``t(Θ) = coth(1/2Θ) / 2``; ``e^{-ut}`` then has ``ℒ_n = (1 - e^{-1/Θ}) e^{-n/Θ}``."""
    theta = np.asarray(theta, dtype=float)
    return 0.5 / np.tanh(0.5 / theta)


def temperature_from_laplace(t):
    """Inverse of :func:`laplace_from_temperature`; ``t = 1/2`` maps to ``Θ = 0``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(t > 0.5, 1.0 / np.log((2 * t + 1) / np.where(t > 0.5, 2 * t - 1, 1.0)), 0.0)


def _laguerre_of_exponential(t, n):
    """``ℒ_n(e^{-ut}) = ν^{-1} (1 - 1/ν)^n`` with ``ν = t + 1/2``."""
    nu = np.asarray(t, dtype=float) + 0.5
    return np.power.outer(1 - 1 / nu, n) / nu[..., None]


def q0_from_laplace_weight(ell, trunc=FockTruncation(), tol: float = 1e-12) -> DensityOperator:
    """Diagonal ``𝔔₀`` for the isotropic weight ``w(u) = ∫ ℓ(t) e^{-ut} dt``.

    ``ell`` is either a callable density on ``[1/2, ∞)`` or a sequence of
    ``(t, mass)`` point masses.  Each ``e^{-ut}`` contributes a
    Boltzmann-Planck state at temperature ``Θ(t)``, so the result is a
    convex combination of those states and is positive.  The trace is
    renormalized on the truncation.
    """
    N = _trunc(trunc).N
    n = np.arange(N)
    if callable(ell):
        diag = np.empty(N)
        for k in range(N):
            res = numerics.integrate(lambda t: ell(t) * _laguerre_of_exponential(t, np.array([k]))[..., 0],
                                     0.5, math.inf, tol)
            diag[k] = res.value
        mass = numerics.integrate(lambda t: ell(t), 0.5, math.inf, tol).value
        if not (math.isfinite(mass) and mass > 0):
            raise NumericalError("Laplace weight is not normalizable")
    else:
        pts = np.asarray(ell, dtype=float).reshape(-1, 2)
        if np.any(pts[:, 0] < 0.5) or np.any(pts[:, 1] < 0):
            raise ValueError("point masses need t >= 1/2 and non-negative mass")
        diag = pts[:, 1] @ _laguerre_of_exponential(pts[:, 0], n)
    total = diag.sum()
    if not (math.isfinite(total) and total > 0):
        raise NumericalError("Laplace weight is not normalizable")
    return DensityOperator(np.diag(diag / total))


def q0_from_apodization(pi: Apodization, trunc=FockTruncation(), u_max: float | None = None,
                        angular: int | None = None) -> DensityOperator:
    """``(𝔔₀)_{mn} = (2π)^{-1} ∬ D_{mn}(b,ω) Π(b,ω) db dω``.

    Polar coordinates ``u = |z|²`` and angle φ give ``db dω = du dφ``.  The
    angular integral is a trapezoid/FFT rule and the radial one composite
    Gauss-Legendre on ``[0, u_max]``.  By default the radial range starts
    at ``0.72 N`` and is extended until the integrand at the edge falls below
    ``1e-16``, up to ``8 N + 200``.  Positivity is not assumed; see
    :meth:`DensityOperator.positivity`.
    """
    N = _trunc(trunc).N
    M = angular or max(64, 4 * N)
    phi = 2 * math.pi * np.arange(M) / M
    if u_max is None:
        u_max = 0.72 * N
        cap = 8 * N + 200
        probe_phi = phi[:: max(1, M // 32)]
        while u_max < cap:
            r = math.sqrt(2 * u_max)
            edge = np.max(np.abs(pi(r * np.cos(probe_phi), r * np.sin(probe_phi))))
            if edge < 1e-16 or edge * np.max(np.abs(_displacement_radial(N, np.array([u_max])))) < 1e-16:
                break
            u_max = min(cap, u_max * 1.25)
    u, wu = numerics.gl_nodes(0.0, u_max, max(16, int(math.ceil(u_max / 2))))
    if pi.isotropic is not None:
        coeff = np.zeros((1, len(u)), dtype=complex)
        coeff[0] = pi.isotropic(u)
        kmax = 0
    else:
        r = np.sqrt(2 * u)
        vals = pi(r[:, None] * np.cos(phi)[None, :], r[:, None] * np.sin(phi)[None, :])
        # coeff[k] = (2π)^{-1} ∫ e^{ikφ} Π dφ for k = -(N-1)..N-1
        spec = np.fft.ifft(vals, axis=1)  # (1/M) Σ e^{+ikφ_j}
        kmax = N - 1
        ks = np.arange(-kmax, kmax + 1)
        coeff = spec[:, ks % M].T  # (2N-1, nu)
    radial = _displacement_radial(N, u)  # [n, k, u]
    Q = np.zeros((N, N), dtype=complex)
    n = np.arange(N)
    Q[n, n] = radial[n, 0] @ (coeff[kmax] * wu)
    for k in range(1, kmax + 1):
        n = np.arange(N - k)
        # D_{n+k,n} carries e^{ikφ} and D_{n,n+k} carries (-1)^k e^{-ikφ}
        Q[n + k, n] = radial[n, k] @ (coeff[kmax + k] * wu)
        Q[n, n + k] = (-1) ** k * (radial[n, k] @ (coeff[kmax - k] * wu))
    return DensityOperator(Q)


def hermite_functions(nmax: int, t) -> np.ndarray:
    """Normalized Hermite functions ``h_0 … h_{nmax-1}`` at ``t`` (rows)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((nmax,) + t.shape)
    out[0] = math.pi ** -0.25 * np.exp(-t * t / 2)
    if nmax > 1:
        out[1] = math.sqrt(2) * t * out[0]
    for n in range(2, nmax):
        out[n] = math.sqrt(2 / n) * t * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
    return out


def fock_coefficients(psi: Probe, trunc=FockTruncation()) -> np.ndarray:
    """``⟨n|ψ⟩`` for the Hermite-function basis."""
    N = _trunc(trunc).N
    lo, hi = psi.support
    lo = min(lo, -math.sqrt(4 * N) - 10)
    hi = max(hi, math.sqrt(4 * N) + 10)
    t, w = numerics.gl_nodes(lo, hi, 8 * N)
    return hermite_functions(N, t) @ (psi(t) * w)


# -- general quantization ----------------------------------------------------


def quantize_general(f: PhaseSpaceFunction, pi: Apodization, grid: Grid1D | None = None,
                     ) -> OperatorKernel:
    """Dense kernel ``(2π)^{-1} ∫ f̂_ω(b, t'-t) Π̂_ω(t-t', b-(t+t')/2) db``.

    For ``Π ≡ 1`` the integral collapses onto ``b = (t+t')/2`` (Weyl
    ordering).  The ω-transform of ``f`` uses the same Nyquist-band rule as
    :func:`gabor1d.quantize`.
    """
    if grid is None:
        grid = default_grid(Probe.gaussian(max(pi.scale, 1.0)))
    n = grid.count
    h = grid.step
    t = grid.points
    idx = np.subtract.outer(np.arange(n), np.arange(n)) % (2 * n)
    diff = t[:, None] - t[None, :]
    centre = 0.5 * (t[:, None] + t[None, :])
    if pi.provenance == "constant-one":
        # b on the half-step lattice: b_k = t_0 + k h/2
        bk = t[0] + 0.5 * h * np.arange(2 * n - 1)
        fb = _band_sum(lambda w: f(bk[:, None], w[None, :]), grid)
        kidx = np.add.outer(np.arange(n), np.arange(n))
        K = fb[kidx, idx]
    else:
        step = min(h, pi.scale / 4) if pi.scale > 0 else h
        reach = pi.reach
        count = int(math.ceil((grid.stop - grid.start + 2 * reach) / step)) + 1
        b = np.linspace(grid.start - reach, grid.stop + reach, count)
        wb = b[1] - b[0]
        K = np.zeros((n, n), dtype=complex)
        chunk = 64
        for s0 in range(0, count, chunk):
            bs = b[s0:s0 + chunk]
            fb = _band_sum(lambda w: f(bs[:, None], w[None, :]), grid)
            for r, bv in enumerate(bs):
                K += fb[r][idx] * pi.partial_fourier_at(diff, bv - centre)
        K *= wb / SQRT_2PI
    if not np.all(np.isfinite(K)):
        raise NumericalError(f"partial Fourier transform of {f.name} diverged on the grid")
    return OperatorKernel("dense", matrix=K, grid=grid, label=f"A[{f.name}; {pi.provenance}]")
