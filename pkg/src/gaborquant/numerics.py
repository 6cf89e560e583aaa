"""Shared numerical kernels.

Adaptive Gauss-Legendre quadrature, Cauchy principal values and the Hilbert
transform, FFT convolution on uniform grids, associated Laguerre polynomials
and finite-difference stencil weights.

All integrands are expected to be vectorized: they receive a numpy array of
abscissae and return an array of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import NumericalError, QuadratureError

__all__ = [
    "Grid1D",
    "SampledFunction",
    "QuadResult",
    "integrate",
    "integrate_2d",
    "principal_value",
    "hilbert_transform",
    "convolve",
    "laguerre",
    "laguerre_all",
    "fd_weights",
    "derivative",
]

GL_ORDER = 15
MAX_DEPTH = 40
MAX_PANELS = 1 << 15


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``start + i*step`` for ``i`` in ``[0, count)``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ValueError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.count}")
        if not math.isfinite(self.start):
            raise ValueError("grid start must be finite")

    @classmethod
    def from_range(cls, start: float, stop: float, count: int) -> "Grid1D":
        """Grid with ``count`` points from ``start`` to ``stop`` inclusive."""
        if count < 2 or not stop > start:
            raise ValueError(f"invalid grid range {start}:{stop}:{count}")
        return cls(float(start), (stop - start) / (count - 1), int(count))

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)


@dataclass(frozen=True)
class SampledFunction:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != (self.grid.count,):
            raise ValueError(
                f"expected {self.grid.count} samples, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func, grid: Grid1D) -> "SampledFunction":
        return cls(grid, np.asarray(func(grid.points)))

    def norm(self) -> float:
        """Discrete L2 norm with the grid step as weight."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.step))


class QuadResult(NamedTuple):
    value: complex
    error: float


@lru_cache(maxsize=None)
def _gl_rule(n: int = GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_sums(f, a: np.ndarray, b: np.ndarray):
    """Gauss-Legendre estimate on each panel ``[a_i, b_i]`` with one call to f.

    Also returns the estimate of ``∫|f|``, which sets the roundoff floor.
    """
    x, w = _gl_rule()
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes))
    if vals.shape != nodes.shape:
        vals = np.broadcast_to(vals, nodes.shape)
    return half * (vals @ w), np.abs(half) * (np.abs(vals) @ w)


def _smooth_ends(f, a: float, b: float):
    # x = a + (b-a)(3v^2 - 2v^3): zero Jacobian at both ends, so integrable
    # endpoint singularities (logs, inverse square roots) become mild.
    width = b - a

    def g(v):
        x = a + width * v * v * (3.0 - 2.0 * v)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.asarray(f(x)) * (6.0 * width * v * (1.0 - v))
        # nodes that round onto an end point carry a vanishing Jacobian
        at_end = (x == a) | (x == b)
        return np.where(at_end & ~np.isfinite(vals), 0.0, vals)

    return g


def _semi_infinite(f, a: float, sign: float):
    # x = a + sign * s / (1 - s), s in [0, 1)
    def g(s):
        one_minus = 1.0 - s
        x = a + sign * s / one_minus
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.asarray(f(x)) / (one_minus * one_minus)
        return np.where(np.isfinite(vals), vals, 0.0)

    return g


def _adaptive(f, a: float, b: float, tol: float, max_depth: int):
    total_width = b - a
    lo = np.array([a])
    hi = np.array([b])
    whole, _ = _panel_sums(f, lo, hi)
    accepted = 0.0
    accepted_err = 0.0
    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        left, left_abs = _panel_sums(f, lo, mid)
        right, right_abs = _panel_sums(f, mid, hi)
        refined = left + right
        err = np.abs(refined - whole)
        local_tol = tol * (hi - lo) / total_width
        noise = 64 * np.finfo(float).eps * (left_abs + right_abs)
        done = (err <= local_tol) | (err <= noise)
        accepted = accepted + np.sum(refined[done])
        accepted_err += float(np.sum(err[done]))
        if np.all(done):
            return accepted, accepted_err, True
        keep = ~done
        if depth == max_depth or 2 * np.count_nonzero(keep) > MAX_PANELS:
            accepted = accepted + np.sum(refined[keep])
            accepted_err += float(np.sum(err[keep]))
            return accepted, accepted_err, False
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        whole = np.concatenate([left[keep], right[keep]])
    raise AssertionError("unreachable")


def integrate(f: Callable, a: float, b: float, tol: float = 1e-10,
              points: Sequence[float] = (), endpoint_singular: bool = False,
              max_depth: int = MAX_DEPTH) -> QuadResult:
    """Adaptive Gauss-Legendre quadrature of ``f`` over ``[a, b]``.

    Panels of 15 nodes are bisected until the difference between a panel and
    its two halves falls below the panel's share of ``tol``.

    Parameters
    ----------
    f : callable
        Vectorized integrand, real or complex valued.
    a, b : float
        Limits; either may be infinite, in which case the half line is mapped
        onto a finite interval.
    tol : float
        Requested absolute error.
    points : sequence of float
        Interior break points (kinks, jumps, integrable singularities).  The
        interval is split there before refinement.
    endpoint_singular : bool
        Cluster nodes at every sub-interval end; use when ``f`` has integrable
        singularities at the break points.

    Returns
    -------
    QuadResult
        ``(value, error)``; the value is a Python float when ``f`` is real.

    Raises
    ------
    QuadratureError
        When refinement reaches ``max_depth`` without meeting ``tol``.
    """
    if not a < b:
        raise ValueError(f"integrate needs a < b, got [{a}, {b}]")
    if math.isinf(a) and math.isinf(b):
        c = 0.0 if not points else float(points[0])
        left = integrate(f, -math.inf, c, tol / 2, [p for p in points if p < c],
                         endpoint_singular, max_depth)
        right = integrate(f, c, math.inf, tol / 2, [p for p in points if p > c],
                          endpoint_singular, max_depth)
        return QuadResult(left.value + right.value, left.error + right.error)

    cuts = sorted(set(p for p in points if a < p < b))
    edges = [a, *cuts, b]
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if math.isinf(hi):
            g, lo_, hi_ = _semi_infinite(f, lo, 1.0), 0.0, 1.0
        elif math.isinf(lo):
            g, lo_, hi_ = _semi_infinite(f, hi, -1.0), 0.0, 1.0
        else:
            g, lo_, hi_ = f, lo, hi
        if endpoint_singular:
            g, lo_, hi_ = _smooth_ends(g, lo_, hi_), 0.0, 1.0
        pieces.append((g, lo_, hi_))

    share = tol / len(pieces)
    value = 0.0
    error = 0.0
    ok = True
    for g, lo, hi in pieces:
        v, e, converged = _adaptive(g, lo, hi, share, max_depth)
        value = value + v
        error += e
        ok = ok and converged
    value = complex(value) if np.iscomplexobj(value) else float(value)
    if not ok and error > tol:
        raise QuadratureError(
            f"quadrature on [{a}, {b}] did not converge: error {error:.3g} > {tol:.3g}",
            estimate=value, error=error)
    return QuadResult(value, error)


def integrate_2d(f: Callable, xlim: tuple[float, float], ylim: tuple[float, float],
                 tol: float = 1e-10, panels: int = 4, max_panels: int = 256) -> QuadResult:
    """Tensor-product composite Gauss-Legendre quadrature on a rectangle.

    The panel count per axis doubles until two successive estimates agree to
    ``tol``.  ``f(x, y)`` receives broadcastable 2-D arrays.
    """
    x, w = _gl_rule()
    previous = None
    n = panels
    while n <= max_panels:
        xs, wx = _composite_nodes(xlim[0], xlim[1], n, x, w)
        ys, wy = _composite_nodes(ylim[0], ylim[1], n, x, w)
        vals = np.asarray(f(xs[:, None], ys[None, :]))
        est = wx @ vals @ wy
        if previous is not None:
            err = abs(est - previous)
            if err <= tol:
                return QuadResult(complex(est) if np.iscomplexobj(est) else float(est), err)
        previous = est
        n *= 2
    raise QuadratureError("2-D quadrature did not converge", estimate=previous,
                          error=float(err))


def _composite_nodes(a, b, n, x, w):
    edges = np.linspace(a, b, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def gl_nodes(a: float, b: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite 15-point Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _gl_rule()
    return _composite_nodes(a, b, panels, x, w)


_PV_LADDER = 1e-2 * 10.0 ** -np.arange(6)


def gl_nodes_on_breaks(breaks: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """One 15-point Gauss-Legendre panel per interval between sorted ``breaks``.

    Exact for piecewise polynomials of degree up to 29 with those breaks,
    such as splines times low-order monomials.
    """
    edges = np.unique(np.asarray(breaks, dtype=float))
    if len(edges) < 2:
        raise ValueError("need at least two distinct break points")
    x, w = _gl_rule()
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    return (mid[:, None] + half[:, None] * x[None, :]).ravel(), (half[:, None] * w[None, :]).ravel()


def _neville_at_zero(xs, ys):
    """Polynomial extrapolation of ``ys(xs)`` to ``x = 0``; returns the tableau diagonal."""
    n = len(xs)
    table = list(ys)
    diag = [table[-1]]
    for level in range(1, n):
        for i in range(n - level):
            x0, x1 = xs[i], xs[i + level]
            table[i] = (x1 * table[i] - x0 * table[i + 1]) / (x1 - x0)
        diag.append(table[n - level - 1])
    return diag


def principal_value(f: Callable, pole: float, a: float, b: float,
                    tol: float = 1e-10) -> QuadResult:
    """Cauchy principal value of ``∫_a^b f`` across a simple pole.

    ``f`` is the full integrand including its ``1/(t - pole)`` factor.  The
    symmetric part around the pole is folded, ``f(pole+s) + f(pole-s)``, which
    is regular at ``s = 0``; the excised integrals are evaluated on the
    ladder ``eps = 1e-2 ... 1e-7`` and extrapolated to ``eps -> 0``.
    """
    if not (a < pole < b):
        raise ValueError(f"pole {pole} must lie strictly inside ({a}, {b})")
    delta = min(pole - a, b - pole)

    def folded(s):
        # pole +- s is inexact in floating point; weighting each side by its
        # exact offset keeps the two pole terms cancelling.
        up = pole + s
        down = pole - s
        return (np.asarray(f(up)) * (up - pole) + np.asarray(f(down)) * (pole - down)) / s

    eps = _PV_LADDER * delta
    share = tol / 16
    outer = 0.0
    outer_err = 0.0
    if pole - delta > a:
        r = integrate(f, a, pole - delta, share)
        outer += r.value
        outer_err += r.error
    if pole + delta < b:
        r = integrate(f, pole + delta, b, share)
        outer += r.value
        outer_err += r.error
    r = integrate(folded, eps[0], delta, share)
    partial = r.value
    quad_err = outer_err + r.error
    estimates = [outer + partial]
    for hi, lo in zip(eps[:-1], eps[1:]):
        r = integrate(folded, lo, hi, share)
        partial = partial + r.value
        quad_err += r.error
        estimates.append(outer + partial)
    diag = _neville_at_zero(list(eps), estimates)
    best = diag[3] if len(diag) > 3 else diag[-1]
    extrap_err = abs(diag[3] - diag[2]) if len(diag) > 3 else abs(diag[-1] - diag[-2])
    error = extrap_err + quad_err
    if error > tol:
        raise QuadratureError(
            f"principal value at {pole} did not converge: error {error:.3g}",
            estimate=best, error=error)
    return QuadResult(best, error)


def hilbert_transform(u: Callable, t: float, tol: float = 1e-10,
                      width: float | None = None,
                      points: Sequence[float] = ()) -> QuadResult:
    """Hilbert transform ``(1/π) p.v. ∫ u(τ)/(t-τ) dτ`` evaluated at ``t``.

    The singular window ``[t-width, t+width]`` is handled by
    :func:`principal_value`; the two tails are mapped to finite intervals, so
    ``u`` only needs to be integrable against ``1/τ``.  ``points`` lists kinks
    or jumps of ``u`` away from ``t``.
    """
    if width is None:
        width = max(1.0, abs(t))
    lo, hi = t - width, t + width

    def integrand(tau):
        return np.asarray(u(tau)) / (t - tau)

    inner_points = [p for p in points if lo < p < hi and p != t]
    if inner_points:
        core = _pv_with_points(integrand, t, lo, hi, tol / 2, inner_points)
    else:
        core = principal_value(integrand, t, lo, hi, tol / 2)
    left = integrate(integrand, -math.inf, lo, tol / 4, [p for p in points if p < lo])
    right = integrate(integrand, hi, math.inf, tol / 4, [p for p in points if p > hi])
    value = (core.value + left.value + right.value) / math.pi
    error = (core.error + left.error + right.error) / math.pi
    if error > tol:
        raise QuadratureError(f"Hilbert transform at {t}: error {error:.3g}",
                              estimate=value, error=error)
    return QuadResult(value, error)


def _pv_with_points(f, pole, a, b, tol, points):
    # Shrink the symmetric window so that it excludes every kink, and
    # integrate the remainder with splits at the kinks.
    nearest = min(abs(p - pole) for p in points)
    delta = 0.5 * nearest
    core = principal_value(f, pole, pole - delta, pole + delta, tol / 2)
    left = integrate(f, a, pole - delta, tol / 4, [p for p in points if p < pole])
    right = integrate(f, pole + delta, b, tol / 4, [p for p in points if p > pole])
    return QuadResult(core.value + left.value + right.value,
                      core.error + left.error + right.error)


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def convolve(f: SampledFunction, g: SampledFunction) -> SampledFunction:
    """Linear convolution ``∫ f(x-y) g(y) dy`` of two sampled functions.

    Zero-padded FFT of length the next power of two not below
    ``2*(len(f) + len(g))``.  The output grid spans the full support sum.
    """
    hf, hg = f.grid.step, g.grid.step
    if abs(hf - hg) > 1e-12 * max(hf, hg):
        raise ValueError(f"convolve needs equal steps, got {hf} and {hg}")
    nf, ng = f.grid.count, g.grid.count
    size = _next_pow2(2 * (nf + ng))
    complex_out = np.iscomplexobj(f.values) or np.iscomplexobj(g.values)
    if complex_out:
        out = np.fft.ifft(np.fft.fft(f.values, size) * np.fft.fft(g.values, size))
    else:
        out = np.fft.irfft(np.fft.rfft(f.values, size) * np.fft.rfft(g.values, size), size)
    n = nf + ng - 1
    grid = Grid1D(f.grid.start + g.grid.start, hf, n)
    return SampledFunction(grid, out[:n] * hf)


def laguerre_all(nmax: int, alpha: float, x) -> np.ndarray:
    """``L_n^{(alpha)}(x)`` for ``n = 0..nmax`` stacked along the first axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 1.0 + alpha - x
    for k in range(1, nmax):
        # (k+1) L_{k+1} = (2k + 1 + alpha - x) L_k - (k + alpha) L_{k-1}
        out[k + 1] = ((2 * k + 1 + alpha - x) * out[k] - (k + alpha) * out[k - 1]) / (k + 1)
    return out


def laguerre(n: int, alpha: float, x):
    """Associated Laguerre polynomial ``L_n^{(alpha)}(x)`` by three-term recurrence."""
    if n < 0 or int(n) != n:
        raise ValueError(f"degree must be a non-negative integer, got {n}")
    vals = laguerre_all(int(n), alpha, x)[int(n)]
    return float(vals) if vals.ndim == 0 else vals


def fd_weights(order: int, offsets: Sequence[float]) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at 0.

    Fornberg's recursion on arbitrary stencil ``offsets`` (in units of the
    grid step).
    """
    z = np.asarray(offsets, dtype=float)
    n = len(z)
    if order >= n:
        raise ValueError("stencil too small for the requested derivative order")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = z[0]
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = z[i]
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def derivative(values: np.ndarray, step: float, order: int, half_width: int = 6) -> np.ndarray:
    """High-order finite-difference derivative of uniformly sampled data.

    Centered stencils of ``2*half_width + 1`` points in the interior; near the
    ends the stencil is shifted inward, which costs accuracy there.
    """
    values = np.asarray(values)
    n = len(values)
    width = 2 * half_width + 1
    if n < width:
        raise ValueError(f"need at least {width} samples, got {n}")
    out = np.empty_like(values, dtype=np.result_type(values, float))
    center = fd_weights(order, np.arange(-half_width, half_width + 1))
    scale = step ** order
    interior = np.zeros(n - 2 * half_width, dtype=out.dtype)
    for k, wk in enumerate(center):
        interior = interior + wk * values[k:n - 2 * half_width + k]
    out[half_width:n - half_width] = interior / scale
    for i in list(range(half_width)) + list(range(n - half_width, n)):
        first = min(max(i - half_width, 0), n - width)
        offsets = np.arange(first, first + width) - i
        w = fd_weights(order, offsets)
        out[i] = np.dot(w, values[first:first + width]) / scale
    return out


def check_finite(value, what: str):
    if not np.all(np.isfinite(value)):
        raise NumericalError(f"{what} produced non-finite values")
    return value
