"""Curvature of diagonal metrics by finite differences.

Conventions, fixed once here:

* signature ``(+, -, -, -)``;
* ``Γ^ρ_{μν} = ½ g^{ρλ} (∂_μ g_{λν} + ∂_ν g_{λμ} - ∂_λ g_{μν})``;
* ``R^ρ_{σμν} = ∂_ν Γ^ρ_{μσ} - ∂_μ Γ^ρ_{νσ} + Γ^ρ_{νλ} Γ^λ_{μσ} - Γ^ρ_{μλ} Γ^λ_{νσ}``;
* ``R_{σν} = R^ρ_{σρν}``, ``R = g^{σν} R_{σν}``;
* ``G_{μν} = R_{μν} - ½ g_{μν} R`` and ``T_{μν} = G_{μν} / κ``.

With these signs a positive regularizing constant added to ``g_00`` of the
uniformly accelerated frame produces negative transverse pressure
components ``T_22 = T_33``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .metrics import MetricField

__all__ = [
    "CurvatureReport",
    "metric_derivatives",
    "christoffel",
    "curvature_at",
    "stress_energy_scan",
    "einstein_divergence",
    "ScanResult",
    "DEFAULT_STEP",
]

DEFAULT_STEP = 1e-2


@dataclass(frozen=True)
class CurvatureReport:
    point: np.ndarray
    christoffel: np.ndarray
    ricci: np.ndarray
    scalar: float
    einstein: np.ndarray
    stress_energy: np.ndarray
    step: float
    derivative_error: float

    def as_row(self) -> dict:
        row = {f"x{i}": float(v) for i, v in enumerate(self.point)}
        row["scalar"] = float(self.scalar)
        for i in range(4):
            for j in range(i, 4):
                row[f"T{i}{j}"] = float(self.stress_energy[i, j])
        return row


def _richardson(estimates):
    """Eliminate ``h²`` and ``h⁴`` terms from estimates at ``h, h/2, h/4 …``.

    Returns the extrapolated value and the magnitude of the last correction.
    """
    table = [np.asarray(e, dtype=float) for e in estimates]
    correction = np.zeros_like(table[0])
    factor = 4.0
    while len(table) > 1:
        nxt = [(factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)]
        correction = nxt[-1] - table[-1]
        table = nxt
        factor *= 4.0
    return table[0], float(np.max(np.abs(correction)))


def _fd_derivatives(metric: MetricField, x: np.ndarray, h: np.ndarray, levels: int):
    """Central differences of the diagonal components with Richardson steps."""
    g0 = metric.diagonal(x)
    d1 = []
    d2 = []
    for level in range(levels + 1):
        hs = h / 2 ** level
        e = np.diag(hs)
        plus = metric.diagonal(x + e)
        minus = metric.diagonal(x - e)
        first = (plus - minus).T / (2 * hs)  # [component, direction]
        second = np.zeros((4, 4, 4))
        for i in range(4):
            second[:, i, i] = (plus[i] - 2 * g0 + minus[i]) / hs[i] ** 2
        pp = metric.diagonal(x + e[:, None, :] + e[None, :, :])
        pm = metric.diagonal(x + e[:, None, :] - e[None, :, :])
        mm = metric.diagonal(x - e[:, None, :] - e[None, :, :])
        for i in range(4):
            for j in range(i + 1, 4):
                mixed = (pp[i, j] - pm[i, j] - pm[j, i] + mm[i, j]) / (4 * hs[i] * hs[j])
                second[:, i, j] = second[:, j, i] = mixed
        d1.append(first)
        d2.append(second)
    dg, err1 = _richardson(d1)
    ddg, err2 = _richardson(d2)
    return g0, dg, ddg, max(err1, err2)


def metric_derivatives(metric: MetricField, x, h: float | None = None, levels: int = 2,
                       method: str = "auto"):
    """``(g, ∂g, ∂∂g, error)`` for the diagonal components at ``x``.

    ``∂g[μ, i] = ∂_i g_μμ`` and ``∂∂g[μ, i, j] = ∂_i ∂_j g_μμ``.  The step
    in coordinate ``i`` is ``h · max(1, |x_i|)``.
    """
    x = np.asarray(x, dtype=float)
    if method not in ("auto", "fd", "exact"):
        raise ValueError(f"unknown derivative method {method!r}")
    if method == "exact" or (method == "auto" and metric.has_closed_derivatives):
        with np.errstate(divide="ignore", invalid="ignore"):
            g, dg, ddg = metric.derivatives(x)
        return g, dg, ddg, 0.0
    base = DEFAULT_STEP if h is None else h
    steps = base * np.maximum(1.0, np.abs(x))
    if np.any(steps / 2 ** levels < 1e-12 * np.maximum(1.0, np.abs(x))):
        raise NumericalError(f"finite-difference step {base:g} underflows at {x}")
    # singular points surface as non-finite values, checked by the caller
    with np.errstate(divide="ignore", invalid="ignore"):
        return _fd_derivatives(metric, x, steps, levels)


def christoffel(g, dg) -> np.ndarray:
    """``Γ[ρ, μ, ν]`` for a diagonal metric."""
    ginv = 1.0 / g
    # dG[a, b, c] = ∂_c g_ab
    dG = np.zeros((4, 4, 4))
    for a in range(4):
        dG[a, a, :] = dg[a]
    lower = 0.5 * (np.einsum("lnm->lmn", dG) + dG - np.einsum("mnl->lmn", dG))
    return ginv[:, None, None] * lower


def _curvature_from_derivatives(g, dg, ddg):
    ginv = 1.0 / g
    dG = np.zeros((4, 4, 4))
    ddG = np.zeros((4, 4, 4, 4))
    for a in range(4):
        dG[a, a, :] = dg[a]
        ddG[a, a, :, :] = ddg[a]
    # Γ_{λμν} (first index lowered) and its derivative along σ (last axis)
    low = 0.5 * (np.einsum("lnm->lmn", dG) + dG - np.einsum("mnl->lmn", dG))
    dlow = 0.5 * (np.einsum("lnms->lmns", ddG) + ddG - np.einsum("mnls->lmns", ddG))
    gamma = ginv[:, None, None] * low
    dginv = -dg / g[:, None] ** 2  # ∂_σ g^{ρρ}
    dgamma = dginv[:, None, None, :] * low[..., None] + ginv[:, None, None, None] * dlow
    # dgamma[ρ, μ, ν, σ] = ∂_σ Γ^ρ_{μν}
    riem = (np.einsum("rmsn->rsmn", dgamma) - np.einsum("rnsm->rsmn", dgamma)
            + np.einsum("rnl,lms->rsmn", gamma, gamma) - np.einsum("rml,lns->rsmn", gamma, gamma))
    ricci = np.einsum("rsrn->sn", riem)
    scalar = float(np.sum(ginv * np.diag(ricci)))
    einstein = ricci - 0.5 * np.diag(g) * scalar
    return gamma, ricci, scalar, einstein


def curvature_at(metric: MetricField, x, kappa: float = 1.0, h: float | None = None,
                 levels: int = 2, method: str = "auto") -> CurvatureReport:
    """Christoffel symbols, Ricci, scalar and Einstein tensors and ``T = G/κ``.

    ``method="fd"`` forces finite differences even when the metric exposes
    closed-form derivatives.
    """
    if not kappa:
        raise ValueError("kappa must be nonzero")
    x = np.asarray(x, dtype=float)
    g, dg, ddg, err = metric_derivatives(metric, x, h, levels, method)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(ddg))):
        raise NumericalError(f"{metric.name} is not finite near {x}")
    if np.any(g == 0):
        raise NumericalError(f"{metric.name} is degenerate at {x}")
    gamma, ricci, scalar, einstein = _curvature_from_derivatives(g, dg, ddg)
    exact = method == "exact" or (method == "auto" and metric.has_closed_derivatives)
    step = 0.0 if exact else (DEFAULT_STEP if h is None else h)
    return CurvatureReport(x.copy(), gamma, ricci, scalar, einstein, einstein / kappa, step, err)


class ScanResult(list):
    """List of reports (``None`` where a point failed) plus a failure log."""

    def __init__(self, reports, failures):
        super().__init__(reports)
        self.failures = failures


def stress_energy_scan(metric: MetricField, points, kappa: float = 1.0,
                       h: float | None = None, method: str = "auto") -> ScanResult:
    """:func:`curvature_at` at every point; failures are collected, not raised."""
    reports = []
    failures = []
    for i, x in enumerate(points):
        try:
            reports.append(curvature_at(metric, x, kappa, h, method=method))
        except (NumericalError, FloatingPointError, ZeroDivisionError) as exc:
            reports.append(None)
            failures.append((i, str(exc)))
    return ScanResult(reports, failures)


def einstein_divergence(metric: MetricField, x, outer: float = 1e-2, h: float | None = None,
                        method: str = "auto") -> np.ndarray:
    """``∇^μ G_{μν}`` at ``x`` from Einstein tensors at neighbouring points.

    The outer derivative is a fourth-order central difference with step
    ``outer · max(1, |x_i|)``.  Vanishes identically in exact arithmetic.
    """
    x = np.asarray(x, dtype=float)
    rep = curvature_at(metric, x, 1.0, h, method=method)
    g = metric.diagonal(x)
    ginv = 1.0 / g
    dG = np.zeros((4, 4, 4))  # ∂_a G_{μν} at [a, μ, ν]
    for a in range(4):
        ha = outer * max(1.0, abs(x[a]))
        e = np.zeros(4)
        e[a] = ha
        vals = [curvature_at(metric, x + k * e, 1.0, h, method=method).einstein
                for k in (-2, -1, 1, 2)]
        dG[a] = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * ha)
    G = rep.einstein
    gam = rep.christoffel
    cov = (dG - np.einsum("lam,ln->amn", gam, G) - np.einsum("lan,ml->amn", gam, G))
    # raise the derivative index onto μ and contract
    return np.einsum("m,mmn->n", ginv, cov)
