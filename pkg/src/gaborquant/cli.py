"""Command-line front end.

Every job writes ``<name>.csv`` and ``<name>.manifest.json`` into ``--out``.
Exit codes: 0 success, 2 invalid input, 1 numerical failure.  Outputs are
written to temporary files and renamed only after the job succeeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import re
import sys
import time
import warnings

import numpy as np
import scipy

from . import __version__
from .curvature import curvature_at, stress_energy_scan
from .errors import NumericalError
from .gabor1d import (PhaseSpaceFunction, PhaseSpacePoint, Probe, gabor_reconstruct,
                      gabor_transform, plancherel_defect, portrait, quantize)
from .metrics import (RadialProbability, build_metric, fixed_point_residual, profile_table,
                      regularize_gaussian, schwarzschild_profiles, shifted_radius)
from .numerics import Grid1D, SampledFunction
from .phase4d import Field4, Probe4, portrait_field, quantize_field
from .weylheisenberg import (Apodization, FockTruncation, boltzmann_planck, displacement_matrix,
                             q0_from_apodization, wigner_of_probe)

SCHEMA = 1
DEFAULT_TOL = 1e-10


class ValidationError(ValueError):
    """Bad command-line input; maps to exit code 2."""


# -- parsing helpers ---------------------------------------------------------

def parse_grid(text: str) -> Grid1D:
    """``start:stop:count`` with ``count >= 2``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid {text!r} must look like start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ValidationError(f"grid {text!r}: {exc}") from None
    try:
        return Grid1D.from_range(start, stop, count)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def parse_spec(text: str, allowed: dict[str, tuple[str, ...]],
               defaults: dict[str, float] | None = None) -> tuple[str, dict[str, float]]:
    """``kind:key=value,key=value``; keys of ``allowed[kind]`` without a default are required."""
    kind, _, rest = text.partition(":")
    if kind not in allowed:
        raise ValidationError(f"unknown kind {kind!r} in {text!r}; choose from {sorted(allowed)}")
    values: dict[str, float] = dict(defaults or {})
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValidationError(f"expected key=value, got {item!r}")
        if key not in allowed[kind]:
            raise ValidationError(f"unknown key {key!r} for {kind}; expected {allowed[kind]}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ValidationError(f"{key}={val!r} is not a number") from None
    missing = [k for k in allowed[kind] if k not in values]
    if missing:
        raise ValidationError(f"{kind} needs {', '.join(missing)}")
    return kind, values


def parse_vector(text: str, length: int = 4) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise ValidationError(f"{text!r} is not a comma-separated list of numbers") from None
    if v.size != length:
        raise ValidationError(f"{text!r} needs {length} entries")
    return v


def parse_params(items) -> dict[str, float]:
    out = {}
    for item in items or []:
        key, eq, val = item.partition("=")
        if not eq:
            raise ValidationError(f"--param expects key=value, got {item!r}")
        try:
            out[key] = float(val)
        except ValueError:
            raise ValidationError(f"--param {key}={val!r} is not a number") from None
    return out


def positive(text: str) -> float:
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"{text} must be a positive number")
    return v


def tolerance() -> float:
    raw = os.environ.get("GM_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise ValidationError(f"GM_TOL={raw!r} is not a number") from None
    if not 0 < tol < 1:
        raise ValidationError(f"GM_TOL={raw!r} must lie in (0, 1)")
    return tol


def probe4(text: str) -> Probe4:
    _, v = parse_spec(text, {"gauss": ("s0", "s1", "s2", "s3")})
    try:
        return Probe4.separable_gaussian([v["s0"], v["s1"], v["s2"], v["s3"]])
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def radial_probe(text: str, tol: float) -> RadialProbability:
    _, v = parse_spec(text, {"shell": ("rc", "sr", "st")}, {"st": 1.0})
    try:
        return RadialProbability.shell(v["rc"], v["sr"], v["st"], tol=tol)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


GABOR_SYMBOLS = {
    "one": {(0, 0): 1.0},
    "b": {(1, 0): 1.0},
    "b2": {(2, 0): 1.0},
    "w": {(0, 1): 1.0},
    "w2": {(0, 2): 1.0},
    "bw": {(1, 1): 1.0},
}


def gabor_symbol(name: str) -> PhaseSpaceFunction:
    if name not in GABOR_SYMBOLS:
        raise ValidationError(f"unknown symbol {name!r}; choose from {sorted(GABOR_SYMBOLS)}")
    return PhaseSpaceFunction.polynomial(GABOR_SYMBOLS[name], name=name)


def gaussian_portrait_check(name: str, b, w, sigma: float):
    """Closed-form Gaussian portraits of the named symbols."""
    return {
        "one": np.ones_like(b),
        "b": b,
        "b2": b ** 2 + sigma ** 2,
        "w": w,
        "w2": w ** 2 + 1 / sigma ** 2,
        "bw": b * w,
    }[name]


FIELDS = {
    "one": lambda: Field4.constant(1.0),
    "r2": Field4.radius_squared,
    "rho2": Field4.cylindrical_radius_squared,
}


def field4(text: str) -> Field4:
    if text in FIELDS:
        return FIELDS[text]()
    _, v = parse_spec(text, {"coordinate": ("mu", "power")})
    mu, power = int(v["mu"]), int(v["power"])
    if mu not in range(4) or power < 0 or power != v["power"]:
        raise ValidationError(f"coordinate field needs mu in 0..3 and an integer power >= 0")
    return Field4.coordinate(mu, power)


def metric_from_args(args):
    try:
        metric = build_metric(args.metric, parse_params(args.param))
        if args.regularize:
            metric = regularize_gaussian(metric, probe4(args.regularize).sigma, args.mode)
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return metric


def points_along(args) -> np.ndarray:
    base = parse_vector(args.at)
    if args.axis not in range(4):
        raise ValidationError("--axis must be 0..3")
    pts = np.repeat(base[None, :], args.grid.count, axis=0)
    pts[:, args.axis] = args.grid.points
    return pts


# -- output ------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


class Job:
    """Collects a table plus manifest entries and writes both atomically."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.name = args.name or command.replace(" ", "-")
        self.header: list[str] = []
        self.rows: list[list] = []
        self.extra: dict = {}
        self.start = time.perf_counter()

    def table(self, header, rows):
        self.header = list(header)
        self.rows = [list(r) for r in rows]

    def _csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def _manifest(self) -> str:
        inputs = {k: (v if isinstance(v, (int, float, str, bool, type(None), list)) else str(v))
                  for k, v in sorted(vars(self.args).items()) if k not in ("func",)}
        manifest = {
            "schema": SCHEMA,
            "command": self.command,
            "inputs": inputs,
            "outputs": [f"{self.name}.csv"],
            "tolerances": {"quadrature": tolerance()},
            "versions": {"package": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()},
            "results": self.extra,
            "deterministic": True,
            "wall_time_s": time.perf_counter() - self.start,
        }
        return json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n"

    def write(self):
        out = self.args.out
        os.makedirs(out, exist_ok=True)
        targets = [(os.path.join(out, f"{self.name}.csv"), self._csv()),
                   (os.path.join(out, f"{self.name}.manifest.json"), self._manifest())]
        temps = []
        try:
            for path, text in targets:
                tmp = path + ".part"
                with open(tmp, "w", newline="", encoding="utf-8") as fh:
                    fh.write(text)
                temps.append((tmp, path))
            for tmp, path in temps:
                os.replace(tmp, path)
        finally:
            for tmp, _ in temps:
                if os.path.exists(tmp):
                    os.remove(tmp)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


# -- commands ----------------------------------------------------------------

def read_table(path: str, columns: int) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError:
        raise ValidationError(f"{path} contains non-numeric entries") from None
    if data.ndim != 2 or data.shape[1] < columns:
        raise ValidationError(f"{path} needs at least {columns} columns")
    return data


def cmd_gabor_transform(args, job):
    psi = Probe.gaussian(args.sigma)
    tgrid = args.tgrid
    if args.input:
        data = read_table(args.input, 2)
        vals = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0)
        tgrid = Grid1D.from_range(data[0, 0], data[-1, 0], len(data))
        if not np.allclose(np.diff(data[:, 0]), tgrid.step, rtol=1e-9, atol=0):
            raise ValidationError("input times must be uniformly spaced")
        s = SampledFunction(tgrid, vals)
    else:
        _, v = parse_spec(args.signal, {"gauss": ("b", "w", "s")})
        if not v["s"] > 0:
            raise ValidationError("signal width s must be positive")
        atom = Probe.gaussian(v["s"])
        s = SampledFunction.from_callable(
            lambda t: np.exp(1j * v["w"] * t) * atom(t - v["b"]), tgrid)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        S = gabor_transform(s, psi, args.bgrid, args.wgrid)
    job.extra["plancherel_defect"] = plancherel_defect(S, args.bgrid, args.wgrid, s)
    job.extra["warnings"] = [str(c.message) for c in caught]
    B, W = np.meshgrid(args.bgrid.points, args.wgrid.points, indexing="ij")
    job.table(["b", "w", "re", "im"],
              zip(B.ravel(), W.ravel(), S.real.ravel(), S.imag.ravel()))


def cmd_gabor_reconstruct(args, job):
    data = read_table(args.input, 4)
    b = np.unique(data[:, 0])
    w = np.unique(data[:, 1])
    if b.size < 2 or w.size < 2 or b.size * w.size != len(data):
        raise ValidationError("input must be a full (b, w) lattice as written by gabor transform")
    bgrid = Grid1D.from_range(b[0], b[-1], b.size)
    wgrid = Grid1D.from_range(w[0], w[-1], w.size)
    order = np.lexsort((data[:, 1], data[:, 0]))
    S = (data[order, 2] + 1j * data[order, 3]).reshape(b.size, w.size)
    s = gabor_reconstruct(S, Probe.gaussian(args.sigma), bgrid, wgrid, args.tgrid)
    job.table(["t", "re", "im"], zip(s.grid.points, s.values.real, np.imag(s.values)))


def cmd_gabor_quantize(args, job):
    psi = Probe.gaussian(args.sigma)
    k = quantize(gabor_symbol(args.symbol), psi, args.grid)
    job.extra["kind"] = k.kind
    if k.kind == "multiplier":
        t = args.grid.points
        job.table(["t", "multiplier"], zip(t, np.real(k.multiplier(t))))
    else:
        A = k.to_dense(args.grid)
        t = args.grid.points
        I, J = np.meshgrid(np.arange(t.size), np.arange(t.size), indexing="ij")
        job.table(["t_row", "t_col", "re", "im"],
                  zip(t[I.ravel()], t[J.ravel()], A.real.ravel(), A.imag.ravel()))


def cmd_gabor_portrait(args, job):
    psi = Probe.gaussian(args.sigma)
    f = gabor_symbol(args.symbol)
    b = args.grid.points
    vals = np.array([portrait(f, psi, PhaseSpacePoint(bi, args.w), tol=tolerance()) for bi in b])
    check = gaussian_portrait_check(args.symbol, b, np.full_like(b, args.w), args.sigma)
    job.extra["max_abs_check_error"] = float(np.max(np.abs(vals - check)))
    job.table(["b", "w", "re", "im", "check"],
              zip(b, np.full_like(b, args.w), vals.real, vals.imag, check))


def _matrix_rows(M):
    n = M.shape[0]
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return zip(I.ravel(), J.ravel(), M.real.ravel(), M.imag.ravel())


def cmd_wh_displacement(args, job):
    D = displacement_matrix(args.b, args.w, FockTruncation(args.N))
    job.table(["m", "n", "re", "im"], _matrix_rows(D))


def cmd_wh_wigner(args, job):
    psi = Probe.gaussian(args.sigma)
    B, W = np.meshgrid(args.bgrid.points, args.wgrid.points, indexing="ij")
    vals = np.array([wigner_of_probe(psi, PhaseSpacePoint(b, w)) for b, w in
                     zip(B.ravel(), W.ravel())])
    job.table(["b", "w", "wigner"], zip(B.ravel(), W.ravel(), np.real(vals)))


def cmd_wh_q0(args, job):
    kind, v = parse_spec(args.apod, {"gauss": ("sigma", "tau"), "one": ()})
    pi = Apodization.gaussian(v["sigma"], v["tau"]) if kind == "gauss" else Apodization.constant_one()
    rho = q0_from_apodization(pi, FockTruncation(args.N))
    job.extra.update(rho.positivity())
    job.extra["trace"] = float(np.real(rho.trace))
    job.table(["m", "n", "re", "im"], _matrix_rows(rho.matrix))


def cmd_wh_boltzmann(args, job):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rho = boltzmann_planck(args.theta, FockTruncation(args.N))
    job.extra["warnings"] = [str(c.message) for c in caught]
    d = rho.diagonal()
    job.table(["n", "rho_nn"], zip(range(d.size), np.real(d)))


def cmd_field(args, job):
    op = quantize_field if args.sub == "quantize" else portrait_field
    out = op(field4(args.field), probe4(args.probe))
    if out.poly is None:
        raise NumericalError("result has no polynomial form")
    rows = sorted(out.poly.items())
    job.table(["a0", "a1", "a2", "a3", "coeff"], ([*a, c] for a, c in rows))


def cmd_metric_build(args, job):
    metric = metric_from_args(args)
    pts = points_along(args)
    g = metric.diagonal(pts)
    job.extra["params"] = {k: v for k, v in metric.params.items()}
    job.extra["metric"] = metric.name
    job.table(["x0", "x1", "x2", "x3", "g00", "g11", "g22", "g33"],
              (list(p) + list(gi) for p, gi in zip(pts, g)))


def cmd_metric_scan(args, job):
    tol = tolerance()
    p = radial_probe(args.probe, tol)
    if not 0 < args.rmin < args.rmax:
        raise ValidationError("need 0 < rmin < rmax")
    if args.n < 2:
        raise ValidationError("-n must be at least 2")
    profiles = schwarzschild_profiles(p, args.m)
    radii = np.geomspace(args.rmin, args.rmax, args.n)
    table = profile_table(profiles, radii)
    norm = p.normalization()
    job.extra["normalization"] = norm
    job.extra["flagged"] = int(np.sum(table["flagged"]))
    job.table(["r", "U", "V", "L", "normalization", "flagged"],
              zip(radii, table["U"], table["V"], table["L"], np.full(radii.shape, norm),
                  table["flagged"]))


def cmd_metric_shifted(args, job):
    p = radial_probe(args.probe, tolerance())
    profiles = schwarzschild_profiles(p, args.m)
    root = shifted_radius(profiles)
    umin = profiles.U_min()
    if root is None:
        job.table(["root", "fixed_point_residual", "U_min"], [["none", "", umin]])
    else:
        job.table(["root", "fixed_point_residual", "U_min"],
                  [[root, fixed_point_residual(profiles, root), umin]])
    job.extra["root"] = root


def cmd_curvature_at(args, job):
    metric = metric_from_args(args)
    rep = curvature_at(metric, parse_vector(args.point), args.kappa, args.h)
    job.extra["scalar"] = rep.scalar
    job.extra["derivative_error"] = rep.derivative_error
    rows = ([mu, nu, rep.ricci[mu, nu], rep.einstein[mu, nu], rep.stress_energy[mu, nu]]
            for mu in range(4) for nu in range(4))
    job.table(["mu", "nu", "ricci", "einstein", "T"], rows)


def cmd_curvature_scan(args, job):
    metric = metric_from_args(args)
    pts = points_along(args)
    reports = stress_energy_scan(metric, pts, args.kappa, args.h)
    job.extra["failures"] = [{"index": i, "error": e} for i, e in reports.failures]
    cols = ["x0", "x1", "x2", "x3", "scalar"] + [f"T{i}{j}" for i in range(4) for j in range(i, 4)]
    rows = []
    for p, rep in zip(pts, reports):
        if rep is None:
            rows.append(list(p) + [math.nan] * (len(cols) - 4) + [1])
        else:
            rows.append([rep.as_row()[c] for c in cols] + [0])
    job.table(cols + ["failed"], rows)


# -- parser --------------------------------------------------------------------

def _common(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--name", help="output file stem")


def _metric_args(p, point=False):
    p.add_argument("--metric", required=True, help="catalog name")
    p.add_argument("--param", action="append", help="metric parameter key=value")
    p.add_argument("--regularize", help="gauss:s0=,s1=,s2=,s3=")
    p.add_argument("--mode", choices=("portrait", "operator"), default="portrait")
    if point:
        p.add_argument("--point", required=True, help="x0,x1,x2,x3")
    else:
        p.add_argument("--at", default="0,1,1,0", help="base point x0,x1,x2,x3")
        p.add_argument("--axis", type=int, default=1, help="coordinate varied along --grid")
        p.add_argument("--grid", type=parse_grid, default="0.5:4:8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaborquant", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    top = parser.add_subparsers(dest="group", required=True)

    def add(group, name, func, help_):
        p = group.add_parser(name, help=help_)
        p.set_defaults(func=func)
        _common(p)
        return p

    g = top.add_parser("gabor", help="one-dimensional Gabor analysis and quantization")
    gs = g.add_subparsers(dest="sub", required=True)
    p = add(gs, "transform", cmd_gabor_transform, "Gabor transform of a signal")
    p.add_argument("--sigma", type=positive, default=1.0)
    p.add_argument("--input", help="CSV with columns t, re[, im]")
    p.add_argument("--signal", default="gauss:b=0,w=0,s=1", help="gauss:b=,w=,s=")
    p.add_argument("--tgrid", type=parse_grid, default="-12:12:241")
    p.add_argument("--bgrid", type=parse_grid, default="-10:10:81")
    p.add_argument("--wgrid", type=parse_grid, default="-8:8:65")
    p = add(gs, "reconstruct", cmd_gabor_reconstruct, "inverse Gabor transform")
    p.add_argument("--sigma", type=positive, default=1.0)
    p.add_argument("--input", required=True, help="CSV written by gabor transform")
    p.add_argument("--tgrid", type=parse_grid, default="-6:6:121")
    p = add(gs, "quantize", cmd_gabor_quantize, "operator of a polynomial symbol")
    p.add_argument("--symbol", required=True, choices=sorted(GABOR_SYMBOLS))
    p.add_argument("--sigma", type=positive, default=1.0)
    p.add_argument("--grid", type=parse_grid, default="-6:6:64")
    p = add(gs, "portrait", cmd_gabor_portrait, "semi-classical portrait")
    p.add_argument("--symbol", required=True, choices=sorted(GABOR_SYMBOLS))
    p.add_argument("--sigma", type=positive, default=1.0)
    p.add_argument("--grid", type=parse_grid, default="-5:5:101")
    p.add_argument("--w", type=float, default=0.0, help="fixed frequency")

    w = top.add_parser("wh", help="Weyl-Heisenberg operators in a truncated Fock basis")
    ws = w.add_subparsers(dest="sub", required=True)
    p = add(ws, "displacement", cmd_wh_displacement, "displacement operator matrix")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--w", type=float, required=True)
    p.add_argument("--N", type=int, default=64)
    p = add(ws, "wigner", cmd_wh_wigner, "Wigner function of a Gaussian probe")
    p.add_argument("--sigma", type=positive, default=1.0)
    p.add_argument("--bgrid", type=parse_grid, default="-4:4:41")
    p.add_argument("--wgrid", type=parse_grid, default="-4:4:41")
    p = add(ws, "q0", cmd_wh_q0, "base operator from an apodization")
    p.add_argument("--apod", required=True, help="gauss:sigma=,tau= or one")
    p.add_argument("--N", type=int, default=32)
    p = add(ws, "boltzmann", cmd_wh_boltzmann, "geometric-weight density operator")
    p.add_argument("--theta", type=positive, required=True)
    p.add_argument("--N", type=int, default=64)

    f = top.add_parser("field", help="space-time field regularization")
    fs = f.add_subparsers(dest="sub", required=True)
    for name in ("quantize", "portrait"):
        p = add(fs, name, cmd_field, f"{name} a polynomial field")
        p.add_argument("--field", required=True, help="one, r2, rho2 or coordinate:mu=,power=")
        p.add_argument("--probe", required=True, help="gauss:s0=,s1=,s2=,s3=")

    m = top.add_parser("metric", help="metrics and Schwarzschild regularization")
    ms = m.add_subparsers(dest="sub", required=True)
    p = add(ms, "build", cmd_metric_build, "metric components along a line")
    _metric_args(p)
    p = add(ms, "regularize", cmd_metric_build, "regularized metric components along a line")
    _metric_args(p)
    p = add(ms, "schwarzschild-scan", cmd_metric_scan, "regularized Schwarzschild profiles")
    p.add_argument("--m", type=positive, required=True)
    p.add_argument("--probe", required=True, help="shell:rc=,sr=[,st=1]")
    p.add_argument("--rmin", type=float, default=0.01)
    p.add_argument("--rmax", type=float, default=100.0)
    p.add_argument("-n", type=int, default=200)
    p = add(ms, "shifted-radius", cmd_metric_shifted, "root of the regularized g_00")
    p.add_argument("--m", type=positive, required=True)
    p.add_argument("--probe", required=True, help="shell:rc=,sr=[,st=1]")

    c = top.add_parser("curvature", help="curvature and induced stress-energy")
    cs = c.add_subparsers(dest="sub", required=True)
    p = add(cs, "at", cmd_curvature_at, "tensors at one point")
    _metric_args(p, point=True)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--h", type=positive, default=None)
    p = add(cs, "scan", cmd_curvature_scan, "stress-energy along a line")
    _metric_args(p)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--h", type=positive, default=None)
    return parser


_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def _attach_negative_values(argv):
    """Rewrite ``--opt -5:5:11`` as ``--opt=-5:5:11`` so values may start with '-'."""
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE_VALUE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    job = Job(args, f"{args.group} {args.sub}")
    if args.group == "metric" and args.sub == "regularize" and not args.regularize:
        print("error: metric regularize needs --regularize", file=sys.stderr)
        return 2
    try:
        tolerance()
        args.func(args, job)
        job.write()
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
