"""Experiment drivers: sweeps, timings and tabular output.

Each ``run_*`` function takes an :class:`ExperimentSpec` and returns an
:class:`ExperimentOutput` (named tables plus a JSON-able summary).  Writing
files is separate (:func:`write_outputs`) so results can be inspected in
memory.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .assembly import DualSpec, build_system, reduce_system
from .duals import (
    compact_dual,
    discrete_dual_coeffs,
    discrete_pairing,
    primal_stencil,
    truncate_dual,
)
from .errors import LowOversampling
from .geometry import _as_tuple, parse_domain
from .solvers import solve

# function id -> (dimension or None for any, f(X), default domain)
FUNCTIONS: dict[str, tuple[int | None, Callable, str]] = {
    "exp1d": (1, lambda X: np.exp(X[:, 0]), "interval:0,0.5"),
    "expxy": (2, lambda X: np.exp(X[:, 0] * X[:, 1]), "disk"),
    "expxyz": (3, lambda X: np.exp(X[:, 0] * X[:, 1] * X[:, 2]), "ball"),
    "const": (None, lambda X: np.ones(X.shape[0]), "full:1"),
}


def parse_size(text) -> int | tuple[int, ...]:
    """``"64"`` -> 64 (isotropic), ``"168x224"`` -> (168, 224)."""
    if isinstance(text, (int, np.integer)):
        return int(text)
    if isinstance(text, tuple):
        return tuple(int(v) for v in text)
    parts = str(text).lower().split("x")
    vals = tuple(int(v) for v in parts)
    return vals[0] if len(vals) == 1 else vals


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to rerun an experiment."""

    kind: str
    p: tuple[int, ...] = (3,)
    q: tuple[int, ...] = (2,)
    n: tuple = (64,)
    domain: str | None = None
    function: str = "exp1d"
    dual: str = "compact"
    solver: tuple[str, ...] = ("reduced-az",)
    out: str | None = None
    seed: int = 0
    jobs: int = 1
    raster: str | None = None
    repeats: int = 3

    def __post_init__(self):
        if self.kind not in RUNNERS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.function not in FUNCTIONS:
            raise ValueError(f"unknown function id {self.function!r}; choose from {sorted(FUNCTIONS)}")
        DualSpec.parse(self.dual)
        if self.repeats < 1:
            raise ValueError("repeats must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")

    def resolved_domain(self, strict: bool = True):
        dim, _, default = FUNCTIONS[self.function]
        dom = parse_domain(self.domain or default)
        if strict and dim is not None and dom.dim != dim:
            raise ValueError(f"function {self.function!r} needs a {dim}-D domain, got {dom.dim}-D")
        return dom

    def q_for(self, dim: int) -> tuple[int, ...]:
        if len(self.q) == 1:
            return self.q * dim
        if len(self.q) != dim:
            raise ValueError(f"expected 1 or {dim} oversampling factors, got {len(self.q)}")
        return tuple(self.q)


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


@dataclass
class ExperimentOutput:
    tables: dict[str, Table]
    summary: dict = field(default_factory=dict)
    # tables whose columns hold wall-clock times
    timing_columns: dict[str, list[str]] = field(default_factory=dict)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _basis_size(n, dim) -> tuple[int, ...]:
    n = parse_size(n)
    return _as_tuple(n, dim, "N") if isinstance(n, int) else tuple(n)


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# duals


def dual_table(p: int, q: int, N: int, dual: DualSpec) -> tuple[list[list], float]:
    """Coefficient rows ``(p, q, N, index, value)`` and the pairing residual."""
    if dual.kind == "compact":
        w = compact_dual(p, q, K=dual.K, norm_cap=dual.norm_cap)
        idx, vals = np.arange(-w.K, w.K + 1), w.values
        stencil = w.grid_stencil(N)
    else:
        base = discrete_dual_coeffs(p, q, N)
        if dual.kind == "truncated":
            t = truncate_dual(base, dual.eps)
            idx = np.arange(-t.band_radius, t.band_radius + 1)
            vals, stencil = t.coeffs[idx % N], t.grid_stencil()
        else:
            idx = np.arange(N) - N // 2
            vals, stencil = base.coeffs[idx % N], base.grid_stencil()
    P = discrete_pairing(primal_stencil(p, q, N), stencil)
    P[0] -= 1.0
    rows = [[p, q, N, int(k), float(v)] for k, v in zip(idx, vals)]
    return rows, float(np.max(np.abs(P)))


def run_duals(spec: ExperimentSpec) -> ExperimentOutput:
    dual = DualSpec.parse(spec.dual)
    table = Table(["p", "q", "N", "index", "value"])
    checks = Table(["p", "q", "N", "pairing_residual"])
    for p in spec.p:
        for q in spec.q:
            for n in spec.n:
                N = parse_size(n)
                if not isinstance(N, int):
                    raise ValueError("dual dumps are one-dimensional; pass scalar sizes")
                rows, res = dual_table(p, q, N, dual)
                table.rows += rows
                checks.rows.append([p, q, N, res])
    return ExperimentOutput(
        {"duals": table, "pairing": checks},
        {"dual": str(dual), "max_pairing_residual": max(r[-1] for r in checks.rows)},
    )


# --------------------------------------------------------------------------
# spectrum


def run_spectrum(spec: ExperimentSpec) -> ExperimentOutput:
    dom = spec.resolved_domain(strict=False)
    dual = DualSpec.parse(spec.dual)
    sv = Table(["N", "index", "sigma", "sigma_rel"])
    sparsity = Table(["N", "row", "col", "log10_abs"])
    ranks = Table(["N", "boundary_size", "block_rows", "rank_1e-10", "plateau_start"])
    p = spec.p[0]
    for n in spec.n:
        N = _basis_size(n, dom.dim)
        Ntot = math.prod(N)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LowOversampling)
            system = build_system(dom, p, N, spec.q_for(dom.dim), dual)
        blk = reduce_system(system)
        s = np.linalg.svd(blk.block, compute_uv=False) if blk.block.size else np.zeros(0)
        s = np.concatenate([s, np.zeros(blk.columns.size - s.size)])
        smax = s[0] if s.size else 0.0
        rel = s / smax if smax > 0 else s
        sv.rows += [[Ntot, i, float(v), float(r)] for i, (v, r) in enumerate(zip(s, rel))]
        below = np.flatnonzero(rel < 1e-12)
        ranks.rows.append([Ntot, int(blk.columns.size), int(blk.rows.size), int(np.sum(rel > 1e-10)),
                           int(below[0]) if below.size else int(s.size)])
        if blk.block.size:
            rr, cc = np.nonzero(blk.block)
            vals = np.log10(np.abs(blk.block[rr, cc]))
            sparsity.rows += [[Ntot, int(blk.rows[i]), int(blk.columns[j]), float(v)]
                              for i, j, v in zip(rr, cc, vals)]
    return ExperimentOutput({"spectrum": sv, "sparsity": sparsity, "rank": ranks}, {"dual": str(dual)})


# --------------------------------------------------------------------------
# fitting sweeps


def _fit_once(args):
    dom_text, fn_id, p, q, N, dual, solver = args
    dom = parse_domain(dom_text)
    f = FUNCTIONS[fn_id][1]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LowOversampling)
        t0 = time.perf_counter()
        system = build_system(dom, p, N, q, dual)
        b = f(system.grid.coordinates())
        res = solve(system, b, solver)
        t1 = time.perf_counter()
    return system.grid.M, res, t1 - t0


def run_convergence(spec: ExperimentSpec) -> ExperimentOutput:
    dom = spec.resolved_domain()
    dom_text = spec.domain or FUNCTIONS[spec.function][2]
    q = spec.q_for(dom.dim)
    solver = spec.solver[0]
    table = Table(["p", "N", "M", "residual_norm", "relative_residual", "coefficient_norm", "time"])
    slopes = Table(["p", "quantity", "slope"])
    jobs = [(dom_text, spec.function, p, q, _basis_size(n, dom.dim), spec.dual, solver)
            for p in spec.p for n in spec.n]
    results = _map(_fit_once, jobs, spec.jobs)
    for job, (M, res, dt) in zip(jobs, results):
        table.rows.append([job[2], math.prod(job[4]), M, res.residual_norm, res.relative_residual,
                           res.coefficient_norm, dt])
    summary = {}
    for p in spec.p:
        sel = [r for r in table.rows if r[0] == p]
        s = loglog_slope([r[1] for r in sel], [r[4] for r in sel])
        slopes.rows.append([p, "relative_residual", s])
        summary[f"slope_p{p}"] = s
    return ExperimentOutput({"convergence": table, "slopes": slopes}, summary,
                            {"convergence": ["time"]})


def time_fit(dom, p, N, q, dual, solver, f, repeats=3) -> tuple[float, object, object]:
    """Warm-up run then the median of `repeats` timed assemble-and-solve runs."""
    def once():
        t0 = time.perf_counter()
        system = build_system(dom, p, N, q, dual)
        res = solve(system, f(system.grid.coordinates()), solver)
        return time.perf_counter() - t0, system, res

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LowOversampling)
        once()
        runs = [once() for _ in range(repeats)]
    times = [r[0] for r in runs]
    return float(np.median(times)), runs[-1][1], runs[-1][2]


def run_scaling(spec: ExperimentSpec) -> ExperimentOutput:
    dom = spec.resolved_domain()
    q = spec.q_for(dom.dim)
    f = FUNCTIONS[spec.function][1]
    table = Table(["solver", "N", "M", "time", "block_rows", "block_cols", "nonzeros", "relative_residual"])
    slopes = Table(["solver", "slope"])
    p = spec.p[0]
    summary = {}
    # timings run sequentially: a pool would perturb the clock
    for solver in spec.solver:
        for n in spec.n:
            N = _basis_size(n, dom.dim)
            t, system, res = time_fit(dom, p, N, q, spec.dual, solver, f, spec.repeats)
            dims = res.diagnostics.get("block_dims", (0, 0))
            table.rows.append([solver, math.prod(N), system.grid.M, t, int(dims[0]), int(dims[1]),
                               int(res.diagnostics.get("nonzero_count", system.A.nnz)),
                               res.relative_residual])
        sel = [r for r in table.rows if r[0] == solver]
        s = loglog_slope([r[1] for r in sel], [r[3] for r in sel])
        slopes.rows.append([solver, s])
        summary[f"slope_{solver}"] = s
    return ExperimentOutput({"scaling": table, "slopes": slopes}, summary,
                            {"scaling": ["time"], "slopes": ["slope"]})


def run_fit(spec: ExperimentSpec) -> ExperimentOutput:
    """Single fit; also checks the AZ splitting identity at a seeded random ``x1``."""
    dom = spec.resolved_domain()
    q = spec.q_for(dom.dim)
    f = FUNCTIONS[spec.function][1]
    rng = np.random.default_rng(spec.seed)
    table = Table(["solver", "N", "M", "residual_norm", "relative_residual", "coefficient_norm",
                   "numerical_rank", "az_identity_error"])
    coeffs = Table(["solver", "N", "index", "coefficient"])
    p = spec.p[0]
    for n in spec.n:
        N = _basis_size(n, dom.dim)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LowOversampling)
            system = build_system(dom, p, N, q, spec.dual)
        b = f(system.grid.coordinates())
        x1 = rng.standard_normal(system.A.shape[1])
        x = x1 + system.apply_Zstar(b - system.apply_A(x1))
        lhs = system.apply_A(x) - b
        r1 = system.apply_A(x1) - b
        rhs = r1 - system.apply_A(system.apply_Zstar(r1))
        ident = float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1e-300))
        for solver in spec.solver:
            res = solve(system, b, solver)
            table.rows.append([solver, math.prod(N), system.grid.M, res.residual_norm, res.relative_residual,
                               res.coefficient_norm, int(res.diagnostics.get("numerical_rank", -1)), ident])
            coeffs.rows += [[solver, math.prod(N), i, float(v)] for i, v in enumerate(res.x)]
    return ExperimentOutput({"fit": table, "coefficients": coeffs}, {})


def run_raster(spec: ExperimentSpec) -> ExperimentOutput:
    from .raster import fit_raster, read_esri_ascii, synthetic_raster

    data = synthetic_raster() if spec.raster in (None, "synthetic") else read_esri_ascii(spec.raster)
    N = parse_size(spec.n[0]) if spec.n else None
    p = spec.p if len(spec.p) == 2 else spec.p * 2
    t0 = time.perf_counter()
    fit = fit_raster(data, p=p, q=spec.q_for(2), N=N, solver=spec.solver[0], dual=spec.dual)
    dt = time.perf_counter() - t0
    err = Table(["ix", "iy", "value", "fitted", "abs_error", "rel_error"])
    for row in fit.error_table():
        err.rows.append([int(row[0]), int(row[1])] + [float(v) for v in row[2:]])
    d = fit.result.diagnostics
    summary = {
        "relative_residual": fit.relative_residual,
        "N": list(fit.grid.N),
        "M": fit.grid.M,
        "block_dims": list(d.get("block_dims", ())),
        "numerical_rank": d.get("numerical_rank"),
        "time": dt,
    }
    return ExperimentOutput({"errors": err}, summary)


RUNNERS = {
    "duals": run_duals,
    "spectrum": run_spectrum,
    "convergence": run_convergence,
    "scaling": run_scaling,
    "fit": run_fit,
    "raster": run_raster,
}


def run(spec: ExperimentSpec) -> ExperimentOutput:
    return RUNNERS[spec.kind](spec)


def write_outputs(spec: ExperimentSpec, output: ExperimentOutput, out_dir, figures: bool = True) -> list[Path]:
    """Write CSV tables, a JSON manifest and (optionally) SVG figures."""
    from .plotting import render_figures

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in output.tables.items():
        path = out / f"{spec.kind}_{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(table.to_csv())
        written.append(path)
    if figures:
        written += render_figures(spec.kind, out)
    manifest = {
        "spec": asdict(spec),
        "summary": output.summary,
        "timing_columns": output.timing_columns,
        "outputs": sorted(p.name for p in written),
        "versions": {
            "splinext": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    mpath = out / f"{spec.kind}_manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    written.append(mpath)
    return written


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (tuple, np.ndarray)):
        return list(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")
