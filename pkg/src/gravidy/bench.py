"""Benchmark harness: problem generators, trial runner, CSV/JSON emitters.

Given an experiment spec (geometry, method, sizes, eta, seeds), runs one
trial per seed, concurrently up to GRAVIDY_THREADS workers, and emits

  * per-iteration records in a fixed 9-column CSV schema, floats printed
    with 17 significant digits so parsing round-trips bit-exactly;
  * a summary JSON with per-method median final KKT residual and median
    time-to-tolerance (first cumulative second at which kkt <= 1e-8).

Everything except the timing columns is deterministic given (spec, seed):
generators draw from PCG64 streams split off SeedSequence(seed), one child
stream per purpose.
"""

from __future__ import annotations

import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .baselines import (
    entropic_mirror_descent,
    multiplicative_updates,
    pgd_nesterov,
    projected_bb,
    rgd_qr,
    wen_yin,
)
from .core import LeastSquaresProblem, SolverConfig, StiefelQuadraticProblem, Trace
from .pos_box import solve_box, solve_pos
from .projections import Projection
from .simplex import solve_simplex
from .stiefel import retract_qr, solve_stiefel

CSV_HEADER = "geometry,method,seed,outer_iter,f_value,kkt,feasibility,cum_seconds,inner_iters"

RNG_SCHEME = "PCG64 via numpy default_rng; SeedSequence(seed).spawn, one child stream per purpose"

BOX_LO, BOX_HI = -1.0, 1.0

METHODS = {
    "pos": {"gravidy": ("mgn", "newton"), "pgd_nesterov": (), "projected_bb": (), "mu": ()},
    "simplex": {
        "gravidy": ("newton_kkt", "fixed_point", "reduced_mgn"),
        "pgd_nesterov": (),
        "mirror_descent": (),
    },
    "box": {"gravidy": ("mgn", "newton"), "pgd_nesterov": (), "projected_bb": ()},
    "stiefel": {"gravidy": ("nk_gmres", "dense_nr"), "wen_yin": (), "rgd_qr": ()},
}

DEFAULT_INNER = {"pos": "mgn", "simplex": "newton_kkt", "box": "mgn", "stiefel": "nk_gmres"}


def _streams(seed: int, count: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def gen_nnls(n: int, seed: int, sparsity: float = 0.2, m: int | None = None):
    """Nonnegative least squares with a consistent sparse solution.

    A = |N(0,1)| + 0.05 I (elementwise absolute value), x_star has roughly
    `sparsity` fraction of nonzero coordinates, b = A x_star, x0 strictly
    positive.  Returns (problem, x_star, x0).
    """
    m = n if m is None else m
    r_mat, r_sol, r_init = _streams(seed, 3)
    A = np.abs(r_mat.standard_normal((m, n)))
    A[: min(m, n), : min(m, n)] += 0.05 * np.eye(min(m, n))
    x_star = np.zeros(n)
    mask = r_sol.random(n) < sparsity
    if not mask.any():
        mask[int(r_sol.integers(n))] = True
    x_star[mask] = np.abs(r_sol.standard_normal(int(mask.sum())))
    b = A @ x_star
    x0 = r_init.uniform(0.5, 1.5, n)
    return LeastSquaresProblem(A, b), x_star, x0


def gen_simplex(n: int, seed: int, m: int | None = None):
    """Simplex-constrained least squares; x_star ~ Dirichlet(1), b = A x_star."""
    m = n if m is None else m
    r_mat, r_sol, r_init = _streams(seed, 3)
    A = r_mat.standard_normal((m, n))
    x_star = r_sol.dirichlet(np.ones(n))
    b = A @ x_star
    x0 = 1.0 / n + 0.1 * r_init.random(n) / n
    x0 = x0 / x0.sum()
    return LeastSquaresProblem(A, b), x_star, x0


def gen_box(n: int, seed: int, active_frac: float = 0.3, m: int | None = None):
    """Box-constrained least squares on [-1, 1]^n with ~active_frac bound-active
    coordinates in x_star; x0 = 0 (interior).  Returns (problem, x_star, x0)."""
    m = n if m is None else m
    r_mat, r_sol, _ = _streams(seed, 3)
    A = r_mat.standard_normal((m, n))
    x_star = r_sol.uniform(-0.9, 0.9, n)
    active = r_sol.random(n) < active_frac
    x_star[active] = np.where(r_sol.random(int(active.sum())) < 0.5, BOX_LO, BOX_HI)
    b = A @ x_star
    x0 = np.zeros(n)
    return LeastSquaresProblem(A, b), x_star, x0


def gen_stiefel(n: int, p: int, cond_target: float, seed: int):
    """Columnwise SPD quadratic on St(n, p) plus a feasible random start.

    Each block is V diag(d) V^T with Haar-ish V and log-uniform spectrum d
    pinned to [1, cond_target], so kappa(Q_j) = cond_target exactly.
    Returns (problem, X0)."""
    r_mat, r_init = _streams(seed, 2)
    blocks = []
    for _ in range(p):
        V = retract_qr(r_mat.standard_normal((n, n)))
        d = np.sort(np.exp(r_mat.uniform(0.0, np.log(cond_target), n)))
        d[0], d[-1] = 1.0, cond_target
        Q = (V * d[np.newaxis, :]) @ V.T
        blocks.append(0.5 * (Q + Q.T))
    X0 = retract_qr(r_init.standard_normal((n, p)))
    return StiefelQuadraticProblem(blocks), X0


@dataclass(frozen=True)
class BenchRecord:
    geometry: str
    method: str
    seed: int
    outer_iter: int
    f_value: float
    kkt: float
    feasibility: float
    cum_seconds: float
    inner_iters: int


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one benchmark sweep of a single method."""

    geometry: str
    method: str
    inner: str | None = None
    n: int = 40
    m: int | None = None
    p: int = 2
    eta: float = 100.0
    seeds: tuple[int, ...] = tuple(range(10))
    max_outer: int = 400
    kkt_tol: float = 1e-8
    cond: float = 100.0
    sparsity: float = 0.2
    active_frac: float = 0.3
    trace_every: int = 1
    time_budget: float | None = None

    def __post_init__(self):
        if self.geometry not in METHODS:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        table = METHODS[self.geometry]
        if self.method not in table:
            raise ValueError(
                f"method {self.method!r} not available on {self.geometry!r}; "
                f"choose from {sorted(table)}"
            )
        inners = table[self.method]
        if self.inner is not None and self.inner not in inners:
            raise ValueError(
                f"inner {self.inner!r} not available for {self.method!r}; "
                f"choose from {list(inners)}"
            )
        if self.n < 1 or self.p < 1 or (self.m is not None and self.m < 1):
            raise ValueError("sizes must be positive")
        if self.eta <= 0 or self.kkt_tol <= 0 or self.cond < 1:
            raise ValueError("eta and kkt_tol must be positive, cond >= 1")
        if not self.seeds:
            raise ValueError("at least one seed")
        if self.trace_every < 1 or self.max_outer < 1:
            raise ValueError("trace_every and max_outer must be >= 1")
        if not 0.0 <= self.sparsity <= 1.0 or not 0.0 <= self.active_frac <= 1.0:
            raise ValueError("fractions must lie in [0, 1]")

    @property
    def method_label(self) -> str:
        if METHODS[self.geometry][self.method]:
            return f"{self.method}:{self.inner or DEFAULT_INNER[self.geometry]}"
        return self.method


def run_trial(spec: ExperimentSpec, seed: int) -> tuple[list[BenchRecord], str]:
    """Run one (method, seed) trial; returns (records, terminal status)."""
    cfg = SolverConfig(
        eta=spec.eta,
        max_outer=spec.max_outer,
        kkt_tol=spec.kkt_tol,
        time_budget=spec.time_budget,
    )
    inner = spec.inner or DEFAULT_INNER[spec.geometry]
    g = spec.geometry
    if g == "pos":
        prob, _, x0 = gen_nnls(spec.n, seed, spec.sparsity, spec.m)
        if spec.method == "gravidy":
            _, trace = solve_pos(prob, x0, cfg, inner=inner)
        elif spec.method == "pgd_nesterov":
            _, trace = pgd_nesterov(prob, Projection("orthant"), x0, cfg)
        elif spec.method == "projected_bb":
            _, trace = projected_bb(prob, Projection("orthant"), x0, cfg)
        else:
            _, trace = multiplicative_updates(prob, x0, cfg)
    elif g == "simplex":
        prob, _, x0 = gen_simplex(spec.n, seed, spec.m)
        if spec.method == "gravidy":
            _, trace = solve_simplex(prob, x0, cfg, inner=inner)
        elif spec.method == "pgd_nesterov":
            _, trace = pgd_nesterov(prob, Projection("simplex"), x0, cfg)
        else:
            _, trace = entropic_mirror_descent(prob, x0, cfg)
    elif g == "box":
        prob, _, x0 = gen_box(spec.n, seed, spec.active_frac, spec.m)
        proj = Projection("box", lo=BOX_LO, hi=BOX_HI)
        if spec.method == "gravidy":
            _, trace = solve_box(prob, x0, BOX_LO, BOX_HI, cfg, inner=inner)
        elif spec.method == "pgd_nesterov":
            _, trace = pgd_nesterov(prob, proj, x0, cfg)
        else:
            _, trace = projected_bb(prob, proj, x0, cfg)
    else:
        prob, X0 = gen_stiefel(spec.n, spec.p, spec.cond, seed)
        if spec.method == "gravidy":
            _, trace = solve_stiefel(prob, X0, cfg, inner=inner)
        elif spec.method == "wen_yin":
            _, trace = wen_yin(prob, X0, cfg)
        else:
            _, trace = rgd_qr(prob, X0, cfg)
    return _trace_records(spec, seed, trace), trace.status


def _trace_records(spec: ExperimentSpec, seed: int, trace: Trace) -> list[BenchRecord]:
    last = len(trace) - 1
    rows = []
    for k in range(len(trace)):
        if k % spec.trace_every and k != last:
            continue
        rows.append(
            BenchRecord(
                geometry=spec.geometry,
                method=spec.method_label,
                seed=seed,
                outer_iter=k,
                f_value=trace.f_values[k],
                kkt=trace.kkt[k],
                feasibility=trace.feasibility[k],
                cum_seconds=trace.seconds[k],
                inner_iters=trace.inner_iters[k],
            )
        )
    return rows


def worker_count() -> int:
    env = os.environ.get("GRAVIDY_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def run_experiment(spec: ExperimentSpec):
    """Run all seeds of a spec; returns (records, summary).

    Trials run concurrently up to worker_count() threads; records are
    gathered and sorted by (method, seed, outer_iter) by a single writer so
    output ordering is deterministic.  A failed trial is recorded in the
    summary's failures list instead of aborting the sweep.
    """
    results: dict[int, list[BenchRecord]] = {}
    statuses: dict[int, str] = {}
    failures: list[dict] = []

    workers = min(worker_count(), len(spec.seeds))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(run_trial, spec, s): s for s in spec.seeds}
        for fut, seed in futures.items():
            try:
                rows, status = fut.result()
                results[seed] = rows
                statuses[seed] = status
            except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                failures.append(
                    {"method": spec.method_label, "seed": seed, "error": str(exc)}
                )
    records = [r for seed in sorted(results) for r in results[seed]]
    records.sort(key=lambda r: (r.method, r.seed, r.outer_iter))
    summary = summarize(records, kkt_tol=spec.kkt_tol)
    summary["spec"] = asdict(spec)
    summary["rng"] = RNG_SCHEME
    summary["statuses"] = {str(seed): statuses[seed] for seed in sorted(statuses)}
    summary["failures"] = failures
    return records, summary


def time_to_tolerance(rows: list[BenchRecord], tol: float = 1e-8) -> float | None:
    """First cumulative second at which kkt <= tol, else None."""
    for r in rows:
        if r.kkt <= tol:
            return r.cum_seconds
    return None


def summarize(records: list[BenchRecord], kkt_tol: float = 1e-8) -> dict:
    """Per-method medians over seeds: final KKT and time-to-tolerance."""
    by_method: dict[str, dict[int, list[BenchRecord]]] = {}
    for r in records:
        by_method.setdefault(r.method, {}).setdefault(r.seed, []).append(r)
    methods = {}
    for method, seeds in sorted(by_method.items()):
        finals = []
        ttts = []
        for seed in sorted(seeds):
            rows = sorted(seeds[seed], key=lambda r: r.outer_iter)
            finals.append(rows[-1].kkt)
            t = time_to_tolerance(rows, kkt_tol)
            if t is not None:
                ttts.append(t)
        methods[method] = {
            "median_final_kkt": statistics.median(finals),
            "median_time_to_tol": statistics.median(ttts) if ttts else None,
            "n_seeds": len(seeds),
            "n_reached_tol": len(ttts),
        }
    return {"kkt_tol": kkt_tol, "methods": methods}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_csv(records: list[BenchRecord]) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.geometry},{r.method},{r.seed},{r.outer_iter},"
            f"{_fmt(r.f_value)},{_fmt(r.kkt)},{_fmt(r.feasibility)},"
            f"{_fmt(r.cum_seconds)},{r.inner_iters}"
        )
    return "\n".join(lines) + "\n"


def write_csv(records: list[BenchRecord], path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_csv(records))


def parse_csv(text: str) -> list[BenchRecord]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"bad header; expected {CSV_HEADER!r}")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 9:
            raise ValueError(f"bad row {ln!r}")
        out.append(
            BenchRecord(
                geometry=parts[0],
                method=parts[1],
                seed=int(parts[2]),
                outer_iter=int(parts[3]),
                f_value=float(parts[4]),
                kkt=float(parts[5]),
                feasibility=float(parts[6]),
                cum_seconds=float(parts[7]),
                inner_iters=int(parts[8]),
            )
        )
    return out
