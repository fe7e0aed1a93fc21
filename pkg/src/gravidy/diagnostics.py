"""Solver-independent optimality and convergence diagnostics.

The scalar KKT residual used for outer-loop termination everywhere is the
norm of the projected-gradient displacement ||x - P_C(x - grad f(x))||; it
vanishes exactly at first-order stationary points of min f over C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CONVERGED, Trace
from .projections import Projection


def kkt_residual(x: np.ndarray, grad: np.ndarray, proj: Projection) -> float:
    return float(np.linalg.norm(x - proj(x - grad)))


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def stiefel_riemannian_grad(G: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Tangent-space gradient G - X sym(X^T G) from the Euclidean gradient G."""
    return G - X @ sym(X.T @ G)


def stiefel_feasibility(X: np.ndarray) -> float:
    p = X.shape[1]
    return float(np.linalg.norm(X.T @ X - np.eye(p)))


def stiefel_kkt(X: np.ndarray, G: np.ndarray) -> tuple[float, float]:
    """(Riemannian gradient norm, orthonormality defect) at X."""
    return (
        float(np.linalg.norm(stiefel_riemannian_grad(G, X))),
        stiefel_feasibility(X),
    )


def feasibility_defect(x: np.ndarray, target: str, lo: float = -1.0, hi: float = 1.0) -> float:
    """Worst constraint violation of x for the given vector geometry."""
    x = np.asarray(x, dtype=float)
    if target == "orthant":
        return float(max(0.0, -x.min()))
    if target == "box":
        return float(max(0.0, (lo - x).max(), (x - hi).max()))
    if target == "simplex":
        return float(max(abs(x.sum() - 1.0), max(0.0, -x.min())))
    raise ValueError(f"unknown target {target!r}")


# Gaps this small are dominated by floating-point noise and excluded from the
# contraction fit; the estimate needs at least this many usable iterations.
_GAP_FLOOR = 1e-13
_GAP_NOISE = 1e-14
_MIN_TAIL_POINTS = 10


def estimate_contraction(f_values, f_star: float) -> float | None:
    """Geometric-mean ratio of successive objective gaps over the linear tail.

    The tail is the last 50% of iterations whose gap exceeds 1e-13.  Returns
    None when fewer than 10 iterations have gaps above noise level, or when
    the tail has no consecutive pair to form a ratio.
    """
    gaps = np.asarray(f_values, dtype=float) - float(f_star)
    usable = np.nonzero(gaps > _GAP_NOISE)[0]
    if usable.size < _MIN_TAIL_POINTS:
        return None
    eligible = np.nonzero(gaps > _GAP_FLOOR)[0]
    if eligible.size < 2:
        return None
    tail = eligible[eligible.size // 2 :]
    logs = [
        math.log(gaps[i + 1] / gaps[i])
        for i, j in zip(tail[:-1], tail[1:])
        if j == i + 1
    ]
    if not logs:
        return None
    return float(math.exp(sum(logs) / len(logs)))


def verify_descent(f_values, tol: float = 1e-10) -> tuple[bool, int | None]:
    """Check f is nonincreasing up to tol; returns (ok, first violation index)."""
    f = np.asarray(f_values, dtype=float)
    bad = np.nonzero(f[1:] > f[:-1] + tol)[0]
    if bad.size == 0:
        return True, None
    return False, int(bad[0])


@dataclass(frozen=True)
class ConvergenceReport:
    """Summary of a finished solve, built from its trace."""

    status: str
    iterations: int
    final_f: float
    final_kkt: float
    final_feasibility: float
    seconds: float
    contraction: float | None = None


def make_report(trace: Trace, f_star: float | None = None) -> ConvergenceReport:
    if len(trace) == 0:
        raise ValueError("empty trace")
    contraction = None
    if f_star is not None:
        contraction = estimate_contraction(trace.f_values, f_star)
    return ConvergenceReport(
        status=trace.status,
        iterations=len(trace) - 1,
        final_f=trace.f_values[-1],
        final_kkt=trace.kkt[-1],
        final_feasibility=trace.feasibility[-1],
        seconds=trace.seconds[-1],
        contraction=contraction,
    )
