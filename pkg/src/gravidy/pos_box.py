"""Implicit solvers on the nonnegative orthant and the box.

One outer step solves the nonlinear system

    F(zeta) = zeta - zeta_k + eta * grad f(g(zeta)) = 0,

the backward-Euler step of the reparameterized flow in the parameter
variable zeta (u for the orthant maps, w for the sigmoid box map).  F has
Jacobian J = I + eta * H(g(zeta)) diag(g'(zeta)), whose eigenvalues have
real part >= 1 whenever H is PSD, so the step is well posed at any eta > 0.
Two inner solvers are provided: a modified Gauss-Newton iteration with
Levenberg damping (robust default) and a damped Newton iteration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import CAP_HIT, CONVERGED, EXP_CLAMP, ReparamMap, SolverConfig, Trace
from .diagnostics import feasibility_defect, kkt_residual
from .projections import Projection

# Damping bounds for the Levenberg loop; outside these the step is either a
# pure Gauss-Newton step or vanishingly small.
_LM_MIN = 1e-12
_LM_MAX = 1e12
_ALPHA_MIN = 1e-12


def _clamp(zeta: np.ndarray) -> np.ndarray:
    return np.clip(zeta, -EXP_CLAMP, EXP_CLAMP)


@dataclass
class ImplicitStep:
    """One backward-Euler step problem: data plus residual/Jacobian oracles.

    Coordinates pinned at the parameter clamp with a residual pushing
    further outward (and a flattened map direction, so the trial cannot
    move) have no root inside the clamp; their residual component is
    projected out and their Jacobian row replaced by an identity row.
    These coordinates sit on the face x = g(+-clamp) to machine precision
    and would otherwise poison the least-squares inner solve.
    """

    prob: object
    rmap: ReparamMap
    zeta_k: np.ndarray
    eta: float

    def pinned_mask(self, zeta: np.ndarray, F: np.ndarray) -> np.ndarray:
        flat = np.abs(self.rmap.deriv(zeta)) <= 1e-12
        lo = (zeta <= -(EXP_CLAMP - 1e-9)) & (F > 0)
        hi = (zeta >= (EXP_CLAMP - 1e-9)) & (F < 0)
        return (lo | hi) & flat

    def residual(self, zeta: np.ndarray) -> tuple[np.ndarray, float]:
        x = self.rmap.apply(zeta)
        F = zeta - self.zeta_k + self.eta * self.prob.gradient(x)
        pinned = self.pinned_mask(zeta, F)
        if pinned.any():
            F = np.where(pinned, 0.0, F)
        return F, float(np.linalg.norm(F))

    def jacobian(self, zeta: np.ndarray) -> np.ndarray:
        x = self.rmap.apply(zeta)
        H = self.prob.hessian(x)
        J = self.eta * (H * self.rmap.deriv(zeta)[np.newaxis, :])
        J[np.diag_indices_from(J)] += 1.0
        F = zeta - self.zeta_k + self.eta * self.prob.gradient(x)
        pinned = self.pinned_mask(zeta, F)
        if pinned.any():
            J[pinned, :] = 0.0
            J[pinned, pinned] = 1.0
        return J


def mgn_step(J: np.ndarray, F: np.ndarray, damping: float) -> np.ndarray:
    """Levenberg step: solve (J^T J + damping I) h = -J^T F by Cholesky."""
    A = J.T @ J
    A[np.diag_indices_from(A)] += damping
    c, low = scipy.linalg.cho_factor(A, lower=True)
    return scipy.linalg.cho_solve((c, low), -J.T @ F)


def mgn_inner_solve(step: ImplicitStep, config: SolverConfig) -> tuple[np.ndarray, int]:
    """Modified Gauss-Newton with adaptive Levenberg damping.

    Trials that reduce ||F|| are accepted and halve the damping; rejected
    trials double it.  ||F|| is strictly decreasing across accepted steps.
    """
    zeta = np.array(step.zeta_k, dtype=float, copy=True)
    F, nF = step.residual(zeta)
    if nF <= config.inner_tol:
        return zeta, 0
    J = step.jacobian(zeta)
    M = config.lm_damping
    if M is None:
        M = 1e-3 * (1.0 + float(np.max(np.abs(J.T @ F))))
    iters = 0
    for _ in range(config.max_inner):
        iters += 1
        try:
            h = mgn_step(J, F, M)
        except np.linalg.LinAlgError:
            M = min(M * 2.0, _LM_MAX)
            continue
        trial = _clamp(zeta + h)
        F_t, nF_t = step.residual(trial)
        if nF_t < nF:
            zeta, F, nF = trial, F_t, nF_t
            M = max(M / 2.0, _LM_MIN)
            if nF <= config.inner_tol:
                break
            J = step.jacobian(zeta)
        else:
            M = min(M * 2.0, _LM_MAX)
    return zeta, iters


def newton_inner_solve(step: ImplicitStep, config: SolverConfig) -> tuple[np.ndarray, int]:
    """Damped Newton on F: solve J h = -F, backtrack on ||F||.

    A singular Jacobian or a fully stalled line search falls back to a single
    lightly damped Gauss-Newton step; if that fails to decrease the residual
    the current best iterate is returned.
    """
    zeta = np.array(step.zeta_k, dtype=float, copy=True)
    F, nF = step.residual(zeta)
    iters = 0
    for _ in range(config.max_inner):
        if nF <= config.inner_tol:
            break
        iters += 1
        J = step.jacobian(zeta)
        try:
            h = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            h = mgn_step(J, F, 1e-6)
        alpha = 1.0
        accepted = False
        while alpha > _ALPHA_MIN:
            trial = _clamp(zeta + alpha * h)
            F_t, nF_t = step.residual(trial)
            if nF_t <= (1.0 - config.armijo_c * alpha) * nF:
                zeta, F, nF = trial, F_t, nF_t
                accepted = True
                break
            alpha *= config.backtrack_beta
        if not accepted:
            trial = _clamp(zeta + mgn_step(J, F, 1e-6))
            F_t, nF_t = step.residual(trial)
            if nF_t < nF:
                zeta, F, nF = trial, F_t, nF_t
            else:
                break
    return zeta, iters


_INNER = {"mgn": mgn_inner_solve, "newton": newton_inner_solve}


def _drive(prob, rmap, zeta0, proj, target, config, inner):
    if inner not in _INNER:
        raise ValueError(f"unknown inner solver {inner!r}")
    inner_solve = _INNER[inner]
    lo, hi = (rmap.lo, rmap.hi) if rmap.kind == "sigmoid_box" else (-1.0, 1.0)
    t0 = time.perf_counter()
    zeta = _clamp(np.array(zeta0, dtype=float, copy=True))
    trace = Trace()
    inner_used = 0
    status = CAP_HIT
    x = rmap.apply(zeta)
    for k in range(config.max_outer + 1):
        x = rmap.apply(zeta)
        f = prob.value(x)
        g = prob.gradient(x)
        kkt = kkt_residual(x, g, proj)
        clamped = int(np.count_nonzero(np.abs(zeta) >= EXP_CLAMP - 1e-9))
        trace.append(
            f, kkt, feasibility_defect(x, target, lo, hi), inner_used,
            time.perf_counter() - t0, clamped,
        )
        if kkt <= config.kkt_tol:
            status = CONVERGED
            break
        if k == config.max_outer:
            break
        if config.time_budget is not None and trace.seconds[-1] > config.time_budget:
            break
        step = ImplicitStep(prob, rmap, zeta, config.eta)
        zeta, inner_used = inner_solve(step, config)
    trace.status = status
    return x, trace


def solve_pos(prob, x0, config: SolverConfig, inner: str = "mgn", map_kind: str = "exp"):
    """Minimize prob over the nonnegative orthant from strictly positive x0."""
    if map_kind not in ("exp", "logcosh"):
        raise ValueError(f"orthant map must be exp or logcosh, got {map_kind!r}")
    rmap = ReparamMap.exp() if map_kind == "exp" else ReparamMap.logcosh()
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 <= 0):
        raise ValueError("x0 must be strictly positive")
    return _drive(
        prob, rmap, rmap.invert(x0), Projection("orthant"), "orthant", config, inner
    )


def solve_box(prob, x0, lo: float, hi: float, config: SolverConfig, inner: str = "mgn"):
    """Minimize prob over the box [lo, hi]^n from strictly interior x0."""
    rmap = ReparamMap.sigmoid_box(lo, hi)
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 <= lo) or np.any(x0 >= hi):
        raise ValueError("x0 must be strictly inside the box")
    return _drive(
        prob, rmap, rmap.invert(x0), Projection("box", lo=lo, hi=hi), "box", config, inner
    )
