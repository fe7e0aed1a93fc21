"""Reference first-order methods the implicit solvers are benchmarked against.

Vector domains: projected gradient with Nesterov momentum (extrapolation
clipped back to the feasible set), projected Barzilai-Borwein with a
nonmonotone line search, Lee-Seung multiplicative updates for nonnegative
least squares, and entropic mirror descent on the simplex.  Stiefel domain:
feasible Cayley curvilinear search (BB step, monotone Armijo) and Riemannian
gradient descent with QR retraction.

Every method records the same trace schema as the implicit solvers and
produces feasible iterates at every outer iteration.
"""

from __future__ import annotations

import math
import time
from collections import deque

import numpy as np

from .core import CAP_HIT, CONVERGED, LeastSquaresProblem, SolverConfig, Trace
from .diagnostics import (
    feasibility_defect,
    kkt_residual,
    stiefel_feasibility,
    stiefel_riemannian_grad,
)
from .projections import Projection
from .stiefel import retract_qr, skew_field

_BB_LO, _BB_HI = 1e-10, 1e10
_MU_FLOOR = 1e-16
_MAX_BACKTRACKS = 40


def lipschitz_power_iteration(prob, iters: int = 100) -> float:
    """Largest Hessian eigenvalue by power iteration (deterministic start)."""
    n = prob.dim
    v = np.random.default_rng(0).standard_normal(n)
    v /= float(np.linalg.norm(v))
    lam = 1.0
    for _ in range(iters):
        w = prob.hessian_vec(np.ones(n) / n, v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 1.0
        lam = nw
        v = w / nw
    return lam


def _defect(x, proj: Projection) -> float:
    return feasibility_defect(x, proj.target, proj.lo, proj.hi)


def _finish(trace: Trace, converged: bool):
    trace.status = CONVERGED if converged else CAP_HIT


def pgd_nesterov(prob, proj: Projection, x0, config: SolverConfig):
    """Projected gradient with Nesterov momentum and function-value restart.

    Step size 1/L from power iteration, safeguarded by backtracking on the
    local quadratic model; the extrapolated point is projected (clipped) so
    every iterate stays feasible.
    """
    L = lipschitz_power_iteration(prob)
    s0 = 1.0 / L
    x = proj(np.asarray(x0, dtype=float))
    y = x.copy()
    t = 1.0
    t0 = time.perf_counter()
    trace = Trace()
    evals = 0
    converged = False
    for k in range(config.max_outer + 1):
        g = prob.gradient(x)
        kkt = kkt_residual(x, g, proj)
        trace.append(prob.value(x), kkt, _defect(x, proj), evals, time.perf_counter() - t0)
        if kkt <= config.kkt_tol:
            converged = True
            break
        if k == config.max_outer:
            break
        if config.time_budget is not None and trace.seconds[-1] > config.time_budget:
            break
        gy = prob.gradient(y)
        fy = prob.value(y)
        s = s0
        evals = 0
        while True:
            x_new = proj(y - s * gy)
            d = x_new - y
            evals += 1
            if (
                prob.value(x_new) <= fy + float(gy @ d) + float(d @ d) / (2.0 * s)
                or evals > _MAX_BACKTRACKS
            ):
                break
            s *= config.backtrack_beta
        if prob.value(x_new) > prob.value(x):
            # momentum has overshot: restart from the last good point
            t = 1.0
            x_new = proj(x - s0 * g)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = proj(x_new + ((t - 1.0) / t_new) * (x_new - x))
        t = t_new
        x = x_new
    _finish(trace, converged)
    return x, trace


def projected_bb(prob, proj: Projection, x0, config: SolverConfig):
    """Projected Barzilai-Borwein (BB1) with a nonmonotone Armijo search.

    tau = s^T s / s^T y clipped to [1e-10, 1e10]; s^T y <= 0 falls back to
    1/L.  Acceptance compares against the max objective over the last 10
    iterations (memory-10 Grippo-Lampariello-Lucidi rule).
    """
    L = lipschitz_power_iteration(prob)
    x = proj(np.asarray(x0, dtype=float))
    g = prob.gradient(x)
    tau = 1.0 / L
    hist = deque(maxlen=10)
    t0 = time.perf_counter()
    trace = Trace()
    evals = 0
    converged = False
    for k in range(config.max_outer + 1):
        f = prob.value(x)
        kkt = kkt_residual(x, g, proj)
        trace.append(f, kkt, _defect(x, proj), evals, time.perf_counter() - t0)
        if kkt <= config.kkt_tol:
            converged = True
            break
        if k == config.max_outer:
            break
        if config.time_budget is not None and trace.seconds[-1] > config.time_budget:
            break
        hist.append(f)
        fmax = max(hist)
        evals = 0
        step = tau
        while True:
            x_new = proj(x - step * g)
            d = x_new - x
            evals += 1
            if (
                prob.value(x_new) <= fmax + config.armijo_c * float(g @ d)
                or evals > _MAX_BACKTRACKS
            ):
                break
            step *= 0.5
        g_new = prob.gradient(x_new)
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        tau = float(s @ s) / sy if sy > 0 else 1.0 / L
        tau = min(max(tau, _BB_LO), _BB_HI)
        x, g = x_new, g_new
    _finish(trace, converged)
    return x, trace


def multiplicative_updates(prob: LeastSquaresProblem, x0, config: SolverConfig):
    """Lee-Seung multiplicative updates for NNLS with elementwise nonnegative A.

    x <- x * (A^T b) / (A^T A x + 1e-16).  Zero coordinates stay zero; the
    iteration never leaves the nonnegative orthant.
    """
    if np.any(prob.A < 0) or np.any(prob.b < 0):
        raise ValueError("multiplicative updates need elementwise nonnegative A and b")
    Atb = prob.A.T @ prob.b
    Q = prob.A.T @ prob.A
    proj = Projection("orthant")
    x = np.asarray(x0, dtype=float).copy()
    if np.any(x < 0):
        raise ValueError("x0 must be nonnegative")
    t0 = time.perf_counter()
    trace = Trace()
    converged = False
    for k in range(config.max_outer + 1):
        g = prob.gradient(x)
        kkt = kkt_residual(x, g, proj)
        trace.append(prob.value(x), kkt, _defect(x, proj), 0, time.perf_counter() - t0)
        if kkt <= config.kkt_tol:
            converged = True
            break
        if k == config.max_outer:
            break
        if config.time_budget is not None and trace.seconds[-1] > config.time_budget:
            break
        x = x * Atb / (Q @ x + _MU_FLOOR)
    _finish(trace, converged)
    return x, trace


def entropic_mirror_descent(
    prob, x0, config: SolverConfig, mode: str = "decay", eta_md: float | None = None
):
    """Entropic mirror descent on the simplex: x <- normalize(x * exp(-s g)).

    mode="decay" uses s_k = sqrt(2 log n) / (G_inf sqrt(k)) with G_inf the
    running max gradient sup-norm; mode="fixed" uses eta_md with halving
    until the objective does not increase.
    """
    if mode not in ("decay", "fixed"):
        raise ValueError(f"unknown stepsize mode {mode!r}")
    if mode == "fixed" and (eta_md is None or eta_md <= 0):
        raise ValueError("fixed mode needs a positive eta_md")
    proj = Projection("simplex")
    x = np.asarray(x0, dtype=float).copy()
    x = x / x.sum()
    n = x.size
    g_inf = 0.0
    t0 = time.perf_counter()
    trace = Trace()
    evals = 0
    converged = False
    for k in range(config.max_outer + 1):
        g = prob.gradient(x)
        kkt = kkt_residual(x, g, proj)
        trace.append(prob.value(x), kkt, _defect(x, proj), evals, time.perf_counter() - t0)
        if kkt <= config.kkt_tol:
            converged = True
            break
        if k == config.max_outer:
            break
        if config.time_budget is not None and trace.seconds[-1] > config.time_budget:
            break
        g_inf = max(g_inf, float(np.max(np.abs(g))), 1e-30)
        evals = 0
        if mode == "decay":
            s = math.sqrt(2.0 * math.log(n)) / (g_inf * math.sqrt(k + 1))
            x = _emd_step(x, g, s)
        else:
            s = eta_md
            f0 = prob.value(x)
            while True:
                x_new = _emd_step(x, g, s)
                evals += 1
                if prob.value(x_new) <= f0 or evals > _MAX_BACKTRACKS:
                    break
                s *= 0.5
            x = x_new
    _finish(trace, converged)
    return x, trace


def _emd_step(x: np.ndarray, g: np.ndarray, s: float) -> np.ndarray:
    t = np.log(x) - s * g
    t -= t.max()
    y = np.exp(t)
    return y / y.sum()


def _stiefel_loop(prob, X0, config: SolverConfig, take_step):
    X = np.array(X0, dtype=float, copy=True)
    if stiefel_feasibility(X) > 1e-10:
        raise ValueError("X0 is not on the Stiefel manifold")
    t0 = time.perf_counter()
    trace = Trace()
    evals = 0
    converged = False
    state = {}
    for k in range(config.max_outer + 1):
        G = prob.gmap(X)
        gn = float(np.linalg.norm(stiefel_riemannian_grad(G, X)))
        trace.append(prob.value(X), gn, stiefel_feasibility(X), evals, time.perf_counter() - t0)
        if gn <= config.kkt_tol:
            converged = True
            break
        if k == config.max_outer:
            break
        if config.time_budget is not None and trace.seconds[-1] > config.time_budget:
            break
        X, evals = take_step(X, G, state, config)
    _finish(trace, converged)
    return X, trace


def _bb_stepsize(X, G, state) -> float:
    tau = None
    if "X_prev" in state:
        s = (X - state["X_prev"]).ravel()
        yv = (G - state["G_prev"]).ravel()
        sy = float(s @ yv)
        if sy > 0:
            tau = float(s @ s) / sy
    if tau is None:
        tau = 1.0 / (float(np.linalg.norm(G)) + 1.0)
    state["X_prev"], state["G_prev"] = X.copy(), G.copy()
    return min(max(tau, _BB_LO), _BB_HI)


def wen_yin(prob, X0, config: SolverConfig):
    """Feasible Cayley curvilinear search with BB step and monotone Armijo.

    The curve Y(tau) = (I + (tau/2) A)^{-1} (I - (tau/2) A) X uses the skew
    field A frozen at the current point, so every point on it is feasible.
    Directional derivative at tau = 0 is -0.5 ||A||_F^2.
    """

    def step(X, G, state, cfg):
        A = skew_field(G, X)
        nA2 = float(np.linalg.norm(A)) ** 2
        f0 = prob.value(X)
        tau = _bb_stepsize(X, G, state)
        n = X.shape[0]
        I = np.eye(n)
        evals = 0
        while True:
            Y = np.linalg.solve(I + 0.5 * tau * A, X - 0.5 * tau * (A @ X))
            evals += 1
            if prob.value(Y) <= f0 - cfg.armijo_c * tau * 0.5 * nA2 or evals > _MAX_BACKTRACKS:
                break
            tau *= 0.5
        return Y, evals

    return _stiefel_loop(prob, X0, config, step)


def rgd_qr(prob, X0, config: SolverConfig):
    """Riemannian gradient descent: retract X - tau * grad by thin QR.

    BB initial step, monotone Armijo on f against the squared gradient norm.
    """

    def step(X, G, state, cfg):
        rg = stiefel_riemannian_grad(G, X)
        n2 = float(np.linalg.norm(rg)) ** 2
        f0 = prob.value(X)
        tau = _bb_stepsize(X, G, state)
        evals = 0
        while True:
            Y = retract_qr(X - tau * rg)
            evals += 1
            if prob.value(Y) <= f0 - cfg.armijo_c * tau * n2 or evals > _MAX_BACKTRACKS:
                break
            tau *= 0.5
        return Y, evals

    return _stiefel_loop(prob, X0, config, step)
