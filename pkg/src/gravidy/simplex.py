"""Implicit KL-proximal solver on the probability simplex.

One outer step solves

    x_{k+1} = argmin_{x in simplex}  KL(x || x_k) + eta * f(x),

whose optimality system is log x - log x_k + eta * grad f(x) = -nu * 1,
1^T x = 1.  Three interchangeable inner solvers compute the same point:

  * newton_kkt    damped Newton on the KKT system, Schur complement in the
                  multiplier, fraction-to-the-boundary step (default);
  * fixed_point   Hessian-free relaxed multiplicative iteration
                  y ∝ x_k ⊙ exp(-eta grad f(x)),  x ← (1-λ) x + λ y;
  * reduced_mgn   Gauss-Newton on the system written in reduced logits with
                  the gauge u_n = 0 (softmax parameterization, n-1 unknowns).

The residual all three drive to zero is gauge-free: the mean-centered
r(x) = P_{1^perp}(log x - log x_k + eta grad f(x)).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import CAP_HIT, CONVERGED, EXP_CLAMP, SolverConfig, Trace, softmax
from .diagnostics import feasibility_defect, kkt_residual
from .pos_box import mgn_step
from .projections import Projection

_ALPHA_MIN = 1e-12
_LAMBDA_MIN = 1e-12
# Curvature regularizer added on the tangent space if the KKT block fails to
# factor; applied once, then the factorization is retried.
_KKT_EPS = 1e-10
# Fraction-to-the-boundary: step lengths keep every coordinate above this
# fraction of its current value.
_FTB_KEEP = 0.005
_FTB_SCALE = 0.995
# Multiplicative geometry makes x_i = 0 absorbing, so a collapsed coordinate
# is held at this floor instead; below ~1e-308 the barrier 1/x_i overflows.
_X_FLOOR = 1e-300


@dataclass
class KlProxSubproblem:
    """One KL-prox step: anchor x_k, step size eta, merit R and residual."""

    prob: object
    x_k: np.ndarray
    eta: float

    def __post_init__(self):
        self.x_k = np.maximum(np.asarray(self.x_k, dtype=float), _X_FLOOR)
        self._log_xk = np.log(self.x_k)

    def merit(self, x: np.ndarray) -> float:
        kl = float(np.sum(x * (np.log(x) - self._log_xk)))
        return kl + self.eta * self.prob.value(x)

    def stationarity(self, x: np.ndarray) -> np.ndarray:
        """Un-gauged optimality vector log x - log x_k + eta grad f(x)."""
        return np.log(x) - self._log_xk + self.eta * self.prob.gradient(x)

    def gauge_residual(self, x: np.ndarray) -> np.ndarray:
        r = self.stationarity(x)
        return r - r.mean()


def klprox_newton_kkt(sub: KlProxSubproblem, config: SolverConfig) -> tuple[np.ndarray, int]:
    """Newton on the KKT system with a Schur complement in the multiplier.

    Solves K y = g and K z = 1 with K = diag(1/x) + eta H(x) (SPD on convex
    problems), eliminates the multiplier, line-searches the merit R along the
    sum-zero direction, and stops when ||dx||_1 <= inner_tol.
    """
    x = np.array(sub.x_k, dtype=float, copy=True)
    ones = np.ones_like(x)
    iters = 0
    for _ in range(config.max_inner):
        iters += 1
        g = sub.stationarity(x)
        K = sub.eta * sub.prob.hessian(x)
        K = K + np.diag(1.0 / x)
        try:
            c, low = scipy.linalg.cho_factor(K, lower=True)
        except np.linalg.LinAlgError:
            n = x.size
            K = K + _KKT_EPS * (np.eye(n) - np.full((n, n), 1.0 / n))
            c, low = scipy.linalg.cho_factor(K, lower=True)
        y = scipy.linalg.cho_solve((c, low), g)
        z = scipy.linalg.cho_solve((c, low), ones)
        dnu = -float(y.sum()) / float(z.sum())
        dx = -y - z * dnu
        neg = dx < 0
        alpha = 1.0
        if np.any(neg):
            cap = float(np.min(_FTB_SCALE * x[neg] / -dx[neg]))
            alpha = min(1.0, _FTB_SCALE * cap)
        R0 = sub.merit(x)
        slope = float(g @ dx)
        while alpha > _ALPHA_MIN:
            trial = x + alpha * dx
            if sub.merit(trial) <= R0 + config.armijo_c * alpha * slope:
                break
            alpha *= config.backtrack_beta
        x = np.maximum(x + alpha * dx, _X_FLOOR)
        x = x / x.sum()  # roundoff renormalization only; Newton keeps 1^T dx = 0
        if float(np.abs(dx).sum()) <= config.inner_tol:
            break
    return x, iters


def kl_fixed_point(
    sub: KlProxSubproblem, config: SolverConfig, relax: float = 1.0
) -> tuple[np.ndarray, int, bool]:
    """Hessian-free relaxed fixed-point iteration for the KL-prox step.

    The relaxation weight halves whenever the merit R increases; underflow
    below 1e-12 returns the best iterate seen with converged = False.
    """
    lam = relax
    x = np.array(sub.x_k, dtype=float, copy=True)
    log_xk = np.log(sub.x_k)
    R_x = sub.merit(x)
    best_x, best_r = x, float(np.linalg.norm(sub.gauge_residual(x)))
    if best_r <= config.inner_tol:
        return x, 0, True
    iters = 0
    for _ in range(config.max_inner):
        iters += 1
        t = log_xk - sub.eta * sub.prob.gradient(x)
        t = t - t.max()
        y = np.exp(t)
        y /= y.sum()
        x_new = np.maximum((1.0 - lam) * x + lam * y, _X_FLOOR)
        nr = float(np.linalg.norm(sub.gauge_residual(x_new)))
        if nr < best_r:
            best_x, best_r = x_new, nr
        if nr <= config.inner_tol:
            return x_new, iters, True
        R_new = sub.merit(x_new)
        if R_new <= R_x:
            x, R_x = x_new, R_new
        else:
            lam *= 0.5
            if lam < _LAMBDA_MIN:
                return best_x, iters, False
    return best_x, iters, False


def reduced_logits(x: np.ndarray) -> np.ndarray:
    """Logits of x in the gauge u_n = 0: v_i = log(x_i / x_n)."""
    x = np.asarray(x, dtype=float)
    return np.log(x[:-1]) - np.log(x[-1])


def _reduced_gradient_gap(prob, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """x(v) and the gauge-corrected gradient gap grad_{1:n-1} - grad_n."""
    u = np.concatenate([v, [0.0]])
    x = softmax(u)
    grad = prob.gradient(x)
    return x, grad[:-1] - grad[-1]


def reduced_logit_mgn(
    prob, v_k: np.ndarray, eta: float, config: SolverConfig
) -> tuple[np.ndarray, np.ndarray, int]:
    """Gauss-Newton in reduced logits for the KL-prox step.

    With the gauge u_n = 0 the optimality system becomes the square system
    F(v) = v - v_k + eta (grad f(x(v))_{1:n-1} - grad_n f(x(v)) 1) = 0; its
    root maps to the same simplex point as the Newton-KKT solver.  Solved by
    the same Levenberg-damped Gauss-Newton loop as the orthant/box steps.
    """
    v_k = np.asarray(v_k, dtype=float)
    m = v_k.size

    def pinned_mask(v, F):
        # a logit stuck at the clamp with its residual pushing outward has no
        # root inside; softmax is flat there, so the component is irreducible
        # and would poison the least-squares direction for the free logits
        lo = (v <= -(EXP_CLAMP - 1e-9)) & (F > 0)
        hi = (v >= (EXP_CLAMP - 1e-9)) & (F < 0)
        return lo | hi

    def residual(v):
        x, gap = _reduced_gradient_gap(prob, v)
        F = v - v_k + eta * gap
        pinned = pinned_mask(v, F)
        F = np.where(pinned, 0.0, F)
        return x, F, float(np.linalg.norm(F)), pinned

    def jacobian(v, pinned):
        u = np.concatenate([v, [0.0]])
        xs = softmax(u)
        J_sm = (np.diag(xs) - np.outer(xs, xs))[:, :m]
        B = prob.hessian(xs) @ J_sm
        J = eta * (B[:m, :] - B[m, :][np.newaxis, :])
        J[np.diag_indices_from(J)] += 1.0
        if pinned.any():
            J[pinned, :] = 0.0
            J[pinned, pinned] = 1.0
        return J

    v = np.array(v_k, dtype=float, copy=True)
    x, F, nF, pinned = residual(v)
    if nF <= config.inner_tol:
        return v, x, 0
    J = jacobian(v, pinned)
    M = config.lm_damping
    if M is None:
        M = 1e-3 * (1.0 + float(np.max(np.abs(J.T @ F))))
    iters = 0
    for _ in range(config.max_inner):
        iters += 1
        try:
            h = mgn_step(J, F, M)
        except np.linalg.LinAlgError:
            M = min(M * 2.0, 1e12)
            continue
        trial = np.clip(v + h, -EXP_CLAMP, EXP_CLAMP)
        x_t, F_t, nF_t, pin_t = residual(trial)
        if nF_t < nF:
            v, x, F, nF, pinned = trial, x_t, F_t, nF_t, pin_t
            M = max(M / 2.0, 1e-12)
            if nF <= config.inner_tol:
                break
            J = jacobian(v, pinned)
        else:
            M = min(M * 2.0, 1e12)
    return v, x, iters


_INNERS = ("newton_kkt", "fixed_point", "reduced_mgn")


def solve_simplex(prob, x0, config: SolverConfig, inner: str = "newton_kkt"):
    """Minimize prob over the probability simplex from interior x0."""
    if inner not in _INNERS:
        raise ValueError(f"unknown inner solver {inner!r}")
    x = np.asarray(x0, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x0 must be strictly positive")
    if abs(x.sum() - 1.0) > 1e-8:
        raise ValueError("x0 must sum to 1")
    x = x / x.sum()
    proj = Projection("simplex")
    v = reduced_logits(x) if inner == "reduced_mgn" else None
    t0 = time.perf_counter()
    trace = Trace()
    inner_used = 0
    status = CAP_HIT
    for k in range(config.max_outer + 1):
        f = prob.value(x)
        g = prob.gradient(x)
        kkt = kkt_residual(x, g, proj)
        trace.append(
            f, kkt, feasibility_defect(x, "simplex"), inner_used,
            time.perf_counter() - t0,
        )
        if kkt <= config.kkt_tol:
            status = CONVERGED
            break
        if k == config.max_outer:
            break
        if config.time_budget is not None and trace.seconds[-1] > config.time_budget:
            break
        if inner == "newton_kkt":
            x, inner_used = klprox_newton_kkt(KlProxSubproblem(prob, x, config.eta), config)
        elif inner == "fixed_point":
            x, inner_used, _ = kl_fixed_point(KlProxSubproblem(prob, x, config.eta), config)
        else:
            v, x, inner_used = reduced_logit_mgn(prob, v, config.eta, config)
    trace.status = status
    return x, trace
