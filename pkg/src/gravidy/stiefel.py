"""Implicit Cayley solver on the Stiefel manifold St(n, p).

One outer step solves, for the skew field A(Y) = G(Y) Y^T - Y G(Y)^T built
from the (linear, columnwise) gradient field G, the nonlinear system

    F(Y) = (I + (eta/2) A(Y)) Y - (I - (eta/2) A(Y)) X_k = 0.

Because the update is a Cayley transform of a skew matrix, the root is
exactly feasible at any eta > 0.  The Frechet derivative of F has a closed
form that this module applies matrix-free in O(n p^2) plus p gradient-block
products, so the Newton correction can be solved either by GMRES on the
matrix-free operator (default) or by assembling the dense np x np Jacobian
column by column.  Corrections on the Krylov path are retracted back to the
manifold (QR by default, polar optionally); a Woodbury identity provides an
optional 2p x 2p preconditioner.  The outer loop adapts eta by an Armijo
acceptance test evaluated at the trial point.
"""

from __future__ import annotations

import time
import warnings

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .core import CAP_HIT, CONVERGED, STALLED, SolverConfig, Trace
from .diagnostics import stiefel_feasibility, stiefel_riemannian_grad, sym

# Outer step-size controller.
ETA_MIN = 1e-6
ETA_MAX = 1e3
ETA_GROW = 2.0
ETA_SHRINK = 0.5

_T_MIN = 1e-12
_GMRES_TOTAL_ITERS = 200


def skew_field(G: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """A(Y) = G Y^T - Y G^T; skew-symmetric by construction."""
    B = G @ Y.T
    return B - B.T


def _skew_apply(G: np.ndarray, Y: np.ndarray, V: np.ndarray) -> np.ndarray:
    # A(Y) V without forming the n x n field: costs O(n p^2).
    return G @ (Y.T @ V) - Y @ (G.T @ V)


def cayley_residual(prob, Y: np.ndarray, X_k: np.ndarray, eta: float):
    """Residual F(Y) and its Frobenius norm, computed matrix-free."""
    G = prob.gmap(Y)
    F = Y - X_k + 0.5 * eta * _skew_apply(G, Y, Y + X_k)
    return F, float(np.linalg.norm(F))


def frechet_jvp(prob, Y: np.ndarray, X_k: np.ndarray, eta: float, H: np.ndarray) -> np.ndarray:
    """Directional derivative of F at Y along H.

    d/dt F(Y + tH) = (I + c A(Y)) H
                   + c [G(H) Y^T + G(Y) H^T - H G(Y)^T - Y G(H)^T] (Y + X_k)
    with c = eta/2, using that the field G is linear.
    """
    c = 0.5 * eta
    G_Y = prob.gmap(Y)
    G_H = prob.gmap(H)
    S = Y + X_k
    out = H + c * _skew_apply(G_Y, Y, H)
    out += c * (G_H @ (Y.T @ S) + G_Y @ (H.T @ S) - H @ (G_Y.T @ S) - Y @ (G_H.T @ S))
    return out


def retract_qr(M: np.ndarray) -> np.ndarray:
    """Thin QR retraction with the R-diagonal sign fixed positive."""
    Q, R = np.linalg.qr(M)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s[np.newaxis, :]


def retract_polar(M: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(M, full_matrices=False)
    return U @ Vt


def _no_retract(M: np.ndarray) -> np.ndarray:
    # additive Newton update; feasibility then holds only at the root itself
    return M


_RETRACT = {"qr": retract_qr, "polar": retract_polar, "none": _no_retract}


def symmetric_cayley_predictor(prob, X_k: np.ndarray, eta: float, anchor=None) -> np.ndarray:
    """Feasible warm start Y0 = (I - c A(X^))(I + c A(X^))^{-1} X_k, c = eta/2.

    The anchor X^ defaults to X_k.  The transform is the Cayley map of a skew
    matrix, hence exactly orthogonal; Y0 is feasible to rounding error at any
    eta.  Warns if the solve's conditioning bound exceeds 1e12.
    """
    Xh = X_k if anchor is None else anchor
    c = 0.5 * eta
    A = skew_field(prob.gmap(Xh), Xh)
    # singular values of I + cA are sqrt(1 + c^2 sigma_i(A)^2) >= 1
    cond_bound = float(np.sqrt(1.0 + (c * np.linalg.norm(A)) ** 2))
    if cond_bound > 1e12:
        warnings.warn(f"Cayley predictor solve conditioning bound {cond_bound:.2e}")
    n = X_k.shape[0]
    I = np.eye(n)
    return np.linalg.solve(I + c * A, X_k - c * (A @ X_k))


def cayley_inverse_apply(Gmat: np.ndarray, Y: np.ndarray, c: float, B: np.ndarray) -> np.ndarray:
    """(I + c A(Y))^{-1} B through a 2p x 2p Woodbury solve.

    A(Y) = W J W^T with W = [G(Y), Y] and J the 2p x 2p symplectic block, so
    the inverse costs O(n p^2) instead of an n x n factorization.
    """
    p = Y.shape[1]
    W = np.hstack([Gmat, Y])
    J = np.zeros((2 * p, 2 * p))
    J[:p, p:] = np.eye(p)
    J[p:, :p] = -np.eye(p)
    # (I + c W J W^T)^{-1} = I - W ((c J)^{-1} + W^T W)^{-1} W^T,  J^{-1} = -J
    core = -J / c + W.T @ W
    return B - W @ np.linalg.solve(core, W.T @ B)


def _vec(M: np.ndarray) -> np.ndarray:
    return M.reshape(-1, order="F")


def _unvec(v: np.ndarray, n: int, p: int) -> np.ndarray:
    return v.reshape((n, p), order="F")


def newton_krylov_step(
    prob,
    X_k: np.ndarray,
    eta: float,
    config: SolverConfig,
    Y0: np.ndarray | None = None,
    retraction: str = "qr",
    precondition: bool = False,
    residual_history: list | None = None,
):
    """One implicit step by Newton-GMRES with per-correction retraction.

    Starts from the symmetric Cayley predictor unless Y0 is given.  Each
    correction solves the matrix-free Frechet system to config.inner_tol and
    is retracted to the manifold, so every iterate is feasible.  Returns
    (Y, newton_iters, converged).
    """
    retract = _RETRACT[retraction]
    n, p = X_k.shape
    Y = symmetric_cayley_predictor(prob, X_k, eta) if Y0 is None else np.array(Y0, copy=True)
    tol = config.inner_tol * (1.0 + float(np.linalg.norm(X_k)))
    restart = min(30, n * p)
    maxiter = max(1, _GMRES_TOTAL_ITERS // restart)
    best_Y, best_nF = Y, np.inf
    stalls = 0
    iters = 0
    for _ in range(config.max_inner):
        F, nF = cayley_residual(prob, Y, X_k, eta)
        if residual_history is not None:
            residual_history.append(nF)
        if nF <= tol:
            return Y, iters, True
        if nF >= best_nF:
            stalls += 1
            if stalls >= 2:
                return best_Y, iters, False
        else:
            best_Y, best_nF = Y, nF
            stalls = 0
        iters += 1
        op = scipy.sparse.linalg.LinearOperator(
            (n * p, n * p),
            matvec=lambda h: _vec(frechet_jvp(prob, Y, X_k, eta, _unvec(h, n, p))),
        )
        M = None
        if precondition:
            G_Y = prob.gmap(Y)
            M = scipy.sparse.linalg.LinearOperator(
                (n * p, n * p),
                matvec=lambda h: _vec(
                    cayley_inverse_apply(G_Y, Y, 0.5 * eta, _unvec(h, n, p))
                ),
            )
        h, _ = scipy.sparse.linalg.gmres(
            op, -_vec(F), rtol=config.inner_tol, atol=0.0,
            restart=restart, maxiter=maxiter, M=M,
        )
        Y = retract(Y + _unvec(h, n, p))
    F, nF = cayley_residual(prob, Y, X_k, eta)
    if nF <= tol:
        return Y, iters, True
    return (Y, iters, False) if nF < best_nF else (best_Y, iters, False)


def dense_newton_step(
    prob,
    X_k: np.ndarray,
    eta: float,
    config: SolverConfig,
    Y0: np.ndarray | None = None,
    newton_tol: float | None = None,
    residual_history: list | None = None,
):
    """One implicit step by dense Newton with a merit line search.

    Starts from the symmetric Cayley predictor unless Y0 is given (a bare
    X_k start can strand the merit in a local basin once eta * curvature is
    moderate).  Assembles the np x np Jacobian column by column from the
    matrix-free derivative (column-major ordering), solves by LU, and
    backtracks on the merit 0.5 ||F||_F^2.  No retraction: feasibility of
    the accepted point comes from driving the residual itself to near
    machine precision.  Returns (Y, newton_iters, converged).
    """
    n, p = X_k.shape
    d = n * p
    Y = symmetric_cayley_predictor(prob, X_k, eta) if Y0 is None else np.array(Y0, copy=True)
    tol = (config.inner_tol if newton_tol is None else newton_tol) * (
        1.0 + float(np.linalg.norm(X_k))
    )
    best_Y, best_nF = Y, np.inf
    iters = 0
    for _ in range(config.max_inner):
        F, nF = cayley_residual(prob, Y, X_k, eta)
        if residual_history is not None:
            residual_history.append(nF)
        if nF <= tol:
            return Y, iters, True
        if nF < best_nF:
            best_Y, best_nF = Y, nF
        iters += 1
        J = np.empty((d, d))
        E = np.zeros((n, p))
        for j in range(d):
            E[j % n, j // n] = 1.0  # column-major basis direction
            J[:, j] = _vec(frechet_jvp(prob, Y, X_k, eta, E))
            E[j % n, j // n] = 0.0
        try:
            h = np.linalg.solve(J, -_vec(F))
        except np.linalg.LinAlgError:
            JtJ = J.T @ J
            JtJ[np.diag_indices_from(JtJ)] += 1e-10
            h = np.linalg.solve(JtJ, -J.T @ _vec(F))
        H = _unvec(h, n, p)
        t = 1.0
        m0 = 0.5 * nF * nF
        accepted = False
        while t >= _T_MIN:
            _, nF_t = cayley_residual(prob, Y + t * H, X_k, eta)
            if 0.5 * nF_t * nF_t < m0:
                Y = Y + t * H
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return best_Y, iters, False
    F, nF = cayley_residual(prob, Y, X_k, eta)
    if nF <= tol:
        return Y, iters, True
    return (Y, iters, False) if nF < best_nF else (best_Y, iters, False)


_STEPPERS = ("nk_gmres", "dense_nr")


def solve_stiefel(
    prob,
    X0: np.ndarray,
    config: SolverConfig,
    inner: str = "nk_gmres",
    retraction: str = "qr",
    precondition: bool = False,
):
    """Minimize prob over St(n, p) from feasible X0 with adaptive eta.

    A trial step at the current eta is accepted when

        f(Y) <= f(X_k) - c1 * eta * ||grad f(Y)||_F^2

    (gradient at the trial point); acceptance doubles eta up to 1e3,
    rejection halves it down to 1e-6 and re-solves warm-started from the
    rejected trial.  Exhausting the floor marks the solve stalled.
    """
    if inner not in _STEPPERS:
        raise ValueError(f"unknown inner stepper {inner!r}")
    if retraction not in _RETRACT:
        raise ValueError(f"unknown retraction {retraction!r}")
    X = np.array(X0, dtype=float, copy=True)
    if stiefel_feasibility(X) > 1e-10:
        raise ValueError("X0 is not on the Stiefel manifold")

    def step(Xk, eta, warm):
        if inner == "nk_gmres":
            return newton_krylov_step(
                prob, Xk, eta, config, Y0=warm,
                retraction=retraction, precondition=precondition,
            )
        return dense_newton_step(
            prob, Xk, eta, config, Y0=warm, newton_tol=min(config.inner_tol, 1e-12)
        )

    eta = config.eta
    t0 = time.perf_counter()
    trace = Trace()
    inner_used = 0
    status = CAP_HIT
    for k in range(config.max_outer + 1):
        G = prob.gmap(X)
        f = prob.value(X)
        gn = float(np.linalg.norm(stiefel_riemannian_grad(G, X)))
        trace.append(
            f, gn, stiefel_feasibility(X), inner_used, time.perf_counter() - t0
        )
        if gn <= config.kkt_tol:
            status = CONVERGED
            break
        if k == config.max_outer:
            break
        if config.time_budget is not None and trace.seconds[-1] > config.time_budget:
            break
        warm = None
        accepted = False
        while True:
            Y, inner_used, inner_ok = step(X, eta, warm)
            G_Y = prob.gmap(Y)
            decrease = f - config.armijo_c * eta * float(
                np.linalg.norm(stiefel_riemannian_grad(G_Y, Y))
            ) ** 2
            if inner_ok and prob.value(Y) <= decrease:
                X = Y
                eta = min(ETA_GROW * eta, ETA_MAX)
                accepted = True
                break
            if eta <= ETA_MIN:
                break
            eta = max(ETA_SHRINK * eta, ETA_MIN)
            # a trial whose inner solve failed is not a usable warm start
            warm = Y if inner_ok else None
        if not accepted:
            status = STALLED
            break
    trace.status = status
    return X, trace
