"""Objective oracles, reparameterization maps, and shared solver plumbing.

The solvers in this package integrate the gradient flow of a smooth objective
under a change of variables x = g(zeta) that builds the constraint into the
parameterization.  This module holds the objective protocol, the four maps

    exp:         x = exp(u)                  (positive orthant)
    logcosh:     x = log cosh u              (positive orthant, face at u = 0)
    sigmoid_box: x = lo + (hi - lo) sigmoid(w)   (box interior)
    softmax:     x = softmax(u)              (probability simplex)

and the configuration / trace records shared by every solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Exponent arguments are clamped here before exponentiation; exp(500) is
# finite in float64 while exp(710) is not.
EXP_CLAMP = 500.0


def _clamped_exp(z: np.ndarray) -> np.ndarray:
    return np.exp(np.clip(z, -EXP_CLAMP, EXP_CLAMP))


def stable_sigmoid(w: np.ndarray) -> np.ndarray:
    """Logistic function evaluated without overflow on either tail."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    pos = w >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-w[pos]))
    ew = np.exp(w[~pos])
    out[~pos] = ew / (1.0 + ew)
    return out


def softmax(u: np.ndarray) -> np.ndarray:
    """Softmax with max subtraction; exact on constant shifts of u."""
    u = np.asarray(u, dtype=float)
    e = np.exp(u - np.max(u))
    return e / e.sum()


class Objective:
    """Smooth objective oracle: value, gradient, optionally a Hessian.

    Solvers that need curvature call hessian()/hessian_vec(); Hessian-free
    solvers only ever touch value() and gradient().
    """

    dim: int

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError("objective does not expose a Hessian")

    def hessian_vec(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.hessian(x) @ v

    @property
    def has_hessian(self) -> bool:
        try:
            self.hessian(np.ones(self.dim) / self.dim)
        except NotImplementedError:
            return False
        return True


class LeastSquaresProblem(Objective):
    """f(x) = 0.5 ||A x - b||^2 with A^T A and A^T b cached once."""

    def __init__(self, A: np.ndarray, b: np.ndarray):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
            raise ValueError(f"incompatible shapes A{A.shape}, b{b.shape}")
        self.A = A
        self.b = b
        self.dim = A.shape[1]
        self._Q = A.T @ A
        self._Atb = A.T @ b

    def value(self, x: np.ndarray) -> float:
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self._Q @ x - self._Atb

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return self._Q

    def hessian_vec(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self._Q @ v


class QuadraticObjective(Objective):
    """f(x) = 0.5 x^T Q x + c^T x for symmetric Q (c defaults to zero)."""

    def __init__(self, Q: np.ndarray, c: np.ndarray | None = None):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError(f"Q must be square, got {Q.shape}")
        self.Q = Q
        self.c = np.zeros(Q.shape[0]) if c is None else np.asarray(c, dtype=float)
        self.dim = Q.shape[0]

    def value(self, x: np.ndarray) -> float:
        return 0.5 * float(x @ (self.Q @ x)) + float(self.c @ x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.Q @ x + self.c

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return self.Q


class StiefelQuadraticProblem:
    """Columnwise quadratic on the Stiefel manifold.

    Phi(X) = 0.5 * sum_j  X[:, j]^T Q_j X[:, j]  with each Q_j symmetric PSD.
    gmap(Y) applies the block field column by column: column j of gmap(Y) is
    Q_j Y[:, j]; it equals the Euclidean gradient of Phi and is linear in Y.
    """

    def __init__(self, Q_blocks: list[np.ndarray] | np.ndarray):
        blocks = [np.asarray(Q, dtype=float) for Q in Q_blocks]
        n = blocks[0].shape[0]
        for Q in blocks:
            if Q.shape != (n, n):
                raise ValueError("all blocks must be square with equal size")
        self.Q_blocks = blocks
        self.n = n
        self.p = len(blocks)

    def value(self, X: np.ndarray) -> float:
        return 0.5 * sum(
            float(X[:, j] @ (self.Q_blocks[j] @ X[:, j])) for j in range(self.p)
        )

    def gmap(self, Y: np.ndarray) -> np.ndarray:
        out = np.empty_like(Y)
        for j in range(self.p):
            out[:, j] = self.Q_blocks[j] @ Y[:, j]
        return out

    # Euclidean gradient of Phi; identical to gmap because Phi is quadratic.
    def gradient(self, X: np.ndarray) -> np.ndarray:
        return self.gmap(X)


@dataclass(frozen=True)
class ReparamMap:
    """One of the four constraint-building maps, with derivative access.

    Diagonal kinds (exp, logcosh, sigmoid_box) expose deriv() as the vector
    of componentwise derivatives; softmax exposes the full Jacobian
    diag(x) - x x^T through jacobian().
    """

    kind: str
    lo: float = 0.0
    hi: float = 1.0

    KINDS = ("exp", "logcosh", "sigmoid_box", "softmax")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "sigmoid_box" and not self.lo < self.hi:
            raise ValueError("sigmoid_box needs lo < hi")

    @classmethod
    def exp(cls) -> "ReparamMap":
        return cls("exp")

    @classmethod
    def logcosh(cls) -> "ReparamMap":
        return cls("logcosh")

    @classmethod
    def sigmoid_box(cls, lo: float, hi: float) -> "ReparamMap":
        return cls("sigmoid_box", lo=float(lo), hi=float(hi))

    @classmethod
    def softmax(cls) -> "ReparamMap":
        return cls("softmax")

    @property
    def is_diagonal(self) -> bool:
        return self.kind != "softmax"

    def apply(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.kind == "exp":
            return _clamped_exp(z)
        if self.kind == "logcosh":
            # log cosh z = |z| + log1p(exp(-2|z|)) - log 2, stable for large |z|
            a = np.abs(z)
            return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)
        if self.kind == "sigmoid_box":
            return self.lo + (self.hi - self.lo) * stable_sigmoid(z)
        return softmax(z)

    def deriv(self, z: np.ndarray) -> np.ndarray:
        """Componentwise derivative g'(z) for the diagonal kinds."""
        z = np.asarray(z, dtype=float)
        if self.kind == "exp":
            return _clamped_exp(z)
        if self.kind == "logcosh":
            return np.tanh(z)
        if self.kind == "sigmoid_box":
            s = stable_sigmoid(z)
            return (self.hi - self.lo) * s * (1.0 - s)
        raise ValueError("softmax has no diagonal derivative; use jacobian()")

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """Full Jacobian of the map at z (diagonal kinds return a diag matrix)."""
        if self.is_diagonal:
            return np.diag(self.deriv(z))
        x = softmax(z)
        return np.diag(x) - np.outer(x, x)

    def invert(self, x: np.ndarray) -> np.ndarray:
        """Parameter point mapping to x; used to initialize solvers."""
        x = np.asarray(x, dtype=float)
        if self.kind == "exp":
            if np.any(x <= 0):
                raise ValueError("exp map inverse needs strictly positive x")
            return np.log(x)
        if self.kind == "logcosh":
            if np.any(x < 0):
                raise ValueError("logcosh map inverse needs nonnegative x")
            # cosh u = e^x  =>  u = arccosh(e^x), taking the branch u >= 0
            return np.arccosh(np.exp(np.clip(x, 0.0, EXP_CLAMP)))
        if self.kind == "sigmoid_box":
            t = (x - self.lo) / (self.hi - self.lo)
            if np.any(t <= 0) or np.any(t >= 1):
                raise ValueError("sigmoid_box inverse needs lo < x < hi")
            return np.log(t) - np.log1p(-t)
        raise ValueError("softmax inverse is gauge-dependent; fix one manually")


@dataclass
class SolverConfig:
    """Knobs shared by every solver in the package.

    eta is the (initial) step size of the implicit discretization; inner_tol
    bounds the residual of each inner solve; kkt_tol terminates the outer
    loop.  lm_damping = None lets the Levenberg damping pick its own scale
    from the first right-hand side.
    """

    eta: float = 100.0
    max_outer: int = 400
    max_inner: int = 100
    kkt_tol: float = 1e-8
    inner_tol: float = 1e-10
    armijo_c: float = 1e-4
    backtrack_beta: float = 0.5
    lm_damping: float | None = None
    time_budget: float | None = None

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.kkt_tol <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.armijo_c < 0.5:
            raise ValueError("armijo_c must lie in (0, 0.5)")
        if not 0 < self.backtrack_beta < 1:
            raise ValueError("backtrack_beta must lie in (0, 1)")
        if self.lm_damping is not None and self.lm_damping <= 0:
            raise ValueError("lm_damping must be positive when given")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time_budget must be positive when given")


# Terminal status of a solve.
CONVERGED = "converged"
CAP_HIT = "cap_hit"
STALLED = "stalled"


@dataclass
class Trace:
    """Per-outer-iteration history of a solve.

    seconds is cumulative wall time since the solve started; inner_iters is
    the number of inner iterations the step leading INTO the recorded iterate
    took (0 for the initial point).  n_clamped counts parameters sitting at
    the clamp boundary, i.e. coordinates pushed onto a face.
    """

    f_values: list[float] = field(default_factory=list)
    kkt: list[float] = field(default_factory=list)
    feasibility: list[float] = field(default_factory=list)
    inner_iters: list[int] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    n_clamped: list[int] = field(default_factory=list)
    status: str = CAP_HIT

    def append(self, f, kkt, feas, inner, secs, clamped=0):
        self.f_values.append(float(f))
        self.kkt.append(float(kkt))
        self.feasibility.append(float(feas))
        self.inner_iters.append(int(inner))
        self.seconds.append(float(secs))
        self.n_clamped.append(int(clamped))

    def __len__(self) -> int:
        return len(self.f_values)
