import numpy as np

from gravidy.core import Objective


def fd_grad(f, x, eps=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


class RecordingProblem(Objective):
    """Wraps an objective and records every point passed to gradient().

    Lets a test assert that a solver only ever evaluated the gradient at
    feasible points, without reaching into solver internals.
    """

    def __init__(self, inner):
        self.inner = inner
        self.gradient_points = []

    @property
    def dim(self):
        return self.inner.dim

    def value(self, x):
        return self.inner.value(x)

    def gradient(self, x):
        self.gradient_points.append(np.array(x, copy=True))
        return self.inner.gradient(x)

    def hessian(self, x):
        return self.inner.hessian(x)

    def hessian_vec(self, x, v):
        return self.inner.hessian_vec(x, v)

    @property
    def has_hessian(self):
        return self.inner.has_hessian
