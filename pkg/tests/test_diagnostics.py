import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_almost_equal

from gravidy.core import QuadraticObjective, SolverConfig, Trace
from gravidy.diagnostics import (
    ConvergenceReport,
    estimate_contraction,
    feasibility_defect,
    kkt_residual,
    make_report,
    stiefel_feasibility,
    stiefel_kkt,
    stiefel_riemannian_grad,
    verify_descent,
)
from gravidy.projections import Projection


# ------------------------------------------------------------- kkt residual


def test_kkt_zero_at_interior_stationary_point():
    x = np.array([1.0, 2.0])
    assert kkt_residual(x, np.zeros(2), Projection("orthant")) == 0.0


def test_kkt_orthant_hand_values():
    # at the origin with inward gradient the point is optimal
    assert kkt_residual(np.zeros(2), np.array([1.0, 2.0]), Projection("orthant")) == 0.0
    # interior point with leftover gradient: residual equals |grad|
    r = kkt_residual(np.array([1.0]), np.array([0.3]), Projection("orthant"))
    assert r == pytest.approx(0.3)


def test_kkt_box_hand_value():
    # x1 pinned at the upper face with gradient pushing outward: no violation;
    # x2 interior with gradient 0.5: violation 0.5
    r = kkt_residual(np.array([1.0, 0.0]), np.array([-2.0, 0.5]),
                     Projection("box", lo=-1.0, hi=1.0))
    assert r == pytest.approx(0.5)


def test_kkt_simplex_vertex_optimal():
    r = kkt_residual(np.array([1.0, 0.0]), np.array([0.0, 1.0]), Projection("simplex"))
    assert r <= 1e-15


def test_hand_constructed_kkt_points_orthant():
    # f(x) = 0.5||x||^2 + c^T x with c = g* - x* makes grad(x*) = g*
    x_star = np.array([2.0, 0.0])
    g_star = np.array([0.0, 3.0])
    prob = QuadraticObjective(np.eye(2), g_star - x_star)
    assert_allclose(prob.gradient(x_star), g_star, atol=1e-15)
    assert kkt_residual(x_star, prob.gradient(x_star), Projection("orthant")) <= 1e-12


def test_hand_constructed_kkt_points_simplex():
    x_star = np.array([0.3, 0.7, 0.0])
    g_star = np.array([2.0, 2.0, 3.0])  # equal on the support, larger off it
    prob = QuadraticObjective(np.eye(3), g_star - x_star)
    assert kkt_residual(x_star, prob.gradient(x_star), Projection("simplex")) <= 1e-12


def test_hand_constructed_kkt_points_box():
    x_star = np.array([-1.0, 0.2, 1.0])
    g_star = np.array([3.0, 0.0, -2.0])  # faces pushed outward, interior flat
    prob = QuadraticObjective(np.eye(3), g_star - x_star)
    r = kkt_residual(x_star, prob.gradient(x_star), Projection("box", lo=-1.0, hi=1.0))
    assert r <= 1e-12


# --------------------------------------------------------- Stiefel quantities


def test_stiefel_riemannian_grad_hand_values():
    X = np.array([[0.0], [1.0]])
    # gradient parallel to X projects to zero
    assert_array_almost_equal(stiefel_riemannian_grad(X, X), np.zeros((2, 1)))
    # G = (3, 5): the radial part 5 X drops, leaving (3, 0)
    G = np.array([[3.0], [5.0]])
    assert_array_almost_equal(stiefel_riemannian_grad(G, X), [[3.0], [0.0]])
    gn, feas = stiefel_kkt(X, G)
    assert gn == pytest.approx(3.0)
    assert feas <= 1e-15


def test_stiefel_grad_zero_for_eigenbasis():
    # G = X Lambda for diagonal Lambda is radial columnwise
    X = np.eye(4)[:, :2]
    G = X @ np.diag([2.0, 5.0])
    gn, feas = stiefel_kkt(X, G)
    assert gn <= 1e-15
    assert feas <= 1e-15


def test_stiefel_feasibility_hand_values():
    assert stiefel_feasibility(np.eye(3)[:, :2]) <= 1e-16
    # X = 2I: X^T X - I = 3I, Frobenius norm 3 sqrt(2)
    assert stiefel_feasibility(2.0 * np.eye(2)) == pytest.approx(3.0 * np.sqrt(2.0))


# ----------------------------------------------------------- descent checker


def test_verify_descent_accepts_monotone():
    ok, idx = verify_descent([5.0, 3.0, 3.0, 1.0])
    assert ok and idx is None


def test_verify_descent_flags_first_violation():
    ok, idx = verify_descent([3.0, 2.0, 2.5, 1.0])
    assert not ok
    assert idx == 1


def test_verify_descent_tolerates_noise():
    ok, _ = verify_descent([1.0, 1.0 + 1e-12, 0.5])
    assert ok


# ------------------------------------------------------- contraction estimate


def test_contraction_recovers_synthetic_rate():
    f = 2.0 + 0.5 ** np.arange(30)
    est = estimate_contraction(f, 2.0)
    assert est == pytest.approx(0.5, rel=1e-6)


def test_contraction_none_on_flat_or_short_series():
    assert estimate_contraction(np.full(40, 1.0), 1.0) is None
    assert estimate_contraction([2.0, 1.5, 1.2], 1.0) is None


def test_contraction_matches_implicit_euler_spectrum():
    # x_{k+1} = (I + eta Q)^{-1} x_k on f = 0.5 x^T Q x contracts the
    # objective gap at the square of the dominant eigenvalue of the
    # iteration matrix; with eigenvalues {1e-3, 1} the square stays within
    # 5% of the eigenvalue itself
    Q = np.diag([1e-3, 1.0])
    for eta in (1.0, 10.0):
        x = np.array([1.0, 1.0])
        f_values = []
        Minv = np.linalg.inv(np.eye(2) + eta * Q)
        for _ in range(80):
            f_values.append(0.5 * float(x @ (Q @ x)))
            x = Minv @ x
        rate = 1.0 / (1.0 + eta * 1e-3)  # largest eigenvalue of (I+eta Q)^{-1}
        est = estimate_contraction(f_values, 0.0)
        assert est is not None
        assert abs(est - rate) / rate <= 0.05


# --------------------------------------------------------------- A-stability


def test_explicit_euler_diverges_above_threshold():
    # stiff quadratic: explicit Euler is stable only for eta < 2/lambda_max;
    # at 1500 times the threshold it blows up within a few steps
    Q = np.diag([1e4, 1.0])
    eta = 0.3
    x = np.array([1.0, 1.0])
    diverged = False
    for _ in range(50):
        x = x - eta * (Q @ x)
        if np.linalg.norm(x) > 1e10:
            diverged = True
            break
    assert diverged


def test_implicit_euler_stable_at_large_step():
    Q = np.diag([1e4, 1.0])
    eta = 100.0
    M = np.eye(2) + eta * Q
    x = np.array([1.0, 1.0])
    f_values = [0.5 * float(x @ (Q @ x))]
    for _ in range(50):
        x = np.linalg.solve(M, x)
        f_values.append(0.5 * float(x @ (Q @ x)))
    ok, _ = verify_descent(f_values)
    assert ok
    assert np.isfinite(f_values[-1])


# ---------------------------------------------------------- feasibility/report


def test_feasibility_defect_hand_values():
    assert feasibility_defect(np.array([1.0, -0.2]), "orthant") == pytest.approx(0.2)
    assert feasibility_defect(np.array([0.6, 0.5]), "simplex") == pytest.approx(0.1)
    assert feasibility_defect(np.array([1.4, 0.0]), "box") == pytest.approx(0.4)
    assert feasibility_defect(np.array([0.5]), "box", lo=0.0, hi=1.0) == 0.0
    with pytest.raises(ValueError):
        feasibility_defect(np.zeros(2), "sphere")


def test_make_report_from_trace():
    trace = Trace()
    trace.append(3.0, 1e-2, 0.0, 0, 0.0)
    trace.append(1.0, 1e-9, 0.0, 4, 0.5)
    trace.status = "converged"
    report = make_report(trace)
    assert isinstance(report, ConvergenceReport)
    assert report.iterations == 1
    assert report.final_f == 1.0
    assert report.final_kkt == 1e-9
    assert report.seconds == 0.5
    assert report.contraction is None


def test_make_report_rejects_empty_trace():
    with pytest.raises(ValueError):
        make_report(Trace())


def test_make_report_attaches_contraction():
    trace = Trace()
    for k in range(30):
        trace.append(2.0 + 0.5 ** k, 1e-3, 0.0, 1, 0.01 * k)
    report = make_report(trace, f_star=2.0)
    assert report.contraction == pytest.approx(0.5, rel=1e-6)
