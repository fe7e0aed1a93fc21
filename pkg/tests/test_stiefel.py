import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_almost_equal

from gravidy.bench import gen_stiefel
from gravidy.core import SolverConfig, StiefelQuadraticProblem
from gravidy.diagnostics import stiefel_feasibility
from gravidy.stiefel import (
    cayley_residual,
    dense_newton_step,
    frechet_jvp,
    newton_krylov_step,
    retract_polar,
    retract_qr,
    skew_field,
    solve_stiefel,
    symmetric_cayley_predictor,
)


def eigen_problem():
    # columns of X pick out eigenvectors of diag(1, 4); min value is 1/2
    return StiefelQuadraticProblem([np.diag([1.0, 4.0])])


# ---------------------------------------------------------------- skew field


def test_skew_field_vanishes_when_gradient_is_radial():
    Y = np.array([[0.0], [1.0]])
    assert_array_almost_equal(skew_field(Y, Y), np.zeros((2, 2)))
    # G = (0, 4) parallel to Y = (0, 1): G Y^T - Y G^T = 0
    G = np.array([[0.0], [4.0]])
    assert_array_almost_equal(skew_field(G, Y), np.zeros((2, 2)))


def test_skew_field_hand_value():
    G = np.array([[1.0], [0.0]])
    Y = np.array([[0.0], [1.0]])
    assert_array_almost_equal(skew_field(G, Y), [[0.0, 1.0], [-1.0, 0.0]])


def test_skew_field_is_skew():
    rng = np.random.default_rng(0)
    G = rng.standard_normal((7, 3))
    Y = rng.standard_normal((7, 3))
    A = skew_field(G, Y)
    assert_allclose(A + A.T, 0.0, atol=1e-12)


# ------------------------------------------------------- residual and its JVP


def test_residual_at_zero_eta_is_difference():
    prob = eigen_problem()
    X_k = np.array([[0.6], [0.8]])
    Y = np.array([[1.0], [0.0]])
    F, nF = cayley_residual(prob, Y, X_k, 0.0)
    assert_array_almost_equal(F, Y - X_k)
    assert nF == pytest.approx(np.linalg.norm(Y - X_k))


def test_residual_vanishes_at_critical_point():
    # X = e_2 is an eigenvector of Q, so the skew field vanishes there
    prob = eigen_problem()
    X_k = np.array([[0.0], [1.0]])
    F, nF = cayley_residual(prob, X_k, X_k, 7.0)
    assert nF <= 1e-14
    assert_allclose(F, 0.0, atol=1e-14)


def test_jvp_is_identity_at_zero_eta():
    rng = np.random.default_rng(1)
    prob = eigen_problem()
    Y = retract_qr(rng.standard_normal((2, 1)))
    H = rng.standard_normal((2, 1))
    assert_array_almost_equal(frechet_jvp(prob, Y, Y, 0.0, H), H)


def test_jvp_is_linear():
    rng = np.random.default_rng(2)
    prob, X0 = gen_stiefel(6, 2, 5.0, 3)
    Y = retract_qr(X0 + 0.1 * rng.standard_normal((6, 2)))
    H1 = rng.standard_normal((6, 2))
    H2 = rng.standard_normal((6, 2))
    lhs = frechet_jvp(prob, Y, X0, 2.0, 1.3 * H1 - 0.7 * H2)
    rhs = 1.3 * frechet_jvp(prob, Y, X0, 2.0, H1) - 0.7 * frechet_jvp(prob, Y, X0, 2.0, H2)
    assert_allclose(lhs, rhs, atol=1e-12)


def test_jvp_matches_finite_differences():
    rng = np.random.default_rng(3)
    prob, X0 = gen_stiefel(8, 2, 10.0, 4)
    Y = retract_qr(X0 + 0.05 * rng.standard_normal((8, 2)))
    eta = 1.7
    for _ in range(5):
        H = rng.standard_normal((8, 2))
        eps = 1e-7
        Fp, _ = cayley_residual(prob, Y + eps * H, X0, eta)
        Fm, _ = cayley_residual(prob, Y - eps * H, X0, eta)
        fd = (Fp - Fm) / (2 * eps)
        jvp = frechet_jvp(prob, Y, X0, eta, H)
        assert np.linalg.norm(jvp - fd) <= 1e-6 * max(np.linalg.norm(fd), 1.0)


def test_jacobian_from_jvp_matches_kronecker_form():
    # vectorized Jacobian of the residual, assembled two independent ways:
    # column by column from the JVP, and from the closed Kronecker expression
    #   (eta/2) * [ (Xp^T ⊗ G)K + ((Xp^T Y) ⊗ I)T - (Xp^T ⊗ Y)KT
    #               - (Xp^T G ⊗ I) + (2/eta)(I_p ⊗ (I + (eta/2)A)) ]
    # with Xp = Y + X_k, T = blkdiag(Q_j), K the commutation matrix.
    rng = np.random.default_rng(5)
    n, p, eta = 4, 2, 3.0
    blocks = []
    for _ in range(p):
        M = rng.standard_normal((n, n))
        blocks.append(M.T @ M)
    prob = StiefelQuadraticProblem(blocks)
    X_k = retract_qr(rng.standard_normal((n, p)))
    Y = retract_qr(X_k + 0.2 * rng.standard_normal((n, p)))

    J_cols = np.zeros((n * p, n * p))
    for j in range(n * p):
        E = np.zeros((n, p))
        E[j % n, j // n] = 1.0  # column-major basis matrix
        J_cols[:, j] = frechet_jvp(prob, Y, X_k, eta, E).reshape(-1, order="F")

    K = np.zeros((n * p, n * p))
    for a in range(n):
        for b in range(p):
            K[b + a * p, a + b * n] = 1.0
    T = np.zeros((n * p, n * p))
    for j in range(p):
        T[j * n:(j + 1) * n, j * n:(j + 1) * n] = blocks[j]
    G = prob.gmap(Y)
    A = skew_field(G, Y)
    Xp = Y + X_k
    M_kron = (
        np.kron(Xp.T, G) @ K
        + np.kron(Xp.T @ Y, np.eye(n)) @ T
        - np.kron(Xp.T, Y) @ K @ T
        - np.kron(Xp.T @ G, np.eye(n))
        + (2.0 / eta) * np.kron(np.eye(p), np.eye(n) + (eta / 2.0) * A)
    )
    assert_allclose(J_cols, (eta / 2.0) * M_kron, atol=1e-10)


# ----------------------------------------------------------------- predictor


def test_predictor_is_identity_when_field_vanishes():
    prob = StiefelQuadraticProblem([np.zeros((3, 3))] * 2)
    X_k = np.eye(3)[:, :2]
    assert_array_almost_equal(symmetric_cayley_predictor(prob, X_k, 50.0), X_k)


def test_predictor_hand_value_two_by_two():
    # Q = [[0,-1],[-1,0]], X_k = e_1: G = (0,-1), A = [[0,1],[-1,0]]; at
    # eta = 2 the Cayley transform rotates e_1 onto e_2 exactly
    prob = StiefelQuadraticProblem([np.array([[0.0, -1.0], [-1.0, 0.0]])])
    X_k = np.array([[1.0], [0.0]])
    Y0 = symmetric_cayley_predictor(prob, X_k, 2.0)
    assert_allclose(Y0, [[0.0], [1.0]], atol=1e-14)


def test_predictor_stays_on_manifold_at_large_eta():
    prob, X0 = gen_stiefel(10, 3, 50.0, 6)
    Y0 = symmetric_cayley_predictor(prob, X0, 1e3)
    assert stiefel_feasibility(Y0) <= 1e-10


# -------------------------------------------------------------- inner steps


def test_newton_krylov_exits_at_critical_point():
    prob = eigen_problem()
    X_k = np.array([[0.0], [1.0]])
    Y, iters, ok = newton_krylov_step(prob, X_k, 5.0, SolverConfig())
    assert ok and iters == 0
    assert_array_almost_equal(Y, X_k)


def test_newton_krylov_agrees_with_dense_newton():
    prob, X0 = gen_stiefel(8, 2, 10.0, 7)
    cfg = SolverConfig(eta=0.5, inner_tol=1e-12, max_inner=50)
    Y_nk, _, ok_nk = newton_krylov_step(prob, X0, 0.5, cfg)
    Y_dn, _, ok_dn = dense_newton_step(prob, X0, 0.5, cfg)
    assert ok_nk and ok_dn
    assert np.max(np.abs(Y_nk - Y_dn)) <= 1e-8


def test_newton_krylov_residuals_decrease_superlinearly():
    prob, X0 = gen_stiefel(6, 1, 5.0, 2)
    cfg = SolverConfig(eta=0.5, inner_tol=1e-12, max_inner=60)
    hist = []
    _, _, ok = newton_krylov_step(prob, X0, 0.5, cfg, residual_history=hist)
    assert ok
    h = np.asarray(hist)
    assert np.all(np.diff(h) < 0)
    assert h[-1] <= 1e-12
    # contraction factors shrink as the root is approached
    ratios = h[1:] / h[:-1]
    assert np.all(np.diff(ratios) < 0)


def test_newton_krylov_trial_is_feasible_even_at_huge_eta():
    prob, X0 = gen_stiefel(8, 2, 100.0, 8)
    Y, _, _ = newton_krylov_step(prob, X0, 1e6, SolverConfig(max_inner=40))
    assert stiefel_feasibility(Y) <= 1e-10


def test_dense_newton_zero_eta_returns_anchor():
    prob, X0 = gen_stiefel(5, 2, 3.0, 9)
    Y, iters, ok = dense_newton_step(prob, X0, 0.0, SolverConfig())
    assert ok and iters == 0
    assert_array_almost_equal(Y, X0)


def test_preconditioned_krylov_finds_same_root():
    prob, X0 = gen_stiefel(8, 2, 100.0, 1)
    cfg = SolverConfig(eta=100.0, max_outer=100, kkt_tol=1e-9, inner_tol=1e-11)
    X_plain, _ = solve_stiefel(prob, X0, cfg, precondition=False)
    X_pre, _ = solve_stiefel(prob, X0, cfg, precondition=True)
    assert np.max(np.abs(X_plain - X_pre)) <= 1e-8


# ------------------------------------------------------------- outer solves


def test_solve_stiefel_eigenvector_instance():
    # minimizing x^T diag(1,4) x / 2 over unit vectors: min value 1/2 at e_1
    prob = eigen_problem()
    X0 = np.full((2, 1), np.sqrt(0.5))
    for inner in ("nk_gmres", "dense_nr"):
        X, trace = solve_stiefel(prob, X0.copy(), SolverConfig(eta=100.0), inner=inner)
        assert trace.status == "converged"
        assert abs(trace.f_values[-1] - 0.5) <= 1e-8
        assert abs(abs(X[0, 0]) - 1.0) <= 1e-6


def test_solve_stiefel_square_identity_case_is_stationary():
    # p = n with Q = I: every orthogonal matrix is optimal, gradient is zero
    n = 4
    prob = StiefelQuadraticProblem([np.eye(n)] * n)
    X, trace = solve_stiefel(prob, np.eye(n), SolverConfig())
    assert len(trace) == 1
    assert trace.status == "converged"
    assert_array_almost_equal(X, np.eye(n))


def test_solve_stiefel_iterates_stay_feasible():
    for eta in (1.0, 100.0, 1e4):
        prob, X0 = gen_stiefel(12, 2, 100.0, 10)
        cfg = SolverConfig(eta=eta, max_outer=150, kkt_tol=1e-8)
        _, trace = solve_stiefel(prob, X0, cfg)
        assert np.max(trace.feasibility) <= 1e-10


def test_solve_stiefel_cross_solver_agreement():
    prob, X0 = gen_stiefel(10, 2, 30.0, 11)
    cfg = SolverConfig(eta=100.0, max_outer=200, kkt_tol=1e-10, inner_tol=1e-12)
    X_nk, tr_nk = solve_stiefel(prob, X0, cfg, inner="nk_gmres")
    X_dn, tr_dn = solve_stiefel(prob, X0, cfg, inner="dense_nr")
    assert tr_nk.status == "converged" and tr_dn.status == "converged"
    assert np.max(np.abs(X_nk - X_dn)) <= 1e-8


def test_solve_stiefel_alternative_retractions_converge():
    prob, X0 = gen_stiefel(8, 2, 100.0, 1)
    cfg = SolverConfig(eta=100.0, max_outer=100, kkt_tol=1e-9, inner_tol=1e-11)
    X_ref, _ = solve_stiefel(prob, X0, cfg)
    for retraction in ("polar", "none"):
        X_alt, trace = solve_stiefel(prob, X0, cfg, retraction=retraction)
        assert trace.status == "converged"
        assert np.max(np.abs(X_alt - X_ref)) <= 1e-7
        assert stiefel_feasibility(X_alt) <= 1e-10


def test_solve_stiefel_descent():
    prob, X0 = gen_stiefel(16, 2, 50.0, 12)
    _, trace = solve_stiefel(prob, X0, SolverConfig(eta=300.0, max_outer=80))
    assert np.all(np.diff(trace.f_values) <= 1e-10)


def test_solve_stiefel_reports_stall_when_inner_cannot_converge():
    # a 1e-16 inner residual is only reachable when the step size controller
    # shrinks eta far enough for the predictor alone to nail the step; the
    # controller soon exhausts its floor and must report the stall honestly
    prob, X0 = gen_stiefel(6, 2, 10.0, 13)
    cfg = SolverConfig(eta=100.0, max_inner=1, inner_tol=1e-16, max_outer=50)
    X, trace = solve_stiefel(prob, X0, cfg)
    assert trace.status == "stalled"
    assert len(trace) < cfg.max_outer
    assert np.all(np.diff(trace.f_values) <= 1e-10)
    assert np.linalg.norm(X.T @ X - np.eye(2)) <= 1e-10


def test_solve_stiefel_validates_inputs():
    prob, X0 = gen_stiefel(5, 2, 10.0, 14)
    with pytest.raises(ValueError):
        solve_stiefel(prob, X0 * 2.0, SolverConfig())
    with pytest.raises(ValueError):
        solve_stiefel(prob, X0, SolverConfig(), inner="bfgs")
    with pytest.raises(ValueError):
        solve_stiefel(prob, X0, SolverConfig(), retraction="exp")


# ---------------------------------------------------------------- retractions


def test_retractions_restore_orthonormality():
    rng = np.random.default_rng(15)
    M = rng.standard_normal((9, 3))
    for retract in (retract_qr, retract_polar):
        Y = retract(M)
        assert stiefel_feasibility(Y) <= 1e-12


def test_retract_qr_fixes_signs():
    # an already-orthonormal frame must be returned unchanged
    rng = np.random.default_rng(16)
    X = retract_qr(rng.standard_normal((7, 2)))
    assert_allclose(retract_qr(X), X, atol=1e-12)


def test_retract_polar_is_closest_orthonormal_frame():
    # polar factor of a near-frame beats any QR factor in Frobenius distance
    rng = np.random.default_rng(17)
    X = retract_qr(rng.standard_normal((6, 2)))
    M = X + 0.01 * rng.standard_normal((6, 2))
    Y = retract_polar(M)
    assert np.linalg.norm(M - Y) <= np.linalg.norm(M - retract_qr(M)) + 1e-12
