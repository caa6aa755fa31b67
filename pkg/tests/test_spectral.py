import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from surfridge import (check_conditions, jacobi_eigh, perturbation_bounds,
                       spectral_frame)
from surfridge.density import LocalDensityInfo


def random_sym(rng, D, scale=1.0):
    A = rng.normal(scale=scale, size=(D, D))
    return 0.5 * (A + A.T)


def reference_projector(H, d):
    w, U = np.linalg.eigh(H)  # ascending
    V = U[:, :H.shape[0] - d]
    return V @ V.T


@pytest.mark.parametrize("D", [1, 2, 3, 5, 8])
def test_jacobi_matches_reference(D):
    rng = np.random.default_rng(D)
    for _ in range(20):
        H = random_sym(rng, D)
        w, U = jacobi_eigh(H)
        assert np.all(np.diff(w) <= 0)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(H)[::-1], atol=1e-10)
        np.testing.assert_allclose(U @ np.diag(w) @ U.T, H, atol=1e-10)
        np.testing.assert_allclose(U.T @ U, np.eye(D), atol=1e-10)
        pivots = U[np.argmax(np.abs(U), axis=0), np.arange(D)]
        assert np.all(pivots > 0)


def test_jacobi_batch_independent():
    rng = np.random.default_rng(7)
    stack = np.stack([random_sym(rng, 4) for _ in range(9)])
    stack[3] = np.diag([3.0, 2.0, 1.0, 0.0])
    w_all, U_all = jacobi_eigh(stack)
    for i in range(len(stack)):
        w, U = jacobi_eigh(stack[i])
        assert np.array_equal(w, w_all[i])
        assert np.array_equal(U, U_all[i])


def test_jacobi_large_scale_and_errors():
    H = np.diag([1e12, -1e12]) + 1e6 * np.array([[0, 1], [1, 0]])
    w, U = jacobi_eigh(H)
    np.testing.assert_allclose(U @ np.diag(w) @ U.T, H, rtol=0, atol=1e-3)
    with pytest.raises(ValueError):
        jacobi_eigh(np.zeros((2, 3)))


def test_frame_diagonal_example():
    fr = spectral_frame([2, 5], np.diag([-1.0, -3.0]), 1)
    np.testing.assert_allclose(fr.eigenvalues, [-1, -3])
    np.testing.assert_allclose(fr.L, np.diag([0.0, 1.0]), atol=1e-15)
    np.testing.assert_allclose(fr.G, [0, 5], atol=1e-15)
    assert fr.eigengap == 2 and fr.lambda_next == -3


def test_frame_d_zero_is_identity():
    rng = np.random.default_rng(0)
    g = rng.normal(size=3)
    fr = spectral_frame(g, random_sym(rng, 3), 0)
    assert np.array_equal(fr.L, np.eye(3))
    assert np.array_equal(fr.G, g)


def test_frame_errors():
    with pytest.raises(ValueError):
        spectral_frame([1, 2], [[1.0, 0.5], [0.0, 1.0]], 1)
    with pytest.raises(ValueError):
        spectral_frame([1, 2], np.eye(2), 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 31), st.data())
def test_frame_invariants(D, seed, data):
    d = data.draw(st.integers(0, D - 1))
    rng = np.random.default_rng(seed)
    H = random_sym(rng, D, scale=rng.uniform(0.1, 10))
    g = rng.normal(size=D)
    fr = spectral_frame(g, H, d)
    I = np.eye(D)
    np.testing.assert_allclose(fr.V.T @ fr.V, np.eye(D - d), atol=1e-10)
    np.testing.assert_allclose(fr.L @ fr.L, fr.L, atol=1e-10)
    np.testing.assert_allclose(fr.L, fr.L.T, atol=1e-12)
    np.testing.assert_allclose(fr.L + fr.L_perp, I, atol=1e-15)
    np.testing.assert_allclose(fr.L @ fr.L_perp, 0, atol=1e-10)
    assert np.linalg.norm(fr.L_perp @ fr.G) <= 1e-10 * np.linalg.norm(g)
    resid = H @ fr.V - fr.V @ np.diag(fr.eigenvalues[d:])
    assert np.linalg.norm(resid) <= 1e-9 * np.linalg.norm(H)
    if d > 0:
        w = np.sort(np.linalg.eigvalsh(H))[::-1]
        if w[d - 1] - w[d] > 1e-6:
            np.testing.assert_allclose(fr.L, reference_projector(H, d), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 31))
def test_frame_rotation_equivariance(D, seed):
    rng = np.random.default_rng(seed)
    # separated spectrum in a random basis keeps every projector well defined
    P = special_ortho_group.rvs(D, random_state=rng)
    H = P @ np.diag(np.linspace(1, -D, D)) @ P.T
    Q = special_ortho_group.rvs(D, random_state=rng)
    g = rng.normal(size=D)
    for d in range(D):
        L1 = spectral_frame(g, H, d).L
        L2 = spectral_frame(Q @ g, Q @ H @ Q.T, d).L
        np.testing.assert_allclose(L2, Q @ L1 @ Q.T, atol=1e-9)


def test_random_five_by_five_projector():
    rng = np.random.default_rng(5)
    H = random_sym(rng, 5)
    fr = spectral_frame(rng.normal(size=5), H, 2)
    U, w = fr.eigenvectors, fr.eigenvalues
    np.testing.assert_allclose(U @ np.diag(w) @ U.T, H, atol=1e-10)
    np.testing.assert_allclose(fr.L, reference_projector(H, 2), atol=1e-10)


def _info(g, H, hp):
    return LocalDensityInfo(value=1.0, gradient=np.asarray(g, float),
                            hessian=np.asarray(H, float), hessian_deriv=hp, log=True)


def test_conditions_constant_quadratic():
    H = np.diag([-0.25, -1.0])
    info = _info([-0.5, 0.0], H, np.zeros((4, 2)))
    rep = check_conditions(info, 1, 0.5)
    assert rep.a1_holds and rep.a2_holds
    assert rep.lambda_next == -1.0 and rep.eigengap == 0.75
    assert rep.a2_rhs == pytest.approx(0.25 / (2 * 2 ** 1.5))
    assert not check_conditions(info, 1, 1.5).a1_holds


def test_conditions_definitions_and_errors():
    rng = np.random.default_rng(0)
    for _ in range(50):
        H = random_sym(rng, 3)
        hp = rng.normal(size=(9, 3))
        beta = rng.uniform(0.01, 2)
        rep = check_conditions(_info(rng.normal(size=3), H, hp), 1, beta)
        assert rep.a1_holds == (rep.lambda_next < -beta and rep.eigengap > beta)
        assert rep.a2_holds == (rep.a2_lhs < rep.a2_rhs)
    tie = check_conditions(_info([1, 0], -np.eye(2), np.zeros((4, 2))), 1, 0.1)
    assert tie.eigengap == 0 and not tie.a1_holds
    with pytest.raises(ValueError):
        check_conditions(_info([1, 0], -np.eye(2), None), 1, 0.1)
    with pytest.raises(ValueError):
        check_conditions(_info([1, 0], -np.eye(2), np.zeros((4, 2))), 1, 0.0)


def test_conditions_on_circle_oracle(circle_oracle):
    from surfridge import SurfConfig, scms_run
    ridge = scms_run(circle_oracle, [[4.0, 0.0]],
                     SurfConfig(step_tol=1e-12, grad_tol=1e-10)).destinations[0]
    for offset in ([0.0, 0.0], [0.2, 0.1], [-0.2, -0.1], [0.1, 0.2]):
        x = ridge + offset
        for info in (circle_oracle.eval(x, with_hprime=True),
                     circle_oracle.log_eval(x, with_hprime=True)):
            lam = spectral_frame(info.gradient, info.hessian, 1).lambda_next
            rep = check_conditions(info, 1, 0.5 * abs(lam))
            assert rep.a1_holds and rep.a2_holds


def test_perturbation_examples():
    H = np.diag([0.0, -2.0])
    assert perturbation_bounds(H, H, 1) == (0.0, 0.0, 0.0, 0.0)
    eps = 1e-3
    wl, wr, dl, dr = perturbation_bounds(H, np.diag([0.0, -2.0 + eps]), 1)
    assert wl == pytest.approx(eps, abs=1e-15) and wr == pytest.approx(eps, abs=1e-15)
    assert dl == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError, match="gap degenerate"):
        perturbation_bounds(-np.eye(2), np.diag([-1.0, -1.1]), 1)


@pytest.mark.parametrize("D", [2, 3, 4, 5, 6])
def test_weyl_and_davis_kahan(D):
    rng = np.random.default_rng(100 + D)
    for _ in range(500):
        H = random_sym(rng, D)
        d = int(rng.integers(1, D))
        w = np.linalg.eigvalsh(H)[::-1]
        gap = w[d - 1] - w[d]
        E = random_sym(rng, D)
        E *= rng.uniform(0, 0.25) * gap / np.linalg.norm(E, 2)
        wl, wr, dl, dr = perturbation_bounds(H, H + E, d)
        assert wl <= wr + 1e-12
        assert dl <= dr + 1e-12
