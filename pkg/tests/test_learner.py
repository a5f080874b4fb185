from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonmoments.errors import (
    DimensionMismatch,
    InsufficientColumns,
    NegativeOccupation,
    NonHermitianInput,
    NotACovariance,
    RoundingAmbiguous,
)
from bosonmoments.learner import (
    align_symplectic,
    align_unitary,
    constant_fock_bound,
    find_q,
    find_v,
    find_v_fock,
    general_fock_bound,
    reconstruct_lambdas,
    round_occupations,
)
from bosonmoments.moments import (
    NoiseSpec,
    add_noise,
    lambda_fock,
    sigma_fock,
    swap_matrix,
    transform_lambda,
    transform_sigma,
)
from bosonmoments.oracle import passive_fidelity
from bosonmoments.symplectic import (
    is_symplectic,
    is_unitary,
    passive_embed,
    random_passive,
    random_symplectic,
)


def _sigmas(W, f):
    return transform_sigma(W, sigma_fock(f, 1)), transform_sigma(W, sigma_fock(f, 2))


def test_find_v_trivial_block():
    V, diag = find_v(np.eye(9), 0)
    assert np.array_equal(V, np.eye(3))


def test_find_v_exact():
    W = random_passive(4, 11)
    V, diag = find_v(transform_sigma(W, sigma_fock((2,) * 4, 2)), 2)
    assert is_unitary(V)
    assert passive_fidelity(W, V, (2,) * 4, (2,) * 4) >= 1 - 1e-8
    assert diag["polar_correction_norm"] < 1e-10


def test_find_v_noisy_bound():
    for seed in range(20):
        W = random_passive(2, seed)
        s2 = add_noise(transform_sigma(W, sigma_fock((1, 1), 2)), NoiseSpec(1e-4, seed=seed))
        V, _ = find_v(s2, 1)
        assert align_unitary(V, W).residual <= constant_fock_bound(1e-4, 2, 1)
    assert np.isclose(constant_fock_bound(1e-4, 2, 1), 8.944e-4, atol=1e-7)


def test_find_v_errors():
    with pytest.raises(NonHermitianInput):
        find_v(np.triu(np.ones((4, 4))), 1)
    # the leading eigenvectors of A only involve the first two basis states on the left
    weights = np.array([15, 14, 13, 12, 11, 10, 2, 1, 0], dtype=float)
    A = np.diag(weights)
    sigma2 = 4 * (np.eye(9) + swap_matrix(3)) - 2 * A
    with pytest.raises(InsufficientColumns) as info:
        find_v(sigma2, 1)
    assert info.value.diagnostics["columns_found"] == 2


def test_find_v_fock_examples():
    W = random_passive(3, 3)
    res = find_v_fock(*_sigmas(W, (3, 0, 1)))
    assert res.g == (0, 1, 3)
    assert passive_fidelity(W, res.V, (3, 0, 1), res.g) >= 1 - 1e-10
    res = find_v_fock(*_sigmas(W, (1, 1, 2)))
    assert res.g == (1, 1, 2)
    assert res.block_partition == [[0, 1], [2]]
    assert passive_fidelity(W, res.V, (1, 1, 2), res.g) >= 1 - 1e-8
    res = find_v_fock(*_sigmas(random_passive(2, 1), (0, 0)))
    assert res.g == (0, 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=5), st.integers(0, 2**31))
def test_exact_recovery_property(f, seed):
    W = random_passive(len(f), seed)
    res = find_v_fock(*_sigmas(W, tuple(f)))
    assert res.g == tuple(sorted(f))
    assert passive_fidelity(W, res.V, tuple(f), res.g) >= 1 - 1e-8


def test_find_v_fock_deterministic():
    s1, s2 = _sigmas(random_passive(3, 5), (1, 2, 2))
    assert np.array_equal(find_v_fock(s1, s2).V, find_v_fock(s1, s2).V)


def test_rounding():
    assert round_occupations([0.2, 1.4, 2.6]) == (0, 1, 3)
    with pytest.raises(RoundingAmbiguous):
        round_occupations([0.5])
    with pytest.raises(NegativeOccupation):
        round_occupations([-0.7])


def test_rounding_robustness():
    W = random_passive(3, 8)
    f = (0, 1, 2)
    s1, s2 = _sigmas(W, f)
    shift = W @ np.diag([0.49, -0.49, 0.3]) @ W.conj().T
    assert find_v_fock(s1 + shift, s2).g == (0, 1, 2)
    big = W @ np.diag([0.0, 0.0, 0.6]) @ W.conj().T
    assert find_v_fock(s1 + big, s2).g != tuple(sorted(f))
    with pytest.raises(NegativeOccupation):
        find_v_fock(s1 - 0.7 * np.eye(3), s2)


def test_general_bound_grid():
    rng = np.random.default_rng(0)
    for seed in range(20):
        f = tuple(int(x) for x in rng.integers(0, 3, size=3))
        W = random_passive(3, rng)
        s1, s2 = _sigmas(W, f)
        s1 = add_noise(s1, NoiseSpec(1e-5, seed=seed))
        s2 = add_noise(s2, NoiseSpec(1e-5, seed=seed + 100))
        res = find_v_fock(s1, s2)
        resid = align_unitary(res.V, W, res.g, f).residual
        assert resid <= general_fock_bound(1e-5, 1e-5, 3, max(f))


def test_find_q_examples():
    f = (0, 1)
    res = find_q(lambda_fock(f, 1), lambda_fock(f, 2))
    assert res.g == (0, 1)
    assert align_symplectic(res.Q, np.eye(4), res.g, f).residual <= 1e-10
    S = random_symplectic(2, 1.0, 3)
    f = (1, 0)
    lam1, lam2 = transform_lambda(S, lambda_fock(f, 1)), transform_lambda(S, lambda_fock(f, 2))
    res = find_q(lam1, lam2)
    assert is_symplectic(res.Q)
    r1, r2 = reconstruct_lambdas(res.Q, res.g)
    assert np.linalg.norm(r2 - lam2, 2) <= 1e-6 * np.linalg.norm(lam2, 2)
    sq = np.diag([np.exp(0.7), np.exp(-0.7)])
    res = find_q(transform_lambda(sq, lambda_fock((0,), 1)),
                 transform_lambda(sq, lambda_fock((0,), 2)))
    assert res.g == (0,)
    assert np.allclose(res.Q @ res.Q.T, sq @ sq.T, atol=1e-8)


def test_find_q_rejects_sub_vacuum():
    with pytest.raises(NotACovariance):
        find_q(0.1 * np.eye(2), lambda_fock((0,), 2))


def _brute_unitary(V, W):
    n = V.shape[0]
    best = np.inf
    for perm in permutations(range(n)):
        X = np.zeros((n, n), dtype=complex)
        for k, j in enumerate(perm):
            z = np.vdot(W[:, j], V[:, k])
            X[j, k] = z / abs(z)
        best = min(best, np.linalg.norm(V - W @ X, 2))
    return best


def test_align_unitary():
    W = random_passive(3, 1)
    rep = align_unitary(W, W)
    assert rep.residual < 1e-12
    assert np.allclose(rep.phi, 1) and np.array_equal(rep.p, np.eye(3))
    P = np.eye(3)[:, [2, 0, 1]]
    V = W @ np.diag(np.exp(1j * np.array([0.3, -1.0, 2.0]))) @ P
    assert align_unitary(V, W).residual <= 1e-12
    for seed in range(10):
        V, W = random_passive(3, seed), random_passive(3, seed + 50)
        assert abs(align_unitary(V, W).residual - _brute_unitary(V, W)) <= 1e-12
    with pytest.raises(DimensionMismatch):
        align_unitary(np.eye(2), np.eye(3))


def test_align_unitary_respects_occupations():
    W = random_passive(3, 2)
    V = W[:, [1, 0, 2]]
    assert align_unitary(V, W).residual < 1e-12
    # swapping columns of different occupation is not allowed
    assert align_unitary(V, W, g=(1, 2, 3), f=(1, 2, 3)).residual > 0.1


def test_align_unitary_vacuum_block():
    W = random_passive(3, 4)
    Y = random_passive(2, 5)
    V = W.copy()
    V[:, :2] = W[:, :2] @ Y
    assert align_unitary(V, W, g=(0, 0, 1), f=(0, 0, 1)).residual < 1e-12


def test_align_symplectic():
    S = random_symplectic(3, 0.5, 6)
    assert align_symplectic(S, S).residual <= 1e-10
    X = np.diag(np.exp(1j * np.array([0.2, 1.1, -0.4]))) @ np.eye(3)[:, [1, 2, 0]]
    assert align_symplectic(S @ passive_embed(X), S).residual <= 1e-10
    for seed in range(5):
        Q = random_symplectic(3, 0.3, seed + 10)
        rep = align_symplectic(Q, S)
        best = np.inf
        for perm in permutations(range(3)):
            Z = np.linalg.solve(S, Q)
            n = 3
            comp = 0.5 * (Z[:n, :n] + Z[n:, n:]) + 0.5j * (Z[n:, :n] - Z[:n, n:])
            Y = np.zeros((3, 3), dtype=complex)
            for k, j in enumerate(perm):
                z = comp[j, k]
                Y[j, k] = z / abs(z)
            best = min(best, np.linalg.norm(Q - S @ passive_embed(Y), 2))
        assert abs(rep.residual - best) <= 1e-10
