import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonmoments.errors import (
    NonUnitaryInput,
    NotPositiveDefinite,
    NotSymmetric,
    NotSymplectic,
)
from bosonmoments.moments import lambda_fock
from bosonmoments.symplectic import (
    euler,
    is_orthogonal,
    is_symplectic,
    max_squeezing,
    nearest_orthogonal_symplectic,
    omega,
    passive_embed,
    random_passive,
    random_symplectic,
    symplectic_defect,
    williamson,
)

seeds = st.integers(0, 2**32 - 1)
modes = st.integers(1, 4)


def test_omega_structure():
    Om = omega(3)
    assert np.array_equal(Om.T, -Om)
    assert np.array_equal(Om @ Om, -np.eye(6))


def test_passive_embed_examples():
    assert np.array_equal(passive_embed(np.eye(2)), np.eye(4))
    assert np.array_equal(passive_embed(np.array([[1j]])), np.array([[0.0, -1.0], [1.0, 0.0]]))
    R = passive_embed(random_passive(3, 1))
    assert is_symplectic(R) and is_orthogonal(R)


def test_passive_embed_rejects_non_unitary():
    with pytest.raises(NonUnitaryInput):
        passive_embed(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_passive_embed_homomorphism():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        U1, U2 = random_passive(n, rng), random_passive(n, rng)
        lhs = passive_embed(U1 @ U2)
        assert np.abs(lhs - passive_embed(U1) @ passive_embed(U2)).max() <= 1e-12


def test_random_passive():
    z = random_passive(1, 5)
    assert z.shape == (1, 1) and abs(abs(z[0, 0]) - 1) < 1e-12
    assert np.array_equal(random_passive(3, 7), random_passive(3, 7))
    assert np.allclose(np.linalg.norm(random_passive(4, 2), axis=0), 1, atol=1e-12)


def test_random_symplectic_examples():
    assert is_orthogonal(random_symplectic(3, 0.0, 1))
    S = random_symplectic(3, 1.0, 2)
    assert symplectic_defect(S) <= 1e-10
    assert np.linalg.norm(S, 2) <= np.e + 1e-12
    assert abs(np.linalg.norm(S, 2) - np.linalg.norm(np.linalg.inv(S), 2)) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(modes, st.floats(0, 1.5), seeds)
def test_generated_symplectic_properties(n, s_max, seed):
    S = random_symplectic(n, s_max, seed)
    assert symplectic_defect(S) <= 1e-10
    big = np.linalg.norm(S, 2)
    assert abs(big - np.linalg.norm(np.linalg.inv(S), 2)) <= 1e-10 * big


def test_williamson_examples():
    res = williamson(0.5 * np.eye(4))
    assert np.allclose(res.nu, 0.5, atol=1e-12)
    assert is_symplectic(res.R) and is_orthogonal(res.R, tol=1e-8)
    sq = williamson(0.5 * np.diag([np.exp(1.4), np.exp(-1.4)]))
    assert np.allclose(sq.nu, [0.5], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=4), st.floats(0, 1.5), seeds)
def test_williamson_fock_covariance(f, s_max, seed):
    n = len(f)
    S = random_symplectic(n, s_max, seed)
    M = S @ lambda_fock(f, 1).real @ S.T
    res = williamson(M)
    assert np.allclose(res.nu, 0.5 + np.sort(f), atol=1e-8)
    assert np.all(np.diff(res.nu) >= 0)
    assert symplectic_defect(res.R) <= 1e-9 * (1 + np.linalg.norm(res.R, 2))
    assert np.linalg.norm(res.reconstruct() - M, 2) <= 1e-8 * (1 + np.linalg.norm(M, 2))


@settings(max_examples=40, deadline=None)
@given(modes, seeds)
def test_williamson_invariance(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((2 * n, 2 * n))
    M = A @ A.T + np.eye(2 * n)
    T = random_symplectic(n, 1.0, rng)
    assert np.allclose(williamson(M).nu, williamson(T @ M @ T.T).nu, rtol=1e-8, atol=1e-8)


def test_williamson_errors():
    with pytest.raises(NotSymmetric):
        williamson(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        williamson(np.diag([1.0, -1.0]))


def test_euler_examples():
    O = passive_embed(random_passive(2, 3))
    assert np.allclose(euler(O).squeezings, 0)
    S = random_symplectic(2, 1.0, 4)
    dec = euler(S)
    assert np.linalg.norm(dec.reconstruct() - S) <= 1e-9 * np.linalg.norm(S)
    assert abs(np.linalg.norm(S, 2) - np.exp(dec.squeezings.max())) <= 1e-10
    assert abs(max_squeezing(S) - dec.squeezings[0]) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(modes, st.floats(0, 2.0), seeds)
def test_euler_factors(n, s_max, seed):
    S = random_symplectic(n, s_max, seed)
    dec = euler(S)
    for F in (dec.O, dec.V):
        assert is_symplectic(F, tol=1e-8) and is_orthogonal(F, tol=1e-8)
    assert np.all(np.diff(dec.squeezings) <= 1e-12)
    assert np.all(dec.squeezings >= 0)
    assert np.linalg.norm(dec.reconstruct() - S) <= 1e-9 * np.linalg.norm(S)


def test_euler_rejects_non_symplectic():
    with pytest.raises(NotSymplectic):
        euler(np.diag([2.0, 2.0]))


def test_nearest_orthogonal_symplectic():
    O = passive_embed(random_passive(2, 9))
    assert np.allclose(nearest_orthogonal_symplectic(O), O, atol=1e-12)
    D = np.diag([np.exp(0.5), np.exp(-0.5)])
    P = nearest_orthogonal_symplectic(D)
    assert np.allclose(P, np.eye(2), atol=1e-12)
    dist = np.linalg.norm(D - P, 2)
    assert abs(dist - (np.exp(0.5) - 1)) <= 1e-12
    assert dist <= np.sqrt(np.e - 1)
    for seed in range(30):
        S = random_symplectic(3, 0.1, seed)
        lhs = np.linalg.norm(S - nearest_orthogonal_symplectic(S), 2)
        assert lhs <= np.sqrt(np.linalg.norm(S.T @ S - np.eye(6), 2))
