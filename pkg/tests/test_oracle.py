import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonmoments.errors import (
    CutoffTooSmall,
    PhotonNumberMismatch,
    PreconditionViolated,
    TooLarge,
    TooManyPhotons,
)
from bosonmoments.moments import lambda_fock, transform_lambda
from bosonmoments.oracle import (
    TruncatedState,
    evolve_fock,
    fock_index,
    fock_state,
    gaussian_unitary_truncated,
    ladder_token,
    moment_bruteforce,
    passive_fidelity,
    passive_fock_overlap,
    passive_unitary_truncated,
    perm_perturbation_check,
    permanent,
    permanent_naive,
    quadrature_moments,
    squeeze_truncated,
)
from bosonmoments.symplectic import passive_embed, random_passive, random_symplectic


def test_permanent_examples():
    assert permanent(np.eye(2)) == 1
    assert permanent(np.ones((2, 2))) == 2
    assert permanent(np.zeros((0, 0))) == 1
    with pytest.raises(TooLarge):
        permanent(np.zeros((25, 25)))


def test_ryser_matches_naive():
    rng = np.random.default_rng(1)
    for m in range(1, 7):
        for _ in range(100):
            M = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            ref = permanent_naive(M)
            assert abs(permanent(M) - ref) <= 1e-10 * abs(ref)


def test_passive_overlap_examples():
    W = np.eye(2)
    assert np.isclose(passive_fock_overlap(W, (1, 1), (1, 1)), 1)
    assert np.isclose(passive_fock_overlap(W, (2, 0), (1, 1)), 0)
    bs = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
    assert abs(passive_fock_overlap(bs, (1, 1), (1, 1))) < 1e-15
    with pytest.raises(PhotonNumberMismatch):
        passive_fock_overlap(W, (1, 0), (1, 1))
    with pytest.raises(TooManyPhotons):
        passive_fock_overlap(W, (11, 10), (11, 10))
    assert passive_fidelity(W, W, (1, 0), (1, 1)) == 0.0


def test_overlap_matches_simulator():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        W = random_passive(n, rng)
        d = 5
        U = passive_unitary_truncated(W, d)
        for _ in range(3):
            g = tuple(int(x) for x in rng.multinomial(int(rng.integers(0, 5)), [1 / n] * n))
            f = tuple(int(x) for x in rng.permutation(g))
            sim = U[fock_index(f, d), fock_index(g, d)]
            assert abs(passive_fock_overlap(W, f, g) - sim) <= 1e-8


def test_perm_perturbation_examples():
    res = perm_perturbation_check(2, 3, 0.0, seed=0)
    assert np.isclose(res["lhs"], 1) and res["rhs"] == 1 and res["holds"]
    for seed in range(20):
        res = perm_perturbation_check(1, 2, 0.1, seed=seed)
        assert np.isclose(res["rhs"], 0.75) and res["holds"]
    with pytest.raises(PreconditionViolated):
        perm_perturbation_check(3, 3, 0.01)
    with pytest.raises(PreconditionViolated):
        perm_perturbation_check(1, 2, 0.6)


def test_truncated_unitaries():
    assert np.allclose(gaussian_unitary_truncated(np.eye(2), 8), np.eye(8))
    d = 30
    vac = squeeze_truncated(0.5, d)[:, 0]
    x2 = moment_bruteforce(TruncatedState(1, d, vac.astype(complex)), [("x", 0), ("x", 0)])
    assert abs(x2 - np.exp(1.0) / 2) <= 1e-6


def test_unitarity_on_low_subspace():
    S = random_symplectic(2, 0.3, 5)
    d = 24
    U = gaussian_unitary_truncated(S, d, check=((0, 0), (1, 1)))
    low = [fock_index((i, j), d) for i in range(3) for j in range(3)]
    cols = U[:, low]
    assert np.linalg.norm(cols.conj().T @ cols - np.eye(len(low)), 2) <= 1e-7


def test_cutoff_guard():
    with pytest.raises(CutoffTooSmall):
        evolve_fock(np.diag([np.exp(1.5), np.exp(-1.5)]), (2,), 8)


def test_bruteforce_anchors():
    vac = fock_state((0,), 10)
    assert np.isclose(moment_bruteforce(vac, [("x", 0), ("x", 0)]), 0.5)
    one = fock_state((1,), 10)
    word = [ladder_token(0, False)] * 2 + [ladder_token(0, True)] * 2
    assert np.isclose(moment_bruteforce(one, word), 6)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=2), st.integers(0, 1000))
def test_dual_oracle_entries(f, seed):
    n = len(f)
    S = random_symplectic(n, 0.3, seed)
    state = evolve_fock(S, f, 36 if n == 1 else 26)
    dim = 2 * n
    kern = transform_lambda(S, lambda_fock(f, 2))
    sim = quadrature_moments(state, 4).reshape(dim * dim, dim * dim)
    assert np.abs(kern - sim).max() <= 1e-8
    W = random_passive(n, seed)
    pstate = evolve_fock(W, f, 6)
    kern = transform_lambda(passive_embed(W), lambda_fock(f, 1))
    assert np.abs(kern - quadrature_moments(pstate, 2)).max() <= 1e-10
