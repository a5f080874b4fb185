import numpy as np
import pytest

from bosonmoments.errors import RankDeficient
from bosonmoments.learner import align_unitary, find_v_fock, general_fock_bound
from bosonmoments.measurement import (
    noise_scales,
    random_probes,
    recover_sigma1,
    recover_sigma2,
    sample_budget_active,
    sample_budget_passive,
    samples_to_csv,
    simulate_correlators,
    state_sigmas,
    symmetric_basis,
)
from bosonmoments.symplectic import random_passive, random_symplectic


def test_exact_correlators():
    smp = simulate_correlators(np.eye(1), (1,), [np.eye(1)], np.inf)
    values = {s.degree: s.value for s in smp}
    assert values[2] == 6 and values[1] == 2
    W = random_passive(2, 0)
    probes = random_probes(2, seed=1)
    smp = simulate_correlators(W, (1, 0), probes, np.inf, degrees=(2,))
    s2 = state_sigmas(W, (1, 0))[1]
    for s in smp:
        U = probes[s.unitary_index]
        x = np.kron(U[s.i].conj(), U[s.j].conj())
        assert np.isclose(s.value, np.vdot(x, s2 @ x).real)


def test_symmetric_basis_isometry():
    B = symmetric_basis(3)
    assert np.allclose(B.T @ B, np.eye(6))


def test_recover_exact():
    for f, seed in [((1, 0), 0), ((2, 1, 0), 1), ((1,), 2)]:
        n = len(f)
        W = random_passive(n, seed)
        probes = random_probes(n, seed=seed)
        smp = simulate_correlators(W, f, probes, np.inf)
        s1, s2 = state_sigmas(W, f)
        assert np.linalg.norm(recover_sigma2(smp, probes) - s2) <= 1e-10 * np.linalg.norm(s2)
        assert np.linalg.norm(recover_sigma1(smp, probes) - s1) <= 1e-10 * np.linalg.norm(s1)


def test_single_mode_recovery():
    probes = [np.eye(1)]
    smp = simulate_correlators(np.eye(1), (1,), probes, 1e6, seed=3)
    assert abs(recover_sigma2(smp, probes)[0, 0] - 6) < 0.05


def test_rank_deficient():
    probes = [np.eye(2)]
    smp = simulate_correlators(np.eye(2), (1, 0), probes, np.inf)
    with pytest.raises(RankDeficient):
        recover_sigma2(smp, probes)


def test_noise_calibration():
    W = random_passive(2, 0)
    f = (1, 1)
    probes = [np.eye(2)]
    std1, std2 = noise_scales(W, f)
    assert std2 == 12 and std1 == 3
    draws = np.array([
        simulate_correlators(W, f, probes, 100.0, seed=k, degrees=(2,))[0].value
        for k in range(1000)
    ])
    exact = simulate_correlators(W, f, probes, np.inf, degrees=(2,))[0].value
    assert abs(draws.std() / (std2 / 10) - 1) < 0.1
    assert abs(draws.mean() - exact) < 5 * std2 / 10 / np.sqrt(1000)


def test_active_noise_scale():
    S = random_symplectic(2, 0.5, 1)
    std1, std2 = noise_scales(S, (1, 0))
    assert std2 > 4 and std1 > 2


def test_error_linear_in_noise():
    W = random_passive(2, 4)
    f = (1, 0)
    probes = random_probes(2, seed=4)
    s2 = state_sigmas(W, f)[1]
    shots = np.logspace(4, 6, 5)
    errs = [np.linalg.norm(recover_sigma2(simulate_correlators(W, f, probes, sh, seed=9),
                                          probes) - s2) for sh in shots]
    x = np.log(1 / np.sqrt(shots))
    y = np.log(errs)
    r = np.corrcoef(x, y)[0, 1]
    assert r ** 2 > 0.99


def test_pipeline():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        n = 2 + seed % 2
        f = tuple(int(x) for x in rng.integers(0, 3, size=n))
        W = random_passive(n, rng)
        probes = random_probes(n, seed=rng)
        smp = simulate_correlators(W, f, probes, 1e8, seed=seed)
        r1, r2 = recover_sigma1(smp, probes), recover_sigma2(smp, probes)
        s1, s2 = state_sigmas(W, f)
        res = find_v_fock(r1, r2)
        assert res.g == tuple(sorted(f))
        bound = general_fock_bound(np.linalg.norm(r1 - s1, 2), np.linalg.norm(r2 - s2, 2),
                                   n, max(f))
        assert align_unitary(res.V, W, res.g, f).residual <= bound


def test_csv_dump():
    smp = simulate_correlators(np.eye(1), (1,), [np.eye(1)], np.inf, degrees=(2,))
    text = samples_to_csv(smp)
    assert text.splitlines() == ["probe_index,i,j,value,shots", "0,0,0,6,inf"]


def test_budgets():
    b = sample_budget_passive(2, 1, 2, alpha=1)
    assert (b.N1, b.N2) == (4096, 8192)
    assert sample_budget_passive(3, 1, 1, alpha=1).N1 == 9 * sample_budget_passive(3, 1, 1, 0).N1
    assert sample_budget_passive(2, 2, 2, 1).N1 == 64 * b.N1
    b = sample_budget_active(1, 1, 0, 0, 0)
    assert (b.N1, b.N2) == (1, 1)
    assert sample_budget_active(2, 1, 0, 0, 0).N1 == 2 ** 76
    assert sample_budget_active(1, 1, 0.1, 0, 0).N1 == 162755
    assert sample_budget_active(1, 1, 0.2, 0, 0).N1 > sample_budget_active(1, 1, 0.1, 0, 0).N1
    assert sample_budget_active(3, 2, 0.1, 1, 1).N2 > sample_budget_active(2, 2, 0.1, 1, 1).N2
    with pytest.raises(ValueError):
        sample_budget_passive(0, 1, 1)
