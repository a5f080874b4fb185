"""
Simulated estimation of ladder moment matrices from photon-number correlators.

After a known passive probe ``U`` the diagonal correlators
``<a_i a_j a_i^dag a_j^dag>`` are linear functionals of the unknown
``sigma^(2)``. Stacking them over enough random probes gives an
over-determined real linear system for the Hermitian part of ``sigma^(2)``
living on the symmetric subspace. Shot noise is modelled as additive
Gaussian noise with a variance bound that depends on the state.
"""

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, exp, sqrt

import mpmath
import numpy as np

from .errors import DimensionMismatch, RankDeficient
from .moments import (
    lambda_fock,
    lambda_to_sigma,
    sigma_fock,
    transform_lambda,
    transform_sigma,
)
from .symplectic import _haar_unitary, max_squeezing

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class CorrelatorSample:
    """One estimated diagonal correlator; ``degree`` is 1 for ``<a_i a_i^dag>``."""

    unitary_index: int
    i: int
    j: int
    value: float
    shots: float
    degree: int = 2


@dataclass(frozen=True)
class SampleBudget:
    N1: int
    N2: int
    alpha: float
    beta: float
    c1: float
    c2: float
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        return {"N1": self.N1, "N2": self.N2, "inputs": dict(self.inputs)}


def random_probes(n, count=None, seed=None):
    """``count`` Haar-random probe unitaries (default ``3 n^2``)."""
    count = 3 * n * n if count is None else int(count)
    rng = np.random.default_rng(seed)
    return [_haar_unitary(n, rng) for _ in range(count)]


def state_sigmas(transform, f):
    """``(sigma1, sigma2)`` of ``U|f>`` for a unitary or symplectic transform."""
    transform = np.asarray(transform)
    n = len(f)
    if transform.shape == (n, n):
        return (
            transform_sigma(transform, sigma_fock(f, 1)),
            transform_sigma(transform, sigma_fock(f, 2)),
        )
    if transform.shape != (2 * n, 2 * n):
        raise DimensionMismatch(f"transform shape {transform.shape} does not fit n={n}")
    S = transform.real
    lam1 = transform_lambda(S, lambda_fock(f, 1))
    lam2 = transform_lambda(S, lambda_fock(f, 2))
    return lambda_to_sigma(lam1, lam2)


def noise_scales(transform, f):
    """
    Per-shot standard deviations ``(std1, std2)`` of the single-mode and pair correlators.

    Passive states have at most ``N = |f|_1`` photons in any mode, so the
    observables are bounded by ``N + 1`` and ``(N + 1)(N + 2)``. Active
    states have no such bound; the second moments of the observables are
    bounded through the squeezing instead.
    """
    transform = np.asarray(transform)
    n = len(f)
    if transform.shape == (n, n):
        total = sum(f)
        return float(total + 1), float((total + 1) * (total + 2))
    s = max_squeezing(transform.real)
    fmax = max(f)
    return exp(2 * s) * (fmax + 1), exp(4 * s) * (fmax + 1) ** 2


def _pair_vector(U, i, j):
    # (U (x) U)^dag e_ij
    return np.kron(U[i].conj(), U[j].conj())


def simulate_correlators(transform, f, probes, shots, seed=None, degrees=(1, 2)):
    """
    Noisy correlator estimates for every probe and mode pair ``i <= j``.

    ``shots`` may be ``inf`` for exact values. Each cell draws its noise from
    its own stream keyed by ``(seed, degree, probe, i, j)``, so results do
    not depend on evaluation order.
    """
    sigma1, sigma2 = state_sigmas(transform, f)
    std1, std2 = noise_scales(transform, f)
    n = len(f)
    root = 0 if seed is None else int(seed)
    out = []
    for k, U in enumerate(probes):
        for degree in degrees:
            std = (std1 if degree == 1 else std2) / sqrt(shots)
            pairs = [(i, i) for i in range(n)] if degree == 1 else [
                (i, j) for i in range(n) for j in range(i, n)
            ]
            for i, j in pairs:
                if degree == 1:
                    x = U[i].conj()
                    exact = np.vdot(x, sigma1 @ x).real
                else:
                    x = _pair_vector(U, i, j)
                    exact = np.vdot(x, sigma2 @ x).real
                noise = 0.0
                if std > 0:
                    noise = np.random.default_rng([root, degree, k, i, j]).normal(0.0, std)
                out.append(CorrelatorSample(k, i, j, float(exact + noise), shots, degree))
    return out


def symmetric_basis(n):
    """Isometry ``n^2 x n(n+1)/2`` onto the symmetric subspace of ``C^n (x) C^n``."""
    cols = []
    for i in range(n):
        for j in range(i, n):
            v = np.zeros(n * n)
            if i == j:
                v[i * n + i] = 1.0
            else:
                v[i * n + j] = v[j * n + i] = 1.0 / sqrt(2.0)
            cols.append(v)
    return np.column_stack(cols)


def _design_row(y):
    # real coefficients of y^dag H y in the parameters of a Hermitian H
    m = y.size
    diag = np.abs(y) ** 2
    upper = []
    for k in range(m):
        for l in range(k + 1, m):
            c = np.conj(y[k]) * y[l]
            upper.append((2 * c.real, -2 * c.imag))
    upper = np.asarray(upper).reshape(-1, 2)
    return np.concatenate([diag, upper[:, 0], upper[:, 1]])


def _assemble(params, m):
    H = np.diag(params[:m]).astype(complex)
    off = (len(params) - m) // 2
    re = params[m: m + off]
    im = params[m + off:]
    idx = 0
    for k in range(m):
        for l in range(k + 1, m):
            H[k, l] = re[idx] + 1j * im[idx]
            H[l, k] = re[idx] - 1j * im[idx]
            idx += 1
    return H


def _solve(rows, values):
    A = np.asarray(rows)
    b = np.asarray(values)
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    A = A / scale
    sol, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    if A.shape[0] < A.shape[1] or sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficient(
            f"design matrix has rank {rank} for {A.shape[1]} unknowns; add probes"
        )
    return sol / scale


def _pick(samples, degree):
    return [smp for smp in samples if smp.degree == degree]


def recover_sigma2(samples, probes):
    """Least-squares ``sigma^(2)`` from pair correlators under the given probes."""
    probes = [np.asarray(U) for U in probes]
    n = probes[0].shape[0]
    B = symmetric_basis(n)
    rows, values = [], []
    for smp in _pick(samples, 2):
        y = B.T @ _pair_vector(probes[smp.unitary_index], smp.i, smp.j)
        rows.append(_design_row(y))
        values.append(smp.value)
    m = B.shape[1]
    H = _assemble(_solve(rows, values), m)
    sigma2 = B @ H @ B.T
    return 0.5 * (sigma2 + sigma2.conj().T)


def recover_sigma1(samples, probes):
    """Least-squares ``sigma^(1)`` from single-mode correlators ``<a_i a_i^dag>``."""
    probes = [np.asarray(U) for U in probes]
    n = probes[0].shape[0]
    rows, values = [], []
    for smp in _pick(samples, 1):
        rows.append(_design_row(probes[smp.unitary_index][smp.i].conj()))
        values.append(smp.value)
    sigma1 = _assemble(_solve(rows, values), n)
    return 0.5 * (sigma1 + sigma1.conj().T)


def samples_to_csv(samples):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["probe_index", "i", "j", "value", "shots"])
    for smp in samples:
        writer.writerow([smp.unitary_index, smp.i, smp.j, "%.17g" % smp.value, smp.shots])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# sample budgets


def _exact(x):
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, float) and x.is_integer():
        return Fraction(int(x))
    return None


def _ceil_product(c, terms, exp_arg=0):
    """
    ``ceil(c * prod(base ** power) * e ** exp_arg)``.

    Integer arithmetic is used whenever every base, power and ``c`` is an
    integer (or exact fraction with integral powers) and ``exp_arg == 0``;
    otherwise the product is evaluated with 60-digit arithmetic.
    """
    exact = [(_exact(b), _exact(p)) for b, p in terms]
    cc = _exact(c)
    if exp_arg == 0 and cc is not None and all(
        b is not None and p is not None and p.denominator == 1 for b, p in exact
    ):
        value = cc
        for b, p in exact:
            value *= b ** int(p)
        return max(1, ceil(value))
    with mpmath.workdps(60):
        value = mpmath.mpf(c) * mpmath.e ** mpmath.mpf(exp_arg)
        for b, p in terms:
            value *= mpmath.mpf(b) ** mpmath.mpf(p)
        return max(1, int(mpmath.ceil(value)))


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if value <= 0:
            raise ValueError(f"{name} must be positive")


def sample_budget_passive(n, f_max, l1, alpha=1, c1=1, c2=1):
    """
    Samples per observable for the passive learner.

    ``N1 = c1 n^(9+2 alpha) f_max^6 l1`` and
    ``N2 = c2 n^(9+2 alpha) f_max^2 l1^2``, rounded up.
    """
    _check_positive(n=n, f_max=f_max, l1=l1, c1=c1, c2=c2)
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    power = 9 + 2 * alpha
    N1 = _ceil_product(c1, [(n, power), (f_max, 6), (l1, 1)])
    N2 = _ceil_product(c2, [(n, power), (f_max, 2), (l1, 2)])
    inputs = {"mode": "passive", "n": n, "f_max": f_max, "l1": l1,
              "alpha": alpha, "c1": c1, "c2": c2}
    return SampleBudget(N1, N2, alpha, 0, c1, c2, inputs)


def sample_budget_active(n, f_max, s, alpha=1, beta=1, c1=1, c2=1):
    """
    Samples per observable for the active learner.

    ``N1 = c1 n^(76+16 alpha+beta) f_max^98 e^(120 s)`` and
    ``N2 = c2 n^(12+2 alpha+beta) f_max^11 e^(24 s)``, rounded up.
    """
    _check_positive(n=n, f_max=f_max, c1=c1, c2=c2)
    if s < 0 or alpha < 0 or beta < 0:
        raise ValueError("s, alpha and beta must be non-negative")
    N1 = _ceil_product(c1, [(n, 76 + 16 * alpha + beta), (f_max, 98)], 120 * s)
    N2 = _ceil_product(c2, [(n, 12 + 2 * alpha + beta), (f_max, 11)], 24 * s)
    inputs = {"mode": "active", "n": n, "f_max": f_max, "s": s,
              "alpha": alpha, "beta": beta, "c1": c1, "c2": c2}
    return SampleBudget(N1, N2, alpha, beta, c1, c2, inputs)
