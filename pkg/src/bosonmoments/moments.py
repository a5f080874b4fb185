"""
Moment matrices of Fock states under Gaussian unitaries.

``sigma^(t)`` holds ``<a_i1..a_it a^dag_j1..a^dag_jt>`` as an ``n^t x n^t``
matrix, ``Lambda^(t)`` holds ``<r_i1..r_it r_j1..r_jt>`` as a
``(2n)^t x (2n)^t`` matrix. Row multi-indices are flattened row-major.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

import numpy as np

from .errors import DimensionMismatch, WordTooLong

MAX_WORD = 8


def as_fock(f):
    """Validate an occupation vector and return it as a tuple of ints."""
    f = tuple(int(x) for x in f)
    if not f:
        raise ValueError("occupation vector must be non-empty")
    if any(x < 0 for x in f):
        raise ValueError(f"occupations must be non-negative, got {f}")
    return f


def fock_expectation(f, word):
    """
    Exact ``<f| op_1 op_2 ... op_k |f>`` for a word of ladder operators.

    ``word`` is a sequence of ``(mode, dagger)`` pairs; ``dagger`` true means
    a creation operator. The rightmost operator acts first. The squared
    amplitude is accumulated as an integer and is always a perfect square
    when the per-mode counts balance, so the result is exact.
    """
    f = as_fock(f)
    word = list(word)
    if len(word) > MAX_WORD:
        raise WordTooLong(f"word length {len(word)} exceeds {MAX_WORD}")
    occ = list(f)
    weight = 1
    for mode, dagger in reversed(word):
        m = occ[mode]
        if dagger:
            weight *= m + 1
            occ[mode] = m + 1
        else:
            if m == 0:
                return 0j
            weight *= m
            occ[mode] = m - 1
    if tuple(occ) != f:
        return 0j
    root = isqrt(weight)
    assert root * root == weight
    return complex(root)


@lru_cache(maxsize=256)
def _ladder_tensor(f, order):
    # entries <alpha_1 ... alpha_order> with alpha_k = a_k (k < n) or a^dag_{k-n}
    n = len(f)
    dim = 2 * n
    out = np.zeros((dim,) * order, dtype=complex)
    for idx in np.ndindex(*out.shape):
        # per-mode creation and annihilation counts must balance
        balance = [0] * n
        for k in idx:
            if k < n:
                balance[k] -= 1
            else:
                balance[k - n] += 1
        if any(balance):
            continue
        word = [(k % n, k >= n) for k in idx]
        out[idx] = fock_expectation(f, word)
    out.setflags(write=False)
    return out


def ladder_tensor(f, order):
    """Full ladder-operator moment tensor of ``|f>`` of the given order."""
    return _ladder_tensor(as_fock(f), int(order)).copy()


def ladder_to_quadrature(n):
    """Matrix ``C`` with ``r = C (a_1..a_n, a^dag_1..a^dag_n)``."""
    h = 1.0 / np.sqrt(2.0)
    eye = np.eye(n)
    return np.block([[h * eye, h * eye], [-1j * h * eye, 1j * h * eye]])


def sigma_fock(f, t):
    """``sigma^(t)_0`` of the Fock state ``|f>`` for ``t`` in {1, 2}."""
    f = as_fock(f)
    n = len(f)
    s1 = np.eye(n, dtype=complex) + np.diag(np.asarray(f, dtype=complex))
    if t == 1:
        return s1
    if t != 2:
        raise ValueError("t must be 1 or 2")
    swap = swap_matrix(n)
    T = np.zeros((n * n, n * n), dtype=complex)
    for i, fi in enumerate(f):
        T[i * n + i, i * n + i] = fi * (fi + 1)
    return np.kron(s1, s1) @ (np.eye(n * n) + swap) - T


def lambda_fock(f, t):
    """``Lambda^(t)_0`` of ``|f>`` built from the ladder kernel."""
    f = as_fock(f)
    n = len(f)
    C = ladder_to_quadrature(n)
    if t == 1:
        m2 = _ladder_tensor(f, 2)
        return np.einsum("ia,jb,ab->ij", C, C, m2)
    if t != 2:
        raise ValueError("t must be 1 or 2")
    m4 = _ladder_tensor(f, 4)
    lam = np.einsum("ia,jb,kc,ld,abcd->ijkl", C, C, C, C, m4, optimize=True)
    dim = 2 * n
    return lam.reshape(dim * dim, dim * dim)


def swap_matrix(d):
    """SWAP on ``C^d (x) C^d``."""
    P = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            P[i * d + j, j * d + i] = 1.0
    return P


def _degree(matrix, base):
    size = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape[1] != size:
        raise DimensionMismatch(f"moment matrix must be square, got {matrix.shape}")
    if size == base:
        return 1
    if size == base * base:
        return 2
    raise DimensionMismatch(f"dimension {size} is not {base} or {base}^2")


def transform_sigma(W, sigma):
    """``W^{(x)t} sigma W^{dag (x)t}``."""
    W = np.asarray(W, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    t = _degree(sigma, W.shape[0])
    Wt = W if t == 1 else np.kron(W, W)
    return Wt @ sigma @ Wt.conj().T


def transform_lambda(S, lam):
    """``S^{(x)t} Lambda (S^T)^{(x)t}``."""
    S = np.asarray(S, dtype=float)
    lam = np.asarray(lam, dtype=complex)
    t = _degree(lam, S.shape[0])
    St = S if t == 1 else np.kron(S, S)
    return St @ lam @ St.T


_ROW_PHASE = np.array([1.0, 1j])
_COL_PHASE = np.array([1.0, -1j])


def lambda_to_sigma(lam1, lam2):
    """Convert quadrature-basis moments to ladder-basis ``(sigma1, sigma2)``."""
    lam1 = np.asarray(lam1, dtype=complex)
    lam2 = np.asarray(lam2, dtype=complex)
    dim = lam1.shape[0]
    if lam1.shape != (dim, dim) or dim % 2 or lam2.shape != (dim * dim, dim * dim):
        raise DimensionMismatch(
            f"inconsistent shapes {lam1.shape} and {lam2.shape} for Lambda^(1), Lambda^(2)"
        )
    n = dim // 2
    l1 = lam1.reshape(2, n, 2, n)
    sigma1 = 0.5 * np.einsum("a,b,aibj->ij", _ROW_PHASE, _COL_PHASE, l1)
    l2 = lam2.reshape(2, n, 2, n, 2, n, 2, n)
    sigma2 = 0.25 * np.einsum(
        "a,b,c,d,aibjckdl->ijkl",
        _ROW_PHASE, _ROW_PHASE, _COL_PHASE, _COL_PHASE, l2,
        optimize=True,
    )
    return sigma1, sigma2.reshape(n * n, n * n)


def operator_norm(M, rtol=1e-12, max_iter=20000):
    """
    Largest singular value.

    Exact SVD below dimension 256. Above it, Hermitian inputs use the extreme
    eigenvalues and everything else falls back to power iteration on
    ``M^dag M`` with a fixed start vector, so the value is reproducible.
    """
    M = np.asarray(M)
    if max(M.shape) < 256:
        return float(np.linalg.norm(M, 2))
    if M.shape[0] == M.shape[1] and np.allclose(M, M.conj().T, rtol=0, atol=1e-14):
        import scipy.linalg

        lo = scipy.linalg.eigh(M, eigvals_only=True, subset_by_index=[0, 0])[0]
        hi = scipy.linalg.eigh(
            M, eigvals_only=True, subset_by_index=[M.shape[0] - 1, M.shape[0] - 1]
        )[0]
        return float(max(abs(lo), abs(hi)))
    v = np.random.default_rng(0).standard_normal(M.shape[1]).astype(M.dtype)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = M.conj().T @ (M @ v)
        new = np.linalg.norm(w)
        if new == 0:
            return 0.0
        v = w / new
        if abs(new - est) <= rtol * new:
            est = new
            break
        est = new
    return float(np.sqrt(est))


NOISE_MODELS = ("gaussian-entry", "uniform-entry", "adversarial-eigvec")


@dataclass(frozen=True)
class NoiseSpec:
    epsilon: float
    model: str = "gaussian-entry"
    seed: int | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.model not in NOISE_MODELS:
            raise ValueError(f"unknown noise model {self.model!r}")


def _is_hermitian(M, tol=1e-10):
    return np.linalg.norm(M - M.conj().T) <= tol * (1.0 + np.linalg.norm(M))


def _swap_hermitian(M, d, tol=1e-10):
    # Lambda^(2) satisfies Lambda^dag = SWAP Lambda SWAP instead of plain Hermiticity
    sw = swap_matrix(d)
    return np.linalg.norm(M.conj().T - sw @ M @ sw) <= tol * (1.0 + np.linalg.norm(M))


def noise_matrix(m, spec):
    """Unit operator-norm perturbation with the same conjugation symmetry as ``m``."""
    m = np.asarray(m)
    shape = m.shape
    rng = np.random.default_rng(spec.seed)
    if spec.model == "gaussian-entry":
        E = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    elif spec.model == "uniform-entry":
        E = rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)
    else:
        herm = 0.5 * (m + m.conj().T)
        _, vecs = np.linalg.eigh(herm)
        top = vecs[:, -1]
        E = np.outer(top, top.conj())
    if _is_hermitian(m):
        E = 0.5 * (E + E.conj().T)
    else:
        d = isqrt(shape[0])
        if d * d == shape[0] and _swap_hermitian(m, d):
            sw = swap_matrix(d)
            E = 0.5 * (E + sw @ E.conj().T @ sw)
    norm = operator_norm(E)
    return E / norm if norm > 0 else E


def add_noise(m, spec):
    """Return ``m + epsilon E`` with ``||E|| = 1``."""
    m = np.asarray(m, dtype=complex)
    if spec.epsilon == 0:
        return m.copy()
    return m + spec.epsilon * noise_matrix(m, spec)
