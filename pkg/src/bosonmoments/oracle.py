"""
Ground-truth engines used to check the analytic code paths.

Two independent oracles live here: matrix permanents (Fock amplitudes of
passive transformations) and a brute-force simulator on a truncated Fock
space. Neither shares code with :mod:`bosonmoments.moments`.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from math import factorial, prod, sqrt

import numba
import numpy as np
import scipy.linalg

from .errors import (
    CutoffTooSmall,
    DimensionMismatch,
    PhotonNumberMismatch,
    PreconditionViolated,
    TooLarge,
    TooManyPhotons,
)
from .symplectic import euler, is_orthogonal, passive_part

MAX_PERMANENT_DIM = 24
MAX_PHOTONS = 20
LEAK_TOL = 1e-8


@numba.njit(cache=True)
def _ryser_gray(A):
    m = A.shape[0]
    rowsum = np.zeros(m, dtype=np.complex128)
    total = 0j
    gray = 0
    for k in range(1, 1 << m):
        # bit flipped between consecutive Gray codes = index of lowest set bit of k
        j = 0
        while not (k >> j) & 1:
            j += 1
        gray ^= 1 << j
        if (gray >> j) & 1:
            for i in range(m):
                rowsum[i] += A[i, j]
        else:
            for i in range(m):
                rowsum[i] -= A[i, j]
        p = 1.0 + 0j
        for i in range(m):
            p *= rowsum[i]
        bits = 0
        g = gray
        while g:
            bits += g & 1
            g >>= 1
        if bits & 1:
            total -= p
        else:
            total += p
    if m & 1:
        return -total
    return total


def permanent(M):
    """Permanent via Ryser's formula in Gray-code order."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"permanent needs a square matrix, got {M.shape}")
    m = M.shape[0]
    if m > MAX_PERMANENT_DIM:
        raise TooLarge(f"dimension {m} exceeds {MAX_PERMANENT_DIM}")
    if m == 0:
        return 1.0 + 0j
    return complex(_ryser_gray(np.ascontiguousarray(M)))


def permanent_naive(M):
    """Leibniz expansion; O(m * m!) and only meant as a cross-check."""
    M = np.asarray(M, dtype=complex)
    m = M.shape[0]
    if m > 9:
        raise TooLarge("naive permanent is limited to dimension 9")
    total = 0j
    rows = range(m)
    for perm in permutations(rows):
        total += prod(M[i, perm[i]] for i in rows)
    return complex(total)


def passive_fock_overlap(W, f, g):
    """
    Amplitude ``<f| U_W |g>`` of a passive Gaussian unitary.

    ``U_W`` is the unitary with ``U_W^dag a U_W = W a``; the amplitude is the
    permanent of ``W`` with row ``i`` repeated ``f_i`` times and column ``j``
    repeated ``g_j`` times, divided by ``sqrt(prod f! prod g!)``.
    """
    W = np.asarray(W, dtype=complex)
    f = tuple(int(x) for x in f)
    g = tuple(int(x) for x in g)
    if len(f) != W.shape[0] or len(g) != W.shape[1]:
        raise DimensionMismatch("occupation vectors do not match the unitary")
    if sum(f) != sum(g):
        raise PhotonNumberMismatch(f"total photon numbers differ: {sum(f)} vs {sum(g)}")
    total = sum(f)
    if total > MAX_PHOTONS:
        raise TooManyPhotons(f"{total} photons exceed the limit {MAX_PHOTONS}")
    if total == 0:
        return 1.0 + 0j
    rows = np.repeat(np.arange(len(f)), f)
    cols = np.repeat(np.arange(len(g)), g)
    norm = sqrt(prod(factorial(x) for x in f) * prod(factorial(x) for x in g))
    return permanent(W[np.ix_(rows, cols)]) / norm


def passive_fidelity(W, V, f, g):
    """``|<f| U_W^dag U_V |g>|``, zero when photon numbers differ."""
    W = np.asarray(W, dtype=complex)
    V = np.asarray(V, dtype=complex)
    if sum(f) != sum(g):
        return 0.0
    return abs(passive_fock_overlap(W.conj().T @ V, f, g))


def block_identity(b, n):
    """The ``bn x bn`` matrix made of ``b x b`` copies of the n x n identity."""
    return np.tile(np.eye(n), (b, b))


def perm_perturbation_check(b, n, epsilon, seed=None):
    """
    Evaluate both sides of the perturbed block-identity permanent inequality.

    Returns a dict with ``lhs = perm(I_block + eps E)/(b!)^n``,
    ``rhs = 1 - eps b n / (1 - eps b n)`` and ``holds = lhs >= rhs``, where
    ``E`` has entries uniform in [-1, 1].
    """
    if b < 1 or n < 1 or b * n > 8:
        raise PreconditionViolated("need b, n >= 1 and b*n <= 8")
    if not 0 <= epsilon < 1.0 / (b * n):
        raise PreconditionViolated("need 0 <= epsilon < 1/(b n)")
    rng = np.random.default_rng(seed)
    E = rng.uniform(-1.0, 1.0, size=(b * n, b * n))
    value = permanent(block_identity(b, n) + epsilon * E)
    lhs = value.real / factorial(b) ** n
    x = epsilon * b * n
    rhs = 1.0 - x / (1.0 - x)
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs >= rhs)}


# ---------------------------------------------------------------------------
# truncated Fock space


def annihilation(d):
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)


@lru_cache(maxsize=32)
def _mode_ops(n, d):
    a1 = annihilation(d)
    eye = np.eye(d)
    ops = []
    for k in range(n):
        mats = [eye] * n
        mats[k] = a1
        full = mats[0]
        for m in mats[1:]:
            full = np.kron(full, m)
        full.setflags(write=False)
        ops.append(full)
    return tuple(ops)


def mode_operator(kind, mode, n, d):
    """
    Truncated single-mode operator acting on the full ``d^n`` space.

    ``kind`` is one of ``"a"``, ``"ad"``, ``"x"``, ``"p"``.
    """
    a = _mode_ops(n, d)[mode]
    if kind == "a":
        return a
    if kind == "ad":
        return a.T
    if kind == "x":
        return (a + a.T) / np.sqrt(2.0)
    if kind == "p":
        return 1j * (a.T - a) / np.sqrt(2.0)
    raise ValueError(f"unknown operator kind {kind!r}")


def quadrature_token(q, n):
    """Token for quadrature index ``q`` in the ``(x_1..x_n, p_1..p_n)`` ordering."""
    return ("x", q) if q < n else ("p", q - n)


def ladder_token(mode, dagger):
    return ("ad" if dagger else "a", mode)


@dataclass(frozen=True)
class TruncatedState:
    """Pure state on ``n`` modes, each truncated to ``cutoff`` levels (mode 0 most significant)."""

    n: int
    cutoff: int
    amplitudes: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def leakage(self, levels=2):
        """Largest probability mass any single mode carries on its top ``levels`` levels."""
        probs = np.abs(self.amplitudes.reshape((self.cutoff,) * self.n)) ** 2
        worst = 0.0
        for k in range(self.n):
            marginal = probs.sum(axis=tuple(i for i in range(self.n) if i != k))
            worst = max(worst, float(marginal[-levels:].sum()))
        return worst

    def check(self, leak_tol=LEAK_TOL):
        leak = self.leakage()
        if leak > leak_tol:
            raise CutoffTooSmall(
                f"truncation leakage {leak:.2e} exceeds {leak_tol:.0e} at cutoff {self.cutoff}"
            )
        return self


def fock_index(occ, d):
    idx = 0
    for m in occ:
        if m >= d:
            raise CutoffTooSmall(f"occupation {m} does not fit cutoff {d}")
        idx = idx * d + m
    return idx


def fock_state(f, cutoff):
    f = tuple(int(x) for x in f)
    psi = np.zeros(cutoff ** len(f), dtype=complex)
    psi[fock_index(f, cutoff)] = 1.0
    return TruncatedState(len(f), cutoff, psi)


def superposition_state(terms, cutoff):
    """Normalised ``sum_k c_k |occ_k>`` from ``(occ, amplitude)`` pairs."""
    terms = list(terms)
    n = len(terms[0][0])
    psi = np.zeros(cutoff ** n, dtype=complex)
    for occ, amp in terms:
        if len(occ) != n:
            raise DimensionMismatch("all terms must have the same number of modes")
        psi[fock_index(occ, cutoff)] += amp
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("superposition has zero norm")
    return TruncatedState(n, cutoff, psi / norm)


def _exp_antihermitian(G):
    # exp(G) for anti-Hermitian G through the Hermitian matrix iG
    w, V = np.linalg.eigh(1j * G)
    return (V * np.exp(-1j * w)) @ V.conj().T


def _unitary_log(W):
    T, Z = scipy.linalg.schur(np.asarray(W, dtype=complex), output="complex")
    phases = np.angle(np.diag(T))
    return (Z * (1j * phases)) @ Z.conj().T


def passive_unitary_truncated(W, cutoff):
    """``U_W = exp(sum_ij L_ij a_i^dag a_j)`` with ``L = log W`` on the truncated space."""
    W = np.asarray(W, dtype=complex)
    n = W.shape[0]
    L = _unitary_log(W)
    ops = _mode_ops(n, cutoff)
    dim = cutoff ** n
    G = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            if L[i, j] != 0:
                G += L[i, j] * (ops[i].T @ ops[j])
    return _exp_antihermitian(G)


def squeeze_truncated(s, cutoff):
    """Single-mode ``exp((s/2)(a^dag^2 - a^2))``, which maps ``x -> e^s x``."""
    a = annihilation(cutoff)
    G = 0.5 * s * (a.T @ a.T - a @ a)
    return _exp_antihermitian(G.astype(complex))


def gaussian_unitary_truncated(S, cutoff, check=((),)):
    """
    Matrix of ``U_S`` on the truncated Fock space, with ``U_S^dag r U_S = S r``.

    Built as the product of Euler factors. ``check`` lists input occupations
    (empty tuple = vacuum) whose images must stay below the leakage tolerance.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0] // 2
    if is_orthogonal(S):
        U = passive_unitary_truncated(passive_part(S), cutoff)
    else:
        dec = euler(S)
        middle = squeeze_truncated(dec.squeezings[0], cutoff)
        for s in dec.squeezings[1:]:
            middle = np.kron(middle, squeeze_truncated(s, cutoff))
        U = (
            passive_unitary_truncated(passive_part(dec.O), cutoff)
            @ middle
            @ passive_unitary_truncated(passive_part(dec.V), cutoff)
        )
    for occ in check:
        occ = tuple(occ) or (0,) * n
        state = TruncatedState(n, cutoff, U[:, fock_index(occ, cutoff)])
        state.check()
    return U


def evolve_fock(transform, f, cutoff):
    """``U |f>`` for a passive unitary (n x n complex) or symplectic matrix (2n x 2n real)."""
    transform = np.asarray(transform)
    f = tuple(int(x) for x in f)
    n = len(f)
    if transform.shape == (n, n):
        U = passive_unitary_truncated(transform, cutoff)
    else:
        U = gaussian_unitary_truncated(transform, cutoff, check=())
    state = TruncatedState(n, cutoff, U[:, fock_index(f, cutoff)])
    return state.check()


def _apply(tokens, state, adjoint=False):
    vec = state.amplitudes
    seq = tokens if adjoint else reversed(tokens)
    for kind, mode in seq:
        op = mode_operator(kind, mode, state.n, state.cutoff)
        vec = (op.conj().T if adjoint else op) @ vec
    return vec


def moment_bruteforce(state, word):
    """
    ``<psi| w_1 ... w_k |psi>`` for a word of ``(kind, mode)`` tokens.

    The word is split in half and evaluated as an inner product of two
    vectors, so each side applies at most ``k/2`` operators to the state;
    with negligible mass on the top two levels a word of length 4 is exact.
    """
    word = list(word)
    if len(word) > 4:
        raise ValueError("brute-force words are limited to length 4")
    state.check()
    half = len(word) // 2
    left = _apply(word[:half], state, adjoint=True)
    right = _apply(word[half:], state)
    return complex(np.vdot(left, right))


def quadrature_moments(state, order):
    """All ``<r_i1 ... r_it>`` of a truncated state as a ``(2n,)*order`` tensor."""
    state.check()
    n = state.n
    dim = 2 * n
    ops = [mode_operator(*quadrature_token(q, n), n, state.cutoff) for q in range(dim)]
    half = order // 2

    def chains(length, reverse):
        out = {(): state.amplitudes}
        for _ in range(length):
            nxt = {}
            for key, vec in out.items():
                for q in range(dim):
                    nxt[key + (q,)] = ops[q] @ vec
            out = nxt
        if reverse:
            # key (q1..qk) holds r_qk .. r_q1 psi; relabel so index order matches the word
            return {k[::-1]: v for k, v in out.items()}
        return out

    # left vectors: (r_i1 .. r_ih)^dag psi = r_ih .. r_i1 psi (quadratures are Hermitian)
    left = chains(half, reverse=False)
    right = chains(order - half, reverse=True)
    out = np.zeros((dim,) * order, dtype=complex)
    for lk, lv in left.items():
        for rk, rv in right.items():
            out[lk + rk] = np.vdot(lv, rv)
    return out
