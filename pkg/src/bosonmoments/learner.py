"""
Learning Gaussian transformations of Fock states from their moment matrices.

* :func:`find_v` recovers ``W`` (up to column phases and order) from
  ``sigma^(2)`` of ``U_W |b...b>``.
* :func:`find_v_fock` handles an arbitrary Fock input using ``sigma^(1)``
  to split the modes into blocks of equal occupation.
* :func:`find_q` handles an arbitrary Gaussian unitary by first undoing the
  active part with a Williamson decomposition of the covariance matrix.
"""

from dataclasses import dataclass, field
from itertools import permutations
from math import prod

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    DimensionMismatch,
    InsufficientColumns,
    NegativeOccupation,
    NonHermitianInput,
    NotACovariance,
    RoundingAmbiguous,
)
from .moments import lambda_to_sigma, swap_matrix
from .symplectic import passive_embed, williamson

TAU_SCHMIDT = 1e-6
TAU_RANK = 0.5
TAU_ROUND = 1e-9
TAU_MOM = 0.25


@dataclass
class LearnResultPassive:
    V: np.ndarray
    g: tuple
    block_partition: list
    diagnostics: dict = field(default_factory=dict)


@dataclass
class LearnResultActive:
    Q: np.ndarray
    g: tuple
    R: np.ndarray
    diagnostics: dict = field(default_factory=dict)


@dataclass
class AlignmentReport:
    """``phi`` holds the diagonal phases, ``p`` the permutation matrix."""

    phi: np.ndarray
    p: np.ndarray
    residual: float
    free_blocks: np.ndarray = None

    @property
    def phase_permutation(self):
        """The aligning matrix; includes the free vacuum-block unitary when present."""
        if self.free_blocks is not None:
            return self.free_blocks
        return np.diag(self.phi) @ self.p


def _check_hermitian(M, name):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {M.shape}")
    if np.linalg.norm(M - M.conj().T, 2) > 1e-9 * (1.0 + np.linalg.norm(M, 2)):
        raise NonHermitianInput(f"{name} is not Hermitian")
    return 0.5 * (M + M.conj().T)


def _polar_unitary(M):
    u, _, vh = np.linalg.svd(M)
    return u @ vh


def _harvest(vectors, n):
    """
    Schmidt-decompose each vector and collect candidate columns.

    Each candidate carries the separation of its Schmidt coefficient from
    the neighbouring coefficients (and from zero). Singular vectors of
    nearly equal coefficients are mixtures of true columns, so candidates
    are later accepted in order of decreasing separation.
    """
    candidates = []
    spectra = []
    for idx, vec in enumerate(vectors.T):
        u, svals, _ = np.linalg.svd(vec.reshape(n, n))
        spectra.append(svals)
        padded = np.concatenate([[np.inf], svals, [0.0]])
        for k, coeff in enumerate(svals):
            if coeff <= TAU_SCHMIDT:
                continue
            sep = min(padded[k] - coeff, coeff - padded[k + 2])
            candidates.append((sep, idx, k, u[:, k]))
    return candidates, spectra


def _accept(candidates, n):
    columns = []
    basis = np.zeros((n, 0), dtype=complex)
    order = sorted(range(len(candidates)), key=lambda c: (-candidates[c][0], c))
    for c in order:
        vec = candidates[c][3]
        resid = vec - basis @ (basis.conj().T @ vec)
        norm = np.linalg.norm(resid)
        if norm > TAU_RANK:
            columns.append(vec)
            basis = np.hstack([basis, (resid / norm)[:, None]])
            if len(columns) == n:
                break
    return columns


def find_v(sigma2, b):
    """
    Recover a unitary ``V = W Phi P`` from ``sigma^(2)`` of ``U_W |b,...,b>``.

    Parameters
    ----------
    sigma2 : array_like
        Hermitian ``n^2 x n^2`` ladder moment matrix (possibly noisy).
    b : int
        Common occupation number.

    Returns
    -------
    (ndarray, dict)
        The unitary and diagnostics (eigenvalue gap, Schmidt spectra,
        number of eigenvectors used, polar-correction norm).
    """
    sigma2 = _check_hermitian(sigma2, "sigma2")
    n = int(round(np.sqrt(sigma2.shape[0])))
    if n * n != sigma2.shape[0]:
        raise DimensionMismatch(f"sigma2 dimension {sigma2.shape[0]} is not a square")
    if b < 0:
        raise ValueError("b must be non-negative")
    if b == 0:
        return np.eye(n, dtype=complex), {"trivial": True}

    eye = np.eye(n * n)
    A = ((b + 1) ** 2 * (eye + swap_matrix(n)) - sigma2) / (b * (b + 1))
    A = 0.5 * (A + A.conj().T)
    evals, evecs = np.linalg.eigh(A)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    gap = float(evals[n - 1] - evals[n]) if n * n > n else float(evals[n - 1])
    diagnostics = {"eigenvalues": evals[: n + 1].tolist(), "eigenvalue_gap": gap}

    # top n eigenvectors first; widen to n + k (k <= n) only if harvesting stalls
    columns = []
    for used in range(n, min(2 * n, n * n) + 1):
        candidates, spectra = _harvest(evecs[:, :used], n)
        columns = _accept(candidates, n)
        if len(columns) == n:
            break
    diagnostics["eigenvectors_used"] = used
    diagnostics["schmidt_spectra"] = [s.tolist() for s in spectra]
    if len(columns) < n:
        diagnostics["columns_found"] = len(columns)
        raise InsufficientColumns(
            f"found {len(columns)} of {n} independent columns", diagnostics
        )
    raw = np.column_stack(columns)
    V = _polar_unitary(raw)
    diagnostics["polar_correction_norm"] = float(np.linalg.norm(V - raw, 2))
    return V, diagnostics


def round_occupations(values, tau_round=TAU_ROUND):
    """Round estimated occupations to integers, rejecting ties and negatives."""
    values = np.asarray(values, dtype=float)
    frac = values - np.floor(values)
    if np.any(np.abs(frac - 0.5) <= tau_round):
        raise RoundingAmbiguous(
            "an occupation estimate sits on a half-integer", {"estimates": values.tolist()}
        )
    g = np.rint(values).astype(int)
    if np.any(g < 0):
        raise NegativeOccupation(
            "an occupation rounds to a negative integer", {"estimates": values.tolist()}
        )
    return tuple(int(x) for x in g)


def _blocks(g):
    out = []
    start = 0
    for i in range(1, len(g) + 1):
        if i == len(g) or g[i] != g[start]:
            out.append((start, i))
            start = i
    return out


def _fix_phases(U):
    # make the largest-magnitude entry of each column real and positive
    idx = np.argmax(np.abs(U), axis=0)
    ph = U[idx, np.arange(U.shape[1])]
    return U * (np.abs(ph) / ph)


def find_v_fock(sigma1, sigma2):
    """
    Recover ``(V, g)`` from ``sigma^(1)`` and ``sigma^(2)`` of ``U_W |f>``.

    ``g`` is ascending and ``V = W Phi P`` where ``P`` maps ``g`` onto ``f``
    and may permute freely inside blocks of equal occupation.
    """
    sigma1 = _check_hermitian(sigma1, "sigma1")
    sigma2 = _check_hermitian(sigma2, "sigma2")
    n = sigma1.shape[0]
    if sigma2.shape != (n * n, n * n):
        raise DimensionMismatch("sigma1 and sigma2 have inconsistent dimensions")

    estimates, U = np.linalg.eigh(sigma1 - np.eye(n))
    U = _fix_phases(U)
    g = round_occupations(estimates)
    diagnostics = {
        "occupation_estimates": estimates.tolist(),
        "rounding_residuals": (estimates - np.asarray(g)).tolist(),
    }
    Uk = np.kron(U, U)
    rotated = Uk.conj().T @ sigma2 @ Uk

    X = np.zeros((n, n), dtype=complex)
    partition = _blocks(g)
    block_diag = []
    for start, stop in partition:
        idx = np.arange(start, stop)
        flat = (idx[:, None] * n + idx[None, :]).ravel()
        gamma = rotated[np.ix_(flat, flat)]
        try:
            Vb, diag = find_v(0.5 * (gamma + gamma.conj().T), g[start])
        except InsufficientColumns as exc:
            diagnostics["blocks"] = block_diag + [exc.diagnostics]
            raise InsufficientColumns(str(exc), diagnostics) from exc
        X[start:stop, start:stop] = Vb
        block_diag.append(diag)
    diagnostics["blocks"] = block_diag
    diagnostics["polar_correction_norm"] = max(
        (d.get("polar_correction_norm", 0.0) for d in block_diag), default=0.0
    )
    return LearnResultPassive(
        V=U @ X,
        g=g,
        block_partition=[list(range(s, e)) for s, e in partition],
        diagnostics=diagnostics,
    )


def find_q(lambda1, lambda2, tau_mom=TAU_MOM):
    """
    Recover a symplectic ``Q`` and occupations ``g`` from ``Lambda^(1)``, ``Lambda^(2)``.

    ``tau_mom`` bounds how far below 1/2 a symplectic eigenvalue of the
    measured covariance may fall before the input is rejected.
    """
    lambda1 = np.asarray(lambda1, dtype=complex)
    lambda2 = np.asarray(lambda2, dtype=complex)
    cov = lambda1.real
    cov = 0.5 * (cov + cov.T)
    will = williamson(cov)
    nu, R = will.nu, will.R
    diagnostics = {"nu": nu.tolist()}
    if nu[0] < 0.5 - tau_mom:
        raise NotACovariance(
            f"smallest symplectic eigenvalue {nu[0]:.4f} is below 1/2", diagnostics
        )
    g = round_occupations(nu - 0.5)
    diagnostics["nu_residuals"] = (nu - 0.5 - np.asarray(g)).tolist()

    Rinv = np.linalg.inv(R)
    Rk = np.kron(Rinv, Rinv)
    l1 = Rinv @ lambda1 @ Rinv.T
    l2 = Rk @ lambda2 @ Rk.T
    s1, s2 = lambda_to_sigma(l1, l2)
    s1 = 0.5 * (s1 + s1.conj().T)
    s2 = 0.5 * (s2 + s2.conj().T)
    passive = find_v_fock(s1, s2)
    diagnostics["passive"] = passive.diagnostics
    if passive.g != g:
        raise RoundingAmbiguous(
            f"occupations from the covariance {g} and from sigma1 {passive.g} disagree",
            diagnostics,
        )
    Q = R @ passive_embed(passive.V)
    return LearnResultActive(Q=Q, g=g, R=R, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# alignment up to phases and admissible permutations

EXHAUSTIVE_LIMIT = 5040


def _admissible(n, g, f):
    if g is None or f is None:
        return np.ones((n, n), dtype=bool)
    g = tuple(int(x) for x in g)
    f = tuple(int(x) for x in f)
    if len(g) != n or len(f) != n:
        raise DimensionMismatch("occupation vectors do not match the matrix size")
    return np.array([[f[j] == g[k] for k in range(n)] for j in range(n)])


def _count_perms(allowed):
    # exact when the admissibility pattern is a union of complete blocks
    n = allowed.shape[0]
    rows = {}
    for j in range(n):
        rows.setdefault(tuple(allowed[j]), 0)
        rows[tuple(allowed[j])] += 1
    return prod(_fact(c) for c in rows.values())


def _fact(k):
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def _enumerate(allowed):
    n = allowed.shape[0]

    def rec(k, used, acc):
        if k == n:
            yield tuple(acc)
            return
        for j in range(n):
            if not used[j] and allowed[j, k]:
                used[j] = True
                acc.append(j)
                yield from rec(k + 1, used, acc)
                acc.pop()
                used[j] = False

    yield from rec(0, [False] * n, [])


def _phase_perm(Z, perm):
    n = Z.shape[0]
    X = np.zeros((n, n), dtype=complex)
    phi = np.ones(n, dtype=complex)
    for k, j in enumerate(perm):
        z = Z[j, k]
        phi[j] = z / abs(z) if abs(z) > 0 else 1.0
        X[j, k] = phi[j]
    return X, phi


def _free_blocks(n, g, f):
    """Index sets ``(rows, cols)`` of vacuum blocks, which carry no phase-permutation structure."""
    if g is None or f is None:
        return []
    rows = [j for j in range(n) if int(f[j]) == 0]
    cols = [k for k in range(n) if int(g[k]) == 0]
    if len(rows) < 2 or len(rows) != len(cols):
        return []
    return [(rows, cols)]


def _align(Z, allowed, residual_of, free=()):
    n = Z.shape[0]
    if _count_perms(allowed) <= EXHAUSTIVE_LIMIT:
        perms = _enumerate(allowed)
    else:
        cost = np.where(allowed, -np.abs(Z), np.inf)
        cost = np.where(np.isinf(cost), 1e6, cost)
        rows, cols = linear_sum_assignment(cost)
        perm = [0] * n
        for j, k in zip(rows, cols):
            perm[k] = j
        perms = [tuple(perm)]
    best = None
    for perm in perms:
        X, phi = _phase_perm(Z, perm)
        for rows, cols in free:
            # the vacuum is invariant under any unitary on these modes
            X[np.ix_(rows, cols)] = _polar_unitary(Z[np.ix_(rows, cols)])
        r = residual_of(X)
        if best is None or r < best[0]:
            best = (r, phi, perm, X)
    if best is None:
        raise DimensionMismatch("no admissible permutation between g and f")
    r, phi, perm, X = best
    P = np.zeros((n, n))
    for k, j in enumerate(perm):
        P[j, k] = 1.0
    return AlignmentReport(phi=phi, p=P, residual=float(r), free_blocks=X if free else None)


def align_unitary(V, W, g=None, f=None):
    """
    Best ``Phi P`` minimising ``||V - W Phi P||``.

    When both ``g`` (learned occupations, one per column of ``V``) and ``f``
    (true occupations, one per column of ``W``) are given, column ``k`` of
    ``V`` may only be matched to a column ``j`` of ``W`` with ``f_j == g_k``.
    Several empty modes are only determined up to a unitary among
    themselves, so that block is aligned by the closest unitary instead.
    """
    V = np.asarray(V, dtype=complex)
    W = np.asarray(W, dtype=complex)
    if V.shape != W.shape:
        raise DimensionMismatch(f"shapes differ: {V.shape} vs {W.shape}")
    n = V.shape[0]
    Z = W.conj().T @ V
    allowed = _admissible(n, g, f)
    free = _free_blocks(n, g, f)
    return _align(Z, allowed, lambda X: np.linalg.norm(V - W @ X, 2), free)


def align_symplectic(Q, S, g=None, f=None):
    """Best phase-and-permutation ``rho(Phi P)`` minimising ``||Q - S rho(Phi P)||``."""
    Q = np.asarray(Q, dtype=float)
    S = np.asarray(S, dtype=float)
    if Q.shape != S.shape:
        raise DimensionMismatch(f"shapes differ: {Q.shape} vs {S.shape}")
    n = Q.shape[0] // 2
    M = np.linalg.solve(S, Q)
    # complex number carried by each 2x2 mode block of an orthogonal symplectic matrix
    Z = 0.5 * (M[:n, :n] + M[n:, n:]) + 0.5j * (M[n:, :n] - M[:n, n:])
    allowed = _admissible(n, g, f)

    def residual(X):
        return np.linalg.norm(Q - S @ passive_embed(X), 2)

    return _align(Z, allowed, residual, _free_blocks(n, g, f))


# ---------------------------------------------------------------------------
# error guarantees


def constant_fock_bound(eps, n, b):
    """Alignment-residual guarantee for :func:`find_v` with input error ``eps``."""
    return 4 * np.sqrt(5) * eps * n / (b * (b + 1))


def constant_fock_valid(eps, n, b):
    """Whether ``eps`` is small enough for the fidelity guarantee to apply."""
    return eps <= (b + 1) / (4 * np.sqrt(5) * n * n)


def constant_fock_fidelity_bound(eps, n, b):
    x = 4 * np.sqrt(5) * eps * n * n / (b + 1)
    return 1 - x / (1 - x)


def general_fock_bound(eps1, eps2, n, f_max):
    """Alignment-residual guarantee for :func:`find_v_fock`."""
    return (
        eps1 * (32 * np.sqrt(5) * n * n * (3 * f_max ** 2 + 5 * f_max + 2) + 4 * n)
        + 2 * np.sqrt(5) * eps2 * n
    )


def reconstruct_lambdas(Q, g):
    """Moments ``(Lambda^(1), Lambda^(2))`` predicted by a learned ``(Q, g)``."""
    from .moments import lambda_fock, transform_lambda

    return transform_lambda(Q, lambda_fock(g, 1)), transform_lambda(Q, lambda_fock(g, 2))
