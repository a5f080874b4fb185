"""
Symplectic-group linear algebra.

Quadratures are ordered ``r = (x_1, ..., x_n, p_1, ..., p_n)`` with
``x = (a + a^dag)/sqrt(2)``, so the vacuum covariance is ``I/2`` and the
symplectic form is ``[[0, I], [-I, 0]]``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NonUnitaryInput,
    NotPositiveDefinite,
    NotSymmetric,
    NotSymplectic,
)


def tau_sym(M):
    """Scale-relative tolerance for structural predicates."""
    return 1e-9 * (1.0 + np.linalg.norm(M, 2))


def tau_rec(M):
    """Scale-relative tolerance for decomposition reconstructions."""
    return 1e-8 * (1.0 + np.linalg.norm(M, 2))


def omega(n):
    """Return the 2n x 2n symplectic form ``[[0, I], [-I, 0]]``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class WilliamsonResult:
    """``M = R diag(nu, nu) R^T`` with ``R`` symplectic and ``nu`` ascending."""

    nu: np.ndarray
    R: np.ndarray

    def reconstruct(self):
        d = np.concatenate([self.nu, self.nu])
        return self.R @ np.diag(d) @ self.R.T


@dataclass(frozen=True)
class EulerResult:
    """``S = O diag(e^s, e^-s) V`` with ``O``, ``V`` orthogonal symplectic."""

    O: np.ndarray
    V: np.ndarray
    squeezings: np.ndarray

    def reconstruct(self):
        s = self.squeezings
        return self.O @ np.diag(np.exp(np.concatenate([s, -s]))) @ self.V


def _mode_count(M):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise DimensionMismatch(f"expected a 2n x 2n matrix, got shape {M.shape}")
    return M.shape[0] // 2


def symplectic_defect(S):
    """Operator norm of ``S Omega S^T - Omega``."""
    n = _mode_count(S)
    Om = omega(n)
    return np.linalg.norm(S @ Om @ S.T - Om, 2)


def is_symplectic(S, tol=None):
    S = np.asarray(S)
    if np.iscomplexobj(S):
        return False
    tol = tau_sym(S) if tol is None else tol
    return symplectic_defect(S) <= tol


def is_orthogonal(S, tol=None):
    S = np.asarray(S)
    tol = tau_sym(S) if tol is None else tol
    return np.linalg.norm(S.T @ S - np.eye(S.shape[0]), 2) <= tol


def is_unitary(W, tol=None):
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        return False
    tol = tau_sym(W) if tol is None else tol
    return np.linalg.norm(W.conj().T @ W - np.eye(W.shape[0]), 2) <= tol


def passive_embed(W):
    """Map ``W`` in U(n) to the orthogonal symplectic ``[[Re W, -Im W], [Im W, Re W]]``."""
    W = np.asarray(W, dtype=complex)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {W.shape}")
    if not is_unitary(W):
        raise NonUnitaryInput("input is not unitary")
    re, im = W.real, W.imag
    return np.block([[re, -im], [im, re]])


def passive_part(O):
    """Inverse of :func:`passive_embed` (no validation beyond shape)."""
    n = _mode_count(O)
    return O[:n, :n] + 1j * O[n:, :n]


def _haar_unitary(n, rng):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_passive(n, seed=None):
    """Haar-random n x n unitary, deterministic for a given seed."""
    if n < 1:
        raise ValueError("n must be positive")
    return _haar_unitary(n, np.random.default_rng(seed))


def random_symplectic(n, s_max, seed=None):
    """Random symplectic matrix in Euler form with squeezings drawn from [-s_max, s_max]."""
    if s_max < 0:
        raise ValueError("s_max must be non-negative")
    rng = np.random.default_rng(seed)
    u1 = _haar_unitary(n, rng)
    u2 = _haar_unitary(n, rng)
    s = rng.uniform(-s_max, s_max, size=n)
    middle = np.diag(np.exp(np.concatenate([s, -s])))
    return passive_embed(u1) @ middle @ passive_embed(u2)


def max_squeezing(S):
    """Log of the largest singular value of ``S``."""
    return float(np.log(np.linalg.norm(S, 2)))


def _symplectify(R):
    # one Newton step towards Sp(2n): for symplectic R, Omega R^{-T} Omega^T == R
    n = _mode_count(R)
    Om = omega(n)
    return 0.5 * (R + Om @ np.linalg.inv(R).T @ Om.T)


def williamson(M):
    """
    Williamson normal form of a real symmetric positive-definite matrix.

    Parameters
    ----------
    M : array_like
        2n x 2n real symmetric positive-definite matrix.

    Returns
    -------
    WilliamsonResult
        ``nu`` (ascending symplectic eigenvalues) and symplectic ``R`` with
        ``R diag(nu, nu) R^T = M``.

    Notes
    -----
    The antisymmetric matrix ``J = M^{1/2} Omega M^{1/2}`` is brought into
    canonical form ``O [[0, nu], [-nu, 0]] O^T`` through the eigenvectors of
    the Hermitian matrix ``iJ``; then ``R = M^{1/2} O diag(nu, nu)^{-1/2}``.
    Degenerate ``nu`` are handled because the real and imaginary parts of any
    orthonormal eigenbasis of one sign already satisfy the pairing relations.
    """
    M = np.asarray(M)
    if np.iscomplexobj(M):
        if np.abs(M.imag).max(initial=0.0) > tau_sym(M):
            raise NotSymmetric("input has a non-negligible imaginary part")
        M = M.real
    M = M.astype(float)
    n = _mode_count(M)
    if np.linalg.norm(M - M.T, 2) > tau_sym(M):
        raise NotSymmetric("input is not symmetric")
    M = 0.5 * (M + M.T)
    w, E = np.linalg.eigh(M)
    if w[0] <= 0:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3e} is not positive")
    sqrt_m = (E * np.sqrt(w)) @ E.T

    J = sqrt_m @ omega(n) @ sqrt_m
    evals, vecs = np.linalg.eigh(1j * J)
    # eigenvalues come in pairs +-nu; the n negative ones carry X + iY
    neg = vecs[:, :n]
    nu = -evals[:n]
    order = np.argsort(nu, kind="stable")
    nu = nu[order]
    neg = neg[:, order]
    X = np.sqrt(2.0) * neg.real
    Y = np.sqrt(2.0) * neg.imag
    O = np.hstack([X, Y])
    scale = 1.0 / np.sqrt(np.concatenate([nu, nu]))
    R = sqrt_m @ O * scale

    if symplectic_defect(R) > tau_sym(R):
        R = _symplectify(R)
    return WilliamsonResult(nu=nu, R=R)


def symplectic_eigenvalues(M):
    """Positive eigenvalues of ``i Omega M``, ascending."""
    return williamson(M).nu


def euler(S, tol=1e-9):
    """
    Euler (Bloch-Messiah) decomposition ``S = O diag(e^s, e^-s) V``.

    Squeezings are non-negative and sorted descending, so ``s[0]`` is the log
    of the largest singular value of ``S``.  ``tol`` is the log-eigenvalue
    threshold below which a squeezing is treated as exactly zero.
    """
    S = np.asarray(S, dtype=float)
    n = _mode_count(S)
    if not is_symplectic(S):
        raise NotSymplectic("input is not symplectic")
    Om = omega(n)

    mu, E = np.linalg.eigh(S @ S.T)
    mu = np.clip(mu, np.finfo(float).tiny, None)
    lam = np.sqrt(mu)
    # polar factor S = P U with P = (S S^T)^{1/2}
    U = ((E / lam) @ E.T) @ S

    logs = np.log(lam)
    k = int(np.sum(logs > tol))
    k = min(k, n)
    top = np.argsort(-logs, kind="stable")[:k]
    bottom = np.argsort(logs, kind="stable")[:k]
    middle = np.setdiff1d(np.arange(2 * n), np.concatenate([top, bottom]))

    columns = [E[:, top]]
    s = list(logs[top])
    if middle.size:
        B = E[:, middle]
        K = B.T @ Om @ B
        kvals, kvecs = np.linalg.eigh(1j * K)
        m = middle.size // 2
        z = B @ kvecs[:, :m]
        columns.append(np.sqrt(2.0) * z.real)
        s.extend([0.0] * m)
    X = np.hstack(columns)
    O = np.hstack([X, Om.T @ X])
    s = np.asarray(s)
    V = O.T @ U
    return EulerResult(O=O, V=V, squeezings=s)


def nearest_orthogonal_symplectic(S):
    """Orthogonal symplectic ``O V`` obtained by dropping the squeezing from :func:`euler`."""
    res = euler(S)
    return res.O @ res.V
