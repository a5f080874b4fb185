"""
Symplectic invariants of quadrature moment tensors.

A moment set maps each degree ``t`` to the tensor
``Sigma^(t)[i_1..i_t] = <r_i1 ... r_it>`` of shape ``(2n,)*t``. For a tuple
of degrees ``s`` the product tensor ``Gamma^(s)`` is contracted either

* fully against copies of ``Omega`` after an index permutation ``pi``
  (a scalar invariant), or
* reshaped into a square matrix and multiplied by ``(i Omega)^{(x) |s|/2}``,
  whose eigenvalue multiset is invariant.

Both are unchanged when every ``Sigma^(t)`` is replaced by
``S^{(x)t} Sigma^(t)`` for a symplectic ``S``.
"""

from dataclasses import dataclass
from functools import reduce
from itertools import permutations, product
from string import ascii_letters

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import (
    DegreeMismatch,
    IncompleteMoments,
    MissingMoment,
    OddTotalDegree,
    TooLarge,
)
from .moments import lambda_fock, transform_lambda
from .oracle import quadrature_moments
from .symplectic import omega, passive_embed

MAX_TOTAL_DEGREE = 8
MAX_SPECTRUM_DIM = 4096
TAU_WIT = 1e-6
ABS_FLOOR = 1e-9
FIRST_MOMENT_GUARD = 1e-10
KINDS = ("contraction", "spectrum")


@dataclass(frozen=True)
class InvariantSpec:
    s: tuple
    pi: tuple
    kind: str

    def to_dict(self):
        return {"s": list(self.s), "pi": list(self.pi), "kind": self.kind}


@dataclass(frozen=True)
class InvariantValue:
    spec: InvariantSpec
    value: object


@dataclass(frozen=True)
class Witness:
    spec: InvariantSpec
    value_a: object
    value_b: object
    gap: float


# ---------------------------------------------------------------------------
# moment sets


def _mode_count(moments):
    for t, tensor in moments.items():
        return tensor.shape[0] // 2
    raise MissingMoment("empty moment set")


def fock_moments(f, transform=None, max_degree=4):
    """
    Moment set of ``U|f>`` up to degree 4 from the analytic Fock kernel.

    ``transform`` is a unitary ``W`` (n x n), a symplectic ``S`` (2n x 2n),
    or ``None`` for the bare Fock state. Odd moments vanish.
    """
    n = len(f)
    if transform is None:
        S = np.eye(2 * n)
    else:
        transform = np.asarray(transform)
        S = passive_embed(transform) if transform.shape[0] == n else transform.real
    dim = 2 * n
    out = {}
    for t in range(1, max_degree + 1):
        if t % 2:
            out[t] = np.zeros((dim,) * t, dtype=complex)
        else:
            lam = transform_lambda(S, lambda_fock(f, t // 2))
            out[t] = lam.reshape((dim,) * t)
    return out


def state_moments(state, max_degree=4, guard=FIRST_MOMENT_GUARD):
    """
    Moment set of a truncated state (e.g. a Fock superposition).

    The invariants use raw moments as central moments, so the first moments
    must vanish; ``IncompleteMoments`` is raised otherwise.
    """
    out = {t: quadrature_moments(state, t) for t in range(1, max_degree + 1)}
    if np.abs(out[1]).max() > guard:
        raise IncompleteMoments(
            f"first moments {np.abs(out[1]).max():.3e} are not zero; centre the state first"
        )
    out[1] = np.zeros_like(out[1])
    return out


def transform_moments(moments, S):
    """Apply ``S^{(x)t}`` to every tensor of a moment set."""
    S = np.asarray(S, dtype=float)
    out = {}
    for t, tensor in moments.items():
        x = tensor
        for axis in range(t):
            x = np.moveaxis(np.tensordot(S, x, axes=([1], [axis])), 0, axis)
        out[t] = x
    return out


def check_complete(moments, max_degree=4):
    missing = [t for t in range(1, max_degree + 1) if t not in moments]
    if missing:
        raise IncompleteMoments(f"missing moment degrees {missing}")


# ---------------------------------------------------------------------------
# Gamma tensors and the two kinds of invariants


def gamma_tensor(moments, s):
    """Tensor product ``Sigma^(s_1) (x) ... (x) Sigma^(s_k)`` in the given order."""
    s = tuple(int(x) for x in s)
    if not s or any(x < 1 for x in s):
        raise ValueError("degrees must be positive")
    if sum(s) % 2:
        raise OddTotalDegree(f"total degree {sum(s)} is odd")
    for t in s:
        if t not in moments:
            raise MissingMoment(t)
    return reduce(np.multiply.outer, [np.asarray(moments[t]) for t in s])


def _check_pi(gamma, pi):
    k = gamma.ndim
    if k % 2:
        raise DegreeMismatch(f"tensor degree {k} is odd")
    pi = tuple(int(x) for x in pi)
    if sorted(pi) != list(range(k)):
        raise DegreeMismatch(f"{pi} is not a permutation of {k} indices")
    return pi


def theta_contraction(gamma, pi):
    """
    ``sum_i Gamma[i] prod_a Omega[i[pi[2a]], i[pi[2a+1]]]``.

    Equivalently, the tensor transposed with ``axes=pi`` contracted against
    ``Omega`` on consecutive index pairs.
    """
    gamma = np.asarray(gamma)
    pi = _check_pi(gamma, pi)
    n = gamma.shape[0] // 2
    Om = omega(n)
    letters = ascii_letters[: gamma.ndim]
    terms = [letters]
    operands = [gamma]
    for a in range(gamma.ndim // 2):
        terms.append(letters[pi[2 * a]] + letters[pi[2 * a + 1]])
        operands.append(Om)
    expr = ",".join(terms) + "->"
    return complex(np.einsum(expr, *operands, optimize=True))


def sort_spectrum(values):
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((values.imag, values.real))
    return values[order]


def eigen_invariants(gamma, pi):
    """
    Eigenvalues of ``(i Omega)^{(x) m} Gamma_pi`` with ``m = degree/2``.

    ``Gamma_pi`` is the tensor transposed with ``axes=pi`` and reshaped so
    the first ``m`` indices are rows. Returned sorted by (real, imag).
    """
    gamma = np.asarray(gamma)
    pi = _check_pi(gamma, pi)
    m = gamma.ndim // 2
    dim = gamma.shape[0]
    size = dim ** m
    if size > MAX_SPECTRUM_DIM:
        raise TooLarge(f"matrix dimension {size} exceeds {MAX_SPECTRUM_DIM}")
    mat = np.transpose(gamma, pi).reshape(size, size)
    iom = 1j * omega(dim // 2)
    left = reduce(np.kron, [iom] * m)
    return sort_spectrum(np.linalg.eigvals(left @ mat))


# ---------------------------------------------------------------------------
# enumeration of non-redundant specs


def degree_tuples(total, max_degree=4):
    """Ascending tuples of positive degrees ``<= max_degree`` summing to ``total``."""
    out = []

    def rec(rem, lo, acc):
        if rem == 0:
            out.append(tuple(acc))
            return
        for d in range(lo, min(rem, max_degree) + 1):
            rec(rem - d, d, acc + [d])

    rec(total, 1, [])
    return sorted(out)


def _block_relabelings(s):
    # position maps that permute equal-degree factor blocks of Gamma
    offsets = np.concatenate([[0], np.cumsum(s)])
    groups = {}
    for b, d in enumerate(s):
        groups.setdefault(d, []).append(b)
    choices = [list(permutations(blocks)) for blocks in groups.values()]
    maps = []
    for combo in product(*choices):
        target = list(range(len(s)))
        for blocks, perm in zip(groups.values(), combo):
            for src, dst in zip(blocks, perm):
                target[src] = dst
        g = [0] * offsets[-1]
        for b in range(len(s)):
            for k in range(s[b]):
                g[offsets[b] + k] = offsets[target[b]] + k
        maps.append(tuple(g))
    return maps


def contraction_key(pi, relabel=((),)):
    """Canonical matching of ``pi`` (pair order and orientation dropped)."""
    best = None
    for g in relabel:
        q = [g[x] for x in pi] if g else list(pi)
        key = tuple(sorted(tuple(sorted(q[2 * a: 2 * a + 2])) for a in range(len(q) // 2)))
        if best is None or key < best:
            best = key
    return best


def contraction_sign(pi):
    """Sign relating ``pi`` to its canonically oriented matching."""
    sign = 1
    for a in range(len(pi) // 2):
        if pi[2 * a] > pi[2 * a + 1]:
            sign = -sign
    return sign


def spectrum_key(pi, relabel=((),)):
    """Row/column position pairs of ``pi``, up to simultaneous reordering."""
    m = len(pi) // 2
    best = None
    for g in relabel:
        q = [g[x] for x in pi] if g else list(pi)
        key = tuple(sorted(zip(q[:m], q[m:])))
        if best is None or key < best:
            best = key
    return best


def enumerate_specs(budget=4, max_degree=4, vanishing=(1,)):
    """
    Canonical ``InvariantSpec`` representatives with ``|s| <= budget``.

    Degree tuples containing a degree listed in ``vanishing`` produce the
    zero tensor, so only the identity permutation is kept for them.
    """
    if budget > MAX_TOTAL_DEGREE:
        raise TooLarge(f"budget {budget} exceeds {MAX_TOTAL_DEGREE}")
    specs = []
    for total in range(2, budget + 1, 2):
        for s in degree_tuples(total, max_degree):
            ident = tuple(range(total))
            if any(d in vanishing for d in s):
                specs.extend(InvariantSpec(s, ident, k) for k in KINDS)
                continue
            relabel = _block_relabelings(s)
            for kind, keyfn in (("contraction", contraction_key), ("spectrum", spectrum_key)):
                seen = set()
                for pi in permutations(range(total)):
                    key = keyfn(pi, relabel)
                    if key not in seen:
                        seen.add(key)
                        specs.append(InvariantSpec(s, pi, kind))
    return specs


def evaluate(moments, spec, cache=None):
    """Value of one invariant on a moment set."""
    if cache is not None and spec.s in cache:
        gamma = cache[spec.s]
    else:
        gamma = gamma_tensor(moments, spec.s)
        if cache is not None:
            cache[spec.s] = gamma
    if spec.kind == "contraction":
        return theta_contraction(gamma, spec.pi)
    if spec.kind == "spectrum":
        return eigen_invariants(gamma, spec.pi)
    raise ValueError(f"unknown invariant kind {spec.kind!r}")


def invariant_table(moments, budget=4, max_degree=4):
    """All canonical invariants of one moment set."""
    check_complete(moments, max_degree)
    cache = {}
    return [
        InvariantValue(spec, evaluate(moments, spec, cache))
        for spec in enumerate_specs(budget, max_degree)
    ]


# ---------------------------------------------------------------------------
# comparison


def bottleneck_distance(a, b):
    """Minimal over pairings of the maximal ``|a_i - b_pi(i)|``."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        return np.inf
    if a.size == 0:
        return 0.0
    dist = np.abs(a[:, None] - b[None, :])
    levels = np.unique(dist)
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = csr_matrix(dist <= levels[mid])
        match = maximum_bipartite_matching(graph, perm_type="column")
        if np.all(match >= 0):
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo])


def invariant_gap(va, vb):
    """Absolute gap and the threshold it must exceed to count as a difference."""
    if np.ndim(va) == 0:
        gap = abs(complex(va) - complex(vb))
        scale = max(abs(complex(va)), abs(complex(vb)))
    else:
        gap = bottleneck_distance(va, vb)
        scale = max(np.abs(va).max(initial=0.0), np.abs(vb).max(initial=0.0))
    return gap, max(TAU_WIT * scale, ABS_FLOOR)


def convertibility_witness(moments_a, moments_b, budget=4, max_degree=4):
    """
    First invariant that separates two moment sets, or ``None``.

    ``None`` means no separating invariant exists up to ``budget``; it does
    not certify that the states are Gaussian convertible.
    """
    check_complete(moments_a, max_degree)
    check_complete(moments_b, max_degree)
    if _mode_count(moments_a) != _mode_count(moments_b):
        raise DegreeMismatch("moment sets describe different mode counts")
    cache_a, cache_b = {}, {}
    for spec in enumerate_specs(budget, max_degree):
        va = evaluate(moments_a, spec, cache_a)
        vb = evaluate(moments_b, spec, cache_b)
        gap, threshold = invariant_gap(va, vb)
        if gap > threshold:
            return Witness(spec, va, vb, float(gap))
    return None

