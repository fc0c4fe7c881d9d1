"""Matrix form of the moment comparison.

An instance becomes the k x l matrix ``A = T X`` whose rank is at most n, and
the m-th entrywise power of ``A`` is given an explicit factorization indexed by
multisets, which certifies ``rank(A**m) <= C(n+m-1, m)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .constants import multiset_count
from .core import MomentInstance, check_exponent, ratio_of, row_moments, weighted_pnorm
from .errors import InvalidInstance, ReconstructionMismatch

RANK_RTOL = 1e-10
RECONSTRUCTION_RTOL = 1e-10
LOG_EXPANSION_THRESHOLD = 600.0

MultisetIndex = tuple  # multiplicities (alpha_1, ..., alpha_n) with sum m


def _rel_frobenius_error(approx, exact) -> float:
    scale = np.linalg.norm(exact)
    err = np.linalg.norm(approx - exact)
    if scale == 0.0:
        return float(err)
    return float(err / scale)


@dataclass(frozen=True, eq=False)
class RankFactoredMatrix:
    """k x l matrix ``entries`` together with factors ``left`` (k x n) and
    ``right`` (n x l) such that ``entries == left @ right``."""

    left: np.ndarray
    right: np.ndarray
    entries: np.ndarray = None

    def __post_init__(self):
        left = np.array(self.left, dtype=float)
        right = np.array(self.right, dtype=float)
        if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[0]:
            raise InvalidInstance(
                f"factor shapes {left.shape} and {right.shape} are not conformable")
        product = left @ right
        if self.entries is None:
            entries = product
        else:
            entries = np.array(self.entries, dtype=float)
            if entries.shape != product.shape:
                raise InvalidInstance(f"entries have shape {entries.shape}, expected {product.shape}")
            err = _rel_frobenius_error(product, entries)
            if err > RECONSTRUCTION_RTOL:
                raise ReconstructionMismatch(
                    f"left @ right differs from entries by {err:.3e} (relative Frobenius)")
        for name, a in (("left", left), ("right", right), ("entries", entries)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def inner_dim(self) -> int:
        return self.left.shape[1]

    def __repr__(self):
        return f"RankFactoredMatrix({self.rows}x{self.cols}, inner_dim={self.inner_dim})"


def instance_to_matrix(inst: MomentInstance) -> tuple[RankFactoredMatrix, np.ndarray]:
    """Fold the probabilities into the atoms: column j is w_j^(1/p) x_j.

    Returns the factored matrix and the weights ``w_j^(1/p)`` used.
    """
    weights = inst.law.probs ** (1.0 / inst.p)
    right = inst.law.points.T * weights
    return RankFactoredMatrix(inst.directions.directions, right), weights


@dataclass(frozen=True)
class ConditionRatio:
    lhs: float
    rhs: float
    ratio: float
    degenerate: bool


def condition_iii_ratio(a, p) -> ConditionRatio:
    """lhs = (sum_j max_i |a_ij|^p)^(1/p), rhs = max_i (sum_j |a_ij|^p)^(1/p).

    ``a`` may be a :class:`RankFactoredMatrix` or a raw matrix.
    """
    p = check_exponent(p)
    entries = a.entries if isinstance(a, RankFactoredMatrix) else np.asarray(a, dtype=float)
    if entries.size == 0:
        return ConditionRatio(0.0, 0.0, 1.0, True)
    ones = np.ones(entries.shape[1])
    lhs = weighted_pnorm(np.abs(entries).max(axis=0), ones, p)
    rhs = float(row_moments(entries, ones, p).max())
    return ConditionRatio(lhs, rhs, ratio_of(lhs, rhs), lhs == 0.0 and rhs == 0.0)


def hadamard_power(a, m: int) -> np.ndarray:
    """Entrywise m-th power."""
    if m < 1:
        raise ValueError(f"Hadamard order must be >= 1, got {m}")
    entries = a.entries if isinstance(a, RankFactoredMatrix) else np.asarray(a, dtype=float)
    return entries ** m


def multiset_indices(n: int, m: int) -> Iterator[MultisetIndex]:
    """Multiplicity vectors of length n summing to m, in increasing lexicographic order."""
    if n == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in multiset_indices(n - 1, m - first):
            yield (first,) + rest


def log_multinomial(alpha) -> float:
    m = sum(alpha)
    return math.lgamma(m + 1) - sum(math.lgamma(a + 1) for a in alpha)


def multinomial(alpha) -> int:
    out = math.factorial(sum(alpha))
    for a in alpha:
        out //= math.factorial(a)
    return out


def _monomials(vectors, alphas, log_domain):
    """Row r of the result is prod_s vectors[s] ** alphas[r, s]."""
    if not log_domain:
        out = np.ones((alphas.shape[0], vectors.shape[1]))
        for s, vec in enumerate(vectors):
            out *= vec[None, :] ** alphas[:, s:s + 1]
        return out
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(vectors))
    negative = (vectors < 0).astype(int)
    # 0 * log(0) must contribute 0 when the multiplicity is zero
    log_mag = np.zeros((alphas.shape[0], vectors.shape[1]))
    for s in range(vectors.shape[0]):
        contrib = alphas[:, s:s + 1] * logs[s][None, :]
        contrib[np.broadcast_to(alphas[:, s:s + 1] == 0, contrib.shape)] = 0.0
        log_mag += contrib
    parity = (alphas @ negative) % 2
    return np.where(parity == 1, -1.0, 1.0), log_mag


def expand_factorization(mat: RankFactoredMatrix, m: int) -> RankFactoredMatrix:
    """Factor ``A**m`` through multisets of the n inner indices.

    Column alpha of the new left factor is (m!/prod alpha_r!) prod_r u_r**alpha_r
    (u_r = columns of ``left``); row alpha of the new right factor is
    prod_r v_r**alpha_r (v_r = rows of ``right``).  The inner dimension is
    C(n+m-1, m).  The product is checked against ``A**m`` before returning.

    When m * log(max |entry|) exceeds 600 the monomials are formed from
    log-magnitudes and signs, and each column/row pair is rescaled by
    reciprocal positive constants so that both factors stay finite.
    """
    if m < 1:
        raise ValueError(f"Hadamard order must be >= 1, got {m}")
    n = mat.inner_dim
    alphas = np.array(list(multiset_indices(n, m)), dtype=int).reshape(-1, n)
    assert alphas.shape[0] == multiset_count(n, m)
    log_coef = np.array([log_multinomial(a) for a in alphas])

    peak = max(np.abs(mat.left).max(initial=0.0), np.abs(mat.right).max(initial=0.0))
    log_domain = peak > 0 and m * math.log(peak) > LOG_EXPANSION_THRESHOLD
    if log_domain:
        sign_u, log_u = _monomials(mat.left.T, alphas, True)
        sign_v, log_v = _monomials(mat.right, alphas, True)
        # balance magnitudes between the factors before leaving log space
        shift = (log_u.max(axis=1, initial=-np.inf) - log_v.max(axis=1, initial=-np.inf)) / 2
        shift = np.where(np.isfinite(shift), shift, 0.0)
        with np.errstate(over="ignore"):
            left = (sign_u * np.exp(log_u + (log_coef - shift)[:, None])).T
            right = sign_v * np.exp(log_v + shift[:, None])
    else:
        coef = np.array([float(multinomial(a)) for a in alphas])
        left = (coef[:, None] * _monomials(mat.left.T, alphas, False)).T
        right = _monomials(mat.right, alphas, False)

    with np.errstate(over="ignore"):
        target = hadamard_power(mat, m)
    if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right)) and np.all(np.isfinite(target))):
        raise ReconstructionMismatch(f"Hadamard expansion of order {m} overflowed")
    err = _rel_frobenius_error(left @ right, target)
    if err > RECONSTRUCTION_RTOL:
        raise ReconstructionMismatch(
            f"expansion of order {m} reproduces A**m only to {err:.3e} (relative Frobenius)")
    return RankFactoredMatrix(left, right, target)


def balanced_factorization(mat: RankFactoredMatrix) -> RankFactoredMatrix:
    """Refactor the same matrix as ``(U sqrt(S)) (sqrt(S) V^T)``, padded to the same inner dimension.

    Monomials of an arbitrary factor pair can cancel heavily inside
    ``left @ right``; singular-vector factors bound every entry's terms by
    ``sigma_max``, which keeps the expansion of ``A**m`` accurate.
    """
    n = mat.inner_dim
    u, s, vt = np.linalg.svd(mat.entries, full_matrices=False)
    r = min(n, s.size)
    root = np.sqrt(s[:r])
    left = np.zeros((mat.rows, n))
    right = np.zeros((n, mat.cols))
    left[:, :r] = u[:, :r] * root
    right[:r] = root[:, None] * vt[:r]
    return RankFactoredMatrix(left, right, mat.entries)


def singular_values(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros(0)
    return np.linalg.svd(a, compute_uv=False)


def numerical_rank(a, rtol: float = RANK_RTOL) -> int:
    """Number of singular values above ``rtol * sigma_max``."""
    s = singular_values(a)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def gram_rank(factor, rtol: float = RANK_RTOL) -> int:
    """numerical_rank(F @ F.T), evaluated from the singular values of F."""
    s = singular_values(factor) ** 2
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))
