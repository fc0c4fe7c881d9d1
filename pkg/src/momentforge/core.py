"""Finitely supported random vectors, direction sets and their p-th moments.

A random vector X is a :class:`DiscreteVectorLaw` (atoms ``x_j`` with
probabilities ``w_j``), the index set of linear functionals is a
:class:`DirectionSet` (vectors ``t_i``), and both are bundled with the exponent
into a :class:`MomentInstance`.  Every moment is computed exactly from the
pairing matrix ``a_ij = <t_i, x_j>`` by enumeration over the finite support.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRatio, DomainError, InvalidInstance

PROB_TOL = 1e-12
MERGE_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _as_matrix(vectors, name, dimension=None):
    try:
        a = np.array(vectors, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInstance(f"{name}: vectors must be numeric and of equal length") from exc
    if a.ndim == 1 and dimension == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2 or a.shape[0] == 0:
        raise InvalidInstance(f"{name}: expected a nonempty list of vectors, got shape {a.shape}")
    if dimension is not None and a.shape[1] != dimension:
        raise InvalidInstance(f"{name}: vectors have length {a.shape[1]}, expected {dimension}")
    if a.shape[1] == 0:
        raise InvalidInstance(f"{name}: dimension must be positive")
    if not np.all(np.isfinite(a)):
        raise InvalidInstance(f"{name}: entries must be finite")
    return a


@dataclass(frozen=True, eq=False)
class DiscreteVectorLaw:
    """Probability law on R^n with finitely many atoms.

    ``points`` has shape (l, n); ``probs`` has shape (l,).  Probabilities must
    be nonnegative and sum to one within 1e-12; they are then renormalized so
    that the stored vector sums to one as closely as floating point allows.
    Omitting ``probs`` gives the uniform law on the atoms.
    """

    points: np.ndarray
    probs: np.ndarray = None

    def __post_init__(self):
        points = _as_matrix(self.points, "points")
        if self.probs is None:
            probs = np.full(points.shape[0], 1.0 / points.shape[0])
        else:
            probs = np.array(self.probs, dtype=float).reshape(-1)
        if probs.shape[0] != points.shape[0]:
            raise InvalidInstance(
                f"probs: {probs.shape[0]} weights for {points.shape[0]} points")
        if not np.all(np.isfinite(probs)):
            raise InvalidInstance("probs: entries must be finite")
        if np.any(probs < 0):
            raise InvalidInstance(f"probs: negative probability {probs.min()!r}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidInstance(f"probs: sum to {total!r}, expected 1 within {PROB_TOL}")
        object.__setattr__(self, "points", _frozen(points))
        object.__setattr__(self, "probs", _frozen(probs / total))

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def support(self) -> np.ndarray:
        """Atoms carrying positive probability."""
        return self.points[self.probs > 0]

    def __repr__(self):
        return f"DiscreteVectorLaw(n={self.dimension}, atoms={self.size})"


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Finite nonempty set of vectors ``t_i`` in R^n, stored as rows."""

    directions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "directions", _frozen(_as_matrix(self.directions, "directions")))

    @property
    def dimension(self) -> int:
        return self.directions.shape[1]

    @property
    def size(self) -> int:
        return self.directions.shape[0]

    def __repr__(self):
        return f"DirectionSet(n={self.dimension}, k={self.size})"


@dataclass(frozen=True, eq=False)
class MomentInstance:
    """The triple (X, T, p): a law, a direction set and an exponent p >= 2."""

    law: DiscreteVectorLaw
    directions: DirectionSet
    p: float

    def __post_init__(self):
        if self.law.dimension != self.directions.dimension:
            raise InvalidInstance(
                f"dimension mismatch: law has n={self.law.dimension}, "
                f"directions have n={self.directions.dimension}")
        object.__setattr__(self, "p", check_exponent(self.p))

    @classmethod
    def from_arrays(cls, points, directions, p, probs=None):
        return cls(DiscreteVectorLaw(points, probs), DirectionSet(directions), p)

    @property
    def dimension(self) -> int:
        return self.law.dimension

    def pairings(self) -> np.ndarray:
        """k x l matrix of inner products <t_i, x_j>."""
        return self.directions.directions @ self.law.points.T

    def with_exponent(self, p):
        return MomentInstance(self.law, self.directions, p)

    def __repr__(self):
        return (f"MomentInstance(n={self.dimension}, k={self.directions.size}, "
                f"l={self.law.size}, p={self.p!r})")


def check_exponent(p) -> float:
    try:
        p = float(p)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"exponent must be a real number, got {p!r}") from exc
    if math.isnan(p) or math.isinf(p):
        raise DomainError(f"exponent must be finite, got {p!r}")
    if p < 2:
        raise DomainError(f"exponent p={p!r} is outside the supported range p >= 2")
    return p


# -- weighted p-th power sums -------------------------------------------------
#
# All sums are taken with math.fsum after dividing by the largest magnitude,
# i.e. (sum w |v|^p)^(1/p) = s * (sum w (|v|/s)^p)^(1/p).  The rescaling keeps
# large exponents from overflowing and the correctly rounded sum makes the
# result independent of atom order and of splitting atoms into equal halves.

def weighted_pnorm(values, weights, p) -> float:
    """(sum_j w_j |v_j|^p)^(1/p), ignoring entries with zero weight."""
    values = np.abs(np.asarray(values, dtype=float))
    weights = np.asarray(weights, dtype=float)
    mask = weights > 0
    values, weights = values[mask], weights[mask]
    if values.size == 0:
        return 0.0
    scale = values.max()
    if scale == 0.0:
        return 0.0
    total = math.fsum(weights * (values / scale) ** p)
    return scale * total ** (1.0 / p)


def row_moments(a, weights, p) -> np.ndarray:
    """Per-row weighted p-norms of a k x l matrix."""
    a = np.asarray(a, dtype=float)
    return np.array([weighted_pnorm(row, weights, p) for row in a])


def weak_from_pairings(a, weights, p) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(row_moments(a, weights, p).max())


def strong_from_pairings(a, weights, p) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return weighted_pnorm(np.abs(a).max(axis=0), weights, p)


def ratio_of(strong: float, weak: float) -> float:
    if weak == 0.0:
        if strong == 0.0:
            return 1.0
        raise DegenerateRatio(f"weak moment is 0 but strong moment is {strong!r}")
    return strong / weak


# -- public operations --------------------------------------------------------

def weak_moment(inst: MomentInstance) -> float:
    """max_i (E |<t_i, X>|^p)^(1/p)."""
    return weak_from_pairings(inst.pairings(), inst.law.probs, inst.p)


def strong_moment(inst: MomentInstance) -> float:
    """(E max_i |<t_i, X>|^p)^(1/p)."""
    return strong_from_pairings(inst.pairings(), inst.law.probs, inst.p)


def moment_ratio(inst: MomentInstance) -> float:
    """Strong over weak moment; the vacuous 0/0 case is reported as 1."""
    return ratio_of(strong_moment(inst), weak_moment(inst))


@dataclass(frozen=True)
class MomentSummary:
    weak: float
    strong: float
    ratio: float
    degenerate: bool


def summarize(inst: MomentInstance) -> MomentSummary:
    a = inst.pairings()
    weak = weak_from_pairings(a, inst.law.probs, inst.p)
    strong = strong_from_pairings(a, inst.law.probs, inst.p)
    return MomentSummary(weak, strong, ratio_of(strong, weak), weak == 0.0 and strong == 0.0)


def covariance(law: DiscreteVectorLaw) -> np.ndarray:
    """Second-moment matrix sum_j w_j x_j x_j^T (uncentred)."""
    x = law.points
    c = x.T @ (law.probs[:, None] * x)
    return (c + c.T) / 2


def merge_atoms(law: DiscreteVectorLaw, tol: float = MERGE_TOL) -> DiscreteVectorLaw:
    """Merge atoms closer than ``tol`` in sup-norm, keeping first-occurrence order."""
    reps: list[np.ndarray] = []
    weights: list[list[float]] = []
    for x, w in zip(law.points, law.probs):
        for r, bucket in zip(reps, weights):
            if np.max(np.abs(r - x)) <= tol:
                bucket.append(w)
                break
        else:
            reps.append(x)
            weights.append([w])
    return DiscreteVectorLaw(np.array(reps), np.array([math.fsum(b) for b in weights]))


def symmetrize(law: DiscreteVectorLaw) -> DiscreteVectorLaw:
    """Law of eps * X with eps a fair random sign independent of X."""
    points = np.concatenate([law.points, -law.points])
    probs = np.concatenate([law.probs, law.probs]) / 2
    return merge_atoms(DiscreteVectorLaw(points, probs))


def canonical_law(n: int) -> DiscreteVectorLaw:
    """Uniform law on {+e_1, -e_1, ..., +e_n, -e_n}."""
    eye = np.eye(n)
    return DiscreteVectorLaw(np.stack([eye, -eye], axis=1).reshape(2 * n, n))


def canonical_instance(n: int, p) -> MomentInstance:
    """Canonical law paired with the standard basis as direction set."""
    return MomentInstance(canonical_law(n), DirectionSet(np.eye(n)), p)
