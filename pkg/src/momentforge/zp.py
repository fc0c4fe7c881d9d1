"""Z_p norms of a finitely supported law.

For a law X and p >= 2 the constraint functional f(t) = (E|<t,X>|^p)^(1/p) is
a seminorm, and its dual

    ||s||_{Z_p(X)} = sup { |<t,s>| : f(t) <= 1 }

is infinite off the span of the support.  On the span it equals
1 / min { f(t) : <t,s> = 1 }, a smooth convex problem which is solved in span
coordinates by projected Newton steps from several deterministic starts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DiscreteVectorLaw, check_exponent, covariance, weighted_pnorm
from .errors import SolverStall

SPAN_RTOL = 1e-10
RESIDUAL_RTOL = 1e-9
PINV_RTOL = 1e-12
RESTARTS = 8
ROOT_SEED = 20240917
RELATIVE_STOP = 1e-10
RESTART_AGREEMENT = 1e-6
P2_CERTIFY_RTOL = 1e-6
MAX_ITERS = 500


@dataclass(frozen=True, eq=False)
class ZpBodySpec:
    """A law with an exponent, plus the cached orthonormal basis of its span."""

    law: DiscreteVectorLaw
    p: float
    span_basis: np.ndarray = field(init=False, repr=False)
    hoelder_dual: float = field(init=False)

    def __post_init__(self):
        p = check_exponent(self.p)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "hoelder_dual", p / (p - 1))
        support = self.law.support
        _, s, vt = np.linalg.svd(support, full_matrices=False)
        rank = 0 if s.size == 0 or s[0] == 0 else int(np.count_nonzero(s > SPAN_RTOL * s[0]))
        basis = vt[:rank]
        basis.setflags(write=False)
        object.__setattr__(self, "span_basis", basis)
        # atoms in span coordinates, rescaled to unit max row norm
        y = self.law.points @ basis.T
        scale = float(np.linalg.norm(y, axis=1).max()) if rank else 0.0
        object.__setattr__(self, "_coords", y / scale if scale else y)
        object.__setattr__(self, "_scale", scale)

    @property
    def dimension(self) -> int:
        return self.law.dimension

    @property
    def span_dim(self) -> int:
        return self.span_basis.shape[0]

    @property
    def full_span(self) -> bool:
        return self.span_dim == self.dimension

    def __repr__(self):
        return f"ZpBodySpec(n={self.dimension}, span_dim={self.span_dim}, p={self.p!r})"


def constraint_norm(spec: ZpBodySpec, t) -> float:
    """(E|<t,X>|^p)^(1/p)."""
    t = np.asarray(t, dtype=float)
    return weighted_pnorm(spec.law.points @ t, spec.law.probs, spec.p)


def _in_span(spec: ZpBodySpec, s: np.ndarray):
    """Span coordinates of s, or None when s leaves the span."""
    coords = spec.span_basis @ s
    residual = np.linalg.norm(s - spec.span_basis.T @ coords)
    if residual > RESIDUAL_RTOL * np.linalg.norm(s):
        return None
    return coords


def _objective(u, y, w, p):
    """F(u) = sum_j w_j |<u, y_j>|^p for a batch of rows u."""
    return np.abs(u @ y.T) ** p @ w


def _minimize_on_hyperplanes(y, w, p, targets, starts):
    """min F(u) subject to <u, target> = 1, for each (target, start) row pair.

    Newton steps on the KKT system keep every iterate on its hyperplane; a
    small Levenberg shift handles directions where the Hessian degenerates.
    """
    u = starts.copy()
    d = y.shape[1]
    f = _objective(u, y, w, p)
    active = np.ones(len(u), dtype=bool)
    for _ in range(MAX_ITERS):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        ua, ta = u[idx], targets[idx]
        a = ua @ y.T
        absa = np.abs(a)
        grad = (p * w * absa ** (p - 1) * np.sign(a)) @ y
        weights = p * (p - 1) * w * absa ** (p - 2)
        hess = np.einsum("bj,jr,js->brs", weights, y, y)
        shift = 1e-12 * np.trace(hess, axis1=1, axis2=2) / d + 1e-300
        kkt = np.zeros((len(idx), d + 1, d + 1))
        kkt[:, :d, :d] = hess + shift[:, None, None] * np.eye(d)
        kkt[:, :d, d] = ta
        kkt[:, d, :d] = ta
        rhs = np.concatenate([-grad, np.zeros((len(idx), 1))], axis=1)
        step = np.linalg.solve(kkt, rhs[..., None])[..., 0][:, :d]

        fa = f[idx]
        lam = np.ones(len(idx))
        slope = np.einsum("bd,bd->b", grad, step)
        accepted = np.zeros(len(idx), dtype=bool)
        new_f = fa.copy()
        new_u = ua.copy()
        for _ in range(60):
            pending = ~accepted
            if not pending.any():
                break
            trial = ua[pending] + lam[pending, None] * step[pending]
            ft = _objective(trial, y, w, p)
            ok = ft <= fa[pending] + 1e-4 * lam[pending] * slope[pending]
            pos = np.flatnonzero(pending)
            new_u[pos[ok]] = trial[ok]
            new_f[pos[ok]] = ft[ok]
            accepted[pos[ok]] = True
            lam[pos[~ok]] /= 2
        u[idx] = new_u
        f[idx] = new_f
        decrease = (fa - new_f) / np.maximum(fa, np.finfo(float).tiny)
        done = (~accepted) | (decrease < RELATIVE_STOP)
        active[idx[done]] = False
    return f


def _solve_many(spec: ZpBodySpec, vectors) -> np.ndarray:
    """Z_p norms of several vectors at once; inf for vectors outside the span."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    out = np.full(len(vectors), np.inf)
    coords, rows = [], []
    for i, s in enumerate(vectors):
        if not np.any(s):
            out[i] = 0.0
            continue
        c = _in_span(spec, s)
        if c is not None:
            coords.append(c)
            rows.append(i)
    if not rows:
        return out

    p = spec.p
    y, w = spec._coords, spec.law.probs
    mask = w > 0
    y, w = y[mask], w[mask]
    coords = np.array(coords)
    lengths = np.linalg.norm(coords, axis=1)
    unit = coords / lengths[:, None]
    d = spec.span_dim

    rng = np.random.default_rng(ROOT_SEED)
    perturb = rng.standard_normal((RESTARTS, d))
    perturb[0] = 0.0
    targets = np.repeat(unit, RESTARTS, axis=0)
    starts = targets + np.tile(perturb, (len(unit), 1))
    # project the starts onto their hyperplanes <u, target> = 1
    starts += (1 - np.einsum("bd,bd->b", starts, targets))[:, None] * targets

    best = _minimize_on_hyperplanes(y, w, p, targets, starts).reshape(len(unit), RESTARTS)
    low, high = best.min(axis=1), best.max(axis=1)
    spread = (high - low) / np.maximum(low, np.finfo(float).tiny)
    # F values agreeing to RESTART_AGREEMENT * p keep the norms within RESTART_AGREEMENT
    if np.any(spread > RESTART_AGREEMENT * p):
        worst = int(np.argmax(spread))
        raise SolverStall(
            f"Z_p norm restarts disagree by {spread[worst] / p:.3e} relative "
            f"(vector {rows[worst]})")
    norms = lengths / (spec._scale * low ** (1.0 / p))
    out[rows] = norms
    return out


def zp_norm(spec: ZpBodySpec, s) -> float:
    """sup{|<t,s>| : E|<t,X>|^p <= 1}; ``math.inf`` when s leaves the span."""
    s = np.asarray(s, dtype=float)
    if s.shape != (spec.dimension,):
        raise ValueError(f"vector has shape {s.shape}, expected ({spec.dimension},)")
    value = float(_solve_many(spec, s)[0])
    if spec.p == 2 and math.isfinite(value) and value > 0:
        closed = zp_norm_p2(spec.law, s)
        if abs(value - closed) > P2_CERTIFY_RTOL * closed:
            raise SolverStall(f"p=2 solver value {value!r} disagrees with closed form {closed!r}")
    return value


def zp_norms(spec: ZpBodySpec, vectors) -> np.ndarray:
    """Vectorised :func:`zp_norm` over the rows of ``vectors``."""
    return _solve_many(spec, vectors)


def zp_norm_p2(law: DiscreteVectorLaw, s) -> float:
    """sqrt(s^T C^+ s) with C the second-moment matrix; inf off its range."""
    s = np.asarray(s, dtype=float)
    if not np.any(s):
        return 0.0
    evals, evecs = np.linalg.eigh(covariance(law))
    top = evals.max()
    if top <= 0:
        return math.inf
    keep = evals > PINV_RTOL * top
    coords = evecs[:, keep].T @ s
    residual = np.linalg.norm(s - evecs[:, keep] @ coords)
    if residual > RESIDUAL_RTOL * np.linalg.norm(s):
        return math.inf
    return math.sqrt(float(np.sum(coords ** 2 / evals[keep])))


def zp_pth_moment(spec: ZpBodySpec) -> float:
    """(E ||X||_{Z_p(X)}^p)^(1/p).

    Atoms always lie in the span of the support, so the value is finite even
    when the span is a proper subspace; check ``spec.full_span`` for that case.
    """
    norms = atom_norms(spec)
    return weighted_pnorm(norms, spec.law.probs, spec.p)


def atom_norms(spec: ZpBodySpec) -> np.ndarray:
    out = np.zeros(spec.law.size)
    mask = spec.law.probs > 0
    out[mask] = _solve_many(spec, spec.law.points[mask])
    return out


@dataclass(frozen=True)
class TailReport:
    threshold: float
    tail_prob: float
    bound: float
    holds: bool
    span_dim: int


def tail_threshold(n: int, p: float) -> float:
    return 2 * math.e ** 1.5 * math.sqrt((n + p) / p)


def tail_bound_check(spec: ZpBodySpec) -> TailReport:
    """Mass of atoms whose Z_p norm exceeds 2 e^(3/2) sqrt((n+p)/p), against e^(-p)."""
    threshold = tail_threshold(spec.span_dim, spec.p)
    norms = atom_norms(spec)
    over = (spec.law.probs > 0) & (norms > threshold)
    tail = math.fsum(spec.law.probs[over])
    bound = math.exp(-spec.p)
    return TailReport(threshold, tail, bound, tail <= bound, spec.span_dim)
