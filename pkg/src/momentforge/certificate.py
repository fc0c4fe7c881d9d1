"""Numerical certificate for the strong/weak moment comparison.

The chain mirrors the three-stage argument:

* p = 2: E max_i <t_i,X>^2 <= alpha * rank(C), alpha = max_i <C t_i, t_i>,
  with C the second-moment matrix of X;
* p = 2m: the m-th entrywise power of the pairing matrix factors through
  C(n+m-1, m) multiset indices, and the p = 2 step is applied to it;
* 2m < p < 2m + 2: reweighting the atoms by max_i |<t_i,x_j>|^(p-2m) reduces
  to exponent 2m, and Hoelder's inequality closes the loop.

Every step records its two sides so that a report can be audited line by line.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import candidate_orders, envelope, multiset_count
from .core import (
    DiscreteVectorLaw, DirectionSet, MomentInstance, moment_ratio, summarize, symmetrize,
)
from .errors import AllZeroInstance, StepViolation
from .hadamard import balanced_factorization, expand_factorization, gram_rank, instance_to_matrix

SLACK_RTOL = 1e-9
IDENTITY_RTOL = 1e-12
RECONSTRUCTION_RTOL = 1e-10
MAX_EXPANSION_ENTRIES = 20_000_000


@dataclass(frozen=True)
class CertificateStep:
    name: str
    lhs: float
    rhs: float
    constant_used: float
    relation: str = "<="
    rtol: float = SLACK_RTOL

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        allowed = self.rtol * max(abs(self.lhs), abs(self.rhs), 1.0)
        if self.relation == "==":
            return abs(self.slack) <= allowed
        return self.slack >= -allowed

    def renamed(self, prefix: str) -> "CertificateStep":
        return CertificateStep(prefix + self.name, self.lhs, self.rhs,
                               self.constant_used, self.relation, self.rtol)

    def with_rtol(self, rtol: float) -> "CertificateStep":
        if self.relation == "==" or rtol == self.rtol:
            return self
        return CertificateStep(self.name, self.lhs, self.rhs, self.constant_used,
                               self.relation, rtol)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slack"] = self.slack
        d["passed"] = self.passed
        return d


def _check(step: CertificateStep, strict: bool) -> CertificateStep:
    if strict and not step.passed:
        raise StepViolation(step.name, step.lhs, step.rhs)
    return step


@dataclass(frozen=True)
class CertificateReport:
    n: int
    p: float
    steps: tuple
    final_ratio: float
    final_bound: float
    envelope: float
    degenerate: bool = False
    dropped_atoms: tuple = ()
    orders: tuple = ()
    scale: float = 1.0

    @property
    def verdict(self) -> str:
        return "pass" if all(s.passed for s in self.steps) else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "n": self.n, "p": self.p,
            "verdict": self.verdict,
            "final_ratio": self.final_ratio,
            "final_bound": self.final_bound,
            "envelope": self.envelope,
            "degenerate": self.degenerate,
            "dropped_atoms": list(self.dropped_atoms),
            "orders": list(self.orders),
            "scale": self.scale,
            "steps": [s.to_dict() for s in self.steps],
        }


# -- p = 2 --------------------------------------------------------------------

def _p2_steps(entries, right, inner_dim, strict, prefix=""):
    """Covariance bound for the matrix problem entries = left @ right.

    Columns of ``right`` play the atoms of a law with unit weights, so that
    C = right @ right.T and <C t_i, t_i> = sum_j entries_ij^2.
    """
    sq = np.asarray(entries, dtype=float) ** 2
    lhs = math.fsum(sq.max(axis=0)) if sq.size else 0.0
    alpha = max((math.fsum(row) for row in sq), default=0.0)
    rank = gram_rank(right)
    cov = _check(CertificateStep(prefix + "covariance", lhs, alpha * rank, float(rank)), strict)
    dim = _check(CertificateStep(prefix + "rank", float(rank), float(inner_dim), float(inner_dim)),
                 strict)
    return [cov, dim], lhs, alpha


def verify_p2_step(inst: MomentInstance, strict: bool = True) -> CertificateStep:
    """E max_i <t_i,X>^2 <= alpha * rank(C) for the symmetrized law."""
    if inst.p != 2:
        raise ValueError(f"the covariance step needs p = 2, got p = {inst.p!r}")
    sym = MomentInstance(symmetrize(inst.law), inst.directions, 2)
    mat, _ = instance_to_matrix(sym)
    steps, _, _ = _p2_steps(mat.entries, mat.right, mat.inner_dim, strict)
    return steps[0]


# -- p = 2m -------------------------------------------------------------------

@dataclass(frozen=True)
class EvenReduction:
    m: int
    inner_dim: int
    matrix: object
    steps: tuple
    strong_power: float  # sum_j max_i |a_ij|^(2m)


def _expansion_size(n, m, k, l):
    return multiset_count(n, m) * (k + l)


def reduce_even(inst: MomentInstance, strict: bool = True) -> EvenReduction:
    """Replace exponent 2m by the p = 2 problem on the m-th entrywise power."""
    half = inst.p / 2
    if half != math.floor(half):
        raise ValueError(f"reduce_even needs an even exponent, got p = {inst.p!r}")
    m = int(half)
    mat, _ = instance_to_matrix(inst)
    if _expansion_size(mat.inner_dim, m, mat.rows, mat.cols) > MAX_EXPANSION_ENTRIES:
        raise ValueError(f"Hadamard expansion of order {m} in dimension {mat.inner_dim} is too large")
    # singular-vector factors avoid cancellation among the monomials
    expanded = expand_factorization(balanced_factorization(mat), m)
    target = expanded.entries
    recon = np.linalg.norm(expanded.left @ expanded.right - target)
    scale = np.linalg.norm(target)
    rec_step = _check(CertificateStep(
        "hadamard_reconstruction", float(recon), RECONSTRUCTION_RTOL * float(scale),
        float(expanded.inner_dim)), strict)
    strong_power = math.fsum((np.abs(mat.entries) ** (2 * m)).max(axis=0))
    p2_lhs = math.fsum((target ** 2).max(axis=0))
    ident = _check(CertificateStep("even_identity", strong_power, p2_lhs, 1.0, "==",
                                   IDENTITY_RTOL), strict)
    return EvenReduction(m, expanded.inner_dim, expanded, (rec_step, ident), strong_power)


def _even_chain(inst: MomentInstance, strict: bool, prefix=""):
    """Steps (b) + (a) for even p; returns steps, strong^p, weak^p, constant."""
    red = reduce_even(inst, strict)
    steps = [s.renamed(prefix) for s in red.steps]
    p2, lhs, alpha = _p2_steps(red.matrix.entries, red.matrix.right, red.inner_dim,
                               strict, prefix + "hadamard_")
    steps += p2
    steps.append(_check(CertificateStep(prefix + "even_bound", red.strong_power,
                                        red.inner_dim * alpha, float(red.inner_dim)), strict))
    constant = red.inner_dim ** (1.0 / (2 * red.m))
    return steps, red.strong_power, alpha, constant


# -- 2m < p <= 2m + 2 ----------------------------------------------------------

@dataclass(frozen=True)
class HoelderReduction:
    m: int
    instance: MomentInstance
    dropped_atoms: tuple
    steps: tuple
    strong_power: float   # sum_j max_i |a_ij|^p
    weak: float           # max_i (sum_j |a_ij|^p)^(1/p)
    mass: float           # sum_j max_i |a_ij|^(p-2m)


def reduce_to_even(inst: MomentInstance, m: int | None = None,
                   strict: bool = True) -> HoelderReduction:
    """Reweight atoms by max_i |<t_i,x_j>|^(p-2m) and drop the exponent to 2m.

    ``m`` defaults to the largest integer with 2m < p.  Even p is accepted only
    with an explicit ``m = p/2 - 1``.
    """
    p = inst.p
    if m is None:
        if p / 2 == math.floor(p / 2):
            raise ValueError(f"p = {p!r} is even; use reduce_even or pass m = p/2 - 1")
        m = math.ceil(p / 2) - 1
    if not (m >= 1 and 2 * m < p <= 2 * m + 2):
        raise ValueError(f"order m = {m} does not satisfy 2m < p <= 2m + 2 for p = {p!r}")

    mat, weights = instance_to_matrix(inst)
    a = np.abs(mat.entries)
    colmax = a.max(axis=0)
    keep = colmax > 0
    dropped = tuple(int(j) for j in np.flatnonzero(~keep))
    if not keep.any():
        raise AllZeroInstance("every pairing <t_i, x_j> vanishes")
    a, colmax = a[:, keep], colmax[keep]

    excess = p - 2 * m
    tilt = colmax ** excess
    mass = math.fsum(tilt)
    q = tilt / mass
    points = (inst.law.points * weights[:, None])[keep]
    reduced = MomentInstance(DiscreteVectorLaw(points, q / math.fsum(q)), inst.directions, 2 * m)

    strong_power = math.fsum(colmax ** p)
    row_p = np.array([math.fsum(r) for r in a ** p])
    weak = float(row_p.max()) ** (1.0 / p)
    reweighted = mass * math.fsum(reduced.law.probs * colmax ** (2 * m))
    tilted_rows = max(math.fsum(r) for r in (a ** (2 * m)) * tilt)

    steps = (
        _check(CertificateStep("reweight_identity", strong_power, reweighted, mass, "==",
                               IDENTITY_RTOL), strict),
        _check(CertificateStep("hoelder", tilted_rows,
                               weak ** (2 * m) * strong_power ** (excess / p), p / (2 * m)),
               strict),
    )
    return HoelderReduction(m, reduced, dropped, steps, strong_power, weak, mass)


def _hoelder_chain(inst: MomentInstance, m: int | None, strict: bool, prefix=""):
    red = reduce_to_even(inst, m, strict)
    sub_steps, _, _, constant = _even_chain(red.instance, strict, prefix + "sub_")
    steps = [s.renamed(prefix) for s in red.steps] + sub_steps
    strong = red.strong_power ** (1.0 / inst.p)
    steps.append(_check(CertificateStep(prefix + "rearrangement", strong, constant * red.weak,
                                        constant), strict))
    return steps, strong, red.weak, constant, red


# -- full certificate -----------------------------------------------------------

def _normalized(inst: MomentInstance):
    """Rescale directions so that the largest pairing has magnitude one."""
    peak = float(np.abs(inst.pairings()[:, inst.law.probs > 0]).max(initial=0.0))
    if peak == 0.0 or not np.isfinite(peak):
        return inst, 1.0
    dirs = DirectionSet(inst.directions.directions / peak)
    return MomentInstance(inst.law, dirs, inst.p), peak


def build_certificate(inst: MomentInstance, tolerance: float = SLACK_RTOL,
                      strict: bool = False) -> CertificateReport:
    """Certify strong/weak <= C_{n,p} <= 2 sqrt(e) sqrt((n+p)/p) for ``inst``.

    Directions are first rescaled so the largest pairing is one (the ratio is
    scale invariant); step values refer to the rescaled instance.  With
    ``strict`` a failing step raises :class:`StepViolation` instead of
    producing a failing verdict.
    """
    n, p = inst.dimension, inst.p
    env = envelope(n, p)
    summary = summarize(inst)
    if summary.degenerate:
        step = CertificateStep("degenerate", 0.0, 0.0, 0.0, "==")
        return CertificateReport(n, p, (step,), 1.0, 1.0, env, degenerate=True,
                                 dropped_atoms=tuple(range(inst.law.size)))

    work, scale = _normalized(inst)
    steps: list[CertificateStep] = []
    constants: list[float] = []
    orders: list[int] = []
    dropped: tuple = ()
    ratios: list[float] = []

    if p == 2:
        sym = MomentInstance(symmetrize(work.law), work.directions, 2)
        mat, _ = instance_to_matrix(sym)
        p2, lhs, alpha = _p2_steps(mat.entries, mat.right, mat.inner_dim, strict)
        steps += p2
        constants.append(math.sqrt(n))
        orders.append(1)
        ratios.append(math.sqrt(lhs / alpha))
    else:
        for m in candidate_orders(p):
            if 2 * m == p:
                chain, strong_pow, weak_pow, constant = _even_chain(work, strict)
                ratios.append((strong_pow / weak_pow) ** (1.0 / p))
                steps += chain
                steps.append(_check(CertificateStep(
                    "even_ratio", ratios[-1], constant, constant), strict))
            else:
                prefix = "alt_" if p / 2 == math.floor(p / 2) else ""
                chain, strong, weak, constant, red = _hoelder_chain(work, m, strict, prefix)
                ratios.append(strong / weak)
                steps += chain
                dropped = red.dropped_atoms
            constants.append(constant)
            orders.append(m)

    final_ratio = ratios[0]
    final_bound = min(constants)
    steps.append(_check(CertificateStep("constant", final_ratio, final_bound, final_bound), strict))
    steps.append(_check(CertificateStep("envelope", final_bound, env, env), strict))
    steps = [s.with_rtol(tolerance) for s in steps]
    if strict:
        for s in steps:
            _check(s, True)
    return CertificateReport(n, p, tuple(steps), final_ratio, final_bound, env,
                             dropped_atoms=dropped, orders=tuple(orders), scale=scale)


def certificate_consistency(inst: MomentInstance, report: CertificateReport) -> float:
    """Relative gap between the chain's ratio and a direct moment_ratio evaluation."""
    direct = moment_ratio(inst)
    return abs(report.final_ratio - direct) / max(direct, 1e-300)
