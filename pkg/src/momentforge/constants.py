"""Closed-form constants: rank-expansion constants, the sqrt((n+p)/p) envelope,
coordinate moments of the uniform sphere and p-summing bounds."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields

from .core import check_exponent

SQRT_E = math.sqrt(math.e)
ENVELOPE_FACTOR = 2 * SQRT_E
# Alternative identity-map factor 2*sqrt(2); reported alongside, never used in checks.
PRINTED_PSUMMING_FACTOR = 2 * math.sqrt(2)

_EXACT_COMB_LIMIT = 2 ** 53


def log_binom(a: int, b: int) -> float:
    """log C(a, b) for integers 0 <= b <= a."""
    if b < 0 or b > a:
        raise ValueError(f"invalid binomial C({a}, {b})")
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def multiset_count(n: int, m: int) -> int:
    """Number of nondecreasing m-tuples from {1..n}: C(n+m-1, m)."""
    return math.comb(n + m - 1, m)


def _expansion_constant(n: int, m: int) -> float:
    """C(n+m-1, m)^(1/(2m)), exact binomial while it fits a double."""
    count = multiset_count(n, m) if n + m < 1100 else None
    if count is not None and count < _EXACT_COMB_LIMIT:
        return count ** (1.0 / (2 * m))
    return math.exp(log_binom(n + m - 1, m) / (2 * m))


def candidate_orders(p: float) -> list[int]:
    """Hadamard orders m whose constant is valid at exponent p.

    Even p admits both m = p/2 and m = p/2 - 1 (the latter through the Hoelder
    step on (2m, 2m + 2]); any other p admits only the largest m with 2m < p.
    """
    p = check_exponent(p)
    half = p / 2
    if half == math.floor(half):
        m = int(half)
        return [m, m - 1] if m >= 2 else [m]
    return [math.ceil(half) - 1]


def best_order(n: int, p: float) -> int:
    return min(candidate_orders(p), key=lambda m: (_expansion_constant(n, m), -m))


def c_np(n: int, p: float) -> float:
    """Comparison constant proven for rank-n instances at exponent p."""
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    p = check_exponent(p)
    if p == 2:
        return math.sqrt(n)
    return min(_expansion_constant(n, m) for m in candidate_orders(p))


def envelope(n: int, p: float) -> float:
    """2 sqrt(e) sqrt((n + p)/p)."""
    if math.isinf(p):
        return ENVELOPE_FACTOR
    return ENVELOPE_FACTOR * math.sqrt((n + p) / p)


def log_sphere_moment(n: int, p: float) -> float:
    return (math.lgamma((p + 1) / 2) + math.lgamma(n / 2)
            - math.lgamma(0.5) - math.lgamma((n + p) / 2))


def sphere_moment(n: int, p: float) -> float:
    """E|U_1|^p for U uniform on the unit sphere of R^n.

    U_1^2 is Beta(1/2, (n-1)/2) distributed, hence
    E|U_1|^p = Gamma((p+1)/2) Gamma(n/2) / (Gamma(1/2) Gamma((n+p)/2)).
    """
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    if p <= 0:
        raise ValueError(f"exponent must be positive, got {p}")
    return math.exp(log_sphere_moment(n, p))


def gordon_pi_p(n: int, p: float) -> float:
    """p-summing constant of the n-dimensional Euclidean space."""
    return math.exp(-log_sphere_moment(n, p) / p)


@dataclass(frozen=True)
class PsummingBound:
    dim: int
    p: float
    identity_bound: float
    identity_bound_printed: float
    euclidean_value: float
    rank: int | None = None
    opnorm: float | None = None
    operator_bound: float | None = None


def psumming_upper(dim: int, p: float, rank: int | None = None,
                   opnorm: float | None = None) -> PsummingBound:
    """Upper bounds on pi_p of the identity of a dim-dimensional space and,
    when ``rank`` and ``opnorm`` are given, of a finite rank operator.

    The identity bound uses the 2 sqrt(e) factor implied by the moment
    comparison; the 2 sqrt(2) variant is reported alongside but not relied on.
    """
    p = check_exponent(p)
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    root = math.sqrt((dim + p) / p)
    operator_bound = None
    if rank is not None or opnorm is not None:
        if rank is None or opnorm is None:
            raise ValueError("rank and opnorm must be given together")
        if rank < 1:
            raise ValueError(f"rank must be positive, got {rank}")
        if opnorm < 0:
            raise ValueError(f"operator norm must be nonnegative, got {opnorm}")
        operator_bound = envelope(rank, p) * opnorm
    return PsummingBound(
        dim=dim, p=p,
        identity_bound=ENVELOPE_FACTOR * root,
        identity_bound_printed=PRINTED_PSUMMING_FACTOR * root,
        euclidean_value=gordon_pi_p(dim, p),
        rank=rank, opnorm=opnorm, operator_bound=operator_bound)


@dataclass(frozen=True)
class ConstantRow:
    n: int
    p: float
    m: int
    c_exact: float
    envelope: float
    sphere_gordon: float


def constant_table(n: int, p_grid) -> list[ConstantRow]:
    rows = []
    for p in p_grid:
        p = check_exponent(p)
        rows.append(ConstantRow(n, p, best_order(n, p), c_np(n, p),
                                envelope(n, p), gordon_pi_p(n, p)))
    return rows


def table_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f.name for f in fields(ConstantRow)])
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in astuple(row)])
    return buf.getvalue()
