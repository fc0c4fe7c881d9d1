"""Randomized sweep of ratio <= min(c_np, envelope), with the certificate chain.

Prints the worst observed ratio/bound per dimension and exits nonzero on any
violation or failed certificate.
"""
import argparse
import sys
from collections import defaultdict

import numpy as np

from momentforge import DiscreteVectorLaw, DirectionSet, MomentInstance, build_certificate
from momentforge.constants import c_np, envelope
from momentforge.core import moment_ratio


def draw(rng, max_n, max_kl, p_max):
    n = int(rng.integers(1, max_n + 1))
    k, l = (int(v) for v in rng.integers(1, max_kl + 1, size=2))
    p = float(rng.uniform(2, p_max))
    law = DiscreteVectorLaw(rng.standard_normal((l, n)), rng.dirichlet(np.ones(l)))
    return MomentInstance(law, DirectionSet(rng.standard_normal((k, n))), p)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=10_000)
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--max-n", type=int, default=5)
    parser.add_argument("--max-kl", type=int, default=30)
    parser.add_argument("--p-max", type=float, default=12.0)
    parser.add_argument("--no-certificate", action="store_true")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    worst = defaultdict(float)
    violations = failed = 0
    for _ in range(args.count):
        inst = draw(rng, args.max_n, args.max_kl, args.p_max)
        n, p = inst.dimension, inst.p
        share = moment_ratio(inst) / min(c_np(n, p), envelope(n, p))
        worst[n] = max(worst[n], share)
        violations += share > 1 + 1e-9
        if not args.no_certificate:
            failed += not build_certificate(inst).passed
    print("n  worst ratio / bound")
    for n in sorted(worst):
        print(f"{n}  {worst[n]:.6f}")
    print(f"{args.count} instances, {violations} violations, {failed} failed certificates")
    return 1 if violations or failed else 0


if __name__ == "__main__":
    sys.exit(main())
