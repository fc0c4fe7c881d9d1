"""Compare the closed-form sphere moment E|U_1|^p with Monte Carlo estimates."""
import argparse

import numpy as np

from momentforge.constants import gordon_pi_p, sphere_moment


def estimate(rng, n, p, samples, batch=200_000):
    total = total_sq = 0.0
    done = 0
    while done < samples:
        size = min(batch, samples - done)
        g = rng.standard_normal((size, n))
        vals = (np.abs(g[:, 0]) / np.linalg.norm(g, axis=1)) ** p
        total += vals.sum()
        total_sq += (vals ** 2).sum()
        done += size
    mean = total / samples
    var = (total_sq - samples * mean ** 2) / (samples - 1)
    return mean, np.sqrt(var / samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", default="2,3,5,10")
    parser.add_argument("--p", default="2,3,6")
    parser.add_argument("--samples", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, required=True)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>3} {'p':>5} {'closed form':>14} {'monte carlo':>14} {'z':>7} {'gordon_pi_p':>12}")
    for n in (int(v) for v in args.n.split(",")):
        for p in (float(v) for v in args.p.split(",")):
            exact = sphere_moment(n, p)
            mean, se = estimate(rng, n, p, args.samples)
            print(f"{n:>3} {p:>5g} {exact:>14.8g} {mean:>14.8g} {(mean - exact) / se:>7.2f} "
                  f"{gordon_pi_p(n, p):>12.6g}")


if __name__ == "__main__":
    main()
