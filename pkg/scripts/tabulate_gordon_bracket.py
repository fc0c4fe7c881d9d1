"""Tabulate gordon_pi_p(n, p) / sqrt((n + p)/p) over n = 2..500, p in [1, 200].

The printed extremes are the regression bracket frozen in the test-suite.
"""
import argparse

import numpy as np
from scipy.special import gammaln

from momentforge.constants import gordon_pi_p


def bracket_grid(n_max=500, p_max=200.0, p_step=0.25):
    n = np.arange(2, n_max + 1, dtype=float)[:, None]
    p = np.arange(1.0, p_max + p_step / 2, p_step)[None, :]
    log_moment = gammaln((p + 1) / 2) + gammaln(n / 2) - gammaln(0.5) - gammaln((n + p) / 2)
    return n, p, np.exp(-log_moment / p) / np.sqrt((n + p) / p)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-max", type=int, default=500)
    parser.add_argument("--p-max", type=float, default=200.0)
    parser.add_argument("--p-step", type=float, default=0.25)
    args = parser.parse_args()
    n, p, ratio = bracket_grid(args.n_max, args.p_max, args.p_step)
    lo, hi = np.unravel_index(ratio.argmin(), ratio.shape), np.unravel_index(ratio.argmax(), ratio.shape)
    # spot-check the vectorised table against the library routine
    for i, j in (lo, hi, (0, 0), (-1, -1)):
        direct = gordon_pi_p(int(n[i, 0]), float(p[0, j])) / np.sqrt((n[i, 0] + p[0, j]) / p[0, j])
        assert abs(direct - ratio[i, j]) < 1e-12 * direct
    print(f"grid: n=2..{args.n_max}, p=1..{args.p_max} step {args.p_step} ({ratio.size} points)")
    print(f"min ratio {ratio.min():.15g} at n={n[lo[0], 0]:g}, p={p[0, lo[1]]:g}")
    print(f"max ratio {ratio.max():.15g} at n={n[hi[0], 0]:g}, p={p[0, hi[1]]:g}")


if __name__ == "__main__":
    main()
