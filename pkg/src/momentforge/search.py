"""Extremal search for large strong/weak moment ratios.

Each restart draws a Gaussian instance from its own seed stream, then climbs a
smoothed version of the ratio in which both maxima over directions are
replaced by a log-sum-exp with temperatures 10, 100 and 1000.  Directions and
atoms are kept on the unit Frobenius sphere since the ratio is invariant under
rescaling either block.  Restarts are independent, so the result does not
depend on how many threads evaluate them.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import c_np, gordon_pi_p
from .core import DiscreteVectorLaw, DirectionSet, MomentInstance, check_exponent, moment_ratio

TEMPERATURES = (10.0, 100.0, 1000.0)
FD_STEP = 1e-6
LINE_STEPS = 2.0 ** -np.arange(0, 16)
THREADS_ENV = "MOMENTFORGE_THREADS"


@dataclass(frozen=True)
class SearchConfig:
    n: int
    k: int
    l: int
    p: float
    restarts: int = 32
    max_iters: int = 200
    seed: int = 0
    step_tolerance: float = 1e-9
    threads: int | None = None

    def __post_init__(self):
        for name in ("n", "k", "l", "restarts", "max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        object.__setattr__(self, "p", check_exponent(self.p))


@dataclass(frozen=True)
class SearchResult:
    best_ratio: float
    best_instance: MomentInstance
    best_restart: int
    bound: float
    sphere_reference: float
    trace: tuple = field(default=())

    @property
    def within_bound(self) -> bool:
        return self.best_ratio <= self.bound * (1 + 1e-6)

    def to_dict(self) -> dict:
        inst = self.best_instance
        return {
            "best_ratio": self.best_ratio,
            "best_restart": self.best_restart,
            "bound": self.bound,
            "sphere_reference": self.sphere_reference,
            "within_bound": self.within_bound,
            "trace": list(self.trace),
            "instance": {
                "n": inst.dimension, "p": inst.p,
                "points": inst.law.points.tolist(),
                "probs": inst.law.probs.tolist(),
                "directions": inst.directions.directions.tolist(),
            },
        }


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2 ** 64 - 1), index]))


def random_instance(cfg: SearchConfig, restart_index: int) -> MomentInstance:
    """Gaussian directions and atoms, uniform probabilities."""
    rng = _stream(cfg.seed, restart_index)
    directions = rng.standard_normal((cfg.k, cfg.n))
    points = rng.standard_normal((cfg.l, cfg.n))
    return MomentInstance(DiscreteVectorLaw(points), DirectionSet(directions), cfg.p)


# -- smoothed objective on batches of parameter vectors --------------------------

def _split(theta, k, l, n):
    return theta[:, :k * n].reshape(-1, k, n), theta[:, k * n:].reshape(-1, l, n)


def _normalize(theta, k, l, n):
    d, x = _split(theta, k, l, n)
    d = d / np.maximum(np.linalg.norm(d, axis=(1, 2), keepdims=True), 1e-300)
    x = x / np.maximum(np.linalg.norm(x, axis=(1, 2), keepdims=True), 1e-300)
    return np.concatenate([d.reshape(len(theta), -1), x.reshape(len(theta), -1)], axis=1)


def _soft_max(v, tau, axis):
    """(M / tau) log sum exp(tau v / M) with M the largest entry, a smooth upper bound on max."""
    peak = v.max(axis=axis, keepdims=True)
    safe = np.where(peak > 0, peak, 1.0)
    lse = np.log(np.exp(tau * (v / safe - 1.0)).sum(axis=axis, keepdims=True))
    return np.squeeze(peak * (1.0 + lse / tau), axis=axis)


def _log_ratios(theta, w, k, l, n, p, tau):
    """log of the (smoothed when tau is finite) strong/weak ratio for each row."""
    d, x = _split(theta, k, l, n)
    a = np.abs(np.einsum("bkn,bln->bkl", d, x))
    scale = a.max(axis=(1, 2), keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    powered = (a / scale) ** p
    rows = powered @ w
    if tau is None:
        cols, top = powered.max(axis=1), rows.max(axis=1)
    else:
        cols, top = _soft_max(powered, tau, 1), _soft_max(rows, tau, 1)
    strong = cols @ w
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (np.log(strong) - np.log(top)) / p
    return np.where(np.isfinite(out), out, -np.inf)


def local_refine(inst: MomentInstance, cfg: SearchConfig) -> MomentInstance:
    """Finite-difference ascent on the smoothed ratio, annealing the temperature.

    The gradient is estimated one coordinate at a time by central differences;
    each move is a backtracking search along it followed by renormalization of
    both blocks.  The best iterate under the exact ratio is returned, and the
    input itself when nothing beats it.
    """
    k, l, n, p = inst.directions.size, inst.law.size, inst.dimension, inst.p
    w = inst.law.probs
    start = np.concatenate([inst.directions.directions.ravel(), inst.law.points.ravel()])[None]
    if not np.any(start[0, :k * n]) or not np.any(start[0, k * n:]):
        return inst
    theta = _normalize(start, k, l, n)
    dim = theta.shape[1]
    best_theta = theta[0].copy()
    best_exact = _log_ratios(theta, w, k, l, n, p, None)[0]
    basis = np.eye(dim) * FD_STEP

    for tau in TEMPERATURES:
        value = _log_ratios(theta, w, k, l, n, p, tau)[0]
        for _ in range(cfg.max_iters):
            probes = np.concatenate([theta + basis, theta - basis])
            vals = _log_ratios(probes, w, k, l, n, p, tau)
            grad = (vals[:dim] - vals[dim:]) / (2 * FD_STEP)
            if not np.all(np.isfinite(grad)) or not np.any(grad):
                break
            grad /= np.linalg.norm(grad)
            trials = _normalize(theta + LINE_STEPS[:, None] * grad[None], k, l, n)
            tvals = _log_ratios(trials, w, k, l, n, p, tau)
            j = int(np.argmax(tvals))
            gain = tvals[j] - value
            if not gain > 0:
                break
            theta, value = trials[j:j + 1], tvals[j]
            exact = _log_ratios(theta, w, k, l, n, p, None)[0]
            if exact > best_exact:
                best_exact, best_theta = exact, theta[0].copy()
            if gain < cfg.step_tolerance:
                break

    d, x = _split(best_theta[None], k, l, n)
    candidate = MomentInstance(DiscreteVectorLaw(x[0], w), DirectionSet(d[0]), p)
    if moment_ratio(candidate) >= moment_ratio(inst) - 1e-12:
        return candidate
    return inst


def _run_restart(cfg: SearchConfig, index: int):
    refined = local_refine(random_instance(cfg, index), cfg)
    return float(moment_ratio(refined)), refined


def search_extremal(cfg: SearchConfig) -> SearchResult:
    """Best refined ratio over ``cfg.restarts`` independent restarts."""
    threads = cfg.threads or default_threads()
    indices = range(cfg.restarts)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda i: _run_restart(cfg, i), indices))
    else:
        outcomes = [_run_restart(cfg, i) for i in indices]
    trace = tuple(float(r) for r, _ in outcomes)
    # highest ratio wins, lowest restart index breaks ties
    best = max(range(len(outcomes)), key=lambda i: (trace[i], -i))
    return SearchResult(
        best_ratio=trace[best],
        best_instance=outcomes[best][1],
        best_restart=best,
        bound=c_np(cfg.n, cfg.p),
        sphere_reference=gordon_pi_p(cfg.n, cfg.p),
        trace=trace,
    )
