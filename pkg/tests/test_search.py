import math

import numpy as np
import pytest

from momentforge.constants import c_np
from momentforge.core import MomentInstance, canonical_instance, moment_ratio
from momentforge.search import (
    SearchConfig, default_threads, local_refine, random_instance, search_extremal,
)


def cfg(**kw):
    base = dict(n=2, k=6, l=6, p=2.0, restarts=4, max_iters=60, seed=3)
    base.update(kw)
    return SearchConfig(**base)


def test_random_instance_is_deterministic():
    a, b = random_instance(cfg(), 5), random_instance(cfg(), 5)
    np.testing.assert_array_equal(a.law.points, b.law.points)
    np.testing.assert_array_equal(a.directions.directions, b.directions.directions)
    c = random_instance(cfg(), 6)
    assert not np.array_equal(a.law.points, c.law.points)
    np.testing.assert_allclose(a.law.probs, np.full(6, 1 / 6))


@pytest.mark.parametrize("config", [cfg(n=1), cfg(k=1, l=1)])
def test_trivial_random_instances_have_ratio_one(config):
    assert moment_ratio(random_instance(config, 0)) == pytest.approx(1.0, abs=1e-14)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(restarts=0)
    with pytest.raises(ValueError):
        cfg(p=1.5)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_refine_keeps_optimum(n):
    inst = canonical_instance(n, 2)
    refined = local_refine(inst, cfg(n=n))
    assert moment_ratio(refined) == pytest.approx(math.sqrt(n), rel=1e-9)


def test_refine_n1_and_zero():
    one = MomentInstance.from_arrays([[1.0], [-3.0], [2.0]], [[2.0], [0.1]], 3)
    assert moment_ratio(local_refine(one, cfg(n=1))) == pytest.approx(1.0, abs=1e-14)
    zero = MomentInstance.from_arrays([[0.0, 0.0], [0.0, 0.0]], [[1.0, 0.0]], 3)
    assert local_refine(zero, cfg()) is zero


def test_refine_never_decreases_ratio():
    config = cfg(n=3, p=3.5, k=5, l=7)
    for i in range(5):
        inst = random_instance(config, i)
        assert moment_ratio(local_refine(inst, config)) >= moment_ratio(inst) - 1e-12


def test_search_n1():
    result = search_extremal(cfg(n=1, p=4.5))
    assert result.best_ratio == pytest.approx(1.0, abs=1e-12)
    assert result.bound == 1.0 and result.within_bound


def test_search_respects_bound_for_p_above_two():
    for p in (3.0, 4.0, 5.5):
        result = search_extremal(cfg(n=3, p=p))
        assert result.best_ratio <= c_np(3, p) * (1 + 1e-6)
        assert result.best_instance is not None
        assert moment_ratio(result.best_instance) == pytest.approx(result.best_ratio, rel=1e-9)


def test_budget_monotone_and_prefix_stable():
    small = search_extremal(cfg(restarts=3))
    large = search_extremal(cfg(restarts=6))
    assert large.trace[:3] == small.trace
    assert large.best_ratio >= small.best_ratio


def test_thread_count_does_not_change_result():
    one = search_extremal(cfg(n=3, threads=1))
    many = search_extremal(cfg(n=3, threads=4))
    assert one.trace == many.trace
    assert one.best_restart == many.best_restart
    np.testing.assert_array_equal(one.best_instance.law.points, many.best_instance.law.points)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("MOMENTFORGE_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.delenv("MOMENTFORGE_THREADS")
    assert default_threads() >= 1


def test_result_serializes():
    d = search_extremal(cfg(restarts=2)).to_dict()
    assert set(d) >= {"best_ratio", "bound", "sphere_reference", "trace", "instance"}
    assert len(d["trace"]) == 2
