import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from momentforge.core import DiscreteVectorLaw, DirectionSet, MomentInstance


def random_instance(rng, n=None, k=None, l=None, p=None, dirichlet=True):
    n = int(rng.integers(1, 6)) if n is None else n
    k = int(rng.integers(1, 31)) if k is None else k
    l = int(rng.integers(1, 31)) if l is None else l
    p = float(rng.uniform(2, 12)) if p is None else p
    probs = rng.dirichlet(np.ones(l)) if dirichlet else None
    return MomentInstance(DiscreteVectorLaw(rng.standard_normal((l, n)), probs),
                          DirectionSet(rng.standard_normal((k, n))), p)


def random_sweep(count, seed, even_every=5):
    """The randomized population shared by the sweep tests: n <= 5, k, l <= 30, p in [2, 12]."""
    rng = np.random.default_rng(seed)
    for i in range(count):
        p = float(2 * rng.integers(1, 7)) if even_every and i % even_every == 0 else None
        yield random_instance(rng, p=p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# zero or bounded away from zero, so naive power-sum oracles do not underflow
entries = st.one_of(st.just(0.0), st.floats(1e-3, 10.0), st.floats(-10.0, -1e-3))


@st.composite
def instances(draw, max_n=4, max_k=6, max_l=6, p=None):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, max_k))
    l = draw(st.integers(1, max_l))
    points = draw(arrays(np.float64, (l, n), elements=entries))
    directions = draw(arrays(np.float64, (k, n), elements=entries))
    raw = draw(arrays(np.float64, (l,), elements=st.floats(0.01, 1.0)))
    exponent = draw(st.floats(2.0, 12.0)) if p is None else p
    return MomentInstance(DiscreteVectorLaw(points, raw / raw.sum()), DirectionSet(directions), exponent)


# one line per acceptance criterion, repeated at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
