import numpy as np
import pytest

from agdiff.domain import DomainError, TorusDomain, gap, periodic_diff, wrap


@pytest.fixture
def d10():
    return TorusDomain(10.0, 1.0)


def test_wrap_examples(d10):
    assert wrap(7.3, d10) == pytest.approx(-2.7, abs=1e-14)
    assert wrap(-5.0, d10) == -5.0
    assert wrap(5.0, d10) == -5.0          # right endpoint folds to the left


def test_periodic_diff_examples(d10):
    assert periodic_diff(4.9, -4.9, d10) == pytest.approx(-0.2, abs=1e-14)
    assert periodic_diff(1.23, 1.23, d10) == 0.0
    assert periodic_diff(1.0, 3.5, d10) == -2.5


def test_gap_examples():
    d = TorusDomain(2.0, 1.0)
    assert gap(-1.0, -0.5, d) == 0.5
    assert gap(-0.5, -1.0, d) == 1.5       # wraps around
    assert gap(0.3, 0.3, d) == 2.0         # self-gap is the full circle


def test_wrap_idempotent(d10):
    rng = np.random.default_rng(0)
    x = rng.uniform(-100, 100, 1000)
    w = wrap(x, d10)
    assert np.all(w >= -5.0) and np.all(w < 5.0)
    assert np.array_equal(wrap(w, d10), w)


def test_periodic_diff_antisymmetry(d10):
    rng = np.random.default_rng(1)
    x, y = rng.uniform(-5, 5, 500), rng.uniform(-5, 5, 500)
    s = wrap(periodic_diff(x, y, d10) + periodic_diff(y, x, d10), d10)
    assert np.max(np.abs(s)) == 0.0


def test_gap_cycle_sums_to_period():
    rng = np.random.default_rng(2)
    for L in (1.0, 8.0, 33.3):
        d = TorusDomain(L, 0.7)
        pts = np.sort(rng.uniform(-L / 2, L / 2, 64))
        g = gap(pts, np.roll(pts, -1), d)
        assert np.sum(g) == pytest.approx(L, abs=1e-12 * L)


def test_invalid_domains():
    with pytest.raises(DomainError):
        TorusDomain(0.0, 1.0)
    with pytest.raises(DomainError):
        TorusDomain(4.0, 0.0)
    with pytest.raises(DomainError):
        TorusDomain(4.0, 1.5)
