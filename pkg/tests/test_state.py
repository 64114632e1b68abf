import numpy as np
import pytest

from agdiff.domain import TorusDomain
from agdiff.initial import build_initial
from agdiff.state import (GridDensity, InitializationError, ParticleState,
                          StateError, cdf_at, init_from_density, l1_distance,
                          pseudo_inverse, to_grid, unwrapped_positions)


@pytest.fixture
def d4():
    return TorusDomain(4.0, 1.0)


def uniform_state(d, n):
    return ParticleState(d, -d.half + d.length * np.arange(n) / n)


def test_init_uniform_equispaced(d4):
    s = init_from_density(GridDensity(d4, np.full(64, 0.25)), 4, d4)
    assert np.allclose(s.positions, [-2.0, -1.0, 0.0, 1.0], atol=1e-12)
    assert np.allclose(s.densities(), 0.25, atol=1e-14)


def test_init_uniform_densities_any_n(d4):
    for n in (2, 7, 33):
        s = init_from_density(GridDensity(d4, np.full(128, 0.25)), n, d4)
        assert np.allclose(s.densities(), 0.25, rtol=1e-10)


def test_init_triangular_hat_quantiles(d4):
    # unit-mass triangle on [-1, 1]: rising CDF (x+1)^2/2, so the quarter
    # points sit at -1 + 1/sqrt(2), 0, 1 - 1/sqrt(2); x_0 pins to -L/2
    datum = build_initial("hat", d4, {"center": 0.0, "width": 2.0, "height": 1.0})
    s = init_from_density(datum, 4, d4)
    expected = [-2.0, 1.0 / np.sqrt(2.0) - 1.0, 0.0, 1.0 - 1.0 / np.sqrt(2.0)]
    assert np.allclose(s.positions, expected, atol=1e-12)


def test_init_quantile_property(d4):
    datum = build_initial("gaussian_like", d4, {"center": 0.3, "sigma": 0.7})
    for n in (8, 57):
        s = init_from_density(datum, n, d4)
        masses = np.diff(datum.cdf(np.concatenate([s.positions, [d4.half]])))
        assert np.allclose(masses, 1.0 / n, atol=1e-10)


class _AtomicDensity:
    """Half the mass spread uniformly, half concentrated at x = 0."""

    def __init__(self, domain):
        self.domain = domain
        self.mass = 1.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        spread = 0.5 * (x + self.domain.half) / self.domain.length
        return spread + 0.5 * (x >= 0.0)


def test_init_errors(d4):
    with pytest.raises(InitializationError):
        init_from_density(GridDensity(d4, np.zeros(16)), 4, d4)
    with pytest.raises(InitializationError):
        init_from_density(GridDensity(d4, np.full(16, 0.25)), 1, d4)
    # an atom heavier than c_L/N makes consecutive quantiles coincide
    with pytest.raises(InitializationError):
        init_from_density(_AtomicDensity(d4), 16, d4)


def test_cdf_examples(d4):
    s = uniform_state(d4, 4)
    for k in range(4):
        assert cdf_at(s, s.positions[k]) == pytest.approx(k / 4, abs=1e-14)
    assert cdf_at(s, 0.0) == pytest.approx(0.5, abs=1e-14)
    mid = s.positions + 0.5 * s.gaps()
    assert np.allclose(cdf_at(s, mid), (np.arange(4) + 0.5) / 4, atol=1e-14)


def test_pseudo_inverse_nodes_and_uniform(d4):
    s = uniform_state(d4, 8)
    z = np.arange(8) / 8.0
    assert np.allclose(pseudo_inverse(s, z), s.positions, atol=1e-14)
    zz = np.linspace(0.0, 1.0, 100, endpoint=False)
    assert np.allclose(pseudo_inverse(s, zz), -2.0 + 4.0 * zz, atol=1e-13)


def test_cdf_pseudo_inverse_roundtrip(d4):
    rng = np.random.default_rng(5)
    pos = np.sort(rng.uniform(-2, 2, 13))
    s = ParticleState(d4, pos)
    z = np.linspace(0.0, 1.0, 1000, endpoint=False)
    back = cdf_at(s, pseudo_inverse(s, z))
    assert np.allclose(back, z, atol=1e-11)
    assert np.all(np.diff(unwrapped_positions(s)) > 0)


def test_pseudo_inverse_bounds(d4):
    s = uniform_state(d4, 4)
    with pytest.raises(StateError):
        pseudo_inverse(s, 1.0)
    with pytest.raises(StateError):
        pseudo_inverse(s, -0.1)


def test_to_grid_uniform(d4):
    s = uniform_state(d4, 16)
    g = to_grid(s, 32)
    assert np.allclose(g.values, 0.25, atol=1e-14)
    assert to_grid(s, 1).values[0] == pytest.approx(0.25, abs=1e-14)


def test_to_grid_two_cells_hand_overlap():
    # particles at -1, -0.5 on L=2: density 1 on [-1,-0.5), 1/3 on [-0.5,1)
    d = TorusDomain(2.0, 1.0)
    s = ParticleState(d, np.array([-1.0, -0.5]))
    g = to_grid(s, 4)
    assert np.allclose(g.values, [1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], atol=1e-14)
    assert g.mass == pytest.approx(1.0, rel=1e-14)


def test_to_grid_mass_conservation_random(d4):
    rng = np.random.default_rng(6)
    for n, m in ((5, 7), (32, 129), (17, 1024)):
        s = ParticleState(d4, np.sort(rng.uniform(-2, 2, n)))
        g = to_grid(s, m)
        assert g.mass == pytest.approx(1.0, rel=1e-12)


def test_to_grid_exact_on_aligned_grid(d4):
    # grid lines on particle positions: projection reproduces cell densities
    s = uniform_state(d4, 8)
    g8 = to_grid(s, 8)
    g32 = to_grid(s, 32)
    assert np.allclose(np.repeat(g8.values, 4), g32.values, atol=1e-12)


def test_l1_distance_examples(d4):
    g = GridDensity(d4, np.full(4, 0.25))
    assert l1_distance(g, g) == 0.0
    h = GridDensity(d4, np.full(4, 0.5))
    assert l1_distance(g, h) == pytest.approx(1.0)
    a = GridDensity(d4, np.array([1.0, 0.0, 0.0, 0.0]))
    b = GridDensity(d4, np.array([0.0, 1.0, 0.0, 0.0]))   # shifted indicator
    assert l1_distance(a, b) == pytest.approx(2.0 * 1.0 * 1.0)
    with pytest.raises(StateError):
        l1_distance(g, GridDensity(d4, np.full(8, 0.125)))


def test_grid_csv_roundtrip(tmp_path, d4):
    g = GridDensity(d4, 0.2 * np.abs(np.sin(np.arange(16) + 0.1)))
    path = tmp_path / "g.csv"
    g.write_csv(path)
    back = GridDensity.read_csv(path)
    assert back.domain.length == g.domain.length
    assert np.array_equal(back.values, g.values)


def test_state_invariants(d4):
    with pytest.raises(StateError):
        ParticleState(d4, np.array([0.0, 0.0]))
    with pytest.raises(StateError):
        ParticleState(d4, np.array([1.0, 0.0]))
    with pytest.raises(StateError):
        ParticleState(d4, np.array([-3.0, 0.0]))
    s = uniform_state(d4, 6)
    assert np.sum(s.gaps()) == pytest.approx(4.0, abs=1e-12 * 4.0)
    assert np.sum(s.densities() * s.gaps()) == pytest.approx(1.0, rel=1e-12)
