"""Cross-checks between the compiled sweep, compiled direct, and numpy paths."""

import numpy as np
import pytest

from agdiff import _pairwise, _pairwise_np
from agdiff.domain import TorusDomain
from agdiff.kernels import KernelSpec, build_kernel
from agdiff.state import ParticleState

from _oracles import brute_interaction_sums

CASES = [
    (2.0, 8.0, 3), (2.0, 8.0, 64), (2.0, 8.0, 301),
    (5.0, 8.0, 64), (2.0, 32.0, 128), (5.0, 32.0, 97),
]


def _terms(beta):
    return np.array([-beta ** 2, 1.0]), np.array([beta, 1.0])


@pytest.mark.parametrize("beta,L,n", CASES)
def test_sweep_matches_direct_and_numpy(beta, L, n):
    rng = np.random.default_rng(n * 7 + int(beta))
    x = np.sort(rng.uniform(-L / 2, L / 2, n))
    amps, rates = _terms(beta)
    sweep = _pairwise.interaction_sums(x, L, amps, rates)
    direct = _pairwise.interaction_sums_direct(x, L, amps, rates)
    ref = _pairwise_np.interaction_sums(x, L, amps, rates)
    scale = max(1.0, float(np.max(np.abs(ref))))
    assert np.max(np.abs(sweep - ref)) <= 5e-12 * scale
    assert np.max(np.abs(direct - ref)) <= 5e-13 * scale


def test_matches_brute_force_with_kernel_object():
    d = TorusDomain(8.0, 1.0)
    rng = np.random.default_rng(11)
    s = ParticleState(d, np.sort(rng.uniform(-4, 4, 24)))
    k = build_kernel(KernelSpec("double_yukawa", {"beta": 2.0}))
    ref = brute_interaction_sums(s, k)
    amps, rates = k.exp_terms
    got = _pairwise.interaction_sums(s.positions, 8.0, amps, rates)
    assert np.allclose(got, ref, rtol=1e-11, atol=1e-12)


def test_rotation_gives_identical_values():
    rng = np.random.default_rng(3)
    x = np.sort(rng.uniform(-4, 4, 65))
    amps, rates = _terms(2.0)
    base = _pairwise.interaction_sums(x, 8.0, amps, rates)
    for shift in (1, 17, 64):
        rolled = _pairwise.interaction_sums(np.roll(x, shift), 8.0, amps, rates)
        assert np.array_equal(np.roll(base, shift), rolled)


def test_seam_and_origin_conventions():
    # antipodal pair and coincident pair contribute zero force
    amps, rates = _terms(2.0)
    x = np.array([-2.0, 2.0])     # antipodal on L=8
    s = _pairwise.interaction_sums(x, 8.0, amps, rates)
    assert np.array_equal(s, [0.0, 0.0])
    s_np = _pairwise_np.interaction_sums(x, 8.0, amps, rates)
    assert np.array_equal(s_np, [0.0, 0.0])


def test_even_uniform_lattice_cancels():
    amps, rates = _terms(2.0)
    for n in (64, 128):
        x = -4.0 + 8.0 * np.arange(n) / n
        assert np.max(np.abs(_pairwise.interaction_sums(x, 8.0, amps, rates))) \
            <= 1e-13
        assert np.max(np.abs(_pairwise_np.interaction_sums(x, 8.0, amps, rates))) \
            <= 5e-13


def test_convolve_kprime_backends_agree():
    rng = np.random.default_rng(4)
    L = 8.0
    src = np.sort(rng.uniform(-4, 4, 200))
    tgt = rng.uniform(-4, 4, 37)
    w = rng.uniform(0.0, 1.0, 200)
    amps, rates = _terms(5.0)
    a = _pairwise.convolve_kprime(tgt, src, w, L, amps, rates)
    b = _pairwise_np.convolve_kprime(tgt, src, w, L, amps, rates)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_weighted_pair_sum_backends_agree():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-4, 4, 333)
    w = rng.uniform(0.0, 0.01, 333)
    amps, rates = _terms(2.0)
    a = _pairwise.weighted_pair_sum(pts, w, 8.0, amps, rates)
    b = _pairwise_np.weighted_pair_sum(pts, w, 8.0, amps, rates)
    assert a == pytest.approx(b, rel=1e-12)


def test_force_numpy_env(monkeypatch):
    monkeypatch.setenv("AGDIFF_FORCE_NUMPY", "1")
    assert _pairwise.active_backend() == "numpy"
    monkeypatch.delenv("AGDIFF_FORCE_NUMPY")
    if _pairwise.compiled_available():
        assert _pairwise.active_backend() == "compiled"


def test_factorization_overflow_routes_to_numpy():
    # rate * L beyond double range for exp: must still give finite answers
    L = 200.0
    x = np.sort(np.random.default_rng(6).uniform(-100, 100, 50))
    amps = np.array([1.0])
    rates = np.array([5.0])     # exp(5*200) overflows; plain path required
    s = _pairwise.interaction_sums(x, L, amps, rates)
    assert np.all(np.isfinite(s))
    ref = _pairwise_np.interaction_sums(x, L, amps, rates)
    assert np.allclose(s, ref, atol=1e-14)


def test_thread_count_does_not_change_results(monkeypatch):
    if not _pairwise.compiled_available():
        pytest.skip("compiled extension unavailable")
    rng = np.random.default_rng(7)
    x = np.sort(rng.uniform(-4, 4, 257))
    amps, rates = _terms(2.0)
    monkeypatch.setenv("AGDIFF_THREADS", "1")
    s1 = _pairwise.interaction_sums_direct(x, 8.0, amps, rates)
    e1 = _pairwise.weighted_pair_sum(x, np.full(257, 0.01), 8.0, amps, rates)
    monkeypatch.setenv("AGDIFF_THREADS", "2")
    s2 = _pairwise.interaction_sums_direct(x, 8.0, amps, rates)
    e2 = _pairwise.weighted_pair_sum(x, np.full(257, 0.01), 8.0, amps, rates)
    assert np.array_equal(s1, s2)
    assert e1 == e2
