import numpy as np
import pytest
from scipy.integrate import quad

from agdiff.kernels import (Kernel, KernelError, KernelSpec, build_kernel,
                            validate_kernel, _expsum_sup)


def dy(beta):
    return build_kernel(KernelSpec("double_yukawa", {"beta": beta}))


def test_double_yukawa_values():
    k = dy(2.0)
    assert k.eval(0.0) == pytest.approx(1.0 - 4.0, abs=1e-15)
    # slope just right of the origin approaches beta^3 - 1
    h = 1e-9
    assert k.eval_d1(h) == pytest.approx(7.0, rel=1e-7)
    assert k.norms.sup_K1 == pytest.approx(7.0, rel=1e-12)
    assert k.eval_d1(0.0) == 0.0


def test_double_yukawa_norms_match_grid_maximization():
    for beta in (2.0, 5.0):
        k = dy(beta)
        amps, rates = k.exp_terms
        assert k.norms.sup_K == pytest.approx(_expsum_sup(amps, rates, 0), rel=1e-9)
        assert k.norms.sup_K1 == pytest.approx(_expsum_sup(amps, rates, 1), rel=1e-9)
        assert k.norms.sup_K2 == pytest.approx(_expsum_sup(amps, rates, 2), rel=1e-9)


def test_one_sided_signed_integral_is_total_fall():
    # int_0^inf K' dz = K(inf) - K(0+) = beta^2 - 1: exact quadrature anchor
    for beta in (2.0, 5.0):
        k = dy(beta)
        val, _ = quad(lambda z: float(k.eval_d1(z)), 0.0, 60.0, limit=300)
        assert val == pytest.approx(beta ** 2 - 1.0, rel=1e-9)


def test_l1_norm_of_derivative():
    # |K'| integrates to (beta^2 - 1) + 2 K(z1) per side, z1 = 3 ln(beta)/(beta-1)
    for beta in (2.0, 3.0, 5.0):
        k = dy(beta)
        val, _ = quad(lambda z: abs(float(k.eval_d1(z))), 0.0, 80.0, limit=500)
        assert 2.0 * val == pytest.approx(k.norms.l1_K1, rel=1e-8)
    # beta = 2: one-sided signed integral 3, two-sided absolute integral 6.25
    k = dy(2.0)
    assert k.norms.l1_K1 == pytest.approx(6.25, rel=1e-12)


def test_zero_kernel():
    k = build_kernel(KernelSpec("zero"))
    z = np.linspace(-5, 5, 11)
    assert np.all(k.eval(z) == 0.0)
    assert np.all(k.eval_d1(z) == 0.0)
    assert k.norms.sup_K == k.norms.sup_K1 == k.norms.sup_K2 == k.norms.l1_K1 == 0.0
    assert validate_kernel(k).passed


def test_derivative_matches_finite_differences():
    k = dy(2.0)
    for h in (1e-4, 1e-5):
        z = np.linspace(10 * h, 6.0, 500)
        fd = (k.eval(z + h) - k.eval(z - h)) / (2.0 * h)
        err = np.abs(fd - k.eval_d1(z))
        assert np.max(err) <= 20.0 * h * h * k.norms.sup_K2


def test_norms_are_true_bounds_on_samples():
    rng = np.random.default_rng(3)
    for beta in (2.0, 5.0):
        k = dy(beta)
        z = rng.uniform(-40, 40, 20_000)
        assert np.max(np.abs(k.eval(z))) <= k.norms.sup_K * (1 + 1e-12)
        assert np.max(np.abs(k.eval_d1(z))) <= k.norms.sup_K1 * (1 + 1e-12)
        assert np.max(np.abs(k.eval_d2(z))) <= k.norms.sup_K2 * (1 + 1e-12)


def test_morse_kernel_builds_and_validates():
    k = build_kernel(KernelSpec("morse", {"attr_amp": 1.0, "attr_range": 2.0,
                                          "rep_amp": 2.0, "rep_range": 0.5}))
    rep = validate_kernel(k, n_samples=2000)
    assert rep.passed, str(rep)
    assert k.eval(0.0) == pytest.approx(1.0)     # -1 + 2


def test_validation_passes_double_yukawa():
    for beta in (2.0, 5.0):
        rep = validate_kernel(dy(beta), n_samples=10_000, tol=1e-10)
        assert rep.passed, str(rep)


def test_tabulated_asymmetry_is_caught_with_witness():
    grid = np.linspace(-10, 10, 2001)
    beta = 2.0
    vals = -beta ** 2 * np.exp(-beta * np.abs(grid)) + np.exp(-np.abs(grid))
    vals[1500] += 0.05       # poison one node on the right half
    k = build_kernel(KernelSpec("tabulated", {"grid": grid, "values": vals}))
    rep = validate_kernel(k, n_samples=4000)
    failed = {c.name for c in rep.failures()}
    assert "symmetry" in failed
    sym = [c for c in rep.failures() if c.name == "symmetry"][0]
    assert abs(abs(sym.witness) - abs(grid[1500])) < 0.02


def test_bad_parameters_raise():
    with pytest.raises(KernelError):
        build_kernel(KernelSpec("double_yukawa", {"beta": -1.0}))
    with pytest.raises(KernelError):
        build_kernel(KernelSpec("double_yukawa", {}))
    with pytest.raises(KernelError):
        build_kernel(KernelSpec("morse", {"attr_amp": 1.0, "attr_range": -2.0,
                                          "rep_amp": 2.0, "rep_range": 0.5}))
    with pytest.raises(KernelError):
        build_kernel(KernelSpec("nope"))


def test_validate_needs_enough_samples():
    with pytest.raises(KernelError):
        validate_kernel(dy(2.0), n_samples=10)
