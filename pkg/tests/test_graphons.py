import math

import numpy as np
import pytest

from synclim.errors import ParameterError
from synclim.graphons import (DifferenceKernel, GridKernel, SmallWorldParams,
                              constant_kernel, fourier_coefficient,
                              indicator_kernel, indicator_profile,
                              load_grid_kernel_csv, pernorm,
                              save_grid_kernel_csv, small_world_kernel,
                              spectral_difference, tabulated_profile_kernel)


def fourier_oracle(kernel, m):
    """Panelized Gauss-Legendre quadrature of prof(x) * exp(2 pi i m x),
    fully independent of the closed forms under test."""
    xg, wg = np.polynomial.legendre.leggauss(16)
    total = 0.0 + 0.0j
    for lo, hi, v in kernel.profile_segments():
        panels = max(1, math.ceil(abs(m) * (hi - lo) * 4))
        edges = np.linspace(lo, hi, panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            x = 0.5 * (b - a) * xg + 0.5 * (a + b)
            w = 0.5 * (b - a) * wg
            total += v * np.sum(w * np.exp(2j * np.pi * m * x))
    return total


def test_pernorm_periodic_and_even():
    x = np.linspace(-1.0, 0.0, 201)
    np.testing.assert_allclose(pernorm(x + 1.0), pernorm(x), atol=1e-15)
    np.testing.assert_allclose(pernorm(-x), pernorm(x), atol=1e-15)
    assert pernorm(0.5) == 0.5
    assert pernorm(0.75) == pytest.approx(0.25)
    assert pernorm(3.25) == pytest.approx(0.25)
    assert np.all(pernorm(np.linspace(-4, 7, 500)) <= 0.5)


def test_indicator_is_strict_at_radius():
    assert indicator_profile(0.25, 0.25) == 0.0
    assert indicator_profile(0.2499999, 0.25) == 1.0
    assert indicator_profile(0.75, 0.25) == 0.0  # pernorm == s again
    with pytest.raises(ParameterError):
        indicator_profile(0.1, 0.0)
    with pytest.raises(ParameterError):
        indicator_profile(0.1, 0.6)


def test_small_world_params_validation():
    with pytest.raises(ParameterError):
        SmallWorldParams(0.0, 0.25)
    with pytest.raises(ParameterError):
        SmallWorldParams(0.5, 0.25)
    with pytest.raises(ParameterError):
        SmallWorldParams(0.1, 0.5)
    with pytest.raises(ParameterError):
        SmallWorldParams(0.1, 0.25, variant="smallworld")


def test_small_world_profile_values():
    k = small_world_kernel(SmallWorldParams(0.1, 0.25))
    # inside the short radius both components contribute
    assert k.profile(0.1) == pytest.approx(0.9)
    # between r and 1/2 only the long-range component remains
    assert k.profile(0.3) == pytest.approx(0.1)
    # pernorm == 1/2 is outside the strict indicator (pointwise only;
    # the set has measure zero, so the essential min stays at 0.1)
    assert k.profile(0.5) == pytest.approx(0.0)
    assert k.sup_norm == pytest.approx(0.9)
    assert k.min_value == pytest.approx(0.1)
    assert k.evaluate(0.35, 0.25) == pytest.approx(0.9)
    np.testing.assert_allclose(k.profile(np.array([-0.1, 0.9, 1.1])), 0.9)


def test_rewire_and_insertion_share_the_mixture():
    ki = small_world_kernel(SmallWorldParams(0.2, 0.1, "insertion"))
    kr = small_world_kernel(SmallWorldParams(0.2, 0.1, "rewire"))
    u = np.linspace(0.0, 1.0, 257)
    np.testing.assert_array_equal(ki.profile(u), kr.profile(u))
    assert ki.describe()["small_world"]["variant"] == "insertion"
    assert kr.describe()["small_world"]["variant"] == "rewire"


def test_difference_kernel_rejects_negative_profiles():
    with pytest.raises(ParameterError):
        DifferenceKernel(offset=-0.5)
    with pytest.raises(ParameterError):
        DifferenceKernel(offset=0.1, parts=((-0.5, 0.25),))
    # negative dip inside the table
    with pytest.raises(ParameterError):
        tabulated_profile_kernel([0.5, -0.1, -0.1, 0.5])


def test_profile_table_must_be_even():
    with pytest.raises(ParameterError):
        tabulated_profile_kernel([0.0, 1.0, 2.0, 3.0])
    k = tabulated_profile_kernel([3.0, 1.0, 1.0, 3.0])
    assert k.profile(0.1) == pytest.approx(3.0)
    assert k.profile(0.3) == pytest.approx(1.0)
    assert k.sup_norm == pytest.approx(3.0)


def test_segments_partition_unit_interval():
    k = small_world_kernel(SmallWorldParams(0.1, 0.25))
    segs = k.profile_segments()
    assert segs[0][0] == 0.0 and segs[-1][1] == 1.0
    for (_, hi1, _), (lo2, _, _) in zip(segs[:-1], segs[1:]):
        assert hi1 == lo2
    total = sum(hi - lo for lo, hi, _ in segs)
    assert total == pytest.approx(1.0, abs=1e-14)


def test_fourier_constant_kernel():
    k = constant_kernel(0.7)
    assert fourier_coefficient(k, 0) == pytest.approx(0.7)
    for m in (1, 2, -3, 17):
        assert abs(fourier_coefficient(k, m)) < 1e-15


def test_fourier_indicator_closed_form():
    k = indicator_kernel(0.25)
    assert fourier_coefficient(k, 0).real == pytest.approx(0.5)
    assert fourier_coefficient(k, 1).real == pytest.approx(1.0 / math.pi)
    assert fourier_coefficient(k, 2).real == pytest.approx(0.0, abs=1e-15)
    assert fourier_coefficient(k, -1).real == pytest.approx(-1.0 / (-math.pi))


def test_fourier_against_quadrature_oracle():
    kernels = [
        small_world_kernel(SmallWorldParams(0.1, 0.25)),
        small_world_kernel(SmallWorldParams(0.3, 0.05)),
        indicator_kernel(0.4, 0.7),
        constant_kernel(0.3),
        tabulated_profile_kernel([0.9, 0.2, 0.4, 0.4, 0.2, 0.9]),
    ]
    for k in kernels:
        for m in (0, 1, 2, 5, 31, 64, -1, -64):
            got = fourier_coefficient(k, m)
            want = fourier_oracle(k, m)
            assert abs(got - want) < 1e-12, (k.describe(), m)


def test_fourier_coefficients_are_real_for_even_profiles():
    k = tabulated_profile_kernel([0.9, 0.2, 0.4, 0.4, 0.2, 0.9])
    for m in range(-8, 9):
        assert fourier_coefficient(k, m).imag == pytest.approx(0.0, abs=1e-15)


def test_fourier_rejects_bad_arguments():
    k = constant_kernel(1.0)
    with pytest.raises(ParameterError):
        fourier_coefficient(k, 0.5)
    with pytest.raises(ParameterError):
        fourier_coefficient(GridKernel(np.ones((2, 2))), 1)


def test_spectral_difference_pinned_value():
    # insertion mixture (p, r) = (0.1, 0.25) at m = 1:
    # 0.1 * 0 + 0.8 * (1/pi)  minus  coef(0) = 0.5, exactly 0.8/pi - 1/2
    k = small_world_kernel(SmallWorldParams(0.1, 0.25))
    assert spectral_difference(k, 1) == pytest.approx(0.8 / math.pi - 0.5, abs=1e-15)
    with pytest.raises(ParameterError):
        spectral_difference(k, 0)


def test_spectral_difference_negative_off_zero():
    for k in (small_world_kernel(SmallWorldParams(0.1, 0.25)),
              small_world_kernel(SmallWorldParams(0.4, 0.45)),
              indicator_kernel(0.3),
              tabulated_profile_kernel([0.9, 0.2, 0.4, 0.4, 0.2, 0.9])):
        for m in range(1, 65):
            assert spectral_difference(k, m) < 0.0


def test_grid_kernel_validation_and_lookup():
    with pytest.raises(ParameterError):
        GridKernel(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ParameterError):
        GridKernel(-np.ones((2, 2)))
    with pytest.raises(ParameterError):
        GridKernel(np.ones((2, 3)))
    v = np.array([[0.1, 0.7], [0.7, 0.3]])
    k = GridKernel(v)
    assert k.evaluate(0.2, 0.8) == pytest.approx(0.7)
    assert k.evaluate(0.9, 0.9) == pytest.approx(0.3)
    assert k.evaluate(1.0, 1.0) == pytest.approx(0.3)  # right edge clamps
    assert k.sup_norm == pytest.approx(0.7)
    assert k.min_value == pytest.approx(0.1)


def test_grid_kernel_csv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    v = rng.uniform(0.0, 1.0, (5, 5))
    v = (v + v.T) / 2
    k = GridKernel(v)
    path = tmp_path / "kern.csv"
    save_grid_kernel_csv(k, path)
    back = load_grid_kernel_csv(path)
    np.testing.assert_array_equal(back.values, k.values)
