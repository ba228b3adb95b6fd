import math

import numpy as np
import pytest

from synclim.core import (ForcingSpec, ModelParams, NonlinearitySpec,
                          PhysicalParams, per_node_forcing,
                          physical_to_nondimensional, rescale_uniform_forcing,
                          sine2pi_coupling, sine_coupling, uniform_forcing,
                          zero_forcing)
from synclim.errors import ParameterError


def test_sine_matches_numpy():
    d = sine_coupling(1.3)
    x = np.linspace(-7.0, 7.0, 101)
    np.testing.assert_allclose(d(x), 1.3 * np.sin(x), rtol=0, atol=0)


def test_sine2pi_is_one_periodic_and_odd():
    d = sine2pi_coupling(0.5)
    x = np.linspace(-1.0, 1.0, 41)
    np.testing.assert_allclose(d(x + 1.0), d(x), atol=1e-15)
    np.testing.assert_allclose(d(-x), -d(x), atol=1e-15)
    assert d(0.25) == pytest.approx(0.5)


def test_custom_table_interpolation():
    table = np.array([0.0, 1.0, 0.0, -1.0])  # odd, period 1, nodes at j/4
    d = NonlinearitySpec("custom_table", gain=2.0, table=table)
    assert d(0.25) == pytest.approx(2.0)
    assert d(0.75) == pytest.approx(-2.0)
    # halfway between nodes 0 and 1/4
    assert d(0.125) == pytest.approx(1.0)
    # periodic extension and oddness
    assert d(-0.25) == pytest.approx(-2.0)
    assert d(1.25) == pytest.approx(2.0)
    assert d.lipschitz() == pytest.approx(2.0 * 4.0)
    assert d.sup_bound() == pytest.approx(2.0)
    assert d.slope_at_zero() == pytest.approx(2.0 * 1.0 * 4)


def test_custom_table_rejects_even_profile():
    with pytest.raises(ParameterError):
        NonlinearitySpec("custom_table", table=np.array([0.0, 1.0, 0.0, 1.0]))
    with pytest.raises(ParameterError):
        NonlinearitySpec("custom_table", table=np.array([0.5, 1.0, 0.0, -1.0]))


def test_nonlinearity_validation():
    with pytest.raises(ParameterError):
        NonlinearitySpec("cosine")
    with pytest.raises(ParameterError):
        NonlinearitySpec("sine", gain=-1.0)
    with pytest.raises(ParameterError):
        NonlinearitySpec("sine", table=np.array([0.0, 1.0, 0.0, -1.0]))
    with pytest.raises(ParameterError):
        NonlinearitySpec("custom_table")


def test_slope_at_zero():
    assert sine_coupling(0.7).slope_at_zero() == pytest.approx(0.7)
    assert sine2pi_coupling(0.7).slope_at_zero() == pytest.approx(0.7 * 2 * math.pi)
    assert sine2pi_coupling(0.7).lipschitz() == pytest.approx(0.7 * 2 * math.pi)
    assert sine_coupling(0.7).sup_bound() == pytest.approx(0.7)


def test_forcing_vectors():
    assert np.array_equal(zero_forcing().vector(3), np.zeros(3))
    np.testing.assert_allclose(uniform_forcing(0.4).vector(2), [0.4, 0.4])
    f = per_node_forcing([1.0, -2.0])
    np.testing.assert_allclose(f.vector(2), [1.0, -2.0])
    with pytest.raises(ParameterError):
        f.vector(3)
    assert f.lipschitz() == 0.0


def test_forcing_validation():
    with pytest.raises(ParameterError):
        ForcingSpec("ramp")
    with pytest.raises(ParameterError):
        ForcingSpec("zero", values=1.0)
    with pytest.raises(ParameterError):
        uniform_forcing(float("nan"))
    with pytest.raises(ParameterError):
        per_node_forcing([[1.0, 2.0]])


def test_model_params_constants():
    p = ModelParams(1.5, sine2pi_coupling(0.9), uniform_forcing(0.1))
    assert p.coupling_gain == pytest.approx(0.9)
    assert p.lip_d == pytest.approx(0.9 * 2 * math.pi)
    assert p.lip_f == 0.0
    d = p.describe()
    assert d["alpha"] == 1.5 and d["forcing"] == "uniform_constant"
    with pytest.raises(ParameterError):
        ModelParams(float("inf"), sine_coupling())


def test_physical_map():
    pm = np.array([[0.0, 2.0], [2.0, 0.0]])
    phys = PhysicalParams(inertia=0.5, friction=0.2, ref_frequency=50.0,
                          p_source=np.array([3.0, 3.0]), p_max=pm)
    params, weights = physical_to_nondimensional(phys)
    assert params.alpha == pytest.approx(2 * 0.2 * 0.5)
    # both nodes share (3 - 0.2 * 2500) / (0.5 * 2500), so forcing collapses
    assert params.forcing.kind == "uniform_constant"
    assert params.forcing.values == pytest.approx((3.0 - 0.2 * 2500.0) / 1250.0)
    np.testing.assert_allclose(weights, pm / (0.5 * 50.0))
    assert params.nonlinearity.kind == "sine"


def test_physical_validation():
    good = dict(inertia=1.0, friction=0.0, ref_frequency=1.0,
                p_source=np.zeros(2), p_max=np.zeros((2, 2)))
    PhysicalParams(**good)
    for key, bad in (("inertia", 0.0), ("friction", -1.0), ("ref_frequency", 0.0)):
        with pytest.raises(ParameterError):
            PhysicalParams(**{**good, key: bad})
    with pytest.raises(ParameterError):
        PhysicalParams(**{**good, "p_max": np.array([[0.0, 1.0], [2.0, 0.0]])})
    with pytest.raises(ParameterError):
        PhysicalParams(**{**good, "p_max": np.zeros((3, 3))})


def test_rescale_uniform_forcing():
    p = ModelParams(2.0, sine_coupling(), uniform_forcing(3.0))
    stripped, rate = rescale_uniform_forcing(p)
    assert rate == pytest.approx(1.5)
    assert stripped.forcing.kind == "zero"
    assert stripped.alpha == p.alpha
    with pytest.raises(ParameterError):
        rescale_uniform_forcing(ModelParams(0.0, sine_coupling(), uniform_forcing(1.0)))
    with pytest.raises(ParameterError):
        rescale_uniform_forcing(ModelParams(1.0, sine_coupling(), zero_forcing()))
