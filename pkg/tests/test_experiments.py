import math

import numpy as np
import pytest

from synclim.core import (ModelParams, NonlinearitySpec, sine2pi_coupling,
                          zero_forcing)
from synclim.errors import ParameterError
from synclim.experiments import (MuScalingReport, _trial_seeds,
                                 averaged_vs_random, deterministic_convergence,
                                 gronwall_envelope, load_report_json,
                                 mu_scaling_study, random_convergence,
                                 write_report_json)
from synclim.graphons import (SmallWorldParams, constant_kernel,
                              small_world_kernel)
from synclim.graphs import graph_from_graphon, l2_kernel_distance, step_kernel

KERNEL = small_world_kernel(SmallWorldParams(0.1, 0.25))
PARAMS = ModelParams(1.0, sine2pi_coupling(0.9), zero_forcing())


def test_trial_seeds_deterministic():
    a = _trial_seeds(2024, 8)
    assert a == _trial_seeds(2024, 8)
    assert len(a) == 8 and len(set(a)) == 8
    assert all(isinstance(s, int) for s in a)
    assert a != _trial_seeds(2025, 8)


def test_gronwall_envelope_formula():
    env = gronwall_envelope(PARAMS, 0.9, [(0.1, 0.2)], [0.3], 0.5)
    c = 0.9
    c2 = 2.0 * (2.0 * math.pi * 0.9) * 0.9 + 0.0 + 1.0 + 2.0 + c
    want = math.sqrt((0.01 + 0.04 + c * 0.09) * math.exp(c2 * 0.5))
    assert env == [pytest.approx(want, rel=1e-12)]
    # more kernel error can only widen the bound
    wider = gronwall_envelope(PARAMS, 0.9, [(0.1, 0.2)], [0.6], 0.5)
    assert wider[0] > env[0]


@pytest.fixture(scope="module")
def det_report():
    return deterministic_convergence(KERNEL, PARAMS, "sin_1", "zero", 0.5,
                                     [8, 16, 32], grid_ref=128, dt=2e-3)


def test_deterministic_convergence_decreases(det_report):
    assert det_report.n_values == [8, 16, 32]
    e = det_report.sup_errors
    assert e[0] > e[1] > e[2] > 0.0
    assert len(det_report.runtimes) == 3


def test_envelope_dominates_measured_error(det_report):
    for sup, env in zip(det_report.sup_errors, det_report.envelope):
        assert sup <= env


def test_deterministic_convergence_components(det_report):
    for n, dk, (dg, dh) in zip(det_report.n_values, det_report.kernel_errors,
                               det_report.data_errors):
        graph = graph_from_graphon(KERNEL, n)
        assert dk == l2_kernel_distance(step_kernel(graph), KERNEL)
        assert dh == 0.0
        assert dg > 0.0
    assert det_report.config["grid_ref"] == 128


def test_convergence_report_serialization(det_report, tmp_path):
    d = det_report.to_dict()
    assert "runtimes" not in d
    json_path = tmp_path / "report.json"
    write_report_json(det_report, json_path)
    assert load_report_json(json_path) == d
    assert json_path.read_text().endswith("\n")
    csv_path = tmp_path / "report.csv"
    det_report.write_csv(csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "n,sup_error,envelope,kernel_l2,data_l2_g,data_l2_h"
    first = lines[1].split(",")
    assert int(first[0]) == 8
    assert float(first[1]) == det_report.sup_errors[0]


def test_grid_ref_precondition():
    with pytest.raises(ParameterError):
        deterministic_convergence(KERNEL, PARAMS, "sin_1", "zero", 0.5,
                                  [8, 64], grid_ref=128)


def test_write_report_json_accepts_dicts(tmp_path):
    path = tmp_path / "payload.json"
    write_report_json({"b": 1, "a": [2.5]}, path)
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert load_report_json(path) == {"a": [2.5], "b": 1}


@pytest.fixture(scope="module")
def random_report():
    return random_convergence(KERNEL, PARAMS, "sin_1", "zero", 0.3, [8, 16],
                              trials=4, seed0=5, grid_ref=64, dt=2e-3)


def test_random_convergence_reproducible(random_report):
    again = random_convergence(KERNEL, PARAMS, "sin_1", "zero", 0.3, [8, 16],
                               trials=4, seed0=5, grid_ref=64, dt=2e-3)
    assert again.to_dict() == random_report.to_dict()
    assert random_report.seeds == _trial_seeds(5, 4)
    assert random_report.failures == []


def test_random_convergence_triangle_split(random_report):
    for i, n in enumerate(random_report.n_values):
        avg = random_report.averaged_errors[i]
        for total, part in zip(random_report.errors[n],
                               random_report.random_components[n]):
            assert total <= avg + part + 1e-12


def test_random_convergence_summary_stats(random_report):
    for i, n in enumerate(random_report.n_values):
        assert random_report.medians[i] == pytest.approx(np.median(random_report.errors[n]))
        assert random_report.q90s[i] == pytest.approx(np.quantile(random_report.errors[n], 0.9))
    d = random_report.to_dict()
    assert d["kind"] == "random_convergence"
    assert set(d["errors"]) == {"8", "16"}


def test_random_convergence_worker_pool_agrees(random_report):
    pooled = random_convergence(KERNEL, PARAMS, "sin_1", "zero", 0.3, [8, 16],
                                trials=4, seed0=5, grid_ref=64, dt=2e-3, workers=2)
    assert pooled.to_dict() == random_report.to_dict()


def test_random_convergence_validation():
    with pytest.raises(ParameterError):
        random_convergence(KERNEL, PARAMS, "sin_1", "zero", 0.3, [8], trials=0,
                           seed0=1, grid_ref=64)
    with pytest.raises(ParameterError):
        random_convergence(KERNEL, PARAMS, "sin_1", "zero", 0.3, [32], trials=2,
                           seed0=1, grid_ref=64)


def test_averaged_vs_random_gap_shrinks(tmp_path):
    report = averaged_vs_random(KERNEL, PARAMS, "sin_1", "zero", 0.3, [8, 64],
                                trials=8, seed0=7, dt=2e-3)
    assert report.kind == "averaged_vs_random"
    assert report.medians[1] < report.medians[0]
    assert report.averaged_errors is None
    csv_path = tmp_path / "gap.csv"
    report.write_csv(csv_path)
    assert csv_path.read_text().splitlines()[0] == "n,median,q90"


def test_mu_scaling_exact_mean():
    report = mu_scaling_study(constant_kernel(0.5), 2.0, [16, 64], trials=40, seed0=3)
    for n, mean, se in zip(report.n_values, report.means, report.stderrs):
        exact = 2.0 * 0.5 * 0.5 / n
        assert abs(mean - exact) <= 5.0 * se
    assert -1.4 < report.slope < -0.6
    assert report.a_source == "ones"


def test_mu_scaling_deterministic():
    a = mu_scaling_study(KERNEL, 1.0, [16, 32], trials=3, seed0=9)
    b = mu_scaling_study(KERNEL, 1.0, [16, 32], trials=3, seed0=9)
    assert a.to_dict() == b.to_dict()
    assert a.values[16] == a.to_dict()["values"]["16"]


def test_mu_scaling_coupling_source_matches_table_path():
    """The vectorized sine evaluation and the generic table fallback
    integrate the same deviation field."""
    table = np.sin(2 * np.pi * np.arange(4096) / 4096)
    tabled = ModelParams(1.0, NonlinearitySpec("custom_table", gain=0.9, table=table),
                         zero_forcing())
    fast = mu_scaling_study(KERNEL, 0.2, [8], trials=2, seed0=4, a_source="coupling",
                            params=PARAMS, g="sin_1", dt=2e-3)
    slow = mu_scaling_study(KERNEL, 0.2, [8], trials=2, seed0=4, a_source="coupling",
                            params=tabled, g="sin_1", dt=2e-3)
    np.testing.assert_allclose(fast.values[8], slow.values[8], rtol=1e-3)


def test_mu_scaling_validation(tmp_path):
    with pytest.raises(ParameterError):
        mu_scaling_study(KERNEL, 1.0, [8], trials=2, seed0=1, a_source="walsh")
    with pytest.raises(ParameterError):
        mu_scaling_study(KERNEL, 1.0, [8], trials=2, seed0=1, a_source="coupling")
    report = mu_scaling_study(constant_kernel(0.3), 1.0, [8], trials=2, seed0=1)
    csv_path = tmp_path / "mu.csv"
    report.write_csv(csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "n,mean,stderr"
    assert float(lines[1].split(",")[1]) == report.means[0]
