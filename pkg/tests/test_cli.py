import json
import os

import numpy as np
import pytest
import yaml

from synclim.cli import main, run
from synclim.dynamics import read_trajectory_csv
from synclim.errors import ParameterError
from synclim.experiments import load_report_json
from synclim.plots import emit_plot
from synclim.stability import read_spectrum_csv, read_sweep_csv


def write_config(tmp_path, data, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def read_manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


def test_no_subcommand_prints_help(capsys):
    assert main([]) == 2
    assert "subcommand" in capsys.readouterr().out


def test_help_lists_consumed_keys(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["converge", "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "config keys consumed" in text
    assert "experiment.n_values" in text


def test_decay_check_help_shows_subcommand_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["decay-check", "--help"])
    assert "simulation.T=18.0" in capsys.readouterr().out


def test_simulate_constant_state_stays_put(tmp_path):
    out = str(tmp_path / "out")
    cfg = write_config(tmp_path, {
        "simulation": {"T": 0.5, "dt": 1e-3, "n": 8},
        "experiment": {"g": "constant:0.4", "h": "zero"},
        "output": {"dir": out},
    })
    assert main(["simulate", "-c", cfg]) == 0
    series = read_trajectory_csv(os.path.join(out, "trajectory.csv"))
    np.testing.assert_allclose(series.phases, 0.4, atol=1e-14)
    np.testing.assert_allclose(series.velocities, 0.0, atol=1e-14)
    manifest = read_manifest(out)
    assert manifest["subcommand"] == "simulate"
    assert manifest["seed"] == 2024
    assert manifest["artifacts"] == ["diagnostics.csv", "trajectory.csv", "trajectory.svg"]
    for name in manifest["artifacts"]:
        assert os.path.exists(os.path.join(out, name))
    assert manifest["config"]["simulation"]["n"] == 8
    assert manifest["config"]["output"]["dir"] == out


def test_unknown_keys_are_rejected(tmp_path):
    out = str(tmp_path / "out")
    bad_section = write_config(tmp_path, {"modle": {"alpha": 1.0}}, "a.yaml")
    assert main(["simulate", "-c", bad_section, f"output.dir={out}"]) == 2
    bad_key = write_config(tmp_path, {"model": {"alhpa": 1.0}}, "b.yaml")
    assert main(["simulate", "-c", bad_key, f"output.dir={out}"]) == 2
    assert main(["simulate", "model.bogus=1", f"output.dir={out}"]) == 2
    assert main(["simulate", "not-dotted=1", f"output.dir={out}"]) == 2


def test_config_error_exit_codes(tmp_path):
    out = str(tmp_path / "out")
    assert main(["simulate", "simulation.dt=-0.5", "simulation.T=0.1",
                 f"output.dir={out}"]) == 2
    assert main(["simulate", "model.nonlinearity=triangle", f"output.dir={out}"]) == 2
    assert main(["simulate", "output.formats=[pdf]", f"output.dir={out}"]) == 2
    assert run("does-not-exist", None, []) == 2
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["simulate", f"output.dir={blocker}/sub"]) == 2


def test_kind_mismatch_is_config_error(tmp_path):
    out = str(tmp_path / "out")
    cfg = write_config(tmp_path, {"experiment": {"kind": "sweep"}})
    assert main(["simulate", "-c", cfg, f"output.dir={out}"]) == 2


def test_numerical_failures_exit_3(tmp_path):
    out = str(tmp_path / "out")
    # too short a window for any decay fit
    assert main(["decay-check", "simulation.T=0.2", "simulation.dt=0.01",
                 "simulation.grid_ref=32", f"output.dir={out}"]) == 3
    # unbounded forcing blows the trajectory up
    assert main(["simulate", "model.forcing=1.0e+308", "simulation.T=0.1",
                 "simulation.n=4", f"output.dir={out}"]) == 3


def test_override_beats_config_file(tmp_path):
    out = str(tmp_path / "out")
    cfg = write_config(tmp_path, {"kernel": {"p": 0.2},
                                  "simulation": {"T": 0.1, "n": 4}})
    assert main(["simulate", "-c", cfg, "kernel.p=0.3", f"output.dir={out}",
                 "output.formats=[csv]"]) == 0
    assert read_manifest(out)["config"]["kernel"]["p"] == 0.3


def test_output_dir_env_fallback(tmp_path, monkeypatch):
    env_dir = str(tmp_path / "from-env")
    monkeypatch.setenv("SYNCLIM_OUTPUT_DIR", env_dir)
    assert main(["simulate", "simulation.T=0.1", "simulation.n=4",
                 "output.formats=[csv]"]) == 0
    assert os.path.exists(os.path.join(env_dir, "trajectory.csv"))


def test_spectrum_zero_coupling_is_marginal(tmp_path):
    out = str(tmp_path / "out")
    assert main(["spectrum", "model.coupling_gain=0.0", "experiment.m_max=12",
                 f"output.dir={out}"]) == 0
    spec = read_spectrum_csv(os.path.join(out, "spectrum.csv"))
    assert len(spec.modes) == 12
    for _, lp, lm in spec.modes:
        assert lp.real == 0.0 and lp.imag == 0.0
        assert lm.real == -1.0
    payload = load_report_json(os.path.join(out, "spectrum.json"))
    assert payload["abscissa"] == 0.0
    assert payload["kind"] == "spectrum"


def test_sweep_csv_is_monotone(tmp_path):
    out = str(tmp_path / "out")
    assert main(["sweep", f"output.dir={out}"]) == 0
    rows = read_sweep_csv(os.path.join(out, "sweep.csv"))
    assert [row["p"] for row in rows] == [0.2, 0.1, 0.05, 0.025]
    values = [row["abscissa"] for row in rows]
    assert all(a < b < 0.0 for a, b in zip(values, values[1:]))
    payload = load_report_json(os.path.join(out, "sweep.json"))
    assert payload["kind"] == "sweep" and len(payload["rows"]) == 4


def test_sweep_coupling_variant(tmp_path):
    out = str(tmp_path / "out")
    assert main(["sweep", "experiment.sweep_param=coupling",
                 "experiment.sweep_values=[1.0, 0.5, 0.25]",
                 f"output.dir={out}"]) == 0
    rows = read_sweep_csv(os.path.join(out, "sweep.csv"))
    assert [row["coupling"] for row in rows] == [1.0, 0.5, 0.25]
    values = [row["abscissa"] for row in rows]
    assert all(a < b < 0.0 for a, b in zip(values, values[1:]))


def test_decay_check_happy_path(tmp_path):
    out = str(tmp_path / "out")
    assert main(["decay-check", "simulation.grid_ref=64", "simulation.dt=0.005",
                 f"output.dir={out}"]) == 0
    payload = load_report_json(os.path.join(out, "decay.json"))
    assert payload["predicted_rate"] == pytest.approx(-0.5)
    assert payload["relative_error"] < 0.01
    assert read_manifest(out)["artifacts"] == ["decay.json"]


def test_converge_subcommand(tmp_path):
    out = str(tmp_path / "out")
    cfg = write_config(tmp_path, {
        "simulation": {"T": 0.2, "dt": 2e-3, "grid_ref": 32},
        "experiment": {"n_values": [4, 8]},
        "output": {"dir": out},
    })
    assert main(["converge", "-c", cfg]) == 0
    report = load_report_json(os.path.join(out, "convergence.json"))
    assert report["kind"] == "deterministic_convergence"
    assert report["n_values"] == [4, 8]
    for sup, env in zip(report["sup_errors"], report["envelope"]):
        assert sup <= env
    assert os.path.exists(os.path.join(out, "convergence.svg"))


def test_random_converge_outputs_are_byte_deterministic(tmp_path):
    args = ["simulation.T=0.2", "simulation.dt=2e-3", "simulation.grid_ref=32",
            "experiment.n_values=[4, 8]", "experiment.trials=2"]
    out1, out2 = str(tmp_path / "one"), str(tmp_path / "two")
    assert main(["random-converge", *args, f"output.dir={out1}"]) == 0
    assert main(["random-converge", *args, f"output.dir={out2}"]) == 0
    for name in ("random_convergence.csv", "random_convergence.json",
                 "random_convergence.svg"):
        with open(os.path.join(out1, name), "rb") as fh:
            first = fh.read()
        with open(os.path.join(out2, name), "rb") as fh:
            second = fh.read()
        assert first == second, name
    report = load_report_json(os.path.join(out1, "random_convergence.json"))
    assert report["trials"] == 2
    assert report["config"]["seed0"] == 2024


def test_averaged_gap_subcommand(tmp_path):
    out = str(tmp_path / "out")
    assert main(["averaged-gap", "simulation.T=0.2", "simulation.dt=2e-3",
                 "experiment.n_values=[4, 8]", "experiment.trials=2",
                 "output.formats=[csv, json]", f"output.dir={out}"]) == 0
    report = load_report_json(os.path.join(out, "averaged_gap.json"))
    assert report["kind"] == "averaged_vs_random"
    assert not os.path.exists(os.path.join(out, "averaged_gap.svg"))


def test_mu_scaling_subcommand(tmp_path):
    out = str(tmp_path / "out")
    assert main(["mu-scaling", "simulation.T=1.0", "experiment.n_values=[8, 16]",
                 "experiment.trials=3", f"output.dir={out}"]) == 0
    report = load_report_json(os.path.join(out, "mu_scaling.json"))
    assert report["kind"] == "mu_scaling"
    assert report["a_source"] == "ones"
    assert len(report["means"]) == 2


def test_constant_kernel_and_table_kernel(tmp_path):
    out = str(tmp_path / "out")
    assert main(["spectrum", "kernel.variant=constant", "kernel.value=0.4",
                 "experiment.m_max=4", f"output.dir={out}"]) == 0
    spec = read_spectrum_csv(os.path.join(out, "spectrum.csv"))
    # flat profiles couple only the zero mode: every listed mode feels -K*c
    for _, lp, lm in spec.modes:
        assert lp == pytest.approx(lp.real + lp.imag * 1j)
    table = tmp_path / "kernel.csv"
    table.write_text("0.5,0.25\n0.25,0.5\n")
    out2 = str(tmp_path / "out2")
    assert main(["spectrum", "kernel.variant=table",
                 f"kernel.table_path={table}", "experiment.m_max=4",
                 f"output.dir={out2}"]) == 2  # grid kernels have no Fourier modes
    assert main(["simulate", "kernel.variant=table", f"kernel.table_path={table}",
                 "simulation.T=0.1", "simulation.n=4", "output.formats=[csv]",
                 f"output.dir={out2}"]) == 0
    assert main(["simulate", "kernel.variant=table", "kernel.table_path=missing.csv",
                 f"output.dir={out2}"]) == 2


def test_emit_plot_validation(tmp_path):
    with pytest.raises(ParameterError):
        emit_plot([], "sweep", str(tmp_path / "x.svg"))
    with pytest.raises(ParameterError):
        emit_plot([{"p": 0.1}], "no-such-kind", str(tmp_path / "x.svg"))
