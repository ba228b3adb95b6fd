"""Command-line front end.

Config files are YAML with five sections (model, kernel, simulation,
experiment, output).  Unknown sections or keys are rejected.  Dotted
``section.key=value`` arguments override file values; values are parsed
as YAML scalars.  The default output directory comes from
``SYNCLIM_OUTPUT_DIR`` when set.  Every run writes a ``manifest.json``
naming the artifacts, the resolved configuration, the seed and the tool
version.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(divergence, contraction refusal, decay fit failure).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import yaml

from . import __version__
from .continuum import average_initial_data, parse_initial_data
from .core import (ModelParams, NonlinearitySpec, per_node_forcing,
                   uniform_forcing, zero_forcing)
from .dynamics import (FiniteSystem, OscillatorState, integrate,
                       write_diagnostics_csv, write_trajectory_csv)
from .errors import (ConfigError, ContractionError, ConvergenceFailure,
                     DecayFitError, DivergenceError, ParameterError)
from .experiments import (averaged_vs_random, deterministic_convergence,
                          mu_scaling_study, random_convergence,
                          write_report_json)
from .graphons import (SmallWorldParams, constant_kernel,
                       load_grid_kernel_csv, small_world_kernel,
                       spectral_difference)
from .graphs import averaged_graph
from .plots import emit_plot
from .stability import (measure_decay_rate, mode_eigenvalues, spectrum,
                        sweep_abscissa, write_spectrum_csv, write_sweep_csv)

SUBCOMMANDS = ("simulate", "converge", "random-converge", "averaged-gap",
               "mu-scaling", "spectrum", "sweep", "decay-check")

SCHEMA = {
    "model": ("alpha", "coupling_gain", "nonlinearity", "forcing"),
    "kernel": ("variant", "p", "r", "value", "table_path"),
    "simulation": ("T", "dt", "grid_ref", "n", "scaling"),
    "experiment": ("kind", "n_values", "trials", "seed", "m_max", "epsilon",
                   "g", "h", "workers", "a_source", "m",
                   "sweep_param", "sweep_values"),
    "output": ("dir", "formats"),
}

DEFAULTS = {
    "model.alpha": 1.0,
    "model.coupling_gain": 1.0,
    "model.nonlinearity": "sine2pi",
    "model.forcing": 0.0,
    "kernel.variant": "insertion",
    "kernel.p": 0.1,
    "kernel.r": 0.25,
    "kernel.value": 0.5,
    "simulation.T": 2.0,
    "simulation.dt": 1e-3,
    "simulation.grid_ref": 1024,
    "simulation.n": 128,
    "simulation.scaling": "one_over_n",
    "experiment.n_values": [32, 64, 128, 256],
    "experiment.trials": 50,
    "experiment.seed": 2024,
    "experiment.m_max": 64,
    "experiment.epsilon": 1e-4,
    "experiment.g": "sin_1",
    "experiment.h": "zero",
    "experiment.workers": 1,
    "experiment.a_source": "ones",
    "experiment.m": 1,
    "experiment.sweep_param": "p_equals_r",
    "experiment.sweep_values": [0.2, 0.1, 0.05, 0.025],
    "output.formats": ["csv", "json", "svg"],
}

# decay-check measures a slow envelope; it needs a longer window and a
# finer grid than the convergence experiments, so it carries its own
# fallbacks for keys the config leaves unset.
SUBCOMMAND_DEFAULTS = {
    "decay-check": {"simulation.T": 18.0, "simulation.dt": 2e-3,
                    "simulation.grid_ref": 512},
}

# keys each subcommand consults, for --help
CONSUMED = {
    "simulate": ("model.*", "kernel.*", "simulation.T", "simulation.dt",
                 "simulation.n", "simulation.scaling", "experiment.g",
                 "experiment.h", "output.*"),
    "converge": ("model.*", "kernel.*", "simulation.T", "simulation.dt",
                 "simulation.grid_ref", "experiment.n_values", "experiment.g",
                 "experiment.h", "output.*"),
    "random-converge": ("model.*", "kernel.*", "simulation.T", "simulation.dt",
                        "simulation.grid_ref", "experiment.n_values",
                        "experiment.trials", "experiment.seed",
                        "experiment.workers", "experiment.g", "experiment.h",
                        "output.*"),
    "averaged-gap": ("model.*", "kernel.*", "simulation.T", "simulation.dt",
                     "experiment.n_values", "experiment.trials",
                     "experiment.seed", "experiment.workers", "experiment.g",
                     "experiment.h", "output.*"),
    "mu-scaling": ("model.* (a_source=coupling only)", "kernel.*",
                   "simulation.T", "simulation.dt", "experiment.n_values",
                   "experiment.trials", "experiment.seed",
                   "experiment.a_source", "experiment.g", "experiment.h",
                   "output.*"),
    "spectrum": ("model.alpha", "model.coupling_gain", "kernel.*",
                 "experiment.m_max", "output.*"),
    "sweep": ("model.alpha", "model.coupling_gain", "kernel.*",
              "experiment.m_max", "experiment.sweep_param",
              "experiment.sweep_values", "output.*"),
    "decay-check": ("model.alpha", "model.coupling_gain", "kernel.*",
                    "simulation.T", "simulation.dt", "simulation.grid_ref",
                    "experiment.m", "experiment.epsilon", "output.*"),
}

_MISSING = object()


class RunConfig:
    """Validated config mapping with default resolution.

    Every ``get`` records the value it returned, so the manifest can
    report the configuration that was actually in effect.
    """

    def __init__(self, data: dict, subcommand: str):
        self.data = data
        self.subcommand = subcommand
        self.resolved: dict = {}

    def get(self, path: str, default=_MISSING):
        section, key = path.split(".", 1)
        value = self.data.get(section, {}).get(key, _MISSING)
        if value is _MISSING:
            value = SUBCOMMAND_DEFAULTS.get(self.subcommand, {}).get(path, _MISSING)
        if value is _MISSING:
            value = DEFAULTS.get(path, default)
        if value is _MISSING:
            raise ConfigError(f"missing required config key {path}")
        self.resolved.setdefault(section, {})[key] = value
        return value

    def get_float(self, path, default=_MISSING) -> float:
        value = self.get(path, default)
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path} must be a number, got {value!r}") from None

    def get_int(self, path, default=_MISSING) -> int:
        value = self.get(path, default)
        if isinstance(value, bool) or int(value) != value:
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return int(value)

    def get_str(self, path, choices=None, default=_MISSING) -> str:
        value = self.get(path, default)
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string, got {value!r}")
        if choices is not None and value not in choices:
            raise ConfigError(f"{path} must be one of {choices}, got {value!r}")
        return value

    def get_int_list(self, path) -> list:
        value = self.get(path)
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigError(f"{path} must be a non-empty list")
        try:
            return [int(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(f"{path} must hold integers") from None

    def get_float_list(self, path) -> list:
        value = self.get(path)
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigError(f"{path} must be a non-empty list")
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(f"{path} must hold numbers") from None


def _validate_tree(data: dict):
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping of sections")
    for section, body in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if body is None:
            data[section] = {}
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")


def _apply_override(data: dict, text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    path, raw = text.split("=", 1)
    if "." not in path:
        raise ConfigError(f"override key {path!r} is not dotted (section.key)")
    section, key = path.split(".", 1)
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigError(f"unknown config key {path}")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from None
    data.setdefault(section, {})[key] = value


def load_config(config_path, overrides, subcommand: str) -> RunConfig:
    data: dict = {}
    if config_path is not None:
        try:
            with open(config_path) as fh:
                loaded = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {config_path}: {exc}") from None
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ConfigError("config root must be a mapping of sections")
            data = loaded
    for text in overrides:
        _apply_override(data, text)
    _validate_tree(data)
    cfg = RunConfig(data, subcommand)
    kind = cfg.data.get("experiment", {}).get("kind")
    if kind is not None and kind != subcommand:
        raise ConfigError(f"experiment.kind {kind!r} contradicts subcommand {subcommand!r}")
    return cfg


def _build_params(cfg: RunConfig) -> ModelParams:
    alpha = cfg.get_float("model.alpha")
    gain = cfg.get_float("model.coupling_gain")
    kind = cfg.get_str("model.nonlinearity", choices=("sine", "sine2pi"))
    forcing_value = cfg.get("model.forcing")
    if isinstance(forcing_value, (list, tuple)):
        forcing = per_node_forcing(np.asarray(forcing_value, dtype=float))
    elif isinstance(forcing_value, (int, float)) and not isinstance(forcing_value, bool):
        forcing = uniform_forcing(float(forcing_value)) if forcing_value else zero_forcing()
    else:
        raise ConfigError(f"model.forcing must be a number or list, got {forcing_value!r}")
    return ModelParams(alpha=alpha, nonlinearity=NonlinearitySpec(kind, gain=gain),
                       forcing=forcing)


def _build_kernel(cfg: RunConfig):
    variant = cfg.get_str("kernel.variant",
                          choices=("insertion", "rewire", "constant", "table"))
    if variant in ("insertion", "rewire"):
        p = cfg.get_float("kernel.p")
        r = cfg.get_float("kernel.r")
        return small_world_kernel(SmallWorldParams(p=p, r=r, variant=variant))
    if variant == "constant":
        return constant_kernel(cfg.get_float("kernel.value"))
    path = cfg.get_str("kernel.table_path")
    if not os.path.exists(path):
        raise ConfigError(f"kernel.table_path {path!r} does not exist")
    return load_grid_kernel_csv(path)


def _prepare_output(cfg: RunConfig):
    out_dir = cfg.get("output.dir", os.environ.get("SYNCLIM_OUTPUT_DIR", "synclim-out"))
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError(f"output.dir must be a non-empty string, got {out_dir!r}")
    cfg.resolved.setdefault("output", {})["dir"] = out_dir
    formats = cfg.get("output.formats")
    if not isinstance(formats, (list, tuple)) or not formats:
        raise ConfigError("output.formats must be a non-empty list")
    bad = [f for f in formats if f not in ("csv", "json", "svg")]
    if bad:
        raise ConfigError(f"unsupported output formats {bad}")
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".write-probe")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise ConfigError(f"output dir {out_dir!r} is not writable: {exc}") from None
    return out_dir, set(formats)


def _cmd_simulate(cfg: RunConfig, out_dir, formats):
    params = _build_params(cfg)
    kernel = _build_kernel(cfg)
    n = cfg.get_int("simulation.n")
    scaling = cfg.get_str("simulation.scaling", choices=("one_over_n", "none"))
    system = FiniteSystem(averaged_graph(kernel, n), params, scaling=scaling)
    init = OscillatorState(average_initial_data(cfg.get("experiment.g"), n),
                           average_initial_data(cfg.get("experiment.h"), n))
    series = integrate(system, init, cfg.get_float("simulation.T"),
                       cfg.get_float("simulation.dt"))
    artifacts = []
    if "csv" in formats:
        write_trajectory_csv(series, os.path.join(out_dir, "trajectory.csv"))
        write_diagnostics_csv(series, os.path.join(out_dir, "diagnostics.csv"))
        artifacts += ["trajectory.csv", "diagnostics.csv"]
    if "svg" in formats:
        emit_plot(series, "trajectory", os.path.join(out_dir, "trajectory.svg"))
        artifacts.append("trajectory.svg")
    return artifacts


def _convergence_args(cfg: RunConfig):
    return (_build_kernel(cfg), _build_params(cfg),
            parse_initial_data(cfg.get("experiment.g")),
            parse_initial_data(cfg.get("experiment.h")),
            cfg.get_float("simulation.T"))


def _emit_report(report, stem, out_dir, formats):
    artifacts = []
    if "csv" in formats:
        report.write_csv(os.path.join(out_dir, stem + ".csv"))
        artifacts.append(stem + ".csv")
    if "json" in formats:
        write_report_json(report, os.path.join(out_dir, stem + ".json"))
        artifacts.append(stem + ".json")
    if "svg" in formats:
        emit_plot(report, "convergence_loglog", os.path.join(out_dir, stem + ".svg"))
        artifacts.append(stem + ".svg")
    return artifacts


def _cmd_converge(cfg: RunConfig, out_dir, formats):
    kernel, params, g, h, t_end = _convergence_args(cfg)
    report = deterministic_convergence(
        kernel, params, g, h, t_end, cfg.get_int_list("experiment.n_values"),
        grid_ref=cfg.get_int("simulation.grid_ref"),
        dt=cfg.get_float("simulation.dt"))
    return _emit_report(report, "convergence", out_dir, formats)


def _cmd_random_converge(cfg: RunConfig, out_dir, formats):
    kernel, params, g, h, t_end = _convergence_args(cfg)
    report = random_convergence(
        kernel, params, g, h, t_end, cfg.get_int_list("experiment.n_values"),
        cfg.get_int("experiment.trials"), cfg.get_int("experiment.seed"),
        grid_ref=cfg.get_int("simulation.grid_ref"),
        dt=cfg.get_float("simulation.dt"),
        workers=cfg.get_int("experiment.workers"))
    return _emit_report(report, "random_convergence", out_dir, formats)


def _cmd_averaged_gap(cfg: RunConfig, out_dir, formats):
    kernel, params, g, h, t_end = _convergence_args(cfg)
    report = averaged_vs_random(
        kernel, params, g, h, t_end, cfg.get_int_list("experiment.n_values"),
        cfg.get_int("experiment.trials"), cfg.get_int("experiment.seed"),
        dt=cfg.get_float("simulation.dt"),
        workers=cfg.get_int("experiment.workers"))
    return _emit_report(report, "averaged_gap", out_dir, formats)


def _cmd_mu_scaling(cfg: RunConfig, out_dir, formats):
    kernel = _build_kernel(cfg)
    a_source = cfg.get_str("experiment.a_source", choices=("ones", "coupling"))
    params = _build_params(cfg) if a_source == "coupling" else None
    report = mu_scaling_study(
        kernel, cfg.get_float("simulation.T"),
        cfg.get_int_list("experiment.n_values"),
        cfg.get_int("experiment.trials"), cfg.get_int("experiment.seed"),
        a_source=a_source, params=params,
        g=cfg.get("experiment.g"), h=cfg.get("experiment.h"),
        dt=cfg.get_float("simulation.dt"))
    return _emit_report(report, "mu_scaling", out_dir, formats)


def _cmd_spectrum(cfg: RunConfig, out_dir, formats):
    # coupling_gain is used directly as the linearized coupling
    # coefficient of the mode ODE (no 2*pi factor is applied here).
    spec = spectrum(_build_kernel(cfg), cfg.get_float("model.alpha"),
                    cfg.get_float("model.coupling_gain"),
                    m_max=cfg.get_int("experiment.m_max"))
    artifacts = []
    if "csv" in formats:
        write_spectrum_csv(spec, os.path.join(out_dir, "spectrum.csv"))
        artifacts.append("spectrum.csv")
    if "json" in formats:
        abscissa, argmax_m = spec.abscissa()
        payload = {"kind": "spectrum", "alpha": spec.alpha,
                   "coupling": spec.coupling, "abscissa": abscissa,
                   "argmax_m": argmax_m,
                   "modes": [[m, lp.real, lp.imag, lm.real, lm.imag]
                             for m, lp, lm in spec.modes]}
        write_report_json(payload, os.path.join(out_dir, "spectrum.json"))
        artifacts.append("spectrum.json")
    if "svg" in formats:
        emit_plot(spec, "spectrum", os.path.join(out_dir, "spectrum.svg"))
        artifacts.append("spectrum.svg")
    return artifacts


def _cmd_sweep(cfg: RunConfig, out_dir, formats):
    alpha = cfg.get_float("model.alpha")
    coupling = cfg.get_float("model.coupling_gain")
    param = cfg.get_str("experiment.sweep_param", choices=("p_equals_r", "coupling"))
    values = cfg.get_float_list("experiment.sweep_values")
    variant = cfg.get_str("kernel.variant",
                          choices=("insertion", "rewire", "constant", "table"))
    entries = []
    if param == "p_equals_r":
        if variant not in ("insertion", "rewire"):
            raise ConfigError("sweep_param=p_equals_r needs a small-world kernel variant")
        for v in values:
            kern = small_world_kernel(SmallWorldParams(p=v, r=v, variant=variant))
            entries.append((kern, v, v, alpha, coupling))
    else:
        kernel = _build_kernel(cfg)
        p = cfg.get_float("kernel.p") if variant in ("insertion", "rewire") else float("nan")
        r = cfg.get_float("kernel.r") if variant in ("insertion", "rewire") else float("nan")
        entries = [(kernel, p, r, alpha, v) for v in values]
    rows = sweep_abscissa(entries, m_max=cfg.get_int("experiment.m_max"))
    artifacts = []
    if "csv" in formats:
        write_sweep_csv(rows, os.path.join(out_dir, "sweep.csv"))
        artifacts.append("sweep.csv")
    if "json" in formats:
        write_report_json({"kind": "sweep", "rows": rows},
                          os.path.join(out_dir, "sweep.json"))
        artifacts.append("sweep.json")
    if "svg" in formats:
        emit_plot(rows, "sweep", os.path.join(out_dir, "sweep.svg"))
        artifacts.append("sweep.svg")
    return artifacts


def _cmd_decay_check(cfg: RunConfig, out_dir, formats):
    # the measurement always drives the 2*pi-periodic sine coupling, so
    # the predicted rate uses coefficient 2*pi*gain
    kernel = _build_kernel(cfg)
    alpha = cfg.get_float("model.alpha")
    gain = cfg.get_float("model.coupling_gain")
    m = cfg.get_int("experiment.m")
    epsilon = cfg.get_float("experiment.epsilon")
    t_end = cfg.get_float("simulation.T")
    dt = cfg.get_float("simulation.dt")
    grid_n = cfg.get_int("simulation.grid_ref")
    measured = measure_decay_rate(kernel, alpha, gain, m, epsilon=epsilon,
                                  t_end=t_end, dt=dt, grid_n=grid_n)
    coupling = NonlinearitySpec("sine2pi", gain=gain).slope_at_zero()
    lam_p, _ = mode_eigenvalues(alpha, coupling, spectral_difference(kernel, m))
    predicted = lam_p.real
    payload = {"kind": "decay_check", "alpha": alpha, "gain": gain, "m": m,
               "epsilon": epsilon, "t_end": t_end, "dt": dt, "grid_n": grid_n,
               "measured_rate": measured, "predicted_rate": predicted,
               "relative_error": abs(measured - predicted) / abs(predicted)}
    artifacts = []
    if "json" in formats:
        write_report_json(payload, os.path.join(out_dir, "decay.json"))
        artifacts.append("decay.json")
    else:
        print(json.dumps(payload, sort_keys=True))
    return artifacts


_HANDLERS = {
    "simulate": _cmd_simulate,
    "converge": _cmd_converge,
    "random-converge": _cmd_random_converge,
    "averaged-gap": _cmd_averaged_gap,
    "mu-scaling": _cmd_mu_scaling,
    "spectrum": _cmd_spectrum,
    "sweep": _cmd_sweep,
    "decay-check": _cmd_decay_check,
}

_HELP = {
    "simulate": "integrate the deterministic n-node system and dump the trajectory",
    "converge": "finite-vs-continuum error table over deterministic weighted graphs",
    "random-converge": "trial-resolved finite-vs-continuum errors on sampled graphs",
    "averaged-gap": "distance between sampled-graph and averaged-graph trajectories",
    "mu-scaling": "mean-square sampling-noise decay in the number of nodes",
    "spectrum": "per-mode linear stability eigenvalues of the flat state",
    "sweep": "spectral abscissa across kernel or coupling families",
    "decay-check": "compare a measured mode decay rate with the predicted eigenvalue",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synclim",
        description="Oscillator networks on graphs and their graphon limits.")
    parser.add_argument("--version", action="version", version=f"synclim {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    for name in SUBCOMMANDS:
        keys = "\n".join("  " + k for k in CONSUMED[name])
        extra = SUBCOMMAND_DEFAULTS.get(name, {})
        lines = [f"config keys consumed:\n{keys}"]
        if extra:
            lines.append("subcommand defaults: " +
                         ", ".join(f"{k}={v}" for k, v in sorted(extra.items())))
        p = sub.add_parser(name, help=_HELP[name],
                           description=_HELP[name],
                           epilog="\n".join(lines),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("-c", "--config", default=None,
                       help="YAML config file (defaults apply when omitted)")
        p.add_argument("overrides", nargs="*", metavar="section.key=value",
                       help="dotted overrides, applied after the file")
    return parser


def run(subcommand: str, config_path, overrides) -> int:
    """Execute one subcommand; returns the process exit code."""
    try:
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        cfg = load_config(config_path, overrides, subcommand)
        out_dir, formats = _prepare_output(cfg)
        artifacts = _HANDLERS[subcommand](cfg, out_dir, formats)
    except (ConfigError, ParameterError) as exc:
        print(f"synclim: config error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, ContractionError, ConvergenceFailure, DecayFitError) as exc:
        print(f"synclim: numerical failure: {exc}", file=sys.stderr)
        return 3
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "seed": cfg.resolved.get("experiment", {}).get("seed",
                                                       DEFAULTS["experiment.seed"]),
        "config": cfg.resolved,
        "artifacts": sorted(artifacts),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name in sorted(artifacts):
        print(os.path.join(out_dir, name))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_help()
        return 2
    return run(args.subcommand, args.config, args.overrides)


if __name__ == "__main__":
    sys.exit(main())
