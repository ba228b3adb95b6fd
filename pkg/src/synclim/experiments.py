"""Discrete-to-continuum convergence experiments and error envelopes.

Three campaign styles: deterministic graphon discretizations against a
fine-grid continuum reference, Bernoulli-sampled random graphs against
the same reference (with the error split into its averaged and
stochastic parts), and the direct random-vs-averaged gap in the
normalized discrete norm ||v||_2 = sqrt(mean(v_k^2)).  The mu-scaling
study estimates the Monte Carlo mean of int_0^T ||mu(t)||_2^2 dt, the
quantity whose 1/N decay drives the stochastic convergence proof.

Every report embeds its resolved configuration and seeds and serializes
deterministically (sorted keys, fixed float formatting, runtimes kept
only in memory), so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import piecewise
from .continuum import (ContinuumProblem, average_initial_data, initial_data_error,
                        parse_initial_data, solve_continuum)
from .core import ModelParams
from .dynamics import FiniteSystem, OscillatorState, integrate
from .errors import DivergenceError, ParameterError
from .graphs import (averaged_graph, graph_from_graphon, l2_kernel_distance,
                     sample_k_random_graph, sampled_deviation_matrix, step_kernel)


def _kernel_meta(kernel):
    describe = getattr(kernel, "describe", None)
    return describe() if describe else {"type": type(kernel).__name__}


def _trial_seeds(seed0: int, trials: int):
    state = np.random.SeedSequence(seed0).generate_state(trials, dtype=np.uint32)
    return [int(s) for s in state]


def gronwall_envelope(params: ModelParams, kernel_sup: float, data_errors,
                      kernel_errors, t_end: float):
    """Proven error bound per N.

    envelope^2 = (dg^2 + dh^2 + C * dk^2) * exp(C2 * T) with C the range
    bound of D and C2 = 2 L_D ||K||_inf + L_f + 1 + 2|alpha| + C.
    """
    c = params.nonlinearity.sup_bound()
    c2 = 2.0 * params.lip_d * kernel_sup + params.lip_f + 1.0 + 2.0 * abs(params.alpha) + c
    growth = math.exp(c2 * t_end)
    return [math.sqrt((dg**2 + dh**2 + c * dk**2) * growth)
            for (dg, dh), dk in zip(data_errors, kernel_errors)]


@dataclass(eq=False)
class ConvergenceReport:
    n_values: list
    sup_errors: list
    kernel_errors: list
    data_errors: list  # (dg, dh) per N
    envelope: list
    config: dict
    runtimes: list = field(default_factory=list)  # in-memory only

    def to_dict(self) -> dict:
        return {
            "kind": "deterministic_convergence",
            "n_values": self.n_values,
            "sup_errors": self.sup_errors,
            "kernel_errors": self.kernel_errors,
            "data_errors": [list(pair) for pair in self.data_errors],
            "envelope": self.envelope,
            "config": self.config,
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "sup_error", "envelope", "kernel_l2", "data_l2_g", "data_l2_h"])
            for n, e, env, dk, (dg, dh) in zip(self.n_values, self.sup_errors,
                                               self.envelope, self.kernel_errors, self.data_errors):
                writer.writerow([n] + [format(v, ".17g") for v in (e, env, dk, dg, dh)])


@dataclass(eq=False)
class ProbabilisticReport:
    kind: str
    n_values: list
    trials: int
    seeds: list
    errors: dict  # n -> per-trial error list (nan where a trial diverged)
    medians: list
    q90s: list
    config: dict
    averaged_errors: list = None    # n -> averaged-vs-reference component
    random_components: dict = None  # n -> per-trial random-vs-averaged part
    failures: list = field(default_factory=list)
    runtime: float = 0.0  # in-memory only

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "n_values": self.n_values,
            "trials": self.trials,
            "seeds": self.seeds,
            "errors": {str(n): list(v) for n, v in sorted(self.errors.items())},
            "medians": self.medians,
            "q90s": self.q90s,
            "failures": self.failures,
            "config": self.config,
        }
        if self.averaged_errors is not None:
            d["averaged_errors"] = self.averaged_errors
        if self.random_components is not None:
            d["random_components"] = {str(n): list(v) for n, v in sorted(self.random_components.items())}
        return d

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.averaged_errors is not None:
                writer.writerow(["n", "median", "q90", "averaged_component"])
                for n, med, q, a in zip(self.n_values, self.medians, self.q90s, self.averaged_errors):
                    writer.writerow([n] + [format(v, ".17g") for v in (med, q, a)])
            else:
                writer.writerow(["n", "median", "q90"])
                for n, med, q in zip(self.n_values, self.medians, self.q90s):
                    writer.writerow([n] + [format(v, ".17g") for v in (med, q)])


@dataclass(eq=False)
class MuScalingReport:
    n_values: list
    trials: int
    seeds: list
    a_source: str
    values: dict  # n -> per-trial integral values
    means: list
    stderrs: list
    slope: float
    config: dict
    runtime: float = 0.0  # in-memory only

    def to_dict(self) -> dict:
        return {
            "kind": "mu_scaling",
            "n_values": self.n_values,
            "trials": self.trials,
            "seeds": self.seeds,
            "a_source": self.a_source,
            "values": {str(n): list(v) for n, v in sorted(self.values.items())},
            "means": self.means,
            "stderrs": self.stderrs,
            "slope": self.slope,
            "config": self.config,
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "mean", "stderr"])
            for n, mean, se in zip(self.n_values, self.means, self.stderrs):
                writer.writerow([n, format(mean, ".17g"), format(se, ".17g")])


def write_report_json(report, path):
    """Serialize a report object (or a plain dict payload) to JSON."""
    payload = report if isinstance(report, dict) else report.to_dict()
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_report_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _finite_run(kernel, params: ModelParams, g, h, t_end: float, dt: float, n: int,
                graph=None):
    graph = graph_from_graphon(kernel, n) if graph is None else graph
    init = OscillatorState(average_initial_data(g, n), average_initial_data(h, n))
    return integrate(FiniteSystem(graph, params, scaling="one_over_n"), init, t_end, dt)


def deterministic_convergence(kernel, params: ModelParams, g, h, t_end: float,
                              n_values, grid_ref: int = 1024, dt: float = 1e-3) -> ConvergenceReport:
    """Sup-in-time L2(I) discrepancy per N against a fine-grid reference,
    with the matching kernel distances, data errors and proven envelope."""
    n_values = sorted(int(n) for n in n_values)
    if grid_ref < 4 * max(n_values):
        raise ParameterError("grid_ref must be at least 4x the largest compared N")
    g, h = parse_initial_data(g), parse_initial_data(h)
    problem = ContinuumProblem(kernel, params, g, h, grid_n=grid_ref)
    reference = solve_continuum(problem, t_end, dt)
    reference.meta["role"] = "continuum_reference"

    sup_errors, kernel_errors, data_errors, runtimes = [], [], [], []
    for n in n_values:
        tic = time.perf_counter()
        graph = graph_from_graphon(kernel, n)
        series = _finite_run(kernel, params, g, h, t_end, dt, n, graph=graph)
        dists = piecewise.series_l2_distance(series.phases, reference.phases)
        sup_errors.append(float(np.max(dists)))
        kernel_errors.append(l2_kernel_distance(step_kernel(graph), kernel))
        data_errors.append((initial_data_error(g, n), initial_data_error(h, n)))
        runtimes.append(time.perf_counter() - tic)

    envelope = gronwall_envelope(params, kernel.sup_norm, data_errors, kernel_errors, t_end)
    config = {
        "kernel": _kernel_meta(kernel), "params": params.describe(),
        "g": g.describe(), "h": h.describe(),
        "t_end": t_end, "dt": dt, "grid_ref": grid_ref, "n_values": n_values,
    }
    return ConvergenceReport(n_values, sup_errors, kernel_errors, data_errors,
                             envelope, config, runtimes)


# worker-process globals for the probabilistic campaigns
_WORKER = {}


def _init_random_worker(kernel, params, g, h, t_end, dt, ref_phases, averaged_phases):
    _WORKER.update(kernel=kernel, params=params, g=g, h=h, t_end=t_end, dt=dt,
                   ref_phases=ref_phases, averaged_phases=averaged_phases)


def _random_trial(task):
    n, seed = task
    w = _WORKER
    try:
        graph = sample_k_random_graph(w["kernel"], n, seed)
        series = _finite_run(w["kernel"], w["params"], w["g"], w["h"], w["t_end"], w["dt"], n,
                             graph=graph)
    except DivergenceError:
        return n, seed, float("nan"), float("nan")
    total = float(np.max(piecewise.series_l2_distance(series.phases, w["ref_phases"])))
    vs_avg = float(np.max(piecewise.series_l2_distance(series.phases, w["averaged_phases"][n])))
    return n, seed, total, vs_avg


def _run_tasks(tasks, worker_fn, initializer, init_args, workers: int):
    if workers <= 1:
        initializer(*init_args)
        return [worker_fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers, initializer=initializer,
                             initargs=init_args) as pool:
        return list(pool.map(worker_fn, tasks, chunksize=4))


def random_convergence(kernel, params: ModelParams, g, h, t_end: float, n_values,
                       trials: int, seed0: int, grid_ref: int = 1024, dt: float = 1e-3,
                       workers: int = 1) -> ProbabilisticReport:
    """Monte Carlo of sampled-graph runs against the continuum reference.

    Also splits each trial's error into the deterministic averaged part
    and the stochastic random-vs-averaged part (triangle inequality
    decomposition of the convergence proof).
    """
    n_values = sorted(int(n) for n in n_values)
    if grid_ref < 4 * max(n_values):
        raise ParameterError("grid_ref must be at least 4x the largest compared N")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    g, h = parse_initial_data(g), parse_initial_data(h)
    tic = time.perf_counter()
    reference = solve_continuum(ContinuumProblem(kernel, params, g, h, grid_n=grid_ref), t_end, dt)

    averaged_phases, averaged_errors = {}, []
    for n in n_values:
        series = _finite_run(kernel, params, g, h, t_end, dt, n, graph=averaged_graph(kernel, n))
        averaged_phases[n] = series.phases
        averaged_errors.append(float(np.max(piecewise.series_l2_distance(series.phases, reference.phases))))

    seeds = _trial_seeds(seed0, trials)
    tasks = [(n, seed) for n in n_values for seed in seeds]
    init_args = (kernel, params, g, h, t_end, dt, reference.phases, averaged_phases)
    results = sorted(_run_tasks(tasks, _random_trial, _init_random_worker, init_args, workers))

    errors = {n: [] for n in n_values}
    random_components = {n: [] for n in n_values}
    failures = []
    for n, seed, total, vs_avg in results:
        errors[n].append(total)
        random_components[n].append(vs_avg)
        if math.isnan(total):
            failures.append([n, seed])

    medians = [float(np.median([e for e in errors[n] if not math.isnan(e)])) for n in n_values]
    q90s = [float(np.quantile([e for e in errors[n] if not math.isnan(e)], 0.9)) for n in n_values]
    config = {
        "kernel": _kernel_meta(kernel), "params": params.describe(),
        "g": g.describe(), "h": h.describe(),
        "t_end": t_end, "dt": dt, "grid_ref": grid_ref, "n_values": n_values,
        "trials": trials, "seed0": seed0,
    }
    return ProbabilisticReport("random_convergence", n_values, trials, seeds, errors,
                               medians, q90s, config, averaged_errors=averaged_errors,
                               random_components=random_components, failures=failures,
                               runtime=time.perf_counter() - tic)


def _init_gap_worker(kernel, params, g, h, t_end, dt, averaged_phases):
    _WORKER.update(kernel=kernel, params=params, g=g, h=h, t_end=t_end, dt=dt,
                   averaged_phases=averaged_phases)


def _gap_trial(task):
    n, seed = task
    w = _WORKER
    try:
        graph = sample_k_random_graph(w["kernel"], n, seed)
        series = _finite_run(w["kernel"], w["params"], w["g"], w["h"], w["t_end"], w["dt"], n,
                             graph=graph)
    except DivergenceError:
        return n, seed, float("nan")
    # equal grids: the normalized discrete norm is the step-function L2 norm
    gap = float(np.max(piecewise.series_l2_distance(series.phases, w["averaged_phases"][n])))
    return n, seed, gap


def averaged_vs_random(kernel, params: ModelParams, g, h, t_end: float, n_values,
                       trials: int, seed0: int, dt: float = 1e-3,
                       workers: int = 1) -> ProbabilisticReport:
    """Sup-in-time discrete-norm gap between sampled and averaged runs."""
    n_values = sorted(int(n) for n in n_values)
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    g, h = parse_initial_data(g), parse_initial_data(h)
    tic = time.perf_counter()
    averaged_phases = {}
    for n in n_values:
        series = _finite_run(kernel, params, g, h, t_end, dt, n, graph=averaged_graph(kernel, n))
        averaged_phases[n] = series.phases

    seeds = _trial_seeds(seed0, trials)
    tasks = [(n, seed) for n in n_values for seed in seeds]
    init_args = (kernel, params, g, h, t_end, dt, averaged_phases)
    results = sorted(_run_tasks(tasks, _gap_trial, _init_gap_worker, init_args, workers))

    errors = {n: [] for n in n_values}
    failures = []
    for n, seed, gap in results:
        errors[n].append(gap)
        if math.isnan(gap):
            failures.append([n, seed])
    medians = [float(np.median([e for e in errors[n] if not math.isnan(e)])) for n in n_values]
    q90s = [float(np.quantile([e for e in errors[n] if not math.isnan(e)], 0.9)) for n in n_values]
    config = {
        "kernel": _kernel_meta(kernel), "params": params.describe(),
        "g": g.describe(), "h": h.describe(),
        "t_end": t_end, "dt": dt, "n_values": n_values, "trials": trials, "seed0": seed0,
    }
    return ProbabilisticReport("averaged_vs_random", n_values, trials, seeds, errors,
                               medians, q90s, config, failures=failures,
                               runtime=time.perf_counter() - tic)


def mu_scaling_study(kernel, t_end: float, n_values, trials: int, seed0: int,
                     a_source: str = "ones", params: ModelParams = None, g=0.0, h=0.0,
                     dt: float = 1e-3) -> MuScalingReport:
    """Monte Carlo mean of int_0^T ||mu(t)||_2^2 dt per N.

    mu_k(t) = (1/N) sum_l a_kl(t) (Kbar_kl - K_kl(omega)), the deviation
    field of the stochastic convergence lemma; the Bernoulli deviations
    include the diagonal pair (k, k), matching the lemma's probability
    space, so with a == 1 and a constant kernel q the exact mean is
    T q(1-q)/N.

    a_source "ones" freezes a == 1 (the integrand is then constant in
    time); "coupling" evaluates a_kl(t) = D(phi_l - phi_k) along the
    averaged trajectory, which needs params (and optionally g, h).
    """
    if a_source not in ("ones", "coupling"):
        raise ParameterError(f"unknown a_source {a_source!r}")
    if a_source == "coupling" and params is None:
        raise ParameterError("a_source='coupling' needs model params")
    n_values = sorted(int(n) for n in n_values)
    seeds = _trial_seeds(seed0, trials)
    tic = time.perf_counter()

    values = {}
    for n in n_values:
        if a_source == "coupling":
            series = _finite_run(kernel, params, g, h, t_end, dt, n,
                                 graph=averaged_graph(kernel, n))
            nl = params.nonlinearity
            if nl.kind in ("sine", "sine2pi"):
                theta = series.phases if nl.kind == "sine" else 2.0 * np.pi * series.phases
                sin_t, cos_t = np.sin(theta), np.cos(theta)
        per_trial = []
        for seed in seeds:
            dev = sampled_deviation_matrix(kernel, n, seed)
            if a_source == "ones":
                mu = dev.mean(axis=1)
                per_trial.append(t_end * float(np.mean(mu**2)))
                continue
            if nl.kind in ("sine", "sine2pi"):
                # mu(t)_k = (gain/n) [cos_k (dev @ sin)_k - sin_k (dev @ cos)_k]
                mu_t = (nl.gain / n) * (cos_t * (sin_t @ dev.T) - sin_t * (cos_t @ dev.T))
            else:
                mu_t = np.stack([(nl(row[None, :] - row[:, None]) * dev).mean(axis=1)
                                 for row in series.phases])
            norms = np.mean(mu_t**2, axis=1)
            per_trial.append(float(np.trapezoid(norms, series.times)))
        values[n] = per_trial

    means = [float(np.mean(values[n])) for n in n_values]
    stderrs = [float(np.std(values[n], ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
               for n in n_values]
    slope = float(np.polyfit(np.log(n_values), np.log(means), 1)[0]) if len(n_values) > 1 else float("nan")
    config = {
        "kernel": _kernel_meta(kernel), "a_source": a_source,
        "t_end": t_end, "dt": dt, "n_values": n_values, "trials": trials, "seed0": seed0,
    }
    if params is not None:
        config["params"] = params.describe()
    return MuScalingReport(n_values, trials, seeds, a_source, values, means, stderrs,
                           slope, config, runtime=time.perf_counter() - tic)
