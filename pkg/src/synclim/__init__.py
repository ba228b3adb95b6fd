"""Second-order oscillator networks on graphs and their graphon limits.

The package simulates damped, forced phase oscillators coupled through
weighted or sampled graphs, solves the continuum integral-equation limit
on a mesh, verifies the finite-to-continuum convergence bounds
empirically, and evaluates the linear stability of flat states through
per-mode eigenvalues of difference kernels.
"""

__version__ = "0.1.0"

from .continuum import (ContinuumProblem, InitialData, average_initial_data,
                        constant_data, contraction_constant, gaussian_bump_data,
                        initial_data_error, linear_data, load_tabulated_data,
                        nystrom_coupling_matrix, parse_initial_data,
                        picard_solve, sin_mode_data, solve_continuum,
                        tabulated_data)
from .core import (ForcingSpec, ModelParams, NonlinearitySpec, PhysicalParams,
                   per_node_forcing, physical_to_nondimensional,
                   rescale_uniform_forcing, sine2pi_coupling, sine_coupling,
                   uniform_forcing, zero_forcing)
from .dynamics import (FiniteSystem, OscillatorState, StepFunctionSeries,
                       TrajectorySeries, conserved_quantities,
                       embed_step_function, integrate, integrate_averaged,
                       read_diagnostics_csv, read_trajectory_csv, rhs,
                       time_grid, write_diagnostics_csv, write_trajectory_csv)
from .errors import (ConfigError, ContractionError, ConvergenceFailure,
                     DecayFitError, DivergenceError, ParameterError)
from .experiments import (ConvergenceReport, MuScalingReport,
                          ProbabilisticReport, averaged_vs_random,
                          deterministic_convergence, gronwall_envelope,
                          load_report_json, mu_scaling_study,
                          random_convergence, write_report_json)
from .graphons import (DifferenceKernel, GridKernel, SmallWorldParams,
                       constant_kernel, fourier_coefficient, indicator_kernel,
                       load_grid_kernel_csv, save_grid_kernel_csv,
                       small_world_kernel, spectral_difference,
                       tabulated_profile_kernel)
from .graphs import (CouplingGraph, StepKernel, averaged_graph,
                     graph_from_graphon, l2_kernel_distance, load_graph,
                     nearest_neighbour_graph, point_sampled_step_kernel,
                     sample_k_random_graph, sampled_deviation_matrix,
                     save_graph, step_kernel)
from .stability import (ModeSpectrum, ZeroModeSolution, measure_decay_rate,
                        mode_amplitude_series, mode_eigenvalues,
                        read_spectrum_csv, read_sweep_csv, spectral_abscissa,
                        spectrum, sweep_abscissa, write_spectrum_csv,
                        write_sweep_csv, zero_mode_mean)

__all__ = [name for name in dir() if not name.startswith("_")]
