"""Occupancy of infinitely many boxes: moments, simulation and asymptotics."""
from .errors import (AccuracyError, DegenerateVarianceError, DepthExhaustedError,
                     DivergenceError, GuardExceededError, InsufficientReplicationsError,
                     OccupancyError, ParameterDomainError, SchemeMismatchError,
                     UnsupportedSpecError)
from .regvar import RegularVariationSpec, SlowVariation
from .frequency_models import (BlockSpec, FrequencyModel, delta_nu, load_explicit, make_block,
                               make_explicit, make_geometric, make_power_law, make_rapid,
                               make_slow_variation, nu_r_mass, realize_stick_breaking,
                               tail_count, tail_sum)
from .moments import (cov_poisson, depoissonization_gap, diagnose_variance,
                      exact_k_distribution, moment_report, phi_fixed, phi_fixed_r,
                      phi_poisson, phi_poisson_r, poissonization_check, solve_tau, var_fixed,
                      var_fixed_r, var_poisson, var_poisson_direct, var_poisson_r)
from .sampler import (OccupancyState, discovery_process, exact_arrangement_prob, hausdorff,
                      quantile_sets, run_fixed, run_poisson, sample_box)
from .asymptotics import (asymptotic_inverse, de_bruijn_conjugate, ell_star, estimate_alpha,
                          limit_covariance, power_law_predictions, predict_discovery,
                          predict_mean, predict_residual, predict_tail_sum, predict_unseen,
                          ratio_limit)
from .harness import ExperimentConfig, replicate, run_experiment
from .literals import parse_model

__version__ = "0.1.0"
