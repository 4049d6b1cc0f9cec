"""Streaming ridge-leverage-score Nyström sketching for kernel ridge regression."""

from .baselines import d_max, oracle_rls_sample, uniform_sample
from .dictionary import (DictEntry, Dictionary, expand, probability_update, selection_weights,
                         shrink)
from .exceptions import (ConfigError, ContractViolation, InputError, NumericalDomainError,
                         SqueakError)
from .kernels import (Dataset, KernelColumn, KernelFunction, column, full_matrix,
                      gaussian_expansion, orthogonal_blocks)
from .nystrom import (GammaCheck, GammaChecker, NystromSketch, WeightVector, build_sketch, fixed_design_risk,
                      gamma_approx_check, solve_exact, solve_nystrom)
from .rls import RlsConfig, RlsEstimate, effective_dimension, estimate_rls, exact_rls
from .sampler import SqueakConfig, StepState, process_point, run_stream, squeak

__version__ = "0.1.0"
