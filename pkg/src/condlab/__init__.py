"""condlab: a numerical laboratory for generalized Bose-Einstein
condensation on anisotropic boxes, symmetry-breaking quasi-averages, and the
self-consistent displacive transition with its critical fluctuation algebra.

Everything computed at finite volume is exact (certified truncations, no
uncontrolled cutoffs); all infinite-volume statements are produced by the
explicit extrapolation protocols in :mod:`condlab.asymptotics`, which carry
error bars wherever a limit is reported.
"""

__version__ = "0.1.0"

from .asymptotics import (FitQualityError, FitResult, LimitEstimate,
                          double_limit, extrapolate, fit_power_law,
                          linear_intercept)
from .lattice import (BoxGeometry, Mode, ModeSet, SumSpec, TruncationError,
                      bose_occupation, enumerate_modes, occupancy_table,
                      spectral_sum)
from .ideal_bose import (CasimirRoot, DiagonalReport, GbecReport, casimir_root,
                         classify_gbec, critical_density,
                         diagonal_model_density, diagonal_solve_mu,
                         finite_volume_critical_density, gbec_shell_density,
                         mode_density, solve_mu)
from .quasi_average import (EquivalenceReport, OrderReport, QaLimits,
                            QaProtocol, SourceSpec, bogoliubov_field,
                            equivalence_report, order_sensitivity, qa_field,
                            qa_mode_density, qa_table, shifted_critical_density,
                            sourced_density, sourced_solve_mu)
from .scp import (DivergenceError, MixingWeight, ScpParams, ScpSolution,
                  brillouin_integral, brillouin_sum, c_star, critical_line,
                  critical_line_table, displacement_qa, gap, lambda_c,
                  mixing_weight, omega_sq, ordered_density, solve_c, stiffness)
from .fluctuations import (BelowLineReport, FluctuationScan, GammaPrediction,
                           algebra_classify, below_line_point,
                           default_instances, fluctuation_exponents,
                           gap_exponent_scan, operating_point, predicted_gamma,
                           raw_variance_P, raw_variance_Q)

__all__ = [
    "__version__",
    # asymptotics
    "FitQualityError", "FitResult", "LimitEstimate", "double_limit",
    "extrapolate", "fit_power_law", "linear_intercept",
    # lattice
    "BoxGeometry", "Mode", "ModeSet", "SumSpec", "TruncationError",
    "bose_occupation", "enumerate_modes", "occupancy_table", "spectral_sum",
    # ideal gas
    "CasimirRoot", "DiagonalReport", "GbecReport", "casimir_root",
    "classify_gbec", "critical_density", "diagonal_model_density",
    "diagonal_solve_mu", "finite_volume_critical_density",
    "gbec_shell_density", "mode_density", "solve_mu",
    # quasi-averages
    "EquivalenceReport", "OrderReport", "QaLimits", "QaProtocol", "SourceSpec",
    "bogoliubov_field", "equivalence_report", "order_sensitivity", "qa_field",
    "qa_mode_density", "qa_table", "shifted_critical_density",
    "sourced_density", "sourced_solve_mu",
    # displacive transition
    "DivergenceError", "MixingWeight", "ScpParams", "ScpSolution",
    "brillouin_integral", "brillouin_sum", "c_star", "critical_line",
    "critical_line_table", "displacement_qa", "gap", "lambda_c",
    "mixing_weight", "omega_sq", "ordered_density", "solve_c", "stiffness",
    # fluctuations
    "BelowLineReport", "FluctuationScan", "GammaPrediction",
    "algebra_classify", "below_line_point", "default_instances",
    "fluctuation_exponents", "gap_exponent_scan", "operating_point",
    "predicted_gamma", "raw_variance_P", "raw_variance_Q",
]
