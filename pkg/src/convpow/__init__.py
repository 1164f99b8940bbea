"""Saddle-point asymptotics for convolution powers of nondecreasing functions."""
from .asymptotics import (AsymptoticEstimate, ExpansionCoefficients, Formula, cor_clt,
                          cor_lin_growth, expansion_coeffs, linear_expansion_estimate, thm_a,
                          thm_b)
from .conditions import ConditionReport, Regime, check_conditions, laguerre_case1_rates
from .errors import (ConvPowError, HorizonTooSmall, InvalidSpec, MissingMoment, NoRoot,
                     NotProbability, OutOfDomain, RatioOutOfRange, ScanInconclusive,
                     SolverStall, UnsupportedOrder)
from .laplace import ComplexLaplaceEval, LaplaceEval, domain_of, laplace_at, laplace_complex
from .lognum import LogNumber
from .measure import (Affine, Density, Exp, GridMeasure, HeavyExpDensity, Lattice, LogPower,
                      MeasureSpec, PowerLaw, ShiftedExp, SqrtExpDensity, Tabulated, discretize,
                      eval_V, spec_from_dict, spec_from_json, spec_to_dict)
from .oracle import (ConvolutionTable, convolve_power, exact_power_law, exact_shifted_exp,
                     laguerre_eval, tilt_moments)
from .renewal import (RenewalInput, build_renewal_grid, renewal_asymptotic, renewal_b_coeffs,
                      renewal_betas)
from .saddle import (SaddleReport, range_bounds, solve_kappa, solve_theta_for_slope,
                     solve_theta_star)

__version__ = "0.1.0"
