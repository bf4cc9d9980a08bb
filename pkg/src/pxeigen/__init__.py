"""Luxemburg-norm eigenvalue problems with variable exponents on grids."""

from .eigensolver import (EigenSolution, SolverOptions, constants_KkS, el_weak_residual,
                          minimize_modular_constrained, minimize_rayleigh,
                          strict_positivity_check)
from .errors import (ConfigError, DataError, DegenerateDomainError, DomainError,
                     PreconditionError, PxEigenError, StencilError)
from .exponent import VariableExponent, eval_p, grad_ln_p, scale_exponent
from .grid import (GriddedDomain, ScalarField, distance_function, gradient,
                   inradius_and_lambda_infinity, integrate)
from .limit import (SweepResult, infinity_x_laplacian, limit_equation_residual,
                    sweep_to_infinity)
from .norms import (ModularSpec, gradient_norm, hoelder_normalized, luxemburg_norm,
                    modular, modular_rayleigh, norm_limit_table, rayleigh_quotient, sup_norm)
from .oned import (OneDSolution, analytic_modular_solution, eigenvalue_family,
                   luxemburg_rigidity_check)
from .uniqueness import (GTransform, comparison_condition, g_eval, g_inequalities_check,
                         local_uniqueness_radius, strict_margin_mu)

__version__ = "0.1.0"
