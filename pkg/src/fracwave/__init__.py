"""Fractional diffusion-wave fundamental solutions.

Wright-function kernels for constant coefficients, the Levi parametrix
correction for variable coefficients, a Cauchy-problem solver built on both,
and an independent finite-difference oracle.
"""

from .cauchy import (CauchyConfig, CauchyProblem, SolutionField, initial_condition_report, kernel_residual,
                     potential_W, residual, residual_report, solve_cauchy)
from .errors import (CoverageError, DomainError, EmptyOverlap, FracwaveError, GridError,
                     IterationBudgetExceeded, LinearSolveFailure, NonConvergence, QuadratureFailure,
                     SingularMatrix, StabilityWarning)
from .fraccalc import FracOrder, TimeSamples, caputo_apply, frac_apply, graded_mesh, rl_derivative, rl_integral
from .kernels import (EllipticParamField, EnvelopeSpec, KernelId, const_triple, frozen_kernel, gamma_kernel,
                      identity_check, rho)
from .levi import (CorrectedKernel, EllipticOperator, LeviConfig, NuPair, assemble_corrected, k_kernel, m_kernel,
                   neumann_terms, solve_volterra)
from .oracle import FDGrid, compare, fd_solve_1d
from .special import (EvalResult, FFamilyParams, WrightParams, f_family, f_family_dz, wright_phi,
                      wright_phi_dz)

__version__ = "0.1.0"
