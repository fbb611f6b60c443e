"""Ergodic capacity of IRS-assisted MIMO links under spatially correlated fading.

The main entry points are :class:`MarginalEigenPDF` (density of an
unordered eigenvalue of the effective channel Gram matrix),
:func:`ergodic_capacity`, the Monte-Carlo simulators and the phase
optimizer.  ``irsec`` on the command line wraps them.
"""

from .capacity import (
    CapacityResult,
    capacity_gradient,
    db_to_linear,
    ergodic_capacity,
)
from .channel import (
    CorrelationSet,
    EnsembleDims,
    GainVector,
    SystemDims,
    assemble_gains,
    case_spectra,
    irs_correlation,
)
from .eigenpdf import (
    MarginalEigenPDF,
    build_marginal,
    joint_pdf_log,
    marginal_cdf,
    marginal_density,
    marginal_density_dgamma,
    marginal_density_dphi,
)
from .errors import ConfigError, DegeneracyError, DomainError, IrsecError, NumericalError
from .montecarlo import (
    McEstimate,
    empirical_pdf,
    mc_capacity_effective,
    mc_capacity_full,
    mc_capacity_rayleigh,
    mc_effective_eigenvalues,
    sample_effective_eigenvalues,
)
from .optimizer import OptimizationTrace, OptimizerConfig, PhaseProblem, optimize_multistart, optimize_phases
from .phase import PhaseShiftProfile, PhaseVector, amplitude, optimal_phase
from .specfun import SignedLog, gamma_cofactors, log_bessel_k, log_gamma, signed_logsumexp

__all__ = [
    "CapacityResult", "capacity_gradient", "db_to_linear", "ergodic_capacity",
    "CorrelationSet", "EnsembleDims", "GainVector", "SystemDims", "assemble_gains", "case_spectra",
    "irs_correlation",
    "MarginalEigenPDF", "build_marginal", "joint_pdf_log", "marginal_cdf", "marginal_density",
    "marginal_density_dgamma", "marginal_density_dphi",
    "ConfigError", "DegeneracyError", "DomainError", "IrsecError", "NumericalError",
    "McEstimate", "empirical_pdf", "mc_capacity_effective", "mc_capacity_full", "mc_capacity_rayleigh",
    "mc_effective_eigenvalues", "sample_effective_eigenvalues",
    "OptimizationTrace", "OptimizerConfig", "PhaseProblem", "optimize_multistart", "optimize_phases",
    "PhaseShiftProfile", "PhaseVector", "amplitude", "optimal_phase",
    "SignedLog", "gamma_cofactors", "log_bessel_k", "log_gamma", "signed_logsumexp",
]
