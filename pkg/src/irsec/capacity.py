"""Ergodic capacity as a one-dimensional integral over the eigenvalue density.

With the substitution ``lam = u**2`` the Bessel tail of the density
becomes exponential in ``u`` and the ``sqrt(lam)`` argument becomes
linear, so a modest number of Gauss-Kronrod panels suffices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_positive_real
from .channel import EnsembleDims, GainVector, assemble_gains
from .eigenpdf import MarginalEigenPDF, build_marginal, gain_phase_sensitivity, support_bound
from .errors import NumericalError
from .phase import PhaseShiftProfile, PhaseVector
from .quadrature import QuadRule, adaptive_gk, panel_rule

__all__ = [
    "CapacityResult",
    "ergodic_capacity",
    "capacity_gradient",
    "capacity_and_gradient",
    "capacity_rule",
    "capacity_for_phases",
    "truncation_point",
    "db_to_linear",
    "snr_from_power_dbm",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-8
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class CapacityResult:
    """Capacity in bits/s/Hz with the quadrature diagnostics.

    Attributes
    ----------
    ec_bits : float
    quad_abs_err : float
        Error estimate of the quadrature (zero for a frozen rule, where it
        is not estimated).
    truncation_point : float
        Upper limit in ``lam`` used by the integral.
    """

    ec_bits: float
    quad_abs_err: float
    truncation_point: float


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def snr_from_power_dbm(tx_power_dbm: float, noise_dbm: float, beta_product: float = 1.0) -> float:
    """Linear SNR from transmit and noise powers in dBm and a linear link gain."""
    return float(db_to_linear(tx_power_dbm - noise_dbm)) * check_positive_real(beta_product, "beta_product")


def _rate_weight(u, snr_per_stream):
    # log2(1 + c u^2) * du-Jacobian 2u
    return np.log1p(snr_per_stream * u * u) / _LN2 * 2.0 * u


def _value_integrand(pdf: MarginalEigenPDF, c: float):
    s = pdf.dims.s

    def f(u):
        out = np.zeros_like(u)
        pos = u > 0
        up = u[pos]
        out[pos] = s * _rate_weight(up, c) * pdf.density_signed(up * up)
        return out

    return f


def _joint_integrand(pdf: MarginalEigenPDF, c: float, sens: np.ndarray):
    s = pdf.dims.s
    q = pdf.dims.q

    def f(u):
        out = np.zeros(u.shape + (q + 1,))
        pos = u > 0
        up = u[pos]
        lam = up * up
        w = s * _rate_weight(up, c)
        dens, dgam = pdf.density_and_dgamma(lam)
        out[pos, 0] = w * dens
        out[pos, 1:] = w[:, None] * dgam * sens[None, :]
        return out

    return f


def truncation_point(pdf: MarginalEigenPDF, snr: float, M: int, tol: float = DEFAULT_TOL) -> float:
    """Upper limit in ``u = sqrt(lam)`` beyond which the integrand is negligible.

    The integrand is scanned on a grid up to a generous analytic bound;
    the limit is the first grid point past the peak where it stays below
    ``1e-3 * tol`` times the peak value.
    """
    c = snr / M
    top = support_bound(pdf)
    grid = np.linspace(0.0, top, 513)[1:]
    vals = np.abs(_value_integrand(pdf, max(c, 1e-300))(grid))
    peak = float(np.max(vals))
    if not peak > 0:
        return float(top)
    above = np.nonzero(vals >= 1e-3 * tol * peak)[0]
    last = int(above[-1]) if above.size else 0
    return float(grid[min(last + 1, grid.size - 1)])


def ergodic_capacity(
    pdf: MarginalEigenPDF,
    snr: float,
    M: int,
    tol: float = DEFAULT_TOL,
    rule: QuadRule | None = None,
) -> CapacityResult:
    """Ergodic capacity ``s * E[log2(1 + snr/M * lam)]`` in bits/s/Hz.

    Parameters
    ----------
    pdf : MarginalEigenPDF
    snr : float
        Linear SNR, > 0.
    M : int
        Number of transmit antennas (equal power per antenna).
    tol : float
        Absolute tolerance in bits for adaptive quadrature.
    rule : QuadRule, optional
        Frozen rule to use instead of adaptive refinement.

    Returns
    -------
    CapacityResult

    Raises
    ------
    NumericalError
        When adaptive refinement fails; ``partial`` carries the estimate.
    """
    snr = check_positive_real(snr, "snr")
    M = check_positive_int(M, "M")
    tol = check_positive_real(tol, "tol")
    c = snr / M
    integrand = _value_integrand(pdf, c)
    if rule is not None:
        value = float(rule.apply(integrand(rule.nodes)))
        return CapacityResult(max(value, 0.0), 0.0, float(np.max(rule.nodes)) ** 2)
    u_max = truncation_point(pdf, snr, M, tol)
    try:
        res = adaptive_gk(integrand, 0.0, u_max, tol, initial_panels=16)
    except NumericalError as exc:
        raise NumericalError(str(exc), partial=CapacityResult(float(exc.partial), math.inf, u_max**2)) from exc
    return CapacityResult(max(float(res.value), 0.0), res.abs_err, u_max**2)


def capacity_and_gradient(
    pdf: MarginalEigenPDF,
    profile: PhaseShiftProfile,
    phases,
    snr: float,
    M: int,
    tol: float = DEFAULT_TOL,
    rule: QuadRule | None = None,
):
    """Capacity and its gradient in the phases from one quadrature pass.

    Returns
    -------
    result : CapacityResult
    grad : ndarray, shape (q,)
    """
    snr = check_positive_real(snr, "snr")
    M = check_positive_int(M, "M")
    c = snr / M
    sens = gain_phase_sensitivity(pdf.gains, profile, phases)
    integrand = _joint_integrand(pdf, c, sens)
    if rule is not None:
        vals = rule.apply(integrand(rule.nodes))
        return CapacityResult(max(float(vals[0]), 0.0), 0.0, float(np.max(rule.nodes)) ** 2), vals[1:]
    u_max = truncation_point(pdf, snr, M, tol)
    res = adaptive_gk(integrand, 0.0, u_max, tol, initial_panels=16)
    return CapacityResult(max(float(res.value[0]), 0.0), res.abs_err, u_max**2), res.value[1:]


def capacity_gradient(
    dims: EnsembleDims,
    gains: GainVector,
    profile: PhaseShiftProfile,
    phases,
    snr: float,
    M: int,
    tol: float = DEFAULT_TOL,
    rule: QuadRule | None = None,
) -> np.ndarray:
    """Gradient of the ergodic capacity with respect to the IRS phases.

    Component ``n`` is ``s * int log2(1 + snr/M lam) df/dphi_n dlam``.
    The ideal profile gives an exact zero vector.
    """
    phases = phases if isinstance(phases, PhaseVector) else PhaseVector(phases)
    if profile.ideal:
        return np.zeros(dims.q)
    pdf = build_marginal(dims, gains)
    return capacity_and_gradient(pdf, profile, phases, snr, M, tol, rule)[1]


def capacity_rule(pdfs, snr: float, M: int, tol: float = 1e-10) -> QuadRule:
    """Composite rule adequate for every density in ``pdfs``.

    Adaptive panels are found for each density and their breakpoints
    merged, so the rule resolves any gain vector between the extremes
    supplied.  ``tol`` is relative once the integrals exceed one.  Used to freeze the quadrature during an optimization run.
    """
    edges = []
    for pdf in pdfs:
        sens = np.ones(pdf.dims.q)
        u_max = truncation_point(pdf, snr, M, tol)
        integrand = _joint_integrand(pdf, snr / M, sens)
        # large sensitivity integrals put an absolute tol below rounding noise
        scale = float(np.max(np.abs(adaptive_gk(integrand, 0.0, u_max, 1e-6, initial_panels=16).value)))
        res = adaptive_gk(integrand, 0.0, u_max, tol * max(1.0, scale), initial_panels=16)
        edges.append(res.panels.ravel())
    pts = np.unique(np.concatenate(edges))
    return panel_rule(np.stack([pts[:-1], pts[1:]], axis=1))


def capacity_for_phases(
    dims: EnsembleDims,
    spectra,
    profile: PhaseShiftProfile,
    phases,
    snr: float,
    M: int,
    beta_product: float = 1.0,
    tol: float = DEFAULT_TOL,
) -> CapacityResult:
    """Convenience wrapper: assemble gains, build the density, integrate."""
    gains = assemble_gains(dims, spectra, profile, phases, beta_product=beta_product)
    return ergodic_capacity(build_marginal(dims, gains), snr, M, tol)
