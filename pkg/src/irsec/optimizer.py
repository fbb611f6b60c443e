"""Projected gradient ascent of the ergodic capacity over IRS phases."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._validation import check_positive_int, check_positive_real
from .capacity import DEFAULT_TOL, capacity_and_gradient, capacity_rule, ergodic_capacity
from .channel import EnsembleDims, GainVector, assemble_gains, spread_gains
from .eigenpdf import MarginalEigenPDF, build_marginal
from .errors import DomainError
from .phase import PhaseShiftProfile, PhaseVector, wrap_phase
from .quadrature import QuadRule

__all__ = [
    "OptimizerConfig",
    "TraceRecord",
    "OptimizationTrace",
    "PhaseProblem",
    "optimize_phases",
    "optimize_multistart",
    "random_phases",
]

_MIN_STEP = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    """Stopping and line-search parameters.

    Attributes
    ----------
    max_iters : int
    grad_tol : float
        Convergence threshold on the gradient infinity-norm (bits/rad).
    initial_step : float
        First trial step of every line search.
    backtrack_factor : float
        Step shrink factor in ``(0, 1)``.
    armijo_c : float
        Sufficient-increase constant in ``(0, 1)``.
    obj_tol : float
        An accepted step gaining less than this many bits ends the run as
        converged; the objective is then flat to quadrature precision.
    """

    max_iters: int = 200
    grad_tol: float = 1e-7
    initial_step: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4
    obj_tol: float = 1e-12

    def __post_init__(self):
        check_positive_int(self.max_iters, "max_iters")
        check_positive_real(self.grad_tol, "grad_tol")
        check_positive_real(self.initial_step, "initial_step")
        check_positive_real(self.obj_tol, "obj_tol")
        for name in ("backtrack_factor", "armijo_c"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {v}")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    phases: np.ndarray
    objective: float
    grad_norm: float
    step: float


@dataclass
class OptimizationTrace:
    """Accepted iterates of one run.

    ``status`` is ``"converged"``, ``"max_iters"`` or ``"stalled"``.
    """

    records: list[TraceRecord] = field(default_factory=list)
    status: str = "running"
    final_objective: float = math.nan

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def stalled(self) -> bool:
        return self.status == "stalled"


class PhaseProblem:
    """Capacity as a function of the ``q`` mode phases.

    The phase-independent gain factors are separated once, up front, so
    that gain spreading never switches on or off during a run.

    Parameters
    ----------
    dims : EnsembleDims
    spectra : sequence of array_like
        Participating correlation spectra (see
        :func:`irsec.channel.case_spectra`).
    profile : PhaseShiftProfile
    snr : float
        Linear SNR.
    M : int
        Transmit antennas.
    beta : float
        Large-scale gain multiplying every mode.
    """

    def __init__(self, dims: EnsembleDims, spectra: Sequence, profile: PhaseShiftProfile,
                 snr: float, M: int, beta: float = 1.0):
        self.dims = dims
        self.profile = profile
        self.snr = check_positive_real(snr, "snr")
        self.M = check_positive_int(M, "M")
        beta = check_positive_real(beta, "beta")
        base = np.full(dims.q, beta)
        for spectrum in spectra:
            spectrum = np.sort(np.asarray(spectrum, dtype=float).reshape(-1))[::-1]
            if spectrum.size < dims.q:
                raise DomainError(f"each spectrum needs at least {dims.q} eigenvalues")
            base = base * spectrum[: dims.q]
        self.base = base * spread_gains(base)

    def gains(self, phases) -> GainVector:
        return assemble_gains(self.dims, [self.base], self.profile, phases)

    def pdf(self, phases) -> MarginalEigenPDF:
        return build_marginal(self.dims, self.gains(phases))

    def frozen_rule(self, tol: float = 1e-11) -> QuadRule:
        """Quadrature rule valid across the whole amplitude range of the profile."""
        lo = max(self.profile.kappa_min, 0.05)
        envelopes = [self.base, self.base * lo**2]
        pdfs = [build_marginal(self.dims, GainVector.from_values(e)) for e in envelopes]
        return capacity_rule(pdfs, self.snr, self.M, tol)

    def value(self, phases, rule: QuadRule | None = None, tol: float = DEFAULT_TOL) -> float:
        return ergodic_capacity(self.pdf(phases), self.snr, self.M, tol, rule).ec_bits

    def value_and_gradient(self, phases, rule: QuadRule | None = None, tol: float = DEFAULT_TOL):
        phases = phases if isinstance(phases, PhaseVector) else PhaseVector(phases)
        res, grad = capacity_and_gradient(self.pdf(phases), self.profile, phases, self.snr, self.M,
                                          tol, rule)
        if self.profile.ideal:
            grad = np.zeros(self.dims.q)
        return res.ec_bits, np.asarray(grad, dtype=float)


def random_phases(q: int, seed: int) -> PhaseVector:
    """IID uniform phases on ``[-pi, pi)``, deterministic in ``seed``."""
    q = check_positive_int(q, "q")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    return PhaseVector(rng.uniform(-np.pi, np.pi, size=q))


def _secant_step(move: np.ndarray, dgrad: np.ndarray, last_step: float, config: OptimizerConfig) -> float:
    curv = -float(move @ dgrad)
    # locally convex along the move: no secant estimate, so expand instead
    step = float(move @ move) / curv if curv > 0 else 4.0 * last_step
    return float(np.clip(step, 1e-3 * config.initial_step, 1e3 * config.initial_step))


def optimize_phases(
    initial,
    problem: PhaseProblem,
    config: OptimizerConfig | None = None,
    rule: QuadRule | None = None,
) -> tuple[PhaseVector, OptimizationTrace]:
    """Maximize capacity by projected gradient ascent with backtracking.

    Each iteration steps along the gradient, wraps the phases back to
    ``[-pi, pi)`` and shrinks the step until the Armijo condition
    ``C(phi + mu g) >= C(phi) + c mu |g|^2`` holds.  The first trial step
    of an iteration is the Barzilai-Borwein estimate from the previous
    move (``initial_step`` on the first iteration; four times the last
    accepted step when the secant curvature is not negative).  The quadrature rule
    is frozen for the whole run so the objective is smooth in the phases;
    the reported final objective is recomputed adaptively.

    Parameters
    ----------
    initial : PhaseVector or array_like, length q
    problem : PhaseProblem
    config : OptimizerConfig, optional
    rule : QuadRule, optional
        Frozen rule; built from the problem when omitted.

    Returns
    -------
    phases : PhaseVector
        Best iterate.
    trace : OptimizationTrace
        Row 0 is the starting point; ``status`` flags convergence, the
        iteration limit or a failed line search.
    """
    config = config or OptimizerConfig()
    phi = initial if isinstance(initial, PhaseVector) else PhaseVector(initial)
    if len(phi) != problem.dims.q:
        raise DomainError(f"expected {problem.dims.q} initial phases, got {len(phi)}")
    trace = OptimizationTrace()
    if rule is None and not problem.profile.ideal:
        rule = problem.frozen_rule()
    obj, grad = problem.value_and_gradient(phi, rule)
    gnorm = float(np.max(np.abs(grad)))
    trace.records.append(TraceRecord(0, phi.phases.copy(), obj, gnorm, 0.0))
    status = "max_iters"
    trial_step = config.initial_step
    for it in range(1, config.max_iters + 1):
        if gnorm <= config.grad_tol:
            status = "converged"
            break
        step = trial_step
        sq = float(grad @ grad)
        while True:
            trial = PhaseVector(wrap_phase(phi.phases + step * grad))
            t_obj, t_grad = problem.value_and_gradient(trial, rule)
            if t_obj >= obj + config.armijo_c * step * sq:
                break
            step *= config.backtrack_factor
            if step < _MIN_STEP:
                status = "stalled"
                break
        if status == "stalled":
            break
        gain = t_obj - obj
        trial_step = _secant_step(wrap_phase(trial.phases - phi.phases), t_grad - grad, step, config)
        phi, obj, grad = trial, t_obj, t_grad
        gnorm = float(np.max(np.abs(grad)))
        trace.records.append(TraceRecord(it, phi.phases.copy(), obj, gnorm, step))
        if gain < config.obj_tol:
            status = "converged"
            break
    else:
        if gnorm <= config.grad_tol:
            status = "converged"
    trace.status = status
    trace.final_objective = problem.value(phi)
    return phi, trace


def optimize_multistart(
    problem: PhaseProblem,
    config: OptimizerConfig | None = None,
    starts: int = 4,
    seed: int = 0,
    initial=None,
) -> tuple[PhaseVector, OptimizationTrace, list[OptimizationTrace]]:
    """Best of several runs from seeded random starts.

    When ``initial`` is given it replaces the first random start.

    Returns
    -------
    phases, trace
        Best run by final objective.
    traces : list
        Every run, in start order.
    """
    starts = check_positive_int(starts, "starts")
    rule = None if problem.profile.ideal else problem.frozen_rule()
    results = []
    for i in range(starts):
        start = initial if (i == 0 and initial is not None) else random_phases(problem.dims.q, seed + i)
        results.append(optimize_phases(start, problem, config, rule))
    best = max(range(starts), key=lambda i: results[i][1].final_objective)
    return results[best][0], results[best][1], [r[1] for r in results]
