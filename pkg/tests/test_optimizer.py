import math
from types import SimpleNamespace

import numpy as np
import pytest

from irsec.channel import EnsembleDims
from irsec.errors import DomainError
from irsec.optimizer import (
    OptimizerConfig,
    PhaseProblem,
    optimize_multistart,
    optimize_phases,
    random_phases,
)
from irsec.phase import PhaseShiftProfile, PhaseVector, optimal_phase, wrap_phase


def small_problem(profile=None, q=2):
    spectra = [np.array([2.7, 0.13, 0.05][:q])]
    return PhaseProblem(EnsembleDims(4, q, 4), spectra, profile or PhaseShiftProfile(), 10.0, 4, 0.0625)


def test_single_phase_converges_to_unit_amplitude():
    prob = small_problem(q=1)
    phases, trace = optimize_phases([-2.0], prob)
    assert trace.converged
    assert abs(wrap_phase(phases.phases[0] - 0.93 * math.pi)) < 1e-4
    assert trace.records[0].iteration == 0
    np.testing.assert_allclose(trace.records[0].phases, [-2.0])


def test_trace_is_monotone_and_final_matches_value():
    prob = small_problem()
    phases, trace = optimize_phases([0.3, -2.5], prob)
    obj = trace.objectives
    assert np.all(np.diff(obj) >= 0)
    assert trace.final_objective == pytest.approx(prob.value(phases), abs=1e-12)
    assert trace.final_objective >= prob.value(np.full(2, optimal_phase(prob.profile))) - 1e-8


def test_ideal_profile_returns_initial_phases():
    prob = small_problem(PhaseShiftProfile.ideal_profile())
    start = PhaseVector([0.1, 0.2])
    phases, trace = optimize_phases(start, prob)
    assert len(trace.records) == 1 and trace.converged
    np.testing.assert_array_equal(phases.phases, start.phases)


def test_multistart_picks_best_and_is_deterministic():
    prob = small_problem()
    cfg = OptimizerConfig(max_iters=5)
    a = optimize_multistart(prob, cfg, starts=3, seed=4)
    b = optimize_multistart(prob, cfg, starts=3, seed=4)
    np.testing.assert_array_equal(a[0].phases, b[0].phases)
    assert a[1].final_objective == max(t.final_objective for t in a[2])
    assert len(a[2]) == 3


def test_stall_is_reported():
    # an objective whose reported gradient points downhill can never pass Armijo
    q = 2
    fake = SimpleNamespace(
        dims=EnsembleDims(2, q, 2),
        profile=PhaseShiftProfile(),
        frozen_rule=lambda: None,
        value_and_gradient=lambda ph, rule: (-float(np.sum(ph.phases**2)), 2.0 * ph.phases),
        value=lambda ph: -float(np.sum(ph.phases**2)),
    )
    _, trace = optimize_phases([0.5, -0.5], fake)
    assert trace.stalled
    assert len(trace.records) == 1


def test_max_iters_status():
    prob = small_problem()
    _, trace = optimize_phases([0.3, -2.5], prob, OptimizerConfig(max_iters=1, grad_tol=1e-14))
    assert trace.status == "max_iters"
    assert len(trace.records) == 2


def test_random_phases():
    a = random_phases(5, 3)
    np.testing.assert_array_equal(a.phases, random_phases(5, 3).phases)
    assert np.all((a.phases >= -math.pi) & (a.phases < math.pi))
    assert not np.array_equal(a.phases, random_phases(5, 4).phases)


@pytest.mark.parametrize("kw", [dict(max_iters=0), dict(grad_tol=0.0), dict(backtrack_factor=1.0),
                                dict(armijo_c=0.0), dict(obj_tol=-1.0)])
def test_config_validation(kw):
    with pytest.raises(DomainError):
        OptimizerConfig(**kw)


def test_wrong_phase_count():
    with pytest.raises(DomainError):
        optimize_phases([0.1], small_problem())
