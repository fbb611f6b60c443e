import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import k0

from irsec.capacity import (
    capacity_and_gradient,
    capacity_gradient,
    capacity_rule,
    db_to_linear,
    ergodic_capacity,
    snr_from_power_dbm,
)
from irsec.channel import EnsembleDims, assemble_gains
from irsec.eigenpdf import build_marginal
from irsec.errors import DomainError
from irsec.phase import PhaseShiftProfile

from conftest import distinct_gains


def test_single_mode_against_direct_quadrature():
    pdf = build_marginal(EnsembleDims(1, 1, 1), [1.0])
    snr = 10.0

    def integrand(lam):
        return math.log2(1 + snr * lam) * 2 * k0(2 * math.sqrt(lam))

    ref = integrate.quad(integrand, 0, np.inf, limit=200, epsabs=1e-13)[0]
    res = ergodic_capacity(pdf, snr, 1, tol=1e-11)
    assert res.ec_bits == pytest.approx(ref, rel=1e-10)
    assert res.quad_abs_err < 1e-9


def test_vanishing_snr():
    pdf = build_marginal(EnsembleDims(4, 4, 16), [0.5, 1.0, 1.5, 2.0])
    assert ergodic_capacity(pdf, 1e-12, 4).ec_bits < 1e-9


def test_low_snr_slope_equals_mean_trace():
    # C ~ snr/M * E tr(H H^H) / ln 2 as snr -> 0
    dims = EnsembleDims(3, 2, 5)
    gains = np.array([0.7, 1.9])
    snr = 1e-8
    c = ergodic_capacity(build_marginal(dims, gains), snr, 2, tol=1e-18).ec_bits
    expected = snr / 2 * dims.a * dims.p * gains.sum() / math.log(2)
    assert c == pytest.approx(expected, rel=1e-6)


def test_capacity_increases_with_snr_and_gain(rng):
    dims = EnsembleDims(4, 3, 6)
    gains = distinct_gains(rng, 3)
    pdf = build_marginal(dims, gains)
    values = [ergodic_capacity(pdf, s, 4).ec_bits for s in db_to_linear([-10, 0, 10, 20, 30])]
    assert np.all(np.diff(values) > 0)
    bigger = build_marginal(dims, gains * np.array([1.0, 1.3, 1.0]))
    assert ergodic_capacity(bigger, 10.0, 4).ec_bits > ergodic_capacity(pdf, 10.0, 4).ec_bits


def test_frozen_rule_matches_adaptive(rng):
    dims = EnsembleDims(4, 4, 8)
    low = distinct_gains(rng, 4)
    pdfs = [build_marginal(dims, low), build_marginal(dims, 2 * low)]
    rule = capacity_rule(pdfs, 10.0, 4)
    mid = build_marginal(dims, 1.5 * low)
    frozen = ergodic_capacity(mid, 10.0, 4, rule=rule).ec_bits
    adaptive = ergodic_capacity(mid, 10.0, 4, tol=1e-11).ec_bits
    assert frozen == pytest.approx(adaptive, abs=1e-9)


@pytest.mark.parametrize("snr_db", [0.0, 10.0, 25.0])
def test_gradient_against_finite_differences(snr_db):
    dims = EnsembleDims(4, 4, 4)
    prof = PhaseShiftProfile()
    spectra = [np.array([3.0, 1.5, 0.6, 0.2]), np.array([2.0, 1.1, 0.7, 0.2])]
    phases = np.array([0.4, -2.0, 1.3, 2.6])
    snr = float(db_to_linear(snr_db))

    def value(ph):
        g = assemble_gains(dims, spectra, prof, ph)
        return ergodic_capacity(build_marginal(dims, g), snr, 4, tol=1e-13).ec_bits

    grad = capacity_gradient(dims, assemble_gains(dims, spectra, prof, phases), prof, phases, snr, 4,
                             tol=1e-13)
    h = 1e-4
    for n in range(4):
        e = np.zeros(4)
        e[n] = h
        fd = (value(phases + e) - value(phases - e)) / (2 * h)
        assert grad[n] == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_gradient_zero_for_ideal_profile():
    dims = EnsembleDims(2, 2, 2)
    ideal = PhaseShiftProfile.ideal_profile()
    g = assemble_gains(dims, [np.array([2.0, 1.0])], ideal, [0.1, 0.2])
    np.testing.assert_array_equal(capacity_gradient(dims, g, ideal, [0.1, 0.2], 10.0, 2), 0.0)


def test_value_and_gradient_share_pass():
    dims = EnsembleDims(4, 2, 4)
    prof = PhaseShiftProfile()
    g = assemble_gains(dims, [np.array([2.0, 0.5])], prof, [0.3, 1.0])
    pdf = build_marginal(dims, g)
    res, grad = capacity_and_gradient(pdf, prof, [0.3, 1.0], 10.0, 4, tol=1e-11)
    assert res.ec_bits == pytest.approx(ergodic_capacity(pdf, 10.0, 4, tol=1e-11).ec_bits, abs=1e-9)
    assert grad.shape == (2,)


def test_input_validation():
    pdf = build_marginal(EnsembleDims(1, 1, 1), [1.0])
    with pytest.raises(DomainError):
        ergodic_capacity(pdf, -1.0, 1)
    with pytest.raises(DomainError):
        ergodic_capacity(pdf, 1.0, 0)


def test_power_conversion():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert snr_from_power_dbm(20.0, -80.0, 1e-9) == pytest.approx(10.0)
