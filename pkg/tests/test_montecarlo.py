import math

import numpy as np
import pytest
from scipy.special import exp1

from irsec.channel import CorrelationSet, EnsembleDims, irs_correlation, spread_gains
from irsec.capacity import ergodic_capacity
from irsec.eigenpdf import build_marginal, marginal_cdf
from irsec.errors import DomainError
from irsec.montecarlo import (
    McEstimate,
    block_stream,
    empirical_pdf,
    ks_statistic,
    mc_capacity_effective,
    mc_capacity_full,
    mc_capacity_rayleigh,
    mc_effective_eigenvalues,
    sample_effective_eigenvalues,
)
from irsec.phase import PhaseShiftProfile, amplitude


def test_same_seed_same_result_across_thread_counts():
    dims = EnsembleDims(4, 3, 5)
    gains = [0.5, 1.0, 2.0]
    one = mc_capacity_effective(dims, gains, 10.0, 4, 20000, seed=7, threads=1)
    four = mc_capacity_effective(dims, gains, 10.0, 4, 20000, seed=7, threads=4)
    assert one == four
    other = mc_capacity_effective(dims, gains, 10.0, 4, 20000, seed=8, threads=1)
    assert other.mean != one.mean


def test_thread_env_override(monkeypatch):
    dims = EnsembleDims(2, 2, 2)
    ref = mc_effective_eigenvalues(dims, [1.0, 3.0], 9000, seed=3, threads=1)
    monkeypatch.setenv("IRSEC_THREADS", "3")
    np.testing.assert_array_equal(mc_effective_eigenvalues(dims, [1.0, 3.0], 9000, seed=3), ref)


def test_block_streams_are_distinct():
    a = block_stream(1, 0).standard_normal(4)
    b = block_stream(1, 1).standard_normal(4)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, block_stream(1, 0).standard_normal(4))


def test_sample_shapes():
    dims = EnsembleDims(4, 2, 6)
    rng = np.random.default_rng(0)
    assert sample_effective_eigenvalues(dims, [1.0, 2.0], rng).shape == (2,)
    assert sample_effective_eigenvalues(dims, [1.0, 2.0], rng, size=5).shape == (5, 2)
    assert mc_effective_eigenvalues(dims, [1.0, 2.0], 100, seed=1).shape == (200,)


@pytest.mark.parametrize("a,q,p,gains", [(4, 3, 5, [0.4, 1.0, 2.5]), (2, 4, 4, [0.3, 0.9, 1.4, 3.0])])
def test_eigenvalue_distribution_matches_density(a, q, p, gains):
    dims = EnsembleDims(a, q, p)
    pdf = build_marginal(dims, gains)
    samples = mc_effective_eigenvalues(dims, gains, 100000, seed=11)
    # KS critical value at the 0.1% level is 1.95/sqrt(n)
    assert ks_statistic(samples, lambda x: marginal_cdf(pdf, x)) < 1.95 / math.sqrt(samples.size)


def test_diagonal_pairing_model_differs_from_product_ensemble():
    dims = EnsembleDims(4, 2, 4)
    gains = [1.0, 2.0]
    pdf = build_marginal(dims, gains)
    samples = mc_effective_eigenvalues(dims, gains, 50000, seed=2, model="diagonal")
    assert ks_statistic(samples, lambda x: marginal_cdf(pdf, x)) > 0.03


@pytest.mark.parametrize("snr", [0.5, 10.0, 100.0])
def test_capacity_within_ci(snr):
    dims = EnsembleDims(4, 4, 8)
    gains = [0.2, 0.5, 1.0, 1.6]
    est = mc_capacity_effective(dims, gains, snr, 4, 100000, seed=5)
    assert est.contains(ergodic_capacity(build_marginal(dims, gains), snr, 4).ec_bits)


def test_rayleigh_scalar_closed_form():
    snr = 4.0
    exact = math.exp(1 / snr) * exp1(1 / snr) / math.log(2)
    est = mc_capacity_rayleigh(1, 1, snr, 200000, seed=4)
    assert est.contains(exact)


def test_full_channel_equals_effective_model_when_phases_are_uniform():
    lam = 0.12
    r = irs_correlation(2, 2, lam / 4, lam / 4, lam)
    cs = CorrelationSet(R1=r, T1=np.eye(4), R2=np.eye(4), T2=r)
    prof = PhaseShiftProfile()
    phases = np.full(4, 0.7)
    snr = 10.0
    full = mc_capacity_full(cs, prof, phases, snr, 4, 1.0, 100000, seed=9)
    spectrum = np.linalg.eigvalsh(r)[::-1]
    gains = spectrum**2 * amplitude(0.7, prof) ** 2
    gains = gains * spread_gains(gains)
    analytic = ergodic_capacity(build_marginal(EnsembleDims(4, 4, 4), gains), snr, 4).ec_bits
    assert abs(full.mean - analytic) <= full.half_width_99 + 1e-4


def test_empirical_pdf_and_ks():
    rng = np.random.default_rng(1)
    x = rng.uniform(size=100000)
    edges, dens = empirical_pdf(x, 50)
    assert np.sum(dens * np.diff(edges)) == pytest.approx(1.0)
    assert ks_statistic(x, lambda t: np.clip(t, 0, 1)) < 0.01
    assert ks_statistic(x, lambda t: np.clip(t, 0, 1) ** 2) > 0.2


def test_estimate_helpers():
    est = McEstimate.from_samples(np.array([1.0, 2.0, 3.0]), seed=0)
    assert est.mean == 2.0 and est.trials == 3
    assert est.contains(2.5) and not est.contains(10.0)
    with pytest.raises(DomainError):
        McEstimate.from_samples(np.array([1.0]), seed=0)
