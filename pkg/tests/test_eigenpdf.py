import math

import mpmath
import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.special import k0, kv

from irsec.channel import EnsembleDims, GainVector
from irsec.eigenpdf import (
    build_marginal,
    equal_gain_density,
    joint_pdf_log,
    marginal_cdf,
    marginal_density,
    marginal_density_dgamma,
    marginal_density_dphi,
)
from irsec.errors import DegeneracyError, DomainError
from irsec.phase import PhaseShiftProfile, amplitude

from conftest import density_integral, distinct_gains

LAM = np.array([1e-4, 0.01, 0.3, 1.0, 3.0, 10.0, 40.0])


def vandermonde_reference(lam, a, q, p, gains):
    """Density written with an explicit inverse Vandermonde matrix, in 30-digit arithmetic."""
    with mpmath.workdps(30):
        g = [mpmath.mpf(x) for x in gains]
        s = min(a, q)
        vinv = mpmath.matrix([[gi**j for j in range(q)] for gi in g]) ** -1
        out = []
        for x in np.atleast_1d(lam):
            x = mpmath.mpf(x)
            total = mpmath.mpf(0)
            for l in range(q):
                for k in range(q - s + 1, q + 1):
                    total += (vinv[k - 1, l] * x ** (mpmath.mpf(a + p - 2 * q + 2 * k - 2) / 2)
                              * g[l] ** (mpmath.mpf(p - a) / 2 - (p - q + 1))
                              * mpmath.besselk(p - a, 2 * mpmath.sqrt(x / g[l]))
                              / (mpmath.gamma(a - q + k) * mpmath.gamma(p - q + k)))
            out.append(float(2 * total / s))
    return np.array(out)


def scalar_product_density(lam, a, p, gamma):
    """q = 1: lam = gamma * G_a * G_p with independent unit-scale Gamma variates."""
    mpmath.mp.dps = 30
    lam = mpmath.mpf(lam)

    def integrand(t):
        x = lam / (gamma * t)
        return (x ** (a - 1) * mpmath.e ** (-x) / mpmath.gamma(a)) * (
            t ** (p - 1) * mpmath.e ** (-t) / mpmath.gamma(p)) / (gamma * t)

    try:
        return float(mpmath.quad(integrand, [0, 1, 10, mpmath.inf]))
    finally:
        mpmath.mp.dps = 15


def test_single_mode_closed_form():
    pdf = build_marginal(EnsembleDims(1, 1, 1), [1.0])
    lam = np.linspace(0.01, 30, 100)
    np.testing.assert_allclose(pdf.density(lam), 2 * k0(2 * np.sqrt(lam)), rtol=1e-12)


@pytest.mark.parametrize("a,p,gamma", [(1, 1, 0.4), (2, 3, 2.5), (4, 4, 1.0), (3, 7, 0.2), (8, 2, 5.0)])
def test_single_mode_against_integral_representation(a, p, gamma):
    pdf = build_marginal(EnsembleDims(a, 1, p), [gamma])
    for lam in (0.05, 0.9, 4.0, 25.0):
        assert pdf.density(lam) == pytest.approx(scalar_product_density(lam, a, p, gamma), rel=1e-10)


@pytest.mark.parametrize("a,q,p,gains", [
    (2, 2, 2, [1.0, 2.0]),
    (4, 2, 4, [1.0, 1.7]),
    (3, 3, 5, [0.5, 1.1, 3.0]),
    (1, 3, 3, [0.4, 1.3, 2.9]),
    (4, 4, 8, [0.3, 1.0, 2.0, 3.1]),
    (2, 5, 6, [0.2, 0.6, 1.5, 3.0, 7.0]),
])
def test_against_vandermonde_reference(a, q, p, gains):
    pdf = build_marginal(EnsembleDims(a, q, p), gains)
    ref = vandermonde_reference(LAM, a, q, p, gains)
    # far below the peak only absolute accuracy is meaningful in double precision
    np.testing.assert_allclose(pdf.density(LAM), ref, rtol=1e-9, atol=1e-12 * np.max(ref))


@pytest.mark.parametrize("a,q,p", [(1, 2, 2), (4, 3, 5), (2, 4, 8), (8, 8, 16), (4, 8, 8)])
def test_normalization_and_mean(rng, a, q, p):
    gains = distinct_gains(rng, q)
    pdf = build_marginal(EnsembleDims(a, q, p), gains)
    assert density_integral(pdf) == pytest.approx(1.0, abs=1e-9)
    # E tr(H H^H) = a p sum(gains), shared by s nonzero eigenvalues
    assert pdf.mean() == pytest.approx(a * p * np.sum(gains) / min(a, q), rel=1e-8)


def test_clustered_gains_match_equal_gain_limit():
    dims = EnsembleDims(4, 4, 6)
    g0 = 1.7
    pdf = build_marginal(dims, g0 * (1 + np.arange(1, 5) * 1e-8))
    lam = np.linspace(0.5, 60, 40)
    np.testing.assert_allclose(pdf.density(lam), equal_gain_density(dims, g0, lam), rtol=1e-6)


def test_mixed_clusters_normalize(rng):
    gains = [0.5, 0.5 * (1 + 3e-4), 2.0, 2.0 * (1 + 1e-5), 2.0 * (1 + 2e-5), 9.0]
    pdf = build_marginal(EnsembleDims(3, 6, 7), gains)
    assert density_integral(pdf) == pytest.approx(1.0, abs=1e-8)
    assert np.all(pdf.density(LAM) >= 0)


def test_scale_invariance():
    dims = EnsembleDims(3, 3, 4)
    g = np.array([0.5, 1.2, 2.0])
    base = build_marginal(dims, g)
    scaled = build_marginal(dims, 10.0 * g)
    np.testing.assert_allclose(scaled.density(10.0 * LAM) * 10.0, base.density(LAM), rtol=1e-11)


def test_density_is_permutation_invariant():
    dims = EnsembleDims(4, 3, 5)
    a = build_marginal(dims, [0.3, 1.0, 2.2]).density(LAM)
    b = build_marginal(dims, [2.2, 0.3, 1.0]).density(LAM)
    np.testing.assert_allclose(a, b, rtol=1e-12)


@pytest.mark.parametrize("a,q,p", [(4, 2, 4), (3, 3, 5), (4, 4, 8)])
def test_dgamma_against_finite_differences(rng, a, q, p):
    dims = EnsembleDims(a, q, p)
    gains = distinct_gains(rng, q, min_ratio=1.2)
    pdf = build_marginal(dims, gains)
    lam = np.array([0.2, 1.5, 6.0, 20.0])
    for n in range(1, q + 1):
        h = 1e-6 * gains[n - 1]
        up, dn = gains.copy(), gains.copy()
        up[n - 1] += h
        dn[n - 1] -= h
        fd = (build_marginal(dims, up).density(lam) - build_marginal(dims, dn).density(lam)) / (2 * h)
        got = marginal_density_dgamma(pdf, lam, n)
        np.testing.assert_allclose(got, fd, rtol=1e-6, atol=1e-10 * np.max(np.abs(pdf.density(lam))))


def test_dgamma_integrates_to_zero(rng):
    pdf = build_marginal(EnsembleDims(4, 3, 6), distinct_gains(rng, 3))
    u = np.linspace(1e-6, 40, 40001)
    vals = pdf.dgamma(u * u) * (2 * u)[:, None]
    np.testing.assert_allclose(integrate.simpson(vals, x=u, axis=0), 0.0, atol=1e-6)


def test_dphi_chain_rule():
    prof = PhaseShiftProfile()
    dims = EnsembleDims(4, 2, 4)
    base = np.array([2.0, 0.7])
    phases = np.array([0.3, -1.2])

    def density_at(ph):
        return build_marginal(dims, GainVector.from_values(base * amplitude(ph, prof) ** 2)).density(2.0)

    pdf = build_marginal(dims, GainVector(base * amplitude(phases, prof) ** 2, base, amplitude(phases, prof),
                                          np.ones(2)))
    for n in (1, 2):
        h = 1e-6
        e = np.zeros(2)
        e[n - 1] = h
        fd = (density_at(phases + e) - density_at(phases - e)) / (2 * h)
        assert marginal_density_dphi(pdf, 2.0, n, prof, phases) == pytest.approx(fd, rel=1e-6)
    ideal = PhaseShiftProfile.ideal_profile()
    assert marginal_density_dphi(pdf, 2.0, 1, ideal, phases) == 0.0


def test_joint_density_integrates_to_one():
    gains = GainVector.from_values([1.0, 2.5])
    p = 3

    def f(w2, w1):
        c = [gains.gammas[0] * w1, gains.gammas[1] * w2]
        return math.exp(joint_pdf_log(c, gains, p)) * gains.gammas[0] * gains.gammas[1]

    total, _ = integrate.dblquad(f, 0, 60, lambda w1: w1, lambda w1: 80, epsabs=1e-10)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_joint_density_rejects_out_of_order():
    with pytest.raises(DomainError):
        joint_pdf_log([2.0, 1.0], [1.0, 1.0], 3)


def test_cdf_properties(rng):
    pdf = build_marginal(EnsembleDims(4, 3, 4), distinct_gains(rng, 3))
    lam = np.linspace(0.01, 60 * pdf.mean(), 300)
    cdf = marginal_cdf(pdf, lam)
    assert np.all(np.diff(cdf) >= 0)
    assert cdf[-1] == pytest.approx(1.0, abs=1e-9)
    partial = integrate.quad(lambda x: marginal_density(pdf, x), 0, 5.0, limit=200)[0]
    assert marginal_cdf(pdf, 5.0) == pytest.approx(partial, abs=1e-8)


def test_coincident_gains_raise():
    with pytest.raises(DegeneracyError):
        build_marginal(EnsembleDims(2, 2, 2), [1.0, 1.0])


def test_density_nonnegative_and_rejects_negative_lambda(rng):
    pdf = build_marginal(EnsembleDims(4, 4, 16), distinct_gains(rng, 4))
    assert np.all(pdf.density(np.geomspace(1e-8, 1e4, 200)) >= 0)
    with pytest.raises(DomainError):
        pdf.density(-1.0)
    with pytest.raises(DomainError):
        marginal_density_dgamma(pdf, 1.0, 5)
