import numpy as np
import pytest

from irsec.eigenpdf import support_bound
from irsec.quadrature import adaptive_gk


def distinct_gains(rng, q, low=0.2, high=5.0, min_ratio=1.05):
    """Log-uniform gains whose sorted neighbours differ by at least ``min_ratio``."""
    while True:
        g = np.exp(rng.uniform(np.log(low), np.log(high), size=q))
        s = np.sort(g)
        if q == 1 or np.min(s[1:] / s[:-1]) >= min_ratio:
            return g


def density_integral(pdf, tol=1e-10):
    """Integral of the marginal density over (0, inf) in the u = sqrt(lam) variable."""

    def f(u):
        return 2.0 * u * pdf.density_signed(u * u)

    return adaptive_gk(f, 0.0, support_bound(pdf), tol, initial_panels=16).value


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
