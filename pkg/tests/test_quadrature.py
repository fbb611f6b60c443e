import math

import numpy as np
import pytest

from irsec.errors import NumericalError
from irsec.quadrature import adaptive_gk, panel_rule


@pytest.mark.parametrize("func,a,b,exact", [
    (np.exp, 0.0, 1.0, math.e - 1.0),
    (np.sqrt, 0.0, 4.0, 16.0 / 3.0),
    (lambda x: np.log(x), 1e-300, 1.0, -1.0),
    (lambda x: np.exp(-x * x), 0.0, 40.0, math.sqrt(math.pi) / 2),
    (lambda x: 1.0 / (1e-4 + (x - 0.3) ** 2), 0.0, 1.0, 100 * (math.atan(0.7e2) + math.atan(0.3e2))),
])
def test_adaptive_gk_known_integrals(func, a, b, exact):
    res = adaptive_gk(func, a, b, 1e-11)
    assert res.value == pytest.approx(exact, rel=1e-9, abs=1e-10)
    assert res.abs_err <= 1e-8 * max(1.0, abs(exact))


def test_vector_integrand():
    res = adaptive_gk(lambda x: np.stack([np.sin(x), np.cos(x)], axis=-1), 0.0, math.pi, 1e-12)
    np.testing.assert_allclose(res.value, [2.0, 0.0], atol=1e-11)


def test_rule_reuse_matches_adaptive_result():
    res = adaptive_gk(np.exp, 0.0, 2.0, 1e-12)
    assert res.rule.apply(np.exp(res.rule.nodes)) == pytest.approx(res.value, rel=1e-14)
    rule = panel_rule(np.array([[0.0, 1.0], [1.0, 2.0]]))
    assert rule.apply(rule.nodes**3) == pytest.approx(4.0, rel=1e-14)


def test_budget_exhaustion_reports_partial():
    with pytest.raises(NumericalError) as exc:
        adaptive_gk(lambda x: np.sin(1.0 / x) / x, 1e-6, 1.0, 1e-14, max_panels=20)
    assert exc.value.partial is not None
