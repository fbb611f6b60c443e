import json
import math

import numpy as np
import pytest

from irsec.errors import ConfigError
from irsec.experiment import ExperimentConfig, Scenario, config_from_dict, load_config, sweep_point


def test_defaults():
    cfg = config_from_dict({})
    assert (cfg.M, cfg.K, cfg.N) == (4, 4, 16)
    assert (cfg.kappa_min, cfg.xi) == (0.8, 1.6)
    assert cfg.vartheta == pytest.approx(0.43 * math.pi)
    assert cfg.wavelength == pytest.approx(0.1199, abs=1e-4)
    assert (cfg.spacing_h, cfg.spacing_v) == (0.25, 0.25)
    assert (cfg.link1.C_dB, cfg.link1.nu, cfg.link1.d) == (26.0, 2.2, 8.0)
    assert (cfg.link2.C_dB, cfg.link2.nu, cfg.link2.d) == (28.0, 3.67, 60.0)
    assert cfg == ExperimentConfig()
    assert load_config(None) == cfg


def test_beta_product():
    cfg = ExperimentConfig()
    assert cfg.beta_product() == pytest.approx((1 / 16) ** 2)
    assert cfg.replace(element_area=False).beta_product() == 1.0
    tx = cfg.replace(element_area=False, snr_reference="transmit")
    assert tx.beta_product() == pytest.approx(cfg.link1.linear() * cfg.link2.linear())


def test_total_elements_and_spacing():
    cfg = config_from_dict({"system": {"N": 36}, "geometry": {"spacing": 0.125}})
    assert (cfg.N_H, cfg.N_V) == (6, 6)
    assert cfg.spacing_h == cfg.spacing_v == 0.125
    corr = cfg.correlations()
    assert corr.R1.shape == (36, 36)


def test_linear_snr_key():
    cfg = config_from_dict({"snr": [1e-12, 10.0]})
    np.testing.assert_allclose(cfg.snr_linear(), [1e-12, 10.0], rtol=1e-12)


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"system": {"M": 0}},
    {"system": {"M": 2.5}},
    {"system": {"N": 4, "N_H": 2}},
    {"case": 3},
    {"profile": {"kappa_min": 1.5}},
    {"geometry": {"spacing": -1}},
    {"correlation": {"rho_tx": 1.0}},
    {"snr_db": []},
    {"snr_db": ["ten"]},
    {"snr": [0.0]},
    {"snr": [1.0], "snr_db": [0.0]},
    {"phases": "best"},
    {"phases": [0.1, 0.2]},
    {"sweep": {"axis": "M"}},
    {"sweep": {"series": ["optimized", "magic"]}},
    {"sweep": {"axis": "N", "values": [4.5]}},
    {"mc": {"trials": 10}},
    {"optimizer": {"armijo_c": 2.0}},
    {"optimizer": {"speed": 2.0}},
    {"pdf": {"grid": {"start": 0, "stop": 1}}},
    {"ensemble": {"a": 1, "q": 2, "p": 2, "gains": [1.0]}},
    {"ensemble": {"a": 1, "q": 2, "p": 1, "gains": [1.0, 2.0]}},
    {"element_area": "yes"},
    [],
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        config_from_dict(raw)


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"pdf": {"grid": {"start": 0.1, "stop": 1.0, "num": 3, "spacing": "log"}}}))
    np.testing.assert_allclose(load_config(str(good)).pdf_grid, [0.1, math.sqrt(0.1), 1.0])


def test_sweep_point_axes():
    base = ExperimentConfig()
    cfg, snr = sweep_point(base.replace(sweep_axis="N"), 64)
    assert cfg.N == 64 and snr == pytest.approx(10.0)
    cfg, _ = sweep_point(base.replace(sweep_axis="d_spacing"), 0.125)
    assert cfg.spacing_h == 0.125
    cfg, snr = sweep_point(base.replace(sweep_axis="snr"), 20.0)
    assert snr == pytest.approx(100.0)
    cfg, _ = sweep_point(base.replace(sweep_axis="xi"), 3.0)
    assert cfg.xi == 3.0


def test_scenario_phase_settings():
    cfg = ExperimentConfig().replace(N_H=2, N_V=2)
    scen = Scenario(cfg, 10.0)
    assert scen.dims.q == 4
    opt = scen.phases("optimal")
    np.testing.assert_allclose(opt.phases, 0.93 * math.pi)
    assert scen.capacity("optimal") > scen.capacity("random")
    fixed = Scenario(cfg.replace(phases=(0.1, 0.2, 0.3, 0.4)), 10.0)
    np.testing.assert_allclose(fixed.phases().phases, [0.1, 0.2, 0.3, 0.4])


def test_ensemble_override():
    cfg = config_from_dict({"ensemble": {"a": 1, "q": 1, "p": 1, "gains": [1.0]}})
    scen = Scenario(cfg, 1.0)
    assert scen.problem is None
    assert scen.pdf().density(1.0) == pytest.approx(0.2277877, abs=1e-6)
