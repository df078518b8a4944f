import json
import math

import numpy as np
import pytest

from winratio.oracles import DistSpec
from winratio.simulator import (
    SimConfig,
    convergence_csv,
    convergence_study,
    dumps,
    operating_characteristics,
)

N01 = DistSpec.normal(0, 1)


def _config(**kw):
    base = dict(placebo=N01, active=N01, n1=60, n2=60, replicates=200, seed=7, methods=("wp",))
    base.update(kw)
    return SimConfig(**base)


@pytest.mark.parametrize("kw", [dict(replicates=0), dict(rho=1.0), dict(rho=-1.0), dict(methods=("bogus",)),
                                dict(alpha=1.5), dict(n2_sweep=(5, 2))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        _config(**kw)


def test_convergence_identical_laws_hover_at_half():
    path = convergence_study(_config(n1=100, n2=500))
    assert len(path) == 500
    assert math.isnan(path[0].se)
    last = path[-1]
    assert abs(last.theta_hat - 0.5) < 3 * last.se


def test_convergence_point_masses_stay_at_one():
    cfg = _config(placebo=DistSpec.bernoulli(0.0), active=DistSpec.bernoulli(1.0), n1=20, n2=50)
    assert {p.theta_hat for p in convergence_study(cfg)} == {1.0}


def test_convergence_sweep_and_csv():
    cfg = _config(n1=30, n2=40, n2_sweep=(5, 40))
    path = convergence_study(cfg)
    assert [p.n2 for p in path] == list(range(5, 41))
    text = convergence_csv(path)
    assert text.splitlines()[0] == "n2,theta_hat,se"
    assert len(text.splitlines()) == 37
    assert convergence_study(cfg) == path


def test_characteristics_are_rates():
    oc = operating_characteristics(_config(methods=("wp", "wilcoxon", "z0"), replicates=300))
    for m in oc.methods.values():
        assert 0.0 <= m.rejection_rate <= 1.0
        assert m.rejection_tolerance == pytest.approx(3 * math.sqrt(0.05 * 0.95 / 300))
    wp = oc.methods["wp"]
    assert 0.0 <= wp.coverage <= 1.0
    assert wp.target == 0.5


def test_worker_count_does_not_change_results():
    cfg = dict(methods=("wp", "adjusted", "stratified"), rho=0.5, replicates=120)
    one = operating_characteristics(SimConfig.identical_strata(2, **{**dict(placebo=N01, active=N01, n1=30, n2=30,
                                                                            seed=11), **cfg}))
    three = operating_characteristics(SimConfig.identical_strata(2, **{**dict(placebo=N01, active=N01, n1=30, n2=30,
                                                                              seed=11, workers=3), **cfg}))
    assert one.to_json() == three.to_json()


def test_power_under_strong_alternative():
    cfg = _config(active=DistSpec.normal(1, 1), n1=100, n2=100, replicates=300)
    assert operating_characteristics(cfg).methods["wp"].rejection_rate > 0.99


def test_standard_error_calibration_at_large_n():
    oc = operating_characteristics(_config(n1=500, n2=500, replicates=4000, seed=21))
    assert 0.95 <= oc.methods["wp"].sd_se_ratio <= 1.05


def test_json_is_deterministic_and_round_trips():
    oc = operating_characteristics(_config(replicates=50))
    text = oc.to_json()
    assert text == operating_characteristics(_config(replicates=50)).to_json()
    back = json.loads(text)
    assert back["methods"]["wp"]["mean_estimate"] == oc.methods["wp"].mean_estimate
    assert back["seed_lineage"]["root_seed"] == 7


def test_dumps_encodes_infinity_as_string():
    assert json.loads(dumps({"k": math.inf, "n": math.nan, "a": np.float64(0.1)})) == {"k": "inf", "n": None, "a": 0.1}
