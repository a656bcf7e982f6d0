import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cournotmfe import (
    ConfigError,
    InvalidParamsError,
    ModelParams,
    chain_stationary,
    inverse_demand,
    parse_params_text,
    validate,
)
from cournotmfe.params import params_from_dict, require_valid

from conftest import draw_params


def test_boundary_impatience_is_warning_only(baseline):
    report = validate(baseline)
    assert report.usable
    assert not report.admissible
    assert [v.name for v in report.warnings] == ["impatience"]
    require_valid(baseline)  # must not raise


def test_clean_params_pass_everything():
    params = ModelParams(
        delta=0.1, rho=1.0, kappa=1.0, c=0.1, alpha=0.5,
        sigma1=0.1, sigma2=0.1, p1=0.2, p2=0.2,
        varphi1=2.0, varphi2=2.0, zeta1=1.0, zeta2=1.0,
    )
    assert validate(params).admissible


def test_price_level_boundary_flagged(baseline):
    params = baseline.replace(varphi2=baseline.rho + baseline.delta)
    report = validate(params)
    assert any(v.name == "price_level" for v in report.errors)
    with pytest.raises(InvalidParamsError):
        require_valid(params)


def test_strict_impatience_violation_still_usable(baseline):
    # reference elasticity grids use sigma = 0.3 with rho = 0.08
    report = validate(baseline.replace(sigma2=0.3))
    assert report.usable
    assert any("strictly" in w.message for w in report.warnings)


def test_positivity_and_ranges():
    base = dict(
        delta=0.1, rho=1.0, kappa=1.0, c=0.1, alpha=0.5,
        sigma1=0.1, sigma2=0.1, p1=0.2, p2=0.2,
        varphi1=2.0, varphi2=2.0, zeta1=1.0, zeta2=1.0,
    )
    for key, bad in (
        ("delta", -1.0), ("rho", 0.0), ("kappa", -2.0), ("c", 0.0),
        ("alpha", 1.0), ("sigma1", 0.0), ("p1", 1.0), ("p2", 0.0),
        ("varphi1", -3.0), ("zeta2", 0.0),
    ):
        report = validate(ModelParams(**{**base, key: bad}))
        assert not report.usable, key
        assert any(v.name == key for v in report.errors), key


def test_p_range_message_notes_model_convention():
    base = ModelParams(
        delta=0.1, rho=1.0, kappa=1.0, c=0.1, alpha=0.5,
        sigma1=0.1, sigma2=0.1, p1=1.5, p2=0.2,
        varphi1=2.0, varphi2=2.0, zeta1=1.0, zeta2=1.0,
    )
    (err,) = [v for v in validate(base).errors if v.name == "p1"]
    assert "model-specific" in err.message


def test_validate_is_pure(baseline):
    r1 = validate(baseline)
    r2 = validate(baseline)
    assert r1 == r2


def test_inverse_demand_values(baseline):
    p = baseline.replace(varphi1=10.0, zeta1=1.0)
    assert inverse_demand(p, (4.0, 1.0), regime=1) == pytest.approx(10.5, abs=1e-14)
    p = baseline.replace(varphi2=5.0, zeta2=1.0)
    assert inverse_demand(p, (4.0, 1.0), regime=2) == pytest.approx(6.0, abs=1e-14)
    pair = inverse_demand(baseline, (4.0, 1.0))
    assert pair == (10.5, 6.0)


def test_inverse_demand_limit_and_monotone(baseline):
    qs = np.geomspace(1e-3, 1e9, 200)
    vals = [inverse_demand(baseline, (q, 1.0), regime=1) for q in qs]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(baseline.varphi1, rel=1e-4)


def test_inverse_demand_domain_error(baseline):
    with pytest.raises(ValueError):
        inverse_demand(baseline, (0.0, 1.0))
    with pytest.raises(ValueError):
        inverse_demand(baseline, (-1.0, 1.0), regime=1)


def test_chain_stationary(baseline):
    law = chain_stationary(baseline.replace(p1=0.3, p2=0.3))
    assert law.pi1 == law.pi2 == 0.5
    law = chain_stationary(baseline)  # p1 = 1/10, p2 = 1/5
    assert law.pi1 == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert law.pi2 == pytest.approx(1.0 / 3.0, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_chain_balance_property(seed):
    params = draw_params(np.random.default_rng(seed))
    law = chain_stationary(params)
    assert law.pi1 + law.pi2 == pytest.approx(1.0, abs=1e-15)
    # stationarity pi P = 0 for the two-state generator
    assert law.pi1 * params.p1 == pytest.approx(law.pi2 * params.p2, rel=1e-12)


CONFIG_JSON = """
{"delta": 0.1, "rho": 0.08, "kappa": 10, "c": 0.1, "alpha": 0.5,
 "sigma1": 0.2, "sigma2": 0.15, "p1": 0.1, "p2": 0.2,
 "varphi1": 10, "varphi2": 5, "zeta1": 1, "zeta2": 1}
"""

CONFIG_FLAT = """
# benchmark parameters
delta 0.1
rho = 0.08
kappa: 10
c 0.1
alpha 0.5
sigma1 0.2
sigma2 0.15
p1 0.1
p2 0.2
varphi1 10
varphi2 5
zeta1 1
zeta2 1
"""


def test_config_json_and_flat_agree(baseline):
    assert parse_params_text(CONFIG_JSON) == baseline
    assert parse_params_text(CONFIG_FLAT) == baseline


def test_config_errors():
    with pytest.raises(ConfigError, match="missing config keys"):
        params_from_dict({"delta": 0.1})
    with pytest.raises(ConfigError, match="unknown config keys"):
        parse_params_text(CONFIG_JSON.replace('"zeta2": 1', '"zeta2": 1, "zeta3": 1'))
    with pytest.raises(ConfigError, match="duplicate"):
        parse_params_text(CONFIG_FLAT + "\ndelta 0.2\n")
    with pytest.raises(ConfigError, match="not a number"):
        params_from_dict(
            dict(delta="x", rho=1, kappa=1, c=1, alpha=0.5, sigma1=1, sigma2=1,
                 p1=0.1, p2=0.1, varphi1=2, varphi2=2, zeta1=1, zeta2=1)
        )
