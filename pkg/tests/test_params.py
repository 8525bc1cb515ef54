import math

import pytest
from hypothesis import given, settings, strategies as st

from lepra_oc.params import (
    FIELD_NAMES,
    SIMULATION_OVERRIDES,
    CostWeights,
    Params,
    get_preset,
    load_params,
    params_from_config,
    params_to_config,
    save_params,
    simulation_params,
    table_params,
)


def test_table_defaults():
    p = table_params()
    assert p.V1 == 25 and p.beta == 3.44 and p.mu_I10 == 16 and p.C_min == 0.0
    assert p.tau == 30 and p.tau_d == 30
    assert p.mu_d == pytest.approx(1 + 3.81 + 7.1)
    assert p.k_d == pytest.approx(0.26 + 0.99 + 1.85)


def test_simulation_overrides_applied():
    p = simulation_params()
    for k, v in SIMULATION_OVERRIDES.items():
        assert getattr(p, k) == v
    assert p.V1 == 1200 and p.omega == 20.9 and p.alpha_I10 == 0.5282
    assert p.k12 == table_params().k12


def test_get_preset_overrides_and_unknown():
    assert get_preset("table", {"C_min": 0.5}).C_min == 0.5
    with pytest.raises(KeyError, match="bogus"):
        get_preset("bogus")
    with pytest.raises((KeyError, ValueError, TypeError)):
        get_preset("table", {"nope": 1.0})


@pytest.mark.parametrize("field,value", [("V1", 0.0), ("beta", -1.0), ("mu_Ig", 0.0), ("tau", math.nan)])
def test_invalid_values_rejected(field, value):
    with pytest.raises(ValueError):
        table_params().replace(**{field: value})


def test_cost_weights():
    w = CostWeights()
    assert (w.P, w.Q, w.R) == (1.5, 1.5, 1.5)
    assert CostWeights(1, 2, 3).for_drug(2) == 3
    with pytest.raises(ValueError):
        CostWeights(0.0, 1.0, 1.0)


def test_config_round_trip(tmp_path):
    p = simulation_params().replace(C_min=0.123456789012345)
    path = tmp_path / "p.ini"
    save_params(p, path)
    assert load_params(path) == p
    cfg = params_to_config(p)
    assert set(cfg["params"]) == FIELD_NAMES
    assert params_from_config(cfg) == p


def test_partial_config_uses_base(tmp_path):
    path = tmp_path / "p.ini"
    path.write_text("[params]\nbeta = 0.5\n")
    p = load_params(path, base=simulation_params())
    assert p.beta == 0.5 and p.V1 == 1200


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1e6, allow_nan=False), st.sampled_from(sorted(FIELD_NAMES)))
def test_round_trip_any_value(value, name):
    p = table_params().replace(**{name: value})
    assert Params.from_mapping(p.to_dict()) == p
    assert params_from_config(params_to_config(p)) == p
