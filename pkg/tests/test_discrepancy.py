import pytest
from hypothesis import given, strategies as st

from menuabc.discrepancy import (DiscrepancyConfig, MissingConditionError, discrepancy,
                                 split_condition_discrepancy, tct_discrepancy)
from menuabc.simulator import BehaviorSummary, ConditionStats


def summary(**conds):
    return BehaviorSummary({k: ConditionStats(100, m, s, 2.0, None, None)
                            for k, (m, s) in conds.items()})


def test_hand_case():
    obs, sim = summary(all=(920.0, 380.0)), summary(all=(930.0, 400.0))
    assert tct_discrepancy(obs, sim, DiscrepancyConfig(1e-6, 1e-6)) == pytest.approx(1.2e-4, abs=1e-12)


def test_identical_is_zero():
    s = summary(all=(920.0, 380.0), pre=(1000.0, 300.0), abs=(600.0, 200.0))
    assert discrepancy(s, s) == 0.0
    assert split_condition_discrepancy(s, s) == 0.0


def test_doubling_a_doubles_mean_term():
    obs, sim = summary(all=(900.0, 380.0)), summary(all=(950.0, 380.0))
    d1 = tct_discrepancy(obs, sim, DiscrepancyConfig(1e-6, 1e-6))
    d2 = tct_discrepancy(obs, sim, DiscrepancyConfig(2e-6, 1e-6))
    assert d2 == 2 * d1


def test_split_average():
    # pre differs by 10 ms in the mean (1e-4), abs by 20 ms in the mean (4e-4)
    cfg = DiscrepancyConfig(1.0e-6, 0.0)
    obs = summary(pre=(1000.0, 300.0), abs=(600.0, 200.0))
    sim = summary(pre=(1010.0, 300.0), abs=(620.0, 200.0))
    assert split_condition_discrepancy(obs, sim, cfg) == pytest.approx(2.5e-4, abs=1e-15)
    cfg = DiscrepancyConfig(2e-6, 0.0)
    obs = summary(pre=(0.0, 0.0), abs=(0.0, 0.0))
    sim = summary(pre=(10.0, 0.0), abs=(10 * 2 ** 0.5, 0.0))
    assert split_condition_discrepancy(obs, sim, cfg) == pytest.approx(3e-4, rel=1e-12)


def test_split_symmetric():
    obs = summary(pre=(1000.0, 300.0), abs=(600.0, 200.0))
    a = summary(pre=(1050.0, 300.0), abs=(600.0, 200.0))
    b = summary(pre=(1000.0, 300.0), abs=(650.0, 200.0))
    cfg = DiscrepancyConfig(mode="split-conditions")
    assert discrepancy(obs, a, cfg) == discrepancy(obs, b, cfg)


def test_split_equals_aggregate_when_conditions_match():
    obs = summary(all=(900.0, 300.0), pre=(900.0, 300.0), abs=(900.0, 300.0))
    sim = summary(all=(950.0, 320.0), pre=(950.0, 320.0), abs=(950.0, 320.0))
    agg = discrepancy(obs, sim, DiscrepancyConfig(mode="aggregate"))
    split = discrepancy(obs, sim, DiscrepancyConfig(mode="split-conditions"))
    assert agg == split


def test_missing_condition():
    with pytest.raises(MissingConditionError):
        split_condition_discrepancy(summary(pre=(1.0, 1.0)), summary(pre=(1.0, 1.0)))


def test_config_validation():
    with pytest.raises(ValueError):
        DiscrepancyConfig(a=-1.0)
    with pytest.raises(ValueError):
        DiscrepancyConfig(mode="median")


@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(0, 1e4), st.floats(0, 1e4))
def test_non_negative_and_identity(m1, s1, m2, s2):
    obs, sim = summary(all=(m1, s1)), summary(all=(m2, s2))
    d = tct_discrepancy(obs, sim)
    assert d >= 0.0
    if m1 == m2 and s1 == s2:
        assert d == 0.0
    elif abs(m1 - m2) > 1e-100 or abs(s1 - s2) > 1e-290:  # smaller gaps underflow
        assert d > 0.0
