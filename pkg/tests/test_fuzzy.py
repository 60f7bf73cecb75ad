import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcsched.fuzzy import (DEFAULT_RULES, FuzzyConfig, MembershipFunction, decide,
                           explain, fuzzify, infer)
from oracles import brute_centroid

CFG = FuzzyConfig()
OUT = [(m.a, m.b, m.c, m.d) for m in CFG.output]

# an input where exactly one label of each variable has full membership
ACC_PEAK = {"Fast": -1.0, "Medium": -0.4, "Slow": -0.1, "Negative": 1.0}
PRED_PEAK = {"Ultra": -1.0, "Short": 0.2, "Normal": 1.0}

# rule table as published: (acceleration, prediction) -> risk label
TABLE = {
    ("Fast", "Ultra"): "High", ("Fast", "Short"): "High", ("Fast", "Normal"): "Low",
    ("Medium", "Ultra"): "High", ("Medium", "Short"): "Low", ("Medium", "Normal"): "Low",
    ("Slow", "Ultra"): "High", ("Slow", "Short"): "Low", ("Slow", "Normal"): "Low",
    ("Negative", "Ultra"): "High", ("Negative", "Short"): "Low",
    ("Negative", "Normal"): "Low",
}


def test_rule_base_matches_table():
    assert DEFAULT_RULES == TABLE


def test_membership_shapes():
    fast = CFG.acceleration[0]
    assert fast.shape == "trapezoid" and fast.degree(-1.0) == 1.0
    assert fast.degree(-0.5) == pytest.approx(0.5)
    assert fast.degree(-0.4) == 0.0
    medium = CFG.acceleration[1]
    assert medium.shape == "triangle" and medium.params == [-0.7, -0.4, -0.1]
    assert medium.degree(-0.55) == pytest.approx(0.5)


@pytest.mark.parametrize("acc", list(ACC_PEAK))
@pytest.mark.parametrize("pred", list(PRED_PEAK))
def test_every_rule_cell(acc, pred):
    inf = explain(ACC_PEAK[acc], PRED_PEAK[pred])
    assert inf.acceleration[acc] == 1.0 and sum(inf.acceleration.values()) == 1.0
    assert inf.prediction[pred] == 1.0 and sum(inf.prediction.values()) == 1.0
    fired = {k for k, v in inf.firing.items() if v > 0}
    assert fired == {(acc, pred)}
    want = TABLE[(acc, pred)]
    assert inf.output_strength[want] == 1.0
    assert (inf.risk > 0.5) == (want == "High")


def test_corner_values():
    assert infer(-1.0, -1.0) > 0.5
    assert infer(1.0, 1.0) < 0.5
    # both corners are mirror images of each other on [0, 1]
    assert infer(-1.0, -1.0) + infer(1.0, 1.0) == pytest.approx(1.0)


def test_inputs_are_clamped():
    assert infer(-7.0, -3.0) == infer(-1.0, -1.0)


def test_threshold_is_strict():
    assert not decide(0.5)
    assert decide(0.5000001)
    assert decide(0.7, threshold=0.6) and not decide(0.6, threshold=0.6)


@pytest.mark.parametrize("s", [1.0, 0.5, 0.01])
def test_single_rule_centroid(s):
    # only (Fast, Ultra) fires, with strength s
    assert CFG.centroid((0.0, s)) == pytest.approx(brute_centroid(OUT, (0.0, s)), abs=1e-3)
    assert CFG.centroid((s, 0.0)) == pytest.approx(brute_centroid(OUT, (s, 0.0)), abs=1e-3)


def test_nothing_fires_gives_zero():
    assert CFG.centroid((0.0, 0.0)) == 0.0


@settings(max_examples=200)
@given(st.one_of(st.just(0.0), st.floats(1e-9, 1)), st.one_of(st.just(0.0), st.floats(1e-9, 1)))
def test_centroid_matches_dense_integration(lo, hi):
    if lo == 0 and hi == 0:
        return
    assert CFG.centroid((lo, hi)) == pytest.approx(brute_centroid(OUT, (lo, hi)), abs=1e-3)


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_infer_agrees_with_explain(a, p):
    r = infer(a, p)
    assert 0.0 <= r <= 1.0
    assert r == pytest.approx(explain(a, p).risk, abs=1e-12)


@given(st.floats(-1, 1))
def test_scalar_and_array_membership_agree(x):
    for m in CFG.acceleration + CFG.prediction + CFG.output:
        assert m.degree(x) == pytest.approx(float(m.degree(np.array([x]))[0]), abs=1e-12)


@given(st.floats(-1, 1))
def test_fuzzify_degrees_in_unit_interval(x):
    for v in fuzzify(x, CFG.acceleration).values():
        assert 0.0 <= v <= 1.0


def test_rejects_bad_threshold_and_partial_rules():
    with pytest.raises(ValueError):
        FuzzyConfig(threshold=1.0)
    rules = dict(TABLE)
    rules.pop(("Slow", "Short"))
    with pytest.raises(ValueError):
        FuzzyConfig(rules=rules)
    with pytest.raises(ValueError):
        FuzzyConfig(rules={**TABLE, ("Fast", "Ultra"): "Extreme"})


def test_custom_sets():
    m = MembershipFunction.triangle("T", 0, 1, 2)
    assert m.degree(1.0) == 1.0 and m.degree(0.5) == 0.5 and m.degree(2.5) == 0.0
