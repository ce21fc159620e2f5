import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stretchcircuit.substrate import (
    AdhesionCalibration,
    Compatibility,
    SubstrateError,
    builtin_profiles,
    builtin_stiffness,
    compatibility,
    fit_adhesion_calibration,
    load_calibration,
    load_profiles,
    predict_adhesion,
)


def test_classification_examples():
    assert compatibility(0.18) is Compatibility.COMPATIBLE
    assert compatibility(0.05) is Compatibility.INCOMPATIBLE
    assert compatibility(0.50) is Compatibility.COMPATIBLE
    assert compatibility(0.1) is Compatibility.MARGINAL
    assert compatibility(0.17999) is Compatibility.MARGINAL
    with pytest.raises(SubstrateError):
        compatibility(-0.01)


@given(st.floats(0, 10), st.floats(0, 10))
def test_classification_monotone(a, b):
    lo, hi = sorted((a, b))
    assert compatibility(lo) <= compatibility(hi)


def test_builtin_profiles():
    profiles = {p.name: p for p in builtin_profiles()}
    assert set(profiles) == {"VHB", "DS10", "Slacker 1", "Slacker 1.5", "Slacker 2"}
    failure = {n: p.trace_failure_rate for n, p in profiles.items()}
    assert failure == {"DS10": 0.2, "Slacker 1": 0.2, "Slacker 1.5": 0.0, "Slacker 2": 0.0, "VHB": 0.0}
    for p in profiles.values():
        if p.trace_failure_rate == 0:
            assert p.compatibility is Compatibility.COMPATIBLE
        else:
            assert p.compatibility < Compatibility.COMPATIBLE
        assert "tack_n" in p.estimated


def test_builtin_stiffness_ratio():
    s = builtin_stiffness()
    assert s["Sil-Poxy"] == 430.0
    assert s["Sil-Poxy"] / s["DS10"] == pytest.approx(4.0)


def test_predict_adhesion():
    ident = AdhesionCalibration(1.0, 0.0, 1.0)
    assert predict_adhesion(0.3, ident) == pytest.approx(0.3)
    assert predict_adhesion(0.0, AdhesionCalibration(2.0, 0.05, 0.9)) == 0.05
    assert predict_adhesion(0.0, AdhesionCalibration(2.0, -0.05, 0.9)) == 0.0
    with pytest.raises(SubstrateError, match="digitize"):
        predict_adhesion(0.3, None)


@given(st.floats(0, 5), st.floats(-2, 2), st.floats(-1, 1))
def test_predict_adhesion_non_negative(tack, slope, intercept):
    assert predict_adhesion(tack, AdhesionCalibration(slope, intercept, 0.5)) >= 0


def test_fit_adhesion_calibration():
    cal = fit_adhesion_calibration([(0.1, 0.25), (0.2, 0.45), (0.4, 0.85)])
    assert cal.slope == pytest.approx(2.0)
    assert cal.intercept == pytest.approx(0.05)
    assert cal.r_squared == pytest.approx(1.0)


def test_load_profiles_empty_and_schema():
    assert load_profiles("") == []
    assert load_profiles('{"profiles": []}') == []
    ok = load_profiles(json.dumps({"profiles": [{"name": "X", "tack_n": 0.2}]}))
    assert ok[0].compatibility is Compatibility.COMPATIBLE
    with pytest.raises(SubstrateError, match=r"\$\.profiles\[0\]\.tack_n"):
        load_profiles(json.dumps({"profiles": [{"name": "X", "tack_n": -1}]}))
    with pytest.raises(SubstrateError):
        load_profiles(json.dumps({"profiles": [{"name": "X"}]}))
    with pytest.raises(SubstrateError):
        load_profiles("{")


def test_load_calibration():
    cal = load_calibration('{"slope_n_per_n": 1.5, "intercept_n": 0.01, "r_squared": 0.96}')
    assert cal == AdhesionCalibration(1.5, 0.01, 0.96)
    with pytest.raises(SubstrateError):
        load_calibration('{"slope_n_per_n": 1.5, "intercept_n": 0.01, "r_squared": 1.5}')
