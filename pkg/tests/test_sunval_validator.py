import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sunval_errors import DomainError, ValidationImpossibleError
from sunval_angles import SunPosition
from sunval_validator import (
    RuleMode,
    Thresholds,
    altitude_distance,
    azimuth_distance,
    position_distance,
    validate,
    validate_altitude_range,
)

angles = st.floats(min_value=0.0, max_value=359.999)
altitudes = st.floats(min_value=0.5, max_value=89.5)


def test_altitude_distance_examples():
    assert altitude_distance(48.0, 48.0) == 0.0
    assert altitude_distance(52.0, 29.1) == pytest.approx(22.9)
    assert altitude_distance(10.0, 13.2) == pytest.approx(3.2)
    with pytest.raises(DomainError):
        altitude_distance(float("nan"), 10.0)


def test_azimuth_distance_is_circular():
    assert azimuth_distance(359.0, 1.0) == pytest.approx(2.0)
    assert azimuth_distance(10.0, 190.0) == pytest.approx(180.0)
    assert azimuth_distance(180.0, 90.0) == pytest.approx(90.0)


def test_position_distance():
    assert position_distance(3.0, 4.0) == 5.0
    assert position_distance(0.0, 7.5) == 7.5
    with pytest.raises(DomainError):
        position_distance(-1.0, 2.0)


def test_combined_rule_rejects_position_overrun():
    d_a = math.sqrt(9.5 ** 2 - 4.0 ** 2)
    v = validate(SunPosition(180.0 + d_a, 44.0), SunPosition(180.0, 40.0))
    assert v.d_h == pytest.approx(4.0)
    assert v.d_p == pytest.approx(9.5)
    assert not v.consistent
    assert v.rule_applied is RuleMode.COMBINED


def test_identical_positions_are_consistent():
    v = validate(SunPosition(200.0, 30.0), SunPosition(200.0, 30.0))
    assert (v.d_h, v.d_A, v.d_p, v.consistent) == (0.0, 0.0, 0.0, True)
    assert v.as_dict() == {"d_h": 0.0, "d_A": 0.0, "d_p": 0.0, "consistent": True, "rule_applied": "combined"}


def test_altitude_only_mode():
    v = validate(SunPosition(None, 52.0), SunPosition(270.0, 29.1))
    assert v.rule_applied is RuleMode.ALTITUDE_ONLY
    assert v.d_A is None and v.d_p is None
    assert v.d_h == pytest.approx(22.9)
    assert not v.consistent


def test_azimuth_only_mode():
    claimed = SunPosition(180.0, 40.0)
    near = validate(SunPosition(175.0, None), claimed)
    assert near.rule_applied is RuleMode.AZIMUTH_ONLY
    assert near.d_h is None and near.d_A == pytest.approx(5.0)
    assert near.consistent
    assert not validate(SunPosition(170.0, None), claimed).consistent
    strict = Thresholds(azimuth_threshold_deg=3.0)
    assert not validate(SunPosition(175.0, None), claimed, strict).consistent


def test_azimuth_study_adds_third_threshold():
    shadow, claimed = SunPosition(184.0, 40.0), SunPosition(180.0, 40.0)
    assert validate(shadow, claimed).consistent
    v = validate(shadow, claimed, Thresholds(azimuth_threshold_deg=3.0))
    assert v.rule_applied is RuleMode.AZIMUTH_STUDY
    assert not v.consistent


def test_validation_impossible():
    with pytest.raises(ValidationImpossibleError):
        validate(SunPosition(), SunPosition(180.0, 40.0))
    with pytest.raises(ValidationImpossibleError):
        validate(SunPosition(180.0, 40.0), SunPosition(180.0, None))
    with pytest.raises(DomainError):
        validate(SunPosition(180.0, -5.0), SunPosition(180.0, 40.0))


def test_thresholds_must_be_positive():
    with pytest.raises(DomainError):
        Thresholds(altitude_threshold_deg=0.0)
    with pytest.raises(DomainError):
        Thresholds(position_threshold_deg=-1.0)
    with pytest.raises(DomainError):
        Thresholds(azimuth_threshold_deg=0.0)


def test_altitude_range_case():
    v = validate_altitude_range((58.0, 52.0), SunPosition(275.0, 29.1))
    assert v.d_h == pytest.approx(22.9)
    assert not v.consistent
    assert v.rule_applied is RuleMode.ALTITUDE_ONLY
    inside = validate_altitude_range((52.0, 58.0), SunPosition(275.0, 55.0))
    assert inside.d_h == 0.0 and inside.consistent
    with pytest.raises(DomainError):
        validate_altitude_range((0.0, 10.0), SunPosition(275.0, 5.0))


@given(a=angles, b=angles, c=angles)
def test_azimuth_distance_is_a_metric(a, b, c):
    ab = azimuth_distance(a, b)
    assert 0.0 <= ab <= 180.0
    assert ab == pytest.approx(azimuth_distance(b, a), abs=1e-9)
    assert ab <= azimuth_distance(a, c) + azimuth_distance(c, b) + 1e-9


@given(
    a_s=angles, h_s=altitudes, a_m=angles, h_m=st.floats(min_value=-30.0, max_value=89.5),
    th_h=st.floats(min_value=0.1, max_value=30.0), th_p=st.floats(min_value=0.1, max_value=30.0),
    grow=st.floats(min_value=1.0, max_value=3.0),
)
def test_loosening_thresholds_never_rejects(a_s, h_s, a_m, h_m, th_h, th_p, grow):
    shadow, claimed = SunPosition(a_s, h_s), SunPosition(a_m, h_m)
    tight = validate(shadow, claimed, Thresholds(th_h, th_p))
    loose = validate(shadow, claimed, Thresholds(th_h * grow, th_p * grow))
    if tight.consistent:
        assert loose.consistent
    assert tight.d_p >= tight.d_h
    assert tight.d_p >= tight.d_A
