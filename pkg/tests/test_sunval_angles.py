from datetime import datetime, timedelta, timezone

import pytest

import sunval_ephemeris as eph
from sunval_angles import SunPosition, normalize_degrees
from sunval_errors import DomainError


@pytest.mark.parametrize("angle, expected", [(0.0, 0.0), (360.0, 0.0), (-90.0, 270.0), (725.0, 5.0), (-1e-18, 0.0)])
def test_normalize_degrees(angle, expected):
    assert normalize_degrees(angle) == pytest.approx(expected)
    assert 0.0 <= normalize_degrees(angle) < 360.0


def test_sun_position_normalizes_and_validates():
    sun = SunPosition(-30.0, 45)
    assert sun.azimuth_deg == 330.0
    assert isinstance(sun.altitude_deg, float)
    assert sun.complete
    assert not SunPosition(None, 20.0).complete
    assert not SunPosition(120.0).complete
    for bad in ({"azimuth_deg": float("nan")}, {"azimuth_deg": float("inf")},
                {"altitude_deg": -90.0}, {"altitude_deg": 90.5}):
        with pytest.raises(DomainError):
            SunPosition(**bad)


def test_ephemeris_returns_shared_sun_position():
    ctx = eph.ClaimedContext(datetime(2017, 6, 15, 16, 50, tzinfo=timezone(timedelta(hours=8))), 34.26, 117.19)
    assert type(eph.sun_position_from_context(ctx)) is SunPosition
