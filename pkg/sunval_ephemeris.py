#!/usr/bin/env python3
"""
sunval_ephemeris.py - Sun position implied by a claimed capture time and GPS location.

Low-precision almanac: three-harmonic equation of time, cosine declination,
solar time from the clock and the standard meridian of the claimed UTC offset,
then the usual equatorial -> horizontal conversion. Longitudes are
east-positive; the standard meridian is 15 degrees per hour of UTC offset.
No timezone database is consulted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import Union

from sunval_errors import ContextError, DomainError
from sunval_angles import SunPosition, normalize_degrees

log = logging.getLogger(__name__)

MAX_DECLINATION_DEG = 23.44
MIN_UTC_OFFSET_H = -12.0
MAX_UTC_OFFSET_H = 14.0
MINUTES_PER_DEGREE = 4.0


def _check_day(n: int) -> int:
    if int(n) != n or not (0 <= n <= 365):
        raise DomainError(f"day_of_year must be an integer in range [0, 365], got {n}")
    return int(n)


def day_of_year(ts: Union[datetime, date]) -> int:
    """Days since January 1st of the timestamp's own calendar year (Jan 1 -> 0)."""
    return ts.timetuple().tm_yday - 1


def equation_of_time(n: int) -> float:
    """Minutes, solar minus mean clock time."""
    b = math.radians(360.0 * (_check_day(n) - 81) / 364.0)
    return 9.87 * math.sin(2 * b) - 7.53 * math.cos(b) - 1.5 * math.sin(b)


def declination(n: int) -> float:
    return -MAX_DECLINATION_DEG * math.cos(math.radians(360.0 * (_check_day(n) + 10) / 365.0))


def hour_angle(solar_time_h: float) -> float:
    return 15.0 * (solar_time_h - 12.0)


# ============================================================================
# CLAIMED CONTEXT
# ============================================================================

@dataclass(frozen=True)
class ClaimedContext:
    """Claimed capture time (aware datetime) and GPS position, degrees, east-positive."""

    timestamp: datetime
    latitude_deg: float
    longitude_deg: float

    def __post_init__(self):
        if not isinstance(self.timestamp, datetime):
            raise ContextError(f"timestamp must be a datetime, got {type(self.timestamp).__name__}")
        offset = self.timestamp.utcoffset()
        if offset is None:
            raise ContextError(f"timestamp {self.timestamp.isoformat()} has no UTC offset")
        hours = offset.total_seconds() / 3600.0
        if not (MIN_UTC_OFFSET_H <= hours <= MAX_UTC_OFFSET_H):
            raise ContextError(f"UTC offset must be in range [-12h, +14h], got {hours:+.2f}h")
        if not (-90.0 <= self.latitude_deg <= 90.0):
            raise DomainError(f"latitude must be in range [-90, 90], got {self.latitude_deg}")
        if not (-180.0 < self.longitude_deg <= 180.0):
            raise DomainError(f"longitude must be in range (-180, 180], got {self.longitude_deg}")

    @classmethod
    def parse(cls, text: str, latitude_deg: float, longitude_deg: float) -> "ClaimedContext":
        """ISO 8601 timestamp with a mandatory numeric offset, e.g. 2017-06-15T16:50:00+08:00."""
        try:
            ts = datetime.fromisoformat(text.strip())
        except (AttributeError, ValueError) as exc:
            raise ContextError(f"unparseable timestamp {text!r}") from exc
        if ts.tzinfo is None:
            raise ContextError(f"timestamp {text!r} has no UTC offset")
        return cls(ts, float(latitude_deg), float(longitude_deg))

    @property
    def utc_offset_h(self) -> float:
        return self.timestamp.utcoffset().total_seconds() / 3600.0

    @property
    def standard_meridian_deg(self) -> float:
        return 15.0 * self.utc_offset_h

    @property
    def day_of_year(self) -> int:
        return day_of_year(self.timestamp)

    @property
    def clock_hours(self) -> float:
        ts = self.timestamp
        return ts.hour + ts.minute / 60.0 + ts.second / 3600.0 + ts.microsecond / 3.6e9

    def with_time(self, hours: float) -> "ClaimedContext":
        """Same date, offset and place; clock set to `hours` after local midnight."""
        if not (0.0 <= hours < 24.0):
            raise DomainError(f"clock hours must be in range [0, 24), got {hours}")
        midnight = self.timestamp.replace(hour=0, minute=0, second=0, microsecond=0)
        return ClaimedContext(midnight + timedelta(hours=hours), self.latitude_deg, self.longitude_deg)

    def with_date(self, day: date) -> "ClaimedContext":
        ts = self.timestamp.replace(year=day.year, month=day.month, day=day.day)
        return ClaimedContext(ts, self.latitude_deg, self.longitude_deg)

    def with_latitude(self, latitude_deg: float) -> "ClaimedContext":
        return ClaimedContext(self.timestamp, latitude_deg, self.longitude_deg)

    def shifted(self, delta: timedelta) -> "ClaimedContext":
        """Clock moved by delta; the claimed UTC offset is kept."""
        return ClaimedContext(self.timestamp + delta, self.latitude_deg, self.longitude_deg)


@dataclass(frozen=True)
class SolarAngles:
    solar_time_h: float
    hour_angle_deg: float
    declination_deg: float
    equation_of_time_min: float


def solar_time(ctx: ClaimedContext) -> float:
    """Hours. Not wrapped into [0, 24)."""
    et = equation_of_time(ctx.day_of_year)
    correction_min = et + MINUTES_PER_DEGREE * (ctx.longitude_deg - ctx.standard_meridian_deg)
    return ctx.clock_hours + correction_min / 60.0


def solar_angles(ctx: ClaimedContext) -> SolarAngles:
    n = ctx.day_of_year
    t_s = solar_time(ctx)
    return SolarAngles(
        solar_time_h=t_s,
        hour_angle_deg=hour_angle(t_s),
        declination_deg=declination(n),
        equation_of_time_min=equation_of_time(n),
    )


def horizontal_coordinates(latitude_deg: float, declination_deg: float, hour_angle_deg: float) -> SunPosition:
    """North-clockwise azimuth and altitude for a given latitude, declination and hour angle."""
    phi = math.radians(latitude_deg)
    dec = math.radians(declination_deg)
    H = math.radians(hour_angle_deg)
    sin_h = math.sin(dec) * math.sin(phi) + math.cos(phi) * math.cos(dec) * math.cos(H)
    altitude = math.degrees(math.asin(max(-1.0, min(1.0, sin_h))))
    # south-referenced, westward positive
    south = math.degrees(math.atan2(math.sin(H), math.sin(phi) * math.cos(H) - math.cos(phi) * math.tan(dec)))
    return SunPosition(azimuth_deg=normalize_degrees(south + 180.0), altitude_deg=altitude)


def sun_position_from_context(ctx: ClaimedContext) -> SunPosition:
    angles = solar_angles(ctx)
    sun = horizontal_coordinates(ctx.latitude_deg, angles.declination_deg, angles.hour_angle_deg)
    log.debug(
        "%s at (%.4f, %.4f): t_s=%.4fh H=%.3f dec=%.3f -> A=%.3f h=%.3f",
        ctx.timestamp.isoformat(), ctx.latitude_deg, ctx.longitude_deg,
        angles.solar_time_h, angles.hour_angle_deg, angles.declination_deg,
        sun.azimuth_deg, sun.altitude_deg,
    )
    return sun


def solar_noon(ctx: ClaimedContext) -> datetime:
    """Local clock time (claimed offset) at which the hour angle is zero on the claimed date."""
    et = equation_of_time(ctx.day_of_year)
    hours = 12.0 - (et + MINUTES_PER_DEGREE * (ctx.longitude_deg - ctx.standard_meridian_deg)) / 60.0
    midnight = ctx.timestamp.replace(hour=0, minute=0, second=0, microsecond=0)
    return midnight + timedelta(hours=hours)
