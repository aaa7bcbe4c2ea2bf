"""Spherical-earth geodesy and small-area planar geometry.

Angles are radians throughout. Bearings are measured clockwise from true
north and normalized to ``[0, 2*pi)``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

EARTH_RADIUS_M = 6371008.8
TWO_PI = 2.0 * math.pi

#: Maximum distance from the frame origin for which ``to_local`` is trusted.
LOCAL_FRAME_LIMIT_M = 5000.0


class GeoError(ValueError):
    pass


class GeoPoint(NamedTuple):
    """WGS84 position in radians."""

    lat: float
    lon: float

    @classmethod
    def from_degrees(cls, lat_deg: float, lon_deg: float) -> "GeoPoint":
        return make_point(math.radians(lat_deg), math.radians(lon_deg))

    @property
    def lat_deg(self) -> float:
        return math.degrees(self.lat)

    @property
    def lon_deg(self) -> float:
        return math.degrees(self.lon)


class LocalVec(NamedTuple):
    """East/north offset in meters from some frame origin."""

    east: float
    north: float


def wrap_lon(lon: float) -> float:
    """Normalize a longitude into ``[-pi, pi)``."""
    x = math.fmod(lon + math.pi, TWO_PI)
    if x < 0.0:
        x += TWO_PI
    x -= math.pi
    if x >= math.pi:
        x -= TWO_PI
    return x


def make_point(lat: float, lon: float) -> GeoPoint:
    if not (math.isfinite(lat) and math.isfinite(lon)):
        raise GeoError("non-finite coordinate")
    if not -math.pi / 2 <= lat <= math.pi / 2:
        raise GeoError(f"latitude {lat!r} rad out of range")
    return GeoPoint(lat, wrap_lon(lon))


def normalize_bearing(theta: float) -> float:
    """Wrap an angle into ``[0, 2*pi)``."""
    x = math.fmod(theta, TWO_PI)
    if x < 0.0:
        x += TWO_PI
    if x >= TWO_PI:
        x -= TWO_PI
    return x


def angle_diff(a: float, b: float) -> float:
    """Signed residual ``a - b`` wrapped into ``[-pi, pi)``.

    Positive when ``a`` lies clockwise of ``b``.
    """
    x = math.fmod(a - b + math.pi, TWO_PI)
    if x < 0.0:
        x += TWO_PI
    x -= math.pi
    if x >= math.pi:
        x -= TWO_PI
    return x


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on the mean-radius sphere."""
    dlat = b.lat - a.lat
    dlon = b.lon - a.lon
    h = math.sin(dlat / 2) ** 2 + math.cos(a.lat) * math.cos(b.lat) * math.sin(dlon / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Forward azimuth at ``a`` toward ``b``."""
    if a.lat == b.lat and wrap_lon(b.lon - a.lon) == 0.0:
        raise GeoError("degenerate bearing")
    dlon = b.lon - a.lon
    y = math.sin(dlon) * math.cos(b.lat)
    x = math.cos(a.lat) * math.sin(b.lat) - math.sin(a.lat) * math.cos(b.lat) * math.cos(dlon)
    return normalize_bearing(math.atan2(y, x))


def to_local(origin: GeoPoint, p: GeoPoint) -> LocalVec:
    """Equirectangular projection of ``p`` around ``origin``.

    Only accurate within ``LOCAL_FRAME_LIMIT_M`` of the origin; callers are
    responsible for staying inside that bound.
    """
    dlon = wrap_lon(p.lon - origin.lon)
    return LocalVec(
        EARTH_RADIUS_M * dlon * math.cos(origin.lat),
        EARTH_RADIUS_M * (p.lat - origin.lat),
    )


def from_local(origin: GeoPoint, v: LocalVec) -> GeoPoint:
    """Inverse of :func:`to_local`."""
    lat = origin.lat + v.north / EARTH_RADIUS_M
    lon = origin.lon + v.east / (EARTH_RADIUS_M * math.cos(origin.lat))
    return make_point(lat, lon)


def local_bearing(v: LocalVec) -> float:
    """Bearing of a planar direction vector (east, north)."""
    return normalize_bearing(math.atan2(v.east, v.north))


def project_point_to_segment(p: LocalVec, s0: LocalVec, s1: LocalVec) -> tuple[LocalVec, float, float]:
    """Closest point on segment ``s0 -> s1`` to ``p``.

    Returns ``(closest, t, dist)`` with ``t`` clamped to ``[0, 1]``.
    """
    dx = s1.east - s0.east
    dy = s1.north - s0.north
    len2 = dx * dx + dy * dy
    if len2 == 0.0:
        raise GeoError("zero-length segment")
    t = ((p.east - s0.east) * dx + (p.north - s0.north) * dy) / len2
    if t <= 0.0:
        t, cx, cy = 0.0, s0.east, s0.north
    elif t >= 1.0:
        t, cx, cy = 1.0, s1.east, s1.north
    else:
        cx = s0.east + t * dx
        cy = s0.north + t * dy
    ex = p.east - cx
    ey = p.north - cy
    return LocalVec(cx, cy), t, math.sqrt(ex * ex + ey * ey)


def signed_offset(p: LocalVec, s0: LocalVec, s1: LocalVec) -> float:
    """Perpendicular offset of ``p`` times the segment length.

    Positive when ``p`` is right of the direction of travel.
    """
    dx = s1.east - s0.east
    dy = s1.north - s0.north
    return dy * (p.east - s0.east) - dx * (p.north - s0.north)
