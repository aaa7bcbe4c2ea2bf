import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_segment_distance
from streetlabel.geo import (
    EARTH_RADIUS_M,
    GeoError,
    GeoPoint,
    LocalVec,
    angle_diff,
    from_local,
    haversine_distance,
    initial_bearing,
    make_point,
    project_point_to_segment,
    to_local,
)

lats = st.floats(-math.pi / 2, math.pi / 2)
lons = st.floats(-math.pi, math.pi, exclude_max=True)
points = st.builds(GeoPoint, lats, lons)
angles = st.floats(-20.0, 20.0)


def deg(lat, lon):
    return GeoPoint.from_degrees(lat, lon)


class TestHaversine:
    def test_identity(self):
        assert haversine_distance(deg(0, 0), deg(0, 0)) == 0.0

    def test_equatorial_degree(self):
        # analytic arc length R * dlon
        assert EARTH_RADIUS_M * math.radians(1.0) == pytest.approx(111195.08, abs=0.01)
        assert haversine_distance(deg(0, 0), deg(0, 1)) == pytest.approx(111195.1, abs=0.1)

    def test_meridian_arc(self):
        assert haversine_distance(deg(10, 20), deg(11, 20)) == pytest.approx(EARTH_RADIUS_M * math.radians(1), rel=1e-12)

    @given(points, points)
    def test_symmetric_nonnegative(self, a, b):
        d = haversine_distance(a, b)
        assert d >= 0.0
        assert d == pytest.approx(haversine_distance(b, a), rel=1e-12, abs=1e-9)

    @settings(max_examples=300)
    @given(points, points, points)
    def test_triangle_inequality(self, a, b, c):
        assert haversine_distance(a, c) <= haversine_distance(a, b) + haversine_distance(b, c) + 1e-6


class TestBearing:
    @pytest.mark.parametrize(
        "target, expected",
        [((1, 0), 0.0), ((0, 1), math.pi / 2), ((0, -1), 3 * math.pi / 2), ((-1, 0), math.pi)],
    )
    def test_axes(self, target, expected):
        assert initial_bearing(deg(0, 0), deg(*target)) == pytest.approx(expected, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(GeoError, match="degenerate bearing"):
            initial_bearing(deg(5, 5), deg(5, 5))

    @given(points, points)
    def test_range(self, a, b):
        if a == b:
            return
        try:
            theta = initial_bearing(a, b)
        except GeoError:
            return
        assert 0.0 <= theta < 2 * math.pi


class TestLocalFrame:
    def test_identity(self):
        o = deg(43.47, -80.54)
        assert to_local(o, o) == LocalVec(0.0, 0.0)

    def test_east_step(self):
        v = to_local(GeoPoint(0.0, 0.0), GeoPoint(0.0, 1e-5))
        assert v.east == pytest.approx(63.710088, abs=1e-6)
        assert v.north == 0.0

    @pytest.mark.parametrize("bearing_deg", [0, 37, 90, 145, 210, 300])
    def test_agrees_with_haversine_at_1km(self, bearing_deg):
        o = deg(43.47, -80.54)
        b = math.radians(bearing_deg)
        p = from_local(o, LocalVec(1000 * math.sin(b), 1000 * math.cos(b)))
        v = to_local(o, p)
        assert math.hypot(*v) == pytest.approx(haversine_distance(o, p), rel=1e-3)

    def test_round_trip(self):
        o = deg(-33.9, 151.2)
        v = LocalVec(1234.5, -678.9)
        back = to_local(o, from_local(o, v))
        assert back.east == pytest.approx(v.east, abs=1e-8)
        assert back.north == pytest.approx(v.north, abs=1e-8)

    def test_make_point_bounds(self):
        with pytest.raises(GeoError):
            make_point(2.0, 0.0)
        assert make_point(0.0, math.pi).lon == -math.pi


class TestAngleDiff:
    @given(angles)
    def test_identity(self, x):
        assert angle_diff(x, x) == 0.0

    def test_wrap_example(self):
        # 170 deg vs -170 deg: 5.934 - 2*pi
        assert angle_diff(2.967, -2.967) == pytest.approx(5.934 - 2 * math.pi, abs=1e-9)
        assert angle_diff(2.967, -2.967) == pytest.approx(-0.349, abs=5e-4)

    @given(angles, angles)
    def test_range_and_antisymmetry(self, a, b):
        d = angle_diff(a, b)
        assert -math.pi <= d < math.pi
        if abs(abs(d) - math.pi) > 1e-9:
            assert angle_diff(b, a) == pytest.approx(-d, abs=1e-12)

    @given(angles, angles, angles)
    def test_shift_invariance(self, a, b, c):
        d1 = angle_diff(a + c, b + c)
        d2 = angle_diff(a, b)
        assert abs(angle_diff(d1, d2)) < 1e-9


class TestProjection:
    def test_perpendicular_foot(self):
        c, t, d = project_point_to_segment(LocalVec(1, 1), LocalVec(0, 0), LocalVec(2, 0))
        assert (c, t, d) == (LocalVec(1, 0), 0.5, 1.0)

    def test_clamp_start(self):
        c, t, d = project_point_to_segment(LocalVec(-1, 1), LocalVec(0, 0), LocalVec(2, 0))
        assert c == LocalVec(0, 0) and t == 0.0 and d == pytest.approx(math.sqrt(2))

    def test_clamp_end(self):
        c, t, d = project_point_to_segment(LocalVec(3, 0), LocalVec(0, 0), LocalVec(2, 0))
        assert c == LocalVec(2, 0) and t == 1.0 and d == 1.0

    def test_zero_length(self):
        with pytest.raises(GeoError):
            project_point_to_segment(LocalVec(1, 1), LocalVec(0, 0), LocalVec(0, 0))


def test_projection_matches_dense_sampling():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p, s0, s1 = (tuple(rng.uniform(-100, 100, 2)) for _ in range(3))
        _, _, dist = project_point_to_segment(LocalVec(*p), LocalVec(*s0), LocalVec(*s1))
        assert dist == pytest.approx(dense_segment_distance(p, s0, s1), rel=1e-9, abs=1e-9)
