import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streetlabel.geo import GeoPoint, LocalVec, from_local
from streetlabel.pano import (
    CropSpec,
    RasterBuffer,
    crop_pixel_map,
    dedupe_poses,
    parse_pano_metadata,
    ray_angles,
    resample,
)
from streetlabel.pose import CameraPose
from synth import ORIGIN

W, H = 13312, 6656


class TestCropSpec:
    def test_focal(self):
        spec = CropSpec(W, H)
        assert spec.focal_px == pytest.approx(113 / math.tan(math.radians(50)), rel=1e-12)
        assert math.atan(113 / spec.focal_px) == pytest.approx(math.radians(50), abs=1e-12)

    @pytest.mark.parametrize("hfov", [0.0, math.pi, -1.0])
    def test_bad_fov(self, hfov):
        with pytest.raises(ValueError):
            CropSpec(W, H, hfov=hfov)

    def test_yaw_normalized(self):
        assert CropSpec(W, H, yaw=2 * math.pi).yaw == 0.0
        assert CropSpec(W, H, yaw=math.pi).yaw == -math.pi


class TestPixelMap:
    @pytest.mark.parametrize("yaw", [0.0, 0.7, -2.0, 3.0])
    def test_centre_pixel(self, yaw):
        sx, sy = crop_pixel_map(CropSpec(W, H, yaw=yaw))
        assert sx[113, 113] == pytest.approx((W * (yaw / (2 * math.pi) + 0.5)) % W, abs=1e-6)
        assert sy[113, 113] == pytest.approx(H / 2, abs=1e-6)

    def test_edge_pixels_at_half_fov(self):
        lon, lat = ray_angles(CropSpec(W, H))
        assert abs(lon[113, 226] - math.radians(50)) <= 1e-9
        assert abs(lon[113, 0] + math.radians(50)) <= 1e-9
        assert abs(lat[0, 113] - math.radians(50)) <= 1e-9
        assert abs(lat[226, 113] + math.radians(50)) <= 1e-9
        assert abs((lon[113, 226] - lon[113, 0]) - math.radians(100)) <= 1e-9

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-math.pi, math.pi), st.floats(-1.4, 1.4), st.floats(0.3, 2.8))
    def test_lon_increasing_along_rows(self, yaw, pitch, hfov):
        # rows passing over a pole wrap around it; keep the crop below the zenith
        half_diag = math.atan(math.hypot(1.0, 1.0) * math.tan(hfov / 2))
        if abs(pitch) + half_diag >= math.pi / 2:
            return
        lon, _ = ray_angles(CropSpec(W, H, out_width=31, out_height=31, yaw=yaw, pitch=pitch, hfov=hfov))
        rel = np.unwrap(lon - yaw, axis=1)
        assert np.all(np.diff(rel, axis=1) > 0)

    def test_pitch_up_moves_centre_up(self):
        _, sy = crop_pixel_map(CropSpec(W, H, pitch=math.radians(10)))
        assert sy[113, 113] == pytest.approx(H * (0.5 - 10 / 180), abs=1e-6)

    def test_ranges(self):
        sx, sy = crop_pixel_map(CropSpec(W, H, yaw=3.1, pitch=1.2))
        assert sx.shape == (227, 227)
        assert np.all((sx >= 0) & (sx < W)) and np.all((sy >= 0) & (sy <= H))


def _stripes(w, h, cycles):
    x = np.arange(w) + 0.5
    row = np.round(127.5 + 127.5 * np.sin(2 * math.pi * cycles * x / w))
    img = np.repeat(np.repeat(row[None, :, None], h, axis=0), 3, axis=2)
    return RasterBuffer(w, h, img.astype(np.uint8))


class TestResample:
    def test_constant_colour(self):
        img = np.empty((256, 512, 3), dtype=np.uint8)
        img[...] = (12, 200, 77)
        out = resample(RasterBuffer(512, 256, img), CropSpec(512, 256, yaw=1.0, pitch=0.3))
        assert (out.width, out.height) == (227, 227)
        assert np.all(out.data == np.array([12, 200, 77], dtype=np.uint8))

    def test_yaw_periodic_bit_identical(self):
        rng = np.random.default_rng(3)
        pano = RasterBuffer(512, 256, rng.integers(0, 256, (256, 512, 3), dtype=np.uint8))
        for yaw in (0.0, 1.3, -2.9):
            a = resample(pano, CropSpec(512, 256, yaw=yaw))
            b = resample(pano, CropSpec(512, 256, yaw=yaw + 2 * math.pi))
            assert a.tobytes() == b.tobytes()

    def test_stripes_match_analytic(self):
        w, h, cycles = 1024, 512, 8
        spec = CropSpec(w, h, yaw=0.4, pitch=0.1)
        out = resample(_stripes(w, h, cycles), spec).data[..., 0].astype(float)
        sx, _ = crop_pixel_map(spec)
        truth = 127.5 + 127.5 * np.sin(2 * math.pi * cycles * sx / w)
        assert np.mean(np.abs(out - truth) <= 1.0) >= 0.99

    def test_stripes_half_turn_phase(self):
        # odd cycle count: half a turn of yaw inverts the pattern
        w, h = 1024, 512
        pano = _stripes(w, h, 7)
        a = resample(pano, CropSpec(w, h, yaw=0.0)).data.astype(int)
        b = resample(pano, CropSpec(w, h, yaw=math.pi)).data.astype(int)
        assert np.mean(np.abs(a + b - 255) <= 1) >= 0.99
        # even cycle count: half a turn leaves it unchanged
        pano = _stripes(w, h, 8)
        a = resample(pano, CropSpec(w, h, yaw=0.0)).data.astype(int)
        b = resample(pano, CropSpec(w, h, yaw=math.pi)).data.astype(int)
        assert np.mean(np.abs(a - b) <= 1) >= 0.99

    def test_empty_input(self):
        with pytest.raises(ValueError):
            resample(RasterBuffer(0, 0, np.zeros(0, dtype=np.uint8)), CropSpec(2, 1))

    def test_non_equirect_warns(self, caplog):
        pano = RasterBuffer(100, 100, np.zeros((100, 100, 3), dtype=np.uint8))
        with caplog.at_level("WARNING"):
            resample(pano, CropSpec(100, 100))
        assert "2:1" in caplog.text

    def test_buffer_length_checked(self):
        with pytest.raises(ValueError):
            RasterBuffer.from_bytes(4, 2, b"\0" * 23)
        assert RasterBuffer.from_bytes(4, 2, bytes(range(24))).tobytes() == bytes(range(24))


class TestMetadata:
    def test_unit_conversion(self):
        poses, diag = parse_pano_metadata(['{"pano_id": "a", "lat": 43.4723, "lon": -80.5449, "heading": 90.0}'])
        assert diag == []
        assert poses[0].heading == pytest.approx(math.pi / 2, abs=1e-15)
        assert poses[0].pos.lat_deg == pytest.approx(43.4723, abs=1e-12)

    def test_skips_with_diagnostics(self):
        lines = [
            '{"pano_id": "a", "lat": 43.0, "lon": -80.0}',
            '{"pano_id": "b", "lat": 91.0, "lon": -80.0, "heading": 0}',
            "not json",
            "",
            '{"pano_id": "c", "lat_deg": 1, "lng": 2, "heading_deg": 3, "width": 100, "height": 50, "date": "2019-05"}',
        ]
        poses, diag = parse_pano_metadata(io.StringIO("\n".join(lines)))
        assert [p.pano_id for p in poses] == ["c"]
        assert poses[0].source_width_px == 100 and poses[0].capture_date == "2019-05"
        assert len(diag) == 3
        assert diag[0].startswith("line 1:") and "heading" in diag[0]
        assert diag[1].startswith("line 2:") and "out of range" in diag[1]


def _line_poses(offsets):
    return [CameraPose(f"p{i}", from_local(ORIGIN, LocalVec(0.0, float(d))), 0.0) for i, d in enumerate(offsets)]


class TestDedupe:
    def test_greedy(self):
        kept = dedupe_poses(_line_poses([0, 3, 6, 9]), 5.0)
        assert [p.pano_id for p in kept] == ["p0", "p2"]

    def test_identical(self):
        assert len(dedupe_poses(_line_poses([0, 0]))) == 1

    def test_wide_spacing(self):
        assert len(dedupe_poses(_line_poses([0, 10, 20, 30]))) == 4

    def test_brute_force_and_idempotent(self):
        rng = np.random.default_rng(4)
        pts = rng.uniform(-40, 40, (300, 2))
        poses = [CameraPose(f"q{i}", from_local(ORIGIN, LocalVec(*map(float, p))), 0.0) for i, p in enumerate(pts)]
        from streetlabel.geo import haversine_distance

        expected = []
        for p in poses:
            if all(haversine_distance(p.pos, q.pos) >= 5.0 for q in expected):
                expected.append(p)
        kept = dedupe_poses(poses, 5.0)
        assert kept == expected
        assert dedupe_poses(kept, 5.0) == kept

    def test_near_pole(self):
        poses = [CameraPose("a", GeoPoint.from_degrees(89.99999, 0.0), 0.0),
                 CameraPose("b", GeoPoint.from_degrees(89.99999, 179.0), 0.0)]
        assert len(dedupe_poses(poses, 5.0)) == 1
