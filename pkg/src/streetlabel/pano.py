"""Panorama metadata ingestion and equirectangular-to-perspective cropping."""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Union

import numpy as np

from . import _kernels
from .geo import EARTH_RADIUS_M, GeoError, GeoPoint, haversine_distance
from .pose import CameraPose

log = logging.getLogger(__name__)

OUT_SIZE_PX = 227
HFOV_DEG = 100.0


@dataclass(frozen=True)
class CropSpec:
    src_width: int
    src_height: int
    out_width: int = OUT_SIZE_PX
    out_height: int = OUT_SIZE_PX
    hfov: float = math.radians(HFOV_DEG)
    yaw: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.hfov < math.pi:
            raise ValueError("hfov must lie in (0, pi)")
        if min(self.src_width, self.src_height, self.out_width, self.out_height) <= 0:
            raise ValueError("image dimensions must be positive")
        if self.out_width < 2:
            raise ValueError("output needs at least two columns")
        # keep yaw in [-pi, pi) so that yaw and yaw + 2*pi give identical maps
        y = math.fmod(self.yaw + math.pi, 2.0 * math.pi)
        if y < 0.0:
            y += 2.0 * math.pi
        object.__setattr__(self, "yaw", y - math.pi)

    @property
    def focal_px(self) -> float:
        """Focal length placing the edge pixel centres at +-hfov/2."""
        return ((self.out_width - 1) / 2.0) / math.tan(self.hfov / 2.0)

    @property
    def center(self) -> tuple[float, float]:
        return (self.out_width - 1) / 2.0, (self.out_height - 1) / 2.0


def camera_rays(spec: CropSpec) -> np.ndarray:
    """Unit view rays (x right, y down, z forward) for every output pixel centre."""
    cx, cy = spec.center
    f = spec.focal_px
    u = (np.arange(spec.out_width, dtype=np.float64) - cx) / f
    v = (np.arange(spec.out_height, dtype=np.float64) - cy) / f
    x, y = np.meshgrid(u, v)
    z = np.ones_like(x)
    n = np.sqrt(x * x + y * y + z * z)
    rays = np.stack([x / n, y / n, z / n], axis=-1)
    # pitch about the camera x axis (positive looks up), then yaw about the vertical
    cp, sp = math.cos(spec.pitch), math.sin(spec.pitch)
    cw, sw = math.cos(spec.yaw), math.sin(spec.yaw)
    r_pitch = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    r_yaw = np.array([[cw, 0.0, sw], [0.0, 1.0, 0.0], [-sw, 0.0, cw]])
    return rays @ (r_yaw @ r_pitch).T


def ray_angles(spec: CropSpec) -> tuple[np.ndarray, np.ndarray]:
    """Longitude and latitude on the panorama sphere for every output pixel."""
    r = camera_rays(spec)
    lon = np.arctan2(r[..., 0], r[..., 2])
    lat = np.arcsin(np.clip(-r[..., 1], -1.0, 1.0))
    return lon, lat


def crop_pixel_map(spec: CropSpec) -> tuple[np.ndarray, np.ndarray]:
    """Fractional source pixel coordinates ``(sx, sy)`` for each output pixel.

    Arrays have shape ``(out_height, out_width)``. ``sx`` wraps into
    ``[0, W)``; ``sy`` is clamped to ``[0, H]``.
    """
    lon, lat = ray_angles(spec)
    w, h = spec.src_width, spec.src_height
    sx = np.mod(w * (lon / (2.0 * math.pi) + 0.5), w)
    sy = np.clip(h * (0.5 - lat / math.pi), 0.0, float(h))
    return sx, sy


@dataclass
class RasterBuffer:
    """Row-major 8-bit image with ``channels`` samples per pixel."""

    width: int
    height: int
    data: np.ndarray = field(repr=False)
    channels: int = 3

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.uint8).reshape(self.height, self.width, self.channels)

    @classmethod
    def from_bytes(cls, width: int, height: int, buf: bytes, channels: int = 3) -> "RasterBuffer":
        if len(buf) != width * height * channels:
            raise ValueError("buffer length does not match dimensions")
        return cls(width, height, np.frombuffer(buf, dtype=np.uint8), channels)

    def tobytes(self) -> bytes:
        return self.data.tobytes()


def resample(pano: RasterBuffer, spec: CropSpec) -> RasterBuffer:
    """Bilinear perspective crop of an equirectangular panorama."""
    if pano.width == 0 or pano.height == 0:
        raise ValueError("empty panorama")
    if pano.width != 2 * pano.height:
        log.warning("panorama is %dx%d, expected a 2:1 equirectangular image", pano.width, pano.height)
    if (pano.width, pano.height) != (spec.src_width, spec.src_height):
        spec = CropSpec(pano.width, pano.height, spec.out_width, spec.out_height, spec.hfov, spec.yaw, spec.pitch)
    sx, sy = crop_pixel_map(spec)
    out = _kernels.bilinear_sample(pano.data, sx, sy)
    return RasterBuffer(spec.out_width, spec.out_height, out, pano.channels)


def _field(rec: dict, *names):
    for n in names:
        if n in rec and rec[n] is not None:
            return rec[n]
    return None


def parse_pano_record(rec: dict) -> CameraPose:
    pano_id = _field(rec, "pano_id", "id")
    lat = _field(rec, "lat", "lat_deg")
    lon = _field(rec, "lon", "lon_deg", "lng")
    heading = _field(rec, "heading", "heading_deg")
    for name, value in (("pano_id", pano_id), ("lat", lat), ("lon", lon), ("heading", heading)):
        if value is None:
            raise ValueError(f"missing {name}")
    lat, lon, heading = float(lat), float(lon), float(heading)
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"latitude {lat} out of range")
    if not -180.0 <= lon <= 180.0:
        raise ValueError(f"longitude {lon} out of range")
    if not math.isfinite(heading):
        raise ValueError("heading is not finite")
    kw = {}
    width = _field(rec, "width", "source_width_px")
    height = _field(rec, "height", "source_height_px")
    if width is not None:
        kw["source_width_px"] = int(width)
    if height is not None:
        kw["source_height_px"] = int(height)
    return CameraPose(
        pano_id=str(pano_id),
        pos=GeoPoint.from_degrees(lat, lon),
        heading=math.radians(heading),
        capture_date=_field(rec, "date", "capture_date"),
        **kw,
    )


def parse_pano_metadata(lines: Union[IO[str], Iterable[str]]) -> tuple[list[CameraPose], list[str]]:
    """Parse one JSON object per line into poses.

    Bad records are skipped; each produces a ``"line N: reason"`` diagnostic.
    """
    poses, diagnostics = [], []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rec = json.loads(line)
            if not isinstance(rec, dict):
                raise ValueError("record is not an object")
            poses.append(parse_pano_record(rec))
        except (ValueError, TypeError, GeoError) as exc:
            diagnostics.append(f"line {lineno}: {exc}")
    for d in diagnostics:
        log.warning("pano metadata %s", d)
    return poses, diagnostics


def _unit_vector(p: GeoPoint) -> tuple[float, float, float]:
    cl = math.cos(p.lat)
    return cl * math.cos(p.lon), cl * math.sin(p.lon), math.sin(p.lat)


def dedupe_poses(poses: Iterable[CameraPose], min_spacing_m: float = 5.0) -> list[CameraPose]:
    """Greedy thinning: keep a pose only if it is at least ``min_spacing_m`` from all kept ones.

    Kept poses are bucketed on a 3-D grid over earth-centred coordinates;
    chord length never exceeds arc length, so the 27-cell neighbourhood holds
    every kept pose that could be too close.
    """
    poses = list(poses)
    if min_spacing_m <= 0:
        return poses
    cell = min_spacing_m
    grid: dict = defaultdict(list)
    kept = []
    for pose in poses:
        ux, uy, uz = _unit_vector(pose.pos)
        key = (
            math.floor(ux * EARTH_RADIUS_M / cell),
            math.floor(uy * EARTH_RADIUS_M / cell),
            math.floor(uz * EARTH_RADIUS_M / cell),
        )
        close = False
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for other in grid.get((key[0] + dx, key[1] + dy, key[2] + dz), ()):
                        if haversine_distance(pose.pos, other.pos) < min_spacing_m:
                            close = True
                            break
                    if close:
                        break
                if close:
                    break
            if close:
                break
        if not close:
            grid[key].append(pose)
            kept.append(pose)
    return kept
