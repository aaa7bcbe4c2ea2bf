"""Manifest rows: serialization, filtering and spatially blocked splits."""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field, fields
from typing import IO, Iterable, Optional, Sequence

from .geo import EARTH_RADIUS_M
from .labeler import AMBIGUOUS, AffordanceRecord
from .pose import CameraPose

FLAG_NO_MATCH = "no_match"
FLAG_AMBIGUOUS = "ambiguous_intersection"
FLAG_PERPENDICULAR = "perpendicular_match"

LABEL_FIELDS = (
    "heading_angle_deg",
    "drivable_heading",
    "intersection_ahead",
    "distance_to_intersection_m",
    "num_lanes",
    "wrong_way",
    "bike_lane",
)

#: Scoring kind of each label column, as used by ``eval``.
LABEL_KINDS = {
    "heading_angle_deg": "regression",
    "drivable_heading": "binary",
    "intersection_ahead": "binary",
    "distance_to_intersection_m": "regression",
    "num_lanes": "regression",
    "wrong_way": "binary",
    "bike_lane": "binary",
}


class ManifestError(ValueError):
    pass


@dataclass
class ManifestRow:
    """One labeled view. Field order here is the serialized field order."""

    pano_id: str
    lat_deg: float
    lon_deg: float
    heading_deg: float
    yaw_offset_deg: float = 0.0
    heading_angle_deg: Optional[float] = None
    drivable_heading: Optional[bool] = None
    intersection_ahead: Optional[bool] = None
    distance_to_intersection_m: Optional[float] = None
    num_lanes: Optional[int] = None
    wrong_way: Optional[bool] = None
    bike_lane: Optional[bool] = None
    way_id: Optional[int] = None
    centerline_dist_m: Optional[float] = None
    flags: list = field(default_factory=list)

    @property
    def key(self) -> tuple:
        return self.pano_id, self.yaw_offset_deg

    @classmethod
    def from_record(cls, pose: CameraPose, rec: AffordanceRecord, yaw_offset_deg: float = 0.0) -> "ManifestRow":
        flags = sorted(k for k, v in rec.diagnostics.items() if k != "reason" and v == "true")
        if rec.match is None:
            flags = [FLAG_NO_MATCH] + flags
        ahead = rec.intersection_ahead
        return cls(
            pano_id=pose.pano_id,
            lat_deg=pose.pos.lat_deg,
            lon_deg=pose.pos.lon_deg,
            heading_deg=math.degrees(pose.heading),
            yaw_offset_deg=float(yaw_offset_deg),
            heading_angle_deg=None if rec.heading_angle is None else math.degrees(rec.heading_angle),
            drivable_heading=rec.drivable_heading,
            intersection_ahead=None if ahead is None or ahead == AMBIGUOUS else bool(ahead),
            distance_to_intersection_m=rec.distance_to_intersection_m,
            num_lanes=rec.num_lanes,
            wrong_way=rec.wrong_way,
            bike_lane=rec.bike_lane,
            way_id=None if rec.match is None else rec.match.way_id,
            centerline_dist_m=None if rec.match is None else rec.match.centerline_dist_m,
            flags=flags,
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False, separators=(", ", ": "))

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestRow":
        names = {f.name for f in fields(cls)}
        missing = {"pano_id", "lat_deg", "lon_deg", "heading_deg"} - d.keys()
        if missing:
            raise ManifestError(f"missing fields: {sorted(missing)}")
        row = cls(**{k: v for k, v in d.items() if k in names})
        row.flags = list(row.flags or [])
        return row


def write_manifest(rows: Iterable[ManifestRow], fh: IO[str]) -> int:
    n = 0
    for row in rows:
        fh.write(row.to_json())
        fh.write("\n")
        n += 1
    return n


def read_manifest(fh: IO[str]) -> list[ManifestRow]:
    rows = []
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append(ManifestRow.from_dict(json.loads(line)))
        except (ValueError, TypeError) as exc:
            raise ManifestError(f"line {lineno}: {exc}") from exc
    return rows


def manifest_to_csv(rows: Iterable[ManifestRow]) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(ManifestRow)]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in rows:
        d = row.to_dict()
        d["flags"] = ";".join(d["flags"])
        writer.writerow(["" if d[n] is None else d[n] for n in names])
    return buf.getvalue()


@dataclass(frozen=True)
class FilterPolicy:
    drop_ambiguous: bool = True
    drop_no_match: bool = True
    drop_perpendicular: bool = True
    min_lanes: Optional[int] = None
    max_lanes: Optional[int] = None

    def keep(self, row: ManifestRow) -> bool:
        if self.drop_no_match and FLAG_NO_MATCH in row.flags:
            return False
        if self.drop_ambiguous and FLAG_AMBIGUOUS in row.flags:
            return False
        if self.drop_perpendicular and FLAG_PERPENDICULAR in row.flags:
            return False
        if row.num_lanes is not None:
            if self.min_lanes is not None and row.num_lanes < self.min_lanes:
                return False
            if self.max_lanes is not None and row.num_lanes > self.max_lanes:
                return False
        return True


def filter_rows(rows: Iterable[ManifestRow], policy: FilterPolicy = FilterPolicy()) -> list[ManifestRow]:
    return [r for r in rows if policy.keep(r)]


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple = (0.8, 0.1, 0.1)
    seed: int = 0
    block_size_m: float = 500.0

    def __post_init__(self):
        if len(self.ratios) != 3:
            raise ManifestError("need three ratios (train, val, test)")
        if any(not 0.0 <= r <= 1.0 for r in self.ratios):
            raise ManifestError("ratios must lie in [0, 1]")
        if abs(math.fsum(self.ratios) - 1.0) > 1e-9:
            raise ManifestError(f"ratios sum to {math.fsum(self.ratios)}, not 1")
        if self.block_size_m <= 0:
            raise ManifestError("block size must be positive")


def spatial_block(lat_deg: float, lon_deg: float, block_size_m: float) -> tuple[int, int]:
    """Quantize a position into roughly square blocks of ``block_size_m``."""
    lat = math.radians(lat_deg)
    iy = math.floor(EARTH_RADIUS_M * lat / block_size_m)
    # longitude scale taken at the centre of the latitude band, so it is the same for the whole band
    band_lat = (iy + 0.5) * block_size_m / EARTH_RADIUS_M
    scale = max(math.cos(band_lat), 1e-9)
    ix = math.floor(EARTH_RADIUS_M * scale * math.radians(lon_deg) / block_size_m)
    return iy, ix


def split_rows(rows: Sequence[ManifestRow], spec: SplitSpec = SplitSpec()) -> tuple[list, list, list]:
    """Partition rows into train/val/test with whole spatial blocks per split.

    Blocks are shuffled with ``spec.seed``; a block goes to the split whose
    cumulative-ratio interval contains the block's midpoint, so each split's
    share is off by at most one block.
    """
    blocks: dict = {}
    for i, r in enumerate(rows):
        blocks.setdefault(spatial_block(r.lat_deg, r.lon_deg, spec.block_size_m), []).append(i)
    order = sorted(blocks)
    random.Random(spec.seed).shuffle(order)
    total = len(rows)
    bounds = [spec.ratios[0], spec.ratios[0] + spec.ratios[1]]
    assign = [0] * total
    seen = 0
    for b in order:
        members = blocks[b]
        mid = (seen + len(members) / 2.0) / total
        k = 0 if mid < bounds[0] else (1 if mid < bounds[1] else 2)
        while spec.ratios[k] == 0.0:
            k = (k + 1) % 3
        for i in members:
            assign[i] = k
        seen += len(members)
    out = ([], [], [])
    for i, r in enumerate(rows):
        out[assign[i]].append(r)
    return out
