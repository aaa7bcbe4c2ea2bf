"""Uniform-grid segment index and heading-aware map matching."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .geo import GeoPoint, LocalVec, angle_diff, make_point, normalize_bearing, to_local
from .osm import BACKWARD, FORWARD, RoadNetwork, Segment
from .pose import CameraPose


@dataclass(frozen=True)
class MatchConfig:
    max_match_dist_m: float = 25.0
    heading_weight: float = 5.0  # meters of score per radian of misalignment
    perpendicular_band_rad: float = math.radians(5.0)


@dataclass(frozen=True)
class MatchResult:
    way_id: int
    node_a: int
    node_b: int
    segment_index: int
    t: float
    lateral_offset_m: float
    segment_bearing: float
    travel_direction: str
    centerline_dist_m: float
    closest: LocalVec
    perpendicular: bool = False

    @property
    def travel_bearing(self) -> float:
        if self.travel_direction == FORWARD:
            return self.segment_bearing
        return normalize_bearing(self.segment_bearing + math.pi)

    @property
    def travel_offset_m(self) -> float:
        """Lateral offset measured against the direction of travel."""
        return self.lateral_offset_m if self.travel_direction == FORWARD else -self.lateral_offset_m


class SegmentIndex:
    """Segments of a :class:`RoadNetwork` bucketed into square cells.

    Coordinates live in an equirectangular frame centred on ``frame_origin``.
    A segment is registered in every cell its bounding box touches.
    """

    def __init__(self, network: RoadNetwork, cell_size_m: float = 50.0, frame_origin: Optional[GeoPoint] = None):
        if cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")
        self.network = network
        self.cell_size_m = float(cell_size_m)
        self.segments: list[Segment] = list(network.segments)
        if frame_origin is None:
            frame_origin = default_origin(network)
        self.frame_origin = frame_origin

        n = len(self.segments)
        local = {nid: to_local(frame_origin, node.pos) for nid, node in network.nodes.items()}
        self.x0 = np.empty(n)
        self.y0 = np.empty(n)
        self.x1 = np.empty(n)
        self.y1 = np.empty(n)
        self.bearing = np.empty(n)
        self.keys = np.empty((n, 3), dtype=np.int64)
        cells: dict = {}
        c = self.cell_size_m
        for i, s in enumerate(self.segments):
            a, b = local[s.node_a], local[s.node_b]
            self.x0[i], self.y0[i], self.x1[i], self.y1[i] = a.east, a.north, b.east, b.north
            self.bearing[i] = normalize_bearing(math.atan2(b.east - a.east, b.north - a.north))
            self.keys[i] = (s.way_id, s.node_a, s.node_b)
            for cx in range(math.floor(min(a.east, b.east) / c), math.floor(max(a.east, b.east) / c) + 1):
                for cy in range(math.floor(min(a.north, b.north) / c), math.floor(max(a.north, b.north) / c) + 1):
                    cells.setdefault((cx, cy), []).append(i)
        self.cells = {k: np.array(v, dtype=np.int64) for k, v in cells.items()}

    def __len__(self) -> int:
        return len(self.segments)

    def local(self, p: GeoPoint) -> LocalVec:
        return to_local(self.frame_origin, p)

    def candidates(self, p: LocalVec, radius_m: float) -> np.ndarray:
        """Sorted, unique indices of segments registered near ``p``."""
        c = self.cell_size_m
        parts = []
        for cx in range(math.floor((p.east - radius_m) / c), math.floor((p.east + radius_m) / c) + 1):
            for cy in range(math.floor((p.north - radius_m) / c), math.floor((p.north + radius_m) / c) + 1):
                ids = self.cells.get((cx, cy))
                if ids is not None:
                    parts.append(ids)
        if not parts:
            return np.empty(0, dtype=np.int64)
        if len(parts) == 1:
            return parts[0]
        return np.unique(np.concatenate(parts))


def default_origin(network: RoadNetwork) -> GeoPoint:
    """Centre of the network's latitude/longitude bounding box."""
    if not network.nodes:
        return GeoPoint(0.0, 0.0)
    lats = [n.pos.lat for n in network.nodes.values()]
    lons = [n.pos.lon for n in network.nodes.values()]
    return make_point((min(lats) + max(lats)) / 2, (min(lons) + max(lons)) / 2)


def build_index(network: RoadNetwork, cell_size_m: float = 50.0, frame_origin: Optional[GeoPoint] = None) -> SegmentIndex:
    return SegmentIndex(network, cell_size_m, frame_origin)


def describe_match(index: SegmentIndex, i: int, p: LocalVec, heading: float, config: MatchConfig) -> MatchResult:
    """Build the :class:`MatchResult` for segment ``i`` seen from ``p``."""
    x0, y0, x1, y1 = index.x0[i], index.y0[i], index.x1[i], index.y1[i]
    t, cx, cy, dist = _kernels.project(p.east, p.north, x0, y0, x1, y1)
    cross = (y1 - y0) * (p.east - x0) - (x1 - x0) * (p.north - y0)
    offset = -dist if cross < 0.0 else dist
    bearing = float(index.bearing[i])
    d_fwd = abs(angle_diff(heading, bearing))
    d_bwd = abs(angle_diff(heading, bearing + math.pi))
    if d_fwd < d_bwd:
        direction = FORWARD
    elif d_bwd < d_fwd:
        direction = BACKWARD
    else:
        # exact tie: pick the orientation that keeps the pose on its legal side
        direction = FORWARD if offset >= 0.0 else BACKWARD
    seg = index.segments[i]
    return MatchResult(
        way_id=seg.way_id,
        node_a=seg.node_a,
        node_b=seg.node_b,
        segment_index=int(i),
        t=float(t),
        lateral_offset_m=float(offset),
        segment_bearing=bearing,
        travel_direction=direction,
        centerline_dist_m=float(dist),
        closest=LocalVec(float(cx), float(cy)),
        perpendicular=abs(d_fwd - math.pi / 2) <= config.perpendicular_band_rad,
    )


def nearest_segment(index: SegmentIndex, pose: CameraPose, config: MatchConfig = MatchConfig()) -> Optional[MatchResult]:
    """Best-scoring segment within ``config.max_match_dist_m``; None if there is none.

    Score is centreline distance plus ``heading_weight`` times the smaller of
    the two orientation misalignments.
    """
    if not len(index):
        return None
    heading = pose.heading
    p = index.local(pose.pos)
    cand = index.candidates(p, config.max_match_dist_m)
    if not len(cand):
        return None
    best = _kernels.best_segment(
        cand, p.east, p.north, heading, config.max_match_dist_m, config.heading_weight,
        index.x0, index.y0, index.x1, index.y1, index.bearing, index.keys,
    )
    if best < 0:
        return None
    return describe_match(index, best, p, heading, config)


def segments_within(index: SegmentIndex, pos: GeoPoint, radius_m: float) -> list[Segment]:
    """Segments whose distance to ``pos`` is at most ``radius_m``, ordered by (way, nodes)."""
    if not len(index):
        return []
    p = index.local(pos)
    cand = index.candidates(p, radius_m)
    if not len(cand):
        return []
    mask = _kernels.within_radius(cand, p.east, p.north, radius_m, index.x0, index.y0, index.x1, index.y1)
    hits = [index.segments[int(i)] for i in cand[mask]]
    hits.sort(key=lambda s: (s.way_id, s.node_a, s.node_b, s.way_pos))
    return hits
