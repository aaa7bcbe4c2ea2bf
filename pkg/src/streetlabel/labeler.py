"""Affordance labels for a matched camera pose."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .geo import angle_diff
from .index import MatchConfig, MatchResult, SegmentIndex, nearest_segment
from .osm import FORWARD, RoadAttributes, RoadNetwork, bike_lane_present, lane_count
from .pose import CameraPose

__all__ = [
    "AMBIGUOUS",
    "AffordanceRecord",
    "CameraPose",
    "LabelConfig",
    "distance_to_intersection",
    "drivable_heading",
    "heading_angle",
    "intersection_ahead",
    "label_pose",
    "wrong_way",
]

AMBIGUOUS = "ambiguous"

#: Poses closer than this to the centreline have no reliable side signal.
NEAR_CENTERLINE_M = 0.5


@dataclass(frozen=True)
class LabelConfig:
    drivable_angle_rad: float = math.radians(22.5)
    intersection_true_m: float = 30.0
    intersection_false_m: float = 100.0
    max_search_m: float = 150.0
    min_continuation_m: float = 15.0
    right_hand_traffic: bool = True
    match: MatchConfig = field(default_factory=MatchConfig)

    def __post_init__(self):
        if not 0 < self.intersection_true_m < self.intersection_false_m <= self.max_search_m:
            raise ValueError("need 0 < intersection_true_m < intersection_false_m <= max_search_m")
        if self.drivable_angle_rad < 0 or self.min_continuation_m < 0:
            raise ValueError("thresholds must be non-negative")


@dataclass
class AffordanceRecord:
    heading_angle: Optional[float] = None
    drivable_heading: Optional[bool] = None
    intersection_ahead: object = None  # True, False or AMBIGUOUS; None without a match
    distance_to_intersection_m: Optional[float] = None
    num_lanes: Optional[int] = None
    wrong_way: Optional[bool] = None
    bike_lane: Optional[bool] = None
    match: Optional[MatchResult] = None
    diagnostics: dict = field(default_factory=dict)


def heading_angle(pose: CameraPose, match: MatchResult) -> float:
    """Camera heading relative to the matched travel direction; positive clockwise."""
    return angle_diff(pose.heading, match.travel_bearing)


class _Cursor:
    """Position on a way's node list while walking in one direction."""

    __slots__ = ("way_id", "i", "step")

    def __init__(self, way_id: int, i: int, step: int):
        self.way_id = way_id
        self.i = i
        self.step = step


def _start(network: RoadNetwork, match: MatchResult):
    """Cursor at the first node ahead, distance to it, and the node just behind."""
    seg = network.segments[match.segment_index]
    if match.travel_direction == FORWARD:
        return _Cursor(seg.way_id, seg.way_pos + 1, 1), (1.0 - match.t) * seg.length_m, seg.node_a, match.t * seg.length_m
    return _Cursor(seg.way_id, seg.way_pos, -1), match.t * seg.length_m, seg.node_b, (1.0 - match.t) * seg.length_m


def _advance(network: RoadNetwork, cur: _Cursor) -> Optional[float]:
    """Move one node along the way, hopping onto a same-name way at a plain joint.

    Returns the length covered, or None when the road ends here.
    """
    way = network.way(cur.way_id)
    ids = way.node_ids
    j = cur.i + cur.step
    closed = ids[0] == ids[-1]
    if closed and (j < 0 or j >= len(ids)):
        cur.i = len(ids) - 1 if cur.step < 0 else 0
        j = cur.i + cur.step
    if 0 <= j < len(ids):
        length = network.way_lengths[cur.way_id][min(cur.i, j)]
        cur.i = j
        return length
    node = ids[cur.i]
    incident = network.node_segments.get(node, ())
    if len(incident) != 2:
        return None
    name = network.attrs(cur.way_id).name
    for s_idx in incident:
        seg = network.segments[s_idx]
        if seg.way_id == cur.way_id:
            continue
        if network.attrs(seg.way_id).name != name:
            return None
        if seg.node_a == node:
            cur.way_id, cur.i, cur.step = seg.way_id, seg.way_pos + 1, 1
        else:
            cur.way_id, cur.i, cur.step = seg.way_id, seg.way_pos, -1
        return seg.length_m
    return None


def distance_to_intersection(pose: CameraPose, match: MatchResult, network: RoadNetwork,
                             config: LabelConfig = LabelConfig()) -> Optional[float]:
    """Arc length from the projected point to the next intersection ahead.

    Only the matched way (and same-name ways joined end to end) is followed.
    Returns None when no intersection lies within ``config.max_search_m``.
    """
    cur, d, behind, behind_d = _start(network, match)
    if behind_d == 0.0 and behind in network.intersections:
        return 0.0
    seen = set()
    while d <= config.max_search_m:
        node = network.way(cur.way_id).node_ids[cur.i]
        if node in network.intersections:
            return d
        state = (cur.way_id, cur.i, cur.step)
        if state in seen:
            return None
        seen.add(state)
        step = _advance(network, cur)
        if step is None:
            return None
        d += step
    return None


def _continuation(network: RoadNetwork, node: int, via: int, d: float, need: float, path: set) -> bool:
    if d >= need:
        return True
    for s_idx in network.node_segments.get(node, ()):
        if s_idx == via:
            continue
        seg = network.segments[s_idx]
        other = seg.node_b if seg.node_a == node else seg.node_a
        if other in path:
            continue
        path.add(other)
        if _continuation(network, other, s_idx, d + seg.length_m, need, path):
            return True
        path.discard(other)
    return False


def road_continues(match: MatchResult, network: RoadNetwork, need_m: float) -> bool:
    """Whether some path of at least ``need_m`` leads on from the pose's projected point."""
    seg = network.segments[match.segment_index]
    if match.travel_direction == FORWARD:
        node, d, start = seg.node_b, (1.0 - match.t) * seg.length_m, seg.node_a
    else:
        node, d, start = seg.node_a, match.t * seg.length_m, seg.node_b
    return _continuation(network, node, match.segment_index, d, need_m, {start, node})


def drivable_heading(pose: CameraPose, match: MatchResult, network: RoadNetwork,
                     config: LabelConfig = LabelConfig()) -> bool:
    if abs(heading_angle(pose, match)) > config.drivable_angle_rad:
        return False
    return road_continues(match, network, config.min_continuation_m)


def intersection_ahead(distance: Optional[float], config: LabelConfig = LabelConfig()):
    """True at or under the near threshold, False past the far one, else AMBIGUOUS."""
    if distance is None or distance > config.intersection_false_m:
        return False
    if distance <= config.intersection_true_m:
        return True
    return AMBIGUOUS


def wrong_way(pose: CameraPose, match: MatchResult, attrs: RoadAttributes,
              config: LabelConfig = LabelConfig(), diagnostics: Optional[dict] = None) -> bool:
    if attrs.oneway:
        return abs(angle_diff(pose.heading, match.segment_bearing)) > math.pi / 2
    offset = match.travel_offset_m
    if abs(offset) < NEAR_CENTERLINE_M:
        if diagnostics is not None:
            diagnostics["near_centerline"] = "true"
        # the camera pointing toward the oncoming side is the best remaining cue
        ha = heading_angle(pose, match)
        return ha < 0.0 if config.right_hand_traffic else ha > 0.0
    return offset < 0.0 if config.right_hand_traffic else offset > 0.0


def label_pose(pose: CameraPose, network: RoadNetwork, index: SegmentIndex,
               config: LabelConfig = LabelConfig()) -> AffordanceRecord:
    match = nearest_segment(index, pose, config.match)
    if match is None:
        return AffordanceRecord(diagnostics={"reason": "no_match"})
    attrs = network.attrs(match.way_id)
    diag: dict = {}
    if match.perpendicular:
        diag["perpendicular_match"] = "true"
    dist = distance_to_intersection(pose, match, network, config)
    ahead = intersection_ahead(dist, config)
    if ahead == AMBIGUOUS:
        diag["ambiguous_intersection"] = "true"
    return AffordanceRecord(
        heading_angle=heading_angle(pose, match),
        drivable_heading=drivable_heading(pose, match, network, config),
        intersection_ahead=ahead,
        distance_to_intersection_m=dist,
        num_lanes=lane_count(attrs, match.travel_direction),
        wrong_way=wrong_way(pose, match, attrs, config, diag),
        bike_lane=bike_lane_present(attrs, match.travel_direction, config.right_hand_traffic),
        match=match,
        diagnostics=diag,
    )
