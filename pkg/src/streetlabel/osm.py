"""OSM XML ingestion and drivable road-network extraction."""

from __future__ import annotations

import io
import logging
import os
import xml.etree.ElementTree as ET
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Mapping, NamedTuple, Optional, Union
from xml.sax.saxutils import quoteattr

from .geo import GeoError, GeoPoint, haversine_distance

log = logging.getLogger(__name__)

DEFAULT_HIGHWAYS = frozenset(
    [
        "motorway", "trunk", "primary", "secondary", "tertiary",
        "residential", "unclassified", "service",
        "motorway_link", "trunk_link", "primary_link", "secondary_link", "tertiary_link",
    ]
)

FORWARD = "forward"
BACKWARD = "backward"

_TRUE_VALUES = {"yes", "true", "1"}
_BIKE_LANE_VALUES = {"lane"}


class OsmParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class OsmNode:
    id: int
    pos: GeoPoint


@dataclass(frozen=True)
class OsmWay:
    id: int
    node_ids: tuple
    tags: Mapping[str, str]


@dataclass(frozen=True)
class RoadAttributes:
    lanes_total: Optional[int] = None
    lanes_forward: Optional[int] = None
    lanes_backward: Optional[int] = None
    oneway: bool = False
    bike_lane_left: bool = False
    bike_lane_right: bool = False
    highway_class: str = "unclassified"
    name: Optional[str] = None


class Segment(NamedTuple):
    way_id: int
    node_a: int
    node_b: int
    length_m: float
    way_pos: int  # index of node_a within the way's node list


@dataclass
class OsmDocument:
    nodes: dict
    ways: dict
    warnings: Counter = field(default_factory=Counter)


@dataclass
class RoadNetwork:
    nodes: dict
    ways: dict  # way id -> (OsmWay, RoadAttributes)
    segments: list
    intersections: frozenset
    node_segments: dict  # node id -> list of segment indices
    way_lengths: dict  # way id -> per-position segment length (0.0 for degenerate)
    warnings: Counter = field(default_factory=Counter)

    def degree(self, node_id: int) -> int:
        return len(self.node_segments.get(node_id, ()))

    def attrs(self, way_id: int) -> RoadAttributes:
        return self.ways[way_id][1]

    def way(self, way_id: int) -> OsmWay:
        return self.ways[way_id][0]


Source = Union[bytes, str, os.PathLike, BinaryIO]


def _open_source(source: Source):
    if isinstance(source, bytes):
        return io.BytesIO(source)
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb")
    return source


def parse_osm_xml(source: Source) -> OsmDocument:
    """Read nodes and ways from an OSM XML document.

    Ways that reference unknown nodes, or have fewer than two node refs, are
    dropped and counted in ``warnings``. Duplicate ids keep the last element.
    """
    nodes: dict = {}
    raw_ways: dict = {}
    warnings: Counter = Counter()
    fh = _open_source(source)
    try:
        for _, elem in ET.iterparse(fh, events=("end",)):
            tag = elem.tag
            if tag == "node":
                try:
                    nid = int(elem.attrib["id"])
                    pos = GeoPoint.from_degrees(float(elem.attrib["lat"]), float(elem.attrib["lon"]))
                except (KeyError, ValueError, GeoError):
                    warnings["bad_node"] += 1
                    elem.clear()
                    continue
                if nid in nodes:
                    warnings["duplicate_node"] += 1
                nodes[nid] = OsmNode(nid, pos)
                elem.clear()
            elif tag == "way":
                try:
                    wid = int(elem.attrib["id"])
                    refs = tuple(int(nd.attrib["ref"]) for nd in elem.iter("nd"))
                except (KeyError, ValueError):
                    warnings["bad_way"] += 1
                    elem.clear()
                    continue
                tags = {t.attrib["k"]: t.attrib.get("v", "") for t in elem.iter("tag") if "k" in t.attrib}
                if wid in raw_ways:
                    warnings["duplicate_way"] += 1
                raw_ways[wid] = (refs, tags)
                elem.clear()
    except ET.ParseError as exc:
        line = exc.position[0] if getattr(exc, "position", None) else None
        raise OsmParseError(str(exc), line) from exc
    finally:
        if fh is not source:
            fh.close()

    ways = {}
    for wid, (refs, tags) in raw_ways.items():
        if any(r not in nodes for r in refs):
            warnings["missing_node_ref"] += 1
            continue
        if len(refs) < 2:
            warnings["short_way"] += 1
            continue
        ways[wid] = OsmWay(wid, refs, tags)
    for key, n in warnings.items():
        log.warning("osm: %d x %s", n, key)
    return OsmDocument(nodes, ways, warnings)


def write_osm_xml(nodes: Iterable[OsmNode], ways: Iterable[OsmWay]) -> bytes:
    """Serialize nodes and ways as a minimal OSM XML document."""
    out = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6" generator="streetlabel">']
    for n in nodes:
        out.append(f'  <node id="{n.id}" lat="{n.pos.lat_deg!r}" lon="{n.pos.lon_deg!r}"/>')
    for w in ways:
        out.append(f'  <way id="{w.id}">')
        out.extend(f'    <nd ref="{r}"/>' for r in w.node_ids)
        out.extend(f"    <tag k={quoteattr(k)} v={quoteattr(v)}/>" for k, v in w.tags.items())
        out.append("  </way>")
    out.append("</osm>")
    return ("\n".join(out) + "\n").encode("utf-8")


def _parse_positive_int(value: Optional[str]) -> Optional[int]:
    if value is None:
        return None
    try:
        n = int(value.strip())
    except ValueError:
        return None
    return n if n > 0 else None


def parse_road_attributes(tags: Mapping[str, str], warnings: Optional[Counter] = None) -> RoadAttributes:
    """Map OSM tags onto :class:`RoadAttributes`.

    ``oneway=-1`` is reported as oneway; callers reverse the node order so that
    the stored way direction is always the legal direction of travel.
    """
    highway = tags.get("highway", "unclassified")
    total = _parse_positive_int(tags.get("lanes"))
    fwd = _parse_positive_int(tags.get("lanes:forward"))
    bwd = _parse_positive_int(tags.get("lanes:backward"))
    if total is not None and fwd is not None and bwd is not None and fwd + bwd != total:
        if warnings is not None:
            warnings["inconsistent_lanes"] += 1
        fwd = bwd = None

    oneway_tag = tags.get("oneway")
    if oneway_tag is None:
        oneway = highway == "motorway" or tags.get("junction") == "roundabout"
    else:
        oneway = oneway_tag in _TRUE_VALUES or oneway_tag == "-1"

    both = tags.get("cycleway") in _BIKE_LANE_VALUES or tags.get("cycleway:both") in _BIKE_LANE_VALUES
    left = both or tags.get("cycleway:left") in _BIKE_LANE_VALUES
    right = both or tags.get("cycleway:right") in _BIKE_LANE_VALUES
    if oneway_tag == "-1":
        left, right = right, left
        fwd, bwd = bwd, fwd

    return RoadAttributes(
        lanes_total=total,
        lanes_forward=fwd,
        lanes_backward=bwd,
        oneway=oneway,
        bike_lane_left=left,
        bike_lane_right=right,
        highway_class=highway,
        name=tags.get("name"),
    )


def detect_intersections(segments: Iterable[Segment]) -> frozenset:
    """Nodes that end at least three segments drawn from at least two ways."""
    degree: Counter = Counter()
    owners: dict = defaultdict(set)
    for s in segments:
        for n in (s.node_a, s.node_b):
            degree[n] += 1
            owners[n].add(s.way_id)
    return frozenset(n for n, d in degree.items() if d >= 3 and len(owners[n]) >= 2)


def extract_road_network(
    nodes: Mapping[int, OsmNode],
    ways: Mapping[int, OsmWay],
    highways: Iterable[str] = DEFAULT_HIGHWAYS,
) -> RoadNetwork:
    allow = frozenset(highways)
    warnings: Counter = Counter()
    kept: dict = {}
    segments: list = []
    node_segments: dict = defaultdict(list)
    way_lengths: dict = {}
    for wid in sorted(ways):
        way = ways[wid]
        if way.tags.get("highway") not in allow:
            continue
        attrs = parse_road_attributes(way.tags, warnings)
        if way.tags.get("oneway") == "-1":
            way = OsmWay(way.id, tuple(reversed(way.node_ids)), way.tags)
        lengths = []
        for k, (a, b) in enumerate(zip(way.node_ids, way.node_ids[1:])):
            length = haversine_distance(nodes[a].pos, nodes[b].pos)
            lengths.append(length)
            if length <= 0.0:
                warnings["zero_length_segment"] += 1
                continue
            idx = len(segments)
            segments.append(Segment(wid, a, b, length, k))
            node_segments[a].append(idx)
            node_segments[b].append(idx)
        kept[wid] = (way, attrs)
        way_lengths[wid] = tuple(lengths)
    used = {n for s in segments for n in (s.node_a, s.node_b)}
    return RoadNetwork(
        nodes={n: nodes[n] for n in sorted(used)},
        ways=kept,
        segments=segments,
        intersections=detect_intersections(segments),
        node_segments=dict(node_segments),
        way_lengths=way_lengths,
        warnings=warnings,
    )


def load_network(source: Source, highways: Iterable[str] = DEFAULT_HIGHWAYS) -> RoadNetwork:
    doc = parse_osm_xml(source)
    net = extract_road_network(doc.nodes, doc.ways, highways)
    net.warnings.update(doc.warnings)
    return net


def lane_count(attrs: RoadAttributes, direction: str) -> Optional[int]:
    """Lanes available to traffic moving in ``direction`` along the way."""
    if attrs.oneway:
        if attrs.lanes_total is not None:
            return attrs.lanes_total
        return attrs.lanes_forward
    own, other = (
        (attrs.lanes_forward, attrs.lanes_backward)
        if direction == FORWARD
        else (attrs.lanes_backward, attrs.lanes_forward)
    )
    if own is not None:
        return own
    if attrs.lanes_total is None:
        return None
    if other is not None and attrs.lanes_total > other:
        return attrs.lanes_total - other
    return max(1, attrs.lanes_total // 2)


def bike_lane_present(attrs: RoadAttributes, direction: str, right_hand_traffic: bool = True) -> bool:
    # forward traffic keeps to the right side of the way under right-hand rules
    forward_side = attrs.bike_lane_right if right_hand_traffic else attrs.bike_lane_left
    backward_side = attrs.bike_lane_left if right_hand_traffic else attrs.bike_lane_right
    return forward_side if direction == FORWARD else backward_side
