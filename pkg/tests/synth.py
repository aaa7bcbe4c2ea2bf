"""Synthetic road maps and poses built in a local metric frame."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from streetlabel.geo import GeoPoint, LocalVec, from_local, to_local
from streetlabel.osm import OsmNode, OsmWay, extract_road_network, write_osm_xml
from streetlabel.pose import CameraPose

ORIGIN = GeoPoint.from_degrees(43.4723, -80.5449)


class MapBuilder:
    def __init__(self, origin: GeoPoint = ORIGIN):
        self.origin = origin
        self.nodes: dict[int, OsmNode] = {}
        self.ways: dict[int, OsmWay] = {}
        self._at: dict[tuple, int] = {}

    def node(self, east: float, north: float) -> int:
        key = (round(east, 6), round(north, 6))
        if key not in self._at:
            nid = len(self.nodes) + 1
            self.nodes[nid] = OsmNode(nid, from_local(self.origin, LocalVec(east, north)))
            self._at[key] = nid
        return self._at[key]

    def way(self, points, **tags) -> int:
        wid = 1000 + len(self.ways)
        ids = tuple(self.node(e, n) for e, n in points)
        tags.setdefault("highway", "residential")
        self.ways[wid] = OsmWay(wid, ids, {k.replace("__", ":"): str(v) for k, v in tags.items()})
        return wid

    def network(self):
        return extract_road_network(self.nodes, self.ways)

    def xml(self) -> bytes:
        return write_osm_xml(self.nodes.values(), self.ways.values())


def pose_at(east, north, heading_deg, pano_id="p", origin=ORIGIN) -> CameraPose:
    return CameraPose(pano_id, from_local(origin, LocalVec(east, north)), math.radians(heading_deg))


def pose_record(pose: CameraPose) -> dict:
    return {"pano_id": pose.pano_id, "lat": pose.pos.lat_deg, "lon": pose.pos.lon_deg,
            "heading": math.degrees(pose.heading)}


def random_network(rng: np.random.Generator, max_segments: int = 200, extent: float = 1000.0):
    """Random polylines, some starting from existing nodes, within ``extent`` meters."""
    b = MapBuilder()
    target = int(rng.integers(20, max_segments + 1))
    count = 0
    placed: list[tuple[float, float]] = []
    while count < target:
        if placed and rng.random() < 0.4:
            start = placed[int(rng.integers(len(placed)))]
        else:
            start = tuple(float(v) for v in rng.uniform(-extent / 2, extent / 2, 2))
        pts = [start]
        heading = rng.uniform(0, 2 * math.pi)
        for _ in range(int(rng.integers(1, min(7, target - count) + 1))):
            heading += rng.normal(0, 0.5)
            step = rng.uniform(15, 90)
            e, n = pts[-1]
            pts.append((e + step * math.sin(heading), n + step * math.cos(heading)))
        b.way(pts, highway="residential", lanes=int(rng.integers(1, 5)))
        placed.extend(pts)
        count += len(pts) - 1
    return b


def random_poses(rng: np.random.Generator, builder: MapBuilder, n: int, extent: float = 1000.0):
    """Half scattered uniformly, half placed within 30 m of some node."""
    nodes = list(builder.nodes.values())
    poses = []
    for k in range(n):
        if k % 2:
            e, nn = rng.uniform(-extent / 2 - 50, extent / 2 + 50, 2)
        else:
            v = to_local(builder.origin, nodes[int(rng.integers(len(nodes)))].pos)
            off = rng.uniform(-30, 30, 2)
            e, nn = v.east + off[0], v.north + off[1]
        pos = from_local(builder.origin, LocalVec(float(e), float(nn)))
        poses.append(CameraPose(f"r{k}", pos, float(rng.uniform(0, 2 * math.pi))))
    return poses


# --- micro-city ---------------------------------------------------------------

CROSSINGS = (0.0, 200.0, 400.0, 600.0)
STREET_START, STREET_END = -100.0, 700.0


@dataclass
class Street:
    name: str
    axis: str  # "ns": runs north-south at x = pos; "ew": runs east-west at y = pos
    pos: float
    lanes_per_dir: int = 1
    oneway: bool = False
    bike_forward: bool = False  # bike lane for traffic moving toward increasing coordinate
    bike_backward: bool = False
    way_ids: list = field(default_factory=list)


def micro_city():
    """4 x 4 crossings of streets with 100 m stubs: a 5 x 5 block grid.

    Streets carry nodes every 50 m. ``ns200`` is a 3-lane oneway northbound
    avenue, ``ew400`` has bike lanes both ways, ``ns600`` a bike lane on its
    right side only, ``ew200`` has four lanes and is split into two ways at
    x = 300, and ``ns400`` is drawn north to south.
    """
    b = MapBuilder()
    streets = []
    coords = np.arange(STREET_START, STREET_END + 1, 50.0)
    for axis in ("ns", "ew"):
        for c in CROSSINGS:
            st = Street(f"{axis}{int(c)}", axis, c)
            tags = {"name": st.name, "lanes": 2}
            pts = [(c, float(u)) if axis == "ns" else (float(u), c) for u in coords]
            if st.name == "ns200":
                st.oneway = True
                st.lanes_per_dir = 3
                tags.update(highway="secondary", oneway="yes", lanes=3)
            elif st.name == "ew400":
                st.bike_forward = st.bike_backward = True
                tags["cycleway"] = "lane"
            elif st.name == "ns600":
                st.bike_forward = True
                tags["cycleway__right"] = "lane"
            elif st.name == "ew200":
                st.lanes_per_dir = 2
                tags["lanes"] = 4
            if st.name == "ns400":
                pts = pts[::-1]
            if st.name == "ew200":
                cut = next(i for i, p in enumerate(pts) if p[0] == 300.0)
                st.way_ids.append(b.way(pts[: cut + 1], **tags))
                st.way_ids.append(b.way(pts[cut:], **tags))
            else:
                st.way_ids.append(b.way(pts, **tags))
            streets.append(st)
    return b, streets


@dataclass
class Truth:
    pose: CameraPose
    heading_angle_deg: float | None
    drivable: bool | None
    distance: float | None
    ahead: object
    lanes: int | None
    wrong_way: bool | None
    bike: bool | None


def _ahead(d, near=30.0, far=100.0):
    if d is None or d > far:
        return False
    return True if d <= near else "ambiguous"


def micro_city_poses(streets):
    """Poses along every street with analytically derived labels."""
    us = sorted(set(np.arange(-95.0, STREET_END, 25.0).tolist()) | {-92.0, 692.0})
    heading_offsets = (0.0, 10.0, -15.0, 20.0, -30.0, 40.0, 5.0, -22.0)
    laterals = (3.0, -3.0, 2.5, -2.0)
    out = []
    k = 0
    for st in streets:
        for u in us:
            if min(abs(u - c) for c in CROSSINGS) < 12.0:
                continue
            for direction in (1, -1):
                h_off = heading_offsets[k % len(heading_offsets)]
                lat = 2.0 if st.oneway else laterals[k % len(laterals)]
                k += 1
                if st.axis == "ns":
                    d = (0.0, float(direction))
                    base = (st.pos, u)
                else:
                    d = (float(direction), 0.0)
                    base = (u, st.pos)
                right = (d[1], -d[0])
                east = base[0] + lat * right[0]
                north = base[1] + lat * right[1]
                travel = math.degrees(math.atan2(d[0], d[1])) % 360.0
                pose = pose_at(east, north, travel + h_off, f"{st.name}_{k}")

                ahead_crossings = [c for c in CROSSINGS if (c - u) * direction > 0]
                dist = min(abs(c - u) for c in ahead_crossings) if ahead_crossings else None
                if dist is not None and dist > 150.0:
                    dist = None
                if dist is not None and min(abs(dist - 30.0), abs(dist - 100.0)) < 0.5:
                    # keep away from thresholds the planar/spherical mismatch could tip
                    continue
                to_end = (STREET_END - u) if direction > 0 else (u - STREET_START)
                continues = bool(ahead_crossings) or to_end >= 15.0
                if st.oneway:
                    wrong = direction < 0
                    lanes = st.lanes_per_dir
                else:
                    wrong = lat < 0
                    lanes = st.lanes_per_dir
                bike = st.bike_forward if direction > 0 else st.bike_backward
                out.append(Truth(pose, h_off, abs(h_off) <= 22.5 and continues, dist, _ahead(dist),
                                 lanes, wrong, bike))
    # block centres: 100 m from every street
    for i, x in enumerate((-50.0, 100.0, 300.0, 500.0, 650.0)):
        for j, y in enumerate((-50.0, 100.0, 300.0, 500.0, 650.0)):
            out.append(Truth(pose_at(x, y, 37.0, f"void_{i}_{j}"), None, None, None, None, None, None, None))
    return out


def scale_grid(streets_per_axis: int = 50, segs_per_street: int = 100, step: float = 20.0):
    """Square street grid with ``2 * streets_per_axis * segs_per_street`` segments."""
    b = MapBuilder()
    extent = segs_per_street * step
    spacing = extent / streets_per_axis
    for axis in ("ns", "ew"):
        for i in range(streets_per_axis):
            c = i * spacing
            us = [k * step for k in range(segs_per_street + 1)]
            pts = [(c, u) if axis == "ns" else (u, c) for u in us]
            b.way(pts, name=f"{axis}{i}", lanes=2 + i % 3, **({"oneway": "yes"} if i % 7 == 0 else {}))
    return b


def scale_poses(n: int, streets_per_axis: int = 50, segs_per_street: int = 100, step: float = 20.0, seed: int = 0):
    """``n`` poses 2 m beside grid streets, spaced far enough apart to survive dedupe."""
    rng = np.random.default_rng(seed)
    extent = segs_per_street * step
    spacing = extent / streets_per_axis
    per_street = -(-n // (2 * streets_per_axis))
    along = extent / per_street
    poses = []
    for axis in ("ns", "ew"):
        for i in range(streets_per_axis):
            for k in range(per_street):
                if len(poses) == n:
                    return poses
                u = (k + 0.5) * along
                h = float(rng.uniform(-40, 40)) + (0.0 if axis == "ns" else 90.0) + float(rng.choice([0, 180]))
                e, nn = (i * spacing + 2.0, u) if axis == "ns" else (u, i * spacing - 2.0)
                poses.append(pose_at(e, nn, h, f"s{axis}{i}_{k}"))
    return poses
