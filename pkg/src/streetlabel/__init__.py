"""Automatic driving-affordance labels from OpenStreetMap for street-level camera poses."""

from ._kernels import BACKEND
from .geo import GeoPoint, LocalVec, angle_diff, haversine_distance, initial_bearing, project_point_to_segment, to_local
from .index import MatchConfig, MatchResult, SegmentIndex, build_index, nearest_segment, segments_within
from .labeler import AffordanceRecord, CameraPose, LabelConfig, label_pose
from .osm import RoadAttributes, RoadNetwork, extract_road_network, load_network, parse_osm_xml

__version__ = "0.1.0"
