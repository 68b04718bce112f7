"""Planar road model: one four-way crossing with a yellow box and signal heads.

Every approach feeds exactly one straight-through corridor, so a vehicle's
position is a single arc-length coordinate ``s`` measured from the scenario
edge where its approach starts:

    0 ............ stop_s | setback | box | setback | exit_s ............ length
         approach lane         (crossing, 50 m default)        exit lane
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import SimConfig


class GeometryError(ValueError):
    pass


class OutOfLane(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def dist(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class LaneSegment:
    id: str
    start: Point
    end: Point
    width: float
    approach_direction: str  # approach feeding this lane
    role: str  # "approach" | "exit"
    stop_line_s: float

    @property
    def length(self) -> float:
        return self.start.dist(self.end)


@dataclass(frozen=True)
class YellowBox:
    center: Point
    half_width: float
    half_height: float


@dataclass(frozen=True)
class Corridor:
    """Straight path of the vehicles entering from ``approach``."""

    approach: str
    start: Point
    ux: float
    uy: float
    length: float
    stop_s: float
    box_start_s: float
    box_end_s: float
    exit_s: float

    def point(self, s: float) -> Point:
        return Point(self.start.x + self.ux * s, self.start.y + self.uy * s)


@dataclass(frozen=True)
class Intersection:
    box: YellowBox
    signal_positions: dict  # approach -> Point
    rsu_positions: dict  # approach -> Point
    tcu_position: Point


@dataclass(frozen=True)
class RoadNetwork:
    lanes: tuple
    intersection: Intersection
    corridors: dict  # approach -> Corridor

    def lane(self, lane_id: str) -> LaneSegment:
        for lane in self.lanes:
            if lane.id == lane_id:
                return lane
        raise KeyError(lane_id)


OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}
AXIS = {"N": "NS", "S": "NS", "E": "EW", "W": "EW"}


def build_cross_network(cfg: SimConfig) -> RoadNetwork:
    """Two perpendicular roads crossing at the scenario centre."""
    w, h = cfg.scenario_width, cfg.scenario_height
    if cfg.signal_spacing >= min(w, h):
        raise GeometryError(
            f"signal_spacing {cfg.signal_spacing} must be below the scenario size {min(w, h)}"
        )
    side = cfg.signal_spacing - 2 * cfg.stop_setback
    if side <= 0:
        raise GeometryError("stop-line setbacks leave no room for the yellow box")
    cx, cy = w / 2, h / 2
    half = cfg.signal_spacing / 2
    off = cfg.lane_width / 2
    # (start point, unit vector, extent along travel axis); right-hand traffic
    specs = {
        "N": (Point(cx - off, h), 0.0, -1.0, h),
        "S": (Point(cx + off, 0.0), 0.0, 1.0, h),
        "E": (Point(w, cy + off), -1.0, 0.0, w),
        "W": (Point(0.0, cy - off), 1.0, 0.0, w),
    }
    corridors = {}
    lanes = []
    signals = {}
    for d, (start, ux, uy, extent) in specs.items():
        stop_s = extent / 2 - half
        exit_s = extent / 2 + half
        cor = Corridor(
            approach=d, start=start, ux=ux, uy=uy, length=extent, stop_s=stop_s,
            box_start_s=stop_s + cfg.stop_setback, box_end_s=exit_s - cfg.stop_setback,
            exit_s=exit_s,
        )
        corridors[d] = cor
        lanes.append(LaneSegment(f"approach_{d}", start, cor.point(stop_s), cfg.lane_width,
                                 d, "approach", stop_s))
        lanes.append(LaneSegment(f"exit_{d}", cor.point(exit_s), cor.point(extent),
                                 cfg.lane_width, d, "exit", 0.0))
        # signal head on the road centreline at the stop line
        signals[d] = Point(cx - ux * half, cy - uy * half)
    box = YellowBox(Point(cx, cy), side / 2, side / 2)
    inter = Intersection(box=box, signal_positions=signals, rsu_positions=dict(signals),
                         tcu_position=Point(cx, cy))
    return RoadNetwork(lanes=tuple(lanes), intersection=inter, corridors=corridors)


def point_in_box(p: Point, box: YellowBox) -> bool:
    return (abs(p.x - box.center.x) <= box.half_width
            and abs(p.y - box.center.y) <= box.half_height)


def lane_point(lane: LaneSegment, s: float) -> Point:
    length = lane.length
    if not 0.0 <= s <= length:
        raise OutOfLane(f"s={s} outside [0, {length}] on {lane.id}")
    if s == length:
        return lane.end
    f = s / length
    return Point(lane.start.x + (lane.end.x - lane.start.x) * f,
                 lane.start.y + (lane.end.y - lane.start.y) * f)


def approach_signal(active: str, stage: str, approach: str) -> str:
    """Signal shown to ``approach`` ("green", "yellow" or "red").

    ``active`` is the axis holding right of way ("NS_green" / "EW_green") and
    ``stage`` its stage ("green", "yellow", "all_red").
    """
    if stage == "all_red" or not active.startswith(AXIS[approach]):
        return "red"
    return stage
