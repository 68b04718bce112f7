"""OBU, RSU and TCU state machines.

All transitions are pure: they take a state and return a new one plus any
packets to hand to the radio (or the wired RSU-to-TCU link).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .config import DIRECTIONS, SimConfig
from .geometry import AXIS, Point, RoadNetwork, approach_signal
from .mobility import VehicleState
from .radio import Packet

EPS = 1e-9
INTERSECTION_ID = "I0"


@dataclass(frozen=True)
class BeaconPayload:
    vehicle: int
    position: Point
    speed: float
    approach: str


@dataclass(frozen=True)
class WarningPayload:
    intersection: str
    blocked: bool
    affected_approach: str
    issued_at: float
    expiry: float


@dataclass(frozen=True)
class ReportPayload:
    approach: str
    count: int


@dataclass(frozen=True)
class SignalPhase:
    active: str = "NS_green"  # or "EW_green"
    stage: str = "green"  # "green" | "yellow" | "all_red"
    stage_started_at: float = 0.0
    stage_duration: float = 30.0

    def signal_for(self, approach: str) -> str:
        return approach_signal(self.active, self.stage, approach)

    def signals(self) -> dict[str, str]:
        return {d: self.signal_for(d) for d in DIRECTIONS}


@dataclass(frozen=True)
class ObuState:
    vehicle: int
    next_beacon_at: float
    rx_count: int = 0
    neighbors: tuple = ()  # sorted (vehicle id, last heard at) pairs


@dataclass(frozen=True)
class RsuState:
    id: int
    approach: str
    position: Point
    detected: frozenset = frozenset()
    blocked: bool = False
    box_blocked_since: float | None = None
    clear_pending: bool = False
    last_warning_at: float | None = None
    last_report_at: float = 0.0
    # fixed emission offset into the tick, so co-located RSUs do not start
    # their warnings in the same instant and collide every time
    tx_offset: float = 0.0


@dataclass(frozen=True)
class TcuState:
    phase: SignalPhase
    queue_estimates: dict = field(default_factory=lambda: {d: 0 for d in DIRECTIONS})
    mode: str = "fixed"


@dataclass
class FleetView:
    """Column snapshot of the on-road fleet used for roadside sensing."""

    ids: np.ndarray
    approach: np.ndarray  # approach letter per vehicle
    s: np.ndarray
    v: np.ndarray
    length: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def from_vehicles(cls, vehicles, net: RoadNetwork) -> "FleetView":
        ids, app, s, v, length, x, y = [], [], [], [], [], [], []
        for veh in vehicles:
            if veh.mode == "exited":
                continue
            p = net.corridors[veh.approach].point(veh.s)
            ids.append(veh.id)
            app.append(veh.approach)
            s.append(veh.s)
            v.append(veh.v)
            length.append(veh.length)
            x.append(p.x)
            y.append(p.y)
        return cls(np.array(ids, dtype=np.int64), np.array(app, dtype="<U1"),
                   np.array(s, dtype=float), np.array(v, dtype=float),
                   np.array(length, dtype=float), np.array(x, dtype=float),
                   np.array(y, dtype=float))


# -- OBU ---------------------------------------------------------------------

def obu_tick(obu: ObuState, veh: VehicleState, t: float, cfg: SimConfig,
             seqs: Iterator[int], net: RoadNetwork) -> tuple[ObuState, Packet | None]:
    """Emit the beacon due in ``[t, t + mobility_dt)``, if any.

    Beacons fall on a per-vehicle jittered grid ``jitter + k * beacon_period``
    and carry their exact due time as ``created_at``.
    """
    due = obu.next_beacon_at
    if due >= t + cfg.mobility_dt - EPS or due >= cfg.duration:
        return obu, None
    obu = replace(obu, next_beacon_at=due + cfg.beacon_period)
    if veh.mode == "exited":
        return obu, None
    payload = BeaconPayload(veh.id, net.corridors[veh.approach].point(veh.s), veh.v, veh.approach)
    return obu, Packet(next(seqs), "beacon", cfg.normal_packet_bytes, veh.id, due, payload)


def expire_warning(veh: VehicleState, t: float) -> VehicleState:
    if veh.warning_active and veh.warning_expiry is not None and t >= veh.warning_expiry:
        return replace(veh, warning_active=False, warning_received_at=None, warning_expiry=None)
    return veh


def obu_receive(veh: VehicleState, obu: ObuState, pkt: Packet, t: float,
                mode: str = "protocol") -> tuple[VehicleState, ObuState]:
    obu = ObuState(obu.vehicle, obu.next_beacon_at, obu.rx_count + 1, obu.neighbors)
    if pkt.kind == "beacon":
        table = dict(obu.neighbors)
        table[pkt.src] = t
        return veh, replace(obu, neighbors=tuple(sorted(table.items())))
    if pkt.kind != "warning" or mode != "protocol":
        return veh, obu
    w: WarningPayload = pkt.payload
    if w.affected_approach != veh.approach:
        return veh, obu
    if not w.blocked:
        return replace(veh, warning_active=False, warning_received_at=None,
                       warning_expiry=None), obu
    if t >= w.expiry:
        return veh, obu
    first = t if veh.warning_received_at is None else min(veh.warning_received_at, t)
    expiry = w.expiry if veh.warning_expiry is None else max(veh.warning_expiry, w.expiry)
    if veh.warning_active and first == veh.warning_received_at and expiry == veh.warning_expiry:
        return veh, obu
    return replace(veh, warning_active=True, warning_received_at=first,
                   warning_expiry=expiry), obu


# -- RSU ---------------------------------------------------------------------

def rsu_sense(rsu: RsuState, fleet: FleetView, net: RoadNetwork, cfg: SimConfig, t: float,
              forced: bool = False) -> RsuState:
    """Detect vehicles in sensor range and decide whether the box is blocked.

    Blocked means a stationary sensed vehicle overlaps the yellow box, or the
    stationary queue on this approach's exit lane leaves less than one vehicle
    plus minimum gap of room past the box. Moving vehicles already past the
    stop line are headed for that queue, so each one claims a vehicle plus
    minimum gap of the room. Negative ids are sensed obstructions rather
    than radio nodes. ``forced`` injects blockage.
    """
    dx = fleet.x - rsu.position.x
    dy = fleet.y - rsu.position.y
    near = dx * dx + dy * dy <= cfg.sensor_range ** 2
    detected = frozenset(int(i) for i in fleet.ids[near & (fleet.ids >= 0)])
    cor = net.corridors[rsu.approach]
    s, v, length = fleet.s[near], fleet.v[near], fleet.length[near]
    still = v < cfg.stationary_speed
    # the box spans the same arc-length window on every corridor
    in_box = (s >= cor.box_start_s) & (s - length <= cor.box_end_s)
    blocked = bool(np.any(still & in_box))
    if not blocked:
        past = (fleet.approach[near] == rsu.approach) & (s > cor.stop_s)
        downstream = still & past & (s - length > cor.box_end_s)
        if np.any(downstream):
            tail = float(np.min(s[downstream] - length[downstream]))
            heading = int(np.count_nonzero(past & ~still & (s < tail)))
            room = cfg.vehicle_length + cfg.min_gap
            blocked = tail - cor.box_end_s - heading * room < room
    blocked = blocked or forced
    since = rsu.box_blocked_since
    clear_pending = rsu.clear_pending
    if blocked and since is None:
        since = t
    elif not blocked and since is not None:
        since = None
        clear_pending = True
    return replace(rsu, detected=detected, blocked=blocked, box_blocked_since=since,
                   clear_pending=clear_pending)


def approach_queue(rsu: RsuState, fleet: FleetView, net: RoadNetwork) -> int:
    """Detected vehicles on this RSU's approach that have not yet passed the stop line."""
    if not rsu.detected:
        return 0
    idx = np.isin(fleet.ids, np.fromiter(rsu.detected, dtype=np.int64))
    mine = idx & (fleet.approach == rsu.approach) & (fleet.s <= net.corridors[rsu.approach].stop_s)
    return int(np.count_nonzero(mine))


def rsu_tick(rsu: RsuState, t: float, cfg: SimConfig, seqs: Iterator[int],
             queue: int = 0) -> tuple[RsuState, list[Packet], Packet | None]:
    """Returns (state, radio warnings, wired report).

    Warnings decided at tick ``t`` are issued at ``t + rsu.tx_offset``.
    """
    warnings = []
    at = t + rsu.tx_offset
    protocol = cfg.mode == "protocol"
    if rsu.clear_pending:
        if protocol:
            payload = WarningPayload(INTERSECTION_ID, False, rsu.approach, at, at + cfg.warning_expiry)
            warnings.append(Packet(next(seqs), "warning", cfg.warning_packet_bytes, rsu.id, at, payload))
        rsu = replace(rsu, clear_pending=False, last_warning_at=None)
    if rsu.blocked and t - rsu.box_blocked_since >= cfg.t_confirm - EPS:
        due = rsu.last_warning_at is None or t - rsu.last_warning_at >= cfg.warning_repeat_period - EPS
        if due:
            if protocol:
                payload = WarningPayload(INTERSECTION_ID, True, rsu.approach, at, at + cfg.warning_expiry)
                warnings.append(Packet(next(seqs), "warning", cfg.warning_packet_bytes, rsu.id, at, payload))
            rsu = replace(rsu, last_warning_at=t)
    report = None
    if t - rsu.last_report_at >= cfg.report_period - EPS:
        report = Packet(next(seqs), "report", cfg.normal_packet_bytes, rsu.id, t,
                        ReportPayload(rsu.approach, queue))
        rsu = replace(rsu, last_report_at=t)
    return rsu, warnings, report


# -- TCU ---------------------------------------------------------------------

def initial_tcu(cfg: SimConfig) -> TcuState:
    return TcuState(phase=SignalPhase("NS_green", "green", 0.0, cfg.green_time),
                    mode=cfg.signal_mode)


def tcu_tick(tcu: TcuState, t: float, reports, cfg: SimConfig) -> tuple[TcuState, dict[str, str]]:
    """Advance the signal plan; ``reports`` are wired report packets arrived by ``t``."""
    queues = dict(tcu.queue_estimates)
    for pkt in reports:
        queues[pkt.payload.approach] = pkt.payload.count
    ph = tcu.phase
    # zero-length stages are not allowed, so one transition per tick suffices
    if t - ph.stage_started_at >= ph.stage_duration - EPS:
        if ph.stage == "green":
            elapsed = t - ph.stage_started_at
            green_axis = ph.active[:2]
            green_q = sum(q for d, q in queues.items() if AXIS[d] == green_axis)
            red_q = sum(q for d, q in queues.items() if AXIS[d] != green_axis)
            if (tcu.mode == "adaptive" and elapsed < cfg.green_max - EPS and green_q > red_q):
                ext = min(ph.stage_duration + cfg.green_extension, cfg.green_max)
                ph = replace(ph, stage_duration=ext)
            else:
                ph = SignalPhase(ph.active, "yellow", t, cfg.yellow_time)
        elif ph.stage == "yellow":
            ph = SignalPhase(ph.active, "all_red", t, cfg.all_red_time)
        else:
            nxt = "EW_green" if ph.active == "NS_green" else "NS_green"
            ph = SignalPhase(nxt, "green", t, cfg.green_time)
    tcu = replace(tcu, phase=ph, queue_estimates=queues)
    return tcu, ph.signals()


# -- post-run classification ---------------------------------------------------

def in_episode(approach: str, t: float, episodes) -> bool:
    """``episodes`` holds ``(approach, onset, first_warning_at, clear_at)``; clear_at may be None."""
    for ap, onset, _first, clear in episodes:
        if ap == approach and onset <= t and (clear is None or t < clear):
            return True
    return False


def classify_blind(entry, episodes) -> bool:
    """``entry`` is a decision-zone entry ``(vehicle, approach, t, warning_active)``."""
    _vid, approach, t, warned = entry
    return (not warned) and in_episode(approach, t, episodes)
