"""Hybrid discrete-event engine.

Mobility and protocol logic run on a fixed ``mobility_dt`` grid; radio
activity (frame readiness, CSMA deferral, transmission start/end) happens in
continuous time between grid points. Every event carries a total-order key
``(time, node, seq, insertion counter)``; grid events use negative node ids
so they run before radio events of the same instant, and ``sim_end`` uses a
sentinel id so it runs last.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import math
import time as _time
import zlib
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import DIRECTIONS, SimConfig, render_config, validate_config
from .geometry import RoadNetwork, build_cross_network, point_in_box
from .metrics import LedgerBuilder, MetricsReport, PacketLedger, RunLogs, compute_report
from .mobility import (VehicleState, safe_speed, spawn_fleet, step_vehicle, stop_target)
from .protocol import (FleetView, ObuState, RsuState, approach_queue, expire_warning,
                       initial_tcu, obu_receive, obu_tick, rsu_sense, rsu_tick, tcu_tick)
from .radio import (DELIVERED, OUTCOMES, PENDING, Deliveries, Transmission, airtime,
                    csma_access, pairwise_d2, resolve_deliveries)
from .geometry import Point

EVENT_KINDS = ("mobility_tick", "protocol_tick", "tx_start", "tx_end", "wired_delivery",
               "blockage_inject", "blockage_clear", "sim_end")

NODE_BLOCKAGE, NODE_MOBILITY, NODE_PROTOCOL = -3, -2, -1
NODE_END = 2 ** 62
EPS = 1e-9


class CausalityViolation(RuntimeError):
    pass


class RuntimeFault(RuntimeError):
    pass


@dataclass
class Event:
    time: float
    kind: str
    node: int = NODE_PROTOCOL
    seq: int = -1
    data: object = None
    counter: int = 0

    @property
    def ordinal(self) -> tuple:
        return (self.node, self.seq, self.counter)


class EventQueue:
    def __init__(self):
        self._heap = []
        self._counter = itertools.count()
        self.now = 0.0

    def schedule(self, time: float, kind: str, node: int = NODE_PROTOCOL, seq: int = -1,
                 data=None) -> Event:
        if time < self.now:
            raise CausalityViolation(f"{kind} at t={time!r} scheduled from t={self.now!r}")
        ev = Event(time, kind, node, seq, data, next(self._counter))
        heapq.heappush(self._heap, (time, node, seq, ev.counter, ev))
        return ev

    def next_event(self) -> Event:
        ev = heapq.heappop(self._heap)[-1]
        self.now = ev.time
        return ev

    def __len__(self) -> int:
        return len(self._heap)


def rng_stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator per concern, keyed by a fixed label."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(label.encode()),)))


@dataclass(frozen=True)
class StaticVehicle:
    """A parked vehicle for hand-traceable scenarios."""

    approach: str
    s: float
    beacon_offset: float


@dataclass(frozen=True)
class Scenario:
    static_vehicles: tuple | None = None
    rsu_approaches: str = DIRECTIONS
    # (approach, t_from, t_to): the approach's RSU deems the box blocked
    forced_blockages: tuple = ()
    # per-RSU warning emission offsets in [0, mobility_dt); drawn when None
    rsu_offsets: tuple | None = None


@dataclass
class SimResult:
    metrics: MetricsReport
    ledger: PacketLedger
    logs: RunLogs
    config: SimConfig
    seed: int
    wall_time: float
    trace: list = field(default_factory=list)
    ticks_checked: int = 0

    def digest(self) -> str:
        h = hashlib.sha256(self.ledger.digest().encode())
        h.update(self.logs.to_json().encode())
        return h.hexdigest()


@dataclass
class _Mac:
    queue: deque = field(default_factory=deque)
    transmitting: bool = False
    pkt: object = None  # packet under contention
    ready_at: float = 0.0
    draw: int | None = None


class Simulation:
    def __init__(self, cfg: SimConfig, scenario: Scenario | None = None, trace: bool = False,
                 check_invariants: bool = True):
        self.cfg = validate_config(cfg)
        self.scenario = scenario or Scenario()
        self.net: RoadNetwork = build_cross_network(cfg)
        self.trace_on = trace
        self.trace: list[str] = []
        self.check = check_invariants
        self.ticks_checked = 0
        self.rng = {label: rng_stream(cfg.seed, label)
                    for label in ("spawn", "recycle", "jitter", "backoff", "loss")}
        self.queue = EventQueue()
        self.seqs = itertools.count()
        self.ledger = LedgerBuilder()
        self.logs = RunLogs(duration=cfg.duration, num_vehicles=cfg.num_vehicles,
                            violation_dwell=cfg.violation_dwell)

        sc = self.scenario
        if sc.static_vehicles is not None:
            if len(sc.static_vehicles) != cfg.num_vehicles:
                raise ValueError("num_vehicles must match the static vehicle list")
            self.vehicles = [
                VehicleState(i, sv.approach, sv.s, 0.0, min(cfg.speed_min, cfg.speed_max),
                             cfg.vehicle_length)
                for i, sv in enumerate(sc.static_vehicles)
            ]
            self.static = True
            jitter = [sv.beacon_offset for sv in sc.static_vehicles]
        else:
            self.vehicles = spawn_fleet(cfg, self.net, self.rng["spawn"])
            self.static = False
            jitter = list(self.rng["jitter"].uniform(0.0, cfg.beacon_period, size=cfg.num_vehicles))
        n = cfg.num_vehicles
        self.n_veh = n
        self.obus = [ObuState(i, float(jitter[i])) for i in range(n)]
        inter = self.net.intersection
        offsets = sc.rsu_offsets
        if offsets is None:
            offsets = self.rng["jitter"].uniform(0.0, cfg.mobility_dt, size=len(sc.rsu_approaches))
        if len(offsets) != len(sc.rsu_approaches):
            raise ValueError("one warning offset per RSU")
        self.rsus = [RsuState(n + k, d, inter.rsu_positions[d], tx_offset=float(offsets[k]))
                     for k, d in enumerate(sc.rsu_approaches)]
        self.tcu_id = n + len(self.rsus)
        self.n_nodes = n + len(self.rsus)
        self.ranges = np.array([cfg.vehicle_range] * n + [cfg.sensor_range] * len(self.rsus))
        self.macs = [_Mac() for _ in range(self.n_nodes)]
        # beacon bookkeeping kept columnar: last time vehicle i heard node j
        self.heard = np.full((n, self.n_nodes), -np.inf)
        self.rx_count = np.zeros(self.n_nodes, dtype=np.int64)
        self._d2 = None
        self.contending: set[int] = set()
        self.recent: list[Transmission] = []
        self.max_air = airtime(max(cfg.normal_packet_bytes, cfg.warning_packet_bytes),
                               cfg.data_rate, cfg.phy_overhead, cfg.mac_header_bytes)

        # front-to-back vehicle ids per corridor; vehicles never overtake
        self.order = {d: [] for d in DIRECTIONS}
        for veh in sorted(self.vehicles, key=lambda v: (-v.s, v.id)):
            self.order[veh.approach].append(veh.id)
        self.backlog = {d: deque() for d in DIRECTIONS}
        self.positions = np.full((self.n_nodes, 2), np.nan)
        for veh in self.vehicles:
            p = self.net.corridors[veh.approach].point(veh.s)
            self.positions[veh.id] = (p.x, p.y)
        for rsu in self.rsus:
            self.positions[rsu.id] = (rsu.position.x, rsu.position.y)

        self.tcu = initial_tcu(cfg)
        self.signals = self.tcu.phase.signals()
        self.logs.phase_log.append((0.0, self.tcu.phase.active, self.tcu.phase.stage))
        self.inbox = []
        self.obstructions: dict[str, float] = {}
        self.forced: set[str] = set()
        self.open_episode: dict[str, list] = {}
        self.in_box_since: dict[int, float] = {}
        self.warned_at_line: dict[int, bool] = {}

    # -- tracing ---------------------------------------------------------------

    def _t(self, t: float, text: str) -> None:
        if self.trace_on:
            self.trace.append(f"{t:.9f} {text}")

    # -- main loop -------------------------------------------------------------

    def run(self) -> SimResult:
        cfg = self.cfg
        started = _time.perf_counter()
        q = self.queue
        dt = cfg.mobility_dt
        self.n_ticks = max(1, math.ceil(cfg.duration / dt - EPS))
        q.schedule(0.0, "protocol_tick", NODE_PROTOCOL, 0)
        if 1 * dt <= cfg.duration + EPS:
            q.schedule(min(dt, cfg.duration), "mobility_tick", NODE_MOBILITY, 1)
        for d in cfg.blockage_approaches:
            q.schedule(cfg.blockage_start, "blockage_inject", NODE_BLOCKAGE, data=("obstruction", d))
            if cfg.blockage_end <= cfg.duration:
                q.schedule(cfg.blockage_end, "blockage_clear", NODE_BLOCKAGE, data=("obstruction", d))
        for d, t0, t1 in self.scenario.forced_blockages:
            q.schedule(t0, "blockage_inject", NODE_BLOCKAGE, data=("forced", d))
            if t1 <= cfg.duration:
                q.schedule(t1, "blockage_clear", NODE_BLOCKAGE, data=("forced", d))
        q.schedule(cfg.duration, "sim_end", NODE_END)
        handlers = {
            "mobility_tick": self._on_mobility,
            "protocol_tick": self._on_protocol,
            "tx_start": self._on_tx_start,
            "tx_end": self._on_tx_end,
            "wired_delivery": self._on_wired,
            "blockage_inject": self._on_blockage,
            "blockage_clear": self._on_blockage,
        }
        last = -math.inf
        while True:
            ev = q.next_event()
            if ev.time < last or ev.time > cfg.duration:
                raise RuntimeFault(f"clock fault at {ev.kind} t={ev.time!r}")
            last = ev.time
            if ev.kind == "sim_end":
                self._on_end(ev.time)
                break
            handlers[ev.kind](ev)
        ledger = self.ledger.build()
        report = compute_report(ledger, self.logs)
        return SimResult(report, ledger, self.logs, cfg, cfg.seed,
                         _time.perf_counter() - started, self.trace, self.ticks_checked)

    # -- blockage injection ----------------------------------------------------

    def _on_blockage(self, ev: Event) -> None:
        source, d = ev.data
        cor = self.net.corridors[d]
        if ev.kind == "blockage_inject":
            if source == "forced":
                self.forced.add(d)
            else:
                self.obstructions[d] = cor.box_end_s + self.cfg.blockage_offset
        else:
            if source == "forced":
                self.forced.discard(d)
            else:
                self.obstructions.pop(d, None)
        self._t(ev.time, f"{ev.kind} approach={d} source={source}")

    # -- mobility --------------------------------------------------------------

    def _on_mobility(self, ev: Event) -> None:
        cfg = self.cfg
        k = ev.seq
        t = ev.time
        t_prev = (k - 1) * cfg.mobility_dt
        if (k + 1) * cfg.mobility_dt <= cfg.duration + EPS:
            self.queue.schedule((k + 1) * cfg.mobility_dt, "mobility_tick", NODE_MOBILITY, k + 1)
        if self.static:
            return
        dt = t - t_prev
        pos = self.positions.copy()
        vehicles = self.vehicles
        logs = self.logs
        in_box_since = self.in_box_since
        still = cfg.stationary_speed
        for d in DIRECTIONS:
            cor = self.net.corridors[d]
            order = self.order[d]
            signal = self.signals[d]
            stop_s, box_start, box_end = cor.stop_s, cor.box_start_s, cor.box_end_s
            zone_s = max(stop_s - cfg.decision_zone, 0.0)
            phantom = None
            obs = self.obstructions.get(d)
            if obs is not None:
                phantom = self._phantom(d)
            lead = None
            kept = []
            for vid in order:
                veh = vehicles[vid]
                eff = lead
                if phantom is not None and veh.s <= obs and (eff is None or phantom.rear < eff.rear):
                    eff = phantom
                stop = stop_target(veh, signal, veh.warning_active, cor, cfg.mode)
                new = step_vehicle(veh, eff, stop, dt, cfg, cor, t)
                s0, s1 = veh.s, new.s
                if s0 <= stop_s < s1:
                    crossed = t_prev + (stop_s - s0) / new.v
                    logs.crossings.append((vid, d, crossed))
                    # a warning that arrives after the stop line cannot stop the vehicle
                    self.warned_at_line[vid] = veh.warning_active
                if s0 < zone_s <= s1:
                    logs.zone_entries.append((vid, d, t, veh.warning_active))
                if s0 < box_start <= s1:
                    logs.box_entries.append((vid, d, t, self.warned_at_line.pop(vid, False)))
                if self.check:
                    self._check_vehicle(veh, new, eff, cor, t)
                if new.mode == "exited":
                    self._close_box_dwell(vid, t)
                    logs.trips.append((vid, d, veh.spawn_time, t))
                    target = "NSEW"[int(self.rng["recycle"].integers(4))]
                    self.backlog[target].append(vid)
                    vehicles[vid] = new
                    pos[vid] = (np.nan, np.nan)
                    self._drop_mac(vid)
                    continue
                if s1 >= box_start and s1 - new.length <= box_end and new.v < still:
                    in_box_since.setdefault(vid, t)
                elif vid in in_box_since:
                    self._close_box_dwell(vid, t)
                vehicles[vid] = new
                pos[vid] = (cor.start.x + cor.ux * s1, cor.start.y + cor.uy * s1)
                kept.append(vid)
                lead = new
            self.order[d] = kept
        for d in DIRECTIONS:
            cor = self.net.corridors[d]
            order = self.order[d]
            waiting = self.backlog[d]
            while waiting:
                gap = math.inf
                if order:
                    gap = vehicles[order[-1]].rear - cfg.min_gap
                    if gap < 0.0:
                        break
                vid = waiting.popleft()
                old = vehicles[vid]
                v = old.v_desired if gap == math.inf else min(
                    old.v_desired, safe_speed(gap, old.v_desired, cfg.tau))
                vehicles[vid] = VehicleState(vid, d, 0.0, v, old.v_desired, old.length,
                                             spawn_time=t)
                order.append(vid)
                pos[vid] = (cor.start.x, cor.start.y)
        if self.check:
            self._check_lanes(t)
        self.positions = pos
        self._d2 = None

    def _close_box_dwell(self, vid: int, t: float) -> None:
        since = self.in_box_since.pop(vid, None)
        if since is not None:
            self.logs.stationary_in_box.append((vid, since, t))

    def _check_vehicle(self, veh, new, lead, cor, t) -> None:
        cfg = self.cfg
        if not (0.0 <= new.v <= new.v_desired <= cfg.speed_max + EPS):
            raise RuntimeFault(f"speed bound violated by vehicle {veh.id} at t={t}")
        if new.s < veh.s:
            raise RuntimeFault(f"vehicle {veh.id} reversed at t={t}")
        if lead is not None and lead.id >= 0 and lead.rear - new.s < -EPS:
            raise RuntimeFault(f"vehicle {veh.id} overlaps {lead.id} at t={t}")
        if veh.warning_active and veh.s <= cor.stop_s and cfg.mode == "protocol":
            if point_in_box(cor.point(new.s), self.net.intersection.box):
                raise RuntimeFault(f"warned vehicle {veh.id} entered the box at t={t}")

    def _check_lanes(self, t: float) -> None:
        self.ticks_checked += 1
        for d, order in self.order.items():
            for a, b in zip(order, order[1:]):
                front, back = self.vehicles[a], self.vehicles[b]
                if front.rear - back.s < -EPS:
                    raise RuntimeFault(f"same-lane overlap {a}/{b} on {d} at t={t}")

    # -- protocol tick -----------------------------------------------------------

    def _fleet_view(self) -> FleetView:
        on = [v for v in self.vehicles if v.mode != "exited"]
        ids = np.array([v.id for v in on], dtype=np.int64)
        app = [v.approach for v in on]
        s = [v.s for v in on]
        speed = [v.v for v in on]
        length = [v.length for v in on]
        x = list(self.positions[ids, 0]) if ids.size else []
        y = list(self.positions[ids, 1]) if ids.size else []
        # an exit-lane obstruction is visible to roadside sensors like a halted vehicle
        for k, d in enumerate(sorted(self.obstructions)):
            phantom = self._phantom(d)
            p = self.net.corridors[d].point(phantom.s)
            ids = np.append(ids, -1 - k)
            app.append(d)
            s.append(phantom.s)
            speed.append(0.0)
            length.append(phantom.length)
            x.append(p.x)
            y.append(p.y)
        return FleetView(ids, np.array(app, dtype="<U1"), np.array(s, dtype=float),
                         np.array(speed, dtype=float), np.array(length, dtype=float),
                         np.array(x, dtype=float), np.array(y, dtype=float))

    def _phantom(self, d: str) -> VehicleState:
        cfg = self.cfg
        return VehicleState(-1, d, self.obstructions[d] + cfg.min_gap + cfg.vehicle_length, 0.0,
                            cfg.speed_min, cfg.vehicle_length)

    def _on_protocol(self, ev: Event) -> None:
        cfg = self.cfg
        k = ev.seq
        t = ev.time
        if (k + 1) * cfg.mobility_dt < cfg.duration - EPS:
            self.queue.schedule((k + 1) * cfg.mobility_dt, "protocol_tick", NODE_PROTOCOL, k + 1)
        fleet = self._fleet_view()
        for i, rsu in enumerate(self.rsus):
            new = rsu_sense(rsu, fleet, self.net, cfg, t, forced=rsu.approach in self.forced)
            d = rsu.approach
            if new.box_blocked_since is not None and rsu.box_blocked_since is None:
                ep = [d, t, None, None]
                self.open_episode[d] = ep
                self.logs.episodes.append(ep)
            elif new.box_blocked_since is None and rsu.box_blocked_since is not None:
                self.open_episode.pop(d)[3] = t
            queue = 0
            if t - new.last_report_at >= cfg.report_period - EPS:
                queue = approach_queue(new, fleet, self.net)
            new, warnings, report = rsu_tick(new, t, cfg, self.seqs, queue)
            self.rsus[i] = new
            for pkt in warnings:
                ep = self.open_episode.get(d)
                if pkt.payload.blocked and ep is not None and ep[2] is None:
                    ep[2] = pkt.created_at
                self._created(pkt)
            if report is not None:
                self.queue.schedule(t + cfg.wired_latency, "wired_delivery", new.id, report.seq,
                                    data=report)
        tcu, signals = tcu_tick(self.tcu, t, self.inbox, cfg)
        self.inbox = []
        if (tcu.phase.active, tcu.phase.stage) != (self.tcu.phase.active, self.tcu.phase.stage):
            self.logs.phase_log.append((t, tcu.phase.active, tcu.phase.stage))
        self.tcu = tcu
        self.signals = signals
        horizon = t + cfg.mobility_dt - EPS
        vehicles, obus = self.vehicles, self.obus
        for vid in range(self.n_veh):
            veh = vehicles[vid]
            if veh.warning_active:
                veh = vehicles[vid] = expire_warning(veh, t)
            if obus[vid].next_beacon_at < horizon:
                obus[vid], pkt = obu_tick(obus[vid], veh, t, cfg, self.seqs, self.net)
                if pkt is not None:
                    self._created(pkt)

    def _on_wired(self, ev: Event) -> None:
        self.inbox.append(ev.data)
        if self.trace_on:
            self._t(ev.time, f"wired_delivery node={ev.node} seq={ev.seq} "
                         f"approach={ev.data.payload.approach} count={ev.data.payload.count}")

    # -- MAC / radio -------------------------------------------------------------

    def _created(self, pkt) -> None:
        self.ledger.created(pkt)
        # a due time within rounding of the tick instant can sit an ulp behind it
        at = max(pkt.created_at, self.queue.now)
        self.queue.schedule(at, "tx_start", pkt.src, pkt.seq, data=("ready", pkt))

    def _drop_mac(self, node: int) -> None:
        mac = self.macs[node]
        mac.queue.clear()
        mac.pkt = None
        mac.draw = None
        self.contending.discard(node)

    def _sensed(self, node: int, since: float, now: float) -> list[tuple[float, float]]:
        x, y = self.positions[node]
        out = []
        for tx in self.recent:
            if tx.src == node or tx.t_end <= since or tx.t_start > now:
                continue
            r = tx.range
            if (tx.sender_pos.x - x) ** 2 + (tx.sender_pos.y - y) ** 2 <= r * r:
                out.append((tx.t_start, tx.t_end))
        return out

    def _contend(self, node: int, now: float) -> None:
        mac = self.macs[node]
        cfg = self.cfg
        busy = self._sensed(node, mac.ready_at, now)
        t_start, mac.draw = csma_access(mac.ready_at, busy, cfg.slot_time, cfg.cw,
                                        self.rng["backoff"], mac.draw)
        if t_start <= now:
            self._transmit(node, mac.pkt, now)
        else:
            self.queue.schedule(t_start, "tx_start", node, mac.pkt.seq, data=("attempt", mac.pkt))

    def _on_tx_start(self, ev: Event) -> None:
        what, pkt = ev.data
        node = pkt.src
        mac = self.macs[node]
        if what == "ready":
            if node < self.n_veh and self.vehicles[node].mode == "exited":
                return
            if mac.transmitting or mac.pkt is not None:
                mac.queue.append(pkt)
                return
            mac.pkt, mac.ready_at, mac.draw = pkt, ev.time, None
            self.contending.add(node)
            self._contend(node, ev.time)
        elif mac.pkt is pkt:
            self._contend(node, ev.time)

    def _transmit(self, node: int, pkt, now: float) -> None:
        cfg = self.cfg
        mac = self.macs[node]
        mac.pkt, mac.draw, mac.transmitting = None, None, True
        self.contending.discard(node)
        x, y = self.positions[node]
        t_end = now + airtime(pkt.size, cfg.data_rate, cfg.phy_overhead, cfg.mac_header_bytes)
        if self._d2 is None:
            self._d2 = pairwise_d2(self.positions)
        tx = Transmission(pkt, Point(float(x), float(y)), now, t_end, 1,
                          float(self.ranges[node]), self.positions, self._d2)
        self.recent.append(tx)
        self.ledger.transmitted(pkt.seq, now, t_end)
        self.queue.schedule(t_end, "tx_end", node, pkt.seq, data=tx)
        if self.trace_on:
            self._t(now, f"tx_start node={node} seq={pkt.seq} kind={pkt.kind} size={pkt.size} "
                         f"t_end={t_end:.9f}")

    def _on_tx_end(self, ev: Event) -> None:
        tx: Transmission = ev.data
        now = ev.time
        res = resolve_deliveries(tx, self.recent, self.cfg.p_loss, self.rng["loss"])
        self.ledger.resolved(tx.packet.seq, res.receivers, res.outcomes)
        if self.trace_on:
            self._t(now, f"tx_end node={tx.src} seq={tx.packet.seq} rx={self._fmt_rx(res)}")
        pkt = tx.packet
        got = res.receivers[res.outcomes == DELIVERED]
        self.rx_count[got] += 1
        if pkt.kind == "beacon":
            # same effect as obu_receive for a beacon, done for all receivers at once
            self.heard[got[got < self.n_veh], pkt.src] = now
        else:
            for rx in got[got < self.n_veh]:
                rx = int(rx)
                veh, obu = obu_receive(self.vehicles[rx], self.obus[rx], pkt, now, self.cfg.mode)
                self.vehicles[rx], self.obus[rx] = veh, obu
        mac = self.macs[tx.src]
        mac.transmitting = False
        if mac.queue:
            mac.pkt, mac.ready_at, mac.draw = mac.queue.popleft(), now, None
            self.contending.add(tx.src)
            self._contend(tx.src, now)
        self._prune(now)

    def _prune(self, now: float) -> None:
        horizon = now - 2 * self.max_air
        for node in self.contending:
            ready = self.macs[node].ready_at - self.max_air
            if ready < horizon:
                horizon = ready
        recent = self.recent
        i = 0
        while i < len(recent) and recent[i].t_end < horizon:
            i += 1
        if i:
            del recent[:i]

    @staticmethod
    def _fmt_rx(res: Deliveries) -> str:
        if res.receivers.size == 0:
            return "-"
        return ";".join(f"{int(r)}:{OUTCOMES[o]}" for r, o in zip(res.receivers, res.outcomes))

    def _on_end(self, t: float) -> None:
        pending = 0
        for tx in self.recent:
            if tx.t_end > t:
                res = resolve_deliveries(tx, [], 0.0, None)
                outcomes = np.full(res.receivers.size, PENDING, dtype=np.int8)
                self.ledger.resolved(tx.packet.seq, res.receivers, outcomes)
                pending += int(res.receivers.size)
        for vid in list(self.in_box_since):
            self._close_box_dwell(vid, t)
        self._t(t, f"sim_end pending_pairs={pending}")


def run(cfg: SimConfig, scenario: Scenario | None = None, trace: bool = False,
        check_invariants: bool = True) -> SimResult:
    """Simulate ``cfg.duration`` seconds; the result is a pure function of ``cfg``."""
    return Simulation(cfg, scenario, trace, check_invariants).run()


def config_echo(cfg: SimConfig) -> str:
    return render_config(cfg)
