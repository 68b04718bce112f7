"""QoS and safety metrics computed from a packet ledger and the run logs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .mobility import count_green_crossings
from .protocol import classify_blind
from .radio import COLLISION, DELIVERED, OUTCOMES, PENDING, RANDOM_LOSS

KINDS = ("beacon", "warning", "report")
KIND_CODE = {k: i for i, k in enumerate(KINDS)}


@dataclass
class PacketLedger:
    """Columnar record of every radio packet and every intended (packet, receiver) pair.

    Packet columns are indexed by ``seq`` position in ``seq``; ``t_start`` and
    ``t_end`` are NaN for frames that never reached the air. ``detail`` holds
    ``"<approach><+|->"`` for warnings (blocked / clear) and ``""`` otherwise.
    A pair's delivery time is its frame's ``t_end``.
    """

    seq: np.ndarray
    kind: np.ndarray  # int8 codes into KINDS
    size: np.ndarray
    src: np.ndarray
    created_at: np.ndarray
    t_start: np.ndarray
    t_end: np.ndarray
    detail: list
    pair_seq: np.ndarray
    pair_rx: np.ndarray
    pair_outcome: np.ndarray

    def __post_init__(self):
        # seq is sorted ascending, so pairs map to packet rows by binary search
        self.pair_row = np.searchsorted(self.seq, self.pair_seq)

    @property
    def sent_frames(self) -> int:
        return int(np.count_nonzero(~np.isnan(self.t_start)))

    def totals(self, kind: str | None = None) -> dict[str, int]:
        o = self.pair_outcome
        if kind is not None:
            o = o[self.kind[self.pair_row] == KIND_CODE[kind]]
        counts = np.bincount(o.astype(np.int64), minlength=len(OUTCOMES))
        return {
            "intended": int(o.size),
            "delivered": int(counts[DELIVERED]),
            "collision": int(counts[COLLISION]),
            "random_loss": int(counts[RANDOM_LOSS]),
            "dropped": int(counts[COLLISION] + counts[RANDOM_LOSS]),
            "pending": int(counts[PENDING]),
        }

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.seq, self.kind, self.size, self.src, self.created_at, self.t_start,
                    self.t_end, self.pair_seq, self.pair_rx, self.pair_outcome):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update("|".join(self.detail).encode())
        return h.hexdigest()


class LedgerBuilder:
    def __init__(self):
        self._packets = {}
        self._pairs = []

    def created(self, pkt) -> None:
        detail = ""
        if pkt.kind == "warning":
            detail = pkt.payload.affected_approach + ("+" if pkt.payload.blocked else "-")
        self._packets[pkt.seq] = [pkt.kind, pkt.size, pkt.src, pkt.created_at,
                                  float("nan"), float("nan"), detail]

    def transmitted(self, seq: int, t_start: float, t_end: float) -> None:
        rec = self._packets[seq]
        rec[4], rec[5] = t_start, t_end

    def resolved(self, seq: int, receivers: np.ndarray, outcomes: np.ndarray) -> None:
        if receivers.size:
            self._pairs.append((seq, receivers, outcomes))

    def build(self) -> PacketLedger:
        seqs = sorted(self._packets)
        recs = [self._packets[s] for s in seqs]
        if self._pairs:
            pair_seq = np.concatenate([np.full(r.size, s, dtype=np.int64) for s, r, _ in self._pairs])
            pair_rx = np.concatenate([r for _, r, _ in self._pairs]).astype(np.int64)
            pair_out = np.concatenate([o for _, _, o in self._pairs]).astype(np.int8)
            order = np.argsort(pair_seq, kind="stable")
            pair_seq, pair_rx, pair_out = pair_seq[order], pair_rx[order], pair_out[order]
        else:
            pair_seq = np.zeros(0, dtype=np.int64)
            pair_rx = np.zeros(0, dtype=np.int64)
            pair_out = np.zeros(0, dtype=np.int8)
        return PacketLedger(
            seq=np.array(seqs, dtype=np.int64),
            kind=np.array([KIND_CODE[r[0]] for r in recs], dtype=np.int8),
            size=np.array([r[1] for r in recs], dtype=np.int64),
            src=np.array([r[2] for r in recs], dtype=np.int64),
            created_at=np.array([r[3] for r in recs], dtype=float),
            t_start=np.array([r[4] for r in recs], dtype=float),
            t_end=np.array([r[5] for r in recs], dtype=float),
            detail=[r[6] for r in recs],
            pair_seq=pair_seq, pair_rx=pair_rx, pair_outcome=pair_out,
        )


@dataclass
class RunLogs:
    """Mobility and protocol logs the safety metrics are computed from.

    episodes: (approach, onset, first_warning_at | None, clear_at | None)
    zone_entries: (vehicle, approach, t, warning_active at entry)
    box_entries: (vehicle, approach, t, warning_active when it crossed the stop line)
    stationary_in_box: (vehicle, t_from, t_to)
    trips: (vehicle, approach, entered_at, exited_at)
    crossings: (vehicle, approach, t_cross)
    phase_log: (t, active, stage)
    """

    duration: float
    num_vehicles: int
    violation_dwell: float = 2.0
    episodes: list = field(default_factory=list)
    zone_entries: list = field(default_factory=list)
    box_entries: list = field(default_factory=list)
    stationary_in_box: list = field(default_factory=list)
    trips: list = field(default_factory=list)
    crossings: list = field(default_factory=list)
    phase_log: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunLogs":
        data = json.loads(text)
        for key in ("episodes", "zone_entries", "box_entries", "stationary_in_box", "trips",
                    "crossings", "phase_log"):
            data[key] = [tuple(x) for x in data[key]]
        return cls(**data)


@dataclass
class MetricsReport:
    pdr_percent: float | None
    mean_e2e_delay_ms: float | None
    throughput_bps: float
    packet_loss_count: int
    packet_loss_bytes: int
    per_kind: dict
    blind_vehicle_count: int
    warning_prop_delay: dict | None  # mean / p95 / max in ms
    per_vehicle_rx: np.ndarray
    box_violations: int
    mean_travel_time_s: float | None
    green_crossings: int
    totals: dict


def _kind_mask(ledger: PacketLedger, kind: str | None) -> np.ndarray:
    if kind is None:
        return np.ones(ledger.pair_outcome.size, dtype=bool)
    return ledger.kind[ledger.pair_row] == KIND_CODE[kind]


def pdr(ledger: PacketLedger, kind: str | None = None) -> float | None:
    t = ledger.totals(kind)
    denom = t["intended"] - t["pending"]
    if denom <= 0:
        return None
    return 100.0 * t["delivered"] / denom


def mean_e2e_delay(ledger: PacketLedger, kind: str | None = None) -> float | None:
    sel = _kind_mask(ledger, kind) & (ledger.pair_outcome == DELIVERED)
    rows = ledger.pair_row[sel]
    if rows.size == 0:
        return None
    return float(np.mean(ledger.t_end[rows] - ledger.created_at[rows])) * 1e3


def throughput(ledger: PacketLedger, duration: float, kind: str | None = None) -> float:
    sel = _kind_mask(ledger, kind) & (ledger.pair_outcome == DELIVERED)
    return float(np.sum(ledger.size[ledger.pair_row[sel]]) * 8) / duration


def packet_loss(ledger: PacketLedger, kind: str | None = None) -> dict[str, int]:
    sel = _kind_mask(ledger, kind)
    out = ledger.pair_outcome[sel]
    sizes = ledger.size[ledger.pair_row[sel]]
    coll = out == COLLISION
    rand = out == RANDOM_LOSS
    return {
        "count": int(np.count_nonzero(coll | rand)),
        "collision": int(np.count_nonzero(coll)),
        "random_loss": int(np.count_nonzero(rand)),
        "bytes": int(np.sum(sizes[coll | rand])),
    }


def warning_propagation(ledger: PacketLedger, episodes, num_vehicles: int | None = None) -> dict | None:
    """Per (episode, vehicle): first blocked-warning reception minus the issue
    time of the first warning frame that vehicle was in range of.

    For vehicles already in range when the episode's first warning goes out
    this is the delay from that first warning; vehicles that drive into range
    later are timed from the first frame that could have reached them.
    """
    delays = []
    is_vehicle = ledger.pair_rx < (num_vehicles if num_vehicles is not None else np.inf)
    tags = np.array(ledger.detail, dtype=object)
    for approach, _onset, first, clear in episodes:
        if first is None:
            continue
        end = np.inf if clear is None else clear
        rows = np.flatnonzero((tags == approach + "+") & (ledger.created_at >= first)
                              & (ledger.created_at < end))
        if rows.size == 0:
            continue
        sel = np.isin(ledger.pair_row, rows) & is_vehicle & (ledger.pair_outcome != PENDING)
        heard_from: dict[int, float] = {}
        got_at: dict[int, float] = {}
        for rx, row, out in zip(ledger.pair_rx[sel].tolist(), ledger.pair_row[sel].tolist(),
                                ledger.pair_outcome[sel].tolist()):
            heard_from.setdefault(rx, ledger.created_at[row])
            if out == DELIVERED:
                got_at[rx] = min(got_at.get(rx, np.inf), ledger.t_end[row])
        delays.extend((t - heard_from[rx]) * 1e3 for rx, t in got_at.items())
    if not delays:
        return None
    arr = np.array(sorted(delays))
    return {"mean": float(np.mean(arr)), "p95": float(np.percentile(arr, 95)),
            "max": float(arr[-1])}


def per_vehicle_rx(ledger: PacketLedger, num_vehicles: int) -> np.ndarray:
    rx = ledger.pair_rx[(ledger.pair_outcome == DELIVERED) & (ledger.pair_rx < num_vehicles)]
    return np.bincount(rx, minlength=num_vehicles)[:num_vehicles]


def box_violations(logs: RunLogs) -> int:
    """Stationary-in-box dwells beyond the limit plus warned entries into the box."""
    dwell = sum(1 for _v, t0, t1 in logs.stationary_in_box if t1 - t0 > logs.violation_dwell)
    warned = sum(1 for entry in logs.box_entries if entry[3])
    return dwell + warned


def blind_vehicle_count(logs: RunLogs) -> int:
    return sum(1 for entry in logs.zone_entries if classify_blind(entry, logs.episodes))


def compute_report(ledger: PacketLedger, logs: RunLogs) -> MetricsReport:
    loss = packet_loss(ledger)
    per_kind = {}
    for kind in ("beacon", "warning"):
        per_kind[kind] = {
            "pdr_percent": pdr(ledger, kind),
            "mean_e2e_delay_ms": mean_e2e_delay(ledger, kind),
            "throughput_bps": throughput(ledger, logs.duration, kind),
            "packet_loss_count": packet_loss(ledger, kind)["count"],
            "totals": ledger.totals(kind),
        }
    trips = [t1 - t0 for _v, _a, t0, t1 in logs.trips]
    return MetricsReport(
        pdr_percent=pdr(ledger),
        mean_e2e_delay_ms=mean_e2e_delay(ledger),
        throughput_bps=throughput(ledger, logs.duration),
        packet_loss_count=loss["count"],
        packet_loss_bytes=loss["bytes"],
        per_kind=per_kind,
        blind_vehicle_count=blind_vehicle_count(logs),
        warning_prop_delay=warning_propagation(ledger, logs.episodes, logs.num_vehicles),
        per_vehicle_rx=per_vehicle_rx(ledger, logs.num_vehicles),
        box_violations=box_violations(logs),
        mean_travel_time_s=float(np.mean(trips)) if trips else None,
        green_crossings=count_green_crossings(logs.crossings, logs.phase_log),
        totals=ledger.totals(),
    )


METRICS_HEADER = (
    "run_id,seed,mode,num_vehicles,data_rate,packet_bytes,pdr_pct,e2e_delay_ms,"
    "throughput_bps,loss_count,loss_bytes,blind_count,warn_delay_mean_ms,"
    "warn_delay_p95_ms,box_violations,travel_time_s,green_crossings"
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def metrics_row(run_id: str, cfg, report: MetricsReport) -> str:
    w = report.warning_prop_delay
    fields = [
        run_id, cfg.seed, cfg.mode, cfg.num_vehicles, float(cfg.data_rate),
        cfg.normal_packet_bytes, report.pdr_percent, report.mean_e2e_delay_ms,
        report.throughput_bps, report.packet_loss_count, report.packet_loss_bytes,
        report.blind_vehicle_count, w["mean"] if w else None, w["p95"] if w else None,
        report.box_violations, report.mean_travel_time_s, report.green_crossings,
    ]
    return ",".join(_fmt(f) for f in fields)
