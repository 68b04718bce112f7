"""Broadcast channel: unit-disk reach, CSMA deferral/backoff, airtime and collisions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import Point

DELIVERED, COLLISION, RANDOM_LOSS, PENDING = 0, 1, 2, 3
OUTCOMES = ("delivered", "collision", "random_loss", "pending")


@dataclass(frozen=True)
class Packet:
    seq: int
    kind: str  # "beacon" | "warning" | "report"
    size: int
    src: int
    created_at: float
    payload: object = None


@dataclass
class Transmission:
    packet: Packet
    sender_pos: Point
    t_start: float
    t_end: float
    attempt: int = 1
    range: float = 0.0
    # node positions at t_start, shape (n_nodes, 2); NaN rows are off-network
    positions: np.ndarray | None = None
    # optional squared pairwise distances for ``positions``
    d2: np.ndarray | None = None

    @property
    def src(self) -> int:
        return self.packet.src


@dataclass(frozen=True)
class DeliveryOutcome:
    seq: int
    receiver: int
    outcome: str
    delivered_at: float | None


class Deliveries(NamedTuple):
    receivers: np.ndarray  # int64 node ids
    outcomes: np.ndarray  # int8 outcome codes

    def records(self, tx: Transmission) -> list[DeliveryOutcome]:
        return [
            DeliveryOutcome(tx.packet.seq, int(r), OUTCOMES[o],
                            tx.t_end if o == DELIVERED else None)
            for r, o in zip(self.receivers, self.outcomes)
        ]


TIME_TOL = 1e-12  # seconds; far below a slot, far above float noise at simulation times


def airtime(size: int, data_rate: float, phy_overhead: float = 40e-6,
            mac_header_bytes: int = 36) -> float:
    return phy_overhead + (size + mac_header_bytes) * 8 / data_rate


def in_range(a: Point, b: Point, rng: float) -> bool:
    return math.hypot(a.x - b.x, a.y - b.y) <= rng


def csma_access(ready_at: float, busy: list[tuple[float, float]], slot: float, cw: int,
                rng: np.random.Generator | None = None, draw: int | None = None
                ) -> tuple[float, int | None]:
    """Start time for a frame ready at ``ready_at``.

    ``busy`` lists the ``(t_start, t_end)`` intervals of transmissions the node
    can hear. A frame starting at exactly the instant being sensed is not yet
    audible, so same-slot starts collide. If the medium is idle at
    ``ready_at`` the frame goes out immediately; otherwise a backoff of
    ``draw`` slots (drawn from ``rng`` on first need) is counted down over
    idle slots, freezing whenever a slot boundary senses the medium busy.

    Returns ``(t_start, draw)``; callers pass ``draw`` back on re-evaluation.
    """
    busy = sorted(busy)

    def busy_at(t):
        return any(s < t < e for s, e in busy)

    def idle_after(t):
        while True:
            ends = [e for s, e in busy if s < t < e]
            if not ends:
                return t
            t = max(ends)

    if draw is None:
        if not busy_at(ready_at):
            return ready_at, None
        draw = int(rng.integers(cw))
    tau = idle_after(ready_at)
    remaining = draw
    while remaining > 0:
        horizon = tau + remaining * slot
        # slot boundaries are float sums, so a start within TIME_TOL of one is on it
        starts = [s for s, e in busy if tau - TIME_TOL <= s < horizon - TIME_TOL]
        if not starts:
            return horizon, draw
        k = math.floor((min(starts) - tau) / slot + TIME_TOL / slot) + 1
        remaining -= k - 1
        tau = idle_after(tau + k * slot)
    return tau, draw


def pairwise_d2(positions: np.ndarray) -> np.ndarray:
    x = positions[:, 0]
    y = positions[:, 1]
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    dx *= dx
    dy *= dy
    dx += dy
    return dx


def resolve_deliveries(tx: Transmission, others: list[Transmission], p_loss: float = 0.0,
                       rng: np.random.Generator | None = None) -> Deliveries:
    """Per-receiver outcomes for ``tx``.

    Intended receivers are the nodes within the sender's range at ``t_start``.
    A receiver loses the frame if any other time-overlapping transmission
    reaches it, including one it sends itself; there is no capture. All
    geometry is read from the snapshot taken when ``tx`` started.
    """
    pos = tx.positions
    if tx.d2 is not None:
        d2 = tx.d2[tx.src]
    else:
        d2 = (pos[:, 0] - tx.sender_pos.x) ** 2 + (pos[:, 1] - tx.sender_pos.y) ** 2
    mask = d2 <= tx.range * tx.range
    mask[tx.src] = False
    receivers = np.flatnonzero(mask)
    outcomes = np.zeros(receivers.size, dtype=np.int8)
    if receivers.size == 0:
        return Deliveries(receivers, outcomes)
    hit = None
    for other in others:
        if other is tx or other.t_start >= tx.t_end or other.t_end <= tx.t_start:
            continue
        r2 = other.range * other.range
        if tx.d2 is not None and not math.isnan(pos[other.src, 0]):
            reach = tx.d2[other.src, receivers] <= r2
        else:
            o = other.sender_pos
            rx = pos[receivers]
            reach = ((rx[:, 0] - o.x) ** 2 + (rx[:, 1] - o.y) ** 2) <= r2
        reach |= receivers == other.src
        hit = reach if hit is None else hit | reach
    if hit is not None:
        outcomes[hit] = COLLISION
    if p_loss > 0.0:
        clean = np.flatnonzero(outcomes == DELIVERED)
        lost = rng.random(clean.size) < p_loss
        outcomes[clean[lost]] = RANDOM_LOSS
    return Deliveries(receivers, outcomes)
