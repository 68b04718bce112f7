"""Vehicle kinematics on the single-crossing corridors."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .config import DIRECTIONS, SimConfig
from .geometry import Corridor, RoadNetwork, approach_signal


class SpawnOverflow(ValueError):
    pass


@dataclass(slots=True)
class VehicleState:
    id: int
    approach: str
    s: float
    v: float
    v_desired: float
    length: float
    mode: str = "cruising"
    warning_active: bool = False
    warning_received_at: float | None = None
    warning_expiry: float | None = None
    spawn_time: float = 0.0
    exit_time: float | None = None
    entered_box_at: float | None = None

    @property
    def rear(self) -> float:
        return self.s - self.length


def approach_capacity(cfg: SimConfig, corridor: Corridor) -> int:
    return math.floor(corridor.stop_s / (cfg.vehicle_length + cfg.min_gap))


def spawn_fleet(cfg: SimConfig, net: RoadNetwork, rng: np.random.Generator) -> list[VehicleState]:
    """Place ``cfg.num_vehicles`` round-robin on the four approaches, evenly spaced.

    The front vehicle of each approach sits on its stop line.
    """
    n = cfg.num_vehicles
    per_lane = {d: len(range(i, n, 4)) for i, d in enumerate(DIRECTIONS)}
    for d, k in per_lane.items():
        cap = approach_capacity(cfg, net.corridors[d])
        if k > cap:
            raise SpawnOverflow(f"approach {d} holds {cap} vehicles, {k} requested")
    speeds = rng.uniform(cfg.speed_min, cfg.speed_max, size=n)
    fleet = []
    for i in range(n):
        d = DIRECTIONS[i % 4]
        cor = net.corridors[d]
        spacing = cor.stop_s / per_lane[d]
        s = cor.stop_s - (i // 4) * spacing
        v = float(speeds[i])
        fleet.append(VehicleState(id=i, approach=d, s=s, v=v, v_desired=v,
                                  length=cfg.vehicle_length))
    return fleet


def safe_speed(gap: float, v_cap: float, tau: float) -> float:
    """Speed that closes ``gap`` in one reaction time, capped at ``v_cap``."""
    if gap <= 0.0:
        return 0.0
    return min(v_cap, gap / tau)


def stop_target(veh: VehicleState, signal: str, warning_active: bool, corridor: Corridor,
                mode: str = "protocol") -> float | None:
    """Stop-line coordinate the vehicle must not pass, or None.

    ``signal`` is the state shown to the vehicle's approach. Vehicles already
    past the stop line are committed and never get a target.
    """
    if veh.s > corridor.stop_s:
        return None
    if signal != "green":
        return corridor.stop_s
    if mode == "protocol" and warning_active:
        return corridor.stop_s
    return None


def _mode_for(s: float, v: float, v_prev: float, length: float, cor: Corridor) -> str:
    if s - length >= cor.length:
        return "exited"
    if s >= cor.box_start_s and s - length <= cor.box_end_s:
        return "crossing"
    if v <= 0.0:
        return "stopped"
    if v < v_prev:
        return "braking"
    return "cruising"


def _brake_envelope(room: float, b: float, dt: float) -> float:
    """Largest v with v**2/(2b) + v*dt/2 <= room."""
    half = 0.5 * dt
    return b * (math.sqrt(half * half + 2.0 * room / b) - half)


def step_vehicle(veh: VehicleState, lead: VehicleState | None, stop: float | None, dt: float,
                 cfg: SimConfig, corridor: Corridor, t: float | None = None) -> VehicleState:
    """Advance one vehicle by ``dt``; ``lead`` is already at its new position.

    The target speed is the safe speed toward the nearest constraint (leader's
    rear less ``min_gap``, or the stop target), additionally bounded so the
    vehicle can still brake to that constraint at ``b_max`` under the
    discrete update, where stopping from ``v`` covers ``v**2/(2b) + v*dt/2``.
    A leader's own stopping distance counts as room. Acceleration and braking
    are rate limited, but the positional bounds always win so the vehicle
    never runs into its leader or over a stop target.
    """
    b = cfg.b_max
    s0, v0 = veh.s, veh.v
    target = veh.v_desired
    limit = math.inf
    if lead is not None:
        gap = lead.s - lead.length - cfg.min_gap - s0
        g = gap if gap > 0.0 else 0.0
        cap = g / cfg.tau
        if cap < target:
            target = cap
        env = _brake_envelope(g + lead.v * lead.v / (2.0 * b), b, dt)
        if env < target:
            target = env
        limit = gap / dt
    if stop is not None:
        g = stop - s0
        if g < 0.0:
            g = 0.0
        cap = g / cfg.tau
        if cap < target:
            target = cap
        env = _brake_envelope(g, b, dt)
        if env < target:
            target = env
        if g / dt < limit:
            limit = g / dt
    if corridor.stop_s < s0 and s0 - veh.length <= corridor.box_end_s:
        # committed: clear the box without dawdling
        target = max(target, min(cfg.speed_min, veh.v_desired))
    v = min(max(target, v0 - b * dt), v0 + cfg.a_max * dt, veh.v_desired, limit)
    if v < 0.0:
        v = 0.0
    s = s0 + v * dt
    mode = _mode_for(s, v, v0, veh.length, corridor)
    entered = veh.entered_box_at
    if entered is None and s0 < corridor.box_start_s <= s and t is not None:
        entered = t
    return VehicleState(veh.id, veh.approach, s, v, veh.v_desired, veh.length, mode,
                        veh.warning_active, veh.warning_received_at, veh.warning_expiry,
                        veh.spawn_time, t if mode == "exited" else veh.exit_time, entered)


def count_green_crossings(crossings, phase_log) -> int:
    """Crossings whose stop-line passage happened while the approach showed green.

    ``crossings`` holds ``(vehicle_id, approach, t_cross)``; ``phase_log`` holds
    time-ordered ``(t, active, stage)`` entries. The phase in force at
    ``t_cross`` is the last entry at or before it: a tick's phase decision
    governs the movement that follows the tick.
    """
    if not crossings or not phase_log:
        return 0
    times = [p[0] for p in phase_log]
    count = 0
    for _vid, approach, t_cross in crossings:
        i = bisect.bisect_right(times, t_cross) - 1
        if i < 0:
            continue
        _, active, stage = phase_log[i]
        if approach_signal(active, stage, approach) == "green":
            count += 1
    return count
