"""Small named scenarios with hand-checkable outcomes, plus the standard blockage setup."""

from __future__ import annotations

from .config import SimConfig
from .engine import Scenario, StaticVehicle


def micro(forced_collision: bool = True) -> tuple[SimConfig, Scenario]:
    """One RSU (approach N) and two parked vehicles on corridor N.

    V0 sits 65 m past the RSU and beacons at 0.2 s; V1 sits 175 m before it,
    out of the RSU's 75 m carrier-sense reach, and beacons at 0.5001 s. The
    RSU's box is forced blocked over [0.25, 0.55): onset at the 0.3 s tick,
    one blocked warning at 0.5 s (after the 0.2 s confirmation), one clear
    warning at 0.6 s. V1's beacon starts while the RSU is still sending its
    blocked warning, so the RSU loses it (it cannot receive while sending).
    With ``forced_collision=False`` V1 beacons at 0.7 s instead.
    """
    cfg = SimConfig(num_vehicles=2, duration=1.0, beacon_period=1.0, t_confirm=0.2)
    v1_offset = 0.5001 if forced_collision else 0.7
    scenario = Scenario(
        static_vehicles=(StaticVehicle("N", 440.0, 0.2), StaticVehicle("N", 200.0, v1_offset)),
        rsu_approaches="N",
        forced_blockages=(("N", 0.25, 0.55),),
        rsu_offsets=(0.0,),
    )
    return cfg, scenario


def singleton(duration: float = 10.0) -> tuple[SimConfig, Scenario]:
    """One parked vehicle in range of one RSU; only the vehicle ever transmits."""
    cfg = SimConfig(num_vehicles=1, duration=duration, p_loss=0.0)
    scenario = Scenario(static_vehicles=(StaticVehicle("N", 350.0, 0.05),), rsu_approaches="N",
                        rsu_offsets=(0.0,))
    return cfg, scenario


def blockage(cfg: SimConfig | None = None, approaches: str = "NSEW") -> SimConfig:
    """Standard blockage injection: every exit lane obstructed 15 m past the box.

    The obstruction window is the config's ``[blockage_start, blockage_end)``,
    60 s to 120 s by default.
    """
    cfg = cfg or SimConfig()
    return cfg.replace(blockage_approaches=approaches)
