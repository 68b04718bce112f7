"""Simulation configuration: defaults, validation and the key = value file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

# DSRC band facts, kept as metadata only (no PHY simulation).
DSRC_CARRIER_HZ = 5.9e9
DSRC_BANDWIDTH_HZ = 75e6

MODES = ("protocol", "baseline")
SIGNAL_MODES = ("fixed", "adaptive")
DIRECTIONS = "NSEW"


@dataclass(frozen=True)
class InvalidConfig:
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.field}: {self.reason}"


class ConfigError(ValueError):
    """Raised with every violated constraint, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class ParseError(ConfigError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__([InvalidConfig(f"line {line}", reason)])


class UnknownKey(ConfigError):
    def __init__(self, name: str, line: int | None = None):
        self.name = name
        self.line = line
        super().__init__([InvalidConfig(name, "unknown key")])


@dataclass(frozen=True)
class SimConfig:
    # scenario parameters
    num_vehicles: int = 200
    speed_min: float = 5.0
    speed_max: float = 20.0
    scenario_width: float = 800.0
    scenario_height: float = 800.0
    vehicle_length: float = 4.5
    green_crossing_target: int = 175
    signal_spacing: float = 50.0
    normal_packet_bytes: int = 512
    warning_packet_bytes: int = 256
    duration: float = 300.0
    sensor_range: float = 75.0
    vehicle_range: float = 200.0

    # channel and timing
    data_rate: float = 6_000_000.0
    beacon_period: float = 0.5
    warning_repeat_period: float = 0.1
    mobility_dt: float = 0.1
    seed: int = 1
    mode: str = "protocol"

    # road geometry
    lane_width: float = 3.5
    stop_setback: float = 1.0

    # car following
    tau: float = 1.0
    a_max: float = 2.5
    b_max: float = 4.5
    min_gap: float = 2.0

    # MAC / PHY
    slot_time: float = 13e-6
    cw: int = 16
    mac_header_bytes: int = 36
    phy_overhead: float = 40e-6
    p_loss: float = 0.0

    # RSU / TCU protocol
    t_confirm: float = 1.0
    warning_expiry: float = 1.0
    report_period: float = 1.0
    wired_latency: float = 0.001
    stationary_speed: float = 0.5
    decision_zone: float = 50.0
    violation_dwell: float = 2.0
    signal_mode: str = "fixed"
    green_time: float = 30.0
    green_max: float = 60.0
    green_extension: float = 5.0
    yellow_time: float = 3.0
    all_red_time: float = 2.0

    # blockage injection: exit lanes fed by these approaches get an obstruction
    blockage_approaches: str = ""
    blockage_start: float = 60.0
    blockage_end: float = 120.0
    blockage_offset: float = 15.0

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


FIELD_TYPES = {f.name: f.type for f in fields(SimConfig)}

_POSITIVE = (
    "speed_max", "scenario_width", "scenario_height", "vehicle_length",
    "signal_spacing", "normal_packet_bytes", "warning_packet_bytes", "duration",
    "sensor_range", "vehicle_range", "beacon_period", "warning_repeat_period",
    "mobility_dt", "lane_width", "tau", "a_max", "b_max", "slot_time", "cw",
    "mac_header_bytes", "t_confirm", "warning_expiry", "report_period",
    "decision_zone", "violation_dwell", "green_time", "green_max",
    "green_extension", "yellow_time", "all_red_time", "blockage_offset",
)
_NON_NEGATIVE = (
    "num_vehicles", "green_crossing_target", "stop_setback", "min_gap",
    "phy_overhead", "wired_latency", "stationary_speed", "blockage_start",
)


def validate_config(cfg: SimConfig) -> SimConfig:
    """Return ``cfg`` unchanged if valid, else raise ConfigError listing every violation."""
    errors: list[InvalidConfig] = []
    for name in _POSITIVE:
        if not getattr(cfg, name) > 0:
            errors.append(InvalidConfig(name, "must be strictly positive"))
    for name in _NON_NEGATIVE:
        if not getattr(cfg, name) >= 0:
            errors.append(InvalidConfig(name, "must be non-negative"))
    if not cfg.speed_min > 0:
        errors.append(InvalidConfig("speed_min", "must be strictly positive"))
    if cfg.speed_min > cfg.speed_max:
        errors.append(InvalidConfig("speed_min", "speed ordering: speed_min > speed_max"))
    if cfg.mobility_dt > cfg.beacon_period:
        errors.append(InvalidConfig("mobility_dt", "must not exceed beacon_period"))
    if cfg.mobility_dt > cfg.warning_repeat_period:
        errors.append(InvalidConfig("mobility_dt", "must not exceed warning_repeat_period"))
    if cfg.data_rate < 1000:
        errors.append(InvalidConfig("data_rate", "must be at least 1000 bit/s"))
    if not 0.0 <= cfg.p_loss <= 1.0:
        errors.append(InvalidConfig("p_loss", "must lie in [0, 1]"))
    if not 0 <= cfg.seed < 2**64:
        errors.append(InvalidConfig("seed", "must be a 64-bit unsigned integer"))
    if cfg.mode not in MODES:
        errors.append(InvalidConfig("mode", f"must be one of {MODES}"))
    if cfg.signal_mode not in SIGNAL_MODES:
        errors.append(InvalidConfig("signal_mode", f"must be one of {SIGNAL_MODES}"))
    if cfg.green_max < cfg.green_time:
        errors.append(InvalidConfig("green_max", "must be at least green_time"))
    bad = set(cfg.blockage_approaches) - set(DIRECTIONS)
    if bad or len(set(cfg.blockage_approaches)) != len(cfg.blockage_approaches):
        errors.append(InvalidConfig("blockage_approaches", "distinct letters from NSEW"))
    if cfg.blockage_end < cfg.blockage_start:
        errors.append(InvalidConfig("blockage_end", "must not precede blockage_start"))
    if errors:
        raise ConfigError(errors)
    return cfg


def _coerce(name: str, text: str):
    kind = FIELD_TYPES[name]
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            value = float(text)
            if not value.is_integer():
                raise
            return int(value)
    if kind == "float":
        return float(text)
    return text


def parse_config(text: str) -> SimConfig:
    """Parse the line-oriented ``key = value`` format; missing keys take defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, "expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in FIELD_TYPES:
            raise UnknownKey(key, lineno)
        if key in values:
            raise ParseError(lineno, f"duplicate key {key!r}")
        try:
            values[key] = _coerce(key, value)
        except ValueError:
            raise ParseError(lineno, f"bad {FIELD_TYPES[key]} value {value!r} for {key}") from None
    return validate_config(SimConfig(**values))


def render_config(cfg: SimConfig) -> str:
    lines = []
    for f in fields(SimConfig):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {value!r}" if isinstance(value, float) else f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
