"""Discrete-event VANET simulator for yellow-box congestion control at a signalised crossing."""

from .config import SimConfig, parse_config, render_config, validate_config
from .engine import Scenario, SimResult, StaticVehicle, run

__all__ = ["SimConfig", "Scenario", "SimResult", "StaticVehicle", "parse_config",
           "render_config", "run", "validate_config"]
