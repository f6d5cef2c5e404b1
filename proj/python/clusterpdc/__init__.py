"""Cluster-mode photon-pair source toolkit."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Optional

from . import _core
from ._core import (
    ComputationError,
    ConfigError,
    DomainError,
    bandwidth_from_correlation,
    brightness,
    coincidence_profile,
    effective_mode_number,
    g2_zero,
    quarter_wave_reflectivity,
    run_cli,
    stack_reflectivity,
    vernier_spacing,
)

__all__ = [
    "ComputationError",
    "ConfigError",
    "DomainError",
    "Device",
    "Stream",
    "bandwidth_from_correlation",
    "brightness",
    "coincidence_profile",
    "data_dir",
    "default_config",
    "effective_mode_number",
    "g2_zero",
    "quarter_wave_reflectivity",
    "run_cli",
    "schema_dir",
    "stack_reflectivity",
    "vernier_spacing",
]

_HERE = Path(__file__).resolve().parent


def data_dir() -> Path:
    """Shipped device and stack files (installed copy first, then the source tree)."""
    packaged = _HERE / "data"
    return packaged if packaged.is_dir() else Path(_core.DATA_DIR)


def schema_dir() -> Path:
    packaged = _HERE / "schemas"
    return packaged if packaged.is_dir() else Path(_core.DATA_DIR).parent / "schemas"


def default_config() -> Path:
    env = os.environ.get(_core.CONFIG_ENV_VAR)
    return Path(env) if env else data_dir() / "device.toml"


class Stream:
    """Timetag arrays with the pulse timing and generator ground truth."""

    def __init__(self, channels, times_ps, truth: dict):
        self.channels = channels
        self.times_ps = times_ps
        self.truth = truth

    @property
    def timing(self) -> dict:
        return self.truth["timing"]

    def analyze(self) -> dict:
        return json.loads(_core._analyze(self.channels, self.times_ps, json.dumps(self.timing)))

    def g2(self, window_s: Optional[float] = None) -> dict:
        window = window_s if window_s is not None else self.timing["pulse_length_s"] + 20e-9
        return json.loads(_core._g2_hbt(self.channels, self.times_ps, json.dumps(self.timing), window))


class Device:
    """Calibrated device built from a TOML configuration."""

    def __init__(self, config_path: Optional[os.PathLike] = None):
        self._session = _core.Session(str(config_path or default_config()))

    @property
    def config_hash(self) -> str:
        return self._session.config_hash

    @property
    def calibration_temperature(self) -> float:
        return self._session.calibration_temperature

    def calibration(self) -> dict:
        return json.loads(self._session._resolved())

    def modes(self, temperature: Optional[float] = None, threshold: Optional[float] = None) -> dict:
        return json.loads(self._session._modes(temperature, threshold))

    def temperature_scan(self, temperatures: Iterable[float]) -> dict:
        return json.loads(self._session._scan(list(temperatures)))

    def joint_density(self, signal_hz: float, temperature: Optional[float] = None) -> float:
        return self._session.joint_density(signal_hz, temperature)

    def simulate(
        self,
        run_length_s: float,
        seed: int,
        *,
        split: bool = False,
        filter: bool = False,
        temperature: Optional[float] = None,
        statistics: Optional[str] = None,
    ) -> Stream:
        channels, times, truth = self._session._simulate(run_length_s, seed, split, filter, temperature, statistics)
        return Stream(channels, times, json.loads(truth))
