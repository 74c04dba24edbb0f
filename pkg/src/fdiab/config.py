"""System configuration: defaults, validation, and flat key=value config files."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


@dataclass
class SystemConfig:
    """All scalar system parameters plus solver controls.

    Antenna counts and channel statistics default to the reference
    32/32/4-antenna mmWave setup. Distances are in wavelengths, angles
    in radians unless a field name says otherwise.
    """

    # RF metadata (informational only; the model is narrowband)
    carrier_ghz: float = 28.0
    bandwidth_mhz: float = 850.0

    # antenna counts
    n_gnb: int = 32
    n_iab: int = 32
    n_ue: int = 4

    # clustered channel statistics
    num_clusters: int = 6
    rays_per_cluster: int = 8
    angular_spread_deg: float = 20.0

    # self-interference geometry and statistics
    gap_wavelengths: float = 2.0
    incline_rad: float = math.pi / 6
    rician_factor_db: float = 5.0
    si_power_db: float = 15.0
    normalize_si: bool = True

    # beamforming dimensions
    n_streams: int = 2
    n_rf: int = 2

    # sweep and solver controls
    snr_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 200
    master_seed: int = 1234
    tol: float = 1e-4
    max_iters: int = 50
    workers: int = 1
    random_init: bool = False

    @property
    def rho_s(self) -> float:
        """Self-interference power, linear scale."""
        return db_to_linear(self.si_power_db)

    @property
    def kappa(self) -> float:
        """Rician factor, linear scale."""
        return db_to_linear(self.rician_factor_db)

    @property
    def angular_spread_rad(self) -> float:
        return math.radians(self.angular_spread_deg)

    def validate(self) -> "SystemConfig":
        for name in ("n_gnb", "n_iab", "n_ue", "num_clusters", "rays_per_cluster",
                     "n_streams", "n_rf", "trials", "max_iters", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if not (0.0 < self.angular_spread_rad < math.pi):
            raise ConfigError("angular_spread_deg must lie in (0, 180)")
        if self.gap_wavelengths <= 0:
            raise ConfigError("gap_wavelengths must be positive")
        if not (0.0 < self.incline_rad < math.pi):
            raise ConfigError("incline_rad must lie strictly inside (0, pi)")
        # A single RF-chain count is shared by all nodes: the analog-stage
        # equality constraints are square only when the counts match.
        if not (self.n_streams <= self.n_rf <= min(self.n_gnb, self.n_iab, self.n_ue)):
            raise ConfigError("need n_streams <= n_rf <= min(antenna counts)")
        if not self.snr_db:
            raise ConfigError("snr_db sweep must be nonempty")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        return self


_BOOL_STRINGS = {"true": True, "1": True, "yes": True,
                 "false": False, "0": False, "no": False}


def _coerce(name: str, raw: str, kind: type):
    raw = raw.strip()
    try:
        if kind is bool:
            return _BOOL_STRINGS[raw.lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value for {name!r}: {raw!r}") from exc
    raise ConfigError(f"unsupported field type for {name!r}")


def parse_config_text(text: str) -> SystemConfig:
    """Parse flat ``key = value`` lines; unknown keys are rejected."""
    known = {f.name: f.type for f in fields(SystemConfig)}
    # dataclass field types arrive as strings under `from __future__ import annotations`
    type_map = {"float": float, "int": int, "bool": bool, "tuple": tuple}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw, type_map[str(known[key])])
    return SystemConfig(**values).validate()


def load_config(path: str | os.PathLike) -> SystemConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)
