"""Scenario parameters and the flat ``key = value`` scenario file format.

Times are microseconds, sizes are bytes, rates are bits per second.
Defaults are the typical 802.11b (1 Mbps DSSS) network parameters.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

MODULATIONS = ("DBPSK", "DQPSK", "CCK55", "CCK11")


class ConfigError(ValueError):
    """Bad scenario file or parameter value."""


def db_to_linear(x_db: float) -> float:
    if x_db == math.inf:
        return math.inf
    return 10.0 ** (x_db / 10.0)


def _require(ok: bool, key: str, message: str) -> None:
    if not ok:
        raise ConfigError(f"{key}: {message}")


@dataclass(frozen=True)
class MacParams:
    w_min: int = 32
    m: int = 5
    slot_time_us: float = 20
    sifs_us: float = 10
    difs_us: float = 50
    eifs_us: float = 300
    prop_delay_us: float = 1
    mac_header_bytes: int = 24
    phy_header_bytes: int = 16
    ack_bytes: int = 14
    rts_bytes: int = 20  # stored only; basic access has no RTS/CTS
    cts_bytes: int = 14
    ack_timeout_us: float = 300
    payload_bytes: int = 1024
    data_rate_bps: float = 1_000_000
    ctrl_rate_bps: float = 1_000_000

    def __post_init__(self):
        _require(self.w_min >= 2, "w_min", "must be >= 2")
        _require(self.m >= 0, "m", "must be >= 0")
        for name in ("slot_time_us", "sifs_us", "difs_us", "eifs_us",
                     "prop_delay_us", "ack_timeout_us"):
            _require(getattr(self, name) > 0, name, "must be > 0")
        _require(self.payload_bytes > 0, "payload_bytes", "must be > 0")
        for name in ("mac_header_bytes", "phy_header_bytes", "ack_bytes",
                     "rts_bytes", "cts_bytes"):
            _require(getattr(self, name) >= 0, name, "must be >= 0")
        _require(self.data_rate_bps > 0, "data_rate_bps", "must be > 0")
        _require(self.ctrl_rate_bps > 0, "ctrl_rate_bps", "must be > 0")

    def window(self, stage: int) -> int:
        """Contention window size at backoff ``stage`` (capped at m)."""
        return self.w_min * 2 ** min(stage, self.m)


@dataclass(frozen=True)
class ChannelParams:
    snr_db: float = math.inf
    z0_db: float = 6.0
    spreading_factor: int = 11
    modulation: str = "DBPSK"
    fer_override: float | None = None

    def __post_init__(self):
        _require(not math.isnan(self.snr_db), "snr_db", "must be a number")
        _require(not math.isnan(self.z0_db), "z0_db", "must be a number")
        _require(self.spreading_factor >= 1, "spreading_factor", "must be >= 1")
        _require(self.modulation in MODULATIONS, "modulation",
                 f"must be one of {', '.join(MODULATIONS)}")
        if self.fer_override is not None:
            _require(0.0 <= self.fer_override <= 1.0, "fer_override",
                     "must lie in [0, 1]")

    @property
    def snr_linear(self) -> float:
        return db_to_linear(self.snr_db)

    @property
    def z0_linear(self) -> float:
        return db_to_linear(self.z0_db)


@dataclass(frozen=True)
class TrafficParams:
    n_stations: int = 10
    lambda_pkt_s: float = 10.0
    saturated: bool = False

    def __post_init__(self):
        _require(self.n_stations >= 1, "n_stations", "must be >= 1")
        _require(self.lambda_pkt_s >= 0 and not math.isnan(self.lambda_pkt_s),
                 "lambda_pkt_s", "must be >= 0")


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9
    max_iters: int = 10_000
    damping: float = 0.5

    def __post_init__(self):
        _require(self.tol > 0, "tol", "must be > 0")
        _require(self.max_iters >= 1, "max_iters", "must be >= 1")
        _require(0 < self.damping <= 1, "damping", "must lie in (0, 1]")


@dataclass(frozen=True)
class Scenario:
    """The four parameter groups that make up one scenario."""

    mac: MacParams = MacParams()
    channel: ChannelParams = ChannelParams()
    traffic: TrafficParams = TrafficParams()
    solver: SolverConfig = SolverConfig()

    def __iter__(self):
        return iter((self.mac, self.channel, self.traffic, self.solver))

    def replace(self, **overrides: Any) -> "Scenario":
        """Return a copy with flat ``key=value`` overrides applied.

        Values may be strings (parsed like file values) or already-typed.
        """
        groups = {}
        for key, value in overrides.items():
            cls = _OWNER.get(key)
            if cls is None:
                raise ConfigError(f"unknown key {key!r}")
            if isinstance(value, str):
                value = _parse_value(cls, key, value)
            groups.setdefault(cls, {})[key] = value
        parts = {}
        for attr, cls in _GROUPS:
            current = getattr(self, attr)
            parts[attr] = (cls(**{**dataclasses.asdict(current), **groups[cls]})
                           if cls in groups else current)
        return Scenario(**parts)


_GROUPS = (("mac", MacParams), ("channel", ChannelParams),
           ("traffic", TrafficParams), ("solver", SolverConfig))
_OWNER = {f.name: cls for _, cls in _GROUPS for f in fields(cls)}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _field_type(cls, key: str) -> str:
    return next(f.type for f in fields(cls) if f.name == key)


def _parse_value(cls, key: str, text: str) -> Any:
    kind = _field_type(cls, key)
    text = text.strip()
    try:
        if kind == "int":
            number = float(text)
            if not number.is_integer():
                raise ValueError(text)
            return int(number)
        if kind == "float":
            return float(text)
        if kind == "bool":
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if kind == "float | None":
            return None if text.lower() in ("", "none") else float(text)
        if kind == "str":
            return text.upper().replace(".", "")
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind}") from None
    raise AssertionError(kind)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario text; missing keys keep their defaults."""
    groups: dict[type, dict[str, Any]] = {cls: {} for _, cls in _GROUPS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        cls = _OWNER.get(key)
        if cls is None:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            groups[cls][key] = _parse_value(cls, key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    parts = {}
    for attr, cls in _GROUPS:
        parts[attr] = cls(**groups[cls])
    return Scenario(**parts)


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario file.

    The result unpacks as ``mac, channel, traffic, solver = load_scenario(p)``.
    Raises ``ConfigError`` naming the line or the offending key.
    """
    path = Path(path)
    return parse_scenario(path.read_text(), source=str(path))


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_scenario(scenario: Scenario) -> str:
    lines = []
    for attr, cls in _GROUPS:
        lines.append(f"# {cls.__name__}")
        group = getattr(scenario, attr)
        for f in fields(cls):
            lines.append(f"{f.name} = {_format(getattr(group, f.name))}")
        lines.append("")
    return "\n".join(lines)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(dump_scenario(scenario))
