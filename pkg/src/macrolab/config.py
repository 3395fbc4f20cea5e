"""Configuration parsing, defaults, overrides and canonical rendering.

Configs are TOML with flat sections: [market], [policy], [shocks],
[sweep], [sloppy], [run].  Every key has a documented default, unknown
keys are rejected by name, and all parameter ranges are enforced while
resolving.  ``render_config(parse_config(text))`` round-trips to an equal
resolved configuration.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from typing import Any

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .params import (
    ClassifierThresholds,
    MarketParams,
    ParameterError,
    PolicyParams,
)
from .shocks import DEFAULT_STEPS_PER_MONTH, ScheduleError, ShockEvent, ShockSchedule, covid_shock
from .sloppy import (
    DEFAULT_LOG_STEP,
    DEFAULT_MIXED_EVERY,
    DEFAULT_SENTINEL,
    DEFAULT_WALK_BOUND,
    DEFAULT_WALK_STEP,
    MIXED_POLICY,
    V1_POLICY,
    ObservableProtocol,
)
from .streams import derive_seeds
from .sweep import AxisSpec, SweepSpec


class ConfigError(ValueError):
    """Raised for unparsable text, unknown keys, or out-of-range values."""


@dataclass(frozen=True)
class RunSettings:
    n_steps: int = 10_000
    seed: int = 0
    burn_in: int = -1              # -1: half the run
    renormalize: bool = False
    input_trajectory: str = ""     # consumed by the classify subcommand

    def effective_burn_in(self) -> int:
        return self.n_steps // 2 if self.burn_in < 0 else self.burn_in


@dataclass(frozen=True)
class SloppySettings:
    names: tuple[str, ...] = (
        "market.hiring_ratio", "market.debt_ceiling",
        "market.choice_intensity", "market.price_step", "market.wage_step",
        "market.consumption_base", "market.dividend_rate",
        "market.revival_prob",
    )
    channels: tuple[str, ...] = ("u", "pi")
    window: tuple[int, int] = (500, 1500)
    stride: int = 10
    ensemble: int = 10
    scales: dict = field(default_factory=dict)
    sentinel: float = DEFAULT_SENTINEL
    fd_step: float = DEFAULT_LOG_STEP
    step_size: float = DEFAULT_WALK_STEP
    max_steps: int = 20
    walk_policy: str = V1_POLICY
    mixed_every: int = DEFAULT_MIXED_EVERY
    bound: float = DEFAULT_WALK_BOUND
    lambda_floor: float = 1e-12
    stop_on_label_change: bool = False

    def protocol(self, master_seed: int) -> ObservableProtocol:
        seeds = tuple(derive_seeds(master_seed, self.ensemble, stream=1))
        return ObservableProtocol(
            seeds=seeds, window=self.window, channels=self.channels,
            stride=self.stride, scales=dict(self.scales),
            sentinel=self.sentinel)


@dataclass(frozen=True)
class SweepSettings:
    axis1: dict = field(default_factory=lambda: {
        "name": "market.hiring_ratio", "min": 0.25, "max": 4.0,
        "points": 10, "scale": "log"})
    axis2: dict = field(default_factory=lambda: {
        "name": "market.debt_ceiling", "min": 0.1, "max": 20.0,
        "points": 10, "scale": "log"})
    seeds_per_cell: int = 3
    n_steps: int = 10_000
    burn_in: int = -1
    shock_t_start: int = 300
    shock_months: int = 3
    steps_per_month: int = DEFAULT_STEPS_PER_MONTH
    thresholds: ClassifierThresholds = field(
        default_factory=ClassifierThresholds)

    def spec(self, master_seed: int) -> SweepSpec:
        return SweepSpec(
            axis1=_make_axis(self.axis1), axis2=_make_axis(self.axis2),
            n_steps=self.n_steps, burn_in=self.burn_in,
            seeds_per_cell=self.seeds_per_cell, master_seed=master_seed,
            thresholds=self.thresholds, shock_t_start=self.shock_t_start,
            shock_months=self.shock_months,
            steps_per_month=self.steps_per_month)


@dataclass(frozen=True)
class ShockSettings:
    events: tuple[dict, ...] = ()
    covid: dict = field(default_factory=dict)
    steps_per_month: int = DEFAULT_STEPS_PER_MONTH

    def schedule(self) -> ShockSchedule | None:
        events = [ShockEvent(**ev) for ev in self.events]
        if self.covid:
            cv = dict(self.covid)
            events.extend(covid_shock(
                cv.get("dc_rel", 0.0), cv.get("dzeta_rel", 0.0),
                cv.get("months", 3), cv.get("t_start", 300),
                self.steps_per_month).events)
        if not events:
            return None
        return ShockSchedule(tuple(events))


@dataclass(frozen=True)
class ResolvedConfig:
    market: MarketParams = field(default_factory=MarketParams)
    policy: PolicyParams = field(default_factory=PolicyParams)
    shocks: ShockSettings = field(default_factory=ShockSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    sloppy: SloppySettings = field(default_factory=SloppySettings)
    run: RunSettings = field(default_factory=RunSettings)


def _make_axis(d: dict) -> AxisSpec:
    d = dict(d)
    name = d.pop("name", None)
    if name is None:
        raise ConfigError("sweep axis needs a 'name'")
    if "values" in d:
        vals = tuple(float(v) for v in d.pop("values"))
        if d:
            raise ConfigError(
                f"axis {name}: unexpected keys with explicit values: "
                f"{sorted(d)}")
        return AxisSpec(name, vals)
    try:
        lo, hi = d.pop("min"), d.pop("max")
        points = d.pop("points")
    except KeyError as exc:
        raise ConfigError(f"axis {name}: missing {exc}") from exc
    scale = d.pop("scale", "linear")
    if d:
        raise ConfigError(f"axis {name}: unknown keys {sorted(d)}")
    try:
        return AxisSpec.from_range(name, float(lo), float(hi), int(points),
                                   scale)
    except ValueError as exc:
        raise ConfigError(f"axis {name}: {exc}") from exc


_TUPLE_FIELDS = {"names", "channels", "window", "events"}


def _coerce(section: str, key: str, raw: Any, default: Any) -> Any:
    if key in _TUPLE_FIELDS and isinstance(raw, list):
        return tuple(dict(v) if isinstance(v, dict) else v for v in raw)
    if isinstance(default, bool):
        if not isinstance(raw, bool):
            raise ConfigError(f"{section}.{key} must be a boolean")
        return raw
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{section}.{key} must be an integer")
        return raw
    if isinstance(default, float):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number")
        return float(raw)
    return raw


def _build_section(cls, section: str, data: dict):
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    changes = {}
    for key, raw in data.items():
        if key not in names:
            raise ConfigError(f"unknown key {section}.{key}")
        if key == "thresholds":
            changes[key] = _build_section(ClassifierThresholds,
                                          f"{section}.thresholds", raw)
            continue
        changes[key] = _coerce(section, key, raw, getattr(defaults, key))
    try:
        return dataclasses.replace(defaults, **changes)
    except (ParameterError, ScheduleError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


_SECTIONS = {
    "market": MarketParams,
    "policy": PolicyParams,
    "shocks": ShockSettings,
    "sweep": SweepSettings,
    "sloppy": SloppySettings,
    "run": RunSettings,
}


def parse_config(text: str, overrides: list[str] | None = None,
                 ) -> ResolvedConfig:
    """Resolve TOML text (plus key=value overrides) to a full config."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    for ov in overrides or []:
        data = _apply_override(data, ov)
    sections = {}
    for name, raw in data.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        if not isinstance(raw, dict):
            raise ConfigError(f"[{name}] must be a table")
        sections[name] = _build_section(_SECTIONS[name], name, raw)
    cfg = ResolvedConfig(**sections)
    # shocks must be buildable and inside legal ranges at resolve time
    schedule = cfg.shocks.schedule()
    if schedule is not None:
        try:
            schedule.validate_against(cfg.market, cfg.policy)
        except ScheduleError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def _apply_override(data: dict, override: str) -> dict:
    key, sep, value = override.partition("=")
    if not sep:
        raise ConfigError(f"override {override!r} is not of form key=value")
    try:
        parsed = tomllib.loads(f"v = {value.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value.strip()  # bare strings allowed for convenience
    node = data
    parts = key.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r} collides with a value")
    node[parts[-1]] = parsed
    return data


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, dict):
        inner = ", ".join(f"{k} = {_fmt(v)}" for k, v in value.items())
        return "{" + inner + "}"
    raise TypeError(f"cannot render {value!r}")


def render_config(cfg: ResolvedConfig) -> str:
    """Canonical TOML for a resolved configuration (all keys explicit)."""
    lines: list[str] = []
    for section, cls in _SECTIONS.items():
        obj = getattr(cfg, section)
        lines.append(f"[{section}]")
        for f in dataclasses.fields(cls):
            v = getattr(obj, f.name)
            if f.name == "thresholds":
                continue
            if dataclasses.is_dataclass(v):
                continue
            lines.append(f"{f.name} = {_fmt(v)}")
        if hasattr(obj, "thresholds"):
            lines.append(f"[{section}.thresholds]")
            th = obj.thresholds
            for f in dataclasses.fields(ClassifierThresholds):
                lines.append(f"{f.name} = {_fmt(getattr(th, f.name))}")
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg: ResolvedConfig) -> str:
    return hashlib.sha256(render_config(cfg).encode()).hexdigest()


def default_config() -> ResolvedConfig:
    return ResolvedConfig()
