"""Time-windowed parameter overrides for exogenous shock experiments.

A schedule is a validated list of events; each event overrides one target
quantity inside [t_start, t_end) and reverts exactly at t_end.  Targets
cover the consumption propensity, productivity, the debt ceiling and the
baseline rate, plus two impulse devices: a one-off household transfer and
a per-step exogenous price push.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .params import MarketParams, ParameterError, PolicyParams, replace

RELATIVE = "relative"
ABSOLUTE = "absolute"

# Targets that override a parameter inside the window.
PARAM_TARGETS = ("consumption_base", "productivity", "debt_ceiling",
                 "baseline_rate")
# Impulse targets: a money transfer booked once at t_start, and a price
# push applied to all posted prices at every step of the window.
IMPULSE_TARGETS = ("transfer", "price_push")
TARGETS = PARAM_TARGETS + IMPULSE_TARGETS

DEFAULT_STEPS_PER_MONTH = 1


class ScheduleError(ValueError):
    """Raised when a shock schedule fails validation."""


@dataclass(frozen=True)
class ShockEvent:
    target: str
    delta: float
    t_start: int
    t_end: int
    mode: str = RELATIVE

    def __post_init__(self) -> None:
        if self.target not in TARGETS:
            raise ScheduleError(
                f"unknown shock target {self.target!r}; legal: {TARGETS}"
            )
        if self.mode not in (RELATIVE, ABSOLUTE):
            raise ScheduleError(f"unknown shock mode {self.mode!r}")
        if self.t_start < 0 or self.t_end < self.t_start:
            raise ScheduleError(
                f"bad window [{self.t_start}, {self.t_end}) for {self.target}"
            )

    def applies_at(self, t: int) -> bool:
        return self.t_start <= t < self.t_end

    def apply(self, base: float) -> float:
        if self.mode == RELATIVE:
            return base * (1.0 + self.delta)
        return base + self.delta


@dataclass(frozen=True)
class ShockSchedule:
    events: tuple[ShockEvent, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        events = tuple(sorted(self.events, key=lambda e: (e.t_start, e.target)))
        object.__setattr__(self, "events", events)
        seen: dict[str, int] = {}
        for ev in events:
            if ev.target in IMPULSE_TARGETS:
                continue
            if ev.target in seen and ev.t_start < seen[ev.target]:
                raise ScheduleError(
                    f"overlapping windows on target {ev.target!r}"
                )
            seen[ev.target] = max(seen.get(ev.target, 0), ev.t_end)

    def __len__(self) -> int:
        return len(self.events)

    def end(self) -> int:
        """First step after which every parameter is back at baseline."""
        return max((ev.t_end for ev in self.events), default=0)

    def validate_against(self, market: MarketParams,
                         policy: PolicyParams) -> None:
        """Reject schedules whose overridden values leave legal ranges."""
        for ev in self.events:
            if ev.target in IMPULSE_TARGETS:
                continue
            base = _baseline_value(market, policy, ev.target)
            value = ev.apply(base)
            try:
                if ev.target == "baseline_rate":
                    replace(policy, baseline_rate=value)
                else:
                    replace(market, **{ev.target: value})
            except ParameterError as exc:
                raise ScheduleError(
                    f"shock on {ev.target!r} over [{ev.t_start}, {ev.t_end}) "
                    f"produces an illegal value: {exc}"
                ) from exc


def _baseline_value(market: MarketParams, policy: PolicyParams,
                    target: str) -> float:
    if target == "baseline_rate":
        return policy.baseline_rate
    return getattr(market, target)


def effective_params(
    market: MarketParams,
    policy: PolicyParams,
    schedule: ShockSchedule | None,
    t: int,
) -> tuple[MarketParams, PolicyParams, float, float]:
    """Parameters in force at step t, plus (transfer, price_push) impulses.

    Outside all windows the baseline objects are returned unchanged.
    """
    transfer = 0.0
    price_push = 0.0
    if schedule is None or not schedule.events:
        return market, policy, transfer, price_push
    market_changes: dict[str, float] = {}
    policy_changes: dict[str, float] = {}
    for ev in schedule.events:
        if ev.target == "transfer":
            if t == ev.t_start:
                transfer += ev.delta
        elif ev.target == "price_push":
            if ev.applies_at(t):
                price_push += ev.delta
        elif ev.applies_at(t):
            base = _baseline_value(market, policy, ev.target)
            if ev.target == "baseline_rate":
                policy_changes[ev.target] = ev.apply(base)
            else:
                market_changes[ev.target] = ev.apply(base)
    if market_changes:
        market = replace(market, **market_changes)
    if policy_changes:
        policy = replace(policy, **policy_changes)
    return market, policy, transfer, price_push


def covid_shock(
    dc_rel: float,
    dzeta_rel: float,
    duration_months: int,
    t_start: int,
    steps_per_month: int = DEFAULT_STEPS_PER_MONTH,
) -> ShockSchedule:
    """Dual demand/supply shock: cut the consumption propensity by dc_rel
    and productivity by dzeta_rel over a window of whole months."""
    if not (0.0 <= dc_rel < 1.0) or not (0.0 <= dzeta_rel < 1.0):
        raise ScheduleError("relative shock magnitudes must lie in [0, 1)")
    if duration_months <= 0 or steps_per_month <= 0:
        raise ScheduleError("duration and steps_per_month must be positive")
    t_end = t_start + duration_months * steps_per_month
    return ShockSchedule((
        ShockEvent("consumption_base", -dc_rel, t_start, t_end, RELATIVE),
        ShockEvent("productivity", -dzeta_rel, t_start, t_end, RELATIVE),
    ))


def build_step_overrides(
    market: MarketParams,
    policy: PolicyParams,
    schedule: ShockSchedule | None,
    n_steps: int,
):
    """Per-step override arrays consumed by the simulation kernel.

    Returns (c0, zeta, theta, rho_star, transfer, price_push), each an
    array of length n_steps.
    """
    import numpy as np

    c0 = np.full(n_steps, market.consumption_base)
    zeta = np.full(n_steps, market.productivity)
    theta = np.full(n_steps, market.debt_ceiling)
    rho_star = np.full(n_steps, policy.baseline_rate)
    transfer = np.zeros(n_steps)
    push = np.zeros(n_steps)
    if schedule is not None and schedule.events:
        schedule.validate_against(market, policy)
        arrays = {"consumption_base": c0, "productivity": zeta,
                  "debt_ceiling": theta, "baseline_rate": rho_star}
        for ev in schedule.events:
            if ev.target == "transfer":
                if 0 <= ev.t_start < n_steps:
                    transfer[ev.t_start] += ev.delta
                continue
            lo = max(ev.t_start, 0)
            hi = min(ev.t_end, n_steps)
            if hi <= lo:
                continue
            if ev.target == "price_push":
                push[lo:hi] += ev.delta
            else:
                base = _baseline_value(market, policy, ev.target)
                arrays[ev.target][lo:hi] = ev.apply(base)
    return c0, zeta, theta, rho_star, transfer, push
