"""Parameter containers and range validation for the simulator.

Market parameters describe the firm/household economy; policy parameters
describe the central bank, expectation formation and their transmission
channels. All ranges are enforced at construction so that invalid values
are rejected before any simulation starts.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass


class ParameterError(ValueError):
    """Raised when a parameter is outside its legal range."""


def _check(name: str, value: float, lo: float, hi: float,
           lo_open: bool = False, hi_open: bool = False) -> None:
    bad = (
        not math.isfinite(value) and not (name == "debt_ceiling" and value == math.inf)
        or value < lo or value > hi
        or (lo_open and value == lo)
        or (hi_open and value == hi)
    )
    if bad:
        lob = "(" if lo_open else "["
        hib = ")" if hi_open else "]"
        raise ParameterError(
            f"{name} = {value!r} outside legal range {lob}{lo}, {hi}{hib}"
        )


ANCHORED = "anchored"
FLOATING = "floating"


@dataclass(frozen=True)
class MarketParams:
    """Firm-sector and household parameters of the economy.

    ``hiring_ratio`` is the ratio of hiring to firing adjustment speed and
    enters the dynamics only through ``hiring_speed``.  ``debt_ceiling``
    caps firm debt at a multiple of current revenue capacity and may be
    ``inf`` (unlimited credit).
    """

    n_firms: int = 1000
    workforce: float = 0.0          # 0 means "equal to n_firms"
    productivity: float = 1.0       # goods per worker per step
    hiring_ratio: float = 2.0       # hiring speed / firing speed
    firing_speed: float = 0.1       # fraction of excess production shed per step
    choice_intensity: float = 1.0   # price sensitivity of demand allocation
    price_step: float = 0.05        # scale of stochastic price adjustments
    wage_step: float = 0.05         # scale of stochastic wage adjustments
    debt_ceiling: float = 3.0       # max debt as multiple of revenue capacity
    consumption_base: float = 0.5   # baseline propensity to consume savings
    dividend_rate: float = 0.02     # share of positive cash paid out per step
    revival_prob: float = 0.1       # per-step revival probability of a dead firm
    household_loss_share: float = 0.5  # share of a default absorbed by households

    def __post_init__(self) -> None:
        if self.n_firms < 1:
            raise ParameterError(f"n_firms = {self.n_firms} must be >= 1")
        if self.workforce == 0.0:
            object.__setattr__(self, "workforce", float(self.n_firms))
        _check("workforce", self.workforce, 0.0, math.inf, lo_open=True)
        _check("productivity", self.productivity, 0.0, math.inf, lo_open=True)
        _check("hiring_ratio", self.hiring_ratio, 0.0, math.inf, lo_open=True)
        _check("firing_speed", self.firing_speed, 0.0, 1.0, lo_open=True)
        _check("choice_intensity", self.choice_intensity, 0.0, math.inf)
        _check("price_step", self.price_step, 0.0, 1.0, hi_open=True)
        _check("wage_step", self.wage_step, 0.0, 1.0, hi_open=True)
        if not (self.debt_ceiling >= 0.0):  # NaN rejected here as well
            raise ParameterError(
                f"debt_ceiling = {self.debt_ceiling!r} outside legal range [0, inf]"
            )
        _check("consumption_base", self.consumption_base, 0.0, 1.0, lo_open=True)
        _check("dividend_rate", self.dividend_rate, 0.0, 1.0)
        _check("revival_prob", self.revival_prob, 0.0, 1.0)
        _check("household_loss_share", self.household_loss_share, 0.0, 1.0)

    @property
    def hiring_speed(self) -> float:
        """Upward adjustment speed, clipped so one step never overshoots."""
        return min(1.0, self.hiring_ratio * self.firing_speed)

    @property
    def money_supply(self) -> float:
        """Initial total money stock (one unit per firm by construction)."""
        return float(self.n_firms)


@dataclass(frozen=True)
class PolicyParams:
    """Central-bank, expectation and transmission-channel parameters.

    The all-defaults instance is the bare economy: every coupling is zero,
    so the policy layer leaves the firm/household dynamics untouched.
    """

    inflation_target: float = 0.02   # per step
    baseline_rate: float = 0.0       # per step
    taylor_inflation: float = 0.0    # rate response to the inflation gap
    taylor_employment: float = 0.0   # rate response to the employment gap
    employment_target: float = 0.97
    inflation_memory: float = 0.2    # EMA weight of the latest realized inflation
    trust_base: float = 0.8          # weight of the target in expectations
    trust_speed: float = 0.0         # trust loss/recovery speed (floating mode)
    trust_band: float = 0.02         # off-target tolerance before trust erodes
    price_indexation: float = 0.0    # pass-through of expected inflation to prices
    wage_indexation: float = 0.0     # pass-through of expected inflation to wages
    consumption_rate_response: float = 0.0  # sensitivity of spending to real rate
    fragility_base: float = 0.0      # hiring/firing response to firm indebtedness
    fragility_rate_response: float = 0.0    # extra response when real rate is high
    anchoring: str = ANCHORED

    def __post_init__(self) -> None:
        _check("inflation_target", self.inflation_target, -1.0, 1.0)
        _check("baseline_rate", self.baseline_rate, 0.0, math.inf)
        _check("taylor_inflation", self.taylor_inflation, 0.0, math.inf)
        _check("taylor_employment", self.taylor_employment, 0.0, math.inf)
        _check("employment_target", self.employment_target, 0.0, 1.0)
        _check("inflation_memory", self.inflation_memory, 0.0, 1.0, lo_open=True)
        _check("trust_base", self.trust_base, 0.0, 1.0)
        _check("trust_speed", self.trust_speed, 0.0, math.inf)
        _check("trust_band", self.trust_band, 0.0, math.inf)
        _check("price_indexation", self.price_indexation, 0.0, math.inf)
        _check("wage_indexation", self.wage_indexation, 0.0, math.inf)
        _check("consumption_rate_response", self.consumption_rate_response,
               0.0, math.inf)
        _check("fragility_base", self.fragility_base, 0.0, math.inf)
        _check("fragility_rate_response", self.fragility_rate_response,
               0.0, math.inf)
        if self.anchoring not in (ANCHORED, FLOATING):
            raise ParameterError(
                f"anchoring = {self.anchoring!r} must be "
                f"'{ANCHORED}' or '{FLOATING}'"
            )


@dataclass(frozen=True)
class ClassifierThresholds:
    """Thresholds used to map trajectory summaries to phase labels."""

    u_high: float = 0.8         # mean unemployment above this: collapsed economy
    u_low: float = 0.1          # mean unemployment below this: full employment
    u_mid: float = 0.5          # upper bound of the residual-unemployment band
    amp_ec: float = 0.5         # cycle amplitude above this: endogenous crises
    crossings_ec: int = 3       # minimum median crossings for crisis cycles
    pi_zero: float = 0.002      # |mean inflation| below this counts as zero
    pi_hyper: float = 0.10      # end-of-window inflation EMA above this: runaway
    u_collapse: float = 0.3     # post-shock unemployment counted as dysfunction
    dwell_min: int = 24         # post-shock steps above u_collapse for an L-shape

    def __post_init__(self) -> None:
        for name in ("u_high", "u_low", "u_mid", "amp_ec", "u_collapse"):
            _check(name, getattr(self, name), 0.0, 1.0)
        _check("pi_zero", self.pi_zero, 0.0, math.inf)
        _check("pi_hyper", self.pi_hyper, 0.0, math.inf)
        if self.crossings_ec < 0 or self.dwell_min < 0:
            raise ParameterError("crossings_ec and dwell_min must be >= 0")


def replace(params, **changes):
    """dataclasses.replace that re-runs range validation."""
    return dataclasses.replace(params, **changes)
