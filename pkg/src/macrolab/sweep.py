"""Two-dimensional parameter sweeps producing phase maps.

Each grid cell runs the same seed list, summaries are classified per seed,
and the cell reports the modal label with its agreement fraction plus mean
summary statistics.  Cells are independent work units; evaluation order
and worker count never change the result.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .economy import simulate
from .params import ClassifierThresholds, MarketParams, PolicyParams, replace
from .phases import PhaseLabel, classify_phase, summarize
from .shocks import ShockSchedule, covid_shock
from .streams import derive_seeds

# Axis names with special meaning beyond plain parameter fields.
JOINT_INDEXATION = "policy.g_pw"        # sets price and wage indexation together
SHOCK_DC = "shock.dc_rel"               # consumption-shock magnitude
SHOCK_DZETA = "shock.dzeta_rel"         # productivity-shock magnitude


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis: a parameter name and its grid values."""

    name: str
    values: tuple[float, ...]

    @staticmethod
    def from_range(name: str, lo: float, hi: float, points: int,
                   scale: str = "linear") -> "AxisSpec":
        if points < 1:
            raise ValueError("points must be >= 1")
        if scale == "log":
            vals = np.geomspace(lo, hi, points)
        elif scale == "linear":
            vals = np.linspace(lo, hi, points)
        else:
            raise ValueError(f"unknown axis scale {scale!r}")
        return AxisSpec(name, tuple(float(v) for v in vals))


@dataclass(frozen=True)
class SweepSpec:
    axis1: AxisSpec
    axis2: AxisSpec
    n_steps: int = 10_000
    burn_in: int = -1                     # -1 means n_steps // 2
    seeds_per_cell: int = 3
    master_seed: int = 0
    thresholds: ClassifierThresholds = field(
        default_factory=ClassifierThresholds)
    shock_t_start: int = 300              # used only by shock-magnitude axes
    shock_months: int = 3
    steps_per_month: int = 1

    @property
    def effective_burn_in(self) -> int:
        return self.n_steps // 2 if self.burn_in < 0 else self.burn_in

    def seed_list(self) -> list[int]:
        return derive_seeds(self.master_seed, self.seeds_per_cell)

    @property
    def has_shock_axis(self) -> bool:
        return any(a.name in (SHOCK_DC, SHOCK_DZETA)
                   for a in (self.axis1, self.axis2))


@dataclass
class CellResult:
    label: PhaseLabel
    agreement: float
    mean_u: float
    amp_u: float
    mean_pi: float
    bankruptcy_rate: float
    blowup_frac: float


@dataclass
class PhaseMap:
    """Classification grid over a 2-D parameter plane."""

    spec: SweepSpec
    cells: list[list[CellResult]]        # indexed [i1][i2]

    COLUMNS = ("axis1", "axis2", "label", "agreement", "mean_u", "amp_u",
               "mean_pi", "bankruptcy_rate", "blowup_frac")

    def rows(self):
        for i1, v1 in enumerate(self.spec.axis1.values):
            for i2, v2 in enumerate(self.spec.axis2.values):
                c = self.cells[i1][i2]
                yield (v1, v2, str(c.label), c.agreement, c.mean_u, c.amp_u,
                       c.mean_pi, c.bankruptcy_rate, c.blowup_frac)

    def label_grid(self) -> list[list[str]]:
        return [[str(c.label) for c in row] for row in self.cells]


def apply_axis(market: MarketParams, policy: PolicyParams,
               shock_magnitudes: dict, name: str, value: float,
               ) -> tuple[MarketParams, PolicyParams]:
    """Set one swept quantity; shock magnitudes accumulate in the dict."""
    if name == JOINT_INDEXATION:
        return market, replace(policy, price_indexation=value,
                               wage_indexation=value)
    if name == SHOCK_DC:
        shock_magnitudes["dc_rel"] = value
        return market, policy
    if name == SHOCK_DZETA:
        shock_magnitudes["dzeta_rel"] = value
        return market, policy
    scope, _, fieldname = name.partition(".")
    if scope == "market" and hasattr(market, fieldname):
        return replace(market, **{fieldname: value}), policy
    if scope == "policy" and hasattr(policy, fieldname):
        return market, replace(policy, **{fieldname: value})
    raise ValueError(f"unknown sweep axis {name!r}")


def evaluate_cell(
    market: MarketParams,
    policy: PolicyParams,
    schedule: ShockSchedule | None,
    spec: SweepSpec,
    v1: float,
    v2: float,
) -> CellResult:
    """Run every seed of one cell and aggregate."""
    magnitudes: dict = {}
    m, p = apply_axis(market, policy, magnitudes, spec.axis1.name, v1)
    m, p = apply_axis(m, p, magnitudes, spec.axis2.name, v2)
    sched = schedule
    shock_end = None
    if magnitudes:
        sched = covid_shock(
            magnitudes.get("dc_rel", 0.0), magnitudes.get("dzeta_rel", 0.0),
            spec.shock_months, spec.shock_t_start, spec.steps_per_month)
        shock_end = sched.end()
    elif schedule is not None and len(schedule):
        shock_end = schedule.end()

    labels: list[PhaseLabel] = []
    stats = np.zeros(4)
    blowups = 0
    seeds = spec.seed_list()
    for seed in seeds:
        traj = simulate(m, p, sched, n_steps=spec.n_steps, seed=seed)
        summ = summarize(traj, spec.effective_burn_in, spec.thresholds,
                         shock_end=shock_end)
        labels.append(classify_phase(summ, spec.thresholds))
        blowups += int(summ.blown_up)
        stats += (summ.u_mean, summ.amplitude,
                  0.0 if not math.isfinite(summ.pi_mean) else summ.pi_mean,
                  summ.bankruptcy_rate)
    # modal label; ties broken by enum declaration order for determinism
    counts: dict[PhaseLabel, int] = {}
    for lb in labels:
        counts[lb] = counts.get(lb, 0) + 1
    best = max(counts.values())
    modal = next(lb for lb in PhaseLabel if counts.get(lb, 0) == best)
    n = len(seeds)
    return CellResult(
        label=modal, agreement=best / n,
        mean_u=stats[0] / n, amp_u=stats[1] / n, mean_pi=stats[2] / n,
        bankruptcy_rate=stats[3] / n, blowup_frac=blowups / n,
    )


def _cell_task(args) -> tuple[int, int, CellResult]:
    market, policy, schedule, spec, i1, i2 = args
    v1 = spec.axis1.values[i1]
    v2 = spec.axis2.values[i2]
    return i1, i2, evaluate_cell(market, policy, schedule, spec, v1, v2)


def sweep2d(
    spec: SweepSpec,
    market: MarketParams,
    policy: PolicyParams | None = None,
    schedule: ShockSchedule | None = None,
    threads: int = 0,
) -> PhaseMap:
    """Evaluate the full grid; `threads` worker processes (0 = all cores).

    The result is identical at any worker count: cells are keyed by index
    and reduced in fixed order.
    """
    policy = policy or PolicyParams()
    n1, n2 = len(spec.axis1.values), len(spec.axis2.values)
    tasks = [(market, policy, schedule, spec, i1, i2)
             for i1 in range(n1) for i2 in range(n2)]
    if threads == 0:
        threads = multiprocessing.cpu_count()
    threads = min(threads, len(tasks))
    if threads > 1:
        with multiprocessing.get_context("fork").Pool(threads) as pool:
            results = pool.map(_cell_task, tasks, chunksize=1)
    else:
        results = [_cell_task(t) for t in tasks]
    cells: list[list[CellResult | None]] = [[None] * n2 for _ in range(n1)]
    for i1, i2, cell in results:
        cells[i1][i2] = cell
    return PhaseMap(spec=spec, cells=cells)  # type: ignore[arg-type]
