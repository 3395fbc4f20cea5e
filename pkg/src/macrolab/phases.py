"""Trajectory summarization and phase classification.

A trajectory is condensed into window statistics (unemployment moments,
mean inflation, cycle amplitude, crossing counts, bankruptcy rate) and
mapped to exactly one regime label by a fixed-precedence decision list.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .economy import Trajectory
from .params import ClassifierThresholds

MIN_WINDOW = 100

# EMA weight used for the end-of-window inflation trend; fixed so the
# classifier does not depend on the run's policy parameters.
SUMMARY_EMA = 0.2


class PhaseLabel(str, enum.Enum):
    FE = "FE"                    # full employment, positive inflation
    FU = "FU"                    # full unemployment, deflation
    EC = "EC"                    # endogenous boom-bust cycles
    RU = "RU"                    # residual unemployment, zero inflation
    HYPER = "HYPER"              # runaway inflation
    COLLAPSE = "COLLAPSE"        # post-shock dysfunction (L-shape)
    UNCLASSIFIED = "UNCLASSIFIED"

    def __str__(self) -> str:  # CSV-friendly
        return self.value


@dataclass(frozen=True)
class TrajectorySummary:
    """Window statistics of one trajectory over [burn_in, end)."""

    u_mean: float
    u_max: float
    u_min: float
    u_std: float
    pi_mean: float
    pi_ema_end: float
    bankruptcy_rate: float       # events per firm per step
    crossings: int               # median crossings of the unemployment series
    blown_up: bool
    shock_dwell: int | None      # post-shock steps above the collapse level
    window: tuple[int, int]

    @property
    def amplitude(self) -> float:
        return self.u_max - self.u_min


def amplitude(summary: TrajectorySummary) -> float:
    """Business-cycle amplitude: max minus min unemployment in the window."""
    return summary.amplitude


def _median_crossings(u: np.ndarray) -> int:
    centered = u - np.median(u)
    sign = np.sign(centered)
    sign = sign[sign != 0.0]
    if sign.size < 2:
        return 0
    return int(np.sum(sign[1:] != sign[:-1]))


def summarize(
    traj: Trajectory,
    burn_in: int,
    thresholds: ClassifierThresholds | None = None,
    shock_end: int | None = None,
) -> TrajectorySummary:
    """Window statistics over [burn_in, len); needs >= MIN_WINDOW steps.

    Blown-up runs are summarized over whatever was recorded (the analysis
    window is truncated, never padded), with the blow-up flagged.
    """
    thresholds = thresholds or ClassifierThresholds()
    n = len(traj)
    if not traj.blown_up and n <= burn_in + MIN_WINDOW:
        raise ValueError(
            f"trajectory of length {n} too short for burn_in={burn_in} "
            f"(need > burn_in + {MIN_WINDOW})"
        )
    lo = min(burn_in, max(n - MIN_WINDOW, 0))
    u = traj.u[lo:]
    pi = traj.pi[lo:]
    if traj.blown_up:
        pi_ema_end = np.inf if (pi.size == 0 or pi[-1] > 0) else -np.inf
    else:
        ema = 0.0
        for x in pi:
            ema = SUMMARY_EMA * x + (1.0 - SUMMARY_EMA) * ema
        pi_ema_end = float(ema)
    n_firms = traj.manifest.get("n_firms", 1)
    rate = float(np.sum(traj.bankruptcies[lo:])) / (n_firms * max(u.size, 1))

    dwell = None
    if shock_end is not None:
        post = traj.u[shock_end:]
        dwell = int(np.sum(post > thresholds.u_collapse))

    return TrajectorySummary(
        u_mean=float(np.mean(u)) if u.size else 1.0,
        u_max=float(np.max(u)) if u.size else 1.0,
        u_min=float(np.min(u)) if u.size else 1.0,
        u_std=float(np.std(u)) if u.size else 0.0,
        pi_mean=float(np.mean(pi)) if pi.size else 0.0,
        pi_ema_end=pi_ema_end,
        bankruptcy_rate=rate,
        crossings=_median_crossings(u) if u.size else 0,
        blown_up=traj.blown_up,
        shock_dwell=dwell,
        window=(lo, n),
    )


def classify_phase(summary: TrajectorySummary,
                   thresholds: ClassifierThresholds | None = None,
                   ) -> PhaseLabel:
    """Map a summary to exactly one label; first matching rule wins.

    Order: HYPER, COLLAPSE (only when a shock was scheduled), FU, EC, FE,
    RU, else UNCLASSIFIED.
    """
    th = thresholds or ClassifierThresholds()
    if summary.blown_up or summary.pi_ema_end > th.pi_hyper:
        return PhaseLabel.HYPER
    if summary.shock_dwell is not None and summary.shock_dwell > th.dwell_min:
        return PhaseLabel.COLLAPSE
    if summary.u_mean > th.u_high and summary.pi_mean < 0.0:
        return PhaseLabel.FU
    if summary.amplitude > th.amp_ec and summary.crossings >= th.crossings_ec:
        return PhaseLabel.EC
    if (summary.u_mean < th.u_low and summary.pi_mean > 0.0
            and summary.amplitude <= th.amp_ec):
        return PhaseLabel.FE
    if (th.u_low <= summary.u_mean <= th.u_mid
            and abs(summary.pi_mean) < th.pi_zero
            and summary.bankruptcy_rate > 0.0):
        return PhaseLabel.RU
    return PhaseLabel.UNCLASSIFIED
