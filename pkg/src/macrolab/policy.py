"""Central-bank layer: inflation measurement, expectations, trust and the
Taylor rule, plus the two transmission channels to households and firms.

All functions are pure and operate on scalars or firm arrays; the
simulation engine applies them once per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import FLOATING, PolicyParams

# Denominator guard in the fragility ratio (debt over revenue capacity).
FRAGILITY_EPS = 1e-12

# Floor of the indexation factor 1 + g * expected_inflation; keeps prices
# and wages positive under extreme measured deflation.
INDEXATION_FLOOR = 0.01


@dataclass
class CentralBankState:
    """Mutable per-run central-bank state."""

    pi_ema: float = 0.0   # smoothed realized inflation
    trust: float = 0.8    # current weight of the target in expectations
    rate: float = 0.0     # policy rate in effect for the coming step


def initial_cb_state(policy: PolicyParams) -> CentralBankState:
    return CentralBankState(
        pi_ema=0.0,
        trust=policy.trust_base,
        rate=max(0.0, policy.baseline_rate),
    )


def measure_inflation(p_bar_now: float, p_bar_prev: float,
                      pi_ema: float, memory: float) -> tuple[float, float]:
    """Realized inflation of the step and the updated EMA."""
    pi = p_bar_now / p_bar_prev - 1.0
    return pi, memory * pi + (1.0 - memory) * pi_ema


def expected_inflation(pi_ema: float, pi_target: float, trust: float) -> float:
    """Blend of the target and realized inflation, weighted by trust."""
    return trust * pi_target + (1.0 - trust) * pi_ema


def update_trust(trust: float, pi_ema: float, pi_target: float,
                 speed: float, band: float, trust_base: float) -> float:
    """Trust erodes while inflation sits outside the tolerance band and
    relaxes back toward its baseline while inside it."""
    gap = abs(pi_ema - pi_target)
    if gap > band:
        trust = trust - speed * (gap - band)
    else:
        trust = trust + speed * (trust_base - trust)
    return min(1.0, max(0.0, trust))


def taylor_rate(pi_ema: float, employment_rate: float,
                policy: PolicyParams) -> float:
    """Policy rate from the inflation and employment gaps, floored at zero."""
    rho = (policy.baseline_rate
           + policy.taylor_inflation * (pi_ema - policy.inflation_target)
           + policy.taylor_employment * (employment_rate
                                         - policy.employment_target))
    return max(0.0, rho)


def consumption_propensity(c_base: float, pi_hat: float,
                           deposit_rate: float, response: float) -> float:
    """Effective propensity to consume, rising with expected inflation and
    falling with the deposit rate."""
    c = c_base * (1.0 + response * (pi_hat - deposit_rate))
    return min(1.0, max(0.0, c))


def fragility_adjustment_speeds(
    cash: np.ndarray,
    production: np.ndarray,
    price_index: float,
    loan_rate: float,
    pi_hat: float,
    fragility_base: float,
    rate_response: float,
    hiring_speed: float,
    firing_speed: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-firm hiring/firing speeds modulated by indebtedness.

    Indebted firms fire faster and hire slower, the more so when the real
    rate is positive. Debt-free firms keep the baseline speeds exactly.
    """
    fragility = np.maximum(-cash, 0.0) / (price_index * production
                                          + FRAGILITY_EPS)
    gamma = fragility_base * (1.0 + rate_response
                              * max(loan_rate - pi_hat, 0.0))
    eta_plus = np.maximum(0.0, hiring_speed * (1.0 - gamma * fragility))
    eta_minus = np.minimum(1.0, firing_speed * (1.0 + gamma * fragility))
    return eta_plus, eta_minus


def indexation_factor(indexation: float, pi_hat: float) -> float:
    """Multiplicative pass-through of expected inflation, floored positive."""
    return max(1.0 + indexation * pi_hat, INDEXATION_FLOOR)
