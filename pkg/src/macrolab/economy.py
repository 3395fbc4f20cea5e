"""Economy state, the per-step update operations, and trajectory runs.

The operations here are the reference implementations of each phase of a
simulation step; ``step`` composes them in the mandated order and
``simulate`` drives the fused kernel for long runs.  Both paths implement
the same arithmetic.

Money is strictly conserved: household savings plus aggregate firm cash,
minus everything the policy layer has injected, equals the initial money
stock at every step boundary.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .params import FLOATING, MarketParams, PolicyParams
from .policy import (
    FRAGILITY_EPS,
    CentralBankState,
    consumption_propensity,
    expected_inflation,
    indexation_factor,
    initial_cb_state,
    measure_inflation,
    taylor_rate,
    update_trust,
)
from .shocks import ShockSchedule, effective_params
from .streams import step_draws


class EconomyCollapsed(RuntimeError):
    """No active firm is left to allocate demand to."""


class BlowUp(RuntimeError):
    """Non-finite quantities appeared (runaway nominal dynamics)."""


@dataclass
class EconomyState:
    """Full simulation state: firm arrays, aggregate household, indices,
    money ledger and central-bank state."""

    production: np.ndarray   # goods per step, one entry per firm
    price: np.ndarray
    wage: np.ndarray
    cash: np.ndarray         # may be negative (debt)
    active: np.ndarray       # bool
    savings: float
    c_eff: float
    price_index: float       # production-weighted mean price
    wage_index: float        # employment-weighted mean wage
    t: int
    money_initial: float
    cb_flows_cum: float      # net money created by the policy layer
    cb: CentralBankState
    zeta_prev: float

    @property
    def n_firms(self) -> int:
        return self.production.shape[0]

    def employment(self, zeta: float) -> float:
        return float(np.sum(self.production)) / zeta

    def total_money(self) -> float:
        return self.savings + float(np.sum(self.cash))

    def conservation_residual(self) -> float:
        return (self.total_money() - self.cb_flows_cum
                - self.money_initial) / self.money_initial

    def copy(self) -> "EconomyState":
        return copy.deepcopy(self)


@dataclass
class StepRecord:
    t: int
    u: float
    pi: float
    p_bar: float
    output: float
    bankruptcies: int
    S: float
    rho: float
    tau: float
    resid: float


@dataclass
class Trajectory:
    """Per-step observable records of one seeded run."""

    t: np.ndarray
    u: np.ndarray
    pi: np.ndarray
    p_bar: np.ndarray
    output: np.ndarray
    bankruptcies: np.ndarray
    S: np.ndarray
    rho: np.ndarray
    tau: np.ndarray
    resid: np.ndarray
    status: str = engine.STATUS_OK
    blowup_step: int | None = None
    manifest: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def blown_up(self) -> bool:
        return self.status == engine.STATUS_BLOWUP

    COLUMNS = ("t", "u", "pi", "p_bar", "output", "bankruptcies",
               "S", "rho", "tau_T")

    def rows(self):
        for k in range(len(self)):
            yield (int(self.t[k]), self.u[k], self.pi[k], self.p_bar[k],
                   self.output[k], int(self.bankruptcies[k]), self.S[k],
                   self.rho[k], self.tau[k])


def init_economy(market: MarketParams, policy: PolicyParams,
                 seed: int) -> EconomyState:
    """Symmetric full-employment start near the noiseless fixed point."""
    Y, p, W, E, active, p_bar = engine.initial_arrays(market, seed)
    return EconomyState(
        production=Y, price=p, wage=W, cash=E, active=active,
        savings=market.money_supply, c_eff=market.consumption_base,
        price_index=p_bar, wage_index=market.productivity,
        t=0, money_initial=market.money_supply, cb_flows_cum=0.0,
        cb=initial_cb_state(policy), zeta_prev=market.productivity,
    )


# ---------------------------------------------------------------------------
# per-phase operations
# ---------------------------------------------------------------------------

def allocate_demand(budget: float, prices: np.ndarray, active: np.ndarray,
                    intensity: float, price_index: float) -> np.ndarray:
    """Split the consumption budget over active firms.

    Expenditure share of firm i is softmax(-intensity * p_i / price_index);
    demand in goods is the share divided by the price.  The shares sum to
    one, so the budget is exhausted exactly.
    """
    if budget < 0.0:
        raise ValueError("budget must be >= 0")
    if not np.any(active):
        raise EconomyCollapsed("no active firms")
    x = intensity * prices / price_index
    x = np.where(active, x, np.inf)
    w = np.exp(-(x - x[active].min()))
    w = np.where(active, w, 0.0)
    shares = w / w.sum()
    return np.where(active, budget * shares / prices, 0.0)


def hiring_scale(production: np.ndarray, demands: np.ndarray,
                 eta_plus: np.ndarray, pool: float, zeta: float) -> float:
    """Common rationing factor when aggregate desired hires exceed the
    unemployed pool; preserves symmetry across firms."""
    gap = demands - production
    desired = float(np.sum(np.where(gap > 0.0, eta_plus * gap, 0.0))) / zeta
    if desired > pool:
        return pool / desired
    return 1.0


def adjust_production(production: np.ndarray, demands: np.ndarray,
                      eta_plus: np.ndarray, eta_minus: np.ndarray,
                      scale: float) -> np.ndarray:
    """Close a fraction of the demand gap: eta_plus upward (rationed by
    ``scale``), eta_minus downward. Balanced firms are left unchanged."""
    gap = demands - production
    up = scale * eta_plus * gap
    down = eta_minus * gap
    return production + np.where(gap > 0.0, up, np.where(gap < 0.0, down, 0.0))


def adjust_price(price: np.ndarray, production: np.ndarray,
                 demands: np.ndarray, active: np.ndarray, price_index: float,
                 xi: np.ndarray, gamma_p: float, index_factor: float,
                 ) -> np.ndarray:
    """Stochastic price update: excess demand pushes below-index prices up,
    excess supply pushes above-index prices down; everyone then applies the
    expectation indexation factor."""
    raise_m = active & (demands > production) & (price <= price_index)
    cut_m = active & (demands < production) & (price >= price_index)
    f = np.where(raise_m, 1.0 + gamma_p * xi,
                 np.where(cut_m, 1.0 - gamma_p * xi, 1.0))
    return np.where(active, price * f * index_factor, price)


def adjust_wage(wage: np.ndarray, profit: np.ndarray, production: np.ndarray,
                demands: np.ndarray, active: np.ndarray, xi: np.ndarray,
                gamma_w: float, index_factor: float) -> np.ndarray:
    """Stochastic wage update: profitable firms that are hiring concede
    raises, loss-making firms that are firing impose cuts."""
    raise_m = active & (profit > 0.0) & (demands > production)
    cut_m = active & (profit < 0.0) & (demands < production)
    f = np.where(raise_m, 1.0 + gamma_w * xi,
                 np.where(cut_m, 1.0 - gamma_w * xi, 1.0))
    return np.where(active, wage * f * index_factor, wage)


@dataclass
class SettlementFlows:
    sales: np.ndarray
    payroll: np.ndarray
    interest: np.ndarray
    dividends: np.ndarray
    spent: float
    deposit_interest: float


def settle_accounts(state: EconomyState, demands: np.ndarray, zeta: float,
                    loan_rate: float, deposit_rate: float,
                    dividend_rate: float) -> SettlementFlows:
    """Move the step's money: sales revenue to firms, payroll and debt
    interest and dividends to the household, deposit interest created by
    the policy layer.  Mutates ``state`` in place.

    Trades settle at the prices and wages demand was formed under; newly
    adjusted prices and wages take effect the following step.
    """
    act = state.active
    sold = np.where(act, np.minimum(state.production, demands), 0.0)
    sales = np.where(act, state.price * sold, 0.0)
    payroll = np.where(act, state.wage * state.production / zeta, 0.0)
    interest = np.where(act & (state.cash < 0.0),
                        loan_rate * -state.cash, 0.0)
    state.cash = state.cash + sales - payroll - interest
    dividends = np.where(act & (state.cash > 0.0),
                         dividend_rate * state.cash, 0.0)
    state.cash = state.cash - dividends
    spent = float(np.sum(sales))
    state.savings += (float(np.sum(payroll)) + float(np.sum(interest))
                      + float(np.sum(dividends)) - spent)
    deposit = deposit_rate * state.savings
    state.savings += deposit
    state.cb_flows_cum += deposit
    if not np.isfinite(state.savings) or not np.all(np.isfinite(state.cash)):
        raise BlowUp(f"non-finite balances at step {state.t}")
    return SettlementFlows(sales, payroll, interest, dividends,
                           spent, deposit)


def resolve_bankruptcies_and_revivals(
    state: EconomyState, zeta: float, theta: float, phi: float, f_b: float,
    xi_revival: np.ndarray, workforce: float,
) -> int:
    """Resolve firms whose debt exceeds theta times revenue capacity, then
    revive dead firms with probability phi each.

    A default is absorbed by the household (share f_b, floored at zero
    savings) and pro-rata by surviving firms' positive cash; any residual
    is written off against the ledger so the money identity still closes.
    Firms that die this step are not revival candidates until the next.
    Mutates ``state``; returns the number of bankruptcies.
    """
    act = state.active
    eligible = ~act
    with np.errstate(invalid="ignore"):
        ceiling = theta * (state.price * state.production)
        bankrupt = act & (state.cash < 0.0) & (-state.cash > ceiling)
    nbk = int(np.sum(bankrupt))
    if nbk > 0:
        debt_tot = float(np.sum(-state.cash[bankrupt]))
        hh = min(f_b * debt_tot, state.savings)
        rem = debt_tot - hh
        surv_cash = np.where(act & ~bankrupt & (state.cash > 0.0),
                             state.cash, 0.0)
        cash_tot = float(np.sum(surv_cash))
        firm_abs = min(rem, cash_tot)
        if firm_abs > 0.0:
            state.cash = state.cash - surv_cash / cash_tot * firm_abs
        state.savings -= hh
        state.cb_flows_cum += rem - firm_abs
        state.cash[bankrupt] = 0.0
        state.production[bankrupt] = 0.0
        state.active = act = act & ~bankrupt

    revive = eligible & (xi_revival < phi)
    n_rev = int(np.sum(revive))
    if n_rev > 0:
        n_act = int(np.sum(act))
        ytot = float(np.sum(state.production[act]))
        mean_y = ytot / n_act if n_act > 0 else workforce * zeta / state.n_firms
        pool = max(workforce - ytot / zeta, 0.0)
        size = min(mean_y, zeta * pool / n_rev)
        if size > 0.0:
            state.active = state.active | revive
            state.production[revive] = size
            state.price[revive] = state.price_index
            state.wage[revive] = state.wage_index
            state.cash[revive] = 0.0
    return nbk


# ---------------------------------------------------------------------------
# one full step and whole trajectories
# ---------------------------------------------------------------------------

def step(state: EconomyState, market: MarketParams, policy: PolicyParams,
         draws: np.ndarray, schedule: ShockSchedule | None = None,
         renormalize: bool = False) -> tuple[EconomyState, StepRecord]:
    """One full simulation step, composed from the per-phase operations.

    ``draws`` are the (3, n_firms) uniforms of this step from the run's
    counter-based stream.  Returns the advanced state and its record.
    """
    st = state.copy()
    eff_market, eff_policy, transfer, push = effective_params(
        market, policy, schedule, st.t)
    zeta = eff_market.productivity
    rho = st.cb.rate

    if zeta != st.zeta_prev:
        st.production = st.production * (zeta / st.zeta_prev)
    if transfer != 0.0:
        st.savings += transfer
        st.cb_flows_cum += transfer
    if push != 0.0:
        st.price = np.where(st.active, st.price * (1.0 + push), st.price)

    pi_hat = expected_inflation(st.cb.pi_ema, policy.inflation_target,
                                st.cb.trust)
    st.c_eff = consumption_propensity(
        eff_market.consumption_base, pi_hat, rho,
        policy.consumption_rate_response)
    budget = st.c_eff * st.savings

    try:
        demands = allocate_demand(budget, st.price, st.active,
                                  market.choice_intensity, st.price_index)
        collapsed = False
    except EconomyCollapsed:
        demands = np.zeros(st.n_firms)
        collapsed = True

    out_prod = 0.0
    nbk = 0
    if not collapsed:
        gamma_f = policy.fragility_base * (
            1.0 + policy.fragility_rate_response * max(rho - pi_hat, 0.0))
        debt = np.where(st.cash < 0.0, -st.cash, 0.0)
        frag = debt / (st.price_index * st.production + FRAGILITY_EPS)
        eta_p = np.maximum(0.0, market.hiring_speed * (1.0 - gamma_f * frag))
        eta_m = np.minimum(1.0, market.firing_speed * (1.0 + gamma_f * frag))
        eta_p = np.where(st.active, eta_p, 0.0)
        eta_m = np.where(st.active, eta_m, 0.0)

        pool = max(market.workforce - st.employment(zeta), 0.0)
        scale = hiring_scale(st.production, demands, eta_p, pool, zeta)
        y0 = st.production
        sold0 = np.minimum(y0, demands)
        profit = st.price * sold0 - st.wage * y0 / zeta
        y1 = adjust_production(y0, demands, eta_p, eta_m, scale)

        idx_p = indexation_factor(policy.price_indexation, pi_hat)
        idx_w = indexation_factor(policy.wage_indexation, pi_hat)
        p_new = adjust_price(st.price, y0, demands, st.active,
                             st.price_index, draws[0], market.price_step,
                             idx_p)
        w_new = adjust_wage(st.wage, profit, y0, demands, st.active,
                            draws[1], market.wage_step, idx_w)

        st.production = np.where(st.active, y1, st.production)
        settle_accounts(st, demands, zeta, rho, rho, market.dividend_rate)
        if not (np.all(np.isfinite(p_new)) and np.all(np.isfinite(w_new))
                and np.all(np.isfinite(st.production))):
            raise BlowUp(f"non-finite prices or wages at step {st.t}")
        out_prod = float(np.sum(st.production[st.active]))
        st.price = p_new
        st.wage = w_new
        nbk = resolve_bankruptcies_and_revivals(
            st, zeta, eff_market.debt_ceiling, market.revival_prob,
            market.household_loss_share, draws[2], market.workforce)
    else:
        deposit = rho * st.savings
        st.savings += deposit
        st.cb_flows_cum += deposit
        resolve_bankruptcies_and_revivals(
            st, zeta, eff_market.debt_ceiling, market.revival_prob,
            market.household_loss_share, draws[2], market.workforce)

    act = st.active
    ytot = float(np.sum(st.production[act]))
    if ytot > 0.0:
        p_bar_new = float(np.sum(st.price[act] * st.production[act])) / ytot
        w_bar_new = float(np.sum(st.wage[act] * st.production[act])) / ytot
    else:
        p_bar_new = st.price_index
        w_bar_new = st.wage_index
    if not np.isfinite(p_bar_new):
        raise BlowUp(f"non-finite price index at step {st.t}")

    u = min(1.0, max(0.0, 1.0 - (out_prod / zeta) / market.workforce))
    pi, pi_ema = measure_inflation(p_bar_new, st.price_index, st.cb.pi_ema,
                                   policy.inflation_memory)
    tau_used = st.cb.trust
    rho_used = st.cb.rate
    if policy.anchoring == FLOATING:
        st.cb.trust = update_trust(st.cb.trust, pi_ema,
                                   policy.inflation_target,
                                   policy.trust_speed, policy.trust_band,
                                   policy.trust_base)
    st.cb.pi_ema = pi_ema
    st.cb.rate = taylor_rate(pi_ema, 1.0 - u, eff_policy)

    st.price_index = p_bar_new
    st.wage_index = w_bar_new
    st.zeta_prev = zeta
    resid = st.conservation_residual()

    if renormalize and p_bar_new > 0.0 and np.isfinite(p_bar_new):
        inv = 1.0 / p_bar_new
        st.price = st.price * inv
        st.wage = st.wage * inv
        st.cash = st.cash * inv
        st.savings *= inv
        st.money_initial *= inv
        st.cb_flows_cum *= inv
        st.wage_index *= inv
        st.price_index = 1.0

    record = StepRecord(t=st.t, u=u, pi=pi, p_bar=p_bar_new,
                        output=out_prod, bankruptcies=nbk, S=st.savings,
                        rho=rho_used, tau=tau_used, resid=resid)
    st.t += 1
    return st, record


def step_with_stream(state: EconomyState, market: MarketParams,
                     policy: PolicyParams, seed: int,
                     schedule: ShockSchedule | None = None,
                     ) -> tuple[EconomyState, StepRecord]:
    """``step`` with draws taken from the run stream at the state's step."""
    draws = step_draws(seed, state.t, market.n_firms)
    return step(state, market, policy, draws, schedule)


def simulate(
    market: MarketParams,
    policy: PolicyParams | None = None,
    schedule: ShockSchedule | None = None,
    *,
    n_steps: int,
    seed: int,
    renormalize: bool = False,
) -> Trajectory:
    """Run one seeded trajectory of the economy.

    Parameters
    ----------
    market, policy : parameter sets (policy defaults to the bare economy).
    schedule : optional shock schedule applied on top of the baselines.
    n_steps : number of steps to run (>= 1).
    seed : run seed; the trajectory is a pure function of all arguments.
    renormalize : divide all nominal quantities by the price index each
        step. Real observables are unaffected; long runaway-inflation runs
        stay inside floating-point range.

    Returns a Trajectory; on numerical blow-up it is truncated at the last
    completed step with ``status = "blowup"``.
    """
    if policy is None:
        policy = PolicyParams()
    if schedule is not None:
        schedule.validate_against(market, policy)
    rec, status, blowup_step = engine.run_simulation(
        market, policy, schedule, n_steps, seed, renormalize)
    manifest = {
        "seed": int(seed),
        "n_steps": int(n_steps),
        "n_firms": market.n_firms,
        "renormalize": bool(renormalize),
        "market": market,
        "policy": policy,
        "schedule": schedule,
    }
    n = rec.shape[0]
    return Trajectory(
        t=np.arange(n), u=rec[:, engine.REC_U].copy(),
        pi=rec[:, engine.REC_PI].copy(),
        p_bar=rec[:, engine.REC_PBAR].copy(),
        output=rec[:, engine.REC_OUTPUT].copy(),
        bankruptcies=rec[:, engine.REC_BANKRUPT].astype(np.int64),
        S=rec[:, engine.REC_S].copy(),
        rho=rec[:, engine.REC_RHO].copy(),
        tau=rec[:, engine.REC_TAU].copy(),
        resid=rec[:, engine.REC_RESID].copy(),
        status=status, blowup_step=blowup_step, manifest=manifest,
    )
