"""Fused simulation kernel.

One step executes, in fixed order: budget formation, demand allocation,
production adjustment under labor rationing, stochastic price and wage
updates, settlement with strict money accounting, bankruptcy resolution
with revivals, then index/observable updates and the central-bank state
transition.  The per-firm phases all read the pre-step state, so results
are independent of firm order.

The kernel is JIT-compiled with numba (set MACROLAB_DISABLE_JIT=1 to run
it as plain Python for debugging).  Draws are supplied per chunk from the
counter-based streams, never generated inside the kernel.
"""

from __future__ import annotations

import os

import numpy as np

from .params import FLOATING, MarketParams, PolicyParams
from .policy import FRAGILITY_EPS, INDEXATION_FLOOR
from .shocks import ShockSchedule, build_step_overrides
from .streams import CHUNK_STEPS, chunk_draws, init_generator

# Record layout (one row per completed step).
REC_U = 0
REC_PI = 1
REC_PBAR = 2
REC_OUTPUT = 3
REC_BANKRUPT = 4
REC_S = 5
REC_RHO = 6
REC_TAU = 7
REC_RESID = 8
N_REC = 9

# Scalar state layout.
SC_S = 0
SC_PBAR = 1
SC_WBAR = 2
SC_M0 = 3
SC_CB = 4
SC_PI_EMA = 5
SC_TAU = 6
SC_RHO = 7
SC_ZETA_PREV = 8
N_SCAL = 9

STATUS_OK = "ok"
STATUS_BLOWUP = "blowup"

PRICE_JITTER = 0.01


def _kernel(Y, p, W, E, active, scal,
            L, n_firms,
            eta_plus, eta_minus, beta, gamma_p, gamma_w,
            delta_div, phi_rev, f_b,
            pi_star, alpha_pi, alpha_e, eps_star, omega,
            tau0, alpha_I, kappa, g_p, g_w, alpha_c,
            gamma0, alpha_g, floating, renorm,
            c0_t, zeta_t, theta_t, rho_star_t, transfer_t, push_t,
            xi, rec, n_sub):
    N = n_firms
    D = np.empty(N)
    hire = np.empty(N)
    etam = np.empty(N)
    pn = np.empty(N)
    Wn = np.empty(N)
    bankrupt = np.empty(N, np.bool_)

    for c in range(n_sub):
        S = scal[SC_S]
        p_bar = scal[SC_PBAR]
        w_bar = scal[SC_WBAR]
        M0 = scal[SC_M0]
        cb = scal[SC_CB]
        pi_ema = scal[SC_PI_EMA]
        tau = scal[SC_TAU]
        rho = scal[SC_RHO]
        zeta_prev = scal[SC_ZETA_PREV]

        c0 = c0_t[c]
        zeta = zeta_t[c]
        theta = theta_t[c]
        rho_star = rho_star_t[c]
        inv_zeta = 1.0 / zeta
        inv_pbar = 1.0 / p_bar

        # Productivity change rescales output, preserving employment.
        if zeta != zeta_prev:
            r = zeta / zeta_prev
            for i in range(N):
                Y[i] *= r

        # One-off transfer: created money, booked against the ledger.
        tr = transfer_t[c]
        if tr != 0.0:
            S += tr
            cb += tr

        # Exogenous push on all posted prices.
        pp = push_t[c]
        if pp != 0.0:
            for i in range(N):
                if active[i]:
                    p[i] *= 1.0 + pp

        # (1) household budget
        pi_hat = tau * pi_star + (1.0 - tau) * pi_ema
        c_eff = c0 * (1.0 + alpha_c * (pi_hat - rho))
        if c_eff < 0.0:
            c_eff = 0.0
        elif c_eff > 1.0:
            c_eff = 1.0
        B = c_eff * S

        # (2) demand allocation: spending shares softmax-decreasing in
        # price (stabilized by the smallest exponent)
        n_act = 0
        xmin = 1.0e300
        for i in range(N):
            if active[i]:
                n_act += 1
                v = beta * p[i] * inv_pbar
                if v < xmin:
                    xmin = v
        sw = 0.0
        emp = 0.0
        for i in range(N):
            emp += Y[i]
            if active[i]:
                w_i = np.exp(xmin - beta * p[i] * inv_pbar)
                D[i] = w_i
                sw += w_i
            else:
                D[i] = 0.0
        emp *= inv_zeta

        # (3) demand per firm; hiring rationed to the unemployed pool,
        # speeds modulated by debt fragility
        pool = L - emp
        if pool < 0.0:
            pool = 0.0
        gamma_f = gamma0 * (1.0 + alpha_g * max(rho - pi_hat, 0.0))
        B_over_sw = B / sw if n_act > 0 else 0.0
        desired = 0.0
        for i in range(N):
            if active[i]:
                D[i] = B_over_sw * D[i] / p[i]
                if gamma_f > 0.0 and E[i] < 0.0:
                    frag = -E[i] / (p_bar * Y[i] + FRAGILITY_EPS)
                    ep = eta_plus * (1.0 - gamma_f * frag)
                    if ep < 0.0:
                        ep = 0.0
                    em = eta_minus * (1.0 + gamma_f * frag)
                    if em > 1.0:
                        em = 1.0
                else:
                    ep = eta_plus
                    em = eta_minus
                gap = D[i] - Y[i]
                if gap > 0.0:
                    hire[i] = ep * gap
                    desired += hire[i]
                else:
                    hire[i] = 0.0
                etam[i] = em
            else:
                hire[i] = 0.0
                etam[i] = 0.0
        desired *= inv_zeta
        scale = 1.0
        if desired > pool:
            scale = pool / desired

        idx_p = 1.0 + g_p * pi_hat
        if idx_p < INDEXATION_FLOOR:
            idx_p = INDEXATION_FLOOR
        idx_w = 1.0 + g_w * pi_hat
        if idx_w < INDEXATION_FLOOR:
            idx_w = INDEXATION_FLOOR

        # (3)-(7) fused per firm; every update signal reads the pre-step
        # state, so firms could be processed in any order
        pay_sum = 0.0
        int_sum = 0.0
        div_sum = 0.0
        spent = 0.0
        out_prod = 0.0
        ok = True
        nbk = 0
        debt_tot = 0.0
        n_rev = 0
        for i in range(N):
            if not active[i]:
                pn[i] = p[i]
                Wn[i] = W[i]
                bankrupt[i] = False
                # revival candidates: firms already dead at step entry
                if xi[c, 2, i] < phi_rev:
                    n_rev += 1
                continue
            d = D[i]
            y0 = Y[i]
            sold0 = d if d < y0 else y0
            profit = p[i] * sold0 - W[i] * y0 * inv_zeta

            gap = d - y0
            if gap > 0.0:
                y1 = y0 + scale * hire[i]
            elif gap < 0.0:
                y1 = y0 + etam[i] * gap
            else:
                y1 = y0

            # (4) price: chase the signal only from the index's wrong side
            xi_price = xi[c, 0, i]
            if d > y0 and p[i] <= p_bar:
                f = 1.0 + gamma_p * xi_price
            elif d < y0 and p[i] >= p_bar:
                f = 1.0 - gamma_p * xi_price
            else:
                f = 1.0
            pn[i] = p[i] * f * idx_p

            # (5) wage: raise when profitable and hiring, cut when losing
            # and firing
            xi_wage = xi[c, 1, i]
            if profit > 0.0 and d > y0:
                fw = 1.0 + gamma_w * xi_wage
            elif profit < 0.0 and d < y0:
                fw = 1.0 - gamma_w * xi_wage
            else:
                fw = 1.0
            Wn[i] = W[i] * fw * idx_w

            # (6) settlement at the prices/wages demand was formed under
            sold = d if d < y1 else y1
            sales = p[i] * sold
            payroll = W[i] * y1 * inv_zeta
            interest = rho * -E[i] if E[i] < 0.0 else 0.0
            e1 = E[i] + sales - payroll - interest
            dv = delta_div * e1 if e1 > 0.0 else 0.0
            e1 -= dv
            E[i] = e1
            Y[i] = y1
            pay_sum += payroll
            int_sum += interest
            div_sum += dv
            spent += sales
            out_prod += y1
            ok = ok and np.isfinite(pn[i]) and np.isfinite(Wn[i]) \
                and np.isfinite(e1) and np.isfinite(y1)

            # (7) bankruptcy: debt above a multiple of revenue capacity
            bk = False
            if e1 < 0.0:
                ceiling = theta * (pn[i] * y1)
                if -e1 > ceiling:
                    bk = True
                    nbk += 1
                    debt_tot += -e1
            bankrupt[i] = bk

        S += pay_sum + int_sum + div_sum - spent
        dep = rho * S
        S += dep
        cb += dep

        if not (ok and np.isfinite(S)):
            return c

        if nbk > 0:
            hh = f_b * debt_tot
            if hh > S:
                hh = S
            rem = debt_tot - hh
            cash_tot = 0.0
            for i in range(N):
                if active[i] and not bankrupt[i] and E[i] > 0.0:
                    cash_tot += E[i]
            firm_abs = rem if rem < cash_tot else cash_tot
            if firm_abs > 0.0:
                for i in range(N):
                    if active[i] and not bankrupt[i] and E[i] > 0.0:
                        E[i] -= E[i] / cash_tot * firm_abs
            S -= hh
            cb += rem - firm_abs
            for i in range(N):
                if bankrupt[i]:
                    E[i] = 0.0
                    Y[i] = 0.0
                    active[i] = False

        # revivals (firms dead at step entry only), capped jointly by the
        # freed labor pool
        if n_rev > 0:
            n_act2 = 0
            ytot2 = 0.0
            for i in range(N):
                if active[i]:
                    n_act2 += 1
                    ytot2 += Y[i]
            mean_y = ytot2 / n_act2 if n_act2 > 0 else L * zeta / N
            pool2 = L - ytot2 * inv_zeta
            if pool2 < 0.0:
                pool2 = 0.0
            cap = zeta * pool2 / n_rev
            size = mean_y if mean_y < cap else cap
            if size > 0.0:
                for i in range(N):
                    if (not active[i] and not bankrupt[i]
                            and xi[c, 2, i] < phi_rev):
                        active[i] = True
                        Y[i] = size
                        pn[i] = p_bar
                        Wn[i] = w_bar
                        E[i] = 0.0

        # (8) indices, observables, central-bank transition
        ytot = 0.0
        psum = 0.0
        wsum = 0.0
        for i in range(N):
            p[i] = pn[i]
            W[i] = Wn[i]
            if active[i]:
                ytot += Y[i]
                psum += pn[i] * Y[i]
                wsum += Wn[i] * Y[i]
        if ytot > 0.0:
            p_bar_new = psum / ytot
            w_bar_new = wsum / ytot
        else:
            p_bar_new = p_bar
            w_bar_new = w_bar
        if not np.isfinite(p_bar_new):
            return c

        u = 1.0 - out_prod * inv_zeta / L
        if u < 0.0:
            u = 0.0
        elif u > 1.0:
            u = 1.0
        pi = p_bar_new / p_bar - 1.0
        pi_ema = omega * pi + (1.0 - omega) * pi_ema
        tau_used = tau
        if floating:
            gap_t = abs(pi_ema - pi_star)
            if gap_t > kappa:
                tau = tau - alpha_I * (gap_t - kappa)
            else:
                tau = tau + alpha_I * (tau0 - tau)
            if tau < 0.0:
                tau = 0.0
            elif tau > 1.0:
                tau = 1.0
        rho_used = rho
        rho_next = (rho_star + alpha_pi * (pi_ema - pi_star)
                    + alpha_e * ((1.0 - u) - eps_star))
        if rho_next < 0.0:
            rho_next = 0.0

        esum = 0.0
        for i in range(N):
            esum += E[i]
        resid = (S + esum - cb - M0) / M0

        rec[c, REC_U] = u
        rec[c, REC_PI] = pi
        rec[c, REC_PBAR] = p_bar_new
        rec[c, REC_OUTPUT] = out_prod
        rec[c, REC_BANKRUPT] = nbk
        rec[c, REC_S] = S
        rec[c, REC_RHO] = rho_used
        rec[c, REC_TAU] = tau_used
        rec[c, REC_RESID] = resid

        if renorm and p_bar_new > 0.0 and np.isfinite(p_bar_new):
            inv = 1.0 / p_bar_new
            for i in range(N):
                p[i] *= inv
                W[i] *= inv
                E[i] *= inv
            S *= inv
            M0 *= inv
            cb *= inv
            w_bar_new *= inv
            p_bar_new = 1.0

        scal[SC_S] = S
        scal[SC_PBAR] = p_bar_new
        scal[SC_WBAR] = w_bar_new
        scal[SC_M0] = M0
        scal[SC_CB] = cb
        scal[SC_PI_EMA] = pi_ema
        scal[SC_TAU] = tau
        scal[SC_RHO] = rho_next
        scal[SC_ZETA_PREV] = zeta
    return -1


if os.environ.get("MACROLAB_DISABLE_JIT"):
    run_chunk = _kernel
else:
    import numba

    run_chunk = numba.njit(cache=True)(_kernel)


def initial_arrays(market: MarketParams, seed: int):
    """Initial firm arrays and scalar pack: symmetric full employment at
    break-even wages, with a small uniform price jitter."""
    n = market.n_firms
    L = market.workforce
    zeta = market.productivity
    Y = np.full(n, L * zeta / n)
    jitter = init_generator(seed).random(n)
    p = 1.0 + PRICE_JITTER * (2.0 * jitter - 1.0)
    W = np.full(n, zeta)
    E = np.zeros(n)
    active = np.ones(n, dtype=np.bool_)
    p_bar = float(np.sum(p * Y) / np.sum(Y))
    return Y, p, W, E, active, p_bar


def initial_scalars(market: MarketParams, policy: PolicyParams,
                    p_bar: float) -> np.ndarray:
    scal = np.zeros(N_SCAL)
    scal[SC_S] = market.money_supply
    scal[SC_PBAR] = p_bar
    scal[SC_WBAR] = market.productivity
    scal[SC_M0] = market.money_supply
    scal[SC_CB] = 0.0
    scal[SC_PI_EMA] = 0.0
    scal[SC_TAU] = policy.trust_base
    scal[SC_RHO] = max(0.0, policy.baseline_rate)
    scal[SC_ZETA_PREV] = market.productivity
    return scal


def run_simulation(
    market: MarketParams,
    policy: PolicyParams,
    schedule: ShockSchedule | None,
    n_steps: int,
    seed: int,
    renormalize: bool = False,
):
    """Run the fused kernel for n_steps; returns (records, status, blowup_step).

    records has one row per completed step; on numerical blow-up the run
    stops early and the offending step is not recorded.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    Y, p, W, E, active, p_bar = initial_arrays(market, seed)
    scal = initial_scalars(market, policy, p_bar)
    c0_t, zeta_t, theta_t, rho_star_t, transfer_t, push_t = \
        build_step_overrides(market, policy, schedule, n_steps)
    rec = np.empty((n_steps, N_REC))
    floating = policy.anchoring == FLOATING

    done = 0
    status = STATUS_OK
    blowup_step = None
    chunk = 0
    while done < n_steps:
        hi = min(n_steps, done + CHUNK_STEPS)
        n_sub = hi - done
        xi = chunk_draws(seed, chunk, market.n_firms)
        r = run_chunk(
            Y, p, W, E, active, scal,
            market.workforce, market.n_firms,
            market.hiring_speed, market.firing_speed,
            market.choice_intensity, market.price_step, market.wage_step,
            market.dividend_rate, market.revival_prob,
            market.household_loss_share,
            policy.inflation_target, policy.taylor_inflation,
            policy.taylor_employment, policy.employment_target,
            policy.inflation_memory, policy.trust_base, policy.trust_speed,
            policy.trust_band, policy.price_indexation,
            policy.wage_indexation, policy.consumption_rate_response,
            policy.fragility_base, policy.fragility_rate_response,
            floating, renormalize,
            c0_t[done:hi], zeta_t[done:hi], theta_t[done:hi],
            rho_star_t[done:hi], transfer_t[done:hi], push_t[done:hi],
            xi, rec[done:hi], n_sub,
        )
        if r >= 0:
            done += r
            status = STATUS_BLOWUP
            blowup_step = done
            break
        done = hi
        chunk += 1
    return rec[:done], status, blowup_step
