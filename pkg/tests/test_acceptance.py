"""Acceptance criteria, one test per criterion.

Each test gathers named sub-checks, records a single PASS/FAIL line (shown
in the terminal summary under "acceptance criteria") and then asserts that
every sub-check held.  Tolerances are the ones fixed by the criteria.
"""

import dataclasses
import itertools
import time

import numpy as np
import pytest

import conftest
from dramarket import bayesian_types as bt
from dramarket import wh_scheduler as wh
from dramarket.casestudy import BUNDLED_TANK, bundled_profiles
from dramarket.cost_model import AggregatorCostModel, BidCurve, make_bid
from dramarket.errors import InfeasibleScheduleError
from dramarket.game_engine import (
    MarketKind,
    Variant,
    bayesian_nash,
    column_index,
    demand_arithmetic,
    expected_payoffs,
    find_dominant_row,
    play_game,
)
from dramarket.market_clearing import RegulatoryCaps, apply_caps, clear_two_sellers, seller_payoff
from oracles import brute_force_schedule, equilibria_by_deviation, grid_clearing, is_equilibrium

PSI_A = bt.TypePrior(((0.16, 0.84), (0.11, 0.89), (0.75, 0.25), (0.69, 0.31)))
PSI_B = bt.TypePrior(((0.21, 0.79), (0.18, 0.82), (0.67, 0.33), (0.60, 0.40)))


def record(number, title, checks):
    """Store the criterion line and fail with the list of broken sub-checks."""
    failed = [name for name, ok, _ in checks if not ok]
    details = "; ".join(f"{name}: {detail}" + ("" if ok else " [FAIL]") for name, ok, detail in checks)
    status = "PASS" if not failed else "FAIL"
    conftest.ACCEPTANCE_LINES[number] = f"criterion {number} {status}  {title}  ({details})"
    print(conftest.ACCEPTANCE_LINES[number])
    assert not failed, f"criterion {number} failed sub-checks: {failed}"


def close(value, target, tol):
    return abs(value - target) <= tol


def unscheduled_probabilities():
    prices, draws = bundled_profiles()
    p_exp = bt.price_expensive_prob(prices, 0.5)
    stats = wh.on_off_stats(wh.schedule_welfare(BUNDLED_TANK, draws), prices, 0.5)
    return p_exp, stats, bt.scenario_probs_independent(p_exp, stats)


def test_criterion_1_probability_reproduction():
    start = time.perf_counter()
    p_exp, stats, sp = unscheduled_probabilities()
    elapsed = time.perf_counter() - start
    target = (0.5755, 0.1328, 0.2370, 0.0547)
    checks = [
        ("P(exp)", close(p_exp, 0.7083, 1e-4), f"{p_exp:.6f} vs 0.7083 +-1e-4"),
        ("P(WH on)", stats.p_on == 0.1875, f"{stats.p_on} vs 0.1875 exact"),
        (
            "P(sigma)",
            all(close(a, b, 1e-4) for a, b in zip(sp.p, target)),
            f"{tuple(round(x, 6) for x in sp.p)} vs {target} +-1e-4",
        ),
        ("runtime", elapsed < 1.0, f"{elapsed:.3f} s < 1 s"),
    ]
    record(1, "probability reproduction", checks)


def test_criterion_2_joint_and_conditional_distributions():
    _, _, sp = unscheduled_probabilities()
    pi = bt.joint_type_distribution(sp, bt.CASE_STUDY_FLAGS, PSI_A, PSI_B)
    eta = bt.conditional_type_distributions(pi)
    target_pi = (0.0193, 0.0727, 0.1015, 0.3819)
    got_pi = tuple(float(x) for x in pi.pi.ravel())
    checks = [
        (
            "pi",
            all(close(a, b, 5e-4) for a, b in zip(got_pi, target_pi)),
            f"{tuple(round(x, 5) for x in got_pi)} vs {target_pi} +-5e-4",
        ),
        (
            "eta_A",
            np.allclose(eta.eta_A, [[0.21, 0.79], [0.21, 0.79]], rtol=0, atol=0.01),
            f"{np.round(eta.eta_A, 4).tolist()} +-0.01",
        ),
        (
            "eta_B",
            np.allclose(eta.eta_B, [[0.16, 0.84], [0.16, 0.84]], rtol=0, atol=0.01),
            f"{np.round(eta.eta_B, 4).tolist()} +-0.01",
        ),
    ]
    record(2, "joint and conditional type distributions", checks)


def test_criterion_3_bid_slopes():
    published = {
        "s_A1": ((4.0, 25.0), (0.00064, 0.00080, 0.00096)),
        "s_A2": ((4.3, 23.5), (0.00078, 0.00097, 0.00117)),
        "s_B1": ((4.2, 24.0), (0.00073, 0.00091, 0.00109)),
        "s_B2": ((4.5, 23.5), (0.00081, 0.00102, 0.00122)),
    }
    checks = []
    for name, ((a, B), slopes) in published.items():
        model = AggregatorCostModel.from_mean(a, B)
        got = [make_bid(model, 0.0, 1.0, eps).slope_m for eps in (1.6, 2.0, 2.4)]
        # independent closed form: eps * a * (1/4)**2 / B**2
        oracle = [eps * a / (16 * B * B) for eps in (1.6, 2.0, 2.4)]
        ok = all(close(g, s, 1e-5) for g, s in zip(got, slopes)) and np.allclose(got, oracle, rtol=1e-12)
        checks.append((name, ok, "[" + ", ".join(f"{g:.6f}" for g in got) + "] +-1e-5"))
    record(3, "bid slopes", checks)


def test_criterion_4_dr_scheduling():
    prices, draws = bundled_profiles()
    welfare = wh.schedule_welfare(BUNDLED_TANK, draws)
    sched = wh.schedule_price_sensitive(BUNDLED_TANK, draws, prices)
    exp = prices.expensive_mask(0.5)
    on = np.asarray(sched.on)
    split = (int(on[exp].sum()), int(on[~exp].sum()))
    ratio = wh.curtailment_ratio(welfare, sched)
    stats = wh.on_off_stats(sched, prices, 0.5)
    sp = bt.scenario_probs_conditional(bt.price_expensive_prob(prices, 0.5), stats)
    target = (0.6041, 0.1042, 0.2292, 0.0625)
    demands = (
        demand_arithmetic(200, 4.5, 0.6, 660.0),
        demand_arithmetic(240, 4.5, 0.6, 594.0),
        demand_arithmetic(260, 4.5, 0.6, 528.0),
        demand_arithmetic(200, 4.5, 0.6, 660.0, 0.112),
    )
    checks = [
        ("on-slots", sched.on_count == 16, f"{sched.on_count} vs 16"),
        ("expensive/cheap", split == (10, 6), f"{split[0]}/{split[1]} vs 10/6"),
        ("curtailment", close(ratio, 2 / 18, 1e-9), f"{ratio:.9f} vs 2/18 +-1e-9"),
        (
            "P(sigma | DR)",
            all(close(a, b, 1e-4) for a, b in zip(sp.p, target)),
            f"{tuple(round(x, 6) for x in sp.p)} vs {target} +-1e-4",
        ),
        ("demands", demands == (2160.0, 2394.0, 2478.0, 1992.0), f"{demands} exact"),
    ]
    record(4, "DR scheduling", checks)


def test_criterion_5_equilibrium_from_published_matrices(published_ep):
    start = time.perf_counter()
    checks = []
    for variant, (ep_A, ep_B) in published_ep.items():
        res = bayesian_nash(ep_A, ep_B)
        dominant_A = tuple(find_dominant_row(ep_A[m]).dominant for m in range(2))
        ok = res.found and res.strategy_A == (2, 2) and res.strategy_B == (2, 0)
        if res.found:
            col_A = column_index(res.strategy_B, 3) + 1
            col_B = column_index(res.strategy_A, 3) + 1
            got = f"A{tuple(i + 1 for i in res.strategy_A)} B{tuple(j + 1 for j in res.strategy_B)} cols {col_A}/{col_B}"
        else:
            got = "no pure equilibrium"
        checks.append((variant, ok, f"{got}, A dominant rows {dominant_A}; want A(3,3) B(3,1) cols 7/9"))
    elapsed = time.perf_counter() - start
    checks.append(("runtime", elapsed < 1.0, f"{elapsed:.3f} s < 1 s"))
    record(5, "equilibrium from published matrices", checks)


# --- criterion 6 ----------------------------------------------------------------


def _random_games(n_games, seed):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_games):
        M, N = (int(x) for x in rng.integers(1, 4, 2))
        S = int(rng.integers(2, 4))
        h_A = rng.normal(size=(M, N, S, S)).round(3)
        h_B = rng.normal(size=(M, N, S, S)).round(3)
        eta = bt.conditional_type_distributions(bt.JointTypeDistribution(rng.uniform(0.05, 1.0, (M, N))))
        res = bayesian_nash(*expected_payoffs(h_A, h_B, eta))
        oracle = equilibria_by_deviation(h_A, h_B, eta.eta_A, eta.eta_B)
        ok = sorted(res.equilibria) == sorted(oracle)
        ok &= all(is_equilibrium(h_A, h_B, eta.eta_A, eta.eta_B, a, b) for a, b in res.equilibria)
        bad += not ok
    return bad


def _dp_instances(n_instances, seed):
    rng = np.random.default_rng(seed)
    bad = feasible = 0
    for _ in range(n_instances):
        n = int(rng.integers(1, 13))
        # every temperature on a 0.5 degF grid inside [110, 119.5]: 20 states
        tank = wh.TankModel(
            temp_min=110.0,
            temp_max=119.5,
            heat_rate=0.5 * int(rng.integers(1, 9)),
            loss_rate=0.5 * int(rng.integers(0, 4)),
            draw_drop=0.5 * int(rng.integers(0, 11)),
            initial_temp=110.0 + 0.5 * int(rng.integers(0, 20)),
        )
        draws = tuple(float(x) for x in rng.integers(0, 2, n))
        prices = tuple(0.25 * float(x) for x in rng.integers(1, 5, n))
        mid = tank.setpoint
        for objective, cost_fn in (
            ("welfare", lambda temps, on: float(np.abs(temps - mid).sum())),
            ("price", lambda temps, on: float(np.dot(prices, on))),
        ):
            oracle = brute_force_schedule(tank, draws, cost_fn)
            profile = wh.WaterDrawProfile(draws, length=None)
            try:
                if objective == "welfare":
                    sched = wh.schedule_welfare(tank, profile)
                else:
                    sched = wh.schedule_price_sensitive(tank, profile, wh.PriceProfile(prices, length=None))
            except InfeasibleScheduleError:
                bad += oracle is not None
                continue
            feasible += 1
            bad += oracle is None or tuple(int(x) for x in sched.on) != oracle[2]
    return bad, feasible


def _bid(lam, m):
    return BidCurve(lambda0=lam, slope_m=m, p0=0.0, p_max=1e6)


def _clearing_checks(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    interior = 0
    while interior < 1000:
        lam = rng.uniform(0.01, 0.5, 2)
        m = rng.uniform(1e-5, 1e-2, 2)
        demand = rng.uniform(1.0, 500.0)
        a, b = _bid(lam[0], m[0]), _bid(lam[1], m[1])
        out = clear_two_sellers(a, b, demand)
        if not 0 < out.p_A < demand:
            continue
        interior += 1
        worst = max(worst, abs(out.p_A + out.p_B - demand), abs(a.price(out.p_A) - b.price(out.p_B)))
    grid_err = 0.0
    corners = 0
    for _ in range(300):
        lam = rng.uniform(0.01, 0.5, 2)
        m = rng.uniform(1e-3, 5e-2, 2)
        demand = rng.uniform(0.5, 20.0)
        out = clear_two_sellers(_bid(lam[0], m[0]), _bid(lam[1], m[1]), demand)
        q_a, _ = grid_clearing(lam[0], m[0], lam[1], m[1], demand, step=1e-3)
        grid_err = max(grid_err, abs(out.p_A - q_a))
        corners += out.p_A in (0.0, demand)
    return worst, grid_err, corners


def _cap_checks(seed):
    rng = np.random.default_rng(seed)
    violations = binding = 0
    for _ in range(500):
        lam = rng.uniform(0.01, 0.5, 2)
        m = rng.uniform(1e-4, 1e-2, 2)
        out = clear_two_sellers(_bid(lam[0], m[0]), _bid(lam[1], m[1]), rng.uniform(1.0, 200.0))
        # cap strictly below the cleared price, so it binds
        capped = apply_caps(out, RegulatoryCaps(phi_max=out.phi_T * rng.uniform(0.3, 0.999)))
        binding += capped.price_capped
        for q, qc in ((out.p_A, capped.p_A), (out.p_B, capped.p_B)):
            cost = AggregatorCostModel(v=rng.uniform(0.01, 0.2), u=rng.uniform(1e-5, 1e-3), a_g=1.0, B=1.0)
            p_g = rng.uniform(0.0, 100.0)
            violations += seller_payoff(cost, p_g, qc, capped.phi_T) > seller_payoff(cost, p_g, q, out.phi_T) + 1e-12
    return violations, binding


def test_criterion_6_forward_simulation_properties(casestudy_config):
    bad_games = _random_games(200, seed=606)
    bad_dp, feasible = _dp_instances(300, seed=612)
    residual, grid_err, corners = _clearing_checks(seed=618)
    cap_violations, binding = _cap_checks(seed=624)

    prices, draws = bundled_profiles()
    ex = {}
    for market, dr in itertools.product(MarketKind, (False, True)):
        cfg = dataclasses.replace(casestudy_config, variant=Variant(market, dr))
        ex[market, dr] = play_game(cfg, (prices, draws)).ex_ante_A
    nc, st = MarketKind.NON_COOPERATIVE, MarketKind.STACKELBERG
    dr_gain = ex[nc, True] > ex[nc, False] and ex[st, True] > ex[st, False]
    cap_loss = ex[st, False] < ex[nc, False] and ex[st, True] < ex[nc, True]

    checks = [
        ("(a) equilibrium verification", bad_games == 0, f"{bad_games} of 200 games disagree with the deviation oracle"),
        ("(b) DP vs enumeration", bad_dp == 0 and feasible > 100, f"{bad_dp} mismatches, {feasible} feasible schedules"),
        ("(c) interior residual", residual < 1e-9, f"max {residual:.2e} < 1e-9 over 1000"),
        ("(c) grid oracle", grid_err <= 1e-2 and corners > 0, f"max split error {grid_err:.2e} <= 1e-2, {corners} corners"),
        ("(d) price caps", cap_violations == 0 and binding == 500, f"{cap_violations} increases in 500 binding instances"),
        (
            "(e) DR and cap ordering",
            dr_gain and cap_loss,
            "A ex-ante: "
            + ", ".join(f"{m.value}{'+dr' if d else ''}={v:.3f}" for (m, d), v in ex.items()),
        ),
    ]
    record(6, "forward-simulation properties", checks)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
