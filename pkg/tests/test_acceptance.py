"""End-to-end acceptance checks for the whole toolbox.

Each test covers one numbered acceptance item and prints exactly one
PASS/FAIL line with the measured numbers (visible with ``pytest -s``, and in
the captured output on failure).  Tolerances are 3 standard errors wherever
a Monte Carlo estimate is involved, exact elsewhere.
"""

import dataclasses
import math

import numpy as np
from scipy.optimize import brentq

from consensim import (IntervalExitQuery, NetworkModel, PathConfig, Protocol,
                       Scheme, aloha_loss_probability, decompose_cost,
                       default_rho_grid, estimate_constants, etc_pa_normalized,
                       expected_min_exit, ratio_batch_means, simulate_networked,
                       survival_single, ttc_tdma_normalized)
from consensim.cli import main
from consensim.stats import batch_mean_se
from consensim.validate import _check_single_agent_loss

from conftest import SESSION_SEED

NUM_EVENTS = 10000


def report(tag, ok, detail):
    line = f"[{tag}] {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    assert ok, line


def test_01_tdma_closed_form():
    values = {rho: ttc_tdma_normalized(rho) for rho in (0.1, 0.5, 1.0)}
    ok = values == {0.1: 6.0, 0.5: 2.0, 1.0: 1.5}
    report("01 tdma-closed-form", ok, f"values={values}")


def test_02_martingale_identity():
    cfg = PathConfig(step=1e-3, bridge_correction=True, seed=SESSION_SEED)
    c = estimate_constants(1, 20000, cfg)
    ok = (abs(c.mean_exit_time - 1.0) <= 3.0 * c.mean_exit_se
          and c.base_cost == 0.0)
    report("02 martingale-identity", ok,
           f"mean_exit={c.mean_exit_time:.5f} se={c.mean_exit_se:.5f} "
           f"base={c.base_cost}")


def test_03_series_vs_oracle(survival_oracle):
    worst = 0.0
    for entry in survival_oracle["entries"]:
        res = survival_single(IntervalExitQuery(1.0, 2.0, entry["time"]))
        worst = max(worst, abs(res.probability - entry["survival"]) / entry["se"])
    ok = worst <= 3.0
    report("03 series-vs-oracle", ok,
           f"worst deviation {worst:.2f} oracle SEs over "
           f"{len(survival_oracle['entries'])} times")


def test_04_quadrature_vs_oracle(exit_oracle):
    worst = 0.0
    values = {}
    for entry in exit_oracle["entries"]:
        n = entry["group_size"]
        values[n] = expected_min_exit(n, tolerance=1e-9)
        worst = max(worst, abs(values[n] - entry["mean_exit"]) / entry["se"])
    decreasing = all(values[a] > values[b]
                     for a, b in zip(sorted(values), sorted(values)[1:]))
    ok = worst <= 3.0 and decreasing
    report("04 quadrature-vs-oracle", ok,
           f"worst deviation {worst:.2f} oracle SEs, "
           f"decreasing={decreasing}, means={ {n: round(v, 5) for n, v in values.items()} }")


def test_05_delay_separation():
    n, rho = 3, 0.2
    tau = rho * expected_min_exit(n, tolerance=1e-10)
    net = NetworkModel(tau, Protocol.PURE_ALOHA)
    pc = PathConfig(step=1e-3, seed=SESSION_SEED)
    delayed = simulate_networked(Scheme.EVENT_TRIGGERED, net, n, 1.0,
                                 NUM_EVENTS, pc)
    instant = simulate_networked(Scheme.EVENT_TRIGGERED, net, n, 1.0,
                                 NUM_EVENTS, pc, zero_delay=True)
    assert np.array_equal(delayed.cycle_lengths, instant.cycle_lengths)
    diff = ratio_batch_means(delayed.cycle_integrals - instant.cycle_integrals,
                             delayed.cycle_lengths)
    applied_tau = next(e.delay for e in delayed.log.events if e.arrived)
    analytic = n * (n - 1) * applied_tau
    ok = abs(diff.ratio - analytic) <= 3.0 * diff.ratio_se
    report("05 delay-separation", ok,
           f"measured={diff.ratio:.5f} analytic={analytic:.5f} "
           f"3se={3 * diff.ratio_se:.5f}")


def test_06_loss_and_decomposition(full_constants):
    n, rho = 3, 0.25
    entry = full_constants[n]
    mean_exit = expected_min_exit(n, tolerance=1e-10)
    tau = rho * mean_exit
    out = simulate_networked(Scheme.EVENT_TRIGGERED,
                             NetworkModel(tau, Protocol.PURE_ALOHA), n, 1.0,
                             NUM_EVENTS, PathConfig(step=1e-3, seed=SESSION_SEED))

    losses = np.array([0.0 if e.arrived else 1.0 for e in out.log.events])
    p_hat, p_se = batch_mean_se(losses)
    p_analytic = aloha_loss_probability(rho, n, mean_exit)
    loss_ok = abs(p_hat - p_analytic) <= 3.0 * p_se

    gaps = np.diff([e.time for e in out.log.events])
    e_hat, e_se = batch_mean_se(gaps)
    applied_tau = next(e.delay for e in out.log.events if e.arrived)
    predicted = decompose_cost(entry.base_cost, n, p_hat, e_hat, applied_tau)
    pairs = n * (n - 1)
    combined = math.sqrt(out.cost_se ** 2 + entry.base_cost_se ** 2
                         + (pairs * e_hat / (1 - p_hat) ** 2 * p_se) ** 2
                         + (pairs * p_hat / (1 - p_hat) * e_se) ** 2)
    cost_ok = abs(out.empirical_cost - predicted.total) <= 3.0 * combined

    s_hat, s_se = batch_mean_se(out.cycle_lengths)
    s_pred = e_hat / (1.0 - p_hat)
    s_comb = math.sqrt(s_se ** 2 + (e_se / (1 - p_hat)) ** 2
                       + (e_hat * p_se / (1 - p_hat) ** 2) ** 2)
    succ_ok = abs(s_hat - s_pred) <= 3.0 * s_comb

    ok = loss_ok and cost_ok and succ_ok
    report("06 loss-and-decomposition", ok,
           f"loss {p_hat:.4f} vs {p_analytic:.4f} (3se={3 * p_se:.4f}); "
           f"cost {out.empirical_cost:.4f} vs {predicted.total:.4f} "
           f"(3se={3 * combined:.4f}); "
           f"inter-success {s_hat:.4f} vs {s_pred:.4f} (3se={3 * s_comb:.4f})")


def test_07_ttc_end_to_end():
    n, period, tau = 2, 0.5, 0.05  # rho = 0.1
    out = simulate_networked(Scheme.TIME_TRIGGERED,
                             NetworkModel(tau, Protocol.TDMA), n, period,
                             NUM_EVENTS, PathConfig(step=1e-3, seed=SESSION_SEED))
    pairs_tau = n * (n - 1) * tau
    measured = out.empirical_cost / pairs_tau
    se = out.cost_se / pairs_tau
    ok = abs(measured - 6.0) <= 3.0 * se
    report("07 ttc-end-to-end", ok,
           f"normalized={measured:.4f} vs 6.0 (3se={3 * se:.4f})")


def _et_curve_se(rho, constants):
    """Propagate the constants' uncertainty to the normalized curve value."""
    pairs = constants.num_agents * (constants.num_agents - 1)
    d_base = constants.base_cost_se / (pairs * constants.mean_exit_time) / rho
    bumped = dataclasses.replace(
        constants, mean_exit_time=constants.mean_exit_time + constants.mean_exit_se)
    p0 = aloha_loss_probability(rho, constants.num_agents, constants.mean_exit_time)
    p1 = aloha_loss_probability(rho, bumped.num_agents, bumped.mean_exit_time)
    d_exit = etc_pa_normalized(rho, bumped, p1) - etc_pa_normalized(rho, constants, p0)
    return math.hypot(d_base, d_exit)


def _break_even(constants):
    """Load where the event-triggered curve crosses the scheduled one."""
    def gap(rho):
        p = aloha_loss_probability(rho, constants.num_agents,
                                   constants.mean_exit_time)
        return etc_pa_normalized(rho, constants, p) - ttc_tdma_normalized(rho)
    return brentq(gap, 1e-3, 1.0, xtol=1e-10)


def _break_even_with_se(constants):
    r0 = _break_even(constants)
    bumped_base = dataclasses.replace(
        constants, base_cost=constants.base_cost + constants.base_cost_se)
    bumped_exit = dataclasses.replace(
        constants, mean_exit_time=constants.mean_exit_time + constants.mean_exit_se)
    se = math.hypot(_break_even(bumped_base) - r0, _break_even(bumped_exit) - r0)
    return r0, se


def test_08_cost_curves_qualitative(full_constants):
    """Qualitative shape of the cost-versus-load comparison.

    Sub-check (b) asserts that the break-even load is nonincreasing in the
    ensemble size, i.e. that the region where the event-triggered scheme
    beats the schedule shrinks monotonically.  The toolbox reproduces every
    other documented feature, but this ordering comes out reversed: at equal
    load the collision window is proportional to the ensemble's mean
    inter-event time, which shrinks with size, so collisions are *rarer* for
    larger ensembles and small ensembles lose their advantage at *lower*
    loads (measured break-even loads ~0.344 < 0.369 < 0.398 < 0.406 for
    sizes 2, 3, 6, 12, each resolved to ~0.001).  The magnitude of the
    advantage does shrink with size at low loads, and it vanishes entirely
    for 72 agents, but the break-even ordering is a property the modelled
    dynamics provably do not have.  The assertion is kept as stated rather
    than adjusted to match the measured behaviour, so this test fails; the
    accompanying simulations (matched runs on both sides of load 0.37 place
    the 2-agent ensemble above the schedule's curve and the 3-agent ensemble
    on it) confirm the reversal end to end.
    """
    grid = default_rho_grid(0.01, 1.0, 40)
    tt = np.array([ttc_tdma_normalized(r) for r in grid])
    et = {}
    se = {}
    loss = {}
    for n, c in full_constants.items():
        loss[n] = np.array([aloha_loss_probability(r, n, c.mean_exit_time)
                            for r in grid])
        et[n] = np.array([etc_pa_normalized(r, c, p)
                          for r, p in zip(grid, loss[n])])
        se[n] = np.array([_et_curve_se(r, c) for r in grid])

    # (a) the two-agent ensemble beats the schedule somewhere and the curves
    # cross back before full load
    adv2 = bool(np.any(et[2] < tt))
    rstar = {n: _break_even_with_se(full_constants[n]) for n in (2, 3, 6, 12)}
    a_ok = adv2 and rstar[2][0] <= 1.0

    # (b) the advantage region shrinks with ensemble size: each break-even
    # load at most the previous one, up to 3 combined standard errors
    b_ok = all(rstar[m][0] - rstar[n][0] <= 3.0 * math.hypot(rstar[n][1],
                                                             rstar[m][1])
               for n, m in zip((2, 3, 6), (3, 6, 12)))

    # (c) 72 agents: the schedule wins at every load (3-sigma slack)
    c_ok = bool(np.all(et[72] + 3.0 * se[72] >= tt))

    # (d) full load: event-triggered cost above the schedule's 1.5, and the
    # computed collision probability clears 1/3 for every ensemble
    d_ok = all(et[n][-1] > 1.5 and loss[n][-1] > 1.0 / 3.0
               for n in full_constants)

    ok = a_ok and b_ok and c_ok and d_ok
    report("08 cost-curves-qualitative", ok,
           f"(a)={a_ok} (b)={b_ok} (c)={c_ok} (d)={d_ok}; "
           f"break-even={ {n: f'{v[0]:.4f}+-{v[1]:.4f}' for n, v in rstar.items()} } "
           f"n72-min-margin={float(np.min(et[72] + 3 * se[72] - tt)):.4f} "
           f"full-load-loss-min={min(loss[n][-1] for n in full_constants):.4f}")


def test_08_companion_break_even_reversal_pinned(full_constants):
    """Pin the measured break-even ordering that sub-check 8(b) contradicts.

    Two matched end-to-end runs straddle the analytic break-even loads
    (0.3445 for two agents, 0.3694 for three): at load 0.37 the two-agent
    ensemble must already sit significantly above the schedule's curve while
    the three-agent ensemble must not.  If the modelled dynamics ever change
    so that the ordering in test_08 becomes attainable, this pin fails first
    and forces a conscious review of both.
    """
    rho = 0.37
    tt = ttc_tdma_normalized(rho)
    sides = {}
    for n in (2, 3):
        mean_exit = expected_min_exit(n, tolerance=1e-10)
        tau = rho * mean_exit
        out = simulate_networked(Scheme.EVENT_TRIGGERED,
                                 NetworkModel(tau, Protocol.PURE_ALOHA), n, 1.0,
                                 NUM_EVENTS, PathConfig(step=1e-3, seed=SESSION_SEED))
        norm = out.empirical_cost / (n * (n - 1) * tau)
        sides[n] = (norm, out.cost_se / (n * (n - 1) * tau))
    two_above = sides[2][0] - 3.0 * sides[2][1] > tt
    three_not_above = sides[3][0] - 3.0 * sides[3][1] < tt
    ok = two_above and three_not_above
    report("08-companion break-even-reversal", ok,
           f"curve={tt:.4f}; n=2 {sides[2][0]:.4f}+-{sides[2][1]:.4f} above={two_above}; "
           f"n=3 {sides[3][0]:.4f}+-{sides[3][1]:.4f} not-above={three_not_above}")


def test_09_byte_identical_artifacts(tmp_path, capsys):
    c1, c2 = str(tmp_path / "c1.json"), str(tmp_path / "c2.json")
    base = ["constants", "--n", "1,2", "--replications", "300", "--seed", "77"]
    assert main(base + ["--constants", c1]) == 0
    assert main(base + ["--constants", c2]) == 0
    constants_identical = open(c1, "rb").read() == open(c2, "rb").read()

    o1, o2 = str(tmp_path / "o1.csv"), str(tmp_path / "o2.csv")
    curves = ["curves", "--n", "2", "--rho-count", "12", "--constants", c1]
    assert main(curves + ["--out", o1]) == 0
    assert main(curves + ["--out", o2]) == 0
    curves_identical = open(o1, "rb").read() == open(o2, "rb").read()

    capsys.readouterr()  # swallow the two constants tables
    ok = constants_identical and curves_identical
    report("09 byte-identical-artifacts", ok,
           f"constants={constants_identical} curves={curves_identical}")


def test_10_single_agent_loss_documented(survival_oracle):
    computed = aloha_loss_probability(1.0, 1, 1.0)
    oracle = next(e for e in survival_oracle["entries"] if e["time"] == 1.0)
    mc_p = 1.0 - oracle["survival"] ** 2
    mc_se = 2.0 * oracle["survival"] * oracle["se"]
    agrees_with_oracle = abs(computed - mc_p) <= 3.0 * mc_se
    clears_third = computed > 1.0 / 3.0
    differs_from_quoted = abs(computed - 0.75) > 0.05

    check = _check_single_agent_loss()[0]
    note = check.get("note", "")
    documented = check["passed"] and "3/4" in note and "1/3" in note

    ok = agrees_with_oracle and clears_third and differs_from_quoted and documented
    report("10 single-agent-loss-documented", ok,
           f"computed={computed:.4f} oracle={mc_p:.4f} (3se={3 * mc_se:.4f}) "
           f"quoted=0.75 documented={documented}")
