"""Closed-form cost model: formulas, decomposition identity, curve sweep."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensim import (ConfigurationError, CostBreakdown, DivergentCostError,
                       EtcConstants, LoadPoint, NetworkModel, ParameterError,
                       Protocol, curve_sweep, decompose_cost, default_rho_grid,
                       etc_pa_normalized, mean_inter_success,
                       tdma_loss_probability, ttc_cost, ttc_tdma_normalized)


def make_constants(n=3, mean_exit=0.45, base=0.9):
    return EtcConstants(num_agents=n, mean_exit_time=mean_exit,
                        mean_exit_se=1e-3, base_cost=base, base_cost_se=5e-3,
                        replications=1000, step=1e-3, seed=0)


class TestTdmaLoss:
    def test_fits_or_does_not(self):
        assert tdma_loss_probability(1.0, 0.5) == 0.0
        assert tdma_loss_probability(0.4, 0.5) == 1.0

    def test_boundary_period_carries_the_packet(self):
        assert tdma_loss_probability(0.5, 0.5) == 0.0

    def test_rejects_nonpositive(self):
        with pytest.raises(ParameterError):
            tdma_loss_probability(0.0, 0.5)
        with pytest.raises(ParameterError):
            tdma_loss_probability(0.5, -1.0)


class TestTtcCost:
    def test_lossless_delay_free(self):
        # pairs * period / 2
        assert ttc_cost(2, 1.0, 0.0, 0.0).total == pytest.approx(1.0)
        assert ttc_cost(3, 0.5, 0.0, 0.0).total == pytest.approx(6 * 0.25)

    def test_components(self):
        b = ttc_cost(2, 1.0, 0.5, 0.2)
        assert b.base == pytest.approx(2 * 0.5)
        assert b.loss_penalty == pytest.approx(2 * 1.0)  # p/(1-p) = 1
        assert b.delay_penalty == pytest.approx(2 * 0.2)
        assert b.total == pytest.approx(b.base + b.loss_penalty + b.delay_penalty)

    def test_certain_loss_diverges(self):
        with pytest.raises(DivergentCostError):
            ttc_cost(2, 1.0, 1.0, 0.0)


class TestTtcTdmaNormalized:
    @pytest.mark.parametrize("rho,expected", [(0.1, 6.0), (0.5, 2.0), (1.0, 1.5)])
    def test_exact_reference_points(self, rho, expected):
        assert ttc_tdma_normalized(rho) == expected

    @given(r1=st.floats(1e-3, 1.0), r2=st.floats(1e-3, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_decreasing_in_load(self, r1, r2):
        lo, hi = sorted((r1, r2))
        assert ttc_tdma_normalized(lo) >= ttc_tdma_normalized(hi)

    def test_rejects_outside_feasible_load(self):
        with pytest.raises(ParameterError):
            ttc_tdma_normalized(0.0)
        with pytest.raises(ParameterError):
            ttc_tdma_normalized(1.2)


class TestEtcPaNormalized:
    def test_matches_formula(self):
        c = make_constants()
        rho, p = 0.25, 0.05
        pairs = 3 * 2
        expected = c.base_cost / (pairs * c.mean_exit_time) / rho \
            + (p / (1 - p)) / rho + 1.0
        assert etc_pa_normalized(rho, c, p) == pytest.approx(expected, rel=1e-12)

    def test_lossless_light_load_limit(self):
        # with p = 0 the curve is base_ratio/rho + 1
        c = make_constants(n=2, mean_exit=0.59, base=0.31)
        value = etc_pa_normalized(0.01, c, 0.0)
        assert value == pytest.approx(0.31 / (2 * 0.59) / 0.01 + 1.0, rel=1e-12)

    def test_needs_two_agents(self):
        single = EtcConstants(num_agents=1, mean_exit_time=1.0, mean_exit_se=0.0,
                              base_cost=0.0, base_cost_se=0.0, replications=10,
                              step=1e-3, seed=0)
        with pytest.raises(ParameterError):
            etc_pa_normalized(0.5, single, 0.0)

    def test_certain_loss_diverges(self):
        with pytest.raises(DivergentCostError):
            etc_pa_normalized(0.5, make_constants(), 1.0)


class TestMeanInterSuccess:
    def test_lossless_is_identity(self):
        assert mean_inter_success(0.45, 0.0) == 0.45

    def test_rescales_by_survival(self):
        assert mean_inter_success(0.45, 0.5) == pytest.approx(0.9)

    def test_certain_loss_diverges(self):
        with pytest.raises(DivergentCostError):
            mean_inter_success(0.45, 1.0)


class TestDecomposeCost:
    def test_sums_components(self):
        b = decompose_cost(0.9, 3, 0.2, 0.45, 0.1)
        pairs = 6
        assert b.base == 0.9
        assert b.loss_penalty == pytest.approx(pairs * 0.2 / 0.8 * 0.45)
        assert b.delay_penalty == pytest.approx(pairs * 0.1)
        assert b.total == b.base + b.loss_penalty + b.delay_penalty

    @given(base=st.floats(0.0, 10.0), p=st.floats(0.0, 0.99),
           e=st.floats(0.01, 2.0), d=st.floats(0.0, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_total_never_below_base(self, base, p, e, d):
        assert decompose_cost(base, 4, p, e, d).total >= base


class TestCostBreakdown:
    def test_assemble_is_consistent(self):
        b = CostBreakdown.assemble(1.0, 2.0, 3.0)
        assert b.total == 6.0

    def test_rejects_inconsistent_total(self):
        with pytest.raises(ParameterError):
            CostBreakdown(1.0, 2.0, 3.0, 7.0)

    def test_rejects_negative_components(self):
        with pytest.raises(ParameterError):
            CostBreakdown.assemble(-1.0, 0.0, 0.0)


class TestDomainTypes:
    def test_network_model_validation(self):
        NetworkModel(0.1, Protocol.TDMA)
        with pytest.raises(ParameterError):
            NetworkModel(0.0, Protocol.TDMA)
        with pytest.raises(ParameterError):
            NetworkModel(0.1, "tdma")

    def test_constants_single_agent_base_must_vanish(self):
        with pytest.raises(ParameterError):
            EtcConstants(num_agents=1, mean_exit_time=1.0, mean_exit_se=0.0,
                         base_cost=0.5, base_cost_se=0.0, replications=10,
                         step=1e-3, seed=0)

    def test_constants_reject_nonsense(self):
        with pytest.raises(ParameterError):
            make_constants(mean_exit=-1.0)
        with pytest.raises(ParameterError):
            make_constants(base=-0.1)


class TestCurveSweep:
    def test_grid_default_is_geometric(self):
        grid = default_rho_grid(0.01, 1.0, 40)
        assert grid.size == 40
        assert grid[0] == pytest.approx(0.01)
        assert grid[-1] == pytest.approx(1.0)
        ratios = grid[1:] / grid[:-1]
        assert np.allclose(ratios, ratios[0])

    def test_point_contents(self):
        c = make_constants()
        points = curve_sweep([3], [0.1, 1.0], {3: c})
        assert [p.rho for p in points] == [0.1, 1.0]
        assert points[0].cost_tt_tdma == 6.0
        assert points[0].cost_et_pa == pytest.approx(
            etc_pa_normalized(0.1, c, points[0].loss_prob_pa))

    def test_tdma_column_empty_beyond_unit_load(self):
        c = make_constants()
        points = curve_sweep([3], [0.5, 1.0, 2.0], {3: c})
        assert points[1].cost_tt_tdma == 1.5
        assert points[2].cost_tt_tdma is None
        assert points[2].cost_et_pa > 0.0  # ALOHA keeps operating

    def test_missing_constants_named(self):
        with pytest.raises(ConfigurationError, match="6"):
            curve_sweep([2, 6], [0.5], {2: make_constants(n=2)})

    def test_mismatched_entry_rejected(self):
        with pytest.raises(ConfigurationError):
            curve_sweep([2], [0.5], {2: make_constants(n=3)})

    def test_rejects_bad_grid(self):
        c = {3: make_constants()}
        with pytest.raises(ParameterError):
            curve_sweep([3], [0.5, 0.4], c)
        with pytest.raises(ParameterError):
            curve_sweep([3], [-0.1, 0.5], c)
        with pytest.raises(ParameterError):
            curve_sweep([3], [], c)
