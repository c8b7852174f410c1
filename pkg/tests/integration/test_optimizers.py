"""Integration tests for the EIA and OIA alternating optimizers."""
import numpy as np
import pytest

from src.metrics.feasibility import check_feasibility
from src.metrics.rates import evaluate_solution
from src.metrics.types import PhaseConfig, Scheme
from src.optimization.eia import TRACE_COLUMNS, build_and_solve_p5, init_state, run_eia
from src.optimization.oia import build_and_solve_p17, init_state_oia, run_oia
from src.optimization.settings import OptimizerSettings
from src.scenario.channels import assemble_composites, draw_scenario
from src.scenario.config import SystemConfig

RUNNERS = {Scheme.EIA: run_eia, Scheme.OIA: run_oia}


@pytest.fixture
def config():
    return SystemConfig.desk_scale()


@pytest.fixture
def channels(config):
    _, channels = draw_scenario(config, seed=3)
    return channels


@pytest.fixture
def quick_settings():
    """Short loops keep desk-scale runs fast."""
    return OptimizerSettings(
        max_outer_iterations=5, max_inner_iterations=4, randomization_candidates=20
    )


@pytest.mark.parametrize("scheme", [Scheme.EIA, Scheme.OIA])
class TestAlternatingOptimization:
    """Test the outer loops of both schemes."""

    def test_rho_never_decreases(self, scheme, channels, config, quick_settings):
        """Test the Dinkelbach sequence."""
        state = RUNNERS[scheme](channels, config, settings=quick_settings, seed=0)
        rho = state.trace["rho"].to_numpy()

        assert len(rho) == state.iteration
        for previous, current in zip(rho[:-1], rho[1:]):
            assert current >= previous - 1e-6 * max(1.0, abs(previous))

    def test_final_iterate_is_feasible(self, scheme, channels, config, quick_settings):
        """Test the constraints of the original problem at the output."""
        state = RUNNERS[scheme](channels, config, settings=quick_settings, seed=0)
        report = check_feasibility(
            scheme, state.candidate(), assemble_composites(channels), config, tol=1e-6
        )

        assert report.feasible, report.failed()
        assert state.status in {"converged", "max_iter"}

    def test_rho_matches_evaluated_ee(self, scheme, channels, config, quick_settings):
        """Test that the reported rho is the EE of the returned iterate."""
        state = RUNNERS[scheme](channels, config, settings=quick_settings, seed=0)
        metrics = evaluate_solution(
            scheme,
            assemble_composites(channels),
            state.beams,
            state.phases,
            state.split,
            config,
            assoc=getattr(state, "assoc", None),
        )

        assert metrics.weighted_ee > 0
        assert state.rho == pytest.approx(metrics.weighted_ee, rel=1e-9)

    def test_stop_rule_uses_bits_per_joule(self, scheme, channels, config, quick_settings):
        """Test that only a sub-1e-3 bits/J step ends the loop."""
        state = RUNNERS[scheme](channels, config, settings=quick_settings, seed=0)
        steps_bits_per_joule = np.abs(np.diff(state.trace["rho"].to_numpy())) * 1e3

        assert np.all(steps_bits_per_joule[:-1] > config.dinkelbach_tol)
        if state.status == "converged":
            assert steps_bits_per_joule[-1] <= config.dinkelbach_tol
        else:
            assert state.iteration == quick_settings.max_outer_iterations

    def test_deterministic_per_seed(self, scheme, channels, config, quick_settings):
        """Test that equal seeds give equal traces."""
        first = RUNNERS[scheme](channels, config, settings=quick_settings, seed=4)
        second = RUNNERS[scheme](channels, config, settings=quick_settings, seed=4)

        np.testing.assert_array_equal(first.trace["rho"], second.trace["rho"])
        np.testing.assert_array_equal(first.beams.stacked(), second.beams.stacked())

    def test_trace_layout(self, scheme, channels, config):
        """Test one trace row per outer iteration."""
        settings = OptimizerSettings(
            max_outer_iterations=2, max_inner_iterations=2, randomization_candidates=10
        )
        state = RUNNERS[scheme](channels, config, settings=settings, seed=0)

        assert list(state.trace.columns) == TRACE_COLUMNS
        assert state.trace["iteration"].tolist() == list(range(1, state.iteration + 1))
        assert state.iteration <= 2


class TestOiaSpecifics:
    """Test behavior that only the opportunistic scheme has."""

    def test_association_respects_capacity(self, channels, config, quick_settings):
        """Test the association invariants at the output."""
        state = run_oia(channels, config, settings=quick_settings, seed=0)

        np.testing.assert_array_equal(state.assoc.matrix.sum(axis=0), np.ones(config.num_users))
        assert state.assoc.capacity_violation(config.capacity) == 0
        assert state.last_bnb is not None

    def test_single_irs_matches_eia_power(self, quick_settings):
        """Test that one IRS serving everyone costs the same as EIA."""
        config = SystemConfig.desk_scale(num_irs=1)
        _, channels = draw_scenario(config, seed=2)
        state = run_oia(channels, config, settings=quick_settings, seed=0)

        assert state.assoc.num_active() == 1
        expected = state.beams.transmit_power() + config.static_power_mw + 4 * 6.0
        assert state.trace["power_mw"].iloc[-1] == pytest.approx(expected)

    def test_inactive_irs_flagged(self, channels, config, quick_settings):
        """Test that idle IRSs are named in the trace flags."""
        state = run_oia(channels, config, settings=quick_settings, seed=0)
        last_flags = state.trace["flags"].iloc[-1]

        for n in np.flatnonzero(~state.assoc.active_irs()):
            assert f"inactive_irs_{n + 1}" in last_flags

    @pytest.mark.parametrize("rho", [0.0, 50.0])
    def test_single_irs_beam_step_matches_eia(self, quick_settings, rho):
        """Test that the OIA beamforming step at N=1 solves the EIA beamforming step."""
        config = SystemConfig.desk_scale(num_irs=1)
        _, channels = draw_scenario(config, seed=6)
        composites = assemble_composites(channels)
        phases = PhaseConfig.random(np.random.default_rng(6), 1, config.elements_per_irs)
        eia_state = init_state(composites, config, np.random.default_rng(0), fixed_phases=phases)
        oia_state = init_state_oia(
            composites, config, np.random.default_rng(0), fixed_phases=phases
        )
        eia_state.rho = rho
        oia_state.rho = rho

        eia = build_and_solve_p5(
            eia_state, composites, config, settings=quick_settings, rng=np.random.default_rng(1)
        )
        oia = build_and_solve_p17(
            oia_state, composites, config, settings=quick_settings, rng=np.random.default_rng(1)
        )

        assert eia.surrogate_path
        assert oia.status == eia.status
        np.testing.assert_allclose(oia.surrogate_path, eia.surrogate_path, rtol=1e-5)
        assert oia.beams.transmit_power() == pytest.approx(
            eia.beams.transmit_power(), rel=1e-5
        )
        np.testing.assert_allclose(oia.split.C, eia.split.C, rtol=1e-5, atol=1e-9)
