"""Integration tests for the comparison baselines."""
import numpy as np
import pytest

from src.baselines.runner import BaselineKind, run_baseline
from src.metrics.types import Scheme
from src.optimization.settings import OptimizerSettings
from src.scenario.channels import draw_scenario
from src.scenario.config import SystemConfig


@pytest.fixture
def config():
    """Desk scale without minimum rates so random beams stay feasible."""
    return SystemConfig.desk_scale(min_rates=0.0)


@pytest.fixture
def channels(config):
    _, channels = draw_scenario(config, seed=5)
    return channels


@pytest.fixture
def quick_settings():
    return OptimizerSettings(
        max_outer_iterations=3, max_inner_iterations=3, randomization_candidates=10
    )


class TestBaselines:
    """Test each baseline through the EIA pipeline."""

    def test_random_beamforming_keeps_full_power(self, channels, config, quick_settings):
        """Test that random beams are kept at p_max."""
        result = run_baseline(
            BaselineKind.RANDOM_BEAMFORMING, channels, config, seed=0, settings=quick_settings
        )

        assert result.state.beams.transmit_power() == pytest.approx(config.p_max_mw)
        assert result.weighted_ee > 0
        assert "beam_objective" in result.state.trace.columns
        assert result.state.trace["beam_objective"].isna().all()

    def test_random_phase_keeps_phases(self, channels, config, quick_settings):
        """Test that the drawn phases are not optimized."""
        first = run_baseline(
            BaselineKind.RANDOM_PHASE, channels, config, seed=1, settings=quick_settings
        )
        second = run_baseline(
            BaselineKind.RANDOM_PHASE, channels, config, seed=1, settings=quick_settings
        )

        np.testing.assert_array_equal(first.state.phases.f, second.state.phases.f)
        assert first.state.trace["phase_objective"].isna().all()
        assert first.weighted_ee == pytest.approx(second.weighted_ee)

    def test_no_irs_drops_circuit_power(self, channels, config, quick_settings):
        """Test that the IRS term is left out of the power."""
        result = run_baseline(BaselineKind.NO_IRS, channels, config, seed=0, settings=quick_settings)
        state = result.state

        expected = state.beams.transmit_power() + config.static_power_mw
        assert state.trace["power_mw"].iloc[-1] == pytest.approx(expected)
        assert result.weighted_ee > 0

    def test_oia_pipeline(self, channels, config, quick_settings):
        """Test a baseline on the opportunistic pipeline."""
        result = run_baseline(
            "RandomPhase", channels, config, scheme=Scheme.OIA, seed=0, settings=quick_settings
        )

        assert result.kind == BaselineKind.RANDOM_PHASE
        assert result.scheme == Scheme.OIA
        assert result.state.assoc.capacity_violation(config.capacity) == 0

    def test_unknown_kind(self, channels, config):
        """Test that unknown baselines are rejected."""
        with pytest.raises(ValueError):
            run_baseline("Exhaustive", channels, config)
