"""Unit tests for scenario parameters, placement and channels."""
import numpy as np
import pytest

from src.errors import DomainError
from src.metrics.rates import effective_channels_eia, effective_channels_oia
from src.metrics.types import AssociationMatrix, PhaseConfig
from src.scenario.channels import (
    ChannelSet,
    assemble_composites,
    draw_scenario,
    dump_channels,
    load_channels,
    sample_channels,
    scenario_with_irs_center,
)
from src.scenario.config import SystemConfig, dbm_to_mw, mw_to_dbm
from src.scenario.geometry import make_rng, path_loss_db, place_nodes


@pytest.fixture
def desk_config():
    """Desk-scale scenario."""
    return SystemConfig.desk_scale()


@pytest.fixture
def desk_channels(desk_config):
    """One seeded desk-scale realization."""
    _, channels = draw_scenario(desk_config, seed=3)
    return channels


class TestSystemConfig:
    """Test SystemConfig defaults and validation."""

    def test_reference_defaults(self):
        """Test full-scale defaults."""
        config = SystemConfig.reference_profile()

        assert config.num_antennas == 4
        assert config.num_users == 4
        assert config.num_irs == 4
        assert config.elements_per_irs == 30
        assert config.bandwidth_hz == 180e3
        assert config.p_max_mw == pytest.approx(2511.886, abs=1e-3)
        assert config.p_element_mw == 6.0
        assert config.dinkelbach_tol == 1e-3

    def test_per_user_fields_broadcast(self):
        """Test that per-user fields have one entry per user."""
        config = SystemConfig(num_users=3, num_irs=2, min_rates=0.5)

        assert config.min_rates == (0.5, 0.5, 0.5)
        assert len(config.weights) == 3
        assert len(config.noise_delta_mw) == 3

    def test_static_power(self, desk_config):
        """Test AP plus user static power."""
        expected = desk_config.p_ap_static_mw + 2 * dbm_to_mw(10.0)

        assert desk_config.static_power_mw == pytest.approx(expected)

    def test_zero_users_rejected(self):
        """Test that an empty user set is rejected."""
        with pytest.raises(ValueError):
            SystemConfig(num_users=0)

    def test_capacity_bound(self):
        """Test that K > N*a is rejected."""
        with pytest.raises(ValueError, match="exceeds"):
            SystemConfig(num_users=5, num_irs=2, capacity=2)

    def test_with_updates_resizes_users(self, desk_config):
        """Test that changing K re-broadcasts per-user fields."""
        updated = desk_config.with_updates(num_users=3)

        assert updated.num_users == 3
        assert len(updated.min_rates) == 3
        assert desk_config.num_users == 2

    def test_irs_center_helper(self, desk_config):
        """Test moving the IRS disc."""
        moved = scenario_with_irs_center(desk_config, 150.0)

        assert moved.irs_center == (150.0, desk_config.irs_center[1])

    def test_dbm_conversion(self):
        """Test dBm/mW conversions."""
        assert dbm_to_mw(0.0) == pytest.approx(1.0)
        assert dbm_to_mw(34.0) == pytest.approx(2511.886431509580)
        assert mw_to_dbm(1000.0) == pytest.approx(30.0)


class TestGeometry:
    """Test seeded placement and path loss."""

    def test_streams_reproducible(self):
        """Test that a (seed, stream) pair always gives the same draws."""
        first = make_rng(5, "fading").standard_normal(4)
        second = make_rng(5, "fading").standard_normal(4)

        np.testing.assert_array_equal(first, second)

    def test_streams_independent(self):
        """Test that streams of one seed differ."""
        fading = make_rng(5, "fading").standard_normal(4)
        placement = make_rng(5, "placement").standard_normal(4)

        assert not np.allclose(fading, placement)

    def test_unknown_stream(self):
        """Test that an unknown stream name is rejected."""
        with pytest.raises(ValueError):
            make_rng(0, "weather")

    def test_path_loss_values(self):
        """Test the log-distance models."""
        assert path_loss_db("direct", 1.0) == pytest.approx(32.6)
        assert path_loss_db("irs_hop", 10.0) == pytest.approx(57.6)
        np.testing.assert_allclose(
            path_loss_db("direct", np.array([1.0, 10.0])), [32.6, 69.3]
        )

    def test_path_loss_rejects_nonpositive_distance(self):
        """Test that d <= 0 is a domain error."""
        with pytest.raises(DomainError):
            path_loss_db("direct", 0.0)

    def test_nodes_inside_discs(self, desk_config):
        """Test that users and IRSs fall inside their discs."""
        placement = place_nodes(desk_config, make_rng(1, "placement"))

        user_offsets = placement.user_pos - np.asarray(desk_config.user_center)
        irs_offsets = placement.irs_pos - np.asarray(desk_config.irs_center)
        assert np.all(np.linalg.norm(user_offsets, axis=1) <= desk_config.user_radius)
        assert np.all(np.linalg.norm(irs_offsets, axis=1) <= desk_config.irs_radius)
        np.testing.assert_array_equal(placement.ap_pos, [0.0, 0.0])


class TestChannels:
    """Test channel draws and composite matrices."""

    def test_shapes(self, desk_channels):
        """Test channel array shapes."""
        assert desk_channels.g.shape == (2, 2)
        assert desk_channels.G.shape == (2, 4, 2)
        assert desk_channels.h.shape == (2, 2, 4)

    def test_deterministic_per_seed(self, desk_config):
        """Test that a seed fixes the realization."""
        _, first = draw_scenario(desk_config, seed=11)
        _, second = draw_scenario(desk_config, seed=11)
        _, other = draw_scenario(desk_config, seed=12)

        np.testing.assert_array_equal(first.G, second.G)
        assert not np.allclose(first.G, other.G)

    def test_shape_mismatch_rejected(self, desk_channels):
        """Test that inconsistent shapes are rejected."""
        with pytest.raises(DomainError):
            ChannelSet(g=desk_channels.g, G=desk_channels.G, h=desk_channels.h[:, :1])

    def test_without_irs(self, desk_channels):
        """Test zeroing the IRS links."""
        stripped = desk_channels.without_irs()

        assert np.all(stripped.G == 0)
        assert np.all(stripped.h == 0)
        np.testing.assert_array_equal(stripped.g, desk_channels.g)

    def test_composite_shapes(self, desk_channels):
        """Test stacked composite shapes."""
        composites = assemble_composites(desk_channels)

        assert composites.A.shape == (2, 9, 2)
        assert composites.E.shape == (2, 2, 5, 2)

    def test_eia_composite_identity(self, desk_channels):
        """Test f^H A_k w against the end-to-end channel definition."""
        composites = assemble_composites(desk_channels)
        phases = PhaseConfig.random(np.random.default_rng(0), 2, 4)
        w = np.array([0.3 - 0.2j, 1.1 + 0.4j])

        stacked = np.einsum("l,klm,m->k", phases.eia_vector().conj(), composites.A, w)
        direct = desk_channels.combined_channels(phases.reflection_coefficients()) @ w
        effective = effective_channels_eia(composites, phases).conj() @ w

        np.testing.assert_allclose(stacked, direct, rtol=1e-10, atol=1e-20)
        np.testing.assert_allclose(effective, direct, rtol=1e-10, atol=1e-20)

    def test_oia_composite_identity(self, desk_channels):
        """Test the per-IRS composites against the masked definition."""
        composites = assemble_composites(desk_channels)
        phases = PhaseConfig.random(np.random.default_rng(1), 2, 4)
        assoc = AssociationMatrix.from_serving([1, 0], num_irs=2)

        direct = desk_channels.combined_channels(
            phases.reflection_coefficients(), irs_mask=assoc.matrix.astype(bool)
        )
        effective = effective_channels_oia(composites, phases, assoc).conj()

        np.testing.assert_allclose(effective, direct, rtol=1e-10, atol=1e-20)

    def test_csv_round_trip(self, desk_channels, tmp_path):
        """Test that dumped channels load back exactly."""
        path = dump_channels(desk_channels, tmp_path / "channels.csv")
        loaded = load_channels(path)

        np.testing.assert_array_equal(loaded.g, desk_channels.g)
        np.testing.assert_array_equal(loaded.G, desk_channels.G)
        np.testing.assert_array_equal(loaded.h, desk_channels.h)


class TestChannelCalibration:
    """Test that fading power matches the path-loss model over 1e5 draws."""

    SAMPLES = 100_000

    @pytest.fixture
    def placement(self, desk_config):
        return place_nodes(desk_config, make_rng(7, "placement"))

    def test_direct_and_ap_irs_power(self, desk_config, placement):
        """Test mean |g|^2 and mean |G|^2 per link against 10^(-PL/10)."""
        config = desk_config.with_updates(num_antennas=self.SAMPLES, elements_per_irs=1)
        channels = sample_channels(placement, config, make_rng(7, "fading"))
        distances = placement.distances()

        expected = 10.0 ** (-path_loss_db("direct", distances["ap_user"]) / 10.0)
        observed = np.mean(np.abs(channels.g) ** 2, axis=1)
        np.testing.assert_allclose(observed, expected, rtol=0.02)

        expected = 10.0 ** (-path_loss_db("irs_hop", distances["ap_irs"]) / 10.0)
        observed = np.mean(np.abs(channels.G) ** 2, axis=(1, 2))
        np.testing.assert_allclose(observed, expected, rtol=0.02)

    def test_irs_user_power(self, desk_config, placement):
        """Test mean |h|^2 per IRS-user link against 10^(-PL/10)."""
        config = desk_config.with_updates(num_antennas=1, elements_per_irs=self.SAMPLES)
        channels = sample_channels(placement, config, make_rng(8, "fading"))

        expected = 10.0 ** (-path_loss_db("irs_hop", placement.distances()["irs_user"]) / 10.0)
        observed = np.mean(np.abs(channels.h) ** 2, axis=2)
        np.testing.assert_allclose(observed, expected, rtol=0.02)
