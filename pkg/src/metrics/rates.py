"""Rate, power and energy-efficiency evaluation for both schemes."""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.errors import DomainError
from src.metrics.types import (
    AssociationMatrix,
    BeamformingSet,
    CommonRateSplit,
    PhaseConfig,
    Scheme,
)
from src.scenario.channels import CompositeChannels
from src.scenario.config import SystemConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RateSet:
    """
    Per-user decoding rates in bits/s/Hz.

    Attributes:
        common: (K,) rate at which user k decodes the common stream
        private: (K,) rate of user k's private stream after SIC
    """

    common: np.ndarray
    private: np.ndarray

    @property
    def system_common(self) -> float:
        """Common rate the system can support (min over users)."""
        return float(np.min(self.common))


@dataclass(frozen=True, eq=False)
class SolutionMetrics:
    """Evaluated quantities of one candidate solution."""

    rates: RateSet
    user_rates: np.ndarray
    power_mw: float
    weighted_sum_rate: float
    weighted_ee: float


def effective_channels_eia(
    composites: CompositeChannels,
    phases: PhaseConfig,
) -> np.ndarray:
    """
    Per-user effective channels of the exhaustive scheme.

    Args:
        composites: Stacked channels
        phases: Phase vectors of every IRS

    Returns:
        (K, M) array c with c[k]^H w = f^H A_k w
    """
    f_bar = phases.eia_vector()
    return np.einsum("klm,l->km", composites.A.conj(), f_bar)


def effective_channels_pairs(
    composites: CompositeChannels,
    phases: PhaseConfig,
) -> np.ndarray:
    """
    Effective channels of every (IRS, user) pair of the opportunistic scheme.

    Returns:
        (N, K, M) array c with c[n, k]^H w = f_n^H E_{n,k} w
    """
    f_tilde = np.concatenate(
        [phases.f, np.ones((phases.num_irs, 1), dtype=complex)], axis=1
    )
    return np.einsum("nklm,nl->nkm", composites.E.conj(), f_tilde)


def effective_channels_oia(
    composites: CompositeChannels,
    phases: PhaseConfig,
    assoc: AssociationMatrix,
) -> np.ndarray:
    """(K, M) effective channel of each user through its serving IRS."""
    pairs = effective_channels_pairs(composites, phases)
    serving = assoc.serving_irs()
    return pairs[serving, np.arange(assoc.num_users)]


def received_gains(effective: np.ndarray, beams: BeamformingSet) -> np.ndarray:
    """
    Received powers |c_k^H w_tau|^2.

    Args:
        effective: (..., K, M) effective channels
        beams: Beamformers

    Returns:
        (..., K, K+1) array; column 0 is the common beam, column i+1 is w_i
    """
    projections = np.einsum("...km,tm->...kt", effective.conj(), beams.stacked())
    return np.abs(projections) ** 2


def rates_from_gains(gains: np.ndarray, noise: np.ndarray) -> RateSet:
    """
    Common and private rates from received powers.

    Args:
        gains: (..., K, K+1) output of received_gains
        noise: (K,) noise power per user

    Returns:
        RateSet with arrays shaped like gains[..., 0]
    """
    private_gain = gains[..., 1:]
    total_private = private_gain.sum(axis=-1)
    own = np.diagonal(private_gain, axis1=-2, axis2=-1)
    common = np.log2(1.0 + gains[..., 0] / (total_private + noise))
    private = np.log2(1.0 + own / (total_private - own + noise))
    return RateSet(common=common, private=private)


def rates_eia(
    composites: CompositeChannels,
    phases: PhaseConfig,
    beams: BeamformingSet,
    config: SystemConfig,
) -> RateSet:
    """
    Common and private decoding rates of every user under the exhaustive scheme.

    Args:
        composites: Stacked channels
        phases: Phase vectors
        beams: Beamformers
        config: Scenario parameters (noise powers sigma_k^2)

    Returns:
        RateSet
    """
    effective = effective_channels_eia(composites, phases)
    gains = received_gains(effective, beams)
    return rates_from_gains(gains, np.asarray(config.noise_sigma_mw))


def rates_oia_pairs(
    composites: CompositeChannels,
    phases: PhaseConfig,
    beams: BeamformingSet,
    config: SystemConfig,
) -> RateSet:
    """Rates of every (IRS, user) pair as (N, K) arrays."""
    effective = effective_channels_pairs(composites, phases)
    gains = received_gains(effective, beams)
    return rates_from_gains(gains, np.asarray(config.noise_delta_mw))


def rates_oia(
    composites: CompositeChannels,
    phases: PhaseConfig,
    beams: BeamformingSet,
    assoc: AssociationMatrix,
    config: SystemConfig,
) -> RateSet:
    """
    Rates of each user through its serving IRS under the opportunistic scheme.

    Args:
        composites: Stacked channels
        phases: Phase vectors
        beams: Beamformers
        assoc: Valid association (one IRS per user)
        config: Scenario parameters (noise powers delta_k^2, IRS capacity)

    Returns:
        RateSet restricted to the associated pairs

    Raises:
        DomainError: an IRS serves more than capacity users
    """
    if assoc.capacity_violation(config.capacity) > 0:
        raise DomainError(
            f"Association loads {assoc.loads().tolist()} exceed capacity {config.capacity}"
        )
    effective = effective_channels_oia(composites, phases, assoc)
    gains = received_gains(effective, beams)
    return rates_from_gains(gains, np.asarray(config.noise_delta_mw))


def irs_power_mw(
    scheme: Scheme,
    config: SystemConfig,
    assoc: Optional[AssociationMatrix] = None,
) -> float:
    """Static power of the powered reflecting elements."""
    if scheme == Scheme.EIA:
        return config.num_irs * config.elements_per_irs * config.p_element_mw
    if assoc is None:
        raise ValueError("OIA power requires an association")
    return assoc.num_active() * config.elements_per_irs * config.p_element_mw


def power_total(
    scheme: Scheme,
    beams: BeamformingSet,
    config: SystemConfig,
    assoc: Optional[AssociationMatrix] = None,
    include_irs: bool = True,
) -> float:
    """
    Total power consumption in mW.

    Args:
        scheme: EIA powers all N*L elements, OIA only the serving IRSs
        beams: Beamformers
        config: Scenario parameters
        assoc: Association (required for OIA)
        include_irs: False drops the IRS term (no-IRS system)

    Returns:
        Transmit power plus static AP, user and IRS power
    """
    total = beams.transmit_power() + config.static_power_mw
    if include_irs:
        total += irs_power_mw(scheme, config, assoc)
    return float(total)


def weighted_sum_rate(
    rates: RateSet,
    split: CommonRateSplit,
    config: SystemConfig,
) -> float:
    """Sum over users of weight * (C_k + private rate), bits/s/Hz."""
    return float(np.dot(config.weights, split.C + rates.private))


def weighted_ee(
    rates: RateSet,
    split: CommonRateSplit,
    power_total_mw: float,
    config: SystemConfig,
) -> float:
    """
    Weighted energy efficiency B * sum(weight * rate) / P_total.

    Args:
        rates: Rates of the associated pairs
        split: Common-rate split
        power_total_mw: Total consumption (mW)
        config: Scenario parameters

    Returns:
        Bits per millijoule
    """
    if power_total_mw <= 0:
        raise ValueError(f"Total power must be positive, got {power_total_mw}")
    return config.bandwidth_hz * weighted_sum_rate(rates, split, config) / power_total_mw


def evaluate_solution(
    scheme: Scheme,
    composites: CompositeChannels,
    beams: BeamformingSet,
    phases: PhaseConfig,
    split: CommonRateSplit,
    config: SystemConfig,
    assoc: Optional[AssociationMatrix] = None,
    include_irs: bool = True,
) -> SolutionMetrics:
    """
    Evaluate rates, power and energy efficiency of a candidate.

    Returns:
        SolutionMetrics
    """
    if scheme == Scheme.EIA:
        rates = rates_eia(composites, phases, beams, config)
    else:
        if assoc is None:
            raise ValueError("OIA evaluation requires an association")
        rates = rates_oia(composites, phases, beams, assoc, config)
    power = power_total(scheme, beams, config, assoc, include_irs=include_irs)
    return SolutionMetrics(
        rates=rates,
        user_rates=split.C + rates.private,
        power_mw=power,
        weighted_sum_rate=weighted_sum_rate(rates, split, config),
        weighted_ee=weighted_ee(rates, split, power, config),
    )
