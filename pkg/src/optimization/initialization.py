"""Feasible starting points for the alternating optimizers."""
import logging
from typing import Optional

import numpy as np

from src.errors import InfeasibleError
from src.metrics.rates import RateSet
from src.metrics.types import BeamformingSet
from src.optimization.subproblems import beam_rates, repair_split
from src.scenario.config import SystemConfig

logger = logging.getLogger(__name__)

COMMON_SHARE_GRID = np.linspace(0.0, 0.99, 100)


def matched_filter_beams(
    effective: np.ndarray,
    power_mw: float,
    common_share: Optional[float] = None,
) -> BeamformingSet:
    """
    Beams matched to each user's effective channel.

    The private beam of user k is c_k / ||c_k||; the common beam is the
    normalized sum of the private directions. By default every beam gets
    the same power; common_share assigns that fraction to the common beam
    and splits the rest evenly.

    Args:
        effective: (K, M) effective channels
        power_mw: Total transmit power
        common_share: Fraction of power_mw on the common beam

    Returns:
        BeamformingSet with transmit power power_mw
    """
    num_users, num_antennas = effective.shape
    norms = np.linalg.norm(effective, axis=1)
    directions = np.zeros_like(effective, dtype=complex)
    for k in range(num_users):
        if norms[k] > 0:
            directions[k] = effective[k] / norms[k]
        else:
            directions[k, k % num_antennas] = 1.0

    common = directions.sum(axis=0)
    if np.linalg.norm(common) <= 1e-12:
        common = directions[0].copy()
    common = common / np.linalg.norm(common)

    if common_share is None:
        common_share = 1.0 / (num_users + 1)
    private_power = (1.0 - common_share) * power_mw / num_users
    return BeamformingSet(
        w_c=np.sqrt(common_share * power_mw) * common,
        w=np.sqrt(private_power) * directions,
    )


def restore_feasibility(
    effective: np.ndarray,
    noise: np.ndarray,
    config: SystemConfig,
) -> tuple[BeamformingSet, np.ndarray]:
    """
    Matched-filter beams and a common-rate split meeting the rate constraints.

    The equal-power split is tried first. Otherwise the common-beam share
    is swept and the feasible share with the largest weighted sum rate is
    kept.

    Returns:
        (beams, split)

    Raises:
        InfeasibleError: no share meets the minimum rates
    """
    min_rates = np.asarray(config.min_rates)
    zeros = np.zeros(len(min_rates))

    def attempt(share: Optional[float]) -> tuple[BeamformingSet, RateSet, Optional[np.ndarray]]:
        beams = matched_filter_beams(effective, config.p_max_mw, share)
        rates = beam_rates(effective, beams, noise)
        return beams, rates, repair_split(rates, zeros, min_rates)

    beams, rates, split = attempt(None)
    if split is not None:
        return beams, split

    logger.info("Initial beams miss the minimum rates; sweeping the common-beam share")
    best = None
    best_rate = -np.inf
    for share in COMMON_SHARE_GRID:
        beams, rates, split = attempt(float(share))
        if split is None:
            continue
        weighted = float(np.dot(config.weights, split + rates.private))
        if weighted > best_rate:
            best, best_rate = (beams, split), weighted

    if best is None:
        logger.error("No common-beam share meets the minimum rates")
        raise InfeasibleError(
            "Minimum rates cannot be met at the initial point", constraint="min_rate"
        )
    return best
