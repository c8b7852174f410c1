"""Node placement and large-scale path loss."""
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.errors import DomainError
from src.scenario.config import SystemConfig

logger = logging.getLogger(__name__)

LinkKind = Literal["direct", "irs_hop"]

# Sub-stream offsets derived from the root seed
STREAM_OFFSETS = {
    "placement": 0,
    "fading": 1,
    "init": 2,
    "baseline": 3,
}

# (intercept dB, slope dB/decade)
PATH_LOSS_MODELS = {
    "direct": (32.6, 36.7),
    "irs_hop": (35.6, 22.0),
}


def make_rng(seed: int, stream: str) -> np.random.Generator:
    """
    Build an independent generator for one purpose of a seeded run.

    Args:
        seed: Root seed of the run
        stream: One of STREAM_OFFSETS

    Returns:
        Generator seeded from (seed, offset)
    """
    if stream not in STREAM_OFFSETS:
        raise ValueError(f"Unknown RNG stream: {stream}")
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, STREAM_OFFSETS[stream]])
    return np.random.default_rng(sequence)


@dataclass(frozen=True)
class Placement:
    """2-D positions (meters) of the AP, users and IRSs."""

    ap_pos: np.ndarray
    user_pos: np.ndarray
    irs_pos: np.ndarray

    @property
    def num_users(self) -> int:
        return self.user_pos.shape[0]

    @property
    def num_irs(self) -> int:
        return self.irs_pos.shape[0]

    def distances(self) -> dict[str, np.ndarray]:
        """
        Euclidean link distances.

        Returns:
            Dictionary with 'ap_user' (K,), 'ap_irs' (N,), 'irs_user' (N, K)
        """
        return {
            "ap_user": np.linalg.norm(self.user_pos - self.ap_pos, axis=1),
            "ap_irs": np.linalg.norm(self.irs_pos - self.ap_pos, axis=1),
            "irs_user": np.linalg.norm(
                self.irs_pos[:, None, :] - self.user_pos[None, :, :], axis=2
            ),
        }


def _uniform_in_disc(
    rng: np.random.Generator,
    center: tuple[float, float],
    radius: float,
    count: int,
) -> np.ndarray:
    radii = radius * np.sqrt(rng.uniform(0.0, 1.0, size=count))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=count)
    offsets = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    return np.asarray(center, dtype=float) + offsets


def place_nodes(config: SystemConfig, rng: np.random.Generator) -> Placement:
    """
    Drop users and IRSs uniformly in their discs; the AP is fixed.

    Args:
        config: Scenario parameters
        rng: Placement generator

    Returns:
        Placement
    """
    user_pos = _uniform_in_disc(
        rng, config.user_center, config.user_radius, config.num_users
    )
    irs_pos = _uniform_in_disc(
        rng, config.irs_center, config.irs_radius, config.num_irs
    )
    placement = Placement(
        ap_pos=np.asarray(config.ap_position, dtype=float),
        user_pos=user_pos,
        irs_pos=irs_pos,
    )
    logger.debug(
        f"Placed {config.num_users} users and {config.num_irs} IRSs"
    )
    return placement


def path_loss_db(link_kind: LinkKind, distance: float | np.ndarray) -> float | np.ndarray:
    """
    Log-distance path loss in dB.

    Args:
        link_kind: 'direct' (AP-user) or 'irs_hop' (AP-IRS, IRS-user)
        distance: Link distance in meters, > 0

    Returns:
        Path loss in dB, same shape as distance
    """
    if link_kind not in PATH_LOSS_MODELS:
        raise DomainError(f"Unknown link kind: {link_kind}")
    d = np.asarray(distance, dtype=float)
    if np.any(~np.isfinite(d)) or np.any(d <= 0):
        raise DomainError(f"Distance must be positive, got {distance}")
    intercept, slope = PATH_LOSS_MODELS[link_kind]
    loss = intercept + slope * np.log10(d)
    if loss.ndim == 0:
        return float(loss)
    return loss
