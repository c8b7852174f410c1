"""Random channel realizations and the composite matrices built on them."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from src.errors import DomainError
from src.scenario.config import SystemConfig
from src.scenario.geometry import Placement, make_rng, path_loss_db, place_nodes

logger = logging.getLogger(__name__)

CHANNEL_COLUMNS = ["link", "n", "k", "row", "col", "real", "imag"]


def _values(rows: pd.DataFrame) -> np.ndarray:
    return rows["real"].to_numpy() + 1j * rows["imag"].to_numpy()


@dataclass(frozen=True)
class ChannelSet:
    """
    One channel realization.

    Attributes:
        g: (K, M) direct AP->user channels, row k is g_k
        G: (N, L, M) AP->IRS channels
        h: (N, K, L) IRS->user channels, h[n, k] is h_{n,k}
    """

    g: np.ndarray
    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        num_users, num_antennas = self.g.shape
        num_irs, num_elements, antennas_G = self.G.shape
        if antennas_G != num_antennas:
            raise DomainError(
                f"G has {antennas_G} antennas, g has {num_antennas}"
            )
        if self.h.shape != (num_irs, num_users, num_elements):
            raise DomainError(
                f"h has shape {self.h.shape}, expected "
                f"{(num_irs, num_users, num_elements)}"
            )
        for name in ("g", "G", "h"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DomainError(f"Channel {name} has non-finite entries")

    @property
    def num_users(self) -> int:
        return self.g.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.g.shape[1]

    @property
    def num_irs(self) -> int:
        return self.G.shape[0]

    @property
    def elements_per_irs(self) -> int:
        return self.G.shape[1]

    def combined_channels(
        self,
        thetas: np.ndarray,
        irs_mask: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """
        Evaluate the end-to-end channels directly from their definition.

        H_k^H = g_k^H + sum_n h_{n,k}^H diag(theta_n) G_n, summed over the
        IRSs selected by irs_mask[:, k] (all IRSs when omitted).

        Args:
            thetas: (N, L) reflection coefficients
            irs_mask: Optional (N, K) boolean mask of IRSs seen by each user

        Returns:
            (K, M) array whose row k is H_k^H
        """
        rows = self.g.conj().copy()
        for n in range(self.num_irs):
            for k in range(self.num_users):
                if irs_mask is not None and not irs_mask[n, k]:
                    continue
                rows[k] += (self.h[n, k].conj() * thetas[n]) @ self.G[n]
        return rows

    def without_irs(self) -> "ChannelSet":
        """Copy with every IRS link zeroed."""
        return ChannelSet(
            g=self.g.copy(),
            G=np.zeros_like(self.G),
            h=np.zeros_like(self.h),
        )

    def to_frame(self) -> pd.DataFrame:
        """
        Flatten into one row per complex entry.

        Returns:
            DataFrame with CHANNEL_COLUMNS; unused indices are -1
        """
        records = []
        for k, m in np.ndindex(self.g.shape):
            value = self.g[k, m]
            records.append(("g", -1, k, m, 0, value.real, value.imag))
        for n, l, m in np.ndindex(self.G.shape):
            value = self.G[n, l, m]
            records.append(("G", n, -1, l, m, value.real, value.imag))
        for n, k, l in np.ndindex(self.h.shape):
            value = self.h[n, k, l]
            records.append(("h", n, k, l, 0, value.real, value.imag))
        return pd.DataFrame.from_records(records, columns=CHANNEL_COLUMNS)

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "ChannelSet":
        """Rebuild a ChannelSet from to_frame() output."""
        missing = set(CHANNEL_COLUMNS) - set(df.columns)
        if missing:
            raise ValueError(f"Channel frame missing columns: {sorted(missing)}")

        g_rows = df[df["link"] == "g"]
        G_rows = df[df["link"] == "G"]
        h_rows = df[df["link"] == "h"]
        num_users = int(g_rows["k"].max()) + 1
        num_antennas = int(g_rows["row"].max()) + 1
        num_irs = int(G_rows["n"].max()) + 1
        num_elements = int(G_rows["row"].max()) + 1

        g = np.zeros((num_users, num_antennas), dtype=complex)
        G = np.zeros((num_irs, num_elements, num_antennas), dtype=complex)
        h = np.zeros((num_irs, num_users, num_elements), dtype=complex)
        g[g_rows["k"].to_numpy(), g_rows["row"].to_numpy()] = _values(g_rows)
        G[
            G_rows["n"].to_numpy(), G_rows["row"].to_numpy(), G_rows["col"].to_numpy()
        ] = _values(G_rows)
        h[
            h_rows["n"].to_numpy(), h_rows["k"].to_numpy(), h_rows["row"].to_numpy()
        ] = _values(h_rows)
        return cls(g=g, G=G, h=h)


@dataclass(frozen=True)
class CompositeChannels:
    """
    Stacked channels used by the optimizers.

    Attributes:
        A: (K, LN+1, M); A[k] stacks diag(h_{n,k}^H) G_n for every n, then g_k^H
        E: (N, K, L+1, M); E[n, k] is [diag(h_{n,k}^H) G_n; g_k^H]
    """

    A: np.ndarray
    E: np.ndarray


def _complex_gaussian(
    rng: np.random.Generator,
    shape: tuple[int, ...],
    gain: np.ndarray | float,
) -> np.ndarray:
    """CN(0, gain) entries; gain broadcasts against shape."""
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return np.sqrt(np.asarray(gain) / 2.0) * (real + 1j * imag)


def sample_channels(
    placement: Placement,
    config: SystemConfig,
    rng: np.random.Generator,
) -> ChannelSet:
    """
    Draw i.i.d. Rayleigh fading scaled by the path loss of each link.

    Args:
        placement: Node positions
        config: Scenario parameters (dimensions)
        rng: Fading generator

    Returns:
        ChannelSet
    """
    distances = placement.distances()
    for name, values in distances.items():
        if np.any(values <= 0):
            raise DomainError(f"Coincident node positions on {name} links")

    num_antennas = config.num_antennas
    num_users = config.num_users
    num_irs = config.num_irs
    num_elements = config.elements_per_irs

    gain_direct = 10.0 ** (-path_loss_db("direct", distances["ap_user"]) / 10.0)
    gain_ap_irs = 10.0 ** (-path_loss_db("irs_hop", distances["ap_irs"]) / 10.0)
    gain_irs_user = 10.0 ** (-path_loss_db("irs_hop", distances["irs_user"]) / 10.0)

    g = _complex_gaussian(rng, (num_users, num_antennas), gain_direct[:, None])
    G = _complex_gaussian(
        rng, (num_irs, num_elements, num_antennas), gain_ap_irs[:, None, None]
    )
    h = _complex_gaussian(
        rng, (num_irs, num_users, num_elements), gain_irs_user[:, :, None]
    )
    return ChannelSet(g=g, G=G, h=h)


def assemble_composites(channels: ChannelSet) -> CompositeChannels:
    """
    Build the stacked composite matrices of both schemes.

    Args:
        channels: Channel realization

    Returns:
        CompositeChannels with f^H A_k w = H_k^H w when theta = conj(f)
    """
    num_irs = channels.num_irs
    num_users = channels.num_users
    num_elements = channels.elements_per_irs
    num_antennas = channels.num_antennas

    # reflected[n, k] = diag(h_{n,k}^H) G_n
    reflected = channels.h.conj()[:, :, :, None] * channels.G[:, None, :, :]
    direct = channels.g.conj()

    A = np.empty(
        (num_users, num_irs * num_elements + 1, num_antennas), dtype=complex
    )
    E = np.empty((num_irs, num_users, num_elements + 1, num_antennas), dtype=complex)
    for k in range(num_users):
        A[k, :-1] = reflected[:, k].reshape(num_irs * num_elements, num_antennas)
        A[k, -1] = direct[k]
        for n in range(num_irs):
            E[n, k, :-1] = reflected[n, k]
            E[n, k, -1] = direct[k]
    return CompositeChannels(A=A, E=E)


def draw_scenario(
    config: SystemConfig,
    seed: Optional[int] = None,
) -> tuple[Placement, ChannelSet]:
    """
    Place nodes and draw channels for one seeded run.

    Args:
        config: Scenario parameters
        seed: Root seed; defaults to config.rng_seed

    Returns:
        (placement, channels)
    """
    root = config.rng_seed if seed is None else seed
    placement = place_nodes(config, make_rng(root, "placement"))
    channels = sample_channels(placement, config, make_rng(root, "fading"))
    logger.debug(f"Drew scenario for seed {root}")
    return placement, channels


def scenario_with_irs_center(config: SystemConfig, x: float) -> SystemConfig:
    """Move the IRS disc center horizontally to x (meters)."""
    return config.with_updates(irs_center=(float(x), config.irs_center[1]))


def dump_channels(channels: ChannelSet, path: str | Path) -> Path:
    """
    Save a channel realization as CSV.

    Args:
        channels: Channel realization
        path: Output file

    Returns:
        Path written
    """
    output = Path(path)
    output.parent.mkdir(parents=True, exist_ok=True)
    channels.to_frame().to_csv(output, index=False, float_format="%.17g")
    logger.info(f"Saved channels to {output}")
    return output


def load_channels(path: str | Path) -> ChannelSet:
    """Load a realization written by dump_channels."""
    df = pd.read_csv(path, float_precision="round_trip")
    logger.info(f"Loaded {len(df)} channel entries from {path}")
    return ChannelSet.from_frame(df)
