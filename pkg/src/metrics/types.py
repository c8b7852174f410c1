"""Solution components shared by both schemes."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from src.errors import DomainError

logger = logging.getLogger(__name__)

UNIT_MODULUS_TOL = 1e-9


class Scheme(str, Enum):
    """IRS operating scheme."""

    EIA = "EIA"
    OIA = "OIA"


@dataclass(frozen=True, eq=False)
class BeamformingSet:
    """
    Transmit beamformers.

    Attributes:
        w_c: (M,) common-stream beamformer
        w: (K, M) private-stream beamformers, row k is w_k
    """

    w_c: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if self.w.ndim != 2 or self.w_c.shape != (self.w.shape[1],):
            raise DomainError(
                f"Beam shapes disagree: w_c {self.w_c.shape}, w {self.w.shape}"
            )

    @property
    def num_users(self) -> int:
        return self.w.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.w.shape[1]

    def stacked(self) -> np.ndarray:
        """(K+1, M) array [w_c; w_1; ...; w_K]."""
        return np.vstack([self.w_c[None, :], self.w])

    def transmit_power(self) -> float:
        """||w_c||^2 + sum_k ||w_k||^2 in mW."""
        return float(np.sum(np.abs(self.stacked()) ** 2))

    def scaled(self, factor: float) -> "BeamformingSet":
        return BeamformingSet(w_c=self.w_c * factor, w=self.w * factor)

    def scaled_to_power(self, power_mw: float) -> "BeamformingSet":
        """Rescale jointly so the transmit power equals power_mw."""
        current = self.transmit_power()
        if current <= 0:
            raise DomainError("Cannot rescale all-zero beamformers")
        return self.scaled(np.sqrt(power_mw / current))

    def grams(self) -> np.ndarray:
        """(K+1, M, M) Gram matrices w_tau w_tau^H."""
        stacked = self.stacked()
        return stacked[:, :, None] * stacked[:, None, :].conj()

    @classmethod
    def from_stacked(cls, stacked: np.ndarray) -> "BeamformingSet":
        stacked = np.asarray(stacked, dtype=complex)
        return cls(w_c=stacked[0].copy(), w=stacked[1:].copy())

    @classmethod
    def zeros(cls, num_users: int, num_antennas: int) -> "BeamformingSet":
        return cls(
            w_c=np.zeros(num_antennas, dtype=complex),
            w=np.zeros((num_users, num_antennas), dtype=complex),
        )

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        num_users: int,
        num_antennas: int,
        power_mw: float,
    ) -> "BeamformingSet":
        """Complex Gaussian beams scaled to exactly power_mw."""
        shape = (num_users + 1, num_antennas)
        draws = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        return cls.from_stacked(draws).scaled_to_power(power_mw)


@dataclass(frozen=True, eq=False)
class PhaseConfig:
    """
    Unit-modulus phase vectors, one L-vector per IRS.

    The EIA vector f stacks every row and appends a trailing 1; the OIA
    vector of IRS n is its row with a trailing 1. Reflection coefficients
    are theta = conj(f).
    """

    f: np.ndarray

    def __post_init__(self):
        if self.f.ndim != 2:
            raise DomainError(f"Phase array must be (N, L), got {self.f.shape}")
        deviation = np.max(np.abs(np.abs(self.f) - 1.0)) if self.f.size else 0.0
        if deviation > UNIT_MODULUS_TOL:
            raise DomainError(
                f"Phase entries must be unit modulus (deviation {deviation:.2e})"
            )

    @property
    def num_irs(self) -> int:
        return self.f.shape[0]

    @property
    def elements_per_irs(self) -> int:
        return self.f.shape[1]

    def eia_vector(self) -> np.ndarray:
        """(LN+1,) stacked vector with trailing 1."""
        return np.concatenate([self.f.ravel(), [1.0 + 0.0j]])

    def irs_vector(self, n: int) -> np.ndarray:
        """(L+1,) vector of IRS n with trailing 1."""
        return np.concatenate([self.f[n], [1.0 + 0.0j]])

    def reflection_coefficients(self) -> np.ndarray:
        """(N, L) array theta = conj(f)."""
        return self.f.conj()

    def with_irs(self, n: int, row: np.ndarray) -> "PhaseConfig":
        f = self.f.copy()
        f[n] = row
        return PhaseConfig(f=f)

    @classmethod
    def from_eia_vector(
        cls, vector: np.ndarray, num_irs: int, elements_per_irs: int
    ) -> "PhaseConfig":
        """Inverse of eia_vector(); the trailing entry is dropped."""
        body = np.asarray(vector)[: num_irs * elements_per_irs]
        return cls(f=body.reshape(num_irs, elements_per_irs).astype(complex))

    @classmethod
    def from_angles(cls, angles: np.ndarray) -> "PhaseConfig":
        return cls(f=np.exp(1j * np.asarray(angles, dtype=float)))

    @classmethod
    def ones(cls, num_irs: int, elements_per_irs: int) -> "PhaseConfig":
        return cls(f=np.ones((num_irs, elements_per_irs), dtype=complex))

    @classmethod
    def random(
        cls, rng: np.random.Generator, num_irs: int, elements_per_irs: int
    ) -> "PhaseConfig":
        """Phases uniform on [0, 2*pi)."""
        return cls.from_angles(
            rng.uniform(0.0, 2.0 * np.pi, size=(num_irs, elements_per_irs))
        )


@dataclass(frozen=True, eq=False)
class CommonRateSplit:
    """Per-user share C_k of the common rate (bits/s/Hz)."""

    C: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.C))

    @classmethod
    def zeros(cls, num_users: int) -> "CommonRateSplit":
        return cls(C=np.zeros(num_users))


@dataclass(frozen=True, eq=False)
class AssociationMatrix:
    """
    Binary IRS-user assignment.

    Attributes:
        matrix: (N, K) 0/1 array; every user is served by exactly one IRS
    """

    matrix: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.matrix)
        if values.ndim != 2:
            raise DomainError(f"Association must be (N, K), got {values.shape}")
        if not np.all((values == 0) | (values == 1)):
            raise DomainError("Association entries must be binary")
        column_sums = values.sum(axis=0)
        if not np.all(column_sums == 1):
            raise DomainError(
                f"Each user must be associated with exactly one IRS, got {column_sums.tolist()}"
            )
        object.__setattr__(self, "matrix", values.astype(int))

    @property
    def num_irs(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_users(self) -> int:
        return self.matrix.shape[1]

    def serving_irs(self) -> np.ndarray:
        """(K,) index of the IRS serving each user."""
        return np.argmax(self.matrix, axis=0)

    def active_irs(self) -> np.ndarray:
        """(N,) boolean mask of IRSs serving at least one user."""
        return self.matrix.max(axis=1) > 0

    def num_active(self) -> int:
        return int(self.active_irs().sum())

    def loads(self) -> np.ndarray:
        """(N,) number of users per IRS."""
        return self.matrix.sum(axis=1)

    def capacity_violation(self, capacity: int) -> int:
        """Largest excess of any IRS load over capacity (0 if none)."""
        return int(max(0, int(self.loads().max()) - capacity))

    @classmethod
    def from_serving(cls, serving: Sequence[int], num_irs: int) -> "AssociationMatrix":
        matrix = np.zeros((num_irs, len(serving)), dtype=int)
        for k, n in enumerate(serving):
            matrix[n, k] = 1
        return cls(matrix=matrix)

    @classmethod
    def nearest_feasible(
        cls,
        scores: np.ndarray,
        capacity: int,
        order: Optional[Sequence[int]] = None,
    ) -> "AssociationMatrix":
        """
        Greedy assignment honoring capacity.

        Args:
            scores: (N, K) preference of each IRS for each user (higher is better)
            capacity: Maximum users per IRS
            order: Users to assign first (default 0..K-1)

        Returns:
            AssociationMatrix
        """
        num_irs, num_users = scores.shape
        if num_users > num_irs * capacity:
            raise DomainError(
                f"{num_users} users cannot fit {num_irs} IRSs of capacity {capacity}"
            )
        loads = np.zeros(num_irs, dtype=int)
        serving = [0] * num_users
        for k in order if order is not None else range(num_users):
            ranked = np.argsort(-scores[:, k], kind="stable")
            for n in ranked:
                if loads[n] < capacity:
                    serving[k] = int(n)
                    loads[n] += 1
                    break
        return cls.from_serving(serving, num_irs)
