"""Scenario parameters for the multi-IRS RSMA system."""
import math
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

PER_USER_FIELDS = (
    "p_user_static_mw",
    "min_rates",
    "weights",
    "noise_sigma_mw",
    "noise_delta_mw",
)


def dbm_to_mw(value_dbm: float) -> float:
    """Convert dBm to linear milliwatts."""
    return float(10.0 ** (value_dbm / 10.0))


def mw_to_dbm(value_mw: float) -> float:
    """Convert linear milliwatts to dBm."""
    return 10.0 * math.log10(value_mw)


class SystemConfig(BaseModel):
    """Scenario parameters.

    Powers are linear mW, rates bits/s/Hz, distances meters. Per-user
    fields accept a scalar, which is broadcast to every user.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_antennas: int = Field(4, ge=1)
    num_users: int = Field(4, ge=1)
    num_irs: int = Field(4, ge=1)
    elements_per_irs: int = Field(30, ge=1)
    bandwidth_hz: float = Field(180e3, gt=0)
    p_max_mw: float = Field(dbm_to_mw(34.0), gt=0)
    p_ap_static_mw: float = Field(dbm_to_mw(37.0), gt=0)
    p_user_static_mw: tuple[float, ...] = (dbm_to_mw(10.0),)
    p_element_mw: float = Field(6.0, gt=0)
    capacity: int = Field(2, ge=1)
    min_rates: tuple[float, ...] = (0.1,)
    weights: tuple[float, ...] = (1.0,)
    noise_sigma_mw: tuple[float, ...] = (dbm_to_mw(-94.0),)
    noise_delta_mw: tuple[float, ...] = (dbm_to_mw(-94.0),)
    dinkelbach_tol: float = Field(1e-3, gt=0)
    rng_seed: int = 2024
    ap_position: tuple[float, float] = (0.0, 0.0)
    user_center: tuple[float, float] = (200.0, 30.0)
    user_radius: float = Field(20.0, ge=0)
    irs_center: tuple[float, float] = (100.0, 30.0)
    irs_radius: float = Field(20.0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _broadcast_per_user(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        num_users = int(data.get("num_users", 4))
        for name in PER_USER_FIELDS:
            if name not in data:
                default = cls.model_fields[name].default
                data[name] = tuple(default) * num_users
                continue
            value = data[name]
            if isinstance(value, (int, float)):
                data[name] = (float(value),) * num_users
        return data

    @model_validator(mode="after")
    def _check_invariants(self) -> "SystemConfig":
        for name in PER_USER_FIELDS:
            values = getattr(self, name)
            if len(values) != self.num_users:
                raise ValueError(
                    f"{name} has {len(values)} entries, expected {self.num_users}"
                )
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if any(r < 0 for r in self.min_rates):
            raise ValueError("min_rates must be nonnegative")
        for name in ("p_user_static_mw", "noise_sigma_mw", "noise_delta_mw"):
            if any(v <= 0 for v in getattr(self, name)):
                raise ValueError(f"{name} must be positive")
        if self.num_users > self.num_irs * self.capacity:
            raise ValueError(
                f"num_users={self.num_users} exceeds num_irs*capacity="
                f"{self.num_irs * self.capacity}"
            )
        return self

    @classmethod
    def reference_profile(cls, **overrides: Any) -> "SystemConfig":
        """Full-scale reference defaults with optional overrides."""
        return cls(**overrides)

    @classmethod
    def desk_scale(cls, **overrides: Any) -> "SystemConfig":
        """Small profile (M=2, K=2, N=2, L=4, a=2) used in tests and sweeps."""
        params: dict[str, Any] = {
            "num_antennas": 2,
            "num_users": 2,
            "num_irs": 2,
            "elements_per_irs": 4,
            "capacity": 2,
        }
        params.update(overrides)
        return cls(**params)

    def with_updates(self, **updates: Any) -> "SystemConfig":
        """Return a validated copy with some fields replaced."""
        params = self.model_dump()
        if "num_users" in updates and updates["num_users"] != self.num_users:
            for name in PER_USER_FIELDS:
                if name not in updates:
                    updates[name] = getattr(self, name)[0]
        params.update(updates)
        return SystemConfig(**params)

    @property
    def num_elements(self) -> int:
        """Total reflecting elements N·L."""
        return self.num_irs * self.elements_per_irs

    @property
    def static_power_mw(self) -> float:
        """AP and user static power (excludes the IRS term)."""
        return self.p_ap_static_mw + float(sum(self.p_user_static_mw))
