"""Numerical settings for the solver and the alternating optimizers."""
from pydantic import BaseModel, ConfigDict, Field


class SolverSettings(BaseModel):
    """Barrier-method tolerances."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol: float = Field(1e-7, gt=0, lt=1)
    max_iter: int = Field(500, ge=1)


class OptimizerSettings(BaseModel):
    """Caps and tolerances of the outer and inner loops."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_outer_iterations: int = Field(50, ge=1)
    max_inner_iterations: int = Field(30, ge=1)
    inner_tol: float = Field(1e-5, gt=0)
    bnb_rel_eps: float = Field(1e-6, gt=0)
    randomization_candidates: int = Field(200, ge=1)
    feasibility_tol: float = Field(1e-6, gt=0)
