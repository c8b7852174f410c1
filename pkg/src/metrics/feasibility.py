"""Constraint checks for candidate solutions of either scheme."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from src.metrics.rates import RateSet, rates_eia, rates_oia
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

DEFAULT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Candidate:
    """A full solution: beams, phases, common-rate split and (OIA) association."""

    beams: BeamformingSet
    phases: PhaseConfig
    split: CommonRateSplit
    assoc: Optional[AssociationMatrix] = None


@dataclass(frozen=True)
class ConstraintCheck:
    """Outcome of one constraint family."""

    name: str
    satisfied: bool
    violation: float


@dataclass
class FeasibilityReport:
    """Per-family constraint outcomes with worst violation magnitudes."""

    scheme: Scheme
    checks: List[ConstraintCheck] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return all(check.satisfied for check in self.checks)

    def violation(self, name: str) -> float:
        for check in self.checks:
            if check.name == name:
                return check.violation
        raise KeyError(name)

    def is_satisfied(self, name: str) -> bool:
        for check in self.checks:
            if check.name == name:
                return check.satisfied
        raise KeyError(name)

    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.satisfied]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "constraint": check.name,
                    "satisfied": check.satisfied,
                    "violation": check.violation,
                }
                for check in self.checks
            ],
            columns=["constraint", "satisfied", "violation"],
        )

    def to_csv(self, path: str | Path) -> Path:
        output = Path(path)
        output.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(output, index=False)
        return output


def _check(name: str, violation: float, tol: float) -> ConstraintCheck:
    violation = max(0.0, float(violation))
    return ConstraintCheck(name=name, satisfied=violation <= tol, violation=violation)


def rate_shortfalls(
    rates: RateSet,
    split: np.ndarray,
    min_rates: Sequence[float],
) -> tuple[float, float]:
    """
    Worst violations of the rate constraints.

    Returns:
        (min-rate shortfall, excess of sum(C) over the system common rate),
        each clipped at 0
    """
    split = np.asarray(split, dtype=float)
    shortfall = float(np.max(np.asarray(min_rates) - (split + rates.private)))
    excess = float(split.sum() - rates.system_common)
    return max(0.0, shortfall), max(0.0, excess)


def check_feasibility(
    scheme: Scheme,
    candidate: Candidate,
    composites: CompositeChannels,
    config: SystemConfig,
    tol: float = DEFAULT_TOL,
) -> FeasibilityReport:
    """
    Check a candidate against the constraints of the original problem.

    Families: transmit power, per-user minimum rate, common-rate total,
    common-rate nonnegativity, unit modulus and (OIA) association validity.
    Never raises for an infeasible candidate.

    Args:
        scheme: Scheme whose constraints apply
        candidate: Solution to check
        composites: Stacked channels
        config: Scenario parameters
        tol: Absolute tolerance on powers (mW) and rates (bits/s/Hz)

    Returns:
        FeasibilityReport
    """
    report = FeasibilityReport(scheme=scheme)
    split = np.asarray(candidate.split.C, dtype=float)

    report.checks.append(
        _check(
            "power",
            candidate.beams.transmit_power() - config.p_max_mw,
            tol,
        )
    )

    modulus = candidate.phases.f
    modulus_gap = float(np.max(np.abs(np.abs(modulus) - 1.0))) if modulus.size else 0.0
    report.checks.append(_check("unit_modulus", modulus_gap, tol))

    report.checks.append(
        _check("common_split_nonnegative", float(np.max(-split, initial=0.0)), tol)
    )

    rates = None
    if scheme == Scheme.EIA:
        rates = rates_eia(composites, candidate.phases, candidate.beams, config)
    elif candidate.assoc is None:
        report.checks.append(ConstraintCheck("association", False, float("inf")))
    else:
        excess = candidate.assoc.capacity_violation(config.capacity)
        report.checks.append(_check("association", float(excess), 0.0))
        if excess == 0:
            rates = rates_oia(
                composites, candidate.phases, candidate.beams, candidate.assoc, config
            )

    if rates is None:
        report.checks.append(ConstraintCheck("min_rate", False, float("inf")))
        report.checks.append(ConstraintCheck("common_split_total", False, float("inf")))
    else:
        shortfall, excess = rate_shortfalls(rates, split, config.min_rates)
        report.checks.append(_check("min_rate", shortfall, tol))
        report.checks.append(_check("common_split_total", excess, tol))

    if not report.feasible:
        logger.debug(f"{scheme.value} candidate violates {report.failed()}")
    return report
