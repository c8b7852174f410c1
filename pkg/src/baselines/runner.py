"""Comparison baselines built on the EIA/OIA pipelines with one step disabled."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from src.metrics.rates import evaluate_solution
from src.metrics.types import BeamformingSet, PhaseConfig, Scheme
from src.optimization.eia import EiaState, run_eia
from src.optimization.oia import OiaState, run_oia
from src.optimization.settings import OptimizerSettings, SolverSettings
from src.scenario.channels import ChannelSet, assemble_composites
from src.scenario.config import SystemConfig
from src.scenario.geometry import make_rng

logger = logging.getLogger(__name__)


class BaselineKind(str, Enum):
    """Which part of the design is left unoptimized."""

    RANDOM_BEAMFORMING = "RandomBeamforming"
    RANDOM_PHASE = "RandomPhase"
    NO_IRS = "NoIrs"


@dataclass(eq=False)
class BaselineResult:
    """Final iterate of a baseline run and its weighted energy efficiency (bits/mJ)."""

    kind: BaselineKind
    scheme: Scheme
    state: Union[EiaState, OiaState]
    weighted_ee: float
    weighted_sum_rate: float


def run_baseline(
    kind: BaselineKind,
    channels: ChannelSet,
    config: SystemConfig,
    scheme: Scheme = Scheme.EIA,
    seed: Optional[int] = None,
    solver: Optional[SolverSettings] = None,
    settings: Optional[OptimizerSettings] = None,
) -> BaselineResult:
    """
    Run one baseline through the pipeline of the given scheme.

    RandomBeamforming draws Gaussian beams scaled to p_max and keeps them;
    RandomPhase draws uniform phases and keeps them; NoIrs zeroes every IRS
    channel, keeps the phases and drops the IRS circuit power. The rest of
    the loop (split, remaining steps, Dinkelbach update) still runs.

    Args:
        kind: Baseline to run
        channels: Channel realization
        config: Scenario parameters
        scheme: Pipeline to reuse
        seed: Root seed (default config.rng_seed)
        solver: Barrier-method settings
        settings: Loop caps and tolerances

    Returns:
        BaselineResult
    """
    kind = BaselineKind(kind)
    scheme = Scheme(scheme)
    root = config.rng_seed if seed is None else seed
    rng = make_rng(root, "baseline")
    pipeline = run_eia if scheme == Scheme.EIA else run_oia
    options = {"solver": solver, "settings": settings, "seed": root}

    if kind == BaselineKind.RANDOM_BEAMFORMING:
        beams = BeamformingSet.random(
            rng, config.num_users, config.num_antennas, config.p_max_mw
        )
        state = pipeline(channels, config, skip_beamforming=True, fixed_beams=beams, **options)
        used = channels
        include_irs = True
    elif kind == BaselineKind.RANDOM_PHASE:
        phases = PhaseConfig.random(rng, config.num_irs, config.elements_per_irs)
        state = pipeline(channels, config, skip_phases=True, fixed_phases=phases, **options)
        used = channels
        include_irs = True
    else:
        used = channels.without_irs()
        state = pipeline(used, config, skip_phases=True, power_model="no_irs", **options)
        include_irs = False

    metrics = evaluate_solution(
        scheme,
        assemble_composites(used),
        state.beams,
        state.phases,
        state.split,
        config,
        assoc=getattr(state, "assoc", None),
        include_irs=include_irs,
    )
    logger.info(
        f"{kind.value} baseline ({scheme.value}): EE={metrics.weighted_ee:.6g} bits/mJ, "
        f"status={state.status}"
    )
    return BaselineResult(
        kind=kind,
        scheme=scheme,
        state=state,
        weighted_ee=metrics.weighted_ee,
        weighted_sum_rate=metrics.weighted_sum_rate,
    )
