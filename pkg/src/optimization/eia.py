"""Dinkelbach alternating optimization for the exhaustive IRS scheme."""
import logging
from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np
import pandas as pd

from src.errors import InfeasibleError
from src.metrics.feasibility import Candidate
from src.metrics.rates import effective_channels_eia, evaluate_solution, irs_power_mw
from src.metrics.types import (
    AssociationMatrix,
    BeamformingSet,
    CommonRateSplit,
    PhaseConfig,
    Scheme,
)
from src.optimization.initialization import restore_feasibility
from src.optimization.settings import OptimizerSettings, SolverSettings
from src.optimization.subproblems import (
    BeamformingResult,
    BeamformingStep,
    PhaseResult,
    PhaseStep,
    beam_rates,
    optimal_split,
    repair_split,
)
from src.scenario.channels import ChannelSet, CompositeChannels, assemble_composites
from src.scenario.config import SystemConfig
from src.scenario.geometry import make_rng

logger = logging.getLogger(__name__)

PowerModel = Literal["full", "no_irs"]

TRACE_COLUMNS = [
    "iteration",
    "rho",
    "beam_objective",
    "phase_objective",
    "power_mw",
    "min_rank_ratio",
    "flags",
]

# bits/mJ -> bits/J, the unit of the stopping tolerance
RHO_TOL_SCALE = 1e3


@dataclass(eq=False)
class EiaState:
    """
    Alternating-optimization iterate of the exhaustive scheme.

    Attributes:
        beams: Beamformers (W blocks are their Gram matrices)
        split: Common-rate split
        phases: Phase vectors of every IRS
        rho: Dinkelbach parameter (bits/mJ)
        iteration: Completed outer iterations
        status: 'running', 'converged' or 'max_iter'
        history: One trace row per outer iteration
    """

    beams: BeamformingSet
    split: CommonRateSplit
    phases: PhaseConfig
    rho: float = 0.0
    iteration: int = 0
    status: str = "running"
    history: List[dict] = field(default_factory=list)

    @property
    def W(self) -> np.ndarray:
        return self.beams.grams()

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def trace(self) -> pd.DataFrame:
        return pd.DataFrame(self.history, columns=TRACE_COLUMNS)

    def candidate(self) -> Candidate:
        return Candidate(beams=self.beams, phases=self.phases, split=self.split)


def dinkelbach_converged(rho: float, previous: float, tol: float) -> bool:
    """True once rho (bits/mJ) moved by at most tol bits/J."""
    return abs(rho - previous) * RHO_TOL_SCALE <= tol


def static_power(
    scheme: Scheme,
    config: SystemConfig,
    power_model: PowerModel,
    assoc: Optional[AssociationMatrix] = None,
) -> float:
    """Circuit power of the AP, the users and (unless disabled) the IRSs."""
    total = config.static_power_mw
    if power_model == "full":
        total += irs_power_mw(scheme, config, assoc)
    return total


def init_state(
    composites: CompositeChannels,
    config: SystemConfig,
    rng: np.random.Generator,
    fixed_beams: Optional[BeamformingSet] = None,
    fixed_phases: Optional[PhaseConfig] = None,
) -> EiaState:
    """
    Feasible starting iterate with rho = 0.

    Phases are random (unless fixed) and beams matched to the resulting
    effective channels, with a restoration pass on the common-beam share.

    Raises:
        InfeasibleError: minimum rates unreachable at the starting point
    """
    if fixed_phases is not None:
        phases = fixed_phases
    else:
        phases = PhaseConfig.random(rng, config.num_irs, config.elements_per_irs)
    effective = effective_channels_eia(composites, phases)
    noise = np.asarray(config.noise_sigma_mw)
    if fixed_beams is not None:
        rates = beam_rates(effective, fixed_beams, noise)
        split = repair_split(rates, np.zeros(config.num_users), config.min_rates)
        if split is None:
            raise InfeasibleError(
                "Fixed beams cannot meet the minimum rates", constraint="min_rate"
            )
        beams = fixed_beams
    else:
        beams, split = restore_feasibility(effective, noise, config)
    return EiaState(beams=beams, split=CommonRateSplit(C=split), phases=phases, rho=0.0)


def build_and_solve_p5(
    state: EiaState,
    composites: CompositeChannels,
    config: SystemConfig,
    solver: Optional[SolverSettings] = None,
    settings: Optional[OptimizerSettings] = None,
    rng: Optional[np.random.Generator] = None,
    power_model: PowerModel = "full",
) -> BeamformingResult:
    """Beamforming and common-rate step at the current phases."""
    step = BeamformingStep(
        effective=effective_channels_eia(composites, state.phases),
        noise=np.asarray(config.noise_sigma_mw),
        config=config,
        static_power_mw=static_power(Scheme.EIA, config, power_model),
        solver=solver,
        settings=settings,
        rng=rng,
    )
    return step.run(state.beams, state.split, state.rho)


def phase_vectors_eia(composites: CompositeChannels, beams: BeamformingSet) -> np.ndarray:
    """(K, K+1, LN+1) vectors A_k w_tau."""
    return np.einsum("kdm,tm->ktd", composites.A, beams.stacked())


def build_and_solve_p10(
    state: EiaState,
    composites: CompositeChannels,
    config: SystemConfig,
    solver: Optional[SolverSettings] = None,
    settings: Optional[OptimizerSettings] = None,
    rng: Optional[np.random.Generator] = None,
) -> PhaseResult:
    """Phase step over the stacked vector of every IRS."""
    step = PhaseStep(
        user_vectors=phase_vectors_eia(composites, state.beams),
        reader=np.zeros(config.num_users, dtype=int),
        num_blocks=1,
        noise=np.asarray(config.noise_sigma_mw),
        split=state.split,
        config=config,
        solver=solver,
        settings=settings,
        rng=rng,
    )
    return step.run(state.phases.eia_vector()[None, :])


def update_rho1(
    state: EiaState,
    composites: CompositeChannels,
    config: SystemConfig,
    power_model: PowerModel = "full",
) -> float:
    """Weighted energy efficiency of the current iterate (bits/mJ)."""
    metrics = evaluate_solution(
        Scheme.EIA,
        composites,
        state.beams,
        state.phases,
        state.split,
        config,
        include_irs=power_model == "full",
    )
    return metrics.weighted_ee


def run_eia(
    channels: ChannelSet,
    config: SystemConfig,
    solver: Optional[SolverSettings] = None,
    settings: Optional[OptimizerSettings] = None,
    seed: Optional[int] = None,
    skip_beamforming: bool = False,
    skip_phases: bool = False,
    fixed_beams: Optional[BeamformingSet] = None,
    fixed_phases: Optional[PhaseConfig] = None,
    power_model: PowerModel = "full",
) -> EiaState:
    """
    Alternate beamforming and phase steps until rho settles.

    Args:
        channels: Channel realization
        config: Scenario parameters
        solver: Barrier-method settings
        settings: Loop caps and tolerances
        seed: Root seed (default config.rng_seed)
        skip_beamforming: Keep the beams fixed; only the split is re-optimized
        skip_phases: Keep the phases fixed
        fixed_beams: Starting beams used as-is
        fixed_phases: Starting phases used as-is
        power_model: 'no_irs' drops the IRS circuit power

    Returns:
        Final EiaState with its trace
    """
    settings = settings or OptimizerSettings()
    root = config.rng_seed if seed is None else seed
    rng = make_rng(root, "init")
    composites = assemble_composites(channels)

    try:
        state = init_state(composites, config, rng, fixed_beams, fixed_phases)
    except InfeasibleError as e:
        logger.error(f"EIA initialization failed: {e}")
        raise

    logger.info(
        f"Starting EIA run (seed={root}, M={config.num_antennas}, K={config.num_users}, "
        f"N={config.num_irs}, L={config.elements_per_irs})"
    )
    noise = np.asarray(config.noise_sigma_mw)
    for iteration in range(1, settings.max_outer_iterations + 1):
        flags = []
        beam_objective = float("nan")
        phase_objective = float("nan")
        min_ratio = 1.0

        if skip_beamforming:
            effective = effective_channels_eia(composites, state.phases)
            split = optimal_split(
                beam_rates(effective, state.beams, noise), config.weights, config.min_rates
            )
            if split is not None:
                state.split = CommonRateSplit(C=split)
        else:
            beam = build_and_solve_p5(
                state, composites, config, solver, settings, rng, power_model
            )
            beam_objective = beam.objective
            min_ratio = beam.min_rank_ratio
            if beam.accepted:
                state.beams, state.split = beam.beams, beam.split
            else:
                flags.append(f"beam_{beam.status}")
            if beam.randomized:
                flags.append("beam_randomized")

        if not skip_phases:
            phase = build_and_solve_p10(state, composites, config, solver, settings, rng)
            phase_objective = phase.objective
            if phase.accepted:
                state.phases = PhaseConfig.from_eia_vector(
                    phase.vectors[0], config.num_irs, config.elements_per_irs
                )
            else:
                flags.append(f"phase_{phase.status}")

        previous = state.rho
        state.rho = update_rho1(state, composites, config, power_model)
        state.iteration = iteration
        state.history.append(
            {
                "iteration": iteration,
                "rho": state.rho,
                "beam_objective": beam_objective,
                "phase_objective": phase_objective,
                "power_mw": state.beams.transmit_power()
                + static_power(Scheme.EIA, config, power_model),
                "min_rank_ratio": min_ratio,
                "flags": ";".join(flags),
            }
        )
        logger.info(f"EIA iteration {iteration}: rho={state.rho:.6g} bits/mJ {';'.join(flags)}")

        if dinkelbach_converged(state.rho, previous, config.dinkelbach_tol):
            state.status = "converged"
            break
    else:
        state.status = "max_iter"
        logger.warning(f"EIA stopped at the {settings.max_outer_iterations}-iteration cap")

    logger.info(f"EIA finished: {state.status} after {state.iteration} iterations")
    return state
