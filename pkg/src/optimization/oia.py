"""Dinkelbach alternating optimization for the opportunistic IRS scheme."""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from src.errors import InfeasibleError
from src.metrics.feasibility import Candidate, rate_shortfalls
from src.metrics.rates import (
    effective_channels_oia,
    effective_channels_pairs,
    evaluate_solution,
    rates_oia,
    rates_oia_pairs,
)
from src.metrics.types import (
    AssociationMatrix,
    BeamformingSet,
    CommonRateSplit,
    PhaseConfig,
    Scheme,
)
from src.optimization.bnb import BnBResult, association_objective, bnb_solve
from src.optimization.eia import (
    TRACE_COLUMNS,
    PowerModel,
    dinkelbach_converged,
    static_power,
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


@dataclass(eq=False)
class OiaState:
    """
    Alternating-optimization iterate of the opportunistic scheme.

    Attributes:
        assoc: IRS serving each user
        beams: Beamformers
        split: Common-rate split
        phases: Phase vectors; rows of idle IRSs are carried unchanged
        rho: Dinkelbach parameter (bits/mJ)
        iteration: Completed outer iterations
        status: 'running', 'converged' or 'max_iter'
        history: One trace row per outer iteration
        last_bnb: Search result of the latest association step
    """

    assoc: AssociationMatrix
    beams: BeamformingSet
    split: CommonRateSplit
    phases: PhaseConfig
    rho: float = 0.0
    iteration: int = 0
    status: str = "running"
    history: List[dict] = field(default_factory=list)
    last_bnb: Optional[BnBResult] = None

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
        return Candidate(
            beams=self.beams, phases=self.phases, split=self.split, assoc=self.assoc
        )


def init_state_oia(
    composites: CompositeChannels,
    config: SystemConfig,
    rng: np.random.Generator,
    fixed_beams: Optional[BeamformingSet] = None,
    fixed_phases: Optional[PhaseConfig] = None,
) -> OiaState:
    """
    Feasible starting iterate with rho = 0.

    Users are assigned greedily to the IRS with the strongest pair channel,
    then beams are matched to the resulting effective channels.
    """
    if fixed_phases is not None:
        phases = fixed_phases
    else:
        phases = PhaseConfig.random(rng, config.num_irs, config.elements_per_irs)
    pair_gain = np.sum(np.abs(effective_channels_pairs(composites, phases)) ** 2, axis=2)
    assoc = AssociationMatrix.nearest_feasible(pair_gain, config.capacity)
    effective = effective_channels_oia(composites, phases, assoc)
    noise = np.asarray(config.noise_delta_mw)
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
    return OiaState(
        assoc=assoc, beams=beams, split=CommonRateSplit(C=split), phases=phases, rho=0.0
    )


def association_inputs(
    state: OiaState,
    composites: CompositeChannels,
    config: SystemConfig,
    power_model: PowerModel = "full",
) -> tuple[np.ndarray, np.ndarray]:
    """
    Utilities B * weight_k * (C_k + R_p[n, k]) and per-IRS penalties rho * L * P(b).

    Returns:
        (utility (N, K), irs_cost (N,))
    """
    pair_rates = rates_oia_pairs(composites, state.phases, state.beams, config)
    rates = state.split.C[None, :] + pair_rates.private
    utility = config.bandwidth_hz * np.asarray(config.weights)[None, :] * rates
    per_irs = config.elements_per_irs * config.p_element_mw if power_model == "full" else 0.0
    irs_cost = np.full(config.num_irs, state.rho * per_irs)
    return utility, irs_cost


def inadmissible_pairs(
    state: OiaState,
    composites: CompositeChannels,
    config: SystemConfig,
    tol: float,
) -> np.ndarray:
    """(N, K) mask of pairs that break the rate constraints at the current beams."""
    pair_rates = rates_oia_pairs(composites, state.phases, state.beams, config)
    C = state.split.C[None, :]
    short = np.asarray(config.min_rates)[None, :] - (C + pair_rates.private) > tol
    over = state.split.total - pair_rates.common > tol
    return short | over


def update_association(
    state: OiaState,
    composites: CompositeChannels,
    config: SystemConfig,
    settings: OptimizerSettings,
    power_model: PowerModel = "full",
) -> tuple[AssociationMatrix, BnBResult, List[str]]:
    """
    Branch and bound on the association at the current beams and phases.

    The result is accepted only if the current beams, split and phases stay
    feasible under it; otherwise the search is repeated with the offending
    pairs excluded.
    """
    flags: List[str] = []
    utility, irs_cost = association_inputs(state, composites, config, power_model)
    tol = settings.feasibility_tol
    result = bnb_solve(utility, irs_cost, config.capacity, settings.bnb_rel_eps)

    candidate_rates = rates_oia(composites, state.phases, state.beams, result.assoc, config)
    if max(rate_shortfalls(candidate_rates, state.split.C, config.min_rates)) > tol:
        flags.append("assoc_guarded")
        forbidden = inadmissible_pairs(state, composites, config, tol)
        forbidden &= state.assoc.matrix == 0
        logger.debug(f"Association guard excludes {int(forbidden.sum())} pairs")
        result = bnb_solve(
            utility, irs_cost, config.capacity, settings.bnb_rel_eps, forbidden=forbidden
        )

    current_value = association_objective(state.assoc.matrix, utility, irs_cost)
    if result.objective < current_value:
        flags.append("assoc_kept")
        return state.assoc, result, flags
    return result.assoc, result, flags


def build_and_solve_p17(
    state: OiaState,
    composites: CompositeChannels,
    config: SystemConfig,
    solver: Optional[SolverSettings] = None,
    settings: Optional[OptimizerSettings] = None,
    rng: Optional[np.random.Generator] = None,
    power_model: PowerModel = "full",
) -> BeamformingResult:
    """Beamforming and common-rate step through the serving IRSs."""
    step = BeamformingStep(
        effective=effective_channels_oia(composites, state.phases, state.assoc),
        noise=np.asarray(config.noise_delta_mw),
        config=config,
        static_power_mw=static_power(Scheme.OIA, config, power_model, state.assoc),
        solver=solver,
        settings=settings,
        rng=rng,
    )
    return step.run(state.beams, state.split, state.rho)


def phase_vectors_oia(
    composites: CompositeChannels,
    beams: BeamformingSet,
    assoc: AssociationMatrix,
) -> np.ndarray:
    """(K, K+1, L+1) vectors E_{n(k),k} w_tau."""
    serving = assoc.serving_irs()
    E = composites.E[serving, np.arange(assoc.num_users)]
    return np.einsum("kdm,tm->ktd", E, beams.stacked())


def build_and_solve_p21(
    state: OiaState,
    composites: CompositeChannels,
    config: SystemConfig,
    solver: Optional[SolverSettings] = None,
    settings: Optional[OptimizerSettings] = None,
    rng: Optional[np.random.Generator] = None,
) -> PhaseResult:
    """Joint phase step over the IRSs that serve at least one user."""
    step = PhaseStep(
        user_vectors=phase_vectors_oia(composites, state.beams, state.assoc),
        reader=state.assoc.serving_irs(),
        num_blocks=config.num_irs,
        noise=np.asarray(config.noise_delta_mw),
        split=state.split,
        config=config,
        solver=solver,
        settings=settings,
        rng=rng,
    )
    current = np.concatenate(
        [state.phases.f, np.ones((config.num_irs, 1), dtype=complex)], axis=1
    )
    return step.run(current)


def update_rho2(
    state: OiaState,
    composites: CompositeChannels,
    config: SystemConfig,
    power_model: PowerModel = "full",
) -> float:
    """Weighted energy efficiency of the current iterate (bits/mJ)."""
    metrics = evaluate_solution(
        Scheme.OIA,
        composites,
        state.beams,
        state.phases,
        state.split,
        config,
        assoc=state.assoc,
        include_irs=power_model == "full",
    )
    return metrics.weighted_ee


def run_oia(
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
) -> OiaState:
    """
    Alternate association, beamforming and phase steps until rho settles.

    Arguments mirror run_eia.

    Returns:
        Final OiaState with its trace
    """
    settings = settings or OptimizerSettings()
    root = config.rng_seed if seed is None else seed
    rng = make_rng(root, "init")
    composites = assemble_composites(channels)

    try:
        state = init_state_oia(composites, config, rng, fixed_beams, fixed_phases)
    except InfeasibleError as e:
        logger.error(f"OIA initialization failed: {e}")
        raise

    logger.info(
        f"Starting OIA run (seed={root}, M={config.num_antennas}, K={config.num_users}, "
        f"N={config.num_irs}, L={config.elements_per_irs}, a={config.capacity})"
    )
    noise = np.asarray(config.noise_delta_mw)
    for iteration in range(1, settings.max_outer_iterations + 1):
        beam_objective = float("nan")
        phase_objective = float("nan")
        min_ratio = 1.0

        assoc, bnb_result, flags = update_association(
            state, composites, config, settings, power_model
        )
        state.assoc = assoc
        state.last_bnb = bnb_result

        if skip_beamforming:
            effective = effective_channels_oia(composites, state.phases, state.assoc)
            split = optimal_split(
                beam_rates(effective, state.beams, noise), config.weights, config.min_rates
            )
            if split is not None:
                state.split = CommonRateSplit(C=split)
        else:
            beam = build_and_solve_p17(
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
            phase = build_and_solve_p21(state, composites, config, solver, settings, rng)
            phase_objective = phase.objective
            if phase.accepted:
                f = state.phases.f.copy()
                for n in np.flatnonzero(state.assoc.active_irs()):
                    f[n] = phase.vectors[n, :-1]
                state.phases = PhaseConfig(f=f)
            else:
                flags.append(f"phase_{phase.status}")
            for n in np.flatnonzero(~state.assoc.active_irs()):
                flags.append(f"inactive_irs_{n + 1}")

        previous = state.rho
        state.rho = update_rho2(state, composites, config, power_model)
        state.iteration = iteration
        state.history.append(
            {
                "iteration": iteration,
                "rho": state.rho,
                "beam_objective": beam_objective,
                "phase_objective": phase_objective,
                "power_mw": state.beams.transmit_power()
                + static_power(Scheme.OIA, config, power_model, state.assoc),
                "min_rank_ratio": min_ratio,
                "flags": ";".join(flags),
            }
        )
        logger.info(
            f"OIA iteration {iteration}: rho={state.rho:.6g} bits/mJ, "
            f"active IRSs={state.assoc.num_active()} {';'.join(flags)}"
        )

        if dinkelbach_converged(state.rho, previous, config.dinkelbach_tol):
            state.status = "converged"
            break
    else:
        state.status = "max_iter"
        logger.warning(f"OIA stopped at the {settings.max_outer_iterations}-iteration cap")

    logger.info(f"OIA finished: {state.status} after {state.iteration} iterations")
    return state
