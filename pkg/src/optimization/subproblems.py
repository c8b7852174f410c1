"""Beamforming and phase-shift steps shared by both schemes.

Both steps run a successive convex approximation: the -log2 interference
terms are replaced by affine lower bounds expanded at the current iterate,
the rank-one constraints are relaxed, and the resulting program is solved
by the barrier method until the surrogate objective stops improving.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.metrics.feasibility import rate_shortfalls
from src.metrics.rates import RateSet, received_gains, rates_from_gains
from src.metrics.types import BeamformingSet, CommonRateSplit
from src.optimization.settings import OptimizerSettings, SolverSettings
from src.scenario.config import SystemConfig
from src.solver.barrier import solve
from src.solver.extraction import (
    RANK_ONE_THRESHOLD,
    gaussian_candidates,
    principal_component,
    purify_toward,
    rank_one_extract,
    reduce_rank,
)
from src.solver.program import AffineForm, ConeProgram
from src.surrogate.log_bound import LN2, LogSurrogate, make_surrogate

logger = logging.getLogger(__name__)

# Normalized trace below which a beam block counts as switched off
NEGLIGIBLE_TRACE = 1e-6
MONOTONE_SLACK = 1e-12
RANDOMIZATION_PENALTY = 1e6
# Bits by which phase-step rate targets sit below the levels they protect
PHASE_RATE_MARGIN = 1e-7
INTERIOR_WEIGHTS = np.logspace(-1, -12, 12)


def surrogate_form(surrogate: LogSurrogate, argument: AffineForm) -> AffineForm:
    """Affine lower bound of -log2(argument) as a form over the blocks."""
    bound = argument.scaled(surrogate.linear_coefficient)
    return AffineForm(coeffs=bound.coeffs, offset=bound.offset + surrogate.constant)


def beam_rates(
    effective: np.ndarray,
    beams: BeamformingSet,
    noise: np.ndarray,
) -> RateSet:
    """Rates of users with effective channels `effective` (K, M)."""
    return rates_from_gains(received_gains(effective, beams), noise)


def repair_split(
    rates: RateSet,
    split: np.ndarray,
    min_rates: Sequence[float],
) -> Optional[np.ndarray]:
    """
    Closest common-rate split meeting C >= 0, the minimum rates and the
    common-rate budget.

    Shares are raised to cover private-rate shortfalls first; any remaining
    share is scaled down to fit the budget min_k R_c,k.

    Returns:
        Repaired split, or None if the shortfalls alone exceed the budget
    """
    C = np.clip(np.asarray(split, dtype=float), 0.0, None)
    need = np.clip(np.asarray(min_rates, dtype=float) - rates.private, 0.0, None)
    C = np.maximum(C, need)
    available = rates.system_common - float(need.sum())
    if available < 0:
        return None
    excess = C - need
    if excess.sum() > available:
        excess = excess * (available / excess.sum())
    return need + excess


def optimal_split(
    rates: RateSet,
    weights: Sequence[float],
    min_rates: Sequence[float],
) -> Optional[np.ndarray]:
    """
    Best common-rate split for fixed rates.

    Shortfalls are covered first and the rest of the budget goes to the
    user with the largest weight (lowest index on ties).

    Returns:
        Split, or None if the shortfalls exceed the budget
    """
    need = np.clip(np.asarray(min_rates, dtype=float) - rates.private, 0.0, None)
    available = rates.system_common - float(need.sum())
    if available < 0:
        return None
    split = need.copy()
    split[int(np.argmax(weights))] += available
    return split


def dinkelbach_value(
    rates: RateSet,
    split: np.ndarray,
    beams: BeamformingSet,
    config: SystemConfig,
    rho: float,
    static_power_mw: float,
) -> float:
    """B * sum(weight * rate) - rho * P_total."""
    weighted = float(np.dot(config.weights, np.asarray(split) + rates.private))
    total_power = beams.transmit_power() + static_power_mw
    return config.bandwidth_hz * weighted - rho * total_power


@dataclass
class StepResult:
    """
    Outcome of one beamforming or phase step.

    Attributes:
        accepted: False when the previous iterate was kept
        status: 'accepted' or the reason for rejection
        objective: Last solved surrogate objective (nan when nothing solved)
        surrogate_path: Solved surrogate objective of every inner iteration
        min_rank_ratio: Smallest lambda_max / Tr over the relaxed blocks
        randomized: True when Gaussian randomization picked the vectors
        relaxed: Relaxed block values of the last inner iteration
    """

    accepted: bool
    status: str
    objective: float = float("nan")
    surrogate_path: List[float] = field(default_factory=list)
    min_rank_ratio: float = 1.0
    randomized: bool = False
    relaxed: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class BeamformingResult(StepResult):
    beams: Optional[BeamformingSet] = None
    split: Optional[CommonRateSplit] = None


@dataclass
class PhaseResult(StepResult):
    vectors: Optional[np.ndarray] = None


class BeamformingStep:
    """
    Joint beamforming and common-rate split for fixed effective channels.

    Variables are normalized Gram matrices W~_tau = w_tau w_tau^H / p_max
    (tau = common, 1..K) and scalar shares C_k as 1x1 real blocks. The
    objective is the Dinkelbach function divided by the bandwidth.
    """

    def __init__(
        self,
        effective: np.ndarray,
        noise: np.ndarray,
        config: SystemConfig,
        static_power_mw: float,
        solver: Optional[SolverSettings] = None,
        settings: Optional[OptimizerSettings] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        self.effective = np.asarray(effective, dtype=complex)
        self.noise = np.asarray(noise, dtype=float)
        self.config = config
        self.static_power_mw = float(static_power_mw)
        self.solver = solver or SolverSettings()
        self.settings = settings or OptimizerSettings()
        self.rng = rng if rng is not None else np.random.default_rng(0)

        self.num_users, self.num_antennas = self.effective.shape
        self.weights = np.asarray(config.weights, dtype=float)
        self.min_rates = np.asarray(config.min_rates, dtype=float)
        self.beam_names = ["Wc"] + [f"W{k + 1}" for k in range(self.num_users)]
        self.split_names = [f"C{k + 1}" for k in range(self.num_users)]
        # Q_k = p_max c_k c_k^H / noise_k
        outer = self.effective[:, :, None] * self.effective[:, None, :].conj()
        self.Q = config.p_max_mw * outer / self.noise[:, None, None]

    def rates(self, beams: BeamformingSet) -> RateSet:
        return beam_rates(self.effective, beams, self.noise)

    def value(self, beams: BeamformingSet, split: np.ndarray, rho: float) -> float:
        return dinkelbach_value(
            self.rates(beams), split, beams, self.config, rho, self.static_power_mw
        )

    def _received(self, grams: np.ndarray) -> np.ndarray:
        """(K, K+1) normalized received powers Tr(Q_k W~_tau)."""
        return np.einsum("kij,tji->kt", self.Q, grams).real

    def build_program(
        self,
        grams: np.ndarray,
        split: np.ndarray,
        rho: float,
    ) -> ConeProgram:
        """
        Surrogate program expanded at the normalized Gram matrices `grams`.

        Args:
            grams: (K+1, M, M) expansion point
            split: (K,) current shares (unused by the expansion, kept for hints)
            rho: Dinkelbach parameter, bits/mJ

        Returns:
            ConeProgram
        """
        K, M = self.num_users, self.num_antennas
        received = self._received(grams)
        signal = received[:, 1:].sum(axis=1) + 1.0
        interference = signal - received[np.arange(K), np.arange(K) + 1]

        program = ConeProgram()
        for name in self.beam_names:
            program.add_block(name, M)
        for name in self.split_names:
            program.add_block(name, 1, kind="real")

        one = np.ones((1, 1))
        private_names = self.beam_names[1:]
        bandwidth = self.config.bandwidth_hz
        power_scale = rho * self.config.p_max_mw / bandwidth

        objective = program.form(
            {name: -power_scale * np.eye(M) for name in self.beam_names},
            -rho * self.static_power_mw / bandwidth,
        )
        total_split = program.form({name: -one for name in self.split_names})

        for k in range(K):
            signal_form = program.form({name: self.Q[k] for name in private_names}, 1.0)
            interference_form = program.form(
                {name: self.Q[k] for i, name in enumerate(private_names) if i != k}, 1.0
            )
            with_common = program.form({name: self.Q[k] for name in self.beam_names}, 1.0)
            private_bound = surrogate_form(make_surrogate(interference[k]), interference_form)
            common_bound = surrogate_form(make_surrogate(signal[k]), signal_form)
            own_split = program.form({self.split_names[k]: one})

            if self.weights[k] > 0:
                objective = objective.plus(own_split, self.weights[k])
                objective = objective.plus(private_bound, self.weights[k])
                program.add_log_term(self.weights[k] / LN2, signal_form)

            program.add_log_constraint(
                f"min_rate_{k + 1}",
                own_split.plus(private_bound).plus(AffineForm(offset=-self.min_rates[k])),
                1.0 / LN2,
                signal_form,
            )
            program.add_log_constraint(
                f"common_rate_{k + 1}",
                common_bound.plus(total_split),
                1.0 / LN2,
                with_common,
            )

        program.maximize(objective)
        program.add_inequality("power", program.trace_form(self.beam_names, -1.0, 1.0))
        return program

    def _hint(self, grams: np.ndarray, split: np.ndarray) -> Dict[str, np.ndarray]:
        K, M = self.num_users, self.num_antennas
        spread = 0.02 * np.eye(M) / (M * (K + 1))
        hint = {name: 0.95 * grams[t] + spread for t, name in enumerate(self.beam_names)}
        for k, name in enumerate(self.split_names):
            hint[name] = np.array([[0.95 * max(split[k], 0.0) + 1e-6]])
        return hint

    def purify(self, grams: np.ndarray) -> np.ndarray:
        """
        Rank-one private blocks and a reduced-rank common block.

        Each private block keeps its own user's received power while its
        interference at the other users and its trace can only drop. The
        common block keeps the received power of every user.
        """
        purified = np.array(grams, dtype=complex, copy=True)
        for t, gram in enumerate(grams):
            if float(np.real(np.trace(gram))) <= NEGLIGIBLE_TRACE:
                continue
            if t == 0:
                purified[t] = reduce_rank(gram, list(self.Q))
            else:
                purified[t] = purify_toward(gram, self.effective[t - 1])
        return purified

    def _extract(
        self,
        grams: np.ndarray,
        rho: float,
    ) -> tuple[np.ndarray, float, bool]:
        """Normalized beam vectors from relaxed Gram matrices."""
        vectors = np.zeros((self.num_users + 1, self.num_antennas), dtype=complex)
        ratios = np.ones(self.num_users + 1)
        for t, gram in enumerate(grams):
            if float(np.real(np.trace(gram))) <= NEGLIGIBLE_TRACE:
                continue
            vectors[t], ratios[t] = principal_component(gram)
        min_ratio = float(ratios.min())
        if min_ratio >= RANK_ONE_THRESHOLD:
            return vectors, min_ratio, False

        logger.warning(f"Beam rank ratio {min_ratio:.4f}; using Gaussian randomization")
        num = self.settings.randomization_candidates
        budget = float(sum(np.real(np.trace(g)) for g in grams))
        low = [t for t in range(len(grams)) if ratios[t] < RANK_ONE_THRESHOLD]
        draws = {t: gaussian_candidates(grams[t], self.rng, num) for t in low}

        def score(normalized: np.ndarray) -> float:
            beams = BeamformingSet.from_stacked(np.sqrt(self.config.p_max_mw) * normalized)
            rates = self.rates(beams)
            repaired = repair_split(rates, np.zeros(self.num_users), self.min_rates)
            if repaired is None:
                return float("-inf")
            return dinkelbach_value(
                rates, repaired, beams, self.config, rho, self.static_power_mw
            )

        best, best_score, randomized = vectors, score(vectors), False
        for j in range(num):
            candidate = vectors.copy()
            for t in low:
                candidate[t] = draws[t][j]
            norm_sq = float(np.sum(np.abs(candidate) ** 2))
            if norm_sq <= 0:
                continue
            candidate = candidate * np.sqrt(budget / norm_sq)
            value = score(candidate)
            if value > best_score:
                best, best_score, randomized = candidate, value, True
        return best, min_ratio, randomized

    def run(
        self,
        beams: BeamformingSet,
        split: CommonRateSplit,
        rho: float,
    ) -> BeamformingResult:
        """
        SCA loop, rank-one extraction and acceptance test.

        Args:
            beams: Current (feasible) beamformers
            split: Current common-rate split
            rho: Dinkelbach parameter, bits/mJ

        Returns:
            BeamformingResult; on rejection it carries the input iterate
        """
        p_max = self.config.p_max_mw
        tol = self.settings.feasibility_tol
        start_split = np.clip(np.asarray(split.C, dtype=float), 0.0, None)
        start_value = self.value(beams, start_split, rho)
        grams = beams.grams() / p_max
        current_split = start_split
        hint = self._hint(grams, current_split)

        path: List[float] = []
        previous = start_value / self.config.bandwidth_hz
        relaxed: Dict[str, np.ndarray] = {}
        for iteration in range(self.settings.max_inner_iterations):
            program = self.build_program(grams, current_split, rho)
            program.set_initial_point(hint)
            solution = solve(program, tol=self.solver.tol, max_iter=self.solver.max_iter)
            if not solution.optimal:
                logger.debug(
                    f"Beamforming SCA iteration {iteration} ended with {solution.status.value}"
                )
                if not path:
                    return BeamformingResult(
                        accepted=False,
                        status=f"solver_{solution.status.value}",
                        beams=beams,
                        split=split,
                    )
                break
            relaxed = solution.values
            grams = np.stack([solution.values[name] for name in self.beam_names])
            current_split = np.array(
                [float(solution.values[name][0, 0]) for name in self.split_names]
            )
            path.append(solution.objective)
            hint = solution.values
            if solution.objective - previous <= self.settings.inner_tol * max(1.0, abs(previous)):
                break
            previous = solution.objective

        grams = self.purify(grams)
        relaxed = {**relaxed, **dict(zip(self.beam_names, grams))}
        vectors, min_ratio, randomized = self._extract(grams, rho)
        candidate = BeamformingSet.from_stacked(np.sqrt(p_max) * vectors)
        result = BeamformingResult(
            accepted=False,
            status="accepted",
            objective=path[-1],
            surrogate_path=path,
            min_rank_ratio=min_ratio,
            randomized=randomized,
            relaxed=relaxed,
            beams=beams,
            split=split,
        )

        rates = self.rates(candidate)
        repaired = repair_split(rates, current_split, self.min_rates)
        if repaired is None:
            result.status = "rejected_split"
            logger.warning("Beamforming candidate cannot meet the minimum rates")
            return result

        shortfall, excess = rate_shortfalls(rates, repaired, self.min_rates)
        over_power = candidate.transmit_power() - p_max
        value = dinkelbach_value(
            rates, repaired, candidate, self.config, rho, self.static_power_mw
        )
        if max(shortfall, excess, over_power) > tol:
            result.status = "rejected_infeasible"
        elif value < start_value - MONOTONE_SLACK * max(1.0, abs(start_value)):
            result.status = "rejected_objective"
        else:
            result.accepted = True
            result.beams = candidate
            result.split = CommonRateSplit(C=repaired)
            return result

        logger.warning(f"Beamforming update {result.status}; keeping previous beams")
        return result


class PhaseStep:
    """
    Phase-shift update for fixed beams and common-rate split.

    Every user k reads one PSD block (the stacked EIA block, or the block of
    its serving IRS). The relaxed variable of block b is V_b = v_b v_b^H
    with unit diagonal, where v_b ends with the fixed coefficient 1.

    Args:
        user_vectors: (K, K+1, D) composite-times-beam vectors d_{k,tau}
        reader: (K,) block read by each user
        num_blocks: Number of blocks; blocks nobody reads are left out
        noise: (K,) noise powers
        split: Current common-rate split
        config: Scenario parameters (weights, minimum rates)
    """

    def __init__(
        self,
        user_vectors: np.ndarray,
        reader: Sequence[int],
        num_blocks: int,
        noise: np.ndarray,
        split: CommonRateSplit,
        config: SystemConfig,
        solver: Optional[SolverSettings] = None,
        settings: Optional[OptimizerSettings] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        self.user_vectors = np.asarray(user_vectors, dtype=complex)
        self.reader = np.asarray(reader, dtype=int)
        self.num_blocks = num_blocks
        self.noise = np.asarray(noise, dtype=float)
        self.split = np.asarray(split.C, dtype=float)
        self.config = config
        self.solver = solver or SolverSettings()
        self.settings = settings or OptimizerSettings()
        self.rng = rng if rng is not None else np.random.default_rng(0)

        self.num_users = self.user_vectors.shape[0]
        self.dim = self.user_vectors.shape[2]
        self.weights = np.asarray(config.weights, dtype=float)
        self.min_rates = np.asarray(config.min_rates, dtype=float)
        self.active_blocks = sorted(set(self.reader.tolist()))
        d = self.user_vectors
        self.Q = d[:, :, :, None] * d[:, :, None, :].conj() / self.noise[:, None, None, None]
        # Rate targets in bits, kept PHASE_RATE_MARGIN below the constraint levels
        self.private_targets = self.min_rates - self.split - PHASE_RATE_MARGIN
        self.common_targets = np.full(
            self.num_users, float(self.split.sum()) - PHASE_RATE_MARGIN
        )

    @property
    def sinr_targets(self) -> np.ndarray:
        return 2.0 ** self.private_targets - 1.0

    @property
    def common_sinr_targets(self) -> np.ndarray:
        return 2.0 ** self.common_targets - 1.0

    def anchor_targets(self, current: np.ndarray) -> None:
        """
        Lower the rate targets to PHASE_RATE_MARGIN below what `current` reaches.

        The current phases then satisfy every program constraint strictly,
        even when the split makes a minimum-rate constraint tight.
        """
        rates = self.rates(current)
        self.private_targets = np.minimum(
            self.private_targets, rates.private - PHASE_RATE_MARGIN
        )
        self.common_targets = np.minimum(self.common_targets, rates.common - PHASE_RATE_MARGIN)

    @staticmethod
    def block_name(b: int) -> str:
        return f"V{b + 1}"

    def rates(self, vectors: np.ndarray) -> RateSet:
        """Rates for block vectors (num_blocks, D)."""
        chosen = vectors[self.reader]
        projections = np.einsum("kd,ktd->kt", chosen.conj(), self.user_vectors)
        return rates_from_gains(np.abs(projections) ** 2, self.noise)

    def objective(self, vectors: np.ndarray) -> float:
        """Weighted sum of private rates (the only phase-dependent EE term)."""
        return float(np.dot(self.weights, self.rates(vectors).private))

    def _received(self, relaxed: Dict[str, np.ndarray]) -> np.ndarray:
        received = np.zeros((self.num_users, self.num_users + 1))
        for k in range(self.num_users):
            V = relaxed[self.block_name(self.reader[k])]
            received[k] = np.einsum("tij,ji->t", self.Q[k], V).real
        return received

    def build_program(self, relaxed: Dict[str, np.ndarray]) -> ConeProgram:
        """Surrogate program expanded at the relaxed block values."""
        K = self.num_users
        received = self._received(relaxed)
        signal = received[:, 1:].sum(axis=1) + 1.0
        interference = signal - received[np.arange(K), np.arange(K) + 1]

        sinr_targets = self.sinr_targets
        common_targets = self.common_sinr_targets

        program = ConeProgram()
        for b in self.active_blocks:
            program.add_block(self.block_name(b), self.dim)
            program.pin_diagonal(self.block_name(b), 1.0)

        objective = AffineForm()
        for k in range(K):
            name = self.block_name(self.reader[k])
            private = self.Q[k, 1:]
            own = self.Q[k, k + 1]
            signal_form = program.form({name: private.sum(axis=0)}, 1.0)
            interference_form = program.form({name: private.sum(axis=0) - own}, 1.0)
            if self.weights[k] > 0:
                bound = surrogate_form(make_surrogate(interference[k]), interference_form)
                objective = objective.plus(bound, self.weights[k])
                program.add_log_term(self.weights[k] / LN2, signal_form)

            target = sinr_targets[k]
            if target > 0:
                program.add_inequality(
                    f"min_rate_{k + 1}",
                    program.form(
                        {name: own - target * (private.sum(axis=0) - own)}, -target
                    ),
                )
            common_target = common_targets[k]
            if common_target > 0:
                program.add_inequality(
                    f"common_rate_{k + 1}",
                    program.form(
                        {name: self.Q[k, 0] - common_target * private.sum(axis=0)},
                        -common_target,
                    ),
                )

        program.maximize(objective)
        return program

    def _violation(self, vectors: np.ndarray, users: np.ndarray) -> float:
        rates = self.rates(vectors)
        shortfall = np.clip(self.min_rates - self.split - rates.private, 0.0, None)
        excess = np.clip(self.split.sum() - rates.common, 0.0, None)
        return float(np.sum(shortfall[users]) + np.sum(excess[users]))

    def _extract(
        self,
        relaxed: Dict[str, np.ndarray],
        current: np.ndarray,
    ) -> tuple[np.ndarray, float, bool]:
        vectors = current.copy()
        ratios = []
        randomized = False
        for b in self.active_blocks:
            users = np.flatnonzero(self.reader == b)

            def project(candidate: np.ndarray) -> np.ndarray:
                anchor = candidate[-1] if abs(candidate[-1]) > 0 else 1.0
                return np.exp(1j * np.angle(candidate / anchor))

            def score(candidate: np.ndarray, b: int = b, users: np.ndarray = users) -> float:
                trial = vectors.copy()
                trial[b] = candidate
                value = float(np.dot(self.weights[users], self.rates(trial).private[users]))
                return value - RANDOMIZATION_PENALTY * self._violation(trial, users)

            extracted = rank_one_extract(
                relaxed[self.block_name(b)],
                project=project,
                score=score,
                rng=self.rng,
                num_candidates=self.settings.randomization_candidates,
            )
            vectors[b] = project(extracted.vector)
            ratios.append(extracted.ratio)
            randomized = randomized or extracted.randomized
        return vectors, float(min(ratios)) if ratios else 1.0, randomized

    def interior_hint(
        self,
        program: ConeProgram,
        relaxed: Dict[str, np.ndarray],
    ) -> Dict[str, np.ndarray]:
        """
        Mixture (1 - eps) V + eps I with the largest eps in INTERIOR_WEIGHTS
        that satisfies every inequality of `program` strictly. The unit
        diagonal is kept; 0.9 V + 0.1 I is returned when no weight works.
        """
        eye = np.eye(self.dim)
        for eps in INTERIOR_WEIGHTS:
            mixed = {name: (1.0 - eps) * value + eps * eye for name, value in relaxed.items()}
            if program.inequality_slack(mixed) > 0:
                return mixed
        logger.debug("Current phases are not strictly feasible; leaving the start to phase one")
        return {name: 0.9 * value + 0.1 * eye for name, value in relaxed.items()}

    def run(self, current: np.ndarray) -> PhaseResult:
        """
        SCA loop, extraction and acceptance test.

        Args:
            current: (num_blocks, D) current block vectors (trailing entry 1)

        Returns:
            PhaseResult; on rejection it carries `current`
        """
        current = np.asarray(current, dtype=complex)
        tol = self.settings.feasibility_tol
        start_objective = self.objective(current)
        self.anchor_targets(current)
        relaxed = {
            self.block_name(b): np.outer(current[b], current[b].conj())
            for b in self.active_blocks
        }
        hint: Optional[Dict[str, np.ndarray]] = None

        path: List[float] = []
        previous = start_objective
        for iteration in range(self.settings.max_inner_iterations):
            program = self.build_program(relaxed)
            if hint is None:
                hint = self.interior_hint(program, relaxed)
            program.set_initial_point(hint)
            solution = solve(program, tol=self.solver.tol, max_iter=self.solver.max_iter)
            if not solution.optimal:
                logger.debug(f"Phase SCA iteration {iteration} ended with {solution.status.value}")
                if not path:
                    return PhaseResult(
                        accepted=False,
                        status=f"solver_{solution.status.value}",
                        vectors=current,
                    )
                break
            relaxed = solution.values
            hint = solution.values
            path.append(solution.objective)
            if solution.objective - previous <= self.settings.inner_tol * max(1.0, abs(previous)):
                break
            previous = solution.objective

        vectors, min_ratio, randomized = self._extract(relaxed, current)
        result = PhaseResult(
            accepted=False,
            status="accepted",
            objective=path[-1],
            surrogate_path=path,
            min_rank_ratio=min_ratio,
            randomized=randomized,
            relaxed=relaxed,
            vectors=current,
        )
        shortfall, excess = rate_shortfalls(self.rates(vectors), self.split, self.min_rates)
        new_objective = self.objective(vectors)
        if max(shortfall, excess) > tol:
            result.status = "rejected_infeasible"
        elif new_objective < start_objective - MONOTONE_SLACK * max(1.0, abs(start_objective)):
            result.status = "rejected_objective"
        else:
            result.accepted = True
            result.vectors = vectors
            return result

        logger.warning(f"Phase update {result.status}; keeping previous phases")
        return result
