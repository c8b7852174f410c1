"""Independent reference checks with a provenance report.

Each suite compares a library result against a value obtained another way
(closed form, eigenvalues, exhaustive enumeration, direct definition) and
emits one row per case.
"""
import itertools
import logging
from pathlib import Path
from typing import Callable, Dict, List, Sequence

import numpy as np
import pandas as pd

from src.metrics.rates import effective_channels_eia, effective_channels_oia
from src.metrics.types import AssociationMatrix, PhaseConfig
from src.optimization.bnb import bnb_solve, enumerate_assignments
from src.scenario.channels import assemble_composites, draw_scenario
from src.scenario.config import SystemConfig, dbm_to_mw
from src.solver.barrier import solve
from src.solver.program import ConeProgram
from src.surrogate.log_bound import evaluate, make_surrogate

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["suite", "case", "expected", "observed", "error", "passed", "provenance"]


def _row(suite: str, case: str, expected: float, observed: float, tol: float, provenance: str):
    error = abs(observed - expected)
    return {
        "suite": suite,
        "case": case,
        "expected": expected,
        "observed": observed,
        "error": error,
        "passed": bool(error <= tol),
        "provenance": provenance,
    }


def surrogate_suite(samples: int = 10_000, seed: int = 0) -> List[dict]:
    """The affine bound never exceeds -log2(b) and is exact at its expansion point."""
    rng = np.random.default_rng(seed)
    b0 = np.exp(rng.uniform(-10.0, 10.0, samples))
    b = np.exp(rng.uniform(-10.0, 10.0, samples))
    worst_gap = -np.inf
    worst_tight = 0.0
    for point, value in zip(b0, b):
        surrogate = make_surrogate(point)
        exact = -np.log2(value)
        worst_gap = max(worst_gap, (evaluate(surrogate, value) - exact) / max(1.0, abs(exact)))
        exact_at_point = -np.log2(point)
        worst_tight = max(
            worst_tight,
            abs(evaluate(surrogate, point) - exact_at_point) / max(1.0, abs(exact_at_point)),
        )
    return [
        _row(
            "surrogate",
            f"under_estimate_{samples}",
            0.0,
            max(0.0, worst_gap),
            1e-12,
            "closed form -log2(b)",
        ),
        _row("surrogate", f"tight_at_b0_{samples}", 0.0, worst_tight, 1e-12, "closed form -log2(b0)"),
    ]


def solver_suite(instances: int = 10, seed: int = 0, rel_tol: float = 1e-5) -> List[dict]:
    """Small programs with known optima."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(instances):
        dim = int(rng.integers(2, 5))
        raw = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        Q = raw @ raw.conj().T
        power = float(rng.uniform(0.5, 5.0))

        program = ConeProgram()
        program.add_block("X", dim)
        program.maximize(program.form({"X": Q}))
        program.add_inequality("power", program.trace_form(["X"], scale=-1.0, offset=power))
        solution = solve(program)
        expected = power * float(np.linalg.eigvalsh(Q)[-1])
        rows.append(
            _row(
                "solver",
                f"max_trace_{i}",
                expected,
                solution.objective,
                rel_tol * max(1.0, abs(expected)),
                "largest eigenvalue times power",
            )
        )

        coupling = complex(rng.standard_normal(), rng.standard_normal())
        program = ConeProgram()
        program.add_block("V", 2)
        program.maximize(program.form({"V": np.array([[0.0, coupling], [np.conj(coupling), 0.0]])}))
        program.pin_diagonal("V")
        solution = solve(program)
        expected = 2.0 * abs(coupling)
        rows.append(
            _row(
                "solver",
                f"unit_diagonal_{i}",
                expected,
                solution.objective,
                rel_tol * max(1.0, expected),
                "2|q| over unit-diagonal 2x2 PSD matrices",
            )
        )

    program = ConeProgram()
    program.add_block("x", 1, kind="real")
    program.maximize(program.form({"x": np.array([[-1.0]])}))
    program.add_log_term(1.0, program.form({"x": np.array([[1.0]])}))
    solution = solve(program)
    rows.append(
        _row("solver", "log_minus_linear", -1.0, solution.objective, rel_tol, "max ln(x) - x = -1")
    )
    return rows


def bnb_suite(instances: int = 20, seed: int = 0, rel_tol: float = 1e-6) -> List[dict]:
    """Branch and bound against exhaustive enumeration for N, K, a up to 3."""
    rng = np.random.default_rng(seed)
    rows = []
    for num_irs, num_users, capacity in itertools.product((1, 2, 3), repeat=3):
        if num_users > num_irs * capacity:
            continue
        for i in range(instances):
            utility = rng.uniform(0.0, 10.0, (num_irs, num_users))
            irs_cost = rng.uniform(0.0, 5.0, num_irs)
            _, expected = enumerate_assignments(utility, irs_cost, capacity)
            result = bnb_solve(utility, irs_cost, capacity)
            row = _row(
                "bnb",
                f"N{num_irs}_K{num_users}_a{capacity}_{i}",
                expected,
                result.objective,
                rel_tol * max(1.0, abs(expected)),
                "exhaustive enumeration",
            )
            row["passed"] = row["passed"] and result.upper - result.objective <= result.eps + 1e-12
            rows.append(row)
    return rows


def scenario_suite(seed: int = 0) -> List[dict]:
    """Unit conversion and the composite-channel identities."""
    rows = [
        _row("scenario", "p_max_34dbm_mw", 2511.886431509580, dbm_to_mw(34.0), 1e-9, "10^(34/10)"),
        _row("scenario", "noise_minus94dbm_mw", 10.0 ** -9.4, dbm_to_mw(-94.0), 1e-20, "10^(-94/10)"),
    ]
    config = SystemConfig.desk_scale()
    _, channels = draw_scenario(config, seed=seed)
    composites = assemble_composites(channels)
    rng = np.random.default_rng(seed)
    phases = PhaseConfig.random(rng, config.num_irs, config.elements_per_irs)
    direct = channels.combined_channels(phases.reflection_coefficients())
    stacked = effective_channels_eia(composites, phases).conj()
    scale = float(np.max(np.abs(direct)))
    rows.append(
        _row(
            "scenario",
            "eia_composite_identity",
            0.0,
            float(np.max(np.abs(stacked - direct))),
            1e-9 * scale,
            "definition of the end-to-end channel",
        )
    )
    assoc = AssociationMatrix.from_serving(
        [k % config.num_irs for k in range(config.num_users)], config.num_irs
    )
    mask = assoc.matrix.astype(bool)
    direct = channels.combined_channels(phases.reflection_coefficients(), irs_mask=mask)
    stacked = effective_channels_oia(composites, phases, assoc).conj()
    rows.append(
        _row(
            "scenario",
            "oia_composite_identity",
            0.0,
            float(np.max(np.abs(stacked - direct))),
            1e-9 * scale,
            "definition of the end-to-end channel",
        )
    )
    return rows


SUITES: Dict[str, Callable[[], List[dict]]] = {
    "surrogate": surrogate_suite,
    "solver": solver_suite,
    "bnb": bnb_suite,
    "scenario": scenario_suite,
}


def run_oracles(suites: Sequence[str], output: str | Path) -> pd.DataFrame:
    """
    Run the named suites and write the provenance report.

    Args:
        suites: Names from SUITES ('all' runs every suite)
        output: CSV path

    Returns:
        Report DataFrame
    """
    names = list(SUITES) if "all" in suites else list(suites)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValueError(f"Unknown oracle suites: {unknown}")

    rows = []
    for name in names:
        suite_rows = SUITES[name]()
        failed = sum(not row["passed"] for row in suite_rows)
        logger.info(f"Oracle suite {name}: {len(suite_rows)} cases, {failed} failed")
        rows.extend(suite_rows)

    report = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Saved oracle report to {path}")
    return report
