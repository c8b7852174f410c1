"""Experiment execution: grid x seeds x schemes dispatched to a worker pool."""
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

from dotenv import load_dotenv

from src.baselines.runner import BaselineKind, run_baseline
from src.errors import ConfigError, InfeasibleError
from src.harness.records import ExperimentRecord, write_results
from src.harness.spec import (
    PROPOSED_SCHEMES,
    ExperimentSpec,
    apply_sweep,
    check_guardrails,
)
from src.metrics.rates import evaluate_solution
from src.metrics.types import Scheme
from src.optimization.eia import run_eia
from src.optimization.oia import run_oia
from src.optimization.settings import OptimizerSettings, SolverSettings
from src.scenario.channels import assemble_composites, draw_scenario
from src.scenario.config import SystemConfig

load_dotenv()

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunTask:
    """One independent optimizer run."""

    index: int
    experiment: str
    seed: int
    sweep_value: float
    scheme: str
    pipeline: Scheme
    config: SystemConfig
    solver: SolverSettings
    settings: OptimizerSettings

    @property
    def run_id(self) -> str:
        return f"{self.index:05d}-{self.scheme}-{self.pipeline.value}-{self.seed}"


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count from the argument or RSMA_WORKERS (default 1)."""
    if workers is None:
        raw = os.getenv("RSMA_WORKERS", "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ConfigError(f"RSMA_WORKERS must be an integer, got {raw!r}")
    if workers < 1:
        raise ConfigError(f"Worker count must be positive, got {workers}")
    return workers


def build_tasks(
    spec: ExperimentSpec,
    config: SystemConfig,
    solver: SolverSettings,
    settings: OptimizerSettings,
) -> List[RunTask]:
    """Expand the spec in grid, seed, scheme, pipeline order."""
    tasks: List[RunTask] = []
    for value in spec.grid:
        swept = apply_sweep(spec.experiment, config, value)
        for seed in spec.seeds:
            for scheme in spec.schemes:
                if scheme in PROPOSED_SCHEMES:
                    pipelines = (Scheme(scheme),)
                else:
                    pipelines = spec.baseline_pipelines
                for pipeline in pipelines:
                    tasks.append(
                        RunTask(
                            index=len(tasks),
                            experiment=spec.experiment,
                            seed=seed,
                            sweep_value=float(value),
                            scheme=scheme,
                            pipeline=Scheme(pipeline),
                            config=swept,
                            solver=solver,
                            settings=settings,
                        )
                    )
    return tasks


def execute_task(task: RunTask) -> ExperimentRecord:
    """
    Draw the seeded scenario and run one scheme on it.

    An infeasible start is recorded with status 'infeasible' and NaN metrics
    rather than aborting the experiment.
    """
    start = time.perf_counter()
    _, channels = draw_scenario(task.config, seed=task.seed)
    common = {
        "run_id": task.run_id,
        "experiment": task.experiment,
        "seed": task.seed,
        "sweep_value": task.sweep_value,
        "scheme": task.scheme,
        "pipeline": task.pipeline.value,
    }
    try:
        if task.scheme in PROPOSED_SCHEMES:
            pipeline = run_eia if task.pipeline == Scheme.EIA else run_oia
            state = pipeline(
                channels, task.config, task.solver, task.settings, seed=task.seed
            )
            metrics = evaluate_solution(
                task.pipeline,
                assemble_composites(channels),
                state.beams,
                state.phases,
                state.split,
                task.config,
                assoc=getattr(state, "assoc", None),
            )
            ee, rate, power = metrics.weighted_ee, metrics.weighted_sum_rate, metrics.power_mw
        else:
            result = run_baseline(
                BaselineKind(task.scheme),
                channels,
                task.config,
                scheme=task.pipeline,
                seed=task.seed,
                solver=task.solver,
                settings=task.settings,
            )
            state = result.state
            ee, rate = result.weighted_ee, result.weighted_sum_rate
            power = float(state.trace["power_mw"].iloc[-1])
    except InfeasibleError as e:
        logger.warning(f"Run {task.run_id} is infeasible: {e}")
        return ExperimentRecord(
            **common,
            status="infeasible",
            iterations=0,
            weighted_ee=float("nan"),
            weighted_sum_rate=float("nan"),
            power_mw=float("nan"),
            wall_time_s=time.perf_counter() - start,
        )

    return ExperimentRecord(
        **common,
        status=state.status,
        iterations=state.iteration,
        weighted_ee=ee,
        weighted_sum_rate=rate,
        power_mw=power,
        wall_time_s=time.perf_counter() - start,
        trace=state.trace,
    )


def prepare_output_dir(output_dir: str | Path) -> Path:
    """
    Create the output directory and make sure files can be written in it.

    Raises:
        OSError: directory cannot be created or written
    """
    output = Path(output_dir)
    try:
        output.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryFile(dir=output):
            pass
    except OSError as e:
        logger.error(f"Output directory {output} is not writable: {e}")
        raise
    return output


def run_experiment(
    spec: ExperimentSpec,
    config: SystemConfig,
    solver: Optional[SolverSettings] = None,
    settings: Optional[OptimizerSettings] = None,
    workers: Optional[int] = None,
    output_dir: Optional[str | Path] = None,
) -> Dict[str, Path]:
    """
    Run every (grid value, seed, scheme) of a spec and write the CSVs.

    Runs are independent and dispatched to a process pool; records are
    collected in spec order and written once by the caller's process.

    Args:
        spec: Experiment to run
        config: Base scenario parameters (the sweep overrides one field)
        solver: Barrier-method settings
        settings: Loop caps and tolerances
        workers: Pool size (default RSMA_WORKERS, else 1)
        output_dir: Target directory (default RSMA_OUTPUT_DIR, else spec.output_dir)

    Returns:
        Mapping of file kind to path

    Raises:
        ConfigError: guardrail violation, found before any run
        OSError: output directory not writable, found before any run
    """
    check_guardrails(spec, config)
    solver = solver or SolverSettings()
    settings = settings or OptimizerSettings()
    workers = resolve_workers(workers)
    output = prepare_output_dir(output_dir or os.getenv("RSMA_OUTPUT_DIR") or spec.output_dir)
    tasks = build_tasks(spec, config, solver, settings)
    logger.info(f"Running {spec.experiment}: {len(tasks)} runs on {workers} workers")

    if workers == 1:
        records = [execute_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(execute_task, tasks))

    try:
        paths = write_results(records, output)
    except OSError as e:
        logger.error(f"Cannot write results to {output}: {e}")
        raise
    return paths
