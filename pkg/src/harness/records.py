"""Per-run records and the CSV files an experiment produces."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from src.optimization.eia import TRACE_COLUMNS

logger = logging.getLogger(__name__)

RECORD_COLUMNS = [
    "run_id",
    "experiment",
    "seed",
    "sweep_value",
    "scheme",
    "pipeline",
    "status",
    "iterations",
    "weighted_ee",
    "weighted_sum_rate",
    "power_mw",
    "wall_time_s",
]
RUN_TRACE_COLUMNS = ["run_id", "seed", "sweep_value", "scheme", "pipeline"] + TRACE_COLUMNS
SUMMARY_COLUMNS = [
    "experiment",
    "sweep_value",
    "scheme",
    "pipeline",
    "metric",
    "count",
    "median",
    "q1",
    "q3",
]
SUMMARY_METRICS = ("weighted_ee", "weighted_sum_rate")
GROUP_KEYS = ["experiment", "sweep_value", "scheme", "pipeline"]
TIMING_COLUMNS = ["wall_time_s"]
FLOAT_FORMAT = "%.17g"


@dataclass(eq=False)
class ExperimentRecord:
    """
    Outcome of one (sweep value, seed, scheme) run.

    Attributes:
        run_id: Stable identifier derived from the run's position in the spec
        experiment: Experiment kind
        seed: Root seed
        sweep_value: Grid value
        scheme: EIA, OIA or a baseline tag
        pipeline: Optimizer the run used (EIA or OIA)
        status: 'converged', 'max_iter' or 'infeasible'
        iterations: Outer iterations run
        weighted_ee: Final weighted EE in bits/mJ (NaN when infeasible)
        weighted_sum_rate: Final weighted sum rate in bits/s/Hz
        power_mw: Final total power consumption
        wall_time_s: Elapsed time of the run
        trace: Per-iteration optimizer trace
    """

    run_id: str
    experiment: str
    seed: int
    sweep_value: float
    scheme: str
    pipeline: str
    status: str
    iterations: int
    weighted_ee: float
    weighted_sum_rate: float
    power_mw: float
    wall_time_s: float
    trace: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=TRACE_COLUMNS))

    def to_row(self) -> Dict[str, object]:
        return {column: getattr(self, column) for column in RECORD_COLUMNS}


def records_frame(records: Sequence[ExperimentRecord]) -> pd.DataFrame:
    """One row per record, in run order."""
    return pd.DataFrame([record.to_row() for record in records], columns=RECORD_COLUMNS)


def traces_frame(records: Sequence[ExperimentRecord]) -> pd.DataFrame:
    """All iteration traces stacked, tagged with their run."""
    frames = []
    for record in records:
        if record.trace.empty:
            continue
        trace = record.trace.copy()
        trace.insert(0, "pipeline", record.pipeline)
        trace.insert(0, "scheme", record.scheme)
        trace.insert(0, "sweep_value", record.sweep_value)
        trace.insert(0, "seed", record.seed)
        trace.insert(0, "run_id", record.run_id)
        frames.append(trace)
    if not frames:
        return pd.DataFrame(columns=RUN_TRACE_COLUMNS)
    return pd.concat(frames, ignore_index=True)[RUN_TRACE_COLUMNS]


def summarize(results: pd.DataFrame) -> pd.DataFrame:
    """
    Median and quartiles per sweep value and scheme.

    Infeasible runs (NaN metrics) are left out of the statistics but the
    group still appears with its count of usable runs.

    Args:
        results: Output of records_frame (or the results CSV read back)

    Returns:
        DataFrame with SUMMARY_COLUMNS
    """
    rows = []
    for key, group in results.groupby(GROUP_KEYS, sort=True):
        for metric in SUMMARY_METRICS:
            values = group[metric].dropna().astype(float)
            rows.append(
                {
                    **dict(zip(GROUP_KEYS, key)),
                    "metric": metric,
                    "count": int(len(values)),
                    "median": float(values.median()) if len(values) else np.nan,
                    "q1": float(values.quantile(0.25)) if len(values) else np.nan,
                    "q3": float(values.quantile(0.75)) if len(values) else np.nan,
                }
            )
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def write_results(records: List[ExperimentRecord], output_dir: str | Path) -> Dict[str, Path]:
    """
    Write results.csv, traces.csv and summary.csv.

    Args:
        records: Runs in spec order
        output_dir: Target directory (created if missing)

    Returns:
        Mapping of file kind to path
    """
    output = Path(output_dir)
    output.mkdir(parents=True, exist_ok=True)

    results = records_frame(records)
    paths = {
        "results": output / "results.csv",
        "traces": output / "traces.csv",
        "summary": output / "summary.csv",
    }
    results.to_csv(paths["results"], index=False, float_format=FLOAT_FORMAT)
    traces_frame(records).to_csv(paths["traces"], index=False, float_format=FLOAT_FORMAT)
    summarize(results).to_csv(paths["summary"], index=False, float_format=FLOAT_FORMAT)

    logger.info(f"Saved {len(records)} records to {output}")
    return paths
