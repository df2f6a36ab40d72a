"""CSV/JSON emission of run results and re-aggregation of per-record files."""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from app.core.errors import OutputError
from app.models.experiment import (
    RECORD_COLUMNS,
    TRACE_COLUMNS,
    ExperimentKind,
    OutputFormat,
    RunResult,
    StrategySummary,
)

logger = logging.getLogger(__name__)

RECORDS_FILE = "records.csv"
TRACES_FILE = "traces.csv"
SUMMARY_FILE = "summary.json"
ORACLE_FILE = "oracle.json"
_LEVEL_SEP = "|alpha="


def strategy_label(name: str, alpha: float, primary_alpha: float) -> str:
    """Record label for a strategy at one test level; the primary level keeps the bare name."""
    return name if alpha == primary_alpha else f"{name}{_LEVEL_SEP}{alpha:g}"


def split_label(label: str, primary_alpha: float) -> tuple[str, float]:
    if _LEVEL_SEP in label:
        name, alpha = label.split(_LEVEL_SEP, 1)
        return name, float(alpha)
    return label, primary_alpha


def sanitize(value: Any) -> Any:
    """Replace non-finite floats with 'inf', '-inf' or 'nan' so the JSON stays standard."""
    if isinstance(value, dict):
        return {k: sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def _finite_or_none(value: float) -> Optional[float]:
    value = float(value)
    return None if math.isnan(value) else value


def summarize_records(
    records: Union[pd.DataFrame, List[Dict[str, Any]]],
    kind: ExperimentKind,
    primary_alpha: float,
) -> List[StrategySummary]:
    """Per-strategy aggregates; works the same on in-memory records and a re-read CSV."""
    df = records if isinstance(records, pd.DataFrame) else pd.DataFrame(records, columns=RECORD_COLUMNS)
    summaries = []
    for label, group in df.groupby("strategy", sort=False):
        _, alpha = split_label(label, primary_alpha)
        count = len(group)
        growth = group["growth"].to_numpy(dtype=float)
        log_wealth = group["log_wealth"].to_numpy(dtype=float)
        with np.errstate(invalid="ignore"):
            summary: Dict[str, Any] = {
                "strategy": label,
                "replications": count,
                "mean_log_wealth": _finite_or_none(log_wealth.mean()),
                "mean_growth": _finite_or_none(growth.mean()),
                "se_growth": _finite_or_none(growth.std(ddof=1) / math.sqrt(count)) if count > 1 else None,
            }

        if kind in (ExperimentKind.REJECT_TIMES, ExperimentKind.TYPE1):
            tau = group["n_or_tau"].to_numpy(dtype=float)
            censored = group["censored"].to_numpy(dtype=bool)
            censored_fraction = float(censored.mean())
            crossing = 1.0 - censored_fraction
            summary.update(
                alpha=alpha,
                mean_tau=float(tau.mean()),
                se_tau=float(tau.std(ddof=1) / math.sqrt(count)) if count > 1 else None,
                median_tau=float(np.median(tau)),
                q10_tau=float(np.quantile(tau, 0.1)),
                q90_tau=float(np.quantile(tau, 0.9)),
                censored_fraction=censored_fraction,
                mean_tau_is_lower_bound=censored_fraction > 0.0,
                tau_over_log_inv_alpha=float(tau.mean()) / math.log(1.0 / alpha),
                crossing_fraction=crossing,
                crossing_se=math.sqrt(crossing * (1.0 - crossing) / count),
            )
        summaries.append(StrategySummary(**summary))
    return summaries


def load_records(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Records file not found: {path}")
    return pd.read_csv(path)


class ResultWriter:
    """Writes records.csv, traces.csv and summary.json into one directory."""

    def __init__(self, out_dir: str = "results"):
        self.out_dir = Path(out_dir)
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Cannot create output directory {self.out_dir}: {e}") from e

    def _save_csv(self, frame: pd.DataFrame, file_path: Path) -> Path:
        try:
            frame.to_csv(file_path, index=False, lineterminator="\n")
        except OSError as e:
            raise OutputError(f"Cannot write {file_path}: {e}") from e
        return file_path

    def _save_json(self, data: Dict[str, Any], file_path: Path) -> Path:
        try:
            with open(file_path, "w") as f:
                json.dump(sanitize(data), f, indent=2, allow_nan=False)
                f.write("\n")
        except OSError as e:
            raise OutputError(f"Cannot write {file_path}: {e}") from e
        return file_path

    def write_records(self, result: RunResult) -> Path:
        frame = pd.DataFrame([r.model_dump() for r in result.records], columns=RECORD_COLUMNS)
        return self._save_csv(frame, self.out_dir / RECORDS_FILE)

    def write_traces(self, result: RunResult) -> Path:
        frame = pd.DataFrame([t.model_dump() for t in result.traces], columns=TRACE_COLUMNS)
        return self._save_csv(frame, self.out_dir / TRACES_FILE)

    def write_summary(self, result: RunResult) -> Path:
        return self._save_json(result.summary.model_dump(mode="python"), self.out_dir / SUMMARY_FILE)

    def write_oracle(self, report: Dict[str, Any]) -> Path:
        path = self._save_json(report, self.out_dir / ORACLE_FILE)
        logger.info("Wrote %s", path)
        return path

    def emit(self, result: RunResult, output_format: OutputFormat = OutputFormat.BOTH, traces: bool = True) -> List[Path]:
        output_format = OutputFormat(output_format)
        written = []
        if output_format in (OutputFormat.CSV, OutputFormat.BOTH):
            written.append(self.write_records(result))
            if traces and result.traces:
                written.append(self.write_traces(result))
        if output_format in (OutputFormat.JSON, OutputFormat.BOTH):
            written.append(self.write_summary(result))
        for path in written:
            logger.info("Wrote %s", path)
        return written


def emit(
    result: RunResult,
    out_dir: str,
    output_format: OutputFormat = OutputFormat.BOTH,
    traces: bool = True,
) -> List[Path]:
    return ResultWriter(out_dir).emit(result, output_format, traces)
