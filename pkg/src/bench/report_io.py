from __future__ import annotations

import logging
import os
from typing import Dict, List

import pandas as pd

from src.util.artifact_store import read_json, write_json, write_text

from .runner import RunArtifact


logger = logging.getLogger("bench.report")

REPORT_JSON = "report.json"
SCORES_CSV = "scores.csv"
RANKS_CSV = "ranks.csv"


def scores_frame(artifact: RunArtifact) -> pd.DataFrame:
    """Metric blocks of method rows; one normalized-score column per dataset
    plus a <dataset>_best flag marking the best value of each slice."""
    report = artifact.report
    rows: List[Dict[str, object]] = []
    for metric in report.metrics:
        best = {d: set(report.best(d, metric)) for d in report.datasets}
        for method in report.methods:
            row: Dict[str, object] = {
                "metric": metric,
                "direction": report.directions[metric],
                "method": method,
                "family": artifact.families.get(method, ""),
            }
            for d in report.datasets:
                row[d] = report.normalized[d][metric][method]
                row[f"{d}_best"] = int(method in best[d])
            rows.append(row)
    return pd.DataFrame(rows)


def ranks_frame(artifact: RunArtifact) -> pd.DataFrame:
    ranks = artifact.ranks
    rows = []
    for method in ranks.ordered():
        row: Dict[str, object] = {
            "method": method,
            "family": artifact.families.get(method, ""),
            "mean_rank": ranks.mean_rank[method],
        }
        for metric, value in ranks.median_rank[method].items():
            row[f"median_{metric}"] = value
        rows.append(row)
    return pd.DataFrame(rows)


def _csv_text(frame: pd.DataFrame) -> str:
    # repr keeps every float bit-identical to report.json
    return frame.to_csv(index=False, float_format=None, lineterminator="\n")


def emit_report(artifact: RunArtifact, out_dir: str) -> Dict[str, str]:
    """Write report.json, scores.csv and ranks.csv into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "report": write_json(artifact.to_dict(), os.path.join(out_dir, REPORT_JSON)),
        "scores": write_text(_csv_text(scores_frame(artifact)), os.path.join(out_dir, SCORES_CSV)),
        "ranks": write_text(_csv_text(ranks_frame(artifact)), os.path.join(out_dir, RANKS_CSV)),
    }
    logger.info("Report written", extra={"out_dir": out_dir})
    return paths


def load_artifact(path: str) -> RunArtifact:
    """Read a report.json (or the directory holding one)."""
    if os.path.isdir(path):
        path = os.path.join(path, REPORT_JSON)
    doc = read_json(path)
    if doc is None:
        raise FileNotFoundError(f"cannot read artifact '{path}'")
    return RunArtifact.from_dict(doc)
