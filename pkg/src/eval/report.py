from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .metrics import METRICS, REVERSED, Direction, normalized_direction


logger = logging.getLogger("eval")

# dataset -> metric -> method -> value
Table = Dict[str, Dict[str, Dict[str, Optional[float]]]]


def _empty(datasets: Sequence[str], metrics: Sequence[str]) -> Table:
    return {d: {m: {} for m in metrics} for d in datasets}


@dataclass
class MetricReport:
    """Per (dataset, metric, method) mean raw scores and their normalized form.

    A raw value of None means the method produced no scorable explanation
    in that slice.
    """

    methods: List[str]
    datasets: List[str]
    metrics: List[str] = field(default_factory=lambda: list(METRICS))
    raw: Table = field(default_factory=dict)
    normalized: Dict[str, Dict[str, Dict[str, float]]] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.raw:
            self.raw = _empty(self.datasets, self.metrics)

    @property
    def directions(self) -> Dict[str, str]:
        return {m: normalized_direction(m).value for m in self.metrics}

    def set_raw(self, dataset: str, metric: str, method: str, value: Optional[float]) -> None:
        self.raw[dataset][metric][method] = None if value is None else float(value)

    def slice(self, dataset: str, metric: str, normalized: bool = True) -> Dict[str, Optional[float]]:
        src = self.normalized if normalized else self.raw
        return {m: src[dataset][metric].get(m) for m in self.methods}

    def best(self, dataset: str, metric: str) -> List[str]:
        """Methods holding the best normalized value of a slice (ties included)."""
        values = self.slice(dataset, metric)
        target = max(values.values()) if normalized_direction(metric) == Direction.HIGHER else min(values.values())
        return [m for m in self.methods if values[m] == target]

    def to_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "datasets": list(self.datasets),
            "metrics": list(self.metrics),
            "directions": self.directions,
            "raw": self.raw,
            "normalized": self.normalized,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricReport":
        return cls(
            methods=list(doc["methods"]),
            datasets=list(doc["datasets"]),
            metrics=list(doc["metrics"]),
            raw=doc["raw"],
            normalized=doc.get("normalized", {}),
            notes=list(doc.get("notes", [])),
        )


def normalize_scores(report: MetricReport) -> MetricReport:
    """Per-slice min-max of the raw means into [0, 1].

    Always recomputed from raw, so normalizing twice changes nothing.
    Reversed metrics map to 1 - minmax; constant slices map to 0.5;
    methods without a raw value get the slice-worst score.
    """
    if len(report.methods) < 2:
        raise ValueError("normalization needs at least 2 methods per slice")
    normalized: Dict[str, Dict[str, Dict[str, float]]] = {}
    notes: List[str] = []
    for d in report.datasets:
        normalized[d] = {}
        for metric in report.metrics:
            values = report.slice(d, metric, normalized=False)
            present = {m: v for m, v in values.items() if v is not None}
            out: Dict[str, float] = {}
            if present:
                arr = np.array(list(present.values()), dtype=float)
                lo, hi = float(arr.min()), float(arr.max())
                for m, v in present.items():
                    if hi > lo:
                        s = (v - lo) / (hi - lo)
                        out[m] = 1.0 - s if metric in REVERSED else s
                    else:
                        out[m] = 0.5
                if hi <= lo:
                    notes.append(f"constant slice {d}/{metric}: all values set to 0.5")
            worst = 0.0 if normalized_direction(metric) == Direction.HIGHER else 1.0
            for m in report.methods:
                if m not in out:
                    out[m] = worst if present else 0.5
            normalized[d][metric] = out
    if notes:
        logger.info("Normalization notes", extra={"notes": notes})
    return MetricReport(
        methods=list(report.methods),
        datasets=list(report.datasets),
        metrics=list(report.metrics),
        raw=report.raw,
        normalized=normalized,
        notes=notes,
    )
