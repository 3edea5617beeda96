from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional

import numpy as np
from scipy.stats import rankdata

from .metrics import Direction, normalized_direction
from .report import MetricReport


@dataclass
class RankTable:
    methods: List[str]
    # dataset -> metric -> method -> rank (1 = best)
    ranks: Dict[str, Dict[str, Dict[str, float]]]
    mean_rank: Dict[str, float]
    # method -> metric -> median rank over datasets
    median_rank: Dict[str, Dict[str, float]]

    def ordered(self) -> List[str]:
        """Methods best-first by mean rank; ties keep configuration order."""
        return sorted(self.methods, key=lambda m: (self.mean_rank[m], self.methods.index(m)))

    def to_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "ranks": self.ranks,
            "mean_rank": self.mean_rank,
            "median_rank": self.median_rank,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RankTable":
        return cls(methods=list(doc["methods"]), ranks=doc["ranks"], mean_rank=doc["mean_rank"], median_rank=doc["median_rank"])


def slice_ranks(values: Mapping[str, float], direction: Direction) -> Dict[str, float]:
    """Average-tie ranks, 1 = best under the direction."""
    names = list(values)
    arr = np.array([values[n] for n in names], dtype=float)
    keyed = -arr if direction == Direction.HIGHER else arr
    return {n: float(r) for n, r in zip(names, rankdata(keyed, method="average"))}


def compute_ranks(report: MetricReport, directions: Optional[Mapping[str, Direction]] = None) -> RankTable:
    """Rank methods per normalized slice, then aggregate mean and median ranks."""
    ranks: Dict[str, Dict[str, Dict[str, float]]] = {}
    for d in report.datasets:
        ranks[d] = {}
        for metric in report.metrics:
            direction = (directions or {}).get(metric, normalized_direction(metric))
            ranks[d][metric] = slice_ranks(report.slice(d, metric), Direction(direction))
    mean_rank = {
        m: float(np.mean([ranks[d][metric][m] for d in report.datasets for metric in report.metrics]))
        for m in report.methods
    }
    median_rank = {
        m: {metric: float(np.median([ranks[d][metric][m] for d in report.datasets])) for metric in report.metrics}
        for m in report.methods
    }
    return RankTable(methods=list(report.methods), ranks=ranks, mean_rank=mean_rank, median_rank=median_rank)
