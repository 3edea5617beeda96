from __future__ import annotations

import logging
import os
from typing import Dict, List, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.explain.registry import COUNTERFACTUAL_FREE_FAMILY, COUNTERFACTUAL_GUIDED_FAMILY  # noqa: E402

from .runner import RunArtifact  # noqa: E402


logger = logging.getLogger("bench.charts")

MEAN_RANKS_SVG = "mean_ranks.svg"
FAMILY_COLORS = {COUNTERFACTUAL_FREE_FAMILY: "#2b6cb0", COUNTERFACTUAL_GUIDED_FAMILY: "#90cdf4"}

# Fixed ids and no timestamp so identical artifacts give identical bytes
plt.rcParams["svg.hashsalt"] = "sf-bench"
plt.rcParams["svg.fonttype"] = "path"
_SVG_METADATA = {"Date": None, "Creator": None}


def _save(fig, path: str) -> str:
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    return path


def mean_rank_bars(artifact: RunArtifact) -> Tuple[List[str], List[float]]:
    """Methods best first with bar heights n_methods + 1 - mean rank."""
    ranks = artifact.ranks
    ordered = ranks.ordered()
    top = len(ranks.methods) + 1
    return ordered, [top - ranks.mean_rank[m] for m in ordered]


def mean_rank_chart(artifact: RunArtifact, path: str) -> str:
    """Vertical bars shaded by family; the best method is leftmost and tallest."""
    ordered, heights = mean_rank_bars(artifact)
    colors = [FAMILY_COLORS.get(artifact.families.get(m, ""), "#a0aec0") for m in ordered]
    fig, ax = plt.subplots(figsize=(0.6 * len(ordered) + 2.0, 4.0))
    pos = np.arange(len(ordered))
    ax.bar(pos, heights, color=colors)
    ax.set_xticks(pos)
    ax.set_xticklabels(ordered, rotation=30, ha="right")
    ax.set_ylabel("n_methods + 1 - mean rank (higher is better)")
    ax.set_ylim(0, len(artifact.ranks.methods) + 0.5)
    for family, color in FAMILY_COLORS.items():
        ax.bar(0, 0, color=color, label=family.replace("_", " "))
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def radar_chart(artifact: RunArtifact, family: str, path: str) -> str:
    """One polygon per method of the family; radius is n_methods + 1 minus the
    median rank on each metric, so larger is better."""
    ranks = artifact.ranks
    metrics = list(artifact.report.metrics)
    members = [m for m in ranks.methods if artifact.families.get(m) == family]
    n = len(ranks.methods)
    angles = np.linspace(0.0, 2.0 * np.pi, len(metrics), endpoint=False)
    closed = np.concatenate([angles, angles[:1]])
    fig = plt.figure(figsize=(5.0, 5.0))
    ax = fig.add_subplot(111, polar=True)
    cmap = plt.get_cmap("tab10")
    for i, method in enumerate(members):
        radius = np.array([n + 1 - ranks.median_rank[method][metric] for metric in metrics], dtype=float)
        ring = np.concatenate([radius, radius[:1]])
        ax.plot(closed, ring, color=cmap(i % 10), linewidth=1.5, label=method)
        ax.fill(closed, ring, color=cmap(i % 10), alpha=0.15)
    ax.set_xticks(angles)
    ax.set_xticklabels(metrics, fontsize=8)
    ax.set_ylim(0, n)
    ax.set_title(family.replace("_", " "), fontsize=10)
    if members:
        ax.legend(loc="upper right", bbox_to_anchor=(1.3, 1.1), fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def render_charts(artifact: RunArtifact, out_dir: str) -> Dict[str, str]:
    """Write the mean-rank bars and one radar chart per method family."""
    os.makedirs(out_dir, exist_ok=True)
    written: Dict[str, str] = {"mean_ranks": mean_rank_chart(artifact, os.path.join(out_dir, MEAN_RANKS_SVG))}
    families: List[str] = [COUNTERFACTUAL_FREE_FAMILY, COUNTERFACTUAL_GUIDED_FAMILY]
    for family in families:
        if not any(artifact.families.get(m) == family for m in artifact.ranks.methods):
            continue
        written[family] = radar_chart(artifact, family, os.path.join(out_dir, f"radar_{family}.svg"))
    logger.info("Charts written", extra={"out_dir": out_dir, "charts": sorted(written)})
    return written
