from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from src.data import Dataset, DatasetError, load_dataset, split_kfold
from src.eval import (
    METRICS,
    RAW_DIRECTIONS,
    Direction,
    MetricReport,
    MetricUndefined,
    RankTable,
    RobustnessResult,
    compute_ranks,
    metric_confusability,
    metric_distance,
    metric_plausibility,
    metric_robustness,
    metric_sparsity,
    normalize_scores,
)
from src.explain import ExplainContext, Explainer, ExplanationFailure, create, family_of
from src.model import ModelError, fit_classifier
from src.neural import TrainingDiverged
from src.sf_free.scm import SCMError, SCMSpec, load_scm
from src.sf_guided.nun import find_nun

from .config import ExperimentConfig, MethodEntry
from .fixtures import builtin_dataset
from .seeds import SeedLedger, derive_seed


logger = logging.getLogger("bench.runner")

AGGREGATION = "mean"


def jsonable(value: Any) -> Any:
    """Plain JSON types; numpy scalars unwrapped, non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


@dataclass
class QueryRecord:
    dataset: str
    fold: int
    method: str
    query_index: int
    seed: int
    status: str
    reason: Optional[str] = None
    explanations: List[Dict[str, Any]] = field(default_factory=list)
    metrics: Dict[str, Optional[float]] = field(default_factory=dict)
    robustness: Optional[Dict[str, Any]] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> Dict[str, Any]:
        return jsonable(
            {
                "dataset": self.dataset,
                "fold": self.fold,
                "method": self.method,
                "query_index": self.query_index,
                "seed": self.seed,
                "status": self.status,
                "reason": self.reason,
                "explanations": self.explanations,
                "metrics": self.metrics,
                "robustness": self.robustness,
            }
        )

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "QueryRecord":
        return cls(**doc)


@dataclass
class RunArtifact:
    config: Dict[str, Any]
    records: List[QueryRecord]
    report: MetricReport
    ranks: RankTable
    seeds: Dict[str, Any]
    families: Dict[str, str]
    failures: Dict[str, Dict[str, Dict[str, Dict[str, int]]]]
    dataset_errors: Dict[str, str] = field(default_factory=dict)
    pattern_checks: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return jsonable(
            {
                "config": self.config,
                "metadata": {"aggregation": AGGREGATION},
                "families": self.families,
                "report": self.report.to_dict(),
                "ranks": self.ranks.to_dict(),
                "seeds": self.seeds,
                "failures": self.failures,
                "dataset_errors": self.dataset_errors,
                "pattern_checks": self.pattern_checks,
                "records": [r.to_dict() for r in self.records],
            }
        )

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "RunArtifact":
        return cls(
            config=doc["config"],
            records=[QueryRecord.from_dict(r) for r in doc.get("records", [])],
            report=MetricReport.from_dict(doc["report"]),
            ranks=RankTable.from_dict(doc["ranks"]),
            seeds=doc.get("seeds", {}),
            families=doc.get("families", {}),
            failures=doc.get("failures", {}),
            dataset_errors=doc.get("dataset_errors", {}),
            pattern_checks=doc.get("pattern_checks", {}),
        )


def load_entry(entry, seed: int) -> Tuple[Dataset, Optional[SCMSpec]]:
    if entry.builtin is not None:
        return builtin_dataset(entry.builtin, n=entry.n, seed=seed, name=entry.name)
    ds = load_dataset(entry.csv, entry.schema_file, name=entry.name)
    try:
        scm = load_scm(entry.scm)
    except SCMError as exc:
        raise DatasetError(str(exc)) from exc
    return ds, scm


def score_query(
    explainer: Explainer,
    ctx: ExplainContext,
    q: np.ndarray,
    query_index: int,
    seed: int,
    dataset: str,
    fold: int,
    method: str,
    cfg: ExperimentConfig,
) -> QueryRecord:
    """Explain one query and score every metric; failures become records."""
    base = dict(dataset=dataset, fold=fold, method=method, query_index=query_index, seed=seed)
    try:
        sfs = explainer.explain(q, query_id=query_index, seed=seed)
    except (ExplanationFailure, ModelError, ValueError) as exc:
        logger.warning("Method failed", extra={**base, "reason": str(exc)})
        return QueryRecord(status="failed", reason=str(exc), **base)

    space, std = ctx.train.space, ctx.std
    m = cfg.metrics
    kept = [s for s in sfs if s.valid and space.changed_features(q, s.instance, std, m.sameness)]
    explanations = [s.to_dict() for s in sfs]
    if not kept:
        reason = "no valid explanation that differs from the query"
        return QueryRecord(status="failed", reason=reason, explanations=explanations, **base)

    qc = ctx.query_class(q)
    try:
        cf_class = find_nun(q, ctx, qc).cls
    except ModelError as exc:
        return QueryRecord(status="failed", reason=str(exc), explanations=explanations, **base)

    values: Dict[str, List[float]] = {k: [] for k in ("distance", "plausibility", "confusability", "sparsity")}
    for s in kept:
        values["distance"].append(metric_distance(q, s.instance))
        values["sparsity"].append(metric_sparsity(q, s.instance, space, std, m.ideal_diff, m.sameness))
        try:
            values["plausibility"].append(metric_plausibility(s.instance, ctx.train))
            values["confusability"].append(metric_confusability(s.instance, ctx.train, qc, cf_class))
        except MetricUndefined as exc:
            logger.debug("Metric undefined", extra={**base, "reason": str(exc)})
    metrics: Dict[str, Optional[float]] = {k: (float(np.mean(v)) if v else None) for k, v in values.items()}

    try:
        f_q = explainer.primary(q, seed=seed)
    except (ExplanationFailure, ModelError, ValueError):
        robustness = {"max_ratio": None, "failures": m.perturbations, "n": m.perturbations}
    else:
        rob = metric_robustness(
            lambda x: explainer.primary(x, seed=seed),
            q,
            epsilon=m.epsilon,
            n=m.perturbations,
            seed=derive_seed(seed, "robustness"),
            columns=space.continuous_columns(),
            base=f_q,
        )
        robustness = {"max_ratio": rob.max_ratio, "failures": rob.failures, "n": rob.n}
    return QueryRecord(status="ok", explanations=explanations, metrics=metrics, robustness=robustness, **base)


def _fit_explainer(entry: MethodEntry, ctx: ExplainContext) -> Tuple[Optional[Explainer], Optional[str]]:
    try:
        return create(entry.id, ctx, entry.params), None
    except (ModelError, TrainingDiverged, ValueError) as exc:
        logger.warning("Method could not be fitted", extra={"method": entry.name, "reason": str(exc)})
        return None, str(exc)


def run_fold(
    ds: Dataset,
    scm: Optional[SCMSpec],
    fold: int,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    cfg: ExperimentConfig,
    ledger: SeedLedger,
    jobs: int,
) -> List[QueryRecord]:
    train, test = ds.split(train_idx, test_idx)
    clf = fit_classifier(train, n_trees=cfg.n_trees, seed=ledger.derive(ds.name, fold, "forest"))
    ctx = ExplainContext.build(train, clf, scm=scm, seed=ledger.derive(ds.name, fold, "models"))
    n_queries = test.X.shape[0] if cfg.max_queries_per_fold is None else min(cfg.max_queries_per_fold, test.X.shape[0])
    records: List[QueryRecord] = []
    for entry in cfg.methods:
        explainer, reason = _fit_explainer(entry, ctx)
        units = [(int(test_idx[j]), test.X[j], derive_seed(ledger.master, ds.name, fold, entry.name, int(test_idx[j]))) for j in range(n_queries)]
        if explainer is None:
            records.extend(
                QueryRecord(dataset=ds.name, fold=fold, method=entry.name, query_index=qi, seed=s, status="failed", reason=reason)
                for qi, _, s in units
            )
            continue
        out = Parallel(n_jobs=jobs, prefer="threads")(
            delayed(score_query)(explainer, ctx, q, qi, s, ds.name, fold, entry.name, cfg) for qi, q, s in units
        )
        records.extend(out)
        ok = sum(1 for r in out if r.ok)
        logger.info("Method scored", extra={"dataset": ds.name, "fold": fold, "method": entry.name, "ok": ok, "failed": len(out) - ok})
    return records


def query_values(records: Sequence[QueryRecord], metric: str, slice_max: float) -> List[float]:
    """Defined per-query values of one metric over successful records."""
    if metric == "robustness":
        return [
            RobustnessResult(r.robustness["max_ratio"], r.robustness["failures"], r.robustness["n"]).resolve(slice_max)
            for r in records
            if r.robustness is not None
        ]
    return [r.metrics[metric] for r in records if r.metrics.get(metric) is not None]


def aggregate(records: Sequence[QueryRecord], methods: Sequence[str], datasets: Sequence[str]) -> MetricReport:
    """Mean per-query scores into raw slices.

    Failed robustness perturbations take the slice maximum ratio. A failed
    query counts as the slice's worst per-query value of every metric; a
    method that failed on every query is left missing, which normalization
    turns into the worst score.
    """
    report = MetricReport(methods=list(methods), datasets=list(datasets), metrics=list(METRICS))
    for d in datasets:
        rows = [r for r in records if r.dataset == d]
        ok = [r for r in rows if r.ok]
        ratios = [r.robustness["max_ratio"] for r in ok if r.robustness and r.robustness["max_ratio"] is not None]
        slice_max = max(ratios) if ratios else 0.0
        worst: Dict[str, Optional[float]] = {}
        for metric in METRICS:
            everything = query_values(ok, metric, slice_max)
            if not everything:
                worst[metric] = None
            else:
                worst[metric] = max(everything) if RAW_DIRECTIONS[metric] == Direction.LOWER else min(everything)
        for method in methods:
            mine = [r for r in ok if r.method == method]
            failed = sum(1 for r in rows if r.method == method and not r.ok)
            for metric in METRICS:
                vals = query_values(mine, metric, slice_max)
                if vals and failed and worst[metric] is not None:
                    vals = vals + [worst[metric]] * failed
                report.set_raw(d, metric, method, float(np.mean(vals)) if vals else None)
    return report


def failure_counts(records: Sequence[QueryRecord]) -> Dict[str, Dict[str, Dict[str, Dict[str, int]]]]:
    """method -> dataset -> fold -> {ok, failed}."""
    out: Dict[str, Dict[str, Dict[str, Dict[str, int]]]] = {}
    for r in records:
        cell = out.setdefault(r.method, {}).setdefault(r.dataset, {}).setdefault(str(r.fold), {"ok": 0, "failed": 0})
        cell["ok" if r.ok else "failed"] += 1
    return out


def pattern_checks(report: MetricReport) -> Dict[str, Any]:
    """Soft qualitative checks: DSER tops normalized sparsity, MDN has the
    best confusability, on enough datasets."""
    out: Dict[str, Any] = {}
    n = len(report.datasets)
    for method, metric, needed in (("dser", "sparsity", min(2, n)), ("mdn", "confusability", 1)):
        if method not in report.methods:
            continue
        wins = [d for d in report.datasets if method in report.best(d, metric)]
        passed = len(wins) >= needed
        check = {"metric": metric, "wins": len(wins), "datasets": wins, "needed": needed, "passed": passed}
        if not passed:
            check["note"] = (
                f"{method} was best on {metric} for {len(wins)} of {n} datasets; "
                "see the per-slice normalized scores for the methods that beat it"
            )
        out[method] = check
    return out


def run_benchmark(cfg: ExperimentConfig, seed: int = 0, jobs: int = 1) -> RunArtifact:
    """Full protocol: per dataset and fold train the forest and every method,
    explain capped test-fold queries, score, aggregate, normalize, rank."""
    master = cfg.seed if cfg.seed is not None else seed
    ledger = SeedLedger(master)
    methods = [m.name for m in cfg.methods]
    records: List[QueryRecord] = []
    loaded: List[str] = []
    errors: Dict[str, str] = {}
    for entry in cfg.datasets:
        try:
            ds, scm = load_entry(entry, ledger.derive(entry.name, "fixture"))
        except DatasetError as exc:
            logger.error("Dataset failed to load", extra={"dataset": entry.name, "reason": str(exc)})
            errors[entry.name] = str(exc)
            continue
        try:
            plan = split_kfold(ds, cfg.folds, ledger.derive(ds.name, "folds"))
            kept: List[QueryRecord] = []
            for fold, train_idx, test_idx in plan.folds():
                kept.extend(run_fold(ds, scm, fold, train_idx, test_idx, cfg, ledger, jobs))
                logger.info("Fold complete", extra={"dataset": ds.name, "fold": fold})
        except (DatasetError, ModelError) as exc:
            # a single-class training fold drops the dataset, not the run
            logger.error("Dataset aborted", extra={"dataset": entry.name, "reason": str(exc)})
            errors[entry.name] = str(exc)
            continue
        records.extend(kept)
        loaded.append(ds.name)
    if not loaded:
        raise DatasetError("no dataset could be loaded: " + "; ".join(f"{k}: {v}" for k, v in errors.items()))

    report = normalize_scores(aggregate(records, methods, loaded))
    ranks = compute_ranks(report)
    echo = cfg.echo()
    echo["seed"] = master
    return RunArtifact(
        config=echo,
        records=records,
        report=report,
        ranks=ranks,
        seeds=ledger.to_dict(),
        families={m.name: family_of(m.id) for m in cfg.methods},
        failures=failure_counts(records),
        dataset_errors=errors,
        pattern_checks=pattern_checks(report),
    )
