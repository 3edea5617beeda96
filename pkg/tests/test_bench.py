import json
import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.bench import ConfigError, SeedLedger, derive_seed, load_config, parse_config, run_benchmark
from src.bench.charts import MEAN_RANKS_SVG, mean_rank_bars, render_charts
from src.bench.cli import EXIT_CONFIG, EXIT_DATASET, EXIT_OK, main
from src.bench.fixtures import builtin_dataset
from src.bench.report_io import RANKS_CSV, REPORT_JSON, SCORES_CSV, emit_report, load_artifact
from src.bench.runner import QueryRecord, aggregate, pattern_checks
from src.data import DatasetError, split_kfold
from src.eval import MetricReport, compute_ranks, normalize_scores
from src.explain import METHOD_IDS, ExplainContext, ExplanationFailure, create, family_of
from src.model import fit_classifier
from src.sf_free.mdn import MdnExplainer
from src.util.artifact_store import dumps_canonical


ROOT = Path(__file__).resolve().parents[1]

TINY = {
    "datasets": [{"name": "tiny", "builtin": "two_gaussian", "n": 60}],
    "methods": [{"id": "mdn"}, {"id": "kleor"}],
    "folds": 2,
    "seed": 3,
    "n_trees": 10,
    "metrics": {"perturbations": 5},
    "max_queries_per_fold": 5,
}


@pytest.fixture(scope="module")
def tiny_artifact():
    return run_benchmark(parse_config(TINY))


# --- config ---


def test_config_defaults_are_echoed():
    cfg = parse_config({"datasets": [{"name": "g", "builtin": "two_gaussian"}]})
    echo = cfg.echo()
    assert [m["id"] for m in echo["methods"]] == list(METHOD_IDS)
    assert echo["folds"] == 5
    assert echo["metrics"] == {"epsilon": 0.1, "perturbations": 100, "ideal_diff": 1, "sameness": 0.2}
    params = {m["id"]: m["params"] for m in echo["methods"]}
    assert params["c2c_vae"]["lam"] == 0.2
    assert params["dice"]["k"] == 3
    assert params["kleor"]["variant"] == "attr_sim"
    assert params["piece"]["alpha"] == 0.1


def test_config_schema_alias():
    cfg = parse_config({"datasets": [{"name": "x", "csv": "a.csv", "schema": "a.json"}], "methods": TINY["methods"]})
    assert cfg.datasets[0].schema_file == "a.json"
    assert cfg.echo()["datasets"][0]["schema"] == "a.json"


@pytest.mark.parametrize(
    "override",
    [
        {"methods": [{"id": "mdn"}]},
        {"methods": [{"id": "mdn"}, {"id": "oracle"}]},
        {"methods": [{"id": "mdn"}, {"id": "mdn"}]},
        {"methods": [{"id": "mdn"}, {"id": "dice", "params": {"k": 0}}]},
        {"datasets": [{"name": "a", "builtin": "two_gaussian"}, {"name": "a", "builtin": "causal_chain"}]},
        {"datasets": [{"name": "a", "csv": "a.csv"}]},
        {"datasets": []},
        {"folds": 1},
        {"unexpected": True},
        {"datasets": [{"name": "a", "builtin": "two_gaussian", "rows": 5}]},
        {"methods": [{"id": "mdn", "options": {}}, {"id": "kleor"}]},
        {"metrics": {"eps": 0.1}},
    ],
)
def test_config_errors(override):
    with pytest.raises(ConfigError):
        parse_config({**TINY, **override})


def test_repeated_method_with_labels_is_allowed():
    cfg = parse_config({**TINY, "methods": [{"id": "kleor", "label": "kleor_sim"}, {"id": "kleor", "label": "kleor_attr"}]})
    assert [m.name for m in cfg.methods] == ["kleor_sim", "kleor_attr"]


def test_load_config_resolves_relative_paths(tmp_path):
    cfg_dir = tmp_path / "cfg"
    cfg_dir.mkdir()
    doc = {**TINY, "datasets": [{"name": "x", "csv": "data/x.csv", "schema": "data/x.schema.json"}]}
    (cfg_dir / "exp.json").write_text(json.dumps(doc), encoding="utf-8")
    cfg = load_config(str(cfg_dir / "exp.json"))
    assert cfg.datasets[0].csv == str(cfg_dir / "data" / "x.csv")
    assert cfg.datasets[0].schema_file == str(cfg_dir / "data" / "x.schema.json")
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.json"))


def test_shipped_configs_parse():
    for name in ("default.json", "smoke.json"):
        cfg = load_config(str(ROOT / "configs" / name))
        assert [m.id for m in cfg.methods] == list(METHOD_IDS)


# --- seeds ---


def test_derive_seed_is_stable_and_independent():
    a = derive_seed(0, "tiny", 1, "mdn", 17)
    assert a == derive_seed(0, "tiny", 1, "mdn", 17)
    assert a != derive_seed(0, "tiny", 1, "kleor", 17)
    assert a != derive_seed(1, "tiny", 1, "mdn", 17)
    assert 0 <= a < 2**32
    ledger = SeedLedger(5)
    s = ledger.derive("tiny", "folds")
    assert ledger.to_dict() == {"master": 5, "derived": {"tiny/folds": s}}


# --- runner ---


def test_runner_scores_every_unit(tiny_artifact):
    # 2 methods x 1 dataset x 2 folds x 5 queries
    assert len(tiny_artifact.records) == 20
    assert tiny_artifact.report.datasets == ["tiny"]
    assert tiny_artifact.families == {"mdn": family_of("mdn"), "kleor": family_of("kleor")}
    for method in ("mdn", "kleor"):
        folds = tiny_artifact.failures[method]["tiny"]
        assert sum(c["ok"] + c["failed"] for c in folds.values()) == 10
    ok = [r for r in tiny_artifact.records if r.ok]
    assert ok
    for r in ok:
        assert r.metrics["distance"] > 0.0
        assert r.robustness["n"] == 5
        assert all(e["valid"] for e in r.explanations)
    for metric in tiny_artifact.report.metrics:
        values = tiny_artifact.report.slice("tiny", metric).values()
        assert all(0.0 <= v <= 1.0 for v in values)


def test_runner_is_deterministic(tiny_artifact):
    again = run_benchmark(parse_config(TINY), jobs=2)
    assert dumps_canonical(again.to_dict()) == dumps_canonical(tiny_artifact.to_dict())


def test_pattern_checks_note_failures():
    report = MetricReport(methods=["dser", "mdn"], datasets=["d1", "d2"])
    raw = {
        "d1": {"sparsity": (1.0, 0.5), "confusability": (0.0, -1.0)},
        "d2": {"sparsity": (0.25, 0.5), "confusability": (-1.0, 0.0)},
    }
    for d, metrics in raw.items():
        for metric, (dser, mdn) in metrics.items():
            report.set_raw(d, metric, "dser", dser)
            report.set_raw(d, metric, "mdn", mdn)
    checks = pattern_checks(normalize_scores(report))
    assert checks["dser"]["wins"] == 1 and checks["dser"]["needed"] == 2
    assert not checks["dser"]["passed"] and "note" in checks["dser"]
    assert checks["mdn"]["passed"] and checks["mdn"]["datasets"] == ["d1"]
    assert "note" not in checks["mdn"]


def test_failed_method_gets_worst_scores(monkeypatch):
    def always_fail(self, q, query_id=0, seed=0):
        raise ExplanationFailure("mdn", "forced")

    monkeypatch.setattr(MdnExplainer, "explain", always_fail)
    artifact = run_benchmark(parse_config(TINY))
    counts = artifact.failures["mdn"]["tiny"]
    assert sum(c["failed"] for c in counts.values()) == 10
    assert all(r.reason.endswith("forced") for r in artifact.records if r.method == "mdn")
    report = artifact.report
    assert report.raw["tiny"]["distance"]["mdn"] is None
    assert report.slice("tiny", "distance")["mdn"] == 0.0
    assert report.slice("tiny", "plausibility")["mdn"] == 1.0
    assert artifact.ranks.ordered()[0] == "kleor"


def test_unloadable_datasets_are_reported(tmp_path):
    doc = {**TINY, "datasets": TINY["datasets"] + [{"name": "gone", "csv": str(tmp_path / "no.csv"), "schema": str(tmp_path / "no.json")}]}
    artifact = run_benchmark(parse_config(doc))
    assert "gone" in artifact.dataset_errors
    assert artifact.report.datasets == ["tiny"]
    with pytest.raises(DatasetError):
        run_benchmark(parse_config({**doc, "datasets": doc["datasets"][1:]}))


def test_single_class_training_fold_drops_only_that_dataset(tmp_path):
    labels = ["a"] * 39 + ["b"]
    csv = tmp_path / "rare.csv"
    csv.write_text("x,label\n" + "".join(f"{i},{lab}\n" for i, lab in enumerate(labels)), encoding="utf-8")
    schema = tmp_path / "rare.schema.json"
    schema.write_text(json.dumps({"columns": [{"name": "x"}, {"name": "label", "label": True}]}), encoding="utf-8")
    doc = {**TINY, "datasets": TINY["datasets"] + [{"name": "rare", "csv": str(csv), "schema": str(schema)}]}
    artifact = run_benchmark(parse_config(doc))
    assert artifact.report.datasets == ["tiny"]
    assert "2 classes" in artifact.dataset_errors["rare"]
    assert {r.dataset for r in artifact.records} == {"tiny"}
    assert "rare" in artifact.to_dict()["dataset_errors"]


def _record(method, i, quality=None):
    """quality in [0, 1], higher is better on every metric; None marks a failure."""
    base = dict(dataset="d", fold=0, method=method, query_index=i, seed=i)
    if quality is None:
        return QueryRecord(status="failed", reason="budget exhausted", **base)
    metrics = {"distance": quality, "plausibility": 1.0 - quality, "confusability": -quality, "sparsity": quality}
    return QueryRecord(status="ok", metrics=metrics, robustness={"max_ratio": 1.0 - quality, "failures": 0, "n": 5}, **base)


def test_failed_queries_count_as_slice_worst():
    records = [_record("flaky", 0, 1.0)] + [_record("flaky", i) for i in range(1, 4)]
    records += [_record("steady", i, 0.9) for i in range(4)]
    records += [_record("poor", i, 0.2) for i in range(4)]
    report = aggregate(records, ["flaky", "steady", "poor"], ["d"])
    assert report.raw["d"]["distance"]["flaky"] == pytest.approx(0.4)
    assert report.raw["d"]["plausibility"]["flaky"] == pytest.approx(0.6)
    assert report.raw["d"]["robustness"]["flaky"] == pytest.approx(0.6)
    ranks = compute_ranks(normalize_scores(report))
    assert ranks.ordered() == ["steady", "flaky", "poor"]


def test_every_method_explains_with_smoke_budgets(gaussian_ctx):
    cfg = load_config(str(ROOT / "configs" / "smoke.json"))
    # deepest class-1 member, far from the decision boundary
    members = gaussian_ctx.class_members(1)
    q = gaussian_ctx.X[members[np.argmax(gaussian_ctx.classifier.predict_proba(gaussian_ctx.X[members])[:, 1])]]
    explained = []
    for entry in cfg.methods:
        explainer = create(entry.id, gaussian_ctx, entry.params)
        try:
            sfs = explainer.explain(q, query_id=0, seed=11)
        except ExplanationFailure:
            continue
        assert sfs, entry.id
        for sf in sfs:
            assert sf.valid, entry.id
            assert sf.method == entry.id
        explained.append(entry.id)
    assert len(explained) >= 6, explained


def test_every_emitted_explanation_keeps_the_query_class():
    # 500-point two-Gaussian fixture, every test query of fold 0 of 5
    ds, _ = builtin_dataset("two_gaussian", n=500, seed=0)
    plan = split_kfold(ds, 5, seed=0)
    _, train_idx, test_idx = next(plan.folds())
    train, test = ds.split(train_idx, test_idx)
    ctx = ExplainContext.build(train, fit_classifier(train, n_trees=10, seed=0), seed=0)
    cfg = load_config(str(ROOT / "configs" / "smoke.json"))
    emitted = {}
    for entry in cfg.methods:
        explainer = create(entry.id, ctx, entry.params)
        emitted[entry.id] = failed = 0
        for j, q in enumerate(test.X):
            try:
                sfs = explainer.explain(q, query_id=j, seed=j)
            except ExplanationFailure:
                failed += 1
                continue
            qc = ctx.classifier.predict_one(q)
            for sf in sfs:
                assert sf.valid, entry.id
                assert ctx.classifier.predict_one(sf.instance) == qc, entry.id
            emitted[entry.id] += len(sfs)
        assert failed < len(test), entry.id
    assert set(emitted) == set(METHOD_IDS)


# --- report files and charts ---


def test_emit_report_files(tmp_path, tiny_artifact):
    paths = emit_report(tiny_artifact, str(tmp_path))
    assert set(paths) == {"report", "scores", "ranks"}
    for name in (REPORT_JSON, SCORES_CSV, RANKS_CSV):
        assert (tmp_path / name).exists()

    scores = pd.read_csv(tmp_path / SCORES_CSV)
    assert list(scores.columns) == ["metric", "direction", "method", "family", "tiny", "tiny_best"]
    assert len(scores) == 5 * 2
    for metric, block in scores.groupby("metric"):
        assert block["tiny_best"].sum() >= 1
        assert set(block["method"]) == {"mdn", "kleor"}

    ranks = pd.read_csv(tmp_path / RANKS_CSV)
    assert list(ranks["method"]) == tiny_artifact.ranks.ordered()
    assert "median_sparsity" in ranks.columns


def test_report_round_trip(tmp_path, tiny_artifact):
    emit_report(tiny_artifact, str(tmp_path))
    loaded = load_artifact(str(tmp_path))
    assert loaded.to_dict() == tiny_artifact.to_dict()
    assert load_artifact(str(tmp_path / REPORT_JSON)).ranks.ordered() == tiny_artifact.ranks.ordered()
    with pytest.raises(FileNotFoundError):
        load_artifact(str(tmp_path / "missing"))


def test_csv_and_json_reports_agree_exactly(tmp_path, tiny_artifact):
    emit_report(tiny_artifact, str(tmp_path))
    doc = json.loads((tmp_path / REPORT_JSON).read_text(encoding="utf-8"))
    scores = pd.read_csv(tmp_path / SCORES_CSV, float_precision="round_trip")
    for row in scores.itertuples(index=False):
        assert row.tiny == doc["report"]["normalized"]["tiny"][row.metric][row.method]
    ranks = pd.read_csv(tmp_path / RANKS_CSV, float_precision="round_trip")
    for row in ranks.itertuples(index=False):
        assert row.mean_rank == doc["ranks"]["mean_rank"][row.method]
        assert row.median_distance == doc["ranks"]["median_rank"][row.method]["distance"]


def test_charts_are_byte_stable(tmp_path, tiny_artifact):
    first = render_charts(tiny_artifact, str(tmp_path / "a"))
    second = render_charts(tiny_artifact, str(tmp_path / "b"))
    assert set(first) == {"mean_ranks", "counterfactual_free", "counterfactual_guided"}
    for key in first:
        a = Path(first[key]).read_bytes()
        assert a.startswith(b"<?xml")
        assert a == Path(second[key]).read_bytes()
    assert os.path.basename(first["mean_ranks"]) == MEAN_RANKS_SVG


def test_mean_rank_bars_put_the_best_method_first(tiny_artifact):
    ordered, heights = mean_rank_bars(tiny_artifact)
    assert ordered == tiny_artifact.ranks.ordered()
    assert heights == sorted(heights, reverse=True)
    assert heights[0] == 3 - tiny_artifact.ranks.mean_rank[ordered[0]]
    assert all(h > 0 for h in heights)


# --- command line ---


def test_cli_fixtures(tmp_path, capsys):
    assert main(["fixtures", "--out", str(tmp_path), "--n", "40"]) == EXIT_OK
    for name in ("two_gaussian.csv", "two_gaussian.schema.json", "causal_chain.csv", "causal_chain.scm.json"):
        assert (tmp_path / name).exists()
    assert "two_gaussian" in capsys.readouterr().out


def test_cli_run_report_and_charts(tmp_path, monkeypatch):
    monkeypatch.delenv("SFB_SEED", raising=False)
    config = tmp_path / "tiny.json"
    config.write_text(json.dumps(TINY), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out), "--no-charts"]) == EXIT_OK
    assert (out / REPORT_JSON).exists()
    assert not (out / MEAN_RANKS_SVG).exists()

    (out / SCORES_CSV).unlink()
    assert main(["report", "--artifact", str(out)]) == EXIT_OK
    assert (out / SCORES_CSV).exists()
    assert main(["charts", "--artifact", str(out / REPORT_JSON)]) == EXIT_OK
    assert (out / MEAN_RANKS_SVG).exists()


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**TINY, "methods": [{"id": "mdn"}]}), encoding="utf-8")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    missing = tmp_path / "missing.json"
    missing.write_text(
        json.dumps({**TINY, "datasets": [{"name": "x", "csv": "x.csv", "schema": "x.schema.json"}]}), encoding="utf-8"
    )
    assert main(["run", "--config", str(missing), "--out", str(tmp_path / "o")]) == EXIT_DATASET
    assert main(["report", "--artifact", str(tmp_path / "nothing")]) == 1


def test_seed_flag_only_applies_without_config_seed():
    doc = {k: v for k, v in TINY.items() if k != "seed"}
    a = run_benchmark(parse_config(doc), seed=4)
    assert a.config["seed"] == 4
    b = run_benchmark(parse_config(TINY), seed=4)
    assert b.config["seed"] == 3
    assert np.isfinite(a.ranks.mean_rank["mdn"])
