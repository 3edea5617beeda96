from __future__ import annotations

import json
import os
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.explain import METHOD_IDS, parse_params
from src.explain.registry import params_model


class ConfigError(ValueError):
    pass


def _dump(model: BaseModel) -> Dict[str, Any]:
    return model.model_dump(by_alias=True)


class DatasetEntry(BaseModel):
    name: str
    csv: Optional[str] = None
    schema_file: Optional[str] = Field(None, alias="schema", description="Schema JSON for csv datasets")
    scm: Optional[str] = Field(None, description="Optional structural causal model JSON")
    builtin: Optional[Literal["two_gaussian", "causal_chain"]] = None
    n: int = Field(500, ge=10, description="Rows generated for builtin fixtures")

    model_config = ConfigDict(extra="forbid")


class MethodEntry(BaseModel):
    id: str
    label: Optional[str] = Field(None, description="Column name in reports; defaults to the id")
    params: Dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(extra="forbid")

    @property
    def name(self) -> str:
        return self.label or self.id


class MetricParams(BaseModel):
    epsilon: float = Field(0.1, gt=0.0, description="Robustness ball radius")
    perturbations: int = Field(100, ge=1)
    ideal_diff: int = Field(1, ge=1)
    sameness: float = Field(0.2, ge=0.0, description="Sameness threshold as a fraction of std")

    model_config = ConfigDict(extra="forbid")


def _all_methods() -> List[MethodEntry]:
    return [MethodEntry(id=m) for m in METHOD_IDS]


class ExperimentConfig(BaseModel):
    datasets: List[DatasetEntry]
    methods: List[MethodEntry] = Field(default_factory=_all_methods)
    folds: int = Field(5, ge=2)
    seed: Optional[int] = Field(None, description="Master seed; SFB_SEED when unset")
    n_trees: int = Field(100, ge=1)
    metrics: MetricParams = Field(default_factory=MetricParams)
    max_queries_per_fold: Optional[int] = Field(10, ge=1, description="null scores every test-fold query")
    out_dir: Optional[str] = None

    model_config = ConfigDict(extra="forbid")

    def echo(self) -> Dict[str, Any]:
        """Resolved config including per-method defaults."""
        doc = _dump(self)
        doc["methods"] = [
            {"id": m.id, "label": m.name, "params": _dump(parse_params(params_model(m.id), m.id, m.params))}
            for m in self.methods
        ]
        return doc


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    if not cfg.datasets:
        raise ConfigError("config needs at least one dataset")
    if len(cfg.methods) < 2:
        raise ConfigError("config needs at least two methods")
    names = [d.name for d in cfg.datasets]
    if len(set(names)) != len(names):
        raise ConfigError("dataset names must be unique")
    for d in cfg.datasets:
        if d.builtin is None and (d.csv is None or d.schema_file is None):
            raise ConfigError(f"dataset '{d.name}' needs csv and schema, or builtin")
        if d.builtin is not None and d.csv is not None:
            raise ConfigError(f"dataset '{d.name}' sets both csv and builtin")
    labels = [m.name for m in cfg.methods]
    if len(set(labels)) != len(labels):
        raise ConfigError("method labels must be unique; set 'label' when repeating an id")
    for m in cfg.methods:
        if m.id not in METHOD_IDS:
            raise ConfigError(f"unknown method '{m.id}'")
        try:
            parse_params(params_model(m.id), m.id, m.params)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def parse_config(doc: Dict[str, Any]) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig(**doc)
    except (ValidationError, TypeError) as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc
    return validate_config(cfg)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    # Dataset paths are relative to the config file
    base = os.path.dirname(os.path.abspath(path))
    for entry in doc.get("datasets") or []:
        if not isinstance(entry, dict):
            continue
        for key in ("csv", "schema", "scm"):
            value = entry.get(key)
            if isinstance(value, str) and not os.path.isabs(value):
                entry[key] = os.path.normpath(os.path.join(base, value))
    return parse_config(doc)
