"""k-fold benchmark harness: config, runner, report tables and charts."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .runner import QueryRecord, RunArtifact, run_benchmark
from .seeds import SeedLedger, derive_seed

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "QueryRecord",
    "RunArtifact",
    "SeedLedger",
    "derive_seed",
    "load_config",
    "parse_config",
    "run_benchmark",
]
