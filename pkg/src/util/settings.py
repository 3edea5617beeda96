from __future__ import annotations

from dataclasses import dataclass

from environs import Env


@dataclass(frozen=True)
class RuntimeSettings:
    jobs: int
    out_dir: str
    seed: int


def load_settings() -> RuntimeSettings:
    """Read runtime defaults from the environment.

    SFB_JOBS: parallel workers for query units (default 1)
    SFB_OUT_DIR: output directory when --out is not given (default results)
    SFB_SEED: master seed when neither --seed nor the config sets one (default 0)
    """
    env = Env()
    jobs = env.int("SFB_JOBS", 1)
    return RuntimeSettings(
        jobs=max(1, jobs),
        out_dir=env.str("SFB_OUT_DIR", "results"),
        seed=env.int("SFB_SEED", 0),
    )
