"""Service configuration: defaults, optional config file, environment
overrides (WUGKIT_PORT, WUGKIT_DATA_DIR, WUGKIT_GATE_RHO, WUGKIT_GATE_MAD,
WUGKIT_SOLVER_RESTARTS)."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path


@dataclass
class ServiceConfig:
    port: int = 8040
    data_dir: str = ":memory:"
    gate_rho: float = 0.6
    gate_mad: float = 0.5
    solver_restarts: int = 10

    @property
    def database_path(self) -> str:
        if self.data_dir == ":memory:":
            return ":memory:"
        path = Path(self.data_dir)
        path.mkdir(parents=True, exist_ok=True)
        return str(path / "wugkit.sqlite3")


def load_config(path: str | None = None) -> ServiceConfig:
    config = ServiceConfig()
    if path:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        for key, value in raw.items():
            if not hasattr(config, key):
                raise ValueError(f"unknown config key {key!r}")
            setattr(config, key, value)
    env_map = {
        "WUGKIT_PORT": ("port", int),
        "WUGKIT_DATA_DIR": ("data_dir", str),
        "WUGKIT_GATE_RHO": ("gate_rho", float),
        "WUGKIT_GATE_MAD": ("gate_mad", float),
        "WUGKIT_SOLVER_RESTARTS": ("solver_restarts", int),
    }
    for env, (key, cast) in env_map.items():
        if env in os.environ:
            setattr(config, key, cast(os.environ[env]))
    return config
