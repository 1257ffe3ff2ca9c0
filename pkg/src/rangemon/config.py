"""Key-value config files: one ``key = value`` per line, ``#`` comments.

The same format carries both cluster topology (grid.n, grid.workers,
tree.alpha, tree.m, routing.jaccard_threshold, rng.seed, cluster.*) and
experiment definitions (experiment.*, workload.*, sweep.*, queues.*).
"""

from __future__ import annotations

from pathlib import Path

from .cluster import ClusterSpec


class Config:
    def __init__(self, values: dict[str, str] | None = None):
        self.values = dict(values or {})

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        values: dict[str, str] = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
        return cls(values)

    def merged(self, other: "Config") -> "Config":
        out = dict(self.values)
        out.update(other.values)
        return Config(out)

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.values.get(key, default)

    def get_int(self, key: str, default: int) -> int:
        raw = self.values.get(key)
        return default if raw is None else int(raw)

    def get_float(self, key: str, default: float) -> float:
        raw = self.values.get(key)
        return default if raw is None else float(raw)

    def get_bool(self, key: str, default: bool) -> bool:
        raw = self.values.get(key)
        if raw is None:
            return default
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")

    def get_floats(self, key: str) -> list[float]:
        raw = self.values.get(key)
        if raw is None:
            return []
        return [float(part) for part in raw.split(",") if part.strip()]

    def cluster_spec(self, engine: str | None = None, transport: str | None = None,
                     seed: int | None = None) -> ClusterSpec:
        grid_workers = self.get_int("grid.workers", 4)
        return ClusterSpec(
            grid_n=self.get_int("grid.n", 100),
            index_workers=self.get_int("cluster.index_workers", grid_workers),
            query_workers=self.get_int("cluster.query_workers", 2),
            alpha=self.get_int("tree.alpha", 20),
            m=self.get_int("tree.m", 6),
            jaccard_threshold=self.get_float("routing.jaccard_threshold", 0.5),
            engine=engine or self.get("cluster.engine", "drqa"),
            transport=transport or self.get("cluster.transport", "loopback"),
            seed=seed if seed is not None else self.get_int("rng.seed", 0),
        )
