"""Experiment configuration, orchestration and result summaries.

Output layout of :func:`run_experiment` inside ``out``:

``config.yaml``
    Echo of the fully resolved configuration.
``records.jsonl``
    One JSON object per (repetition, fold): ``rep``, ``fold``, ``status``,
    ``metrics`` and ``error``. Keys are sorted so identical runs give identical
    bytes.
``summary.json``
    Mean, standard deviation and count per numeric metric over successful runs.
``traces/<rep>_<fold>_<name>.csv``
    Plot-ready per-iteration tables emitted by the runner.
``timings.jsonl``
    Wall-clock seconds per repetition, kept apart from the metrics because it
    is the only non-deterministic output.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

from .scenarios import ALGORITHMS, SEQUENCES, TABULAR, TOPOLOGIES, FoldOutput, RunContext

log = logging.getLogger(__name__)

MIXING = ("max_degree", "metropolis", "laplacian_heuristic")


class ConfigError(ValueError):
    """Raised for configurations that reference unknown ids or bad values."""


@dataclass
class ExperimentConfig:
    """One experiment: algorithm and hyperparameters, topology, data and run layout."""

    algorithm: str
    name: str = ""
    hyper: dict[str, Any] = field(default_factory=dict)
    topology: dict[str, Any] = field(default_factory=dict)
    dataset: dict[str, Any] = field(default_factory=dict)
    partition: str = "horizontal"
    repetitions: int = 1
    folds: int = 1
    seed: int = 0
    out: str = "results"

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; known: {sorted(ALGORITHMS)}")
        spec = ALGORITHMS[self.algorithm]
        unknown = set(self.hyper) - set(spec.defaults)
        if unknown:
            raise ConfigError(f"unknown hyperparameters for {self.algorithm}: {sorted(unknown)}")
        self.hyper = {**spec.defaults, **self.hyper}
        self.name = self.name or self.algorithm
        for key, (lo, hi) in spec.ranges.items():
            value = self.hyper.get(key)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"hyperparameter {key} must be numeric")
            if not lo <= value <= hi:
                raise ConfigError(f"hyperparameter {key}={value} outside [{lo}, {hi}]")
        if self.topology:
            kind = self.topology.get("kind", "erdos_renyi")
            if kind not in TOPOLOGIES:
                raise ConfigError(f"unknown topology {kind!r}")
            if self.topology.get("mixing", "metropolis") not in MIXING:
                raise ConfigError(f"unknown mixing strategy {self.topology['mixing']!r}")
            if int(self.topology.get("agents", 1)) < 1:
                raise ConfigError("topology.agents must be >= 1")
            p = self.topology.get("p")
            if p is not None and not 0 < float(p) <= 1:
                raise ConfigError("topology.p must lie in (0, 1]")
        if spec.kind != "none":
            known = TABULAR if spec.kind == "tabular" else SEQUENCES
            gen = self.dataset.get("generator")
            if gen not in known:
                raise ConfigError(f"{self.algorithm} needs a {spec.kind} dataset from {list(known)}, got {gen!r}")
        if self.partition not in ("horizontal", "vertical"):
            raise ConfigError(f"unknown partition mode {self.partition!r}")
        if int(self.repetitions) < 1 or int(self.folds) < 1:
            raise ConfigError("repetitions and folds must be >= 1")
        self.repetitions, self.folds, self.seed = int(self.repetitions), int(self.folds), int(self.seed)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        allowed = set(cls.__dataclass_fields__)
        extra = set(data) - allowed
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "algorithm" not in data:
            raise ConfigError("config needs an 'algorithm'")
        return cls(**dict(data))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_mapping(data)

    def to_mapping(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class RunRecord:
    """Raw per-fold results plus their summary."""

    runs: list[dict[str, Any]]
    summary: dict[str, dict[str, float]]
    out: Path | None = None

    @property
    def failed(self) -> list[dict[str, Any]]:
        return [r for r in self.runs if r["status"] != "ok"]

    def metric(self, name: str) -> list[Any]:
        return [r["metrics"].get(name) for r in self.runs if r["status"] == "ok"]

    @classmethod
    def load(cls, out: str | Path) -> "RunRecord":
        out = Path(out)
        runs = read_records(out / "records.jsonl")
        return cls(runs, summarize(runs), out)


def _clean(value: Any) -> Any:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return int(value)
    v = float(value)
    return v if math.isfinite(v) else repr(v)


def _run_rep(config: ExperimentConfig, rep: int) -> tuple[list[FoldOutput] | None, str | None, float]:
    runner = ALGORITHMS[config.algorithm].runner
    start = time.perf_counter()
    try:
        return runner(RunContext(config, rep)), None, time.perf_counter() - start
    except Exception as exc:  # a failed repetition is recorded, not fatal
        log.exception("repetition %d of %s failed", rep, config.name)
        return None, f"{type(exc).__name__}: {exc}", time.perf_counter() - start


def _write_trace(path: Path, header: list[str], rows: Iterable[Iterable[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def run_experiment(config: ExperimentConfig, threads: int = 1, out: str | Path | None = None) -> RunRecord:
    """Run every repetition, then write records, traces and summary in fixed order.

    Repetitions are spread over ``threads`` workers. Seeds depend only on the
    repetition index and results are gathered before writing, so the metric
    files do not depend on the thread count.
    """
    out = Path(out if out is not None else config.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    with open(out / "config.yaml", "w") as fh:
        yaml.safe_dump(config.to_mapping(), fh, sort_keys=True)
    reps = range(config.repetitions)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: _run_rep(config, r), reps))
    else:
        results = [_run_rep(config, r) for r in reps]

    runs: list[dict[str, Any]] = []
    timings = []
    for rep, (folds, error, seconds) in zip(reps, results):
        timings.append({"rep": rep, "seconds": seconds})
        if folds is None:
            runs.append({"rep": rep, "fold": None, "status": "failed", "metrics": {}, "error": error})
            continue
        for f, fold in enumerate(folds):
            runs.append({
                "rep": rep, "fold": f, "status": "ok", "error": None,
                "metrics": {k: _clean(v) for k, v in fold.metrics.items()},
            })
            for name, (header, rows) in fold.traces.items():
                _write_trace(out / "traces" / f"{rep}_{f}_{name}.csv", header, rows)
    with open(out / "records.jsonl", "w") as fh:
        for r in runs:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    summary = summarize(runs)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(out / "timings.jsonl", "w") as fh:
        for t in timings:
            fh.write(json.dumps(t) + "\n")
    return RunRecord(runs, summary, out)


def read_records(path: str | Path) -> list[dict[str, Any]]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def summarize(records: Iterable[Mapping[str, Any]]) -> dict[str, dict[str, float]]:
    """Mean, population standard deviation and count of every numeric metric."""
    values: dict[str, list[float]] = {}
    for r in records:
        if r.get("status", "ok") != "ok":
            continue
        for k, v in r["metrics"].items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                continue
            values.setdefault(k, []).append(float(v))
    out = {}
    for k in sorted(values):
        xs = values[k]
        mean = math.fsum(xs) / len(xs)
        var = math.fsum((x - mean) ** 2 for x in xs) / len(xs)
        out[k] = {"mean": mean, "std": math.sqrt(var), "count": len(xs)}
    return out


def format_summary(summary: Mapping[str, Mapping[str, float]]) -> str:
    """Plain-text table with one ``metric  mean ± std  (n)`` row per metric."""
    if not summary:
        return "(no successful runs)"
    width = max(len(k) for k in summary)
    return "\n".join(
        f"{k:<{width}}  {s['mean']:.6g} ± {s['std']:.3g}  (n={int(s['count'])})" for k, s in summary.items()
    )
