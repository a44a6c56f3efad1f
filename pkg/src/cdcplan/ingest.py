"""Trace-style CSV loading, synthetic fleet generation, experiment config.

CSV conventions: UTF-8, comma separated, decimal point only, `#`-prefixed
comment lines and blank lines skipped.  Units are declared in the column
names (seconds, ops per second, computations); nothing is inferred.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .model import Fleet, NodeProfile, TaskSpec

TASK_HEADER = ("task_id", "size")
FLEET_HEADER_REQUIRED = ("node_id", "tau_s", "eta_ops_per_s")
FLEET_HEADER_OPTIONAL = ("p", "alpha")


class ParseError(ValueError):
    """Input file rejected; ``line`` is the 1-based offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _rows(text: str):
    """Yield (lineno, fields) for data-bearing lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, [f.strip() for f in next(csv.reader([raw]))]


def parse_task_csv(text: str, sort_ascending: bool = False) -> list[TaskSpec]:
    """Parse `task_id,size` rows; optionally sort ascending by size."""
    rows = _rows(text)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ParseError(1, "missing header 'task_id,size'") from None
    if tuple(header) != TASK_HEADER:
        raise ParseError(lineno, f"expected header 'task_id,size', got {header}")

    tasks: list[TaskSpec] = []
    seen: set[str] = set()
    for lineno, row in rows:
        if len(row) != 2:
            raise ParseError(lineno, f"expected 2 fields, got {len(row)}")
        task_id, size_text = row
        try:
            size = float(size_text)
        except ValueError:
            raise ParseError(lineno, f"size {size_text!r} is not a number") from None
        if not size > 0 or not math.isfinite(size):
            raise ParseError(lineno, f"task {task_id!r}: size must be positive, got {size_text}")
        if task_id in seen:
            raise ParseError(lineno, f"duplicate task id {task_id!r}")
        seen.add(task_id)
        tasks.append(TaskSpec(id=task_id, size=size))
    if sort_ascending:
        tasks.sort(key=lambda t: t.size)
    return tasks


def parse_fleet_csv(
    text: str, default_p: float = 0.9, default_alpha: float = 2.0
) -> Fleet:
    """Parse `node_id,tau_s,eta_ops_per_s[,p][,alpha]` rows into a Fleet.

    Missing or empty p/alpha cells fall back to the supplied defaults.
    """
    rows = _rows(text)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ParseError(1, "missing fleet header") from None
    if tuple(header[:3]) != FLEET_HEADER_REQUIRED:
        raise ParseError(
            lineno,
            f"header must start with {','.join(FLEET_HEADER_REQUIRED)}, got {header}",
        )
    extras = header[3:]
    bad = [col for col in extras if col not in FLEET_HEADER_OPTIONAL]
    if bad or len(set(extras)) != len(extras):
        raise ParseError(lineno, f"unsupported or repeated optional columns: {extras}")

    nodes: list[NodeProfile] = []
    seen: set[str] = set()
    for lineno, row in rows:
        if len(row) != len(header):
            raise ParseError(
                lineno, f"expected {len(header)} fields, got {len(row)}"
            )
        node_id = row[0]
        if node_id in seen:
            raise ParseError(lineno, f"duplicate node id {node_id!r}")
        seen.add(node_id)
        named = dict(zip(header, row))

        def _num(column: str, fallback: float) -> float:
            cell = named.get(column, "")
            if cell == "":
                return fallback
            try:
                return float(cell)
            except ValueError:
                raise ParseError(
                    lineno, f"node {node_id!r}: {column} {cell!r} is not a number"
                ) from None

        try:
            nodes.append(
                NodeProfile(
                    id=node_id,
                    tau=_num("tau_s", math.nan),
                    eta=_num("eta_ops_per_s", math.nan),
                    p=_num("p", default_p),
                    alpha=_num("alpha", default_alpha),
                )
            )
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
    if not nodes:
        raise ParseError(lineno, "fleet file has no node rows")
    return Fleet(nodes=tuple(nodes))


def fleet_to_csv(fleet: Fleet) -> str:
    """Serialize a fleet; reparsing the output reproduces it exactly."""
    lines = ["node_id,tau_s,eta_ops_per_s,p,alpha"]
    for node in fleet:
        lines.append(f"{node.id},{node.tau!r},{node.eta!r},{node.p!r},{node.alpha!r}")
    return "\n".join(lines) + "\n"


def tasks_to_csv(tasks: list[TaskSpec]) -> str:
    lines = ["task_id,size"]
    lines += [f"{task.id},{task.size!r}" for task in tasks]
    return "\n".join(lines) + "\n"


def gen_synthetic_fleet(
    seed: int,
    n: int,
    tau_range: tuple[float, float],
    eta_range: tuple[float, float],
    p: float = 0.9,
    alpha: float = 2.0,
) -> Fleet:
    """Seeded heterogeneous fleet: tau and eta drawn log-uniformly.

    Node ids are zero-padded (`node01`, ...) so lexicographic and fleet
    order agree.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    for name, (lo, hi) in (("tau", tau_range), ("eta", eta_range)):
        if not 0 < lo:
            raise ValueError(f"{name} range must be positive, got {lo}")
        if lo > hi:
            raise ValueError(f"{name} range is inverted: [{lo}, {hi}]")
    rng = np.random.default_rng(seed)

    def _log_uniform(lo: float, hi: float) -> np.ndarray:
        if lo == hi:
            return np.full(n, lo)
        return np.exp(rng.uniform(np.log(lo), np.log(hi), size=n))

    taus = _log_uniform(*tau_range)
    etas = _log_uniform(*eta_range)
    width = max(2, len(str(n)))
    nodes = tuple(
        NodeProfile(
            id=f"node{i + 1:0{width}d}",
            tau=float(taus[i]),
            p=p,
            eta=float(etas[i]),
            alpha=alpha,
        )
        for i in range(n)
    )
    return Fleet(nodes=nodes)


@dataclass(frozen=True)
class SyntheticFleetSpec:
    seed: int
    n: int
    tau_range: tuple[float, float]
    eta_range: tuple[float, float]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run needs, resolvable to a fleet + tasks.

    Exactly one of fleet_file / synthetic must be set, and exactly one of
    task_file / tasks_inline.  File paths are resolved against base_dir.
    """

    fleet_file: str | None = None
    synthetic: SyntheticFleetSpec | None = None
    task_file: str | None = None
    tasks_inline: tuple[TaskSpec, ...] | None = None
    default_p: float = 0.9
    default_alpha: float = 2.0
    seed: int = 0
    replications: int = 1000
    n_extra: int = 0
    static_rounding: str = "half-up"
    sort_tasks: bool = False
    workers: int = 1
    base_dir: str = "."

    def __post_init__(self) -> None:
        if (self.fleet_file is None) == (self.synthetic is None):
            raise ValueError("exactly one of fleet_file / synthetic must be set")
        if (self.task_file is None) == (self.tasks_inline is None):
            raise ValueError("exactly one of task_file / tasks_inline must be set")
        if not 0 < self.default_p <= 1:
            raise ValueError(f"default_p must be in (0, 1], got {self.default_p}")
        if not self.default_alpha > 0:
            raise ValueError(f"default_alpha must be > 0, got {self.default_alpha}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if self.n_extra < 0:
            raise ValueError(f"n_extra must be >= 0, got {self.n_extra}")
        for path in (self.fleet_file, self.task_file):
            if path is not None and not os.path.exists(self._resolve(path)):
                raise FileNotFoundError(self._resolve(path))

    def _resolve(self, path: str) -> str:
        return os.path.join(self.base_dir, path)

    def load_fleet(self) -> Fleet:
        if self.synthetic is not None:
            spec = self.synthetic
            return gen_synthetic_fleet(
                seed=spec.seed,
                n=spec.n,
                tau_range=spec.tau_range,
                eta_range=spec.eta_range,
                p=self.default_p,
                alpha=self.default_alpha,
            )
        with open(self._resolve(self.fleet_file), encoding="utf-8") as fh:
            return parse_fleet_csv(
                fh.read(), default_p=self.default_p, default_alpha=self.default_alpha
            )

    def load_tasks(self) -> list[TaskSpec]:
        if self.tasks_inline is not None:
            tasks = list(self.tasks_inline)
            if self.sort_tasks:
                tasks.sort(key=lambda t: t.size)
            return tasks
        with open(self._resolve(self.task_file), encoding="utf-8") as fh:
            return parse_task_csv(fh.read(), sort_ascending=self.sort_tasks)


def load_config(path: str) -> ExperimentConfig:
    """Load an ExperimentConfig from its JSON document form.

    Relative file references are resolved against the config's directory.
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)

    fleet = doc.get("fleet", {})
    synthetic = None
    if "synthetic" in fleet:
        raw = fleet["synthetic"]
        synthetic = SyntheticFleetSpec(
            seed=int(raw["seed"]),
            n=int(raw["n"]),
            tau_range=tuple(float(v) for v in raw["tau_range"]),
            eta_range=tuple(float(v) for v in raw["eta_range"]),
        )
    tasks = doc.get("tasks", {})
    inline = None
    if "inline" in tasks:
        inline = tuple(
            TaskSpec(id=str(item["id"]), size=float(item["size"]))
            for item in tasks["inline"]
        )
    return ExperimentConfig(
        fleet_file=fleet.get("file"),
        synthetic=synthetic,
        task_file=tasks.get("file"),
        tasks_inline=inline,
        default_p=float(doc.get("default_p", 0.9)),
        default_alpha=float(doc.get("default_alpha", 2.0)),
        seed=int(doc.get("seed", 0)),
        replications=int(doc.get("replications", 1000)),
        n_extra=int(doc.get("n_extra", 0)),
        static_rounding=str(doc.get("static_rounding", "half-up")),
        sort_tasks=bool(doc.get("sort_tasks", False)),
        workers=int(doc.get("workers", 1)),
        base_dir=os.path.dirname(os.path.abspath(path)),
    )
