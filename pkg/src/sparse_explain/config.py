"""Run configuration: a TOML file with command-line overrides."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .bm25 import Bm25Params
from .explainer import OMEGAS, SearchConfig

BLACKBOX_KINDS = ("run_file", "hidden_query_oracle", "hashed_embedding", "bm25")
METHODS = ("bfs", "greedy", "both")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass
class Paths:
    corpus: Optional[str] = None
    index: Optional[str] = None
    topics: Optional[str] = None
    qrels: Optional[str] = None
    run: Optional[str] = None
    hidden: Optional[str] = None
    explanations: Optional[str] = None
    out_dir: str = "out"


@dataclass
class BlackBoxSpec:
    kind: str = "run_file"
    dim: int = 384
    seed: int = 17


@dataclass
class Rm3Settings:
    lam: float = 0.5
    n_terms: int = 10
    feedback_docs: int = 10


@dataclass
class RunConfig:
    paths: Paths = field(default_factory=Paths)
    blackbox: BlackBoxSpec = field(default_factory=BlackBoxSpec)
    search: SearchConfig = field(default_factory=SearchConfig)
    rm3: Rm3Settings = field(default_factory=Rm3Settings)
    method: str = "bfs"
    workers: int = 0
    run_depth: int = 1000

    @property
    def n_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def validate(self, needs: tuple[str, ...] = ()) -> list[str]:
        """Every problem found, not just the first."""
        problems = []
        p = self.paths
        if "corpus" in needs and not (p.corpus or p.index):
            problems.append("one of paths.corpus or paths.index is required")
        for name in ("corpus", "index", "topics", "qrels", "run", "hidden", "explanations"):
            value = getattr(p, name)
            if name in needs and name != "corpus" and not value:
                problems.append(f"paths.{name} is required")
            if value and not Path(value).exists():
                problems.append(f"paths.{name}: file not found: {value}")
        if self.blackbox.kind not in BLACKBOX_KINDS:
            problems.append(f"blackbox.kind must be one of {', '.join(BLACKBOX_KINDS)}")
        elif "blackbox" in needs:
            if self.blackbox.kind == "run_file" and not p.run:
                problems.append("paths.run is required for blackbox.kind = run_file")
            if self.blackbox.kind == "hidden_query_oracle" and not p.hidden:
                problems.append("paths.hidden is required for blackbox.kind = hidden_query_oracle")
        if self.blackbox.dim < 8:
            problems.append("blackbox.dim must be >= 8")
        if self.method not in METHODS:
            problems.append(f"search.method must be one of {', '.join(METHODS)}")
        if self.workers < 0:
            problems.append("run.workers must be >= 0")
        if self.run_depth < 1:
            problems.append("run.run_depth must be >= 1")
        if not 0.0 <= self.rm3.lam <= 1.0:
            problems.append("rm3.lambda must be in [0, 1]")
        if self.rm3.n_terms < 1 or self.rm3.feedback_docs < 1:
            problems.append("rm3.n_terms and rm3.feedback_docs must be >= 1")
        return problems

    def to_toml(self) -> str:
        s = self.search
        lines = ["[paths]"]
        for f in fields(Paths):
            v = getattr(self.paths, f.name)
            if v is not None:
                lines.append(f"{f.name} = {_toml_value(v)}")
        lines += [
            "",
            "[blackbox]",
            f"kind = {_toml_value(self.blackbox.kind)}",
            f"dim = {self.blackbox.dim}",
            f"seed = {self.blackbox.seed}",
            "",
            "[search]",
            f"method = {_toml_value(self.method)}",
            f"k = {s.k}",
            f"branching = {s.branching}",
            f"max_depth = {s.max_depth}",
            f"greedy_max_states = {s.greedy_max_states}",
            f"bfs_max_states = {s.bfs_max_states if s.bfs_max_states is not None else 0}",
            f"rbo_p = {s.rbo_p}",
            f"seed = {s.seed}",
            f"omega = {_toml_value(s.omega)}",
            "",
            "[bm25]",
            f"k1 = {s.bm25.k1}",
            f"b = {s.bm25.b}",
            "",
            "[rm3]",
            f"lambda = {self.rm3.lam}",
            f"n_terms = {self.rm3.n_terms}",
            f"feedback_docs = {self.rm3.feedback_docs}",
            "",
            "[run]",
            f"workers = {self.workers}",
            f"run_depth = {self.run_depth}",
        ]
        return "\n".join(lines) + "\n"


def _toml_value(v: Any) -> str:
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return str(v)


_SEARCH_KEYS = {"k", "branching", "max_depth", "greedy_max_states", "bfs_max_states", "rbo_p", "seed", "omega"}


def load_config(path: Optional[str | Path] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Read ``path`` (if given) and apply dotted-key ``overrides`` on top.

    Relative paths in the file are resolved against the file's directory.
    ``search.bfs_max_states = 0`` means unlimited.
    """
    data: dict = {}
    base = Path(".")
    if path is not None:
        base = Path(path).parent
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"{path}: {exc}"]) from None
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        data.setdefault(section, {})[key] = value
        if section == "paths":
            data.setdefault("_cli_paths", set()).add(key)

    problems = []
    known = {
        "paths": {f.name for f in fields(Paths)},
        "blackbox": {"kind", "dim", "seed"},
        "search": _SEARCH_KEYS | {"method"},
        "bm25": {"k1", "b"},
        "rm3": {"lambda", "n_terms", "feedback_docs"},
        "run": {"workers", "run_depth"},
    }
    for section, values in data.items():
        if section == "_cli_paths":
            continue
        if section not in known:
            problems.append(f"unknown config section [{section}]")
            continue
        for key in values:
            if key not in known[section]:
                problems.append(f"unknown key {section}.{key}")
    if problems:
        raise ConfigError(problems)

    cli_paths = data.get("_cli_paths", set())
    paths = Paths()
    for key, value in data.get("paths", {}).items():
        if value and key not in cli_paths and not Path(value).is_absolute():
            value = str(base / value)
        setattr(paths, key, value)

    cfg = RunConfig(paths=paths)
    bb = data.get("blackbox", {})
    cfg.blackbox = BlackBoxSpec(bb.get("kind", "run_file"), int(bb.get("dim", 384)), int(bb.get("seed", 17)))
    search = dict(data.get("search", {}))
    cfg.method = search.pop("method", "bfs")
    bm25 = data.get("bm25", {})
    rm3 = data.get("rm3", {})
    run = data.get("run", {})
    try:
        params = Bm25Params(float(bm25.get("k1", 1.2)), float(bm25.get("b", 0.75)))
        if "bfs_max_states" in search:
            search["bfs_max_states"] = int(search["bfs_max_states"]) or None
        if search.get("omega", "rbo") not in OMEGAS:
            raise ValueError(f"search.omega must be one of {', '.join(OMEGAS)}")
        cfg.search = replace(cfg.search, bm25=params, **search)
        cfg.rm3 = Rm3Settings(
            float(rm3.get("lambda", 0.5)), int(rm3.get("n_terms", 10)), int(rm3.get("feedback_docs", 10))
        )
        cfg.workers = int(run.get("workers", 0))
        cfg.run_depth = int(run.get("run_depth", 1000))
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from None
    return cfg
