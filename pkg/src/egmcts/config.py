"""Run configuration: a single versioned JSON file plus flag overrides.

Flags win over file values; the provenance hash embedded in every artifact is
computed over the effective (post-override) configuration, so identical
artifacts really do mean identical runs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .network import TrainConfig
from .phase1 import Phase1Params
from .search import SearchParams

CONFIG_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    oracle: str = "synthetic:domain.json"
    stock: str = "oracle"
    seed: int = 0
    output_dir: str = "out"
    search: SearchParams = field(default_factory=SearchParams)
    phase1: Phase1Params = field(default_factory=Phase1Params)
    train: TrainConfig = field(default_factory=TrainConfig)
    weights: Optional[str] = None
    train_targets: Optional[str] = None
    validation_targets: Optional[str] = None
    test_targets: Optional[str] = None
    jobs: int = 1

    def to_dict(self) -> dict:
        doc = {
            "version": CONFIG_VERSION,
            "oracle": self.oracle,
            "stock": self.stock,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "jobs": self.jobs,
            "weights": self.weights,
            "targets": {
                "train": self.train_targets,
                "validation": self.validation_targets,
                "test": self.test_targets,
            },
            "search": asdict(self.search),
            "train": asdict(self.train),
            "phase1": {
                "epsilon1": self.phase1.epsilon1,
                "epsilon2": self.phase1.epsilon2,
                "window": self.phase1.window,
                "max_rounds": self.phase1.max_rounds,
                "accumulate": self.phase1.accumulate,
            },
        }
        return doc

    def config_hash(self) -> str:
        """Hash of the semantic configuration.  Artifact placement and worker
        counts do not change results, so they stay out of the hash."""
        doc = self.to_dict()
        doc.pop("output_dir", None)
        doc.pop("jobs", None)
        canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def provenance(self, weights_version: Optional[int] = None) -> dict:
        return {
            "config_hash": self.config_hash(),
            "seed": self.seed,
            "weights_version": weights_version,
        }


def _build_search(doc: dict) -> SearchParams:
    return SearchParams(
        c=doc.get("c", 0.5),
        z=doc.get("z", 10.0),
        iteration_limit=doc.get("iteration_limit", 500),
        k=doc.get("k", 50),
        stop_on_first_solution=doc.get("stop_on_first_solution", True),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {doc.get('version')!r}")

    search = _build_search(doc.get("search", {}))
    p1 = doc.get("phase1", {})
    phase1 = Phase1Params(
        epsilon1=p1.get("epsilon1", 0.015),
        epsilon2=p1.get("epsilon2", 3.0),
        window=p1.get("window", 5),
        max_rounds=p1.get("max_rounds", 10),
        accumulate=p1.get("accumulate", False),
        planning=search,
    )
    tr = doc.get("train", {})
    train = TrainConfig(
        epochs=tr.get("epochs", 20),
        dropout_rate=tr.get("dropout_rate", 0.1),
        learning_rate=tr.get("learning_rate", 1e-3),
        beta1=tr.get("beta1", 0.9),
        beta2=tr.get("beta2", 0.999),
        eps=tr.get("eps", 1e-8),
        batch_size=tr.get("batch_size", 128),
        seed=tr.get("seed", doc.get("seed", 0)),
    )
    targets = doc.get("targets", {})
    cfg = RunConfig(
        oracle=doc.get("oracle", "synthetic:domain.json"),
        stock=doc.get("stock", "oracle"),
        seed=doc.get("seed", 0),
        output_dir=doc.get("output_dir", "out"),
        search=search,
        phase1=phase1,
        train=train,
        weights=doc.get("weights"),
        train_targets=targets.get("train"),
        validation_targets=targets.get("validation"),
        test_targets=targets.get("test"),
        jobs=doc.get("jobs", 1),
    )
    _validate_files(cfg, base=path.parent)
    return cfg


def resolve_path(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def _validate_files(cfg: RunConfig, base: Path) -> None:
    checks = []
    if cfg.oracle.startswith("synthetic:"):
        checks.append(cfg.oracle.split(":", 1)[1])
    if cfg.stock.startswith("file:"):
        checks.append(cfg.stock.split(":", 1)[1])
    for t in (cfg.train_targets, cfg.validation_targets, cfg.test_targets, cfg.weights):
        if t is not None:
            checks.append(t)
    for rel in checks:
        if not resolve_path(base, rel).exists():
            raise ConfigError(f"config references missing file: {rel}")


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    """Command-line flags win over the config file."""
    search = cfg.search
    if getattr(args, "iterations", None) is not None:
        search = replace(search, iteration_limit=args.iterations)
    if getattr(args, "k", None) is not None:
        search = replace(search, k=args.k)
    if getattr(args, "c", None) is not None:
        search = replace(search, c=args.c)
    if getattr(args, "z", None) is not None:
        search = replace(search, z=args.z)
    if getattr(args, "stop_on_first", None) is not None:
        search = replace(search, stop_on_first_solution=args.stop_on_first == "true")
    out = replace(cfg, search=search, phase1=replace(cfg.phase1, planning=search))
    if getattr(args, "seed", None) is not None:
        out = replace(out, seed=args.seed,
                      train=replace(out.train, seed=args.seed))
    if getattr(args, "oracle", None) is not None:
        out = replace(out, oracle=args.oracle)
    if getattr(args, "weights", None) is not None:
        out = replace(out, weights=args.weights)
    if getattr(args, "jobs", None) is not None:
        out = replace(out, jobs=args.jobs)
    if getattr(args, "output_dir", None) is not None:
        out = replace(out, output_dir=args.output_dir)
    return out
