"""Single-document run configuration with dotted-path overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .graph import HeteroGraph  # noqa: F401  (re-export convenience)
from .grpo import GrpoConfig
from .model import GnnConfig
from .store import LabelBudget, SynthConfig
from .training import TrainConfig

DEFAULT_PATHS = {
    "data": "dataset.jsonl",
    "graph": "graph.json",
    "model": "model.json",
    "reports": "reports",
}


@dataclass
class RunConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    budget: LabelBudget = field(default_factory=lambda: LabelBudget(gt_ratio=0.2))
    gnn: GnnConfig = field(default_factory=lambda: GnnConfig(input_dim=16))
    train: TrainConfig = field(default_factory=TrainConfig)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    k: int = 7
    paths: dict = field(default_factory=lambda: dict(DEFAULT_PATHS))

    def validate(self) -> None:
        self.synth.validate()
        self.gnn.validate()
        self.train.validate()
        self.grpo.validate()
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.gnn.input_dim != self.synth.embedding_dim:
            raise ValueError(
                f"gnn.input_dim ({self.gnn.input_dim}) must match "
                f"synth.embedding_dim ({self.synth.embedding_dim})"
            )

    def to_dict(self) -> dict:
        return {
            "synth": asdict(self.synth),
            "budget": asdict(self.budget),
            "gnn": asdict(self.gnn),
            "train": asdict(self.train),
            "grpo": asdict(self.grpo),
            "k": self.k,
            "paths": dict(self.paths),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        cfg = cls()
        if "synth" in obj:
            cfg.synth = SynthConfig(**obj["synth"])
        if "budget" in obj:
            cfg.budget = LabelBudget(**obj["budget"])
        if "gnn" in obj:
            cfg.gnn = GnnConfig(**obj["gnn"])
        if "train" in obj:
            cfg.train = TrainConfig(**obj["train"])
        if "grpo" in obj:
            cfg.grpo = GrpoConfig(**obj["grpo"])
        cfg.k = int(obj.get("k", cfg.k))
        paths = dict(DEFAULT_PATHS)
        paths.update(obj.get("paths", {}))
        cfg.paths = paths
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def set_seed(self, seed: int) -> None:
        """Propagate one master seed into every stage."""
        self.synth.seed = seed
        self.budget.seed = seed
        self.gnn.seed = seed
        self.train.seed = seed
        self.grpo.seed = seed

    def apply_override(self, spec: str) -> None:
        """Apply one --set KEY=VALUE override with a dotted key path."""
        if "=" not in spec:
            raise ValueError(f"--set expects KEY=VALUE, got {spec!r}")
        key, raw = spec.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = key.strip().split(".")
        target = self
        for part in parts[:-1]:
            target = target[part] if isinstance(target, dict) else getattr(target, part)
        leaf = parts[-1]
        if isinstance(target, dict):
            target[leaf] = value
            return
        if not any(f.name == leaf for f in fields(target)):
            raise ValueError(f"unknown config field {key!r}")
        setattr(target, leaf, value)
