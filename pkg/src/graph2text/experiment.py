"""Experiment manifests: ordered adaptation / fine-tuning / evaluation phases."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

PHASE_KINDS = ("lma", "sta", "finetune", "evaluate")


@dataclass(frozen=True)
class Phase:
    kind: str
    inputs: tuple[str, ...]
    transforms: tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PHASE_KINDS:
            raise ValueError(f"unknown phase kind {self.kind!r}")
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "transforms", tuple(self.transforms))


@dataclass(frozen=True)
class ExperimentManifest:
    name: str
    phases: tuple[Phase, ...]
    output_dir: Optional[str] = None
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        phases = tuple(p if isinstance(p, Phase) else Phase(**p) for p in self.phases)
        object.__setattr__(self, "phases", phases)
        if not phases:
            raise ValueError("a manifest needs at least one phase")
        kinds = [p.kind for p in phases]
        if "evaluate" in kinds and kinds.index("evaluate") != len(kinds) - 1:
            raise ValueError("the evaluate phase must come last")

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "output_dir": self.output_dir,
            "phases": [
                {**asdict(p), "inputs": list(p.inputs), "transforms": list(p.transforms)} for p in self.phases
            ],
            "notes": self.notes,
        }
        return json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ExperimentManifest:
        data = json.loads(text)
        return cls(
            name=data["name"],
            phases=[Phase(**p) for p in data["phases"]],
            output_dir=data.get("output_dir"),
            notes=data.get("notes", {}),
        )
