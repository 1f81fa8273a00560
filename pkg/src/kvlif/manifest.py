"""Run manifests: a JSON record of one CLI invocation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

# fields that legitimately differ between otherwise identical runs
VOLATILE_FIELDS = ("started_at", "wall_clock_s")


@dataclass
class RunManifest:
    command: str
    config: dict
    tool_version: str
    started_at: str = ""
    wall_clock_s: float = 0.0
    metrics: dict = field(default_factory=dict)
    robustness: list = field(default_factory=list)
    energy: dict = field(default_factory=dict)
    firing_rates: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    schema_version: int = 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls.from_json(Path(path).read_text())

    def numeric_content(self) -> dict:
        """Everything except wall-clock bookkeeping."""
        d = asdict(self)
        for key in VOLATILE_FIELDS:
            d.pop(key)
        return d
