"""Run manifests: one per output directory, recording how to reproduce it."""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

MANIFEST_NAME = "manifest.json"


def build_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5, check=False,
        )
        described = out.stdout.strip()
        return described if described else "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    output_dir: str
    build: str = field(default_factory=build_describe)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "build": self.build,
        }

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / MANIFEST_NAME
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, out_dir: str | Path) -> "RunManifest":
        doc = json.loads((Path(out_dir) / MANIFEST_NAME).read_text())
        return cls(command=doc["command"], config=doc["config"], seed=doc["seed"],
                   output_dir=doc["output_dir"], build=doc.get("build", "unknown"))
