"""Run manifests: the reproducibility record written beside every output.

A manifest captures the command, its flag snapshot, content digests of
every input and output file, the seed, and the tool version. No clocks,
no hostnames: reruns with identical flags produce identical manifests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import __version__
from .jsonl import sha256_file, write_json


@dataclass
class RunManifest:
    command: str
    config: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    seed: Optional[int] = None
    version: str = __version__

    def to_record(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seed": self.seed,
            "version": self.version,
        }


def _digest_map(paths: list[str | Path]) -> dict[str, str]:
    return {str(p): sha256_file(p) for p in sorted(paths, key=str)}


def build_manifest(
    command: str,
    config: dict[str, Any],
    input_paths: list[str | Path],
    output_paths: list[str | Path],
    seed: Optional[int] = None,
) -> RunManifest:
    return RunManifest(
        command=command,
        config=config,
        inputs=_digest_map(input_paths),
        outputs=_digest_map(output_paths),
        seed=seed,
    )


def write_manifest(path: str | Path, manifest: RunManifest) -> None:
    write_json(path, manifest.to_record())


def manifest_path_for(output: str | Path) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")
