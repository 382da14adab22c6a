"""Run manifests: enough captured state to re-run any command bit-for-bit.

A manifest records the command, its fully resolved parameters, the seed,
the package version, SHA-256 digests of every input file, and the output
files written.  ``sbic replay`` re-executes the command from the
manifest; outputs must come out byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int
    version: str
    input_digests: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    wall_time_s: float = 0.0


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, manifest: RunManifest) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        json.dump(asdict(manifest), handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_manifest(path) -> RunManifest:
    with Path(path).open(encoding="utf-8") as handle:
        raw = json.load(handle)
    return RunManifest(
        command=raw["command"],
        params=raw["params"],
        seed=raw["seed"],
        version=raw["version"],
        input_digests=raw.get("input_digests", {}),
        outputs=raw.get("outputs", []),
        wall_time_s=raw.get("wall_time_s", 0.0),
    )
