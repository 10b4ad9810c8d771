"""Run manifests: what produced an output, from which inputs, with which seeds."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    flags: dict
    input_digests: dict[str, str]
    seeds: list[int] = field(default_factory=list)
    artifact_version: str = __version__
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat()


def build_manifest(command: str, flags: dict, inputs: list[str | Path], seeds: list[int] | None = None) -> RunManifest:
    digests = {str(p): file_digest(p) for p in inputs if Path(p).is_file()}
    return RunManifest(command=command, flags={k: str(v) for k, v in flags.items()}, input_digests=digests, seeds=list(seeds or []))


def write_manifest(manifest: RunManifest, target: str | Path) -> Path:
    """Write manifest.json inside a directory target, or a .manifest.json sidecar
    next to a file target."""
    target = Path(target)
    if target.is_dir():
        path = target / "manifest.json"
    else:
        path = target.with_name(target.name + ".manifest.json")
    path.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True), encoding="utf-8")
    return path
