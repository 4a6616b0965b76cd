"""Run manifests: resolved flags, seeds, and content hashes of inputs/outputs.

Every CLI command writes exactly one manifest into its output directory; the
recorded argv makes any run replayable, and the hashes let a reader verify
that artifacts were not edited after the fact.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__
from .errors import ArtifactError

MANIFEST_NAME = "manifest.json"


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    out_dir: str | Path,
    command: str,
    argv: list[str],
    config: dict,
    seeds: dict,
    inputs: list[Path] | None = None,
    outputs: list[Path] | None = None,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "sigdistill",
        "version": __version__,
        "command": command,
        "argv": argv,
        "config": config,
        "seeds": seeds,
        "inputs": {str(p): file_sha256(p) for p in (inputs or [])},
        "outputs": {
            str(Path(p).relative_to(out_dir)): file_sha256(p) for p in (outputs or [])
        },
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_manifest(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing manifest {path}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("tool") != "sigdistill":
        raise ArtifactError(f"{path} is not a sigdistill manifest")
    return manifest


def verify_manifest(path: str | Path) -> list[str]:
    """Return a list of problems (empty when all recorded hashes still match)."""
    manifest = read_manifest(path)
    base = Path(path).parent
    problems: list[str] = []
    for rel, digest in manifest.get("outputs", {}).items():
        target = base / rel
        if not target.exists():
            problems.append(f"missing output {rel}")
        elif file_sha256(target) != digest:
            problems.append(f"hash mismatch for {rel}")
    return problems
