"""Labels file: JSONL with a header carrying teacher id and failure counts.

Failed samples (unparseable teacher responses) are written as records with a
null label and the error kind, so exclusions stay auditable.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from ..errors import ArtifactError
from ..signalgen import SignalClass
from .records import LabelRecord

LABELS_FORMAT = "sigdistill.labels"
LABELS_VERSION = 1


def save_labels(
    records: list[LabelRecord],
    path: str | Path,
    teacher: str,
    failures: list | None = None,
    config_hash: str = "",
) -> None:
    failures = failures or []
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format": LABELS_FORMAT,
        "version": LABELS_VERSION,
        "teacher": teacher,
        "config_hash": config_hash,
        "total": len(records) + len(failures),
        "failed": len(failures),
    }
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "sample_id": rec.sample_id,
                        "label_id": int(rec.label),
                        "label_name": rec.label.display_name,
                        "teacher": rec.teacher,
                        "option_permutation": list(rec.option_permutation),
                        "raw_response": rec.raw_response,
                        "correct": rec.correct,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
        for fail in failures:
            fh.write(
                json.dumps(
                    {
                        "sample_id": fail.sample_id,
                        "label_id": None,
                        "error": fail.error,
                        "raw_response": fail.raw_response,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_labels(path: str | Path) -> tuple[list[LabelRecord], list[dict], dict]:
    """Returns (records, failure rows, header)."""
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing labels file {path}")
    records: list[LabelRecord] = []
    failures: list[dict] = []
    with path.open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != LABELS_FORMAT:
            raise ArtifactError(f"{path} is not a labels file")
        for line in fh:
            row = json.loads(line)
            if row.get("label_id") is None:
                failures.append(row)
                continue
            records.append(
                LabelRecord(
                    sample_id=row["sample_id"],
                    label=SignalClass(row["label_id"]),
                    teacher=row["teacher"],
                    option_permutation=tuple(row.get("option_permutation") or ()),
                    raw_response=row.get("raw_response"),
                    correct=row.get("correct"),
                )
            )
    if header["failed"] != len(failures):
        raise ArtifactError(f"{path}: header failure count does not match records")
    return records, failures, header


def labels_content_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]
