"""Serialize study results and render the report files.

A run directory holds ``results/*.json`` (each tagged with a ``kind`` field);
``write_report`` renders them into ``report/``: a text table for the
teacher/student comparison, per-trial CSVs for sweeps, confusion matrices and
projections as CSV. Rendering is pure text generation, so regenerating from
the same artifacts is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import ArtifactError
from ..signalgen import SignalClass
from ..trainer import EvalResult, TrialsResult, TrialSummary
from .embedding import EmbeddingProjection
from .runs import InheritanceReport, SweepResult, Table1Result

RESULTS_DIR = "results"
REPORT_DIR = "report"
KNOWN_KINDS = ("table1", "noise_sweep", "size_sweep", "inheritance", "training")


def _summary_dict(s: TrialSummary) -> dict:
    return {"accuracies": s.accuracies, "mean": s.mean, "std": s.std}


def _eval_dict(e: EvalResult) -> dict:
    return {
        "accuracy": e.accuracy,
        "confusion": e.confusion.tolist(),
        "per_class_recall": [float(r) for r in e.per_class_recall],
    }


def _history_dict(h) -> dict:
    return {
        "train_loss": h.train_loss,
        "val_accuracy": h.val_accuracy,
        "lr": h.lr,
        "best_epoch": h.best_epoch,
        "best_val_accuracy": h.best_val_accuracy,
    }


def _config_dict(config) -> dict:
    d = asdict(config)
    arch = d.pop("arch", None)
    if arch is not None:
        arch["conv_stages"] = [list(s) for s in arch["conv_stages"]]
    d["arch"] = arch
    return d


def trials_to_dict(result: TrialsResult) -> dict:
    return {
        "kind": "training",
        "teacher": result.teacher,
        "config": _config_dict(result.config),
        "summary": _summary_dict(result.summary),
        "trials": [
            {
                "trial": t.trial,
                "test": _eval_dict(t.test),
                "train": _eval_dict(t.train),
                "teacher_train_accuracy": t.teacher_train_accuracy,
                "teacher_test_accuracy": t.teacher_test_accuracy,
                "history": _history_dict(t.history),
            }
            for t in result.trials
        ],
    }


def table1_to_dict(result: Table1Result) -> dict:
    return {
        "kind": "table1",
        "chance": result.chance,
        "teacher_train": _summary_dict(result.teacher_train),
        "teacher_test": _summary_dict(result.teacher_test),
        "student_pseudo_train": _summary_dict(result.student_pseudo_train),
        "student_pseudo_test": _summary_dict(result.student_pseudo_test),
        "student_gt_train": _summary_dict(result.student_gt_train),
        "student_gt_test": _summary_dict(result.student_gt_test),
        "pseudo_runs": trials_to_dict(result.pseudo_runs),
        "gt_runs": trials_to_dict(result.gt_runs),
    }


def sweep_to_dict(result: SweepResult) -> dict:
    return {
        "kind": "noise_sweep" if result.swept == "correct_ratio" else "size_sweep",
        "swept": result.swept,
        "grid": result.grid,
        "summaries": [_summary_dict(s) for s in result.summaries],
        "runs": [trials_to_dict(r) for r in result.runs],
    }


def projection_to_dict(proj: EmbeddingProjection) -> dict:
    return {
        "sample_ids": proj.sample_ids,
        "coords": proj.coords.tolist(),
        "assigned_label_ids": proj.assigned_label_ids,
        "gt_ids": proj.gt_ids,
        "explained_variance": [float(v) for v in proj.explained_variance],
    }


def inheritance_to_dict(report: InheritanceReport) -> dict:
    return {
        "kind": "inheritance",
        "n_teacher_errors": report.n_teacher_errors,
        "region_test_ids": report.region_test_ids,
        "treatment_region_predictions": report.treatment_region_predictions,
        "control_region_predictions": report.control_region_predictions,
        "inheritance_rate": report.inheritance_rate,
        "control_error_rate": report.control_error_rate,
        "treatment_test_accuracy": report.treatment_test_accuracy,
        "control_test_accuracy": report.control_test_accuracy,
        "train_projection": projection_to_dict(report.train_projection)
        if report.train_projection
        else None,
        "test_projection": projection_to_dict(report.test_projection)
        if report.test_projection
        else None,
    }


def save_json(data: dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Rendering

def _pct(mean: float, std: float | None = None) -> str:
    if std is None:
        return f"{100 * mean:.2f}"
    return f"{100 * mean:.2f} ({100 * std:.2f})"


def render_table1(d: dict) -> str:
    rows = [
        ("random (chance)", _pct(d["chance"]), _pct(d["chance"])),
        (
            "teacher",
            _pct(d["teacher_train"]["mean"], d["teacher_train"]["std"]),
            _pct(d["teacher_test"]["mean"], d["teacher_test"]["std"]),
        ),
        (
            "student (pseudo labels)",
            _pct(d["student_pseudo_train"]["mean"], d["student_pseudo_train"]["std"]),
            _pct(d["student_pseudo_test"]["mean"], d["student_pseudo_test"]["std"]),
        ),
        (
            "student (ground truth)",
            _pct(d["student_gt_train"]["mean"], d["student_gt_train"]["std"]),
            _pct(d["student_gt_test"]["mean"], d["student_gt_test"]["std"]),
        ),
    ]
    lines = [f"{'':28s}{'Train':>16s}{'Test':>16s}"]
    for name, train_s, test_s in rows:
        lines.append(f"{name:28s}{train_s:>16s}{test_s:>16s}")
    return "\n".join(lines) + "\n"


def render_sweep_csv(d: dict) -> str:
    lines = ["value,kind,trial,accuracy,std"]
    for value, summary in zip(d["grid"], d["summaries"]):
        for t, acc in enumerate(summary["accuracies"]):
            lines.append(f"{value:g},trial,{t},{acc!r},")
        lines.append(f"{value:g},summary,,{summary['mean']!r},{summary['std']!r}")
    return "\n".join(lines) + "\n"


def render_confusion_csv(confusion: list[list[int]]) -> str:
    names = [c.display_name for c in SignalClass]
    lines = ["true\\pred," + ",".join(names)]
    for cls, row in zip(names, confusion):
        lines.append(cls + "," + ",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def render_projection_csv(proj: dict) -> str:
    lines = ["id,x,y,label_id,gt_id"]
    for sid, (x, y), lab, gt in zip(
        proj["sample_ids"], proj["coords"], proj["assigned_label_ids"], proj["gt_ids"]
    ):
        lines.append(f"{sid},{x!r},{y!r},{lab},{gt}")
    return "\n".join(lines) + "\n"


def render_inheritance_txt(d: dict) -> str:
    lines = [
        f"teacher errors injected:      {d['n_teacher_errors']}",
        f"region test cubics:           {len(d['region_test_ids'])}",
        f"inheritance rate (treatment): {d['inheritance_rate']:.4f}",
        f"region error rate (control):  {d['control_error_rate']:.4f}",
        f"treatment test accuracy:      {d['treatment_test_accuracy']:.4f}",
        f"control test accuracy:        {d['control_test_accuracy']:.4f}",
    ]
    return "\n".join(lines) + "\n"


def write_report(run_dir: str | Path) -> list[Path]:
    """Render every known artifact under run_dir/results into run_dir/report."""
    run_dir = Path(run_dir)
    results_dir = run_dir / RESULTS_DIR
    expected = ", ".join(f"{k}.json" for k in KNOWN_KINDS)
    if not results_dir.is_dir():
        raise ArtifactError(
            f"no {RESULTS_DIR}/ directory under {run_dir}; expected artifacts like: {expected}"
        )
    artifacts = sorted(results_dir.glob("*.json"))
    if not artifacts:
        raise ArtifactError(f"no artifacts in {results_dir}; expected files like: {expected}")
    report_dir = run_dir / REPORT_DIR
    report_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, text: str) -> None:
        path = report_dir / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    for artifact in artifacts:
        d = json.loads(artifact.read_text(encoding="utf-8"))
        kind = d.get("kind")
        stem = artifact.stem
        if kind == "table1":
            emit(f"{stem}.txt", render_table1(d))
            mean_conf = _mean_confusion(d["pseudo_runs"])
            emit(f"{stem}_confusion_student_test.csv", render_confusion_csv(mean_conf))
        elif kind in ("noise_sweep", "size_sweep"):
            emit(f"{stem}.csv", render_sweep_csv(d))
        elif kind == "inheritance":
            emit(f"{stem}.txt", render_inheritance_txt(d))
            if d.get("train_projection"):
                emit(f"{stem}_train_projection.csv", render_projection_csv(d["train_projection"]))
            if d.get("test_projection"):
                emit(f"{stem}_test_projection.csv", render_projection_csv(d["test_projection"]))
        elif kind == "training":
            for t in d["trials"]:
                emit(
                    f"{stem}_confusion_test_trial{t['trial']}.csv",
                    render_confusion_csv(t["test"]["confusion"]),
                )
        else:
            raise ArtifactError(f"{artifact} has unknown kind {kind!r}; expected one of {KNOWN_KINDS}")
    return written


def _mean_confusion(training_dict: dict) -> list[list[int]]:
    mats = [np.asarray(t["test"]["confusion"]) for t in training_dict["trials"]]
    return np.sum(mats, axis=0).tolist()
