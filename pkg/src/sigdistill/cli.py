"""Command-line entry point.

Progress goes to stderr, results go to files under --out, and nothing but
--print-table output is ever written to stdout. Exit codes: 0 success,
2 usage, 3 I/O, 4 validation, 5 external-service failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SigdistillError, UsageError, ValidationError
from .labeler import (
    ConfusionModel,
    ConfusionTeacher,
    OracleTeacher,
    SystematicTeacher,
    Teacher,
    UniformNoiseTeacher,
    VlmClient,
    VlmTeacher,
    default_confusion_model,
    save_labels,
)
from .labeler.records import NoiseSpec, VlmEndpointConfig
from .labeler.vlm import LabelingResult
from .manifest import read_manifest, write_manifest
from .nncore import grad_check, load_checkpoint, save_checkpoint
from .rng import stream
from .signalgen import DatasetSpec, load_dataset, make_dataset, save_dataset
from .trainer import (
    TrainConfig,
    evaluate,
    labels_to_map,
    run_trials,
    teacher_quality,
    train,
)
from .experiments import (
    compare_table1,
    inheritance_study,
    noise_ratio_sweep,
    sample_size_sweep,
    write_report,
)
from .experiments.report import (
    inheritance_to_dict,
    render_confusion_csv,
    render_table1,
    save_json,
    sweep_to_dict,
    table1_to_dict,
    trials_to_dict,
)


def log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _add_dataset_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-per-class", type=int, default=1000)
    p.add_argument("--length", type=int, default=256)
    p.add_argument("--seed", type=int, default=0, help="dataset generation seed")
    p.add_argument(
        "--ratios", default="0.9,0.05,0.05", help="train/val/test ratios, comma separated"
    )


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=0.01)
    p.add_argument("--scheduler-patience", type=int, default=2)
    p.add_argument(
        "--stop-patience",
        type=int,
        default=None,
        help="stop a trial early after this many epochs without val improvement",
    )
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--train-seed", type=int, default=0, help="base seed for splits/init/labels")
    p.add_argument("--jobs", type=int, default=1, help="max concurrent trials or requests")


def _add_vlm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--base-url", default="https://api.openai.com/v1")
    p.add_argument("--model", default="gpt-4o")
    p.add_argument("--api-key-env", default="SIGDISTILL_API_KEY")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--cache", default=None, help="path to the VLM response cache")


def _spec_from(args) -> DatasetSpec:
    try:
        ratios = tuple(float(r) for r in args.ratios.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --ratios value: {exc}") from exc
    if args.n_per_class < 1:
        raise UsageError("--n-per-class must be >= 1")
    return DatasetSpec(
        n_per_class=args.n_per_class, ratios=ratios, length=args.length, seed=args.seed
    )


def _config_from(args, validate_on: str = "ground_truth") -> TrainConfig:
    if args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        weight_decay=args.weight_decay,
        scheduler_patience=args.scheduler_patience,
        stop_patience=args.stop_patience,
        trials=args.trials,
        base_seed=args.train_seed,
        validate_on=validate_on,
    )


def _config_dict(config: TrainConfig) -> dict:
    return {
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "lr": config.lr,
        "weight_decay": config.weight_decay,
        "scheduler_patience": config.scheduler_patience,
        "stop_patience": config.stop_patience,
        "trials": config.trials,
        "base_seed": config.base_seed,
        "validate_on": config.validate_on,
    }


def _parse_teacher(spec_str: str, args, seed: int) -> Teacher:
    kind, _, arg = spec_str.partition(":")
    if kind == "oracle":
        return OracleTeacher()
    if kind == "uniform":
        try:
            rho = float(arg)
        except ValueError as exc:
            raise UsageError(f"uniform teacher needs a ratio, e.g. uniform:0.8 ({exc})") from exc
        return UniformNoiseTeacher(NoiseSpec(rho))
    if kind == "confusion":
        if not arg or arg == "default":
            return ConfusionTeacher(default_confusion_model())
        data = json.loads(Path(arg).read_text(encoding="utf-8"))
        return ConfusionTeacher(ConfusionModel(data["matrix"]))
    if kind == "systematic":
        return SystematicTeacher()
    if kind == "vlm":
        config = VlmEndpointConfig(
            base_url=args.base_url,
            model=args.model,
            api_key_env=args.api_key_env,
            temperature=args.temperature,
            timeout=args.timeout,
            max_retries=args.max_retries,
            max_concurrent=max(1, args.jobs),
        )
        client = VlmClient(config, cache_path=args.cache)
        return VlmTeacher(client, seed)
    raise UsageError(f"unknown teacher {spec_str!r}")


# ---------------------------------------------------------------------------
# Commands

def cmd_gen(args, argv: list[str]) -> int:
    spec = _spec_from(args)
    out_dir = Path(args.out)
    log(f"generating {spec.n_per_class * 10} samples of length {spec.length} (seed {spec.seed})")
    dataset = make_dataset(spec)
    paths = save_dataset(dataset, out_dir)
    counts = {s: len(dataset.split(s)) for s in ("train", "val", "test")}
    log(f"wrote {counts['train']}/{counts['val']}/{counts['test']} records to {out_dir}")
    write_manifest(
        out_dir,
        "gen",
        argv,
        config={
            "n_per_class": spec.n_per_class,
            "ratios": list(spec.ratios),
            "length": spec.length,
        },
        seeds={"dataset": spec.seed},
        outputs=list(paths.values()),
    )
    return 0


def cmd_label(args, argv: list[str]) -> int:
    dataset = load_dataset(args.dataset)
    samples = dataset.split(args.split)
    teacher = _parse_teacher(args.teacher, args, seed=args.label_seed)
    out_path = Path(args.out)
    log(f"labeling {len(samples)} {args.split} samples with teacher {teacher.name!r}")
    if isinstance(teacher, VlmTeacher):
        result = teacher.client.label_samples(samples, seed=args.label_seed, jobs=args.jobs)
        records, failures = result.records, result.failures
    else:
        rng = stream(args.label_seed, "labels", args.split)
        records = [teacher.label(ts, rng) for ts in samples]
        failures = []
    save_labels(records, out_path, teacher=teacher.name, failures=failures)
    quality, n_labeled, n_excluded = teacher_quality(records, samples)
    log(
        f"teacher quality vs ground truth: {quality:.4f} "
        f"({n_labeled} labeled, {n_excluded} excluded)"
    )
    write_manifest(
        out_path.parent,
        "label",
        argv,
        config={"teacher": teacher.name, "split": args.split},
        seeds={"labels": args.label_seed},
        inputs=[Path(args.dataset) / f"{args.split}.jsonl"],
        outputs=[out_path],
    )
    return 0


def cmd_train(args, argv: list[str]) -> int:
    out_dir = Path(args.out)
    dataset = load_dataset(args.dataset)
    outputs: list[Path] = []
    if (args.labels is None) == (args.teacher is None):
        raise UsageError("pass exactly one of --labels or --teacher")
    if args.labels:
        from .labeler.io import load_labels

        config = _config_from(args)
        records, _, header = load_labels(args.labels)
        labels = labels_to_map(records, known_ids={ts.id for ts in dataset.train})
        train_ts = [ts for ts in dataset.train if ts.id in labels]
        dropped = len(dataset.train) - len(train_ts)
        if dropped:
            log(f"excluding {dropped} unlabeled training samples")
        model, history = train(train_ts, labels, dataset.val, config, seed=config.base_seed)
        result = evaluate(model, dataset.test)
        ckpt = out_dir / "checkpoints" / "trial_0.ckpt"
        save_checkpoint(model, ckpt, epoch=history.best_epoch, val_accuracy=history.best_val_accuracy)
        outputs.append(ckpt)
        payload = {
            "kind": "training",
            "teacher": header.get("teacher", "file"),
            "config": _config_dict(config),
            "summary": {"accuracies": [result.accuracy], "mean": result.accuracy, "std": 0.0},
            "trials": [
                {
                    "trial": 0,
                    "test": {
                        "accuracy": result.accuracy,
                        "confusion": result.confusion.tolist(),
                        "per_class_recall": [float(r) for r in result.per_class_recall],
                    },
                    "history": {
                        "train_loss": history.train_loss,
                        "val_accuracy": history.val_accuracy,
                        "lr": history.lr,
                        "best_epoch": history.best_epoch,
                        "best_val_accuracy": history.best_val_accuracy,
                    },
                }
            ],
        }
        log(f"test accuracy {result.accuracy:.4f} (best epoch {history.best_epoch})")
    else:
        teacher = _parse_teacher(args.teacher, args, seed=args.train_seed)
        config = _config_from(args)
        log(f"{config.trials} trials x {config.epochs} epochs with teacher {teacher.name!r}")
        runs = run_trials(dataset.spec, teacher, config, jobs=args.jobs, keep_models=True)
        for t, model in zip(runs.trials, runs.models):
            ckpt = out_dir / "checkpoints" / f"trial_{t.trial}.ckpt"
            save_checkpoint(
                model, ckpt, epoch=t.history.best_epoch, val_accuracy=t.history.best_val_accuracy
            )
            outputs.append(ckpt)
        payload = trials_to_dict(runs)
        log(f"mean test accuracy {runs.summary.mean:.4f} (std {runs.summary.std:.4f})")
    results_path = out_dir / "results" / "train_results.json"
    save_json(payload, results_path)
    outputs.append(results_path)
    write_manifest(
        out_dir,
        "train",
        argv,
        config=_config_dict(config),
        seeds={"train": args.train_seed, "dataset": dataset.spec.seed},
        inputs=[Path(args.dataset) / "train.jsonl"],
        outputs=outputs,
    )
    return 0


def cmd_eval(args, argv: list[str]) -> int:
    model, header = load_checkpoint(args.checkpoint)
    dataset = load_dataset(args.dataset)
    samples = dataset.split(args.split)
    result = evaluate(model, samples)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"confusion_{args.split}.csv"
    csv_path.write_text(render_confusion_csv(result.confusion.tolist()), encoding="utf-8")
    log(f"{args.split} accuracy {result.accuracy:.4f} over {result.total} samples")
    if args.print_table:
        print(render_confusion_csv(result.confusion.tolist()), end="")
    write_manifest(
        out_dir,
        "eval",
        argv,
        config={"split": args.split},
        seeds={},
        inputs=[Path(args.checkpoint), Path(args.dataset) / f"{args.split}.jsonl"],
        outputs=[csv_path],
    )
    return 0


def cmd_sweep_noise(args, argv: list[str]) -> int:
    try:
        ratios = [float(r) for r in args.ratios.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad --ratios value: {exc}") from exc
    spec = _spec_from(args)
    config = _config_from(args)
    log(f"noise sweep over ratios {ratios} ({config.trials} trials each)")
    result = noise_ratio_sweep(ratios, spec, config, jobs=args.jobs)
    out_dir = Path(args.out)
    path = out_dir / "results" / "noise_sweep.json"
    save_json(sweep_to_dict(result), path)
    for rho, s in zip(result.grid, result.summaries):
        log(f"  ratio {rho:g}: mean {s.mean:.4f} std {s.std:.4f}")
    write_manifest(
        out_dir,
        "sweep-noise",
        argv,
        config={**_config_dict(config), "ratios": ratios, "n_per_class": spec.n_per_class,
                "length": spec.length},
        seeds={"dataset": spec.seed, "train": config.base_seed},
        outputs=[path],
    )
    return 0


def cmd_sweep_size(args, argv: list[str]) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad --sizes value: {exc}") from exc
    spec = _spec_from(args)
    config = _config_from(args)
    log(f"size sweep over {sizes} ({config.trials} trials each)")
    result = sample_size_sweep(sizes, spec, config, jobs=args.jobs)
    out_dir = Path(args.out)
    path = out_dir / "results" / "size_sweep.json"
    save_json(sweep_to_dict(result), path)
    for size, s in zip(result.grid, result.summaries):
        log(f"  size {int(size)}: mean {s.mean:.4f} std {s.std:.4f}")
    write_manifest(
        out_dir,
        "sweep-size",
        argv,
        config={**_config_dict(config), "sizes": sizes, "n_per_class": spec.n_per_class,
                "length": spec.length},
        seeds={"dataset": spec.seed, "train": config.base_seed},
        outputs=[path],
    )
    return 0


def cmd_table1(args, argv: list[str]) -> int:
    spec = _spec_from(args)
    config = _config_from(args)
    teacher = _parse_teacher(args.teacher, args, seed=args.train_seed)
    log(f"teacher/student comparison with teacher {teacher.name!r}")
    result = compare_table1(spec, config, teacher=teacher, jobs=args.jobs)
    out_dir = Path(args.out)
    path = out_dir / "results" / "table1.json"
    data = table1_to_dict(result)
    save_json(data, path)
    log(render_table1(data).rstrip("\n"))
    if args.print_table:
        print(render_table1(data), end="")
    write_manifest(
        out_dir,
        "table1",
        argv,
        config={**_config_dict(config), "teacher": teacher.name, "n_per_class": spec.n_per_class,
                "length": spec.length},
        seeds={"dataset": spec.seed, "train": config.base_seed},
        outputs=[path],
    )
    return 0


def cmd_inherit(args, argv: list[str]) -> int:
    spec = _spec_from(args)
    config = _config_from(args)
    log("training treatment (systematic teacher) and matched uniform control")
    report = inheritance_study(spec, config)
    out_dir = Path(args.out)
    path = out_dir / "results" / "inheritance.json"
    save_json(inheritance_to_dict(report), path)
    log(
        f"inheritance rate {report.inheritance_rate:.4f}, "
        f"control region error rate {report.control_error_rate:.4f} "
        f"({report.n_teacher_errors} flipped labels per arm)"
    )
    write_manifest(
        out_dir,
        "inherit",
        argv,
        config={**_config_dict(config), "n_per_class": spec.n_per_class, "length": spec.length},
        seeds={"dataset": spec.seed, "train": config.base_seed},
        outputs=[path],
    )
    return 0


def cmd_gradcheck(args, argv: list[str]) -> int:
    report = grad_check(seed=args.seed, tolerance=args.tolerance)
    status = "PASS" if report.passed else "FAIL"
    log(
        f"max relative error {report.max_relative_error:.3e} "
        f"(worst parameter {report.worst_param!r}, tolerance {report.tolerance:g}): {status}"
    )
    return 0 if report.passed else ValidationError.exit_code


def cmd_report(args, argv: list[str]) -> int:
    written = write_report(args.run_dir)
    for path in written:
        log(f"wrote {path}")
    return 0


def cmd_replay(args, argv: list[str]) -> int:
    manifest = read_manifest(args.manifest)
    recorded = manifest.get("argv")
    if not recorded:
        raise UsageError(f"manifest {args.manifest} records no argv to replay")
    log(f"replaying: sigdistill {' '.join(recorded)}")
    return main(recorded)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigdistill",
        description="Generate signals, label them with imperfect teachers, "
        "train a student, and study how label errors propagate.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset")
    _add_dataset_spec_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("label", help="produce pseudo labels for a dataset split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="train", choices=["train", "val", "test"])
    p.add_argument(
        "--teacher",
        required=True,
        help="oracle | uniform:RHO | confusion[:FILE] | systematic | vlm",
    )
    p.add_argument("--out", required=True)
    p.add_argument("--label-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    _add_vlm_flags(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="train student(s) on pseudo labels")
    p.add_argument("--dataset", required=True)
    p.add_argument("--labels", default=None, help="labels file (single training run)")
    p.add_argument("--teacher", default=None, help="teacher spec (multi-trial run)")
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    _add_vlm_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--out", required=True)
    p.add_argument("--print-table", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-noise", help="accuracy vs correct-label ratio")
    p.add_argument("--ratios", default="1.0,0.8,0.6,0.4")
    _add_dataset_spec_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_noise)

    p = sub.add_parser("sweep-size", help="accuracy vs training-set size")
    p.add_argument("--sizes", default="90,300,900,3000,9000")
    _add_dataset_spec_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_size)

    p = sub.add_parser("table1", help="teacher vs student comparison table")
    p.add_argument("--teacher", default="confusion")
    _add_dataset_spec_flags(p)
    _add_train_flags(p)
    _add_vlm_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--print-table", action="store_true")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("inherit", help="systematic-error inheritance study")
    _add_dataset_spec_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inherit)

    p = sub.add_parser("gradcheck", help="verify gradients against finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("report", help="render report files from run artifacts")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except SigdistillError as exc:
        log(f"error: {exc}")
        return exc.exit_code
    except OSError as exc:
        log(f"I/O error: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
