"""Parametric generators for the ten signal shape classes and dataset assembly.

Base curves are defined on normalized time t in [0, 1], so the sample count L
is a pure sampling rate. Each base shape is scaled to unit range before the
amplitude/offset transform, which makes ``amplitude`` exactly the span of the
noiseless signal and keeps the noise budget (at most 5% of amplitude)
comparable across classes. Scale-only coefficients (the linear slope, the
quadratic curvature) are sampled and recorded but absorbed by that
normalization; shape-defining coefficients (rate, steepness, midpoint, roots,
center, width, vertex) survive it.

Dataset values are min-max normalized to [0, 1] after noise addition, so a
downstream consumer sees shape, not scale.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ArtifactError, ValidationError
from .rng import stream

N_CLASSES = 10

DATASET_FORMAT = "sigdistill.dataset"
DATASET_VERSION = 1
SPLITS = ("train", "val", "test")


class SignalClass(IntEnum):
    """The ten shape classes, ids stable and names matching the prompt options."""

    CONSTANT = 0
    LINEAR_INCREASE = 1
    LINEAR_DECREASE = 2
    CONCAVE = 3
    CONVEX = 4
    EXPONENTIAL_GROWTH = 5
    EXPONENTIAL_DECAY = 6
    SIGMOID = 7
    CUBIC_FUNCTION = 8
    GAUSSIAN = 9

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]


_DISPLAY_NAMES = {
    SignalClass.CONSTANT: "constant",
    SignalClass.LINEAR_INCREASE: "linear increase",
    SignalClass.LINEAR_DECREASE: "linear decrease",
    SignalClass.CONCAVE: "concave",
    SignalClass.CONVEX: "convex",
    SignalClass.EXPONENTIAL_GROWTH: "exponential growth",
    SignalClass.EXPONENTIAL_DECAY: "exponential decay",
    SignalClass.SIGMOID: "sigmoid",
    SignalClass.CUBIC_FUNCTION: "cubic function",
    SignalClass.GAUSSIAN: "gaussian",
}

# Documented sampling ranges. amplitude/offset/noise apply to every class;
# the rest are per-class shape coefficients, sampled uniformly.
AMPLITUDE_RANGE = (0.5, 2.0)
OFFSET_RANGE = (-1.0, 1.0)
NOISE_SIGMA_FRACTION = 0.05  # noise sigma ~ U[0, 0.05 * amplitude]
SHAPE_RANGES: dict[SignalClass, dict[str, tuple[float, float]]] = {
    SignalClass.CONSTANT: {},
    SignalClass.LINEAR_INCREASE: {"slope": (0.5, 2.0)},
    SignalClass.LINEAR_DECREASE: {"slope": (0.5, 2.0)},
    SignalClass.CONCAVE: {"curvature": (1.5, 4.0), "vertex": (0.4, 0.6)},
    SignalClass.CONVEX: {"curvature": (1.5, 4.0), "vertex": (0.4, 0.6)},
    SignalClass.EXPONENTIAL_GROWTH: {"rate": (1.0, 4.0)},
    SignalClass.EXPONENTIAL_DECAY: {"rate": (1.0, 4.0)},
    SignalClass.SIGMOID: {"steepness": (5.0, 30.0), "midpoint": (0.2, 0.8)},
    SignalClass.CUBIC_FUNCTION: {},  # three roots, see CUBIC_ROOT_MIN_GAP
    SignalClass.GAUSSIAN: {"center": (0.2, 0.8), "width": (0.05, 0.2)},
}
CUBIC_ROOT_MIN_GAP = 0.15


@dataclass(frozen=True)
class SignalParams:
    """Everything needed to regenerate one signal (minus the noise draw)."""

    signal_class: SignalClass
    amplitude: float
    offset: float
    noise_sigma: float
    shape: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.noise_sigma >= 0):
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        for name, (lo, hi) in SHAPE_RANGES[self.signal_class].items():
            if name not in self.shape:
                raise ValidationError(
                    f"{self.signal_class.display_name} params missing {name!r}"
                )
            if not (lo <= self.shape[name] <= hi):
                raise ValidationError(
                    f"{name}={self.shape[name]} outside [{lo}, {hi}] "
                    f"for {self.signal_class.display_name}"
                )
        if self.signal_class is SignalClass.CUBIC_FUNCTION:
            roots = [self.shape.get(k) for k in ("root1", "root2", "root3")]
            if any(r is None for r in roots):
                raise ValidationError("cubic params need root1/root2/root3")


@dataclass
class TimeSeries:
    """One sample: values plus the ground truth that produced them."""

    id: str
    values: np.ndarray
    gt_class: SignalClass
    params: SignalParams
    split: str = "unassigned"

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValidationError(f"values must be a nonempty vector (sample {self.id})")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError(f"values contain non-finite entries (sample {self.id})")
        if self.gt_class is not self.params.signal_class:
            raise ValidationError(f"gt_class != params class (sample {self.id})")

    @property
    def length(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class DatasetSpec:
    n_per_class: int = 1000
    ratios: tuple[float, float, float] = (0.90, 0.05, 0.05)
    length: int = 256
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_per_class < 1:
            raise ValidationError("n_per_class must be >= 1")
        if not (1 <= self.length <= 2048):
            raise ValidationError("length must be in [1, 2048]")
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise ValidationError("ratios must be three nonnegative reals")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValidationError(f"ratios must sum to 1, got {sum(self.ratios)!r}")

    def split_counts(self) -> dict[str, int]:
        """Per-class sample count for each split: floor(n*ratio), remainder to train."""
        counts = {s: math.floor(self.n_per_class * r) for s, r in zip(SPLITS, self.ratios)}
        counts["train"] += self.n_per_class - sum(counts.values())
        for split, ratio in zip(SPLITS, self.ratios):
            if ratio > 0 and counts[split] == 0:
                raise ValidationError(
                    f"n_per_class={self.n_per_class} leaves the {split} split with "
                    f"0 samples per class (ratio {ratio})"
                )
        return counts

    def spec_hash(self) -> str:
        blob = json.dumps(
            {
                "n_per_class": self.n_per_class,
                "ratios": list(self.ratios),
                "length": self.length,
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Dataset:
    spec: DatasetSpec
    samples: list[TimeSeries]

    def split(self, name: str) -> list[TimeSeries]:
        if name not in SPLITS:
            raise ValidationError(f"unknown split {name!r}")
        return [s for s in self.samples if s.split == name]

    @property
    def train(self) -> list[TimeSeries]:
        return self.split("train")

    @property
    def val(self) -> list[TimeSeries]:
        return self.split("val")

    @property
    def test(self) -> list[TimeSeries]:
        return self.split("test")


def sample_params(signal_class: SignalClass, rng: np.random.Generator) -> SignalParams:
    """Draw parameters uniformly from the documented ranges.

    Draw order is fixed (amplitude, offset, shape coefficients in the order
    listed in SHAPE_RANGES, noise sigma) so streams replay exactly.
    """
    amplitude = float(rng.uniform(*AMPLITUDE_RANGE))
    offset = float(rng.uniform(*OFFSET_RANGE))
    shape: dict[str, float] = {}
    for name, (lo, hi) in SHAPE_RANGES[signal_class].items():
        shape[name] = float(rng.uniform(lo, hi))
    if signal_class is SignalClass.CUBIC_FUNCTION:
        roots = _sample_cubic_roots(rng)
        shape = {"root1": roots[0], "root2": roots[1], "root3": roots[2]}
    noise_sigma = float(rng.uniform(0.0, NOISE_SIGMA_FRACTION * amplitude))
    return SignalParams(signal_class, amplitude, offset, noise_sigma, shape)


def _sample_cubic_roots(rng: np.random.Generator) -> tuple[float, float, float]:
    # Rejection sampling; acceptance probability is (1 - 2*gap)^3 ~ 0.34.
    while True:
        roots = np.sort(rng.uniform(0.0, 1.0, size=3))
        if roots[1] - roots[0] >= CUBIC_ROOT_MIN_GAP and roots[2] - roots[1] >= CUBIC_ROOT_MIN_GAP:
            return float(roots[0]), float(roots[1]), float(roots[2])


def base_curve(params: SignalParams, t: np.ndarray) -> np.ndarray:
    """Raw class formula evaluated at t, before unit-range scaling."""
    c = params.signal_class
    s = params.shape
    if c is SignalClass.CONSTANT:
        return np.zeros_like(t)
    if c is SignalClass.LINEAR_INCREASE:
        return s["slope"] * t
    if c is SignalClass.LINEAR_DECREASE:
        return -s["slope"] * t
    if c is SignalClass.CONCAVE:
        return -s["curvature"] * (t - s["vertex"]) ** 2
    if c is SignalClass.CONVEX:
        return s["curvature"] * (t - s["vertex"]) ** 2
    if c is SignalClass.EXPONENTIAL_GROWTH:
        return np.exp(s["rate"] * t)
    if c is SignalClass.EXPONENTIAL_DECAY:
        return np.exp(-s["rate"] * t)
    if c is SignalClass.SIGMOID:
        return 1.0 / (1.0 + np.exp(-s["steepness"] * (t - s["midpoint"])))
    if c is SignalClass.CUBIC_FUNCTION:
        return (t - s["root1"]) * (t - s["root2"]) * (t - s["root3"])
    if c is SignalClass.GAUSSIAN:
        return np.exp(-((t - s["center"]) ** 2) / (2.0 * s["width"] ** 2))
    raise ValidationError(f"unknown class {c!r}")


def generate(
    params: SignalParams,
    length: int,
    rng: np.random.Generator | None = None,
    sample_id: str = "",
) -> TimeSeries:
    """Evaluate the class curve on ``length`` uniform points and add noise.

    The base shape is scaled to unit range, so the noiseless output spans
    exactly ``amplitude`` (degenerate for the constant class) and sits at
    ``offset``. Gaussian observation noise of std ``params.noise_sigma`` is
    added when an rng is supplied and sigma > 0.
    """
    for name, value in (
        ("amplitude", params.amplitude),
        ("offset", params.offset),
        ("noise_sigma", params.noise_sigma),
        *params.shape.items(),
    ):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite parameter {name}={value}")
    if length < 2:
        raise ValidationError("length must be >= 2")
    t = np.linspace(0.0, 1.0, length)
    base = base_curve(params, t)
    span = float(base.max() - base.min())
    unit = (base - base.min()) / span if span > 1e-12 else np.zeros_like(base)
    values = params.amplitude * unit + params.offset
    if params.noise_sigma > 0:
        if rng is None:
            raise ValidationError("noise_sigma > 0 requires an rng")
        values = values + rng.normal(0.0, params.noise_sigma, size=length)
    return TimeSeries(id=sample_id, values=values, gt_class=params.signal_class, params=params)


def normalize_unit(values: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; a flat signal maps to all 0.5."""
    values = np.asarray(values, dtype=np.float64)
    span = float(values.max() - values.min())
    if span < 1e-12:
        return np.full_like(values, 0.5)
    return (values - values.min()) / span


def build_samples(spec: DatasetSpec) -> list[TimeSeries]:
    """Generate the full sample pool (split unassigned), normalized to [0, 1].

    One generation stream per class, keyed by (seed, "gen", class_id), so the
    pool is identical however the splits are later drawn.
    """
    samples: list[TimeSeries] = []
    for cls in SignalClass:
        gen_rng = stream(spec.seed, "gen", int(cls))
        for i in range(spec.n_per_class):
            params = sample_params(cls, gen_rng)
            ts = generate(params, spec.length, gen_rng, sample_id=f"c{int(cls)}-{i:05d}")
            ts.values = normalize_unit(ts.values)
            samples.append(ts)
    return samples


def assign_splits(
    samples: Iterable[TimeSeries], spec: DatasetSpec, rng: np.random.Generator
) -> Dataset:
    """Stratified split: every split gets the same number of samples per class."""
    counts = spec.split_counts()
    by_class: dict[SignalClass, list[TimeSeries]] = {c: [] for c in SignalClass}
    for ts in samples:
        by_class[ts.gt_class].append(ts)
    for cls, group in by_class.items():
        if len(group) != spec.n_per_class:
            raise ValidationError(
                f"expected {spec.n_per_class} samples for {cls.display_name}, "
                f"got {len(group)}"
            )
    out: list[TimeSeries] = []
    order = {c: rng.permutation(spec.n_per_class) for c in SignalClass}
    offsets = {c: 0 for c in SignalClass}
    for split_name in SPLITS:
        take = counts[split_name]
        for cls in SignalClass:
            start = offsets[cls]
            idx = order[cls][start : start + take]
            offsets[cls] = start + take
            for j in idx:
                out.append(replace(by_class[cls][int(j)], split=split_name))
    return Dataset(spec=spec, samples=out)


def make_dataset(spec: DatasetSpec, split_rng: np.random.Generator | None = None) -> Dataset:
    """Build the pool and assign stratified splits.

    The default split stream is keyed by (seed, "split"); pass ``split_rng``
    to re-split the same pool differently (multi-trial runs do this).
    """
    if split_rng is None:
        split_rng = stream(spec.seed, "split")
    return assign_splits(build_samples(spec), spec, split_rng)


def subsample_train(dataset: Dataset, n_train: int, rng: np.random.Generator) -> Dataset:
    """Class-balanced uniform subsample of the train split; val/test untouched."""
    if n_train % N_CLASSES != 0:
        raise ValidationError(f"n_train must be divisible by {N_CLASSES}, got {n_train}")
    per_class = n_train // N_CLASSES
    train = dataset.train
    by_class: dict[SignalClass, list[TimeSeries]] = {c: [] for c in SignalClass}
    for ts in train:
        by_class[ts.gt_class].append(ts)
    have = min(len(g) for g in by_class.values())
    if per_class > have:
        raise ValidationError(
            f"n_train={n_train} asks for {per_class} per class but the train "
            f"split holds only {have}"
        )
    kept: list[TimeSeries] = []
    for cls in SignalClass:
        idx = rng.permutation(len(by_class[cls]))[:per_class]
        kept.extend(by_class[cls][int(j)] for j in sorted(idx))
    rest = [s for s in dataset.samples if s.split != "train"]
    return Dataset(spec=dataset.spec, samples=kept + rest)


# ---------------------------------------------------------------------------
# Dataset files: one JSONL file per split, self-describing header first.

def _format_values(values: np.ndarray) -> list[float]:
    # 9 significant digits; repr of the reparsed float is stable on rewrite.
    return [float(f"{v:.9g}") for v in values]


def _record_for(ts: TimeSeries) -> dict:
    return {
        "id": ts.id,
        "class_id": int(ts.gt_class),
        "class_name": ts.gt_class.display_name,
        "split": ts.split,
        "params": {
            "amplitude": ts.params.amplitude,
            "offset": ts.params.offset,
            "noise_sigma": ts.params.noise_sigma,
            "shape": ts.params.shape,
        },
        "values": _format_values(ts.values),
    }


def save_dataset(dataset: Dataset, out_dir: str | Path) -> dict[str, Path]:
    """Write one file per split; returns split -> path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for split_name in SPLITS:
        rows = dataset.split(split_name)
        header = {
            "format": DATASET_FORMAT,
            "version": DATASET_VERSION,
            "split": split_name,
            "count": len(rows),
            "length": dataset.spec.length,
            "seed": dataset.spec.seed,
            "n_per_class": dataset.spec.n_per_class,
            "ratios": list(dataset.spec.ratios),
            "spec_hash": dataset.spec.spec_hash(),
        }
        path = out_dir / f"{split_name}.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for ts in rows:
                fh.write(json.dumps(_record_for(ts), sort_keys=True) + "\n")
        paths[split_name] = path
    return paths


def load_dataset(in_dir: str | Path) -> Dataset:
    """Read the three split files written by :func:`save_dataset`."""
    in_dir = Path(in_dir)
    samples: list[TimeSeries] = []
    header0: dict | None = None
    for split_name in SPLITS:
        path = in_dir / f"{split_name}.jsonl"
        if not path.exists():
            raise ArtifactError(f"missing dataset file {path}")
        with path.open("r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("format") != DATASET_FORMAT:
                raise ArtifactError(f"{path} is not a dataset file")
            if header.get("version") != DATASET_VERSION:
                raise ArtifactError(f"unsupported dataset version in {path}")
            if header0 is None:
                header0 = header
            count = 0
            for line in fh:
                rec = json.loads(line)
                cls = SignalClass(rec["class_id"])
                params = SignalParams(
                    signal_class=cls,
                    amplitude=rec["params"]["amplitude"],
                    offset=rec["params"]["offset"],
                    noise_sigma=rec["params"]["noise_sigma"],
                    shape=dict(rec["params"]["shape"]),
                )
                samples.append(
                    TimeSeries(
                        id=rec["id"],
                        values=np.array(rec["values"], dtype=np.float64),
                        gt_class=cls,
                        params=params,
                        split=rec["split"],
                    )
                )
                count += 1
            if count != header["count"]:
                raise ArtifactError(f"{path}: header count {header['count']} != {count} records")
    assert header0 is not None
    spec = DatasetSpec(
        n_per_class=header0["n_per_class"],
        ratios=tuple(header0["ratios"]),
        length=header0["length"],
        seed=header0["seed"],
    )
    return Dataset(spec=spec, samples=samples)
