"""Deterministic 2-D projection of the student's own penultimate embeddings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..nncore import Model, embed
from ..signalgen import TimeSeries


@dataclass
class EmbeddingProjection:
    sample_ids: list[str]
    coords: np.ndarray  # (n, 2), centered
    assigned_label_ids: list[int]
    gt_ids: list[int]
    explained_variance: np.ndarray  # of the two components


def pca_project(x: np.ndarray, n_components: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top principal components via eigh on the covariance matrix.

    Sign convention: within each component the loading with the largest
    magnitude (lowest index on ties) is made positive, so the projection is
    reproducible across runs and platforms.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 3:
        raise ValidationError(f"need at least 3 samples to project, got {x.shape[0]}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_components]
    components = eigvecs[:, order].T
    variances = eigvals[order]
    for i, comp in enumerate(components):
        pivot = int(np.argmax(np.abs(comp)))
        if comp[pivot] < 0:
            components[i] = -comp
    return centered @ components.T, components, variances


def embed_and_project(
    model: Model,
    samples: Sequence[TimeSeries],
    labels_by_id: dict[str, int] | None = None,
) -> EmbeddingProjection:
    """Project penultimate activations onto the top-2 principal components.

    ``labels_by_id`` annotates each point (pseudo label or prediction);
    points without an entry fall back to the model's own prediction.
    """
    if len(samples) < 3:
        raise ValidationError(f"need at least 3 samples to project, got {len(samples)}")
    x = np.stack([ts.values for ts in samples])
    hidden = embed(model, x)
    coords, _, variances = pca_project(hidden, n_components=2)
    if labels_by_id is None:
        from ..nncore import predict

        preds = predict(model, x)
        assigned = [int(p) for p in preds]
    else:
        assigned = [int(labels_by_id[ts.id]) for ts in samples]
    return EmbeddingProjection(
        sample_ids=[ts.id for ts in samples],
        coords=coords,
        assigned_label_ids=assigned,
        gt_ids=[int(ts.gt_class) for ts in samples],
        explained_variance=variances,
    )
