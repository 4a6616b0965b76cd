"""Scripted studies: teacher/student comparison, noise and size sweeps,
embedding projection, and the systematic-error inheritance experiment."""

from .embedding import EmbeddingProjection, embed_and_project, pca_project
from .runs import (
    InheritanceReport,
    SweepResult,
    Table1Result,
    compare_table1,
    inheritance_study,
    noise_ratio_sweep,
    sample_size_sweep,
)
from .report import write_report

__all__ = [
    "EmbeddingProjection",
    "InheritanceReport",
    "SweepResult",
    "Table1Result",
    "compare_table1",
    "embed_and_project",
    "inheritance_study",
    "noise_ratio_sweep",
    "pca_project",
    "sample_size_sweep",
    "write_report",
]
