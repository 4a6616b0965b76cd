"""Pseudo-label teachers: oracles, noise models, and an HTTP VLM client."""

from .records import ConfusionModel, LabelRecord, NoiseSpec, VlmEndpointConfig, default_confusion_model
from .teachers import (
    ConfusionTeacher,
    OracleTeacher,
    SystematicTeacher,
    Teacher,
    UniformNoiseTeacher,
    confusion_label,
    label_samples,
    oracle_label,
    systematic_label,
    uniform_noise_label,
)
from .plotting import render_plot
from .prompt import NoNumberError, OutOfRangeError, ParseError, build_prompt, parse_answer
from .vlm import VlmClient, VlmTeacher
from .io import load_labels, save_labels

__all__ = [
    "LabelRecord",
    "NoiseSpec",
    "ConfusionModel",
    "VlmEndpointConfig",
    "default_confusion_model",
    "Teacher",
    "OracleTeacher",
    "UniformNoiseTeacher",
    "ConfusionTeacher",
    "SystematicTeacher",
    "VlmTeacher",
    "VlmClient",
    "oracle_label",
    "uniform_noise_label",
    "confusion_label",
    "systematic_label",
    "label_samples",
    "render_plot",
    "build_prompt",
    "parse_answer",
    "ParseError",
    "NoNumberError",
    "OutOfRangeError",
    "save_labels",
    "load_labels",
]
