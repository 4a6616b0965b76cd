"""Pseudo-label distillation at desk scale.

Generate synthetic signals of ten shape classes, label them with imperfect
teachers (noise models or a vision-language model over HTTP), train a small
classifier on the noisy labels, and measure how teacher errors propagate.
"""

__version__ = "0.1.0"
