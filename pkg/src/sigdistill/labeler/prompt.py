"""Question text shown to the vision teacher, and strict answer parsing.

The option order is a permutation of the ten classes, freshly shuffled per
sample; parse_answer maps the chosen option number back through it.
"""

from __future__ import annotations

import re
from typing import Sequence

from ..errors import ValidationError
from ..signalgen import N_CLASSES, SignalClass

PROMPT_TEMPLATE = (
    "Refer to the time series signal in the image. "
    "Please answer the following question. "
    'Your answer must be in the format "(number)", with the number enclosed '
    "in parentheses. No other text is necessary. "
    "Which pattern does this time series represent?"
)

_ANSWER_RE = re.compile(r"\((\d+)\)")


class ParseError(ValidationError):
    """Answer text could not be mapped to an option."""


class NoNumberError(ParseError):
    """No parenthesized number anywhere in the response."""


class OutOfRangeError(ParseError):
    """A parenthesized number outside 0..9."""


def _check_permutation(option_permutation: Sequence[int]) -> None:
    if sorted(option_permutation) != list(range(N_CLASSES)):
        raise ValidationError(f"not a permutation of 0..{N_CLASSES - 1}: {option_permutation}")


def build_prompt(option_permutation: Sequence[int]) -> str:
    """Full question text with options ordered by the permutation."""
    _check_permutation(option_permutation)
    options = " ".join(
        f"({pos}) {SignalClass(cls).display_name}" for pos, cls in enumerate(option_permutation)
    )
    return f"{PROMPT_TEMPLATE} {options}"


def parse_answer(raw: str, option_permutation: Sequence[int]) -> SignalClass:
    """Map the first "(k)" in the response back to a class.

    Tolerant of surrounding text, strict about the parenthesized form.
    """
    _check_permutation(option_permutation)
    match = _ANSWER_RE.search(raw)
    if match is None:
        raise NoNumberError(f"no parenthesized option number in {raw!r}")
    k = int(match.group(1))
    if k >= N_CLASSES:
        raise OutOfRangeError(f"option number {k} out of range in {raw!r}")
    return SignalClass(option_permutation[k])
