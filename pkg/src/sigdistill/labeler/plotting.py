"""Render a signal as the plot image a vision teacher sees.

Values are min-max normalized before plotting, so affinely rescaled inputs
produce byte-identical images. Default size is 800x400 px (8x4 inches at
100 dpi). Output is PNG with the software tag stripped, deterministic for a
fixed input.
"""

from __future__ import annotations

import io
import threading

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from ..errors import ValidationError
from ..signalgen import TimeSeries, normalize_unit

PLOT_DPI = 100
_render_lock = threading.Lock()  # matplotlib objects are not thread-safe


def render_plot(ts: TimeSeries, width_px: int = 800, height_px: int = 400) -> bytes:
    if width_px <= 0 or height_px <= 0:
        raise ValidationError("plot dimensions must be positive")
    if ts.values.size == 0:
        raise ValidationError(f"cannot plot an empty series (sample {ts.id})")
    values = normalize_unit(ts.values)
    with _render_lock:
        fig = Figure(figsize=(width_px / PLOT_DPI, height_px / PLOT_DPI), dpi=PLOT_DPI)
        FigureCanvasAgg(fig)
        ax = fig.add_subplot(111)
        ax.plot(np.arange(values.size), values, linewidth=2)
        ax.set_ylim(-0.05, 1.05)
        buf = io.BytesIO()
        fig.savefig(buf, format="png", metadata={"Software": None})
    return buf.getvalue()
