"""Profile plots in the style of the published figure panels."""

from __future__ import annotations

import io
from typing import Sequence

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

DPI = 100

U_COLOR = "#1f77b4"
V_COLOR = "#d62728"


def _draw(ax, x: np.ndarray, u: np.ndarray, v: np.ndarray, title: str, y_max: float) -> None:
    ax.plot(x, u, color=U_COLOR, linewidth=1.6, label="u")
    ax.plot(x, v, color=V_COLOR, linewidth=1.6, linestyle="--", label="v")
    ax.set_xlim(float(x[0]) if len(x) else 0.0, float(x[-1]) if len(x) else 1.0)
    ax.set_ylim(0.0, y_max)
    ax.set_xlabel("x")
    ax.set_title(title, fontsize=11)
    ax.legend(loc="upper right", frameon=False)


def _y_max(*fields: np.ndarray) -> float:
    top = max((float(np.max(f)) for f in fields if len(f)), default=0.0)
    return 1.05 * top if top > 0 else 1.0


def _to_png(fig) -> bytes:
    buf = io.BytesIO()
    # No Software chunk
    fig.savefig(buf, format="png", dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    buf.seek(0)
    return buf.read()


def render_profile_png(
    x: np.ndarray, u: np.ndarray, v: np.ndarray,
    title: str = "", size: tuple[int, int] = (900, 600),
) -> bytes:
    """u and v against x as PNG bytes, size in pixels."""
    fig, ax = plt.subplots(1, 1, figsize=(size[0] / DPI, size[1] / DPI))
    _draw(ax, x, u, v, title, _y_max(u, v))
    fig.tight_layout(pad=1.0)
    return _to_png(fig)


def render_panels_png(
    panels: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray, str]],
    size: tuple[int, int] = (900, 600),
) -> bytes:
    """One row of profile panels sharing the y range; size is per panel."""
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(n * size[0] / DPI, size[1] / DPI), squeeze=False)
    y_max = _y_max(*[f for x, u, v, _ in panels for f in (u, v)])
    for ax, (x, u, v, title) in zip(axes[0], panels):
        _draw(ax, x, u, v, title, y_max)
    fig.tight_layout(pad=1.0)
    return _to_png(fig)


def render_norms_png(
    times: Sequence[float],
    series: dict[str, Sequence[float]],
    title: str = "",
    size: tuple[int, int] = (900, 600),
) -> bytes:
    """Norm histories against t, log scale when any value is positive."""
    fig, ax = plt.subplots(1, 1, figsize=(size[0] / DPI, size[1] / DPI))
    t = np.asarray(times, dtype=np.float64)
    any_positive = False
    for name, values in series.items():
        y = np.asarray(values, dtype=np.float64)
        color = U_COLOR if name.startswith("u") else V_COLOR
        style = "-" if name.endswith("l2") else ":"
        positive = y > 0
        any_positive = any_positive or bool(positive.any())
        ax.plot(t, np.where(positive, y, np.nan), color=color, linestyle=style,
                linewidth=1.4, label=name)
    if any_positive:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_title(title, fontsize=11)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout(pad=1.0)
    return _to_png(fig)
