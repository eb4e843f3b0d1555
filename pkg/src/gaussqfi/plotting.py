"""Render CLI tables to image files. Only the ``--plot`` path imports matplotlib."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import PlotSpec

LABELS = {
    "qfi": "$I_Q$",
    "mzi": "MZI",
    "snl": "SNL",
    "companion_qfi": "Yurke (same $r_2$)",
    "iq_max": "$I_{Q,\\max}$",
    "t_c_formula": "$T_C$ (closed form)",
    "t_c_numeric": "$T_C$ (search)",
}


REFERENCES = ("mzi", "snl", "i_q_ideal")


def default_columns(header: list[str]) -> tuple[str, ...]:
    fisher = [c for c in header if c in ("qfi", "companion_qfi") or c.startswith(("i_c", "i_q", "t_c_"))]
    return tuple(dict.fromkeys(fisher + [c for c in REFERENCES if c in header]))


def _column(header: list[str], rows: list[list], name: str) -> np.ndarray:
    if name not in header:
        raise ValueError(f"no column {name!r} to plot; available: {', '.join(header)}")
    i = header.index(name)
    return np.array([float(r[i]) for r in rows])


def render(header: list[str], rows: list[list], x: str, spec: PlotSpec, path: str | Path,
           series: str | None = None) -> Path:
    """Line plot of ``spec.y`` columns against ``x``, one line per series value."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    xs = _column(header, rows, x)
    norm = _column(header, rows, spec.normalize) if spec.normalize else np.ones_like(xs)
    groups = {None: np.ones(len(rows), dtype=bool)}
    if series is not None:
        s = _column(header, rows, series)
        groups = {v: s == v for v in dict.fromkeys(s.tolist())}
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name in spec.y or default_columns(header):
        ys = _column(header, rows, name) / norm
        for key, mask in groups.items():
            label = LABELS.get(name, name)
            if key is not None:
                label = f"{label}, {series}={key:g}"
            ax.plot(xs[mask], ys[mask], label=label)
    ax.set_xlabel(spec.xlabel or x)
    ax.set_ylabel(spec.ylabel or (f"/ {spec.normalize}" if spec.normalize else "Fisher information"))
    if spec.logx:
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
