"""Artifact writers: manifest, CSV tables and a small dependency-free SVG plotter."""
from __future__ import annotations

import csv
import json
import platform
import time
from html import escape
from pathlib import Path

import numpy as np

from ..measures import fmt


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Path):
        return str(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def write_rows(path, header, rows) -> None:
    """CSV with floats written by :func:`fmt` so reruns are byte-identical."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def versions() -> dict:
    from .. import __version__
    from .._core import BACKEND

    return {"weightflow": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "backend": BACKEND}


class RunRecord:
    """Collects outputs of one command and writes ``manifest.json`` at the end."""

    def __init__(self, out_dir, command: str, config: dict):
        self.out = None if out_dir is None else Path(out_dir)
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = config
        self.files: list = []
        self.checks: dict = {}
        self.meta: dict = {}
        self._t0 = time.time()
        self._started = time.strftime("%Y-%m-%dT%H:%M:%S%z")

    @property
    def writes(self) -> bool:
        return self.out is not None

    def path(self, name: str) -> Path:
        if self.out is None:
            raise RuntimeError("this record has no output directory")
        self.files.append(name)
        return self.out / name

    def check(self, name: str, ok: bool, detail=None) -> bool:
        self.checks[name] = {"passed": bool(ok), "detail": detail}
        return bool(ok)

    @property
    def failures(self) -> list:
        return [k for k, v in self.checks.items() if not v["passed"]]

    def finish(self, status: str | None = None, error: str | None = None) -> dict:
        manifest = {
            "command": self.command,
            "config": self.config,
            "versions": versions(),
            "started": self._started,
            "wall_clock_seconds": round(time.time() - self._t0, 3),
            "files": sorted(set(self.files)),
            "checks": self.checks,
            "meta": self.meta,
            "status": status or ("failed" if self.failures else "ok"),
        }
        if error:
            manifest["error"] = error
        if self.out is not None:
            write_json(self.out / "manifest.json", manifest)
        return manifest


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]


def svg_plot(path, series, title: str = "", xlabel: str = "", ylabel: str = "",
             width: int = 640, height: int = 400) -> None:
    """Line plot; ``series`` holds ``(xs, ys, label)`` or ``(xs, ys, label, "step")``."""
    pad_l, pad_r, pad_t, pad_b = 60, 20, 30, 45
    xs_all = np.concatenate([np.asarray(s[0], float) for s in series])
    ys_all = np.concatenate([np.asarray(s[1], float) for s in series])
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = min(0.0, float(ys_all.min())), float(ys_all.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    sx = lambda x: pad_l + (x - x0) / (x1 - x0) * (width - pad_l - pad_r)
    sy = lambda y: height - pad_b - (y - y0) / (y1 - y0) * (height - pad_t - pad_b)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<line x1="{pad_l}" y1="{height - pad_b}" x2="{width - pad_r}" y2="{height - pad_b}" stroke="black"/>',
           f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{height - pad_b}" stroke="black"/>']
    for v in np.linspace(x0, x1, 5):
        out.append(f'<text x="{sx(v):.1f}" y="{height - pad_b + 14}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<text x="{pad_l - 4}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="12" y="{height / 2}" transform="rotate(-90 12 {height / 2})" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    for n, s in enumerate(series):
        xs, ys, label = np.asarray(s[0], float), np.asarray(s[1], float), s[2]
        if len(s) > 3 and s[3] == "step":
            xs = np.repeat(xs, 2)[1:]
            ys = np.repeat(ys, 2)[:-1]
        colour = _PALETTE[n % len(_PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{pts}"/>')
        if label and len(series) <= len(_PALETTE):
            ly = pad_t + 14 * n + 6
            out.append(f'<text x="{width - pad_r - 4}" y="{ly}" text-anchor="end" fill="{colour}">{escape(label)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
