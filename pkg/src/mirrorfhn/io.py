"""File output: atomic writes, full-precision CSV, JSON coercion and static SVG plots."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .model import PhaseState

_LABEL_COLORS = {
    "I": "#4c78a8",
    "II": "#f58518",
    "III": "#54a24b",
    "IV": "#e45756",
    "V": "#b279a2",
    "boundary": "#000000",
    "unclassified": "#d0d0d0",
}


def atomic_write(path: str | os.PathLike, data: str | bytes) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(x: Any) -> str:
    """17 significant digits for floats so that CSV goldens round-trip exactly."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if x is None:
        return ""
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def dict_rows_csv(rows: Sequence[dict], header: Sequence[str] | None = None) -> str:
    if header is None:
        header = list(rows[0].keys()) if rows else []
    return csv_text(header, ([r.get(k) for k in header] for r in rows))


def jsonable(obj: Any) -> Any:
    """Recursively coerce numpy scalars, dataclasses and non-finite floats into JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, PhaseState):
        return [obj.v, obj.n]
    if hasattr(obj, "to_json_dict"):
        return jsonable(obj.to_json_dict())
    if hasattr(obj, "as_dict"):
        return jsonable(obj.as_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)})
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def json_text(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


# --- svg ----------------------------------------------------------------------


class _Frame:
    """Linear map from data coordinates to an SVG plotting box."""

    def __init__(self, xr, yr, width=640, height=480, margin=50):
        self.xr, self.yr = xr, yr
        self.w, self.h, self.m = width, height, margin

    def x(self, v: float) -> float:
        return self.m + (v - self.xr[0]) / (self.xr[1] - self.xr[0]) * (self.w - 2 * self.m)

    def y(self, v: float) -> float:
        return self.h - self.m - (v - self.yr[0]) / (self.yr[1] - self.yr[0]) * (self.h - 2 * self.m)

    def polyline(self, pts, color, width=1.5, dash=None) -> str:
        coords = " ".join(f"{self.x(a):.2f},{self.y(b):.2f}" for a, b in pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>'

    def axes(self, xlabel: str, ylabel: str) -> list[str]:
        m, w, h = self.m, self.w, self.h
        out = [
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="#000"/>',
            f'<text x="{w / 2}" y="{h - 12}" text-anchor="middle" font-size="13">{xlabel}</text>',
            f'<text x="14" y="{h / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 14 {h / 2})">{ylabel}</text>',
        ]
        for v in np.linspace(*self.xr, 5):
            out.append(f'<text x="{self.x(v):.1f}" y="{h - m + 16}" text-anchor="middle" font-size="10">{v:.3g}</text>')
        for v in np.linspace(*self.yr, 5):
            out.append(f'<text x="{m - 6}" y="{self.y(v) + 3:.1f}" text-anchor="end" font-size="10">{v:.3g}</text>')
        return out


def _svg(frame: _Frame, body: list[str]) -> str:
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{frame.w}" height="{frame.h}" viewBox="0 0 {frame.w} {frame.h}">'
    return "\n".join([head, '<rect width="100%" height="100%" fill="#fff"/>', *body, "</svg>"]) + "\n"


def _split_runs(pts: Sequence[tuple[float, float]], max_jump: float) -> list[list[tuple[float, float]]]:
    runs: list[list[tuple[float, float]]] = []
    for p in sorted(pts):
        if runs and abs(p[1] - runs[-1][-1][1]) < max_jump and abs(p[0] - runs[-1][-1][0]) < max_jump:
            runs[-1].append(p)
        else:
            runs.append([p])
    return runs


def chart_svg(ch) -> str:
    """Region cells, the TC line (solid), SN curves (dashed) and a pitchfork square."""
    xr = (float(ch.v0[0] - (ch.v0[1] - ch.v0[0]) / 2), float(ch.v0[-1] + (ch.v0[1] - ch.v0[0]) / 2))
    yr = (float(ch.n0[0] - (ch.n0[1] - ch.n0[0]) / 2), float(ch.n0[-1] + (ch.n0[1] - ch.n0[0]) / 2))
    fr = _Frame(xr, yr)
    dx = fr.x(ch.v0[1]) - fr.x(ch.v0[0])
    dy = fr.y(ch.n0[0]) - fr.y(ch.n0[1])
    body = []
    for i, n0 in enumerate(ch.n0):
        for j, v0 in enumerate(ch.v0):
            c = _LABEL_COLORS.get(str(ch.labels[i, j]), "#d0d0d0")
            body.append(
                f'<rect x="{fr.x(v0) - dx / 2:.2f}" y="{fr.y(n0) - dy / 2:.2f}" width="{dx + 0.3:.2f}" height="{dy + 0.3:.2f}" fill="{c}"/>'
            )
    tc = [(a, b) for a, b in ch.tc_line if yr[0] <= b <= yr[1]]
    body.append(fr.polyline(tc, "#000", 2.0))
    step = 3 * abs(ch.v0[1] - ch.v0[0])
    for pts in ch.sn_curves().values():
        for run in _split_runs(pts, step):
            if len(run) > 1:
                body.append(fr.polyline(run, "#000", 1.5, "5,3"))
    px, py = fr.x(ch.pitchfork[0]), fr.y(ch.pitchfork[1])
    body.append(f'<rect x="{px - 5:.2f}" y="{py - 5:.2f}" width="10" height="10" fill="#000"/>')
    for k, (lab, c) in enumerate(_LABEL_COLORS.items()):
        body.append(f'<rect x="{fr.w - 45}" y="{60 + 16 * k}" width="10" height="10" fill="{c}"/>')
        body.append(f'<text x="{fr.w - 32}" y="{69 + 16 * k}" font-size="10">{lab}</text>')
    body += fr.axes("V0", "n0")
    return _svg(fr, body)


def bifdiag_svg(diag) -> str:
    """V of equilibria (solid stable, dashed unstable), cycle extrema and bifurcation markers."""
    rows = diag.branch_rows()
    lo, hi = diag.i_range
    vs = [r["v"] for r in rows] or [-2.0, 2.0]
    cyc = [r for r in diag.cycle_rows() if r["present"]]
    vs += [r["v_min"] for r in cyc] + [r["v_max"] for r in cyc]
    yr = (min(vs) - 0.2, max(vs) + 0.2)
    fr = _Frame((lo, hi), yr)
    body = []
    runs: list[tuple[bool, list]] = []
    for r in rows:
        if runs and runs[-1][0] == r["stable"] and abs(r["i_app"] - runs[-1][1][-1][0]) < 0.05 * (hi - lo):
            runs[-1][1].append((r["i_app"], r["v"]))
        else:
            runs.append((r["stable"], [(r["i_app"], r["v"])]))
    for stable, pts in runs:
        if len(pts) > 1:
            body.append(fr.polyline(pts, "#000" if stable else "#888", 2.0 if stable else 1.2, None if stable else "4,3"))
    for r in cyc:
        for key in ("v_min", "v_max"):
            body.append(f'<circle cx="{fr.x(r["i_app"]):.2f}" cy="{fr.y(r[key]):.2f}" r="2.5" fill="#e45756"/>')
    for b in diag.points:
        x, y = fr.x(b.i_crit), fr.y(min(max(b.location.v, yr[0]), yr[1]))
        body.append(f'<rect x="{x - 4:.2f}" y="{y - 4:.2f}" width="8" height="8" fill="#4c78a8"/>')
        body.append(f'<text x="{x + 6:.2f}" y="{y - 6:.2f}" font-size="11">{b.kind}</text>')
    body += fr.axes("I_app", "V")
    return _svg(fr, body)
