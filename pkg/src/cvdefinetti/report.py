"""Figure data, acceptance-region curves and flat-file emitters (CSV, JSON, SVG)."""

from __future__ import annotations

import csv
import json
import math
from xml.sax.saxutils import escape

import numpy as np

from . import bounds
from .errors import InvalidParameterError

FIG_K = 2e7
FIG_N = 2e9
FIG3A_Q = 0.4
FIG3B_R = 0.05
FIG3A_RANGE = (-1.0, 1.0)
FIG3B_RANGE = (0.05, 0.95)

FIGURE_HEADER = ["sweep_var", "n0_closed", "n0_numeric", "symmetric_baseline"]
SWEEP_HEADER = ["k", "n", "q", "r", "delta", "n0_closed", "n0_numeric", "gamma_analytic",
                "gamma_numeric", "lemma3_error", "chain_ratio"]


def figure_rows(preset: str, grid_size: int = 181) -> list[dict]:
    """Threshold curves: ``fig3a`` sweeps ``r`` at ``q=0.4``, ``fig3b`` sweeps ``q`` at ``r=0.05``."""
    if grid_size < 2:
        raise InvalidParameterError(f"grid_size must be >= 2, got {grid_size}")
    base = bounds.symmetric_baseline(FIG_K, FIG_N)
    if preset == "fig3a":
        grid = np.linspace(*FIG3A_RANGE, grid_size)
        args = [(FIG3A_Q, float(r)) for r in grid]
    elif preset == "fig3b":
        grid = np.linspace(*FIG3B_RANGE, grid_size)
        args = [(float(q), FIG3B_R) for q in grid]
    else:
        raise InvalidParameterError(f"unknown figure preset {preset!r}")
    return [
        {"sweep_var": float(x),
         "n0_closed": bounds.closed_form_threshold(FIG_K, FIG_N, q, r),
         "n0_numeric": bounds.solve_min_n0(FIG_K, FIG_N, q, r),
         "symmetric_baseline": base}
        for x, (q, r) in zip(grid, args)
    ]


def sweep_row(k, n, q, r) -> dict:
    d = bounds.delta_choice(k, n, q)
    n0 = bounds.closed_form_threshold(k, n, q, r)
    return {"k": k, "n": n, "q": q, "r": r, "delta": d, "n0_closed": n0,
            "n0_numeric": bounds.solve_min_n0(k, n, q, r),
            "gamma_analytic": bounds.gamma_upper_bound(d, n0, r, q), "gamma_numeric": "",
            "lemma3_error": bounds.lemma3_error(k, n, q),
            "chain_ratio": bounds.chain_ratio(n0, k, n, q, r)}


def region_curves(n0: float, r: float, samples: int = 200) -> list[dict]:
    """Boundary of the verification rectangle and of the inferred-support ellipse."""
    if not n0 > 0:
        raise InvalidParameterError(f"n0 must be positive, got {n0}")
    if samples < 4:
        raise InvalidParameterError(f"samples must be >= 4, got {samples}")
    hx = math.exp(-r) * math.sqrt(n0 / 2)
    hy = math.exp(r) * math.sqrt(n0 / 2)
    corners = [(hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy), (hx, hy)]
    rows = []
    per_edge = max(1, samples // 4)
    for (x0, y0), (x1, y1) in zip(corners, corners[1:]):
        for t in np.linspace(0, 1, per_edge, endpoint=False):
            rows.append({"curve": "rectangle", "x": x0 + t * (x1 - x0), "y": y0 + t * (y1 - y0)})
    rows.append({"curve": "rectangle", "x": hx, "y": hy})
    rad = math.sqrt(n0 + 1)
    for th in np.linspace(0, 2 * math.pi, samples + 1):
        rows.append({"curve": "ellipse", "x": math.exp(-r) * rad * math.cos(th),
                     "y": math.exp(r) * rad * math.sin(th)})
    return rows


def write_csv(rows: list[dict], path, header: list[str] | None = None) -> None:
    header = header or list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for k, v in row.items()})


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "__dataclass_fields__"):
        from dataclasses import asdict
        return asdict(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, default=_json_default, sort_keys=True)


_COLORS = ["#d9a400", "#1f5fbf", "#2a9d4b", "#b23a48"]


def write_svg(x, series: dict, path, xlabel: str = "", ylabel: str = "",
              width: int = 480, height: int = 320) -> None:
    """Minimal line plot: axes, one polyline per series, labels and a legend."""
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    pad = 48
    xmin, xmax = float(x.min()), float(x.max())
    allv = np.concatenate(list(ys.values()))
    ymin, ymax = float(allv.min()), float(allv.max())
    if ymax == ymin:
        ymax = ymin + 1.0
    if xmax == xmin:
        xmax = xmin + 1.0

    def px(v):
        return pad + (v - xmin) / (xmax - xmin) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - ymin) / (ymax - ymin) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>']
    for i, (name, y) in enumerate(ys.items()):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        color = _COLORS[i % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" points="{pts}"/>')
        out.append(f'<text x="{width - pad - 120}" y="{pad + 14 * i}" fill="{color}" '
                   f'font-size="11">{escape(name)}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 10}" font-size="12" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="12" y="{height / 2}" font-size="12" '
               f'transform="rotate(-90 12 {height / 2})" text-anchor="middle">{escape(ylabel)}</text>')
    out.append(f'<text x="{pad}" y="{height - pad + 14}" font-size="10">{xmin:g}</text>')
    out.append(f'<text x="{width - pad}" y="{height - pad + 14}" font-size="10" '
               f'text-anchor="end">{xmax:g}</text>')
    out.append(f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{ymin:.4g}</text>')
    out.append(f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{ymax:.4g}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
