"""Tables, heatmaps and figures written by the command line front end.

Every delimited table starts with a ``# config-hash:`` comment line so that
outputs from different runs or materials can be matched to their settings.
Text outputs contain no timestamps; identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .ranking import CValueMatrix, RankedRow

WHITE = (255, 255, 255)
DARK_BLUE = (8, 48, 107)
ABSENT = "#d9d9d9"


def fmt(value) -> str:
    """Shortest round-tripping text for a number; empty for NaN."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return repr(v)


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return None if math.isnan(v) else float(v)
    return v


def table_text(header, rows, config_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config-hash: {config_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (int, float, np.number)) else v for v in row])
    return buf.getvalue()


def write_table(path, header, rows, config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table_text(header, rows, config_hash), encoding="utf-8")
    return path


def write_records(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_value, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def matrix_rows(mat: CValueMatrix):
    header = ["element", *mat.elements]
    rows = [[el, *mat.values[i]] for i, el in enumerate(mat.elements)]
    return header, rows


def matrix_record(mat: CValueMatrix, config_hash: str) -> dict:
    values = [[_json_value(v) for v in row] for row in mat.values]
    record = {
        "config_hash": config_hash,
        "material": mat.material,
        "elements": list(mat.elements),
        "scaled": mat.scaled,
        "values": values,
    }
    if mat.coverage is not None:
        record["coverage"] = mat.coverage.astype(int).tolist()
    return record


RANKED_HEADER = ["rank", "pair", "first", "second", "c_value", "scaled_c_value"]


def ranked_rows(rows: list[RankedRow]):
    return [[r.rank, r.pair, r.first, r.second, r.value, r.scaled_value] for r in rows]


def ranked_record(rows: list[RankedRow], material: str, config_hash: str) -> dict:
    return {
        "config_hash": config_hash,
        "material": material,
        "rows": [dict(zip(RANKED_HEADER, map(_json_value, r))) for r in ranked_rows(rows)],
    }


# -- heatmap ---------------------------------------------------------------


def ramp(value: float) -> str:
    """White at 0 to dark blue at 1, linear in RGB; NaN maps to the absent grey."""
    if value is None or math.isnan(value):
        return ABSENT
    t = min(max(float(value), 0.0), 1.0)
    rgb = [round(a + t * (b - a)) for a, b in zip(WHITE, DARK_BLUE)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def heatmap_svg(mat: CValueMatrix, config_hash: str = "", cell: int = 18) -> str:
    """Render a matrix with values in [0, 1] as an SVG grid.

    The numeric table is embedded as a comment for lossless inspection.
    Cells with zero coverage (absent from every material) are grey and
    crossed.
    """
    m = len(mat.elements)
    label_w = 8 + 7 * max((len(e) for e in mat.elements), default=1)
    top = label_w + 24
    left = label_w
    bar_w = 14
    width = left + m * cell + 30 + bar_w + 40
    height = top + m * cell + 20
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        "<!-- lograt c-value heatmap",
        f"config-hash: {config_hash}",
        f"material: {mat.material}",
        f"scaled: {str(mat.scaled).lower()}",
    ]
    header, rows = matrix_rows(mat)
    out.append(",".join(header))
    for row in rows:
        out.append(",".join([row[0], *(fmt(v) or "NA" for v in row[1:])]))
    out.append("-->")
    out.append(f'<title>{escape(mat.material or "c-values")}</title>')
    out.append(
        f'<text x="{left}" y="14" font-size="13">{escape(mat.material or "c-values")}</text>'
    )
    for i, el in enumerate(mat.elements):
        cy = top + i * cell + cell / 2 + 4
        cx = left + i * cell + cell / 2 + 4
        out.append(f'<text class="row-label" x="{left - 4}" y="{cy:g}" text-anchor="end">{escape(el)}</text>')
        out.append(
            f'<text class="col-label" x="{cx:g}" y="{top - 4}" '
            f'transform="rotate(-90 {cx:g} {top - 4})">{escape(el)}</text>'
        )
    for i in range(m):
        for j in range(m):
            v = mat.values[i, j]
            x, y = left + j * cell, top + i * cell
            absent = mat.coverage is not None and mat.coverage[i, j] == 0
            fill = ABSENT if absent or math.isnan(v) else ramp(v)
            out.append(
                f'<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{fill}" stroke="#ffffff" stroke-width="0.5" '
                f'data-row="{escape(mat.elements[i])}" data-col="{escape(mat.elements[j])}" '
                f'data-value="{fmt(v) or "NA"}"/>'
            )
            if absent or math.isnan(v):
                out.append(
                    f'<path class="absent" d="M{x} {y}L{x + cell} {y + cell}M{x + cell} {y}L{x} {y + cell}" '
                    'stroke="#7f7f7f" stroke-width="0.8"/>'
                )
    bx = left + m * cell + 30
    bar_h = max(m * cell, 60)
    steps = 50
    for s in range(steps):
        t = 1.0 - (s + 0.5) / steps
        out.append(
            f'<rect x="{bx}" y="{top + s * bar_h / steps:.2f}" width="{bar_w}" '
            f'height="{bar_h / steps + 0.3:.2f}" fill="{ramp(t)}"/>'
        )
    out.append(f'<rect x="{bx}" y="{top}" width="{bar_w}" height="{bar_h}" fill="none" stroke="#444"/>')
    out.append(f'<text x="{bx + bar_w + 3}" y="{top + 8}">1</text>')
    out.append(f'<text x="{bx + bar_w + 3}" y="{top + bar_h}">0</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_heatmap(path, mat: CValueMatrix, config_hash: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(heatmap_svg(mat, config_hash), encoding="utf-8")
    return path


# -- figures ---------------------------------------------------------------


def _figure(width=7.0, height=3.2, ncols=1, nrows=1):
    import matplotlib

    matplotlib.rcParams["svg.hashsalt"] = "lograt"
    matplotlib.rcParams["font.size"] = 9
    matplotlib.rcParams["axes.spines.top"] = False
    matplotlib.rcParams["axes.spines.right"] = False
    from matplotlib.figure import Figure

    fig = Figure(figsize=(width, height), layout="constrained")
    axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format=path.suffix.lstrip(".") or "svg", metadata={"Date": None})
    return path


def plot_top_curves(curves: dict, path) -> Path:
    """Sorted unscaled c-values per material, one line each."""
    fig, axes = _figure(5.0, 3.2)
    ax = axes[0, 0]
    for name, values in curves.items():
        ax.plot(np.arange(1, len(values) + 1), values, marker=".", lw=1, label=name or "material")
    ax.set_xlabel("rank")
    ax.set_ylabel("c-value")
    ax.set_yscale("symlog", linthresh=1.0)
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_pair_profile(curve, profile, path, to_distance=lambda x: x) -> Path:
    """Scaled log-ratio beside its curvature with the threshold dashed."""
    fig, axes = _figure(7.0, 3.0, ncols=2)
    d = to_distance(curve.x)
    a, b = curve.pair
    axes[0, 0].plot(d, curve.scaled, color="k", lw=1)
    axes[0, 0].set_title(f"log({a}/{b}), shifted and scaled")
    axes[0, 0].set_xlabel("distance")
    ax = axes[0, 1]
    ax.plot(d, profile.kappa, color="k", lw=1)
    ax.axhline(profile.threshold, color="k", ls="--", lw=1)
    for start, end in profile.intervals:
        ax.axvspan(to_distance(start), to_distance(end), color="tab:blue", alpha=0.2, lw=0)
    ax.set_title("curvature")
    ax.set_xlabel("distance")
    return _save(fig, path)


def plot_detection(dataset, fits, pair, intervals, path) -> Path:
    """Observed log-ratio along the transect; samples inside detected zones in blue."""
    from .gam import predict

    a, b = pair
    ya, _ = dataset.series(a)
    yb, _ = dataset.series(b)
    fig, axes = _figure(6.0, 3.2)
    ax = axes[0, 0]
    dist = dataset.to_distance(dataset.positions)
    with np.errstate(divide="ignore", invalid="ignore"):
        observed = np.log(ya) - np.log(yb)
    inside = np.zeros(dataset.n, dtype=bool)
    for start, end in intervals:
        inside |= (dist >= start) & (dist <= end)
    xs = np.linspace(0.0, 1.0, 400)
    fitted = np.log(predict(fits[a], xs)) - np.log(predict(fits[b], xs))
    ax.plot(dataset.to_distance(xs), fitted, color="0.3", lw=1)
    ax.scatter(dist[~inside], observed[~inside], s=14, color="tab:red", label="other samples")
    ax.scatter(dist[inside], observed[inside], s=14, color="tab:blue", label="detected zone")
    for start, end in intervals:
        ax.axvspan(start, end, color="tab:blue", alpha=0.12, lw=0)
    ax.set_xlabel("distance")
    ax.set_ylabel(f"log({a}/{b})")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_residuals(dataset, fits, path) -> Path:
    """Pearson residuals against the linear predictor, one panel per element."""
    from .gam import diagnostics_table

    m = len(dataset.elements)
    ncols = min(m, 4)
    nrows = math.ceil(m / ncols)
    fig, axes = _figure(2.0 * ncols, 1.8 * nrows, ncols=ncols, nrows=nrows)
    for k, el in enumerate(dataset.elements):
        ax = axes[k // ncols, k % ncols]
        y, w = dataset.series(el)
        table = diagnostics_table(fits[el], dataset.positions, y, w)
        ax.scatter(table[:, 2], table[:, 4], s=6, color="k")
        ax.axhline(0.0, color="0.6", lw=0.8)
        ax.set_title(el)
    for k in range(m, nrows * ncols):
        axes[k // ncols, k % ncols].set_visible(False)
    return _save(fig, path)
