"""Deterministic report serialization: JSON, CSV rows, and static SVG.

All writers avoid wall-clock data and rely on Python's shortest
round-trip float repr, so re-running a command with the same seed and
config produces byte-identical artifacts.  Reports carry a sha256
``content_hash`` computed over the serialized payload with the hash
field absent, letting consumers detect truncation or tampering.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import numbers

CSV_COLUMNS = ("experiment", "parameter", "K", "C", "count", "residual")

_PALETTE = ("#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def jsonable(obj):
    """Normalize nested data to plain JSON types, deterministically.

    numpy scalars become Python numbers, arrays become nested lists,
    dataclasses and objects exposing ``to_dict`` are expanded, tuples
    become lists, and non-finite floats become the strings "inf",
    "-inf", "nan" (strict JSON has no literals for them).  Unknown
    types raise TypeError rather than guessing.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, numbers.Integral):
        return int(obj)
    if isinstance(obj, numbers.Real):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):  # numpy arrays without importing numpy here
        return jsonable(obj.tolist())
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(dataclasses.asdict(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__} deterministically")


def to_json(obj) -> str:
    """Canonical JSON text: sorted keys, two-space indent, newline end."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def finalize_report(report: dict) -> dict:
    """Normalize a report and embed its own content hash.

    The hash covers the canonical JSON of everything except the
    ``content_hash`` key itself, so it can be recomputed by dropping
    that key and re-serializing.
    """
    payload = jsonable(report)
    payload.pop("content_hash", None)
    payload["content_hash"] = content_hash(to_json(payload))
    return payload


def to_csv(rows, config: dict | None = None) -> str:
    """CSV artifact with the fixed report columns.

    Rows are dicts; missing columns serialize as empty fields.  The
    resolved config rides along as a leading ``# config:`` comment and
    the content hash as a ``# content_hash:`` comment, keeping the
    artifact self-describing without breaking comment-aware readers.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        out = []
        for col in CSV_COLUMNS:
            v = jsonable(row.get(col, ""))
            out.append("" if v is None else v)
        writer.writerow(out)
    body = buf.getvalue()
    head = ""
    if config is not None:
        head = "# config: " + json.dumps(jsonable(config), sort_keys=True) + "\n"
    digest = content_hash(head + body)
    return head + f"# content_hash: {digest}\n" + body


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        raise ValueError("plot range must be finite")
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _fmt(v: float) -> str:
    return format(v, ".6g")


def svg_plot(
    points,
    lines=(),
    curves=(),
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    config: dict | None = None,
    width: int = 640,
    height: int = 440,
) -> str:
    """Static scatter/line SVG with no external dependencies.

    points: iterable of (x, y) scatter markers.
    lines: iterable of (slope, intercept, label) drawn across the x range.
    curves: iterable of (list of (x, y), label) polylines.

    The resolved config is embedded in a <desc> element and a content
    hash is appended as a trailing comment; output is deterministic.
    """
    pts = [(float(x), float(y)) for x, y in points]
    crv = [([(float(x), float(y)) for x, y in c], lab) for c, lab in curves]
    xs = [p[0] for p in pts] + [p[0] for c, _ in crv for p in c]
    ys = [p[1] for p in pts] + [p[1] for c, _ in crv for p in c]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    for slope, intercept, _ in lines:
        ys.extend([slope * x0 + intercept, slope * x1 + intercept])
    y0, y1 = min(ys), max(ys)
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    padx, pady = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady
    ml, mr, mt, mb = 62, 18, 34, 46

    def px(x: float) -> str:
        return f"{ml + (x - x0) / (x1 - x0) * (width - ml - mr):.2f}"

    def py(y: float) -> str:
        return f"{height - mb - (y - y0) / (y1 - y0) * (height - mt - mb):.2f}"

    el = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    ]
    if config is not None:
        cfg = json.dumps(jsonable(config), sort_keys=True)
        el.append(f"<desc>config: {_xml_escape(cfg)}</desc>")
    el.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    el.append(
        f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" '
        f'height="{height - mt - mb}" fill="none" stroke="#333"/>'
    )
    for tx in _ticks(x0 + padx, x1 - padx):
        p = px(tx)
        el.append(
            f'<line x1="{p}" y1="{height - mb}" x2="{p}" '
            f'y2="{height - mb + 5}" stroke="#333"/>'
        )
        el.append(
            f'<text x="{p}" y="{height - mb + 18}" font-size="11" '
            f'text-anchor="middle" font-family="monospace">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y0 + pady, y1 - pady):
        p = py(ty)
        el.append(f'<line x1="{ml - 5}" y1="{p}" x2="{ml}" y2="{p}" stroke="#333"/>')
        el.append(
            f'<text x="{ml - 8}" y="{p}" font-size="11" text-anchor="end" '
            f'dominant-baseline="middle" font-family="monospace">{_fmt(ty)}</text>'
        )
    for i, (coords, label) in enumerate(crv):
        color = _PALETTE[i % len(_PALETTE)]
        path = " ".join(f"{px(x)},{py(y)}" for x, y in coords)
        el.append(
            f'<polyline points="{path}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"><title>{_xml_escape(label)}</title></polyline>'
        )
    for i, (slope, intercept, label) in enumerate(lines):
        color = _PALETTE[(i + len(crv)) % len(_PALETTE)]
        el.append(
            f'<line x1="{px(x0)}" y1="{py(slope * x0 + intercept)}" '
            f'x2="{px(x1)}" y2="{py(slope * x1 + intercept)}" stroke="{color}" '
            f'stroke-dasharray="6,3" stroke-width="1.5">'
            f"<title>{_xml_escape(label)}</title></line>"
        )
        el.append(
            f'<text x="{width - mr - 6}" y="{mt + 16 + 14 * i}" font-size="11" '
            f'text-anchor="end" fill="{color}" font-family="monospace">'
            f"{_xml_escape(label)}</text>"
        )
    for x, y in pts:
        el.append(
            f'<circle cx="{px(x)}" cy="{py(y)}" r="3" fill="#1f77b4" '
            'fill-opacity="0.75"/>'
        )
    if title:
        el.append(
            f'<text x="{width / 2:.2f}" y="20" font-size="14" text-anchor="middle" '
            f'font-family="monospace">{_xml_escape(title)}</text>'
        )
    if xlabel:
        el.append(
            f'<text x="{width / 2:.2f}" y="{height - 8}" font-size="12" '
            f'text-anchor="middle" font-family="monospace">{_xml_escape(xlabel)}</text>'
        )
    if ylabel:
        el.append(
            f'<text x="14" y="{height / 2:.2f}" font-size="12" text-anchor="middle" '
            f'font-family="monospace" transform="rotate(-90 14 {height / 2:.2f})">'
            f"{_xml_escape(ylabel)}</text>"
        )
    el.append("</svg>")
    body = "\n".join(el) + "\n"
    return body + f"<!-- content_hash: {content_hash(body)} -->\n"


def _xml_escape(s: str) -> str:
    return (
        s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )
