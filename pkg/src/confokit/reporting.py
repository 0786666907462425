"""Static file emitters: chevron/histogram SVG, annotated model DOT, JSON reports."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from datetime import date, datetime, timezone
from pathlib import Path
from xml.sax.saxutils import escape

from confokit import __version__
from confokit.analytics import TASKS, ChevronRow, DistributionBuckets
from confokit.errors import ArgumentError, ValidationError
from confokit.petri import PetriNet

DEFAULT_PALETTE = {"conforming": "green", "missing": "purple", "wrong": "yellow"}
DEPMINE_TASKS = ("build_session_log", "discover_dfg", "dfg_to_dot")
ENGINE_TASKS = ("rules", "replay", "align", "taxonomy")
KNOWN_SECTIONS = frozenset(TASKS + DEPMINE_TASKS + ENGINE_TASKS)
REPRODUCIBLE_TIMESTAMP = "1970-01-01T00:00:00+00:00"

_CELL_W, _CELL_H, _TIP, _GAP, _LEFT, _TOP = 64, 32, 12, 4, 90, 16


def _fmt(x: float) -> str:
    text = f"{x:.2f}".rstrip("0").rstrip(".")
    return text if text != "-0" else "0"


def render_chevron_svg(rows: Sequence[ChevronRow], palette: Mapping[str, str] | None = None) -> str:
    """One band of chevrons per row, filled by cell status."""
    if not rows:
        raise ArgumentError("chevron diagram needs at least one row")
    colors = {**DEFAULT_PALETTE, **(palette or {})}
    longest = max(len(r.cells) for r in rows)
    width = _LEFT + longest * (_CELL_W + _GAP) + _TIP + 8
    height = _TOP * 2 + len(rows) * (_CELL_H + 10)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for r, row in enumerate(rows):
        y = _TOP + r * (_CELL_H + 10)
        mid = y + _CELL_H / 2
        out.append(f'<g class="trace" data-case="{escape(row.case_id)}">')
        out.append(
            f'<text x="4" y="{_fmt(mid + 4)}" font-family="sans-serif" font-size="12">{escape(row.case_id)}</text>'
        )
        for c, (label, status) in enumerate(row.cells):
            if status not in colors:
                raise ArgumentError(f"unknown cell status {status!r}")
            x = _LEFT + c * (_CELL_W + _GAP)
            notch = _TIP if c else 0
            points = [
                (x, y),
                (x + _CELL_W, y),
                (x + _CELL_W + _TIP, mid),
                (x + _CELL_W, y + _CELL_H),
                (x, y + _CELL_H),
                (x + notch, mid),
            ]
            pts = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in points)
            out.append(
                f'<polygon class="{status}" points="{pts}" fill="{colors[status]}" stroke="black" stroke-width="1"/>'
            )
            out.append(
                f'<text x="{_fmt(x + _CELL_W / 2 + _TIP / 2)}" y="{_fmt(mid + 4)}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="12">{escape(label)}</text>'
            )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_histogram_svg(buckets: DistributionBuckets, title: str = "Conformance distribution") -> str:
    """Bar chart with one bar per bin, bin edges on the x axis and counts above bars."""
    n = len(buckets.counts)
    plot_w, plot_h, left, top, bottom = 400, 200, 50, 30, 50
    width, height = left + plot_w + 20, top + plot_h + bottom
    peak = max(buckets.counts) if any(buckets.counts) else 1
    bar_w = plot_w / n
    base = top + plot_h
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{_fmt(width / 2)}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{base}" x2="{left + plot_w}" y2="{base}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>',
    ]
    for i, count in enumerate(buckets.counts):
        x = left + i * bar_w
        h = plot_h * count / peak
        lo, hi = buckets.edges[i], buckets.edges[i + 1]
        closing = "]" if i == n - 1 else ")"
        out.append(
            f'<rect class="bar" x="{_fmt(x + 2)}" y="{_fmt(base - h)}" width="{_fmt(bar_w - 4)}" height="{_fmt(h)}" '
            f'fill="steelblue" data-count="{count}"/>'
        )
        out.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(base - h - 4)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{count}</text>'
        )
        out.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{base + 16}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="10">[{lo:.2f}, {hi:.2f}{closing}</text>'
        )
    out.append(
        f'<text x="{_fmt(left + plot_w / 2)}" y="{height - 8}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">trace fitness</text>'
    )
    out.append(
        f'<text x="14" y="{_fmt(top + plot_h / 2)}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 14 {_fmt(top + plot_h / 2)})">traces</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def violations_per_activity(summary: Iterable[tuple[str, int]]) -> dict[str, int]:
    """Fold ``summarize_guideline_violations`` output (``"missing D"``, ``"inserted X"``) into per-activity counts."""
    out: dict[str, int] = {}
    for kind, count in summary:
        parts = kind.split(" ", 1)
        activity = parts[1] if len(parts) == 2 and parts[0] in ("missing", "inserted") else kind
        out[activity] = out.get(activity, 0) + count
    return out


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def annotate_model_dot(net: PetriNet, violations: Mapping[str, int]) -> str:
    """DOT rendering of the net; transitions with violations are red and show their count."""
    labels = net.visible_labels
    lines = ["digraph model {", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    for place in net.places:
        tokens = net.initial_marking[place]
        mark = " •" if tokens else ""
        lines.append(f"  {_q(place)} [shape=circle, label={_q(place + mark)}];")
    for t in net.transitions:
        if t.label is None:
            lines.append(f'  {_q(t.id)} [shape=box, label="", style=filled, fillcolor=black, width=0.15];')
            continue
        count = violations.get(t.label, 0)
        if count:
            lines.append(
                f"  {_q(t.id)} [shape=box, label={_q(f'{t.label} ({count})')}, style=filled, fillcolor=red, color=red];"
            )
        else:
            lines.append(f"  {_q(t.id)} [shape=box, label={_q(t.label)}];")
    for src, dst in sorted(net.arcs):
        lines.append(f"  {_q(src)} -> {_q(dst)};")
    external = sorted((a, n) for a, n in violations.items() if a not in labels and n)
    if external:
        text = "\\l".join(f"{a} ({n})" for a, n in external) + "\\l"
        lines.append(f'  "__legend__" [shape=note, label="not in model:\\l{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- JSON report


def to_jsonable(obj):
    """Convert engine results to JSON-ready values; floats are rounded to 6 decimals."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return round(obj, 6)
    if isinstance(obj, (datetime, date)):
        return obj.isoformat()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if not f.name.startswith("_")}
    if isinstance(obj, Mapping):
        if all(isinstance(k, str) for k in obj):
            return {k: to_jsonable(v) for k, v in obj.items()}
        return [{"key": to_jsonable(k), "value": to_jsonable(v)} for k, v in obj.items()]
    if isinstance(obj, (set, frozenset)):
        return sorted((to_jsonable(x) for x in obj), key=lambda x: json.dumps(x, sort_keys=True))
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if hasattr(obj, "items"):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    return str(obj)


@dataclasses.dataclass(frozen=True)
class ReportDocument:
    metadata: dict
    sections: dict


def file_digest(path: str | os.PathLike) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_report(
    sections: Mapping[str, object],
    inputs: Mapping[str, str | os.PathLike] | None = None,
    reproducible: bool = False,
) -> ReportDocument:
    unknown = sorted(set(sections) - KNOWN_SECTIONS)
    if unknown:
        raise ValidationError(f"unknown report sections: {', '.join(unknown)}", unknown)
    stamp = REPRODUCIBLE_TIMESTAMP if reproducible else datetime.now(timezone.utc).replace(microsecond=0).isoformat()
    metadata = {
        "tool": "confokit",
        "version": __version__,
        "inputs": {name: file_digest(path) for name, path in sorted((inputs or {}).items())},
        "timestamp": stamp,
    }
    return ReportDocument(metadata, {name: to_jsonable(payload) for name, payload in sections.items()})


def emit_report(
    sections: Mapping[str, object],
    inputs: Mapping[str, str | os.PathLike] | None = None,
    reproducible: bool = False,
) -> str:
    doc = build_report(sections, inputs, reproducible)
    return json.dumps({"metadata": doc.metadata, "sections": doc.sections}, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def parse_report(text: str | bytes) -> ReportDocument:
    try:
        doc = json.loads(text)
        return ReportDocument(doc["metadata"], doc["sections"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"malformed report document: {exc}") from None


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
