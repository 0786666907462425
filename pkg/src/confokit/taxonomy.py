"""The six-dimension conformance checking task taxonomy and catalog statistics."""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import IO

from confokit.errors import ParseError, SchemaError, ValidationError

GOALS = ("explore", "describe", "explain", "confirm", "present")
MEANS = ("identify", "present", "compare", "derive", "summarize", "discover", "annotate", "explore", "unknown")
CHARACTERISTICS = (
    "guideline violations",
    "process conformance",
    "reasons for guideline violations",
    "guideline violations in model",
    "conformance distribution",
    "conformant and non-conformant traces",
    "impact of conformance on process outcome",
    "reasons for process conformance",
    "severity of guideline violations",
    "violation patterns",
    "effects of goal deviations",
    "process conformance per rule",
    "process conformance over time",
    "most frequent guideline violations",
)
CONSTRAINT_TYPES = ("control-flow", "data", "resource", "time")
TARGETS = ("log", "trace", "event")
CARDINALITIES = ("single", "multiple", "all")

DIMENSIONS = ("goal", "means", "characteristic", "constraint_type", "target", "cardinality")
VOCABULARY = {
    "goal": GOALS,
    "means": MEANS,
    "characteristic": CHARACTERISTICS,
    "constraint_type": CONSTRAINT_TYPES,
    "target": TARGETS,
    "cardinality": CARDINALITIES,
}


@dataclass(frozen=True)
class TaskDescriptor:
    goal: str
    means: str
    characteristic: str
    constraint_type: frozenset[str]
    target: str
    cardinality: str

    def __post_init__(self) -> None:
        if isinstance(self.constraint_type, str):
            object.__setattr__(self, "constraint_type", frozenset({self.constraint_type}))
        else:
            object.__setattr__(self, "constraint_type", frozenset(self.constraint_type))

    def value(self, dimension: str) -> str | frozenset[str]:
        return getattr(self, dimension)

    def label(self) -> str:
        """Short ``Goal: Means Characteristic`` form used in catalog listings."""
        return f"{self.goal.capitalize()}: {self.means.capitalize()} {self.characteristic.capitalize()}"


def validate_descriptor(d: TaskDescriptor, extra_characteristics: Iterable[str] = ()) -> list[str]:
    """Return every vocabulary violation of ``d``; an empty list means valid."""
    problems = []
    extra = set(extra_characteristics)
    for dim in ("goal", "means", "characteristic", "target", "cardinality"):
        value = getattr(d, dim, None)
        allowed = VOCABULARY[dim]
        if dim == "characteristic" and value in extra:
            continue
        if not isinstance(value, str) or value not in allowed:
            problems.append(f"{dim}: {value!r} is not a {dim} characteristic")
    ct = getattr(d, "constraint_type", None)
    try:
        members = set(ct) if ct is not None else set()
    except TypeError:
        members = {ct}
    if not members:
        problems.append("constraint_type empty")
    for member in sorted(members, key=str):
        if member not in CONSTRAINT_TYPES:
            problems.append(f"constraint_type: {member!r} is not a constraint_type characteristic")
    return problems


@dataclass(frozen=True)
class CatalogEntry:
    descriptor: TaskDescriptor
    count: int
    source: str = ""


@dataclass(frozen=True)
class TaskCatalog:
    entries: tuple[CatalogEntry, ...] = ()
    extra_characteristics: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "extra_characteristics", frozenset(self.extra_characteristics))
        for e in self.entries:
            if e.count < 1:
                raise ValidationError(f"catalog counts must be positive, got {e.count}")

    @property
    def total(self) -> int:
        return sum(e.count for e in self.entries)

    def offenders(self) -> list[str]:
        out = []
        for i, e in enumerate(self.entries):
            problems = validate_descriptor(e.descriptor, self.extra_characteristics)
            if problems:
                out.append(f"entry {i}: " + "; ".join(problems))
        return out

    def require_valid(self) -> None:
        offenders = self.offenders()
        if offenders:
            raise ValidationError("catalog contains invalid descriptors", offenders)


@dataclass(frozen=True)
class AnalysisSession:
    session_id: str
    steps: tuple[TaskDescriptor, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValidationError(f"session {self.session_id!r} has no steps")


def _members(d: TaskDescriptor, dimension: str) -> list[str]:
    value = d.value(dimension)
    if isinstance(value, frozenset):
        return sorted(value)
    return [value]


def catalog_stats(catalog: TaskCatalog) -> dict[str, dict[str, int]]:
    """Marginal counts per dimension, each ordered by count descending then name."""
    catalog.require_valid()
    stats: dict[str, dict[str, int]] = {}
    for dim in DIMENSIONS:
        counts: dict[str, int] = {}
        for e in catalog.entries:
            for member in _members(e.descriptor, dim):
                counts[member] = counts.get(member, 0) + e.count
        stats[dim] = dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
    return stats


def tuple_counts(catalog: TaskCatalog) -> list[tuple[str, int]]:
    """Counts of ``Goal: Means Characteristic`` realizations, most frequent first."""
    counts: dict[str, int] = {}
    for e in catalog.entries:
        counts[e.descriptor.label()] = counts.get(e.descriptor.label(), 0) + e.count
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class SankeyLink:
    source_dimension: str
    source: str
    target_dimension: str
    target: str
    weight: float


def sankey_links(catalog: TaskCatalog, order: Sequence[str] = DIMENSIONS) -> list[SankeyLink]:
    """Weighted links between characteristics of adjacent dimensions.

    A constraint-type subset spreads its entry's weight equally over its
    perspectives, so every dimension pair carries the full catalog total.
    """
    catalog.require_valid()
    if sorted(order) != sorted(set(order)) or any(d not in DIMENSIONS for d in order):
        raise ValidationError(f"dimension order must list distinct dimensions from {DIMENSIONS}")
    weights: dict[tuple[str, str, str, str], float] = {}
    for left, right in zip(order, order[1:]):
        for e in catalog.entries:
            xs = _members(e.descriptor, left)
            ys = _members(e.descriptor, right)
            share = e.count / (len(xs) * len(ys))
            for x in xs:
                for y in ys:
                    k = (left, x, right, y)
                    weights[k] = weights.get(k, 0.0) + share
    position = {d: i for i, d in enumerate(order)}
    links = [SankeyLink(a, x, b, y, w) for (a, x, b, y), w in weights.items()]
    links.sort(key=lambda l: (position[l.source_dimension], -l.weight, l.source, l.target))
    return links


# --------------------------------------------------------------------------- file formats

CATALOG_COLUMNS = ("goal", "means", "characteristic", "constraint_type", "target", "cardinality", "count", "source")
SESSION_COLUMNS = ("session_id", "step_index", "goal", "means", "characteristic", "constraint_type", "target", "cardinality")
_EXTRA_MARKER = "# extra_characteristics:"


def _norm(text: str) -> str:
    return " ".join(text.strip().lower().split())


def _norm_constraint(text: str) -> frozenset[str]:
    parts = [_norm(p).replace("control flow", "control-flow") for p in text.split(";")]
    return frozenset(p for p in parts if p)


def _descriptor(row: dict[str, str]) -> TaskDescriptor:
    return TaskDescriptor(
        goal=_norm(row["goal"]),
        means=_norm(row["means"]),
        characteristic=_norm(row["characteristic"]),
        constraint_type=_norm_constraint(row["constraint_type"]),
        target=_norm(row["target"]),
        cardinality=_norm(row["cardinality"]),
    )


def _text(source: bytes | str | IO) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8-sig") if isinstance(data, bytes) else data


def _rows(text: str, required: Sequence[str]) -> tuple[list[tuple[int, dict[str, str]]], list[str]]:
    comments = []
    body = []
    for line in text.splitlines():
        (comments if line.lstrip().startswith("#") else body).append(line)
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    header = [h.strip() for h in reader.fieldnames or []]
    reader.fieldnames = header
    for column in required:
        if column not in header:
            raise SchemaError(column, f"column {column!r} missing from header")
    rows = []
    for row in reader:
        if not any((v or "").strip() for v in row.values()):
            continue
        rows.append((reader.line_num, row))
    return rows, comments


def load_catalog(source: bytes | str | IO) -> TaskCatalog:
    """Read the catalog CSV (goal, means, characteristic, constraint_type, target, cardinality, count, source).

    Lines starting with ``# extra_characteristics:`` extend the characteristic
    vocabulary with semicolon-separated values.
    """
    rows, comments = _rows(_text(source), CATALOG_COLUMNS[:-1])
    extra: set[str] = set()
    for c in comments:
        if c.strip().lower().startswith(_EXTRA_MARKER):
            extra.update(_norm(x) for x in c.split(":", 1)[1].split(";") if x.strip())
    entries = []
    for line, row in rows:
        try:
            count = int(row["count"])
        except (TypeError, ValueError):
            raise ParseError(f"line {line}: count {row['count']!r} is not an integer", line=line) from None
        if count < 1:
            raise ParseError(f"line {line}: count must be positive", line=line)
        entries.append(CatalogEntry(_descriptor(row), count, (row.get("source") or "").strip()))
    return TaskCatalog(tuple(entries), frozenset(extra))


def catalog_to_csv(catalog: TaskCatalog) -> str:
    out = io.StringIO()
    if catalog.extra_characteristics:
        out.write(f"{_EXTRA_MARKER} {'; '.join(sorted(catalog.extra_characteristics))}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CATALOG_COLUMNS)
    for e in catalog.entries:
        d = e.descriptor
        writer.writerow(
            [d.goal, d.means, d.characteristic, ";".join(sorted(d.constraint_type)), d.target, d.cardinality, e.count, e.source]
        )
    return out.getvalue()


def load_sessions(source: bytes | str | IO) -> list[AnalysisSession]:
    """Read the session CSV; steps are ordered by ``step_index`` within each session."""
    rows, _ = _rows(_text(source), SESSION_COLUMNS)
    grouped: dict[str, list[tuple[int, TaskDescriptor]]] = {}
    for line, row in rows:
        try:
            index = int(row["step_index"])
        except (TypeError, ValueError):
            raise ParseError(f"line {line}: step_index {row['step_index']!r} is not an integer", line=line) from None
        session = row["session_id"].strip()
        if not session:
            raise ParseError(f"line {line}: step without session identifier", line=line)
        grouped.setdefault(session, []).append((index, _descriptor(row)))
    sessions = []
    for session_id, steps in grouped.items():
        indices = [i for i, _ in steps]
        if len(set(indices)) != len(indices):
            raise ParseError(f"session {session_id!r} repeats a step_index")
        steps.sort(key=lambda s: s[0])
        sessions.append(AnalysisSession(session_id, tuple(d for _, d in steps)))
    return sessions


def sessions_to_csv(sessions: Iterable[AnalysisSession]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SESSION_COLUMNS)
    for s in sessions:
        for i, d in enumerate(s.steps, start=1):
            writer.writerow(
                [s.session_id, i, d.goal, d.means, d.characteristic, ";".join(sorted(d.constraint_type)), d.target, d.cardinality]
            )
    return out.getvalue()
