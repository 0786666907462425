"""Event log data model, CSV and XES ingestion, variants and filtering."""

from __future__ import annotations

import csv
import io
import re
import xml.etree.ElementTree as ET
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Union

from confokit.errors import ArgumentError, ParseError, SchemaError

AttributeValue = Union[str, int, float, bool, datetime]

BOOLEAN, INTEGER, FLOAT, INSTANT, TEXT = "boolean", "integer", "float", "instant", "text"
ATTRIBUTE_TYPES = (BOOLEAN, INTEGER, FLOAT, INSTANT, TEXT)


def parse_instant(text: str, fallback_format: str | None = None) -> datetime:
    """Parse ISO 8601 (or ``fallback_format``) into an aware UTC datetime.

    Naive values are taken to be UTC so that instants from different sources
    stay comparable.
    """
    raw = text.strip()
    try:
        iso = raw[:-1] + "+00:00" if raw.endswith(("Z", "z")) else raw
        value = datetime.fromisoformat(iso)
    except ValueError:
        if fallback_format is None:
            raise
        value = datetime.strptime(raw, fallback_format)
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def format_instant(value: datetime) -> str:
    return value.astimezone(timezone.utc).isoformat()


def type_of(value: AttributeValue) -> str:
    if isinstance(value, bool):
        return BOOLEAN
    if isinstance(value, int):
        return INTEGER
    if isinstance(value, float):
        return FLOAT
    if isinstance(value, datetime):
        return INSTANT
    return TEXT


@dataclass(frozen=True)
class Event:
    case_id: str
    activity: str
    timestamp: datetime
    attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.activity:
            raise ValueError(f"event of case {self.case_id!r} has an empty activity")
        if not isinstance(self.timestamp, datetime):
            raise ValueError(f"event timestamp must be a datetime, got {self.timestamp!r}")


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[Event, ...]
    attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        if not self.events:
            raise ValueError(f"trace {self.case_id!r} has no events")
        for prev, cur in zip(self.events, self.events[1:]):
            if cur.timestamp < prev.timestamp:
                raise ValueError(f"trace {self.case_id!r} is not sorted by timestamp")
        for event in self.events:
            if event.case_id != self.case_id:
                raise ValueError(f"event of case {event.case_id!r} inside trace {self.case_id!r}")

    @property
    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)

    def __len__(self) -> int:
        return len(self.events)

    def value(self, name: str) -> AttributeValue | None:
        """Trace-level value of ``name``: the trace attribute, else the first event carrying it."""
        if name in self.attributes:
            return self.attributes[name]
        for event in self.events:
            if name in event.attributes:
                return event.attributes[name]
        return None

    def values(self, name: str) -> list[AttributeValue]:
        found = [self.attributes[name]] if name in self.attributes else []
        found.extend(e.attributes[name] for e in self.events if name in e.attributes)
        return found


@dataclass(frozen=True)
class EventLog:
    traces: tuple[Trace, ...] = ()
    attribute_schema: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "traces", tuple(self.traces))
        seen: set[str] = set()
        for trace in self.traces:
            if trace.case_id in seen:
                raise ValueError(f"duplicate case id {trace.case_id!r}")
            seen.add(trace.case_id)
        for name, declared in self.attribute_schema.items():
            if declared not in ATTRIBUTE_TYPES:
                raise ValueError(f"attribute {name!r} declared with unknown type {declared!r}")
        for trace in self.traces:
            sources = [trace.attributes, *(e.attributes for e in trace.events)]
            for attrs in sources:
                for name, value in attrs.items():
                    declared = self.attribute_schema.get(name)
                    if declared is not None and not _conforms(value, declared):
                        raise ValueError(
                            f"attribute {name!r}={value!r} in case {trace.case_id!r} is not {declared}"
                        )

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def trace(self, case_id: str) -> Trace:
        for trace in self.traces:
            if trace.case_id == case_id:
                return trace
        raise KeyError(case_id)

    @property
    def event_count(self) -> int:
        return sum(len(t) for t in self.traces)

    def with_traces(self, traces: Iterable[Trace]) -> EventLog:
        return EventLog(tuple(traces), dict(self.attribute_schema))


def _conforms(value: AttributeValue, declared: str) -> bool:
    actual = type_of(value)
    return actual == declared or (declared == FLOAT and actual == INTEGER)


@dataclass(frozen=True)
class Variant:
    sequence: tuple[str, ...]
    frequency: int
    member_cases: tuple[str, ...]


# --------------------------------------------------------------------------- CSV


@dataclass(frozen=True)
class CsvMapping:
    case: str = "case_id"
    activity: str = "activity"
    timestamp: str = "timestamp"
    timestamp_format: str | None = None


def _infer_type(values: list[str], timestamp_format: str | None) -> str:
    if all(v.lower() in ("true", "false") for v in values):
        return BOOLEAN
    if all(re.fullmatch(r"[+-]?\d+", v) for v in values):
        return INTEGER
    try:
        for v in values:
            float(v)
        return FLOAT
    except ValueError:
        pass
    try:
        for v in values:
            parse_instant(v, timestamp_format)
        return INSTANT
    except ValueError:
        return TEXT


def _convert(raw: str, kind: str, timestamp_format: str | None) -> AttributeValue:
    if kind == BOOLEAN:
        return raw.lower() == "true"
    if kind == INTEGER:
        return int(raw)
    if kind == FLOAT:
        return float(raw)
    if kind == INSTANT:
        return parse_instant(raw, timestamp_format)
    return raw


def _read_source(source: bytes | str | IO) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8-sig") if isinstance(data, bytes) else data


def _assemble(
    rows: list[tuple[str, str, datetime, dict[str, AttributeValue]]],
    schema: dict[str, str],
    trace_attributes: dict[str, dict[str, AttributeValue]] | None = None,
) -> EventLog:
    grouped: dict[str, list[Event]] = {}
    for case_id, activity, ts, attrs in rows:
        grouped.setdefault(case_id, []).append(Event(case_id, activity, ts, attrs))
    trace_attributes = trace_attributes or {}
    traces = []
    for case_id, events in grouped.items():
        events.sort(key=lambda e: e.timestamp)  # stable: ties keep source order
        traces.append(Trace(case_id, tuple(events), trace_attributes.get(case_id, {})))
    return EventLog(tuple(traces), schema)


def parse_csv(source: bytes | str | IO, mapping: CsvMapping | None = None) -> EventLog:
    """Read a CSV event log; one event per data row, grouped into traces by case id."""
    mapping = mapping or CsvMapping()
    reader = csv.reader(io.StringIO(_read_source(source)))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("CSV input has no header row", line=1) from None
    header = [h.strip() for h in header]
    index = {}
    for column in (mapping.case, mapping.activity, mapping.timestamp):
        if column not in header:
            raise SchemaError(column, f"mapped column {column!r} not found in CSV header")
        index[column] = header.index(column)
    mapped = set(index.values())
    extra = [(i, name) for i, name in enumerate(header) if i not in mapped]

    raw_rows: list[tuple[int, list[str]]] = []
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"line {reader.line_num}: expected {len(header)} fields, got {len(row)}", line=reader.line_num
            )
        raw_rows.append((reader.line_num, row))

    schema: dict[str, str] = {}
    for i, name in extra:
        values = [row[i] for _, row in raw_rows if row[i] != ""]
        if values:
            schema[name] = _infer_type(values, mapping.timestamp_format)

    rows = []
    for line, row in raw_rows:
        case_id = row[index[mapping.case]].strip()
        activity = row[index[mapping.activity]].strip()
        if not case_id:
            raise ParseError(f"line {line}: event without case identifier", line=line)
        if not activity:
            raise ParseError(f"line {line}: event without activity", line=line)
        try:
            ts = parse_instant(row[index[mapping.timestamp]], mapping.timestamp_format)
        except ValueError:
            raise ParseError(
                f"line {line}: unparseable timestamp {row[index[mapping.timestamp]]!r}", line=line
            ) from None
        attrs = {
            name: _convert(row[i], schema[name], mapping.timestamp_format) for i, name in extra if row[i] != ""
        }
        rows.append((case_id, activity, ts, attrs))
    return _assemble(rows, schema)


def _csv_cell(value: AttributeValue) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, datetime):
        return format_instant(value)
    return str(value)


def to_csv(log: EventLog, mapping: CsvMapping | None = None) -> str:
    """Serialize ``log`` to CSV text that :func:`parse_csv` reads back into an equal log."""
    mapping = mapping or CsvMapping()
    names = sorted(log.attribute_schema)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([mapping.case, mapping.activity, mapping.timestamp, *names])
    for trace in log.traces:
        for event in trace.events:
            merged = {**trace.attributes, **event.attributes}
            writer.writerow(
                [
                    trace.case_id,
                    event.activity,
                    format_instant(event.timestamp),
                    *(_csv_cell(merged[n]) if n in merged else "" for n in names),
                ]
            )
    return out.getvalue()


# --------------------------------------------------------------------------- XES

_XES_TYPES = {"string": TEXT, "date": INSTANT, "int": INTEGER, "float": FLOAT, "boolean": BOOLEAN}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _xes_value(elem: ET.Element) -> tuple[str, AttributeValue, str]:
    tag = _local(elem.tag)
    key = elem.get("key")
    raw = elem.get("value")
    if key is None or raw is None:
        raise ValueError(f"<{tag}> attribute element without key/value")
    kind = _XES_TYPES.get(tag, TEXT)
    if kind == BOOLEAN:
        value: AttributeValue = raw.strip().lower() == "true"
    elif kind == INTEGER:
        value = int(raw)
    elif kind == FLOAT:
        value = float(raw)
    elif kind == INSTANT:
        value = parse_instant(raw)
    else:
        value = raw
    return key, value, kind


def _xes_attributes(elem: ET.Element) -> list[tuple[str, AttributeValue, str]]:
    out = []
    for child in elem:
        tag = _local(child.tag)
        if tag in ("trace", "event", "global", "extension", "classifier"):
            continue
        if child.get("key") is None or child.get("value") is None:
            continue  # nested lists/containers are not supported
        out.append(_xes_value(child))
    return out


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(x) + 1 for x in lines[: line - 1]) + column


def parse_xes_subset(source: bytes | str | IO) -> EventLog:
    """Read the string/date/int/float/boolean subset of XES."""
    if isinstance(source, str):
        data = source.encode("utf-8")
    elif isinstance(source, bytes):
        data = source
    else:
        raw = source.read()
        data = raw.encode("utf-8") if isinstance(raw, str) else raw
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, column = exc.position
        offset = _byte_offset(data, line, column)
        raise ParseError(f"malformed XML at byte offset {offset}: {exc}", offset=offset) from None
    if _local(root.tag) != "log":
        raise ParseError(f"root element is <{_local(root.tag)}>, expected <log>", offset=0)

    schema: dict[str, str] = {}

    def declare(key: str, kind: str, where: str) -> None:
        known = schema.setdefault(key, kind)
        if known != kind and {known, kind} != {INTEGER, FLOAT}:
            raise SchemaError(key, f"attribute {key!r} is {kind} at {where} but {known} elsewhere")
        if {known, kind} == {INTEGER, FLOAT}:
            schema[key] = FLOAT

    rows = []
    trace_attrs: dict[str, dict[str, AttributeValue]] = {}
    seen_cases: set[str] = set()
    traces = [t for t in root if _local(t.tag) == "trace"]
    for ti, trace_elem in enumerate(traces):
        attrs = {}
        case_id = None
        for key, value, kind in _xes_attributes(trace_elem):
            if key == "concept:name":
                case_id = str(value)
                continue
            declare(key, kind, f"trace {ti}")
            attrs[key] = value
        if case_id is None:
            raise ParseError(f"trace {ti} has no concept:name (case identifier)", trace_index=ti)
        if case_id in seen_cases:
            raise ParseError(f"trace {ti}: duplicate case identifier {case_id!r}", trace_index=ti)
        seen_cases.add(case_id)
        trace_attrs[case_id] = attrs
        events = [e for e in trace_elem if _local(e.tag) == "event"]
        if not events:
            raise ParseError(f"trace {ti} ({case_id!r}) has no events", trace_index=ti)
        for ei, event_elem in enumerate(events):
            activity = None
            ts = None
            event_attrs = {}
            for key, value, kind in _xes_attributes(event_elem):
                if key == "concept:name":
                    activity = str(value)
                elif key == "time:timestamp":
                    if not isinstance(value, datetime):
                        raise ParseError(
                            f"trace {ti} ({case_id!r}) event {ei}: time:timestamp is not a date",
                            trace_index=ti,
                            event_index=ei,
                        )
                    ts = value
                else:
                    declare(key, kind, f"trace {ti} event {ei}")
                    event_attrs[key] = value
            for missing, present in (("concept:name", activity), ("time:timestamp", ts)):
                if present is None:
                    raise ParseError(
                        f"trace {ti} ({case_id!r}) event {ei} lacks {missing}", trace_index=ti, event_index=ei
                    )
            rows.append((case_id, activity, ts, event_attrs))
    # int values declared as float elsewhere must become floats
    fixed = []
    for case_id, activity, ts, attrs in rows:
        fixed.append((case_id, activity, ts, {k: _widen(v, schema[k]) for k, v in attrs.items()}))
    trace_attrs = {c: {k: _widen(v, schema[k]) for k, v in a.items()} for c, a in trace_attrs.items()}
    return _assemble(fixed, schema, trace_attrs)


def _widen(value: AttributeValue, declared: str) -> AttributeValue:
    if declared == FLOAT and type_of(value) == INTEGER:
        return float(value)
    return value


def to_xes(log: EventLog) -> str:
    """Render ``log`` in the XES subset understood by :func:`parse_xes_subset`."""
    tags = {TEXT: "string", INSTANT: "date", INTEGER: "int", FLOAT: "float", BOOLEAN: "boolean"}
    root = ET.Element("log", {"xes.version": "1.0"})

    def put(parent: ET.Element, key: str, value: AttributeValue, kind: str | None = None) -> None:
        kind = kind or type_of(value)
        ET.SubElement(parent, tags[kind], {"key": key, "value": _csv_cell(value)})

    for trace in log.traces:
        t = ET.SubElement(root, "trace")
        put(t, "concept:name", trace.case_id, TEXT)
        for key in sorted(trace.attributes):
            put(t, key, trace.attributes[key], log.attribute_schema.get(key))
        for event in trace.events:
            e = ET.SubElement(t, "event")
            put(e, "concept:name", event.activity, TEXT)
            put(e, "time:timestamp", event.timestamp, INSTANT)
            for key in sorted(event.attributes):
                put(e, key, event.attributes[key], log.attribute_schema.get(key))
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


# --------------------------------------------------------------------------- variants


def variants(log: EventLog) -> list[Variant]:
    groups: dict[tuple[str, ...], list[str]] = {}
    for trace in log.traces:
        groups.setdefault(trace.activities, []).append(trace.case_id)
    out = [Variant(seq, len(cases), tuple(cases)) for seq, cases in groups.items()]
    out.sort(key=lambda v: (-v.frequency, v.sequence))
    return out


# --------------------------------------------------------------------------- filters

_OPS: dict[str, Callable[[object, object], bool]] = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


class TracePredicate:
    """Declarative trace filter. Subclasses implement ``matches`` and ``attributes``."""

    def matches(self, trace: Trace) -> bool:  # pragma: no cover - interface
        raise NotImplementedError

    def attributes(self) -> set[str]:
        return set()

    def __and__(self, other: TracePredicate) -> AllOf:
        return AllOf((self, other))

    def __or__(self, other: TracePredicate) -> AnyOf:
        return AnyOf((self, other))

    def __invert__(self) -> Not:
        return Not(self)


@dataclass(frozen=True)
class AttributeFilter(TracePredicate):
    """Keeps traces where the trace or any of its events satisfies ``name op value``."""

    name: str
    op: str
    value: AttributeValue

    def __post_init__(self) -> None:
        if self.op not in _OPS:
            raise ArgumentError(f"unknown comparison {self.op!r}")

    def matches(self, trace: Trace) -> bool:
        compare = _OPS[self.op]
        for actual in trace.values(self.name):
            try:
                if compare(actual, self.value):
                    return True
            except TypeError:
                continue
        return False

    def attributes(self) -> set[str]:
        return {self.name}


@dataclass(frozen=True)
class ContainsActivity(TracePredicate):
    activity: str

    def matches(self, trace: Trace) -> bool:
        return any(e.activity == self.activity for e in trace.events)


@dataclass(frozen=True)
class TimeWindow(TracePredicate):
    """``contained``: all events inside [start, end]; ``intersecting``: at least one."""

    start: datetime
    end: datetime
    mode: str = "contained"

    def __post_init__(self) -> None:
        if self.mode not in ("contained", "intersecting"):
            raise ArgumentError(f"unknown time window mode {self.mode!r}")

    def matches(self, trace: Trace) -> bool:
        inside = [self.start <= e.timestamp <= self.end for e in trace.events]
        return all(inside) if self.mode == "contained" else any(inside)


@dataclass(frozen=True)
class AllOf(TracePredicate):
    parts: tuple[TracePredicate, ...]

    def matches(self, trace: Trace) -> bool:
        return all(p.matches(trace) for p in self.parts)

    def attributes(self) -> set[str]:
        return set().union(*(p.attributes() for p in self.parts))


@dataclass(frozen=True)
class AnyOf(TracePredicate):
    parts: tuple[TracePredicate, ...]

    def matches(self, trace: Trace) -> bool:
        return any(p.matches(trace) for p in self.parts)

    def attributes(self) -> set[str]:
        return set().union(*(p.attributes() for p in self.parts))


@dataclass(frozen=True)
class Not(TracePredicate):
    inner: TracePredicate

    def matches(self, trace: Trace) -> bool:
        return not self.inner.matches(trace)

    def attributes(self) -> set[str]:
        return self.inner.attributes()


class Always(TracePredicate):
    def matches(self, trace: Trace) -> bool:
        return True


def filter_log(log: EventLog, predicate: TracePredicate) -> EventLog:
    unknown = sorted(predicate.attributes() - set(log.attribute_schema))
    if unknown:
        raise SchemaError(unknown[0], f"filter references undeclared attribute {unknown[0]!r}")
    return log.with_traces(t for t in log.traces if predicate.matches(t))


def as_activities(trace: Trace | Sequence[str]) -> tuple[str, ...]:
    """Activity sequence of a trace or of a plain label sequence (which may be empty)."""
    if isinstance(trace, Trace):
        return trace.activities
    return tuple(trace)


def log_from_sequences(sequences: Iterable[Sequence[str]], prefix: str = "case-") -> EventLog:
    """Build a log from plain activity sequences, one minute apart; handy for fixtures."""
    from datetime import timedelta

    base = datetime(2024, 1, 1, tzinfo=timezone.utc)
    traces = []
    for i, seq in enumerate(sequences):
        case = f"{prefix}{i}"
        events = tuple(Event(case, a, base + timedelta(minutes=j)) for j, a in enumerate(seq))
        traces.append(Trace(case, events))
    return EventLog(tuple(traces))
