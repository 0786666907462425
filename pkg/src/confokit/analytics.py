"""Engine operations for the implementable conformance checking tasks."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

from confokit.alignment import LOG, MODEL, SYNC, Alignment, CostFunction, align_log
from confokit.errors import ArgumentError, SchemaError
from confokit.event_log import EventLog, Trace, TracePredicate, filter_log
from confokit.patterns import apriori
from confokit.petri import PetriNet
from confokit.replay import ReplayResult, replay_fitness, replay_log
from confokit.rules import Rule, RuleSet, check_trace, derive_rules, rule_fitness
from confokit.trees import ReasonTree, grow_tree

ALIGNMENT = "alignment"
REPLAY = "replay"
RULES = "rules"
TECHNIQUES = (RULES, REPLAY, ALIGNMENT)

MISSING = "missing"
INSERTED = "inserted"
RULE = "rule"
MISSING_TOKEN = "missing_token"
REMAINING_TOKEN = "remaining_token"

CONFORMING = "conforming"
WRONG = "wrong"

CONTEXT = 2


@dataclass(frozen=True)
class ViolationItem:
    """One guideline violation. ``position`` is the event index, or for a
    missing activity the index it would have been inserted at; None when the
    violation has no location (absent activities, leftover tokens)."""

    case_id: str
    position: int | None
    kind: str
    activity: str | None
    detail: str
    perspective: frozenset[str] = frozenset({"control-flow"})
    before: tuple[str, ...] = ()
    after: tuple[str, ...] = ()

    @property
    def violation_type(self) -> str:
        if self.kind == RULE:
            return f"rule {self.detail}"
        if self.kind in (MISSING_TOKEN, REMAINING_TOKEN):
            return f"{self.kind.replace('_', ' ')} {self.activity}"
        return f"{self.kind} {self.activity}"


@dataclass(frozen=True)
class ConformanceReport:
    technique: str
    trace_fitness: dict[str, float]
    log_fitness: float
    violations: tuple[ViolationItem, ...] = ()


def _context(word: Sequence[str], at: int | None, skip_self: bool) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if at is None:
        return (), ()
    start = at + 1 if skip_self else at
    return tuple(word[max(0, at - CONTEXT) : at]), tuple(word[start : start + CONTEXT])


def alignment_items(case_id: str, word: Sequence[str], alignment: Alignment) -> list[ViolationItem]:
    items = []
    pos = 0
    for move in alignment.moves:
        if move.kind == LOG:
            before, after = _context(word, pos, True)
            items.append(ViolationItem(case_id, pos, INSERTED, move.label, f"log move on {move.label}", before=before, after=after))
        elif move.kind == MODEL and move.label is not None:
            before, after = _context(word, pos, False)
            items.append(ViolationItem(case_id, pos, MISSING, move.label, f"model move on {move.label}", before=before, after=after))
        if move.kind in (LOG, SYNC):
            pos += 1
    return items


def _rule_items(trace: Trace, rules: RuleSet) -> list[ViolationItem]:
    word = trace.activities
    items = []
    for v in check_trace(trace, rules):
        at = v.evidence[0] if v.evidence else None
        before, after = _context(word, at, True)
        items.append(ViolationItem(trace.case_id, at, RULE, str(v.rule.params[0]), str(v.rule), v.rule.perspective, before, after))
    return items


def _replay_items(trace: Trace, result: ReplayResult) -> list[ViolationItem]:
    word = trace.activities
    items = []
    for token in result.missing_detail:
        at = token.position if token.position < len(word) else None
        before, after = _context(word, at, False)
        if token.place is None:
            items.append(ViolationItem(trace.case_id, token.position, INSERTED, token.activities[0], "activity unknown to the model", before=before, after=after))
        else:
            who = "/".join(token.activities) or token.place
            items.append(ViolationItem(trace.case_id, at, MISSING_TOKEN, who, f"missing token in {token.place}", before=before, after=after))
    for place, count in result.remaining_detail:
        if place.startswith("unknown:"):
            continue
        for _ in range(count):
            items.append(ViolationItem(trace.case_id, None, REMAINING_TOKEN, place, f"remaining token in {place}"))
    return items


def _require_log(log: EventLog) -> None:
    if len(log) == 0:
        raise ArgumentError("the log contains no traces")


def derive_process_conformance(
    log: EventLog,
    net: PetriNet,
    technique: str = ALIGNMENT,
    *,
    rules: RuleSet | None = None,
    cost: CostFunction | None = None,
) -> ConformanceReport:
    """Trace and log fitness plus the unified violation list of one technique."""
    _require_log(log)
    if technique == ALIGNMENT:
        result = align_log(net, log, cost)
        items = [
            item
            for t in log.traces
            for item in alignment_items(t.case_id, t.activities, result.alignment_for(t))
        ]
        return ConformanceReport(ALIGNMENT, dict(result.trace_fitness), result.log_fitness, tuple(items))
    if technique == REPLAY:
        replayed = replay_log(net, log)
        items = [item for t in log.traces for item in _replay_items(t, replayed.results[t.case_id])]
        fitness = {case: replay_fitness(r) for case, r in replayed.results.items()}
        return ConformanceReport(REPLAY, fitness, replayed.log_fitness, tuple(items))
    if technique == RULES:
        rules = rules if rules is not None else derive_rules(net)
        checked = rule_fitness(log, rules)
        items = [item for t in log.traces for item in _rule_items(t, rules)]
        return ConformanceReport(RULES, dict(checked.trace_fitness), checked.log_fitness, tuple(items))
    raise ArgumentError(f"unknown technique {technique!r}; choose from {', '.join(TECHNIQUES)}")


def conformance_labels(log: EventLog, net: PetriNet, cost: CostFunction | None = None) -> dict[str, bool]:
    """case id -> True when the optimal alignment contains no deviation."""
    result = align_log(net, log, cost)
    return {t.case_id: not result.alignment_for(t).deviations for t in log.traces}


def summarize_process_conformance(log: EventLog, net: PetriNet, cost: CostFunction | None = None) -> float:
    _require_log(log)
    labels = conformance_labels(log, net, cost)
    return sum(labels.values()) / len(labels)


# --------------------------------------------------------------------------- chevrons


@dataclass(frozen=True)
class ChevronRow:
    case_id: str
    cells: tuple[tuple[str, str], ...]


def chevron_row(case_id: str, alignment: Alignment) -> ChevronRow:
    cells = []
    for move in alignment.moves:
        if move.kind == SYNC:
            cells.append((move.label, CONFORMING))
        elif move.kind == LOG:
            cells.append((move.label, WRONG))
        elif move.label is not None:
            cells.append((move.label, MISSING))
    return ChevronRow(case_id, tuple(cells))  # type: ignore[arg-type]


def _traces(traces: EventLog | Iterable[Trace]) -> list[Trace]:
    return list(traces.traces) if isinstance(traces, EventLog) else list(traces)


def present_guideline_violations(
    traces: EventLog | Iterable[Trace], net: PetriNet, cost: CostFunction | None = None
) -> list[ChevronRow]:
    items = _traces(traces)
    if not items:
        return []
    log = EventLog(tuple(items))
    result = align_log(net, log, cost)
    return [chevron_row(t.case_id, result.alignment_for(t)) for t in items]


# --------------------------------------------------------------------------- identify / summarize


@dataclass(frozen=True)
class ViolationQuery:
    """Conjunctive filters for :func:`identify_guideline_violations`."""

    activity: str | None = None
    kinds: frozenset[str] | None = None
    perspective: str | None = None
    trace_filter: TracePredicate | None = None
    target: str = "event"

    def __post_init__(self) -> None:
        if self.target not in ("event", "trace", "log"):
            raise ArgumentError(f"unknown target level {self.target!r}")

    def accepts(self, item: ViolationItem) -> bool:
        if self.activity is not None and item.activity != self.activity:
            return False
        if self.kinds is not None and item.kind not in self.kinds:
            return False
        if self.perspective is not None and self.perspective not in item.perspective:
            return False
        return True


@dataclass(frozen=True)
class TraceViolationSummary:
    case_id: str
    count: int
    types: dict[str, int]


@dataclass(frozen=True)
class LogViolationSummary:
    traces: int
    violating_traces: int
    count: int
    types: dict[str, int]


def _ranked(counts: Mapping[str, int]) -> dict[str, int]:
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def identify_guideline_violations(
    log: EventLog,
    net: PetriNet,
    query: ViolationQuery | None = None,
    technique: str = ALIGNMENT,
    *,
    rules: RuleSet | None = None,
    cost: CostFunction | None = None,
) -> list:
    """Violations with ±2 events of context.

    Returns :class:`ViolationItem` objects for target ``event``, one
    :class:`TraceViolationSummary` per violating trace for ``trace``, and a
    single :class:`LogViolationSummary` for ``log``.
    """
    query = query or ViolationQuery()
    if query.trace_filter is not None:
        log = filter_log(log, query.trace_filter)
    if len(log) == 0:
        items: list[ViolationItem] = []
    else:
        items = [i for i in derive_process_conformance(log, net, technique, rules=rules, cost=cost).violations if query.accepts(i)]
    if query.target == "event":
        return items
    per_trace: dict[str, dict[str, int]] = {}
    for item in items:
        bucket = per_trace.setdefault(item.case_id, {})
        bucket[item.violation_type] = bucket.get(item.violation_type, 0) + 1
    if query.target == "trace":
        return [
            TraceViolationSummary(t.case_id, sum(per_trace[t.case_id].values()), _ranked(per_trace[t.case_id]))
            for t in log.traces
            if t.case_id in per_trace
        ]
    totals: dict[str, int] = {}
    for bucket in per_trace.values():
        for k, n in bucket.items():
            totals[k] = totals.get(k, 0) + n
    return [LogViolationSummary(len(log), len(per_trace), len(items), _ranked(totals))]


def summarize_guideline_violations(
    log: EventLog,
    net: PetriNet,
    technique: str = ALIGNMENT,
    top_k: int | None = None,
    *,
    rules: RuleSet | None = None,
    cost: CostFunction | None = None,
) -> list[tuple[str, int]]:
    """Violation types ranked by frequency; ``top_k`` gives the most frequent ones."""
    if len(log) == 0:
        return []
    counts: dict[str, int] = {}
    for item in derive_process_conformance(log, net, technique, rules=rules, cost=cost).violations:
        counts[item.violation_type] = counts.get(item.violation_type, 0) + 1
    ranked = list(_ranked(counts).items())
    return ranked if top_k is None else ranked[:top_k]


# --------------------------------------------------------------------------- compare / distribution / time


def _fitness_of(log: EventLog, net: PetriNet, technique: str, rules: RuleSet | None, cost: CostFunction | None) -> float:
    return derive_process_conformance(log, net, technique, rules=rules, cost=cost).log_fitness


def compare_process_conformance(
    units: Sequence[tuple[str, EventLog | Iterable[Trace]]],
    net: PetriNet,
    technique: str = ALIGNMENT,
    *,
    rules: RuleSet | None = None,
    cost: CostFunction | None = None,
) -> list[tuple[str, float]]:
    if len(units) < 2:
        raise ArgumentError("comparison needs at least two units")
    rows = []
    for name, unit in units:
        log = unit if isinstance(unit, EventLog) else EventLog(tuple(unit))
        rows.append((name, _fitness_of(log, net, technique, rules, cost)))
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


@dataclass(frozen=True)
class DistributionBuckets:
    edges: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.edges) != len(self.counts) + 1:
            raise ArgumentError("need exactly one more edge than bins")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ArgumentError("bin edges must be strictly increasing")


def histogram(values: Iterable[float], bins: int | Sequence[float]) -> DistributionBuckets:
    """Bins are left-closed; the top bin is also closed on the right."""
    if isinstance(bins, int):
        if bins < 1:
            raise ArgumentError("need at least one bin")
        edges = tuple(i / bins for i in range(bins + 1))
    else:
        edges = tuple(float(e) for e in bins)
        if len(edges) < 2 or edges[0] > 0 or edges[-1] < 1:
            raise ArgumentError("bin edges must cover [0, 1]")
    counts = [0] * (len(edges) - 1)
    for v in values:
        for i in range(len(counts)):
            last = i == len(counts) - 1
            if edges[i] <= v < edges[i + 1] or (last and v == edges[i + 1]):
                counts[i] += 1
                break
        else:
            raise ArgumentError(f"value {v} lies outside the bin edges")
    return DistributionBuckets(edges, tuple(counts))


def conformance_distribution(
    log: EventLog, net: PetriNet, bins: int | Sequence[float] = 10, cost: CostFunction | None = None
) -> DistributionBuckets:
    if isinstance(bins, int) and bins < 1:
        raise ArgumentError("need at least one bin")
    if len(log) == 0:
        return histogram([], bins)
    result = align_log(net, log, cost)
    return histogram((result.trace_fitness[t.case_id] for t in log.traces), bins)


WINDOWS = ("day", "week", "month", "year")


def _window_start(ts: datetime, window: str) -> date:
    d = ts.date()
    if window == "day":
        return d
    if window == "week":
        return d - timedelta(days=d.weekday())
    if window == "month":
        return d.replace(day=1)
    return d.replace(month=1, day=1)


def _next_window(start: date, window: str) -> date:
    if window == "day":
        return start + timedelta(days=1)
    if window == "week":
        return start + timedelta(days=7)
    if window == "month":
        return date(start.year + (start.month == 12), start.month % 12 + 1, 1)
    return date(start.year + 1, 1, 1)


@dataclass(frozen=True)
class TimePoint:
    start: date
    traces: int
    nonconformant: int
    log_fitness: float | None


def conformance_over_time(
    log: EventLog, net: PetriNet, window: str = "day", cost: CostFunction | None = None
) -> list[TimePoint]:
    """Per window (by first event), trace count, non-conformant count and log fitness."""
    if window not in WINDOWS:
        raise ArgumentError(f"unknown window {window!r}; choose from {', '.join(WINDOWS)}")
    if len(log) == 0:
        return []
    result = align_log(net, log, cost)
    groups: dict[date, list[Trace]] = {}
    for t in log.traces:
        groups.setdefault(_window_start(t.events[0].timestamp, window), []).append(t)
    series = []
    current, last = min(groups), max(groups)
    while current <= last:
        members = groups.get(current, [])
        if members:
            fit = [result.trace_fitness[t.case_id] for t in members]
            bad = sum(1 for t in members if result.alignment_for(t).deviations)
            series.append(TimePoint(current, len(members), bad, sum(fit) / len(fit)))
        else:
            series.append(TimePoint(current, 0, 0, None))
        current = _next_window(current, window)
    return series


def conformance_per_rule(log: EventLog, rules: RuleSet) -> list[tuple[Rule, float]]:
    if len(rules) == 0:
        raise ArgumentError("need at least one rule")
    _require_log(log)
    violated: dict[Rule, int] = {r: 0 for r in rules}
    for t in log.traces:
        for v in check_trace(t, rules):
            violated[v.rule] += 1
    return [(r, (len(log) - violated[r]) / len(log)) for r in rules]


# --------------------------------------------------------------------------- patterns / reasons / outcome


def violation_types_per_trace(
    log: EventLog, net: PetriNet, technique: str = ALIGNMENT, *, rules: RuleSet | None = None, cost: CostFunction | None = None
) -> dict[str, frozenset[str]]:
    found: dict[str, set[str]] = {t.case_id: set() for t in log.traces}
    if len(log):
        for item in derive_process_conformance(log, net, technique, rules=rules, cost=cost).violations:
            found[item.case_id].add(item.violation_type)
    return {case: frozenset(v) for case, v in found.items()}


def violation_patterns(
    log: EventLog,
    net: PetriNet,
    min_support: int,
    technique: str = ALIGNMENT,
    *,
    rules: RuleSet | None = None,
    cost: CostFunction | None = None,
) -> list[tuple[frozenset[str], int]]:
    """Sets of violation types that co-occur in at least ``min_support`` traces."""
    if not isinstance(min_support, int) or not 0 < min_support <= len(log):
        raise ArgumentError(f"min_support must lie in 1..{len(log)}, got {min_support}")
    baskets = list(violation_types_per_trace(log, net, technique, rules=rules, cost=cost).values())
    frequent = apriori(baskets, min_support)
    return sorted(frequent.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))


def _require_attributes(log: EventLog, names: Iterable[str]) -> None:
    for name in names:
        if name not in log.attribute_schema:
            raise SchemaError(name, f"attribute {name!r} is not declared in the log")


def discover_reasons(
    log: EventLog,
    net: PetriNet,
    attributes: Sequence[str],
    max_depth: int = 3,
    min_leaf: int = 1,
    *,
    invert: bool = False,
    labels: Mapping[str, bool] | None = None,
    cost: CostFunction | None = None,
) -> ReasonTree:
    """Decision tree separating conformant from non-conformant traces.

    ``labels`` maps case id to conformant (True) and defaults to alignment
    conformance. ``invert`` grows the tree for reasons of conformance instead;
    node counters then swap roles (``nonconformant`` counts the target class).
    """
    _require_attributes(log, attributes)
    if len(log) < 2:
        raise ArgumentError("need at least two traces to discover reasons")
    conformant = dict(labels) if labels is not None else conformance_labels(log, net, cost)
    rows = [{a: t.value(a) for a in attributes} for t in log.traces]
    target = [conformant[t.case_id] if invert else not conformant[t.case_id] for t in log.traces]
    return grow_tree(rows, target, attributes, max_depth, min_leaf)


@dataclass(frozen=True)
class OutcomeComparison:
    attribute: str
    statistic: str  # "mean" or "rate"
    conformant_size: int
    nonconformant_size: int
    conformant_value: float | None
    nonconformant_value: float | None
    difference: float | None = field(default=None)


def impact_on_outcome(
    log: EventLog,
    net: PetriNet,
    outcome_attribute: str,
    *,
    labels: Mapping[str, bool] | None = None,
    cost: CostFunction | None = None,
) -> OutcomeComparison:
    """Outcome mean (numeric) or rate (boolean) per conformance group; difference is conformant minus non-conformant."""
    _require_attributes(log, [outcome_attribute])
    kind = log.attribute_schema[outcome_attribute]
    if kind not in ("integer", "float", "boolean"):
        raise SchemaError(outcome_attribute, f"outcome attribute {outcome_attribute!r} is {kind}, not numeric or boolean")
    _require_log(log)
    conformant = dict(labels) if labels is not None else conformance_labels(log, net, cost)
    groups: dict[bool, list[float]] = {True: [], False: []}
    sizes = {True: 0, False: 0}
    for t in log.traces:
        sizes[conformant[t.case_id]] += 1
        value = t.value(outcome_attribute)
        if value is not None:
            groups[conformant[t.case_id]].append(float(value))
    stats = {k: (sum(v) / len(v) if v else None) for k, v in groups.items()}
    diff = None
    if stats[True] is not None and stats[False] is not None:
        diff = stats[True] - stats[False]
    return OutcomeComparison(
        outcome_attribute,
        "rate" if kind == "boolean" else "mean",
        sizes[True],
        sizes[False],
        stats[True],
        stats[False],
        diff,
    )


TASKS = (
    "derive_process_conformance",
    "summarize_process_conformance",
    "present_guideline_violations",
    "identify_guideline_violations",
    "compare_process_conformance",
    "summarize_guideline_violations",
    "conformance_distribution",
    "conformance_over_time",
    "conformance_per_rule",
    "violation_patterns",
    "discover_reasons",
    "impact_on_outcome",
)
