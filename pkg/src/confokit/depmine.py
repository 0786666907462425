"""Directly-follows graphs over analysis sessions encoded as an event log."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from confokit.errors import ArgumentError, ValidationError
from confokit.event_log import Event, EventLog, Trace
from confokit.taxonomy import AnalysisSession, validate_descriptor

GOAL = "goal"
GOAL_AND_TARGET = "goal_and_target"
_NOTIONS = {GOAL: GOAL, GOAL_AND_TARGET: GOAL_AND_TARGET, "goal-target": GOAL_AND_TARGET}
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def build_session_log(sessions: Sequence[AnalysisSession], activity_notion: str = GOAL) -> EventLog:
    """One trace per session; step ``k`` (1-based) gets the pseudo-timestamp epoch + k seconds."""
    notion = _NOTIONS.get(activity_notion)
    if notion is None:
        raise ArgumentError(f"unknown activity notion {activity_notion!r}; use goal or goal_and_target")
    if not sessions:
        raise ArgumentError("at least one session is required")
    offenders = []
    for s in sessions:
        for k, step in enumerate(s.steps, start=1):
            problems = validate_descriptor(step)
            if problems:
                offenders.append(f"session {s.session_id} step {k}: " + "; ".join(problems))
    if offenders:
        raise ValidationError("sessions contain invalid descriptors", offenders)
    traces = []
    for s in sessions:
        events = []
        for k, step in enumerate(s.steps, start=1):
            name = step.goal if notion == GOAL else f"{step.goal}@{step.target}"
            events.append(Event(s.session_id, name, _EPOCH + timedelta(seconds=k), {"step_index": k}))
        traces.append(Trace(s.session_id, tuple(events)))
    return EventLog(tuple(traces), {"step_index": "integer"})


@dataclass(frozen=True)
class DfgModel:
    nodes: Mapping[str, int]
    edges: Mapping[tuple[str, str], int]
    start_counts: Mapping[str, int]
    end_counts: Mapping[str, int]
    threshold_edges: frozenset[tuple[str, str]] = frozenset()

    @property
    def session_count(self) -> int:
        return sum(self.start_counts.values())


def _sequences(log: EventLog | Iterable[Sequence[str]]) -> list[tuple[str, ...]]:
    if isinstance(log, EventLog):
        return [t.activities for t in log.traces]
    return [tuple(s) for s in log]


def threshold_edges(edges: Mapping[tuple[str, str], int], path_threshold: float) -> frozenset[tuple[str, str]]:
    """Edges at or above the ``path_threshold`` quantile of edge frequencies (nearest rank, rounded up)."""
    if not 0 <= path_threshold <= 1:
        raise ArgumentError(f"path threshold must lie in [0, 1], got {path_threshold}")
    if not edges:
        return frozenset()
    freqs = sorted(edges.values())
    cutoff = freqs[math.ceil(path_threshold * (len(freqs) - 1))]
    return frozenset(e for e, f in edges.items() if f >= cutoff)


def _reachable(starts: Iterable[str], kept: Iterable[tuple[str, str]], reverse: bool = False) -> set[str]:
    adj: dict[str, list[str]] = {}
    for a, b in kept:
        if reverse:
            a, b = b, a
        adj.setdefault(a, []).append(b)
    seen = set(starts)
    stack = list(seen)
    while stack:
        for nxt in adj.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def discover_dfg(log: EventLog | Iterable[Sequence[str]], path_threshold: float = 0.0) -> DfgModel:
    """Frequency-annotated DFG with quantile path filtering and connectivity repair.

    After filtering, removed edges are re-added greedily (highest frequency
    first, then by endpoint names) until every node is reachable from a start
    node and can reach an end node.
    """
    seqs = [s for s in _sequences(log) if s]
    if not seqs:
        raise ArgumentError("cannot discover a DFG from an empty log")
    nodes: dict[str, int] = {}
    edges: dict[tuple[str, str], int] = {}
    starts: dict[str, int] = {}
    ends: dict[str, int] = {}
    for seq in seqs:
        starts[seq[0]] = starts.get(seq[0], 0) + 1
        ends[seq[-1]] = ends.get(seq[-1], 0) + 1
        for a in seq:
            nodes[a] = nodes.get(a, 0) + 1
        for a, b in zip(seq, seq[1:]):
            edges[(a, b)] = edges.get((a, b), 0) + 1

    pre_repair = threshold_edges(edges, path_threshold)
    kept = set(pre_repair)
    removed = sorted((e for e in edges if e not in kept), key=lambda e: (-edges[e], e))
    while True:
        forward = _reachable(starts, kept)
        if len(forward) == len(nodes):
            break
        edge = next(e for e in removed if e[0] in forward and e[1] not in forward)
        kept.add(edge)
        removed.remove(edge)
    while True:
        backward = _reachable(ends, kept, reverse=True)
        if len(backward) == len(nodes):
            break
        edge = next(e for e in removed if e[0] not in backward and e[1] in backward)
        kept.add(edge)
        removed.remove(edge)

    return DfgModel(
        nodes=dict(sorted(nodes.items())),
        edges={e: edges[e] for e in sorted(kept)},
        start_counts=dict(sorted(starts.items())),
        end_counts=dict(sorted(ends.items())),
        threshold_edges=pre_repair,
    )


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dfg_to_dot(model: DfgModel) -> str:
    lines = [
        "digraph dfg {",
        "  rankdir=LR;",
        '  node [fontname="Helvetica"];',
        '  "__start__" [label="start", shape=circle, style=filled, fillcolor="#bbbbbb"];',
        '  "__end__" [label="end", shape=doublecircle, style=filled, fillcolor="#bbbbbb"];',
    ]
    for name in sorted(model.nodes):
        lines.append(f"  {_quote(name)} [label={_quote(f'{name} ({model.nodes[name]})')}, shape=box];")
    for name in sorted(model.start_counts):
        lines.append(f'  "__start__" -> {_quote(name)} [label="{model.start_counts[name]}", style=dashed];')
    for (a, b) in sorted(model.edges):
        lines.append(f'  {_quote(a)} -> {_quote(b)} [label="{model.edges[(a, b)]}"];')
    for name in sorted(model.end_counts):
        lines.append(f'  {_quote(name)} -> "__end__" [label="{model.end_counts[name]}", style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"
