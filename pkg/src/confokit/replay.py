"""Token-based replay with missing/remaining token accounting."""

from __future__ import annotations

from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field

from confokit.errors import ArgumentError, ModelError
from confokit.event_log import EventLog, Trace, as_activities
from confokit.petri import Marking, PetriNet, enabled


GHOST_PREFIX = "unknown:"


@dataclass(frozen=True)
class MissingToken:
    place: str | None
    activities: tuple[str, ...]
    position: int


@dataclass(frozen=True)
class ReplayResult:
    produced: int
    consumed: int
    missing: int
    remaining: int
    missing_detail: tuple[MissingToken, ...] = ()
    remaining_detail: tuple[tuple[str, int], ...] = ()
    reached_final: bool = False
    skipped: tuple[tuple[str, int], ...] = field(default=())

    @property
    def counters(self) -> tuple[int, int, int, int]:
        """(p, c, m, r)."""
        return self.produced, self.consumed, self.missing, self.remaining

    def __add__(self, other: ReplayResult) -> ReplayResult:
        return ReplayResult(
            self.produced + other.produced,
            self.consumed + other.consumed,
            self.missing + other.missing,
            self.remaining + other.remaining,
        )


def _silent_path(net: PetriNet, start: Marking, goal, limit: int) -> list[str] | None:
    """Shortest sequence of silent firings reaching a marking where ``goal`` holds."""
    silent = [t.id for t in net.silent_transitions]
    if not silent:
        return None
    queue: deque[tuple[Marking, list[str]]] = deque([(start, [])])
    seen = {start}
    expanded = 0
    while queue and expanded < limit:
        marking, path = queue.popleft()
        expanded += 1
        for tid in silent:
            pre = net.preset(tid)
            if not all(marking[p] >= 1 for p in pre):
                continue
            nxt = marking.remove(pre).add(net.postset(tid))
            if nxt in seen:
                continue
            if goal(nxt):
                return path + [tid]
            seen.add(nxt)
            queue.append((nxt, path + [tid]))
    return None


def _attribution(net: PetriNet, place: str) -> tuple[str, ...]:
    return tuple(net.transition(t).label or t for t in net.producers(place))


def replay_trace(net: PetriNet, trace: Trace | Sequence[str]) -> ReplayResult:
    """Replay ``trace`` on ``net``; initial production and final consumption are counted."""
    word = as_activities(trace)
    by_label: dict[str, str] = {}
    for label in set(word):
        matches = net.transitions_labelled(label)
        if len(matches) > 1:
            raise ModelError(
                f"activity {label!r} maps to several transitions ({', '.join(t.id for t in matches)})"
            )
        if matches:
            by_label[label] = matches[0].id

    n_silent = len(net.silent_transitions)
    limit = max(n_silent * n_silent, 1000)  # guards against silent cycles that generate tokens
    marking = net.initial_marking
    p = marking.total
    c = m = 0
    missing: list[MissingToken] = []
    skipped: list[tuple[str, int]] = []
    ghosts: dict[str, int] = {}

    def run_silent(path: list[str]) -> None:
        nonlocal marking, p, c
        for tid in path:
            marking = marking.remove(net.preset(tid)).add(net.postset(tid))
            c += len(net.preset(tid))
            p += len(net.postset(tid))

    for pos, label in enumerate(word):
        tid = by_label.get(label)
        if tid is None:
            # ghost transition: one missing token in, one remaining token out
            skipped.append((label, pos))
            missing.append(MissingToken(None, (label,), pos))
            m += 1
            c += 1
            p += 1
            ghosts[label] = ghosts.get(label, 0) + 1
            continue
        pre = net.preset(tid)
        if tid not in enabled(net, marking):
            path = _silent_path(net, marking, lambda mk: all(mk[q] >= 1 for q in pre), limit)
            if path:
                run_silent(path)
        for place in pre:
            if marking[place] < 1:
                m += 1
                marking = marking.add([place])
                missing.append(MissingToken(place, _attribution(net, place), pos))
        marking = marking.remove(pre).add(net.postset(tid))
        c += len(pre)
        p += len(net.postset(tid))

    final = net.final_marking
    if not marking.covers(final):
        path = _silent_path(net, marking, lambda mk: mk.covers(final), limit)
        if path:
            run_silent(path)
    reached_final = marking == final
    for place, need in final.items():
        deficit = need - marking[place]
        if deficit > 0:
            m += deficit
            marking = marking.add([place] * deficit)
            missing.extend(MissingToken(place, _attribution(net, place), len(word)) for _ in range(deficit))
    marking = marking.remove([q for q, k in final.items() for _ in range(k)])
    c += final.total
    remaining_detail = tuple(marking.items()) + tuple(
        (f"{GHOST_PREFIX}{label}", k) for label, k in sorted(ghosts.items())
    )
    return ReplayResult(
        produced=p,
        consumed=c,
        missing=m,
        remaining=marking.total + sum(ghosts.values()),
        missing_detail=tuple(missing),
        remaining_detail=remaining_detail,
        reached_final=reached_final,
        skipped=tuple(skipped),
    )


def replay_fitness(result: ReplayResult) -> float:
    p, c, m, r = result.counters
    if c <= 0 or p <= 0:
        raise ArgumentError(f"replay fitness needs produced and consumed tokens (p={p}, c={c})")
    return 0.5 * (1 - m / c) + 0.5 * (1 - r / p)


@dataclass(frozen=True)
class ReplayLogResult:
    results: dict[str, ReplayResult]
    totals: ReplayResult
    log_fitness: float

    @property
    def trace_fitness(self) -> dict[str, float]:
        return {case: replay_fitness(r) for case, r in self.results.items()}


def replay_log(net: PetriNet, log: EventLog) -> ReplayLogResult:
    if len(log) == 0:
        raise ArgumentError("cannot compute replay fitness of an empty log (no tokens)")
    cache: dict[tuple[str, ...], ReplayResult] = {}
    results = {}
    for trace in log.traces:
        key = trace.activities
        if key not in cache:
            cache[key] = replay_trace(net, key)
        results[trace.case_id] = cache[key]
    totals = ReplayResult(0, 0, 0, 0)
    for r in results.values():
        totals = totals + r
    return ReplayLogResult(results, totals, replay_fitness(totals))
