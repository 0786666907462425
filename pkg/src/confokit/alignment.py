"""Optimal alignments over the synchronous product of a trace and a net."""

from __future__ import annotations

import heapq
import itertools
import os
from collections.abc import Sequence
from dataclasses import dataclass

from confokit.errors import ArgumentError, ModelError, ResourceError, ValidationError
from confokit.event_log import EventLog, Trace, as_activities, variants
from confokit.petri import Marking, PetriNet, enabled, fire

SYNC = "synchronous"
LOG = "log"
MODEL = "model"
_RANK = {SYNC: 0, MODEL: 1, LOG: 2}

DEFAULT_STATE_BUDGET = 10**6
ORACLE_STATE_BOUND = 10**5
BUDGET_ENV = "CONFOKIT_STATE_BUDGET"


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ArgumentError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None
        if value < 1:
            raise ArgumentError(f"{BUDGET_ENV} must be positive")
        return value
    return DEFAULT_STATE_BUDGET


@dataclass(frozen=True)
class CostFunction:
    log: float = 1
    model: float = 1
    silent: float = 0
    sync: float = 0

    def __post_init__(self) -> None:
        if min(self.log, self.model, self.silent, self.sync) < 0:
            raise ValidationError("move costs must be non-negative")
        if self.sync > min(self.log, self.model) or self.silent > self.model:
            raise ValidationError("synchronous and silent costs may not exceed visible move costs")

    def scaled(self, factor: float) -> CostFunction:
        return CostFunction(self.log * factor, self.model * factor, self.silent * factor, self.sync * factor)


@dataclass(frozen=True)
class Move:
    """One alignment step. ``label`` is the activity (log/synchronous) or the
    transition label (model; None for silent transitions)."""

    kind: str
    label: str | None
    transition: str | None
    cost: float

    @property
    def is_deviation(self) -> bool:
        return self.kind == LOG or (self.kind == MODEL and self.label is not None)

    def __str__(self) -> str:
        shown = self.label if self.label is not None else f"tau[{self.transition}]"
        return f"{self.kind}({shown})"


@dataclass(frozen=True)
class Alignment:
    moves: tuple[Move, ...]
    cost: float
    optimal: bool = True

    @property
    def log_projection(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.moves if m.kind in (SYNC, LOG))  # type: ignore[misc]

    @property
    def model_projection(self) -> tuple[str, ...]:
        """Transition ids fired by the model side."""
        return tuple(m.transition for m in self.moves if m.kind in (SYNC, MODEL))  # type: ignore[misc]

    @property
    def deviations(self) -> tuple[Move, ...]:
        return tuple(m for m in self.moves if m.is_deviation)

    def counts(self) -> dict[str, int]:
        out = {SYNC: 0, LOG: 0, MODEL: 0}
        for m in self.moves:
            out[m.kind] += 1
        return out


def _lower_bounds(net: PetriNet, word: tuple[str, ...], cost: CostFunction) -> list[float]:
    """Suffix lower bounds: each remaining event costs a log move unless some
    visible transition could match it synchronously."""
    labels = net.visible_labels
    cheap = min(cost.sync, cost.log)
    h = [0.0] * (len(word) + 1)
    for i in range(len(word) - 1, -1, -1):
        h[i] = h[i + 1] + (cheap if word[i] in labels else cost.log)
    return h


def align_trace(
    net: PetriNet,
    trace: Trace | Sequence[str],
    cost: CostFunction | None = None,
    budget: int | None = None,
) -> Alignment:
    """Minimum-cost alignment by A* over (marking, trace position).

    Ties are broken by comparing move sequences lexicographically, moves ranked
    synchronous < model < log and then by transition id, so the chosen optimal
    alignment does not depend on exploration details.
    """
    cost = cost or CostFunction()
    budget = default_budget() if budget is None else budget
    word = as_activities(trace)
    n = len(word)
    h = _lower_bounds(net, word, cost)
    by_label: dict[str, list[str]] = {}
    for t in net.transitions:
        if t.label is not None:
            by_label.setdefault(t.label, []).append(t.id)

    start = (net.initial_marking, 0)
    tick = itertools.count()
    # (f, g, path key, tiebreak, state, moves)
    heap: list = [(h[0], 0, (), next(tick), start, ())]
    closed: set[tuple[Marking, int]] = set()
    while heap:
        f, g, key, _, state, moves = heapq.heappop(heap)
        if state in closed:
            continue
        closed.add(state)
        if len(closed) > budget:
            raise ResourceError(budget, "alignment search")
        marking, i = state
        if i == n and marking == net.final_marking:
            return Alignment(tuple(moves), g, True)
        active = enabled(net, marking)
        successors = []
        if i < n:
            for tid in by_label.get(word[i], ()):
                if tid in active:
                    successors.append(((0, tid), Move(SYNC, word[i], tid, cost.sync), (fire(net, marking, tid), i + 1)))
        for tid in sorted(active):
            label = net.transition(tid).label
            c = cost.silent if label is None else cost.model
            successors.append(((1, tid), Move(MODEL, label, tid, c), (fire(net, marking, tid), i)))
        if i < n:
            successors.append(((2, ""), Move(LOG, word[i], None, cost.log), (marking, i + 1)))
        for rank, move, nxt in successors:
            if nxt in closed:
                continue
            g2 = g + move.cost
            heapq.heappush(heap, (g2 + h[nxt[1]], g2, key + (rank,), next(tick), nxt, moves + (move,)))
    raise ModelError("final marking is unreachable from the initial marking; no alignment exists")


def oracle_align(
    net: PetriNet,
    trace: Trace | Sequence[str],
    cost: CostFunction | None = None,
    bound: int = ORACLE_STATE_BOUND,
) -> Alignment:
    """Exhaustive uniform-cost search over the product, without heuristic.

    Deliberately written apart from :func:`align_trace` so it can serve as an
    independent check; only the tie-breaking order is shared by definition.
    """
    cost = cost or CostFunction()
    word = as_activities(trace)
    best: dict[tuple[Marking, int], tuple] = {}
    frontier: list = [((0, ()), (net.initial_marking, 0), ())]
    settled: set = set()
    while frontier:
        (g, key), state, moves = heapq.heappop(frontier)
        if state in settled:
            continue
        settled.add(state)
        if len(settled) > bound:
            raise ResourceError(bound, "oracle alignment search")
        marking, i = state
        if i == len(word) and marking == net.final_marking:
            return Alignment(moves, g, True)
        options = []
        for t in net.transitions:
            if any(marking[p] < 1 for p in net.preset(t.id)):
                continue
            after = marking.remove(net.preset(t.id)).add(net.postset(t.id))
            if i < len(word) and t.label == word[i]:
                options.append(((0, t.id), cost.sync, Move(SYNC, word[i], t.id, cost.sync), (after, i + 1)))
            step = cost.silent if t.label is None else cost.model
            options.append(((1, t.id), step, Move(MODEL, t.label, t.id, step), (after, i)))
        if i < len(word):
            options.append(((2, ""), cost.log, Move(LOG, word[i], None, cost.log), (marking, i + 1)))
        for rank, step, move, nxt in options:
            if nxt in settled:
                continue
            cand = (g + step, key + (rank,))
            if nxt in best and best[nxt] <= cand:
                continue
            best[nxt] = cand
            heapq.heappush(frontier, (cand, nxt, moves + (move,)))
    raise ModelError("final marking is unreachable from the initial marking; no alignment exists")


def worst_case_cost(net: PetriNet, trace: Trace | Sequence[str], cost: CostFunction | None = None, budget: int | None = None) -> float:
    """Log moves for every event plus the cheapest model-only run."""
    cost = cost or CostFunction()
    word = as_activities(trace)
    return cost.log * len(word) + align_trace(net, (), cost, budget).cost


def alignment_fitness(alignment: Alignment, worst: float) -> float:
    if worst < 0:
        raise ArgumentError("worst-case cost must be non-negative")
    if worst == 0:
        if alignment.cost != 0:
            raise ArgumentError("worst-case cost is 0 but the alignment has a positive cost")
        return 1.0
    if alignment.cost > worst:
        raise ArgumentError(f"alignment cost {alignment.cost} exceeds the worst-case cost {worst}")
    return 1.0 - alignment.cost / worst


@dataclass(frozen=True)
class AlignLogResult:
    alignments: dict[tuple[str, ...], Alignment]
    variant_fitness: dict[tuple[str, ...], float]
    trace_fitness: dict[str, float]
    log_fitness: float

    def alignment_for(self, trace: Trace) -> Alignment:
        return self.alignments[trace.activities]


def align_log(net: PetriNet, log: EventLog, cost: CostFunction | None = None, budget: int | None = None) -> AlignLogResult:
    if len(log) == 0:
        raise ArgumentError("cannot align an empty log")
    cost = cost or CostFunction()
    model_only = align_trace(net, (), cost, budget).cost
    alignments: dict[tuple[str, ...], Alignment] = {}
    fitness: dict[tuple[str, ...], float] = {}
    per_trace: dict[str, float] = {}
    weighted = 0.0
    total = 0
    for v in variants(log):
        alignment = align_trace(net, v.sequence, cost, budget)
        alignments[v.sequence] = alignment
        fitness[v.sequence] = alignment_fitness(alignment, cost.log * len(v.sequence) + model_only)
        weighted += v.frequency * fitness[v.sequence]
        total += v.frequency
        for case in v.member_cases:
            per_trace[case] = fitness[v.sequence]
    return AlignLogResult(alignments, fitness, per_trace, weighted / total)


def trace_alignment_fitness(net: PetriNet, trace: Trace | Sequence[str], cost: CostFunction | None = None) -> float:
    alignment = align_trace(net, trace, cost)
    return alignment_fitness(alignment, worst_case_cost(net, trace, cost))
