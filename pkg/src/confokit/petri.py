"""Workflow nets: parsing, token game and bounded language enumeration."""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import IO

from confokit.errors import ExecutionError, ParseError, ValidationError


class Marking(Mapping[str, int]):
    """Immutable, hashable multiset of tokens over places. Zero counts are dropped."""

    __slots__ = ("_items", "_hash")

    def __init__(self, tokens: Mapping[str, int] | Iterable[tuple[str, int]] = ()) -> None:
        pairs = tokens.items() if isinstance(tokens, Mapping) else tokens
        counts: dict[str, int] = {}
        for place, n in pairs:
            if n < 0:
                raise ValueError(f"negative token count {n} for place {place!r}")
            if n:
                counts[place] = counts.get(place, 0) + n
        self._items = tuple(sorted(counts.items()))
        self._hash = hash(self._items)

    def __getitem__(self, place: str) -> int:
        for p, n in self._items:
            if p == place:
                return n
        return 0

    def get(self, place: str, default: int = 0) -> int:  # type: ignore[override]
        n = self[place]
        return n if n else default

    def __contains__(self, place: object) -> bool:
        return any(p == place for p, _ in self._items)

    def __iter__(self) -> Iterator[str]:
        return (p for p, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Marking):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self == Marking(other)
        return NotImplemented

    def __lt__(self, other: Marking) -> bool:
        return self._items < other._items

    def __repr__(self) -> str:
        return "Marking({" + ", ".join(f"{p!r}: {n}" for p, n in self._items) + "})"

    @property
    def total(self) -> int:
        return sum(n for _, n in self._items)

    def add(self, places: Iterable[str]) -> Marking:
        counts = dict(self._items)
        for p in places:
            counts[p] = counts.get(p, 0) + 1
        return Marking(counts)

    def remove(self, places: Iterable[str]) -> Marking:
        counts = dict(self._items)
        for p in places:
            counts[p] = counts.get(p, 0) - 1
        return Marking(counts)

    def covers(self, other: Mapping[str, int]) -> bool:
        return all(self[p] >= n for p, n in other.items())


@dataclass(frozen=True)
class Transition:
    id: str
    label: str | None = None

    @property
    def silent(self) -> bool:
        return self.label is None


@dataclass(frozen=True)
class PetriNet:
    places: tuple[str, ...]
    transitions: tuple[Transition, ...]
    arcs: frozenset[tuple[str, str]]
    initial_marking: Marking
    final_marking: Marking
    _pre: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    _post: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    _by_id: Mapping[str, Transition] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "places", tuple(sorted(set(self.places))))
        object.__setattr__(self, "transitions", tuple(sorted(self.transitions, key=lambda t: t.id)))
        object.__setattr__(self, "arcs", frozenset(self.arcs))
        object.__setattr__(self, "initial_marking", Marking(self.initial_marking))
        object.__setattr__(self, "final_marking", Marking(self.final_marking))
        problems = validate_structure(self)
        if problems:
            raise ValidationError("invalid Petri net: " + "; ".join(problems), problems)
        pre: dict[str, list[str]] = {t.id: [] for t in self.transitions}
        post: dict[str, list[str]] = {t.id: [] for t in self.transitions}
        place_set = set(self.places)
        for src, dst in sorted(self.arcs):
            if src in place_set:
                pre[dst].append(src)
            else:
                post[src].append(dst)
        object.__setattr__(self, "_pre", {k: tuple(v) for k, v in pre.items()})
        object.__setattr__(self, "_post", {k: tuple(v) for k, v in post.items()})
        object.__setattr__(self, "_by_id", {t.id: t for t in self.transitions})

    def preset(self, transition: str) -> tuple[str, ...]:
        return self._pre[transition]

    def postset(self, transition: str) -> tuple[str, ...]:
        return self._post[transition]

    def transition(self, transition_id: str) -> Transition:
        return self._by_id[transition_id]

    def producers(self, place: str) -> tuple[str, ...]:
        """Ids of transitions with an output arc into ``place``."""
        return tuple(t.id for t in self.transitions if place in self._post[t.id])

    @property
    def visible_labels(self) -> frozenset[str]:
        return frozenset(t.label for t in self.transitions if t.label is not None)

    @property
    def silent_transitions(self) -> tuple[Transition, ...]:
        return tuple(t for t in self.transitions if t.silent)

    def transitions_labelled(self, label: str) -> tuple[Transition, ...]:
        return tuple(t for t in self.transitions if t.label == label)


def validate_structure(net: PetriNet) -> list[str]:
    problems = []
    places = set(net.places)
    ids = [t.id for t in net.transitions]
    trans = set(ids)
    if len(ids) != len(trans):
        problems.append("duplicate transition identifiers")
    overlap = places & trans
    if overlap:
        problems.append(f"identifiers used for both places and transitions: {', '.join(sorted(overlap))}")
    for src, dst in sorted(net.arcs):
        for ident in (src, dst):
            if ident not in places and ident not in trans:
                problems.append(f"arc {src}->{dst} references undeclared identifier {ident}")
        if src in places and dst in places:
            problems.append(f"arc {src}->{dst} connects two places")
        if src in trans and dst in trans:
            problems.append(f"arc {src}->{dst} connects two transitions")
    for name, marking in (("initial", net.initial_marking), ("final", net.final_marking)):
        for place in marking:
            if place not in places:
                problems.append(f"{name} marking references undeclared place {place}")
    return problems


# --------------------------------------------------------------------------- file format


def parse_model(source: bytes | str | IO) -> PetriNet:
    """Load a net from the JSON model format (places, transitions, arcs, initial, final)."""
    if not isinstance(source, (bytes, str)):
        source = source.read()
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model is not valid JSON: {exc}", offset=exc.pos) from None
    if not isinstance(doc, dict):
        raise ValidationError("model document must be a JSON object")
    for key in ("initial", "final"):
        if key not in doc or not isinstance(doc[key], dict):
            raise ValidationError(f"model lacks the {key} marking", [key])
    try:
        transitions = tuple(Transition(str(t["id"]), t.get("label")) for t in doc.get("transitions", []))
        arcs = frozenset((str(a["from"]), str(a["to"])) for a in doc.get("arcs", []))
        return PetriNet(
            places=tuple(str(p) for p in doc.get("places", [])),
            transitions=transitions,
            arcs=arcs,
            initial_marking=Marking({str(k): int(v) for k, v in doc["initial"].items()}),
            final_marking=Marking({str(k): int(v) for k, v in doc["final"].items()}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed model document: {exc}") from None


def model_to_json(net: PetriNet) -> str:
    doc = {
        "places": list(net.places),
        "transitions": [{"id": t.id, "label": t.label} if t.label is not None else {"id": t.id} for t in net.transitions],
        "arcs": [{"from": s, "to": d} for s, d in sorted(net.arcs)],
        "initial": dict(net.initial_marking.items()),
        "final": dict(net.final_marking.items()),
    }
    return json.dumps(doc, indent=2) + "\n"


# --------------------------------------------------------------------------- token game


def enabled(net: PetriNet, marking: Mapping[str, int]) -> frozenset[str]:
    return frozenset(
        t.id for t in net.transitions if all(marking.get(p, 0) >= 1 for p in net.preset(t.id))
    )


def fire(net: PetriNet, marking: Mapping[str, int], transition: str) -> Marking:
    marking = Marking(marking)
    lacking = [p for p in net.preset(transition) if marking[p] < 1]
    if lacking:
        raise ExecutionError(transition, lacking)
    return marking.remove(net.preset(transition)).add(net.postset(transition))


@dataclass(frozen=True)
class Language:
    sequences: frozenset[tuple[str, ...]]
    truncated: bool

    def __contains__(self, sequence: object) -> bool:
        return tuple(sequence) in self.sequences  # type: ignore[arg-type]

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return iter(sorted(self.sequences))

    def __len__(self) -> int:
        return len(self.sequences)


def enumerate_language(net: PetriNet, max_length: int = 10, max_visits: int = 2) -> Language:
    """Visible projections of firing sequences from the initial to the final marking.

    Depth-first over firing sequences. A path may visit the same marking at most
    ``max_visits`` times and carry at most ``max_length`` visible firings; when
    either bound cuts a branch the result is flagged as truncated.
    """
    if max_length < 1 or max_visits < 1:
        raise ValueError("bounds must be positive")
    found: set[tuple[str, ...]] = set()
    truncated = False
    # guards unbounded silent growth; generous for any bounded net
    max_firings = (max_length + 1) * max_visits * (len(net.transitions) + len(net.places) + 1)
    visits: dict[Marking, int] = {}

    stack: list[tuple[Marking, tuple[str, ...], int, Iterator[str] | None]] = []

    def push(marking: Marking, word: tuple[str, ...], depth: int) -> None:
        visits[marking] = visits.get(marking, 0) + 1
        if marking == net.final_marking:
            found.add(word)
        stack.append((marking, word, depth, iter(sorted(enabled(net, marking)))))

    push(net.initial_marking, (), 0)
    while stack:
        marking, word, depth, successors = stack[-1]
        tid = next(successors, None)  # type: ignore[arg-type]
        if tid is None:
            stack.pop()
            visits[marking] -= 1
            continue
        label = net.transition(tid).label
        new_word = word + (label,) if label is not None else word
        nxt = fire(net, marking, tid)
        if len(new_word) > max_length or depth + 1 > max_firings or visits.get(nxt, 0) >= max_visits:
            truncated = True
            continue
        push(nxt, new_word, depth + 1)
    return Language(frozenset(found), truncated)
