"""Random block-structured workflow nets and traces for property and acceptance tests."""

from __future__ import annotations

import random
from dataclasses import dataclass

from confokit.petri import Marking, PetriNet, Transition, enumerate_language

LABELS = "abcdefgh"


@dataclass
class _Builder:
    rng: random.Random
    places: list[str]
    transitions: list[Transition]
    arcs: set[tuple[str, str]]
    labels: list[str]

    def place(self) -> str:
        p = f"p{len(self.places)}"
        self.places.append(p)
        return p

    def transition(self, label: str | None) -> str:
        t = f"t{len(self.transitions)}"
        self.transitions.append(Transition(t, label))
        return t

    def connect(self, t: str, inputs: list[str], outputs: list[str]) -> None:
        for p in inputs:
            self.arcs.add((p, t))
        for p in outputs:
            self.arcs.add((t, p))

    def activity(self, entry: str, exit_: str) -> None:
        label = self.labels.pop() if self.labels else None
        self.connect(self.transition(label), [entry], [exit_])

    def node(self, entry: str, exit_: str, depth: int) -> None:
        r = self.rng.random()
        if depth >= 3 or r < 0.35:
            if self.rng.random() < 0.12:
                self.connect(self.transition(None), [entry], [exit_])
            else:
                self.activity(entry, exit_)
        elif r < 0.6:
            n = self.rng.randint(2, 3)
            points = [entry] + [self.place() for _ in range(n - 1)] + [exit_]
            for a, b in zip(points, points[1:]):
                self.node(a, b, depth + 1)
        elif r < 0.78:
            for _ in range(self.rng.randint(2, 3)):
                self.node(entry, exit_, depth + 1)
        elif r < 0.93:
            split, join = self.transition(None), self.transition(None)
            branch_in, branch_out = [], []
            for _ in range(2):
                a, b = self.place(), self.place()
                branch_in.append(a)
                branch_out.append(b)
                self.node(a, b, depth + 1)
            self.connect(split, [entry], branch_in)
            self.connect(join, branch_out, [exit_])
        else:
            mid = self.place()
            self.node(entry, mid, depth + 1)
            self.connect(self.transition(None), [mid], [entry])  # redo
            self.connect(self.transition(None), [mid], [exit_])


def random_net(rng: random.Random, max_transitions: int = 8) -> PetriNet:
    """Sound, safe workflow net with unique visible labels and at most ``max_transitions`` transitions."""
    while True:
        labels = list(LABELS)
        rng.shuffle(labels)
        b = _Builder(rng, [], [], set(), labels)
        source, sink = b.place(), b.place()
        b.node(source, sink, 0)
        if 1 <= len(b.transitions) <= max_transitions:
            return PetriNet(tuple(b.places), tuple(b.transitions), frozenset(b.arcs), Marking({source: 1}), Marking({sink: 1}))


def membership_language(net: PetriNet, max_length: int = 10):
    """Bounded language large enough to decide membership of traces up to ``max_length``."""
    return enumerate_language(net, max_length, max_length + 2)


def random_traces(rng: random.Random, net: PetriNet, language, count: int, max_length: int = 10) -> list[tuple[str, ...]]:
    """Mix of model runs, perturbed model runs and random words (including an unknown label)."""
    alphabet = sorted(net.visible_labels) + ["x"]
    runs = sorted(language.sequences)
    out = []
    for _ in range(count):
        r = rng.random()
        if runs and r < 0.35:
            word = list(rng.choice(runs))
        elif runs and r < 0.75:
            word = list(rng.choice(runs))
            for _ in range(rng.randint(1, 2)):
                op = rng.random()
                if op < 0.4 and word:
                    del word[rng.randrange(len(word))]
                elif op < 0.8:
                    word.insert(rng.randint(0, len(word)), rng.choice(alphabet))
                elif len(word) >= 2:
                    i = rng.randrange(len(word) - 1)
                    word[i], word[i + 1] = word[i + 1], word[i]
        else:
            word = [rng.choice(alphabet) for _ in range(rng.randint(0, max_length))]
        out.append(tuple(word[:max_length]))
    return out
