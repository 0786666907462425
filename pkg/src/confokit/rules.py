"""Declarative rules derived from a net, rule checking and rule-based fitness."""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from itertools import permutations

from confokit.errors import ArgumentError, DerivationError, ValidationError
from confokit.event_log import EventLog, Trace, _OPS, as_activities, variants
from confokit.petri import PetriNet, enumerate_language

PERSPECTIVES = ("control-flow", "data", "resource", "time")
CARDINALITY = "cardinality"
RESPONSE = "response"
PRECEDENCE = "precedence"
EXCLUSIVENESS = "exclusiveness"
ATTRIBUTE = "attribute"
KINDS = (CARDINALITY, RESPONSE, PRECEDENCE, EXCLUSIVENESS, ATTRIBUTE)
_PARAM_COUNT = {CARDINALITY: 3, RESPONSE: 2, PRECEDENCE: 2, EXCLUSIVENESS: 2, ATTRIBUTE: 4}

DERIVED = "derived-from-model"
USER = "user-supplied"


@dataclass(frozen=True)
class Rule:
    """A prescribed constraint.

    ``params`` by kind: cardinality ``(activity, min, max)``; response,
    precedence and exclusiveness ``(a, b)``; attribute
    ``(activity, attribute, op, value)`` which requires every execution of
    ``activity`` to carry ``attribute`` satisfying ``op value``.
    """

    kind: str
    params: tuple
    perspective: frozenset[str] = frozenset({"control-flow"})
    source: str = DERIVED

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "perspective", frozenset(self.perspective))
        if self.kind not in KINDS:
            raise ValidationError(f"unknown rule kind {self.kind!r}")
        if len(self.params) != _PARAM_COUNT[self.kind]:
            raise ValidationError(f"{self.kind} rule takes {_PARAM_COUNT[self.kind]} parameters")
        if not self.perspective or not self.perspective <= set(PERSPECTIVES):
            raise ValidationError(f"rule perspective must be a non-empty subset of {PERSPECTIVES}")
        if self.source not in (DERIVED, USER):
            raise ValidationError(f"unknown rule source {self.source!r}")
        if self.kind == CARDINALITY:
            _, lo, hi = self.params
            if not 0 <= lo <= hi:
                raise ValidationError(f"cardinality bounds must satisfy 0 <= min <= max, got {lo}, {hi}")
        elif self.kind == ATTRIBUTE:
            if self.params[2] not in _OPS:
                raise ValidationError(f"unknown comparison {self.params[2]!r}")
        elif self.params[0] == self.params[1]:
            raise ValidationError(f"{self.kind} rule needs two distinct activities")

    @classmethod
    def cardinality(cls, activity: str, lo: int, hi: int, **kw) -> Rule:
        return cls(CARDINALITY, (activity, lo, hi), **kw)

    @classmethod
    def response(cls, a: str, b: str, **kw) -> Rule:
        return cls(RESPONSE, (a, b), **kw)

    @classmethod
    def precedence(cls, a: str, b: str, **kw) -> Rule:
        return cls(PRECEDENCE, (a, b), **kw)

    @classmethod
    def exclusiveness(cls, a: str, b: str, **kw) -> Rule:
        return cls(EXCLUSIVENESS, (a, b), **kw)

    @classmethod
    def attribute(cls, activity: str, name: str, op: str, value, perspective=frozenset({"data"})) -> Rule:
        return cls(ATTRIBUTE, (activity, name, op, value), frozenset(perspective), USER)

    def __str__(self) -> str:
        if self.kind == ATTRIBUTE:
            activity, name, op, value = self.params
            return f"attribute({activity}.{name} {op} {value!r})"
        return f"{self.kind}({', '.join(str(p) for p in self.params)})"


@dataclass(frozen=True)
class Violation:
    rule: Rule
    case_id: str
    evidence: tuple[int, ...]
    description: str


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        if len(set(self.rules)) != len(self.rules):
            raise ValidationError("rule set contains duplicate rules")

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __contains__(self, rule: object) -> bool:
        return rule in self.rules


# --------------------------------------------------------------------------- derivation


def derive_rules(net: PetriNet, max_length: int = 10, max_visits: int = 2) -> RuleSet:
    """Cardinality, response, precedence and exclusiveness rules over the bounded model language."""
    language = enumerate_language(net, max_length, max_visits)
    if language.truncated:
        raise DerivationError(
            f"model language was truncated at bounds (max_length={max_length}, max_visits={max_visits}); "
            "derive again with larger bounds"
        )
    words = sorted(language.sequences)
    labels = sorted(net.visible_labels)
    rules: list[Rule] = []
    for x in labels:
        counts = [w.count(x) for w in words] or [0]
        rules.append(Rule.cardinality(x, min(counts), max(counts)))
    occurring = [x for x in labels if any(x in w for w in words)]
    for a, b in permutations(occurring, 2):
        if all(_response_holds(w, a, b) for w in words):
            rules.append(Rule.response(a, b))
    for a, b in permutations(occurring, 2):
        if all(_precedence_holds(w, a, b) for w in words):
            rules.append(Rule.precedence(a, b))
    for i, a in enumerate(occurring):
        for b in occurring[i + 1 :]:
            if not any(a in w and b in w for w in words):
                rules.append(Rule.exclusiveness(a, b))
    return RuleSet(tuple(rules))


def _response_holds(word: Sequence[str], a: str, b: str) -> bool:
    return not _response_offenders(word, a, b)


def _precedence_holds(word: Sequence[str], a: str, b: str) -> bool:
    return not _precedence_offenders(word, a, b)


def _response_offenders(word: Sequence[str], a: str, b: str) -> list[int]:
    offenders = []
    pending: list[int] = []
    for i, x in enumerate(word):
        if x == b:
            pending.clear()
        if x == a:
            pending.append(i)
    offenders.extend(pending)
    return offenders


def _precedence_offenders(word: Sequence[str], a: str, b: str) -> list[int]:
    seen_a = False
    offenders = []
    for i, x in enumerate(word):
        if x == b and not seen_a:
            offenders.append(i)
        if x == a:
            seen_a = True
    return offenders


# --------------------------------------------------------------------------- checking


def _check(rule: Rule, trace: Trace | Sequence[str]) -> tuple[int, ...] | None:
    """Offending positions when ``rule`` is violated, else None."""
    word = as_activities(trace)
    kind, params = rule.kind, rule.params
    if kind == CARDINALITY:
        x, lo, hi = params
        positions = tuple(i for i, y in enumerate(word) if y == x)
        return positions if not lo <= len(positions) <= hi else None
    if kind == RESPONSE:
        bad = _response_offenders(word, *params)
        return tuple(bad) if bad else None
    if kind == PRECEDENCE:
        bad = _precedence_offenders(word, *params)
        return tuple(bad) if bad else None
    if kind == EXCLUSIVENESS:
        a, b = params
        if a in word and b in word:
            return tuple(i for i, y in enumerate(word) if y in (a, b))
        return None
    activity, name, op, value = params
    if not isinstance(trace, Trace):
        raise ArgumentError("attribute rules need traces with events, not plain label sequences")
    compare = _OPS[op]
    bad = []
    for i, event in enumerate(trace.events):
        if event.activity != activity:
            continue
        actual = event.attributes.get(name, trace.attributes.get(name))
        try:
            ok = actual is not None and compare(actual, value)
        except TypeError:
            ok = False
        if not ok:
            bad.append(i)
    return tuple(bad) if bad else None


def _describe(rule: Rule, evidence: tuple[int, ...]) -> str:
    p = rule.params
    if rule.kind == CARDINALITY:
        return f"{p[0]} executed {len(evidence)} times, expected between {p[1]} and {p[2]}"
    if rule.kind == RESPONSE:
        return f"{p[0]} at {list(evidence)} not followed by {p[1]}"
    if rule.kind == PRECEDENCE:
        return f"{p[1]} at {list(evidence)} not preceded by {p[0]}"
    if rule.kind == EXCLUSIVENESS:
        return f"both {p[0]} and {p[1]} executed"
    return f"{p[0]} at {list(evidence)} fails {p[1]} {p[2]} {p[3]!r}"


def check_trace(trace: Trace | Sequence[str], rules: RuleSet | Iterable[Rule], case_id: str | None = None) -> list[Violation]:
    if case_id is None:
        case_id = trace.case_id if isinstance(trace, Trace) else ""
    out = []
    for rule in rules:
        evidence = _check(rule, trace)
        if evidence is not None:
            out.append(Violation(rule, case_id, evidence, _describe(rule, evidence)))
    return out


@dataclass(frozen=True)
class RuleFitness:
    trace_fitness: dict[str, float]
    log_fitness: float
    violations: dict[str, list[Violation]] = field(default_factory=dict)


def trace_rule_fitness(violated: int, total: int) -> float:
    return 1.0 - violated / total


def rule_fitness(log: EventLog, rules: RuleSet) -> RuleFitness:
    if len(rules) == 0:
        raise ArgumentError("rule fitness needs a non-empty rule set")
    if len(log) == 0:
        raise ArgumentError("rule fitness needs a non-empty log")
    violations = {t.case_id: check_trace(t, rules) for t in log.traces}
    per_trace = {case: trace_rule_fitness(len(v), len(rules)) for case, v in violations.items()}
    total = sum(v.frequency for v in variants(log))
    weighted = sum(v.frequency * per_trace[v.member_cases[0]] for v in variants(log))
    if rules_need_events(rules):
        # attribute rules can split a variant; fall back to the per-trace mean
        weighted = sum(per_trace.values())
    return RuleFitness(per_trace, weighted / total, violations)


def rules_need_events(rules: Iterable[Rule]) -> bool:
    return any(r.kind == ATTRIBUTE for r in rules)


# --------------------------------------------------------------------------- serialization


def _jsonable_value(value):
    from datetime import datetime

    if isinstance(value, datetime):
        return {"instant": value.isoformat()}
    return value


def _from_json_value(value):
    if isinstance(value, dict) and "instant" in value:
        from confokit.event_log import parse_instant

        return parse_instant(value["instant"])
    return value


def ruleset_to_json(rules: RuleSet) -> str:
    doc = [
        {
            "kind": r.kind,
            "params": [_jsonable_value(p) for p in r.params],
            "perspective": sorted(r.perspective),
            "source": r.source,
        }
        for r in rules
    ]
    return json.dumps(doc, indent=2) + "\n"


def ruleset_from_json(text: str | bytes) -> RuleSet:
    try:
        doc = json.loads(text)
        return RuleSet(
            tuple(
                Rule(
                    d["kind"],
                    tuple(_from_json_value(p) for p in d["params"]),
                    frozenset(d.get("perspective", ["control-flow"])),
                    d.get("source", USER),
                )
                for d in doc
            )
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"malformed rule set document: {exc}") from None
