from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confokit import fixtures

from confokit.errors import ArgumentError, DerivationError, ValidationError
from confokit.event_log import log_from_sequences
from confokit.petri import enumerate_language, parse_model
from confokit.rules import (
    Rule,
    RuleSet,
    check_trace,
    derive_rules,
    rule_fitness,
    ruleset_from_json,
    ruleset_to_json,
)


def test_derived_rules_hold_on_model_runs(net1):
    rules = derive_rules(net1)
    for run in enumerate_language(net1).sequences:
        assert check_trace(run, rules) == []


def test_id7_violations(net1, id7):
    names = {str(v.rule) for v in check_trace(id7, derive_rules(net1))}
    assert {"cardinality(D, 1, 1)", "response(A, D)"} <= names


def test_derived_content(net1):
    rules = {str(r) for r in derive_rules(net1)}
    assert "exclusiveness(E, F)" in rules
    assert "precedence(A, B)" in rules
    assert "cardinality(E, 0, 1)" in rules
    assert "response(B, C)" not in rules


def test_truncated_language_refused():
    loop = parse_model('{"places":["i","o"],"transitions":[{"id":"a","label":"a"},{"id":"b","label":"b"}],'
                       '"arcs":[{"from":"i","to":"a"},{"from":"a","to":"o"},{"from":"o","to":"b"},{"from":"b","to":"i"}],'
                       '"initial":{"i":1},"final":{"o":1}}')
    with pytest.raises(DerivationError):
        derive_rules(loop, max_length=4)


def test_rule_semantics():
    assert check_trace(("A", "B", "A"), [Rule.response("A", "B")])[0].evidence == (2,)
    assert check_trace(("B", "A"), [Rule.precedence("A", "B")])[0].evidence == (0,)
    assert check_trace(("A", "C", "B"), [Rule.exclusiveness("A", "B")])
    assert not check_trace(("A", "A"), [Rule.cardinality("A", 1, 2)])
    assert check_trace(("A", "A", "A"), [Rule.cardinality("A", 1, 2)])


def test_attribute_rule():
    from datetime import datetime, timezone

    from confokit.event_log import Event, Trace

    t0 = datetime(2024, 1, 1, tzinfo=timezone.utc)
    trace = Trace("c", (Event("c", "A", t0, {"cost": 5}), Event("c", "B", t0, {"cost": 50})))
    rule = Rule.attribute("B", "cost", "<=", 10)
    assert rule.source == "user-supplied" and "data" in rule.perspective
    assert [v.evidence for v in check_trace(trace, [rule])] == [(1,)]


def test_invalid_rules():
    with pytest.raises(ValidationError):
        Rule.cardinality("A", 2, 1)
    with pytest.raises(ValidationError):
        Rule("nonsense", ("A",))
    with pytest.raises(ValidationError):
        RuleSet((Rule.response("A", "B"), Rule.response("A", "B")))


def test_rule_fitness(net1, table1):
    rules = derive_rules(net1)
    fit = rule_fitness(table1, rules)
    assert fit.trace_fitness["id-4"] == 1.0
    violated = len(check_trace(table1.trace("id-7"), rules))
    assert fit.trace_fitness["id-7"] == pytest.approx(1 - violated / len(rules))
    assert fit.log_fitness == pytest.approx((1 + fit.trace_fitness["id-7"]) / 2)


def test_rule_fitness_needs_rules():
    with pytest.raises(ArgumentError):
        rule_fitness(log_from_sequences([("A",)]), RuleSet(()))


def test_json_round_trip(net1):
    rules = RuleSet(derive_rules(net1).rules + (Rule.attribute("D", "cost", ">", 1.5),))
    assert ruleset_from_json(ruleset_to_json(rules)) == rules


def test_derived_rules_are_sound_on_random_acyclic_nets():
    import random

    from randnets import membership_language, random_net

    rng = random.Random(11)
    checked = 0
    while checked < 60:
        net = random_net(rng)
        try:
            rules = derive_rules(net)
        except DerivationError:
            continue
        checked += 1
        for run in membership_language(net).sequences:
            assert check_trace(run, rules) == []


def test_rules_over_accept_a_non_run(net1):
    # no template says "E or F must occur", so the truncated run passes every derived rule
    assert ("A", "B", "C", "D") not in enumerate_language(net1).sequences
    assert check_trace(("A", "B", "C", "D"), derive_rules(net1)) == []


def test_exclusiveness_evidence(net1):
    (v,) = [v for v in check_trace(("A", "B", "C", "D", "E", "F"), derive_rules(net1)) if v.rule.kind == "exclusiveness"]
    assert str(v.rule) == "exclusiveness(E, F)" and v.evidence == (4, 5)


def test_single_run_net():
    net = parse_model('{"places":["i","o"],"transitions":[{"id":"t","label":"a"}],'
                      '"arcs":[{"from":"i","to":"t"},{"from":"t","to":"o"}],"initial":{"i":1},"final":{"o":1}}')
    assert [str(r) for r in derive_rules(net)] == ["cardinality(a, 1, 1)"]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from("ABCDEFX"), max_size=8))
def test_appending_unknown_activity_never_raises_fitness(word):
    rules = derive_rules(fixtures.net1())
    before = {v.rule for v in check_trace(word, rules)}
    after = {v.rule for v in check_trace(word + ["X"], rules)}
    assert before <= after


def test_appending_a_model_activity_can_raise_fitness(net1):
    # B violates response(B, D) yet fulfils response(A, B) and cardinality(B, 1, 1)
    rules = derive_rules(net1)
    assert len(check_trace(("A", "B"), rules)) < len(check_trace(("A",), rules))
