"""Acceptance criteria 1-10; each prints one PASS/FAIL line in the terminal summary."""

from __future__ import annotations

import os
import random
from functools import lru_cache
from pathlib import Path

import pytest

from confokit import fixtures
from confokit.alignment import MODEL, SYNC, align_log, align_trace, alignment_fitness, oracle_align, worst_case_cost
from confokit.depmine import build_session_log, discover_dfg
from confokit.errors import DerivationError
from confokit.petri import enumerate_language, fire
from confokit.replay import replay_fitness, replay_trace
from confokit.rules import check_trace, derive_rules, rule_fitness
from confokit.taxonomy import (
    DIMENSIONS,
    CatalogEntry,
    TaskCatalog,
    TaskDescriptor,
    catalog_stats,
    load_catalog,
    load_sessions,
    sankey_links,
    validate_descriptor,
)
from confokit.event_log import log_from_sequences
from confokit.trees import grow_tree
from goldens import ARTIFACTS, check
from randnets import membership_language, random_net, random_traces

RESULTS: dict[str, str] = {}
NETS, TRACES_PER_NET, SEED = 100, 5, 20240101


def record(number: int | str, ok: bool, detail: str) -> None:
    RESULTS[str(number)] = f"criterion {str(number):>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, detail


@lru_cache(maxsize=1)
def instances():
    """500 (net, language, trace) triples: nets with <= 8 transitions, traces of length <= 10."""
    rng = random.Random(SEED)
    out = []
    for _ in range(NETS):
        net = random_net(rng, max_transitions=8)
        lang = membership_language(net, 10)
        for trace in random_traces(rng, net, lang, TRACES_PER_NET, max_length=10):
            out.append((net, lang, trace))
    return out


def test_criterion_1_worked_alignment():
    a = align_trace(fixtures.net1(), fixtures.table1().trace("id-7"))
    kinds = [(m.kind, m.label) for m in a.moves]
    model_moves = [k for k in kinds if k[0] == MODEL]
    syncs = [k for k in kinds if k[0] == SYNC]
    ok = model_moves == [(MODEL, "D")] and len(syncs) == 4 and len(kinds) == 5 and a.cost == 1
    record(1, ok, f"moves={kinds} cost={a.cost}")


def test_criterion_2_worked_replay():
    r = replay_trace(fixtures.net1(), fixtures.table1().trace("id-7"))
    p, c, m, rem = r.counters
    attributed = [t.activities for t in r.missing_detail]
    ok = m == 1 and attributed == [("D",)] and rem == p + m - c
    record(2, ok, f"p={p} c={c} m={m} r={rem} missing attributed to {attributed}")


def test_criterion_3_fitness_formulas():
    net, log = fixtures.net1(), fixtures.table1()
    id4, id7 = log.trace("id-4"), log.trace("id-7")
    rules = derive_rules(net)
    id4_values = (
        alignment_fitness(align_trace(net, id4), worst_case_cost(net, id4)),
        replay_fitness(replay_trace(net, id4)),
        rule_fitness(log, rules).trace_fitness["id-4"],
    )
    id7_fit = alignment_fitness(align_trace(net, id7), worst_case_cost(net, id7))
    log_fit = align_log(net, log).log_fitness
    ok = id4_values == (1.0, 1.0, 1.0) and abs(id7_fit - (1 - 1 / 9)) <= 1e-9 and abs(log_fit - 0.944444) <= 1e-6
    # 0.944444 is the 6-decimal rendering of 17/18; compare the exact value too
    ok = ok and abs(log_fit - 17 / 18) <= 1e-9
    record(3, ok, f"id-4 (align, replay, rules)={id4_values} id-7 align={id7_fit:.9f} log={log_fit:.9f}")


def test_criterion_4_rule_soundness():
    net = fixtures.net1()
    rules = derive_rules(net)
    runs = enumerate_language(net).sequences
    on_runs = sum(len(check_trace(run, rules)) for run in runs)
    violated = {str(v.rule) for v in check_trace(fixtures.table1().trace("id-7"), rules)}
    ok = len(runs) == 4 and on_runs == 0 and {"cardinality(D, 1, 1)", "response(A, D)"} <= violated
    record(4, ok, f"{len(rules)} rules, {len(runs)} runs, {on_runs} violations on runs; id-7 violates {sorted(violated)}")


def test_criterion_5_oracle_equivalence():
    cases = instances()
    equal = sum(1 for net, _, trace in cases if align_trace(net, trace).cost == oracle_align(net, trace).cost)
    ok = len(cases) >= 500 and equal == len(cases)
    record(5, ok, f"{equal}/{len(cases)} instances with equal cost")


def test_criterion_6_technique_agreement():
    cases = instances()
    agree = {"alignment": 0, "replay": 0, "rules": 0}
    underivable = over_accepted = wrongly_rejected = 0
    rule_sets: dict[int, object] = {}
    for net, lang, trace in cases:
        member = trace in lang.sequences
        a = align_trace(net, trace)
        agree["alignment"] += (alignment_fitness(a, worst_case_cost(net, trace)) == 1.0) == member
        agree["replay"] += (replay_fitness(replay_trace(net, trace)) == 1.0) == member
        key = id(net)
        if key not in rule_sets:
            try:
                rule_sets[key] = derive_rules(net)
            except DerivationError:
                rule_sets[key] = None
        rules = rule_sets[key]
        if rules is None:
            underivable += 1  # no finite rule set: the technique yields no fitness, counted as disagreement
        else:
            holds = len(check_trace(trace, rules)) == 0
            agree["rules"] += holds == member
            over_accepted += holds and not member
            wrongly_rejected += member and not holds
    n = len(cases)
    detail = ", ".join(f"{k} {v}/{n}" for k, v in agree.items()) + (
        f" (rules: underivable on {underivable}, accepted non-members {over_accepted}, rejected members {wrongly_rejected})"
    )
    record(6, len(cases) >= 500 and all(v == n for v in agree.values()), detail)


def test_criterion_7_taxonomy_fixtures():
    catalog = fixtures.top8_catalog()
    counts = [e.count for e in catalog.entries]
    stats = catalog_stats(catalog)
    accepted = all(validate_descriptor(e.descriptor) == [] for e in catalog.entries)
    rejects = [
        TaskDescriptor("summarize", "derive", "process conformance", "control-flow", "log", "single"),
        TaskDescriptor("describe", "guess", "process conformance", "control-flow", "log", "single"),
        TaskDescriptor("describe", "derive", "vibes", "control-flow", "log", "single"),
        TaskDescriptor("describe", "derive", "process conformance", "cost", "log", "single"),
        TaskDescriptor("describe", "derive", "process conformance", frozenset(), "log", "single"),
        TaskDescriptor("describe", "derive", "process conformance", "control-flow", "case", "single"),
        TaskDescriptor("describe", "derive", "process conformance", "control-flow", "log", "some"),
    ]
    rejected = all(validate_descriptor(d) for d in rejects)
    ok = counts == [14, 10, 10, 7, 7, 6, 4, 4] and stats["goal"]["describe"] == 32 and accepted and rejected
    record(7, ok, f"counts={counts} describe={stats['goal'].get('describe')} accepts all 8={accepted} rejects all={rejected}")


def _external(var: str) -> Path | None:
    value = os.environ.get(var)
    return Path(value) if value and Path(value).is_file() else None


def test_criterion_8a_replication_catalog():
    source = _external("CONFOKIT_REPLICATION_CATALOG")
    if source is None:
        RESULTS["8a"] = "criterion 8a: SKIP  external task dataset not supplied (CONFOKIT_REPLICATION_CATALOG)"
        pytest.skip("external task catalog not supplied")
    means = catalog_stats(load_catalog(source.read_bytes()))["means"]
    expected = {"identify": 21, "present": 20, "compare": 18, "derive": 17, "summarize": 13, "discover": 6, "annotate": 4, "explore": 1}
    ok = all(means.get(k) == v for k, v in expected.items())
    record("8a", ok, f"means marginal {means}")


def test_criterion_8b_replication_sessions():
    source = _external("CONFOKIT_REPLICATION_SESSIONS")
    if source is None:
        RESULTS["8b"] = "criterion 8b: SKIP  external session dataset not supplied (CONFOKIT_REPLICATION_SESSIONS)"
        pytest.skip("external analysis sessions not supplied")
    model = discover_dfg(build_session_log(load_sessions(source.read_bytes())))
    ok = (
        model.start_counts.get("describe") == 17
        and model.start_counts.get("explore") == 9
        and model.end_counts.get("explain") == 9
        and model.nodes.get("explain") == 14
    )
    record("8b", ok, f"starts={model.start_counts} ends={model.end_counts} explain={model.nodes.get('explain')}")


def test_criterion_9_determinism_goldens():
    mismatched = []
    for name in sorted(ARTIFACTS):
        rendered, golden = check(name)
        if rendered != golden:
            mismatched.append(name)
    record(9, not mismatched, f"{len(ARTIFACTS)} artifacts byte-identical to goldens" if not mismatched else f"mismatch: {mismatched}")


def _conservation(rng: random.Random) -> bool:
    net = random_net(rng)
    word = [rng.choice("abcdefghx") for _ in range(rng.randint(0, 10))]
    p, c, m, r = replay_trace(net, word).counters
    return r == p + m - c


def _projection(rng: random.Random) -> bool:
    net = random_net(rng)
    word = tuple(rng.choice("abcdefghx") for _ in range(rng.randint(0, 10)))
    a = align_trace(net, word)
    marking = net.initial_marking
    for tid in a.model_projection:
        marking = fire(net, marking, tid)
    return a.log_projection == word and marking == net.final_marking


def _marginals(rng: random.Random) -> bool:
    from confokit.taxonomy import VOCABULARY

    entries = []
    for _ in range(rng.randint(1, 10)):
        values = {d: rng.choice(VOCABULARY[d]) for d in DIMENSIONS if d != "constraint_type"}
        ct = frozenset(rng.sample(VOCABULARY["constraint_type"], rng.randint(1, 4)))
        entries.append(CatalogEntry(TaskDescriptor(constraint_type=ct, **values), rng.randint(1, 20)))
    catalog = TaskCatalog(tuple(entries))
    stats = catalog_stats(catalog)
    ok = all(sum(stats[d].values()) == catalog.total for d in DIMENSIONS if d != "constraint_type")
    ok = ok and sum(stats["constraint_type"].values()) == sum(e.count * len(e.descriptor.constraint_type) for e in entries)
    order = list(DIMENSIONS)
    rng.shuffle(order)
    links = sankey_links(catalog, order)
    for left, right in zip(order, order[1:]):
        flow = sum(l.weight for l in links if (l.source_dimension, l.target_dimension) == (left, right))
        ok = ok and abs(flow - catalog.total) < 1e-9
    return ok


def _flow(rng: random.Random) -> bool:
    seqs = [[rng.choice("abcdef") for _ in range(rng.randint(1, 8))] for _ in range(rng.randint(1, 12))]
    model = discover_dfg(log_from_sequences(seqs), 0.0)
    for node, freq in model.nodes.items():
        incoming = sum(n for (_, b), n in model.edges.items() if b == node) + model.start_counts.get(node, 0)
        outgoing = sum(n for (a, _), n in model.edges.items() if a == node) + model.end_counts.get(node, 0)
        if not incoming == freq == outgoing:
            return False
    return len(model.edges) == len({(a, b) for s in seqs for a, b in zip(s, s[1:])})


def _gini(rng: random.Random) -> bool:
    n = rng.randint(2, 40)
    rows = [{"n": rng.randint(0, 9), "c": rng.choice("pqrs")} for _ in range(n)]
    labels = [rng.random() < 0.4 for _ in range(n)]
    tree = grow_tree(rows, labels, ["n", "c"], rng.randint(0, 4), rng.randint(1, 3))
    for node in tree.root.internal_nodes():
        weighted = (node.yes.samples * node.yes.impurity + node.no.samples * node.no.impurity) / node.samples
        if not weighted < node.impurity:
            return False
    return True


INVARIANTS = {
    "conservation": _conservation,
    "projection": _projection,
    "marginal conservation": _marginals,
    "flow conservation": _flow,
    "gini monotonicity": _gini,
}


def test_criterion_10_invariant_suites():
    cases = 200
    tallies = {}
    for offset, (name, check_case) in enumerate(INVARIANTS.items()):
        rng = random.Random(SEED + offset)
        tallies[name] = sum(1 for _ in range(cases) if check_case(rng))
    ok = all(v == cases for v in tallies.values())
    record(10, ok, ", ".join(f"{k} {v}/{cases}" for k, v in tallies.items()))
