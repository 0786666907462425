"""Command-line interface: ``confokit <command> ...``."""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

from confokit import analytics, depmine, taxonomy
from confokit.alignment import align_log
from confokit.errors import ConfokitError, ResourceError
from confokit.event_log import CsvMapping, EventLog, parse_csv, parse_xes_subset
from confokit.petri import PetriNet, parse_model
from confokit.replay import replay_log
from confokit.reporting import (
    DEFAULT_PALETTE,
    annotate_model_dot,
    emit_report,
    render_chevron_svg,
    render_histogram_svg,
    violations_per_activity,
    write_atomic,
)
from confokit.rules import RuleSet, check_trace, derive_rules, rule_fitness, ruleset_from_json, ruleset_to_json

EXIT_OK, EXIT_INVALID, EXIT_RESOURCE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _read(path: str) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise ConfokitError(f"input file not found: {path}")
    return p.read_bytes()


def _load_log(path: str, args: argparse.Namespace) -> EventLog:
    data = _read(path)
    if path.lower().endswith(".xes"):
        return parse_xes_subset(data)
    mapping = CsvMapping(args.case_col, args.activity_col, args.timestamp_col, args.timestamp_format)
    return parse_csv(data, mapping)


def _load_model(path: str) -> PetriNet:
    return parse_model(_read(path))


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _palette(spec: str | None) -> dict[str, str]:
    palette = dict(DEFAULT_PALETTE)
    if spec:
        for part in spec.split(","):
            key, _, color = part.partition("=")
            if key.strip() not in palette or not color.strip():
                raise ConfokitError(f"bad palette entry {part!r}; use status=color with status in {sorted(palette)}")
            palette[key.strip()] = color.strip()
    return palette


def _log_options(p: argparse.ArgumentParser, many: bool = False) -> None:
    if many:
        p.add_argument("--log", required=True, action="append", help="event log (.csv or .xes); repeat to compare logs")
    else:
        p.add_argument("--log", required=True, help="event log (.csv or .xes)")
    p.add_argument("--case-col", default="case_id")
    p.add_argument("--activity-col", default="activity")
    p.add_argument("--timestamp-col", default="timestamp")
    p.add_argument("--timestamp-format", default=None, help="strptime pattern used when a timestamp is not ISO 8601")


def _output_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--reproducible", action="store_true", help="zero the report timestamp")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="confokit", description="Conformance checking and task analytics.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    check = sub.add_parser("check", help="run one analysis task")
    _log_options(check, many=True)
    check.add_argument("--model", required=True)
    check.add_argument("--task", required=True, choices=analytics.TASKS)
    check.add_argument("--technique", default="alignment", choices=analytics.TECHNIQUES)
    check.add_argument("--format", default="json", choices=("json", "svg", "dot"))
    check.add_argument("--rules", help="rule set JSON (default: derived from the model)")
    check.add_argument("--bins", type=int, default=10)
    check.add_argument("--window", default="day", choices=analytics.WINDOWS)
    check.add_argument("--attributes", default="", help="comma-separated trace attributes for discover_reasons")
    check.add_argument("--max-depth", type=int, default=3)
    check.add_argument("--min-leaf", type=int, default=1)
    check.add_argument("--outcome", help="outcome attribute for impact_on_outcome")
    check.add_argument("--min-support", type=int, default=1)
    check.add_argument("--top-k", type=int)
    check.add_argument("--activity", help="identify_guideline_violations: only this activity")
    check.add_argument("--target", default="event", choices=("event", "trace", "log"))
    check.add_argument("--palette", help="chevron colours, e.g. conforming=green,missing=purple,wrong=yellow")
    _output_options(check)

    rules = sub.add_parser("rules", help="derive or check declarative rules")
    rules_sub = rules.add_subparsers(dest="action", parser_class=_Parser)
    derive = rules_sub.add_parser("derive")
    derive.add_argument("--model", required=True)
    derive.add_argument("--max-length", type=int, default=10)
    derive.add_argument("--max-visits", type=int, default=2)
    derive.add_argument("--out")
    rcheck = rules_sub.add_parser("check")
    _log_options(rcheck)
    rcheck.add_argument("--model")
    rcheck.add_argument("--rules")
    _output_options(rcheck)

    for name, text in (("replay", "token replay of a log"), ("align", "optimal alignments of a log")):
        p = sub.add_parser(name, help=text)
        _log_options(p)
        p.add_argument("--model", required=True)
        _output_options(p)

    tax = sub.add_parser("taxonomy", help="task catalog validation and statistics")
    tax.add_argument("action", choices=("validate", "stats", "sankey"))
    tax.add_argument("--catalog", required=True)
    _output_options(tax)

    dep = sub.add_parser("depmine", help="directly-follows graph over analysis sessions")
    dep.add_argument("--sessions", required=True)
    dep.add_argument("--notion", default="goal", choices=("goal", "goal-target"))
    dep.add_argument("--threshold", type=float, default=0.0)
    dep.add_argument("--format", default="json", choices=("json", "dot"))
    _output_options(dep)

    render = sub.add_parser("render", help="render a figure")
    render.add_argument("kind", choices=("chevron", "histogram", "model"))
    _log_options(render)
    render.add_argument("--model", required=True)
    render.add_argument("--bins", type=int, default=10)
    render.add_argument("--palette")
    render.add_argument("--out")
    return parser


def _ruleset(args: argparse.Namespace, net: PetriNet | None) -> RuleSet:
    if getattr(args, "rules", None):
        return ruleset_from_json(_read(args.rules))
    if net is None:
        raise ConfokitError("either --rules or --model is required")
    return derive_rules(net)


def _report(args: argparse.Namespace, section: str, payload, inputs: dict[str, str]) -> None:
    _emit(emit_report({section: payload}, inputs, args.reproducible), args.out)


def _cmd_check(args: argparse.Namespace) -> None:
    net = _load_model(args.model)
    logs = [_load_log(p, args) for p in args.log]
    log = logs[0]
    inputs = {"model": args.model, **{f"log{i}" if i else "log": p for i, p in enumerate(args.log)}}
    task = args.task
    needs_rules = args.technique == "rules" or task == "conformance_per_rule"
    rules = _ruleset(args, net) if needs_rules else None
    fmt = args.format
    if fmt == "svg" and task not in ("present_guideline_violations", "conformance_distribution"):
        raise ConfokitError(f"--format svg is not available for {task}")
    if fmt == "dot" and task not in ("summarize_guideline_violations", "identify_guideline_violations"):
        raise ConfokitError(f"--format dot is not available for {task}")

    if task == "derive_process_conformance":
        payload = analytics.derive_process_conformance(log, net, args.technique, rules=rules)
    elif task == "summarize_process_conformance":
        payload = {"fraction_conformant": analytics.summarize_process_conformance(log, net)}
    elif task == "present_guideline_violations":
        rows = analytics.present_guideline_violations(log, net)
        if fmt == "svg":
            _emit(render_chevron_svg(rows, _palette(args.palette)), args.out)
            return
        payload = rows
    elif task in ("identify_guideline_violations", "summarize_guideline_violations"):
        summary = analytics.summarize_guideline_violations(log, net, args.technique, args.top_k, rules=rules)
        if fmt == "dot":
            _emit(annotate_model_dot(net, violations_per_activity(summary)), args.out)
            return
        if task == "summarize_guideline_violations":
            payload = [{"type": k, "count": n} for k, n in summary]
        else:
            query = analytics.ViolationQuery(activity=args.activity, target=args.target)
            payload = analytics.identify_guideline_violations(log, net, query, args.technique, rules=rules)
    elif task == "compare_process_conformance":
        if len(logs) > 1:
            units = [(Path(p).stem, lg) for p, lg in zip(args.log, logs)]
        else:
            units = [(t.case_id, [t]) for t in log.traces]
        rows = analytics.compare_process_conformance(units, net, args.technique, rules=rules)
        payload = [{"name": n, "fitness": f} for n, f in rows]
    elif task == "conformance_distribution":
        buckets = analytics.conformance_distribution(log, net, args.bins)
        if fmt == "svg":
            _emit(render_histogram_svg(buckets), args.out)
            return
        payload = buckets
    elif task == "conformance_over_time":
        payload = analytics.conformance_over_time(log, net, args.window)
    elif task == "conformance_per_rule":
        payload = [{"rule": str(r), "rate": rate} for r, rate in analytics.conformance_per_rule(log, rules)]
    elif task == "violation_patterns":
        found = analytics.violation_patterns(log, net, args.min_support, args.technique, rules=rules)
        payload = [{"types": sorted(s), "support": n} for s, n in found]
    elif task == "discover_reasons":
        attrs = [a.strip() for a in args.attributes.split(",") if a.strip()]
        tree = analytics.discover_reasons(log, net, attrs, args.max_depth, args.min_leaf)
        payload = {"tree": tree.root, "text": tree.render()}
    else:  # impact_on_outcome
        if not args.outcome:
            raise ConfokitError("impact_on_outcome requires --outcome")
        payload = analytics.impact_on_outcome(log, net, args.outcome)
    _report(args, task, payload, inputs)


def _cmd_rules(args: argparse.Namespace) -> None:
    if args.action == "derive":
        net = _load_model(args.model)
        _emit(ruleset_to_json(derive_rules(net, args.max_length, args.max_visits)), args.out)
        return
    if args.action != "check":
        raise UsageError("rules requires an action: derive or check")
    net = _load_model(args.model) if args.model else None
    ruleset = _ruleset(args, net)
    log = _load_log(args.log, args)
    result = rule_fitness(log, ruleset)
    payload = {
        "trace_fitness": result.trace_fitness,
        "log_fitness": result.log_fitness,
        "violations": [v for t in log.traces for v in check_trace(t, ruleset)],
    }
    inputs = {"log": args.log, **({"model": args.model} if args.model else {}), **({"rules": args.rules} if args.rules else {})}
    _report(args, "rules", payload, inputs)


def _cmd_replay(args: argparse.Namespace) -> None:
    result = replay_log(_load_model(args.model), _load_log(args.log, args))
    payload = {"traces": result.results, "trace_fitness": result.trace_fitness, "totals": result.totals, "log_fitness": result.log_fitness}
    _report(args, "replay", payload, {"log": args.log, "model": args.model})


def _cmd_align(args: argparse.Namespace) -> None:
    log = _load_log(args.log, args)
    result = align_log(_load_model(args.model), log)
    payload = {
        "variants": [
            {"sequence": list(seq), "cost": a.cost, "fitness": result.variant_fitness[seq],
             "moves": [{"kind": m.kind, "label": m.label} for m in a.moves]}
            for seq, a in result.alignments.items()
        ],
        "trace_fitness": result.trace_fitness,
        "log_fitness": result.log_fitness,
    }
    _report(args, "align", payload, {"log": args.log, "model": args.model})


def _cmd_taxonomy(args: argparse.Namespace) -> None:
    catalog = taxonomy.load_catalog(_read(args.catalog))
    if args.action == "validate":
        offenders = catalog.offenders()
        payload = {"valid": not offenders, "entries": len(catalog.entries), "violations": offenders}
        _report(args, "taxonomy", payload, {"catalog": args.catalog})
        if offenders:
            for line in offenders:
                print(line, file=sys.stderr)
            raise SystemExit(EXIT_INVALID)
        return
    if args.action == "stats":
        payload = {"total": catalog.total, "marginals": taxonomy.catalog_stats(catalog), "tuples": dict(taxonomy.tuple_counts(catalog))}
    else:
        payload = {"links": taxonomy.sankey_links(catalog)}
    _report(args, "taxonomy", payload, {"catalog": args.catalog})


def _cmd_depmine(args: argparse.Namespace) -> None:
    sessions = taxonomy.load_sessions(_read(args.sessions))
    notion = depmine.GOAL if args.notion == "goal" else depmine.GOAL_AND_TARGET
    model = depmine.discover_dfg(depmine.build_session_log(sessions, notion), args.threshold)
    if args.format == "dot":
        _emit(depmine.dfg_to_dot(model), args.out)
        return
    payload = {
        "nodes": model.nodes,
        "edges": [{"from": a, "to": b, "frequency": n} for (a, b), n in model.edges.items()],
        "start_counts": model.start_counts,
        "end_counts": model.end_counts,
    }
    _report(args, "discover_dfg", payload, {"sessions": args.sessions})


def _cmd_render(args: argparse.Namespace) -> None:
    net = _load_model(args.model)
    log = _load_log(args.log, args)
    if args.kind == "chevron":
        text = render_chevron_svg(analytics.present_guideline_violations(log, net), _palette(args.palette))
    elif args.kind == "histogram":
        text = render_histogram_svg(analytics.conformance_distribution(log, net, args.bins))
    else:
        text = annotate_model_dot(net, violations_per_activity(analytics.summarize_guideline_violations(log, net)))
    _emit(text, args.out)


COMMANDS = {
    "check": _cmd_check,
    "rules": _cmd_rules,
    "replay": _cmd_replay,
    "align": _cmd_align,
    "taxonomy": _cmd_taxonomy,
    "depmine": _cmd_depmine,
    "render": _cmd_render,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except ResourceError as exc:
        print(f"confokit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConfokitError as exc:
        print(f"confokit: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:
        return int(exc.code or 0)
    except (OSError, ValueError) as exc:
        print(f"confokit: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
