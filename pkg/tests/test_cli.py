from __future__ import annotations

import json
import subprocess
import sys

import pytest

from confokit import fixtures
from confokit.cli import main
from goldens import GOLDEN_DIR

LOG = str(fixtures.path("table1.csv"))
XES = str(fixtures.path("table1.xes"))
MODEL = str(fixtures.path("net1.json"))
CATALOG = str(fixtures.path("top8.csv"))
SESSIONS = str(fixtures.path("sessions.csv"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_report_matches_golden(capsys):
    code, out, _ = run(capsys, "check", "--log", LOG, "--model", MODEL, "--task", "derive_process_conformance", "--reproducible")
    assert code == 0
    assert out == (GOLDEN_DIR / "report.json").read_text()


def test_svg_outputs_match_goldens(tmp_path, capsys):
    chevron, hist = tmp_path / "c.svg", tmp_path / "h.svg"
    assert run(capsys, "render", "chevron", "--log", LOG, "--model", MODEL, "--out", str(chevron))[0] == 0
    assert run(capsys, "check", "--log", LOG, "--model", MODEL, "--task", "conformance_distribution",
               "--format", "svg", "--out", str(hist))[0] == 0
    assert chevron.read_bytes() == (GOLDEN_DIR / "chevron.svg").read_bytes()
    assert hist.read_bytes() == (GOLDEN_DIR / "histogram.svg").read_bytes()


def test_depmine_dot_matches_golden(capsys):
    code, out, _ = run(capsys, "depmine", "--sessions", SESSIONS, "--format", "dot")
    assert code == 0 and out == (GOLDEN_DIR / "dfg.dot").read_text()


@pytest.mark.parametrize("task", [
    "derive_process_conformance", "summarize_process_conformance", "present_guideline_violations",
    "identify_guideline_violations", "summarize_guideline_violations", "compare_process_conformance",
    "conformance_distribution", "conformance_over_time", "conformance_per_rule", "violation_patterns",
])
@pytest.mark.parametrize("log", [LOG, XES])
def test_every_task_runs(capsys, task, log):
    code, out, err = run(capsys, "check", "--log", log, "--model", MODEL, "--task", task, "--reproducible")
    assert code == 0, err
    assert task in json.loads(out)["sections"]


def test_techniques(capsys):
    for technique in ("rules", "replay", "alignment"):
        code, out, _ = run(capsys, "check", "--log", LOG, "--model", MODEL, "--task", "derive_process_conformance",
                           "--technique", technique, "--reproducible")
        assert code == 0
        assert json.loads(out)["sections"]["derive_process_conformance"]["trace_fitness"]["id-4"] == 1.0


def test_reasons_and_outcome(tmp_path, capsys):
    log = tmp_path / "log.csv"
    log.write_text(
        "case_id,activity,timestamp,age,cured\n"
        "a,A,2024-01-01T09:00:00,30,true\na,B,2024-01-01T09:01:00,30,true\na,C,2024-01-01T09:02:00,30,true\n"
        "a,D,2024-01-01T09:03:00,30,true\na,E,2024-01-01T09:04:00,30,true\n"
        "b,A,2024-01-01T09:00:00,70,false\nb,C,2024-01-01T09:01:00,70,false\nb,E,2024-01-01T09:02:00,70,false\n"
    )
    code, out, err = run(capsys, "check", "--log", str(log), "--model", MODEL, "--task", "discover_reasons", "--attributes", "age")
    assert code == 0, err
    assert "age <= 50.0" in json.loads(out)["sections"]["discover_reasons"]["text"]
    code, out, _ = run(capsys, "check", "--log", str(log), "--model", MODEL, "--task", "impact_on_outcome", "--outcome", "cured")
    assert json.loads(out)["sections"]["impact_on_outcome"]["difference"] == 1.0
    assert run(capsys, "check", "--log", str(log), "--model", MODEL, "--task", "impact_on_outcome")[0] == 1


def test_compare_two_logs(tmp_path, capsys):
    code, out, _ = run(capsys, "check", "--log", LOG, "--log", XES, "--model", MODEL, "--task", "compare_process_conformance")
    assert code == 0
    assert [r["name"] for r in json.loads(out)["sections"]["compare_process_conformance"]] == ["table1", "table1"]


def test_engine_commands(tmp_path, capsys):
    rules = tmp_path / "rules.json"
    assert run(capsys, "rules", "derive", "--model", MODEL, "--out", str(rules))[0] == 0
    code, out, _ = run(capsys, "rules", "check", "--log", LOG, "--rules", str(rules))
    assert code == 0 and json.loads(out)["sections"]["rules"]["log_fitness"] == 0.9
    code, out, _ = run(capsys, "replay", "--log", LOG, "--model", MODEL)
    assert json.loads(out)["sections"]["replay"]["traces"]["id-7"]["missing"] == 1
    code, out, _ = run(capsys, "align", "--log", LOG, "--model", MODEL)
    assert json.loads(out)["sections"]["align"]["log_fitness"] == 0.944444


def test_taxonomy_commands(tmp_path, capsys):
    code, out, _ = run(capsys, "taxonomy", "stats", "--catalog", CATALOG)
    assert json.loads(out)["sections"]["taxonomy"]["marginals"]["goal"]["describe"] == 32
    assert run(capsys, "taxonomy", "validate", "--catalog", CATALOG)[0] == 0
    assert run(capsys, "taxonomy", "sankey", "--catalog", CATALOG)[0] == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("goal,means,characteristic,constraint_type,target,cardinality,count\nponder,derive,process conformance,data,log,single,1\n")
    code, _, err = run(capsys, "taxonomy", "validate", "--catalog", str(bad))
    assert code == 1 and "ponder" in err


def test_invalid_inputs_exit_1(tmp_path, capsys):
    code, _, err = run(capsys, "check", "--log", str(tmp_path / "missing.csv"), "--model", MODEL, "--task", "derive_process_conformance")
    assert code == 1 and "not found" in err
    bad_model = tmp_path / "m.json"
    bad_model.write_text('{"places":["p"],"transitions":[],"arcs":[{"from":"p","to":"t9"}],"initial":{"p":1},"final":{"p":1}}')
    code, _, err = run(capsys, "align", "--log", LOG, "--model", str(bad_model))
    assert code == 1 and "t9" in err
    code, _, err = run(capsys, "check", "--log", LOG, "--model", MODEL, "--task", "nope")
    assert code == 1 and "invalid choice" in err
    code, _, err = run(capsys, "check", "--log", LOG, "--model", MODEL, "--task", "derive_process_conformance", "--case-col", "cid")
    assert code == 1 and "cid" in err
    assert run(capsys)[0] == 1


def test_budget_exhaustion_exits_2(capsys, monkeypatch):
    monkeypatch.setenv("CONFOKIT_STATE_BUDGET", "2")
    code, _, err = run(capsys, "align", "--log", LOG, "--model", MODEL)
    assert code == 2 and "budget" in err


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "confokit.cli", "taxonomy", "stats", "--catalog", CATALOG, "--reproducible"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["metadata"]["timestamp"] == "1970-01-01T00:00:00+00:00"
