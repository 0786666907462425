"""Bundled example inputs: the two-trace log, its net, the top-8 task catalog and sample sessions."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from confokit.event_log import EventLog, parse_csv, parse_xes_subset
from confokit.petri import PetriNet, parse_model
from confokit.taxonomy import AnalysisSession, TaskCatalog, load_catalog, load_sessions


def path(name: str) -> Path:
    return Path(str(resources.files("confokit") / "data" / name))


def net1() -> PetriNet:
    return parse_model(path("net1.json").read_bytes())


def table1() -> EventLog:
    return parse_csv(path("table1.csv").read_bytes())


def table1_xes() -> EventLog:
    return parse_xes_subset(path("table1.xes").read_bytes())


def top8_catalog() -> TaskCatalog:
    return load_catalog(path("top8.csv").read_bytes())


def sample_sessions() -> list[AnalysisSession]:
    return load_sessions(path("sessions.csv").read_bytes())
