"""Soundness verification and repair of data Petri nets."""

from importlib import resources

from .model import NetInstance, load, parse, serialize
from .oracle import brute_soundness, rg_subgraph
from .repair import RepairReport, Verdict, repair_dpn, verify_soundness

__version__ = "0.1.0"


def fixture(name: str) -> NetInstance:
    """Load one of the bundled example nets by stem, e.g. ``fixture("casino")``."""
    return parse(resources.files(__package__).joinpath("fixtures", f"{name}.json").read_text(encoding="utf-8"))


def fixture_names() -> list:
    return sorted(p.name[:-5] for p in resources.files(__package__).joinpath("fixtures").iterdir() if p.name.endswith(".json"))
