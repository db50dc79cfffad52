"""Access to the machine files shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .machine import Machine, load_machine


def fixture_dir() -> Path:
    return Path(str(resources.files("qtmlab") / "fixtures"))


def fixture_names() -> list[str]:
    return sorted(p.stem for p in fixture_dir().glob("*.qtm"))


def fixture_path(name: str) -> Path:
    return fixture_dir() / f"{name}.qtm"


def load_fixture(name: str) -> Machine:
    return load_machine(fixture_path(name))


def resolve_machine_path(spec: str) -> Path:
    """A file path as given, or else a bundled fixture by name or by fixtures/ path."""
    p = Path(spec)
    if p.exists():
        return p
    for cand in (fixture_dir() / p.name, fixture_path(p.stem)):
        if cand.exists():
            return cand
    raise FileNotFoundError(f"no machine file {spec!r}")
