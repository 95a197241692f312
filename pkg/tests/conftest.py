import json
import os
from dataclasses import dataclass
from pathlib import Path

import pytest

from fastrack.cli import _load_tables, cmd_precompute
from fastrack.config import RunConfig
from fastrack.teb import TebBox

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

ACCEPTANCE_LINES: dict[str, str] = {}


@dataclass
class Precomputed:
    config: RunConfig
    path: Path
    tables: list
    grads: list
    reports: list
    teb: TebBox


@pytest.fixture(scope="session")
def default_run(tmp_path_factory) -> Precomputed:
    """The default quadrotor tables, solved once per session (a few minutes).

    Set ``FASTRACK_TABLES`` to a directory from an earlier
    ``fastrack precompute --config configs/default.json`` to skip the solve.
    """
    cfg = RunConfig.load(CONFIGS / "default.json")
    cached = os.environ.get("FASTRACK_TABLES")
    if cached and (Path(cached) / "teb.json").exists():
        path = Path(cached)
    else:
        path = tmp_path_factory.mktemp("default_tables")
        assert cmd_precompute(cfg, path) == 0
    tables, grads, reports = _load_tables(cfg, path)
    teb = TebBox.from_dict(json.loads((path / "teb.json").read_text()))
    return Precomputed(cfg, path, tables, grads, reports, teb)


@pytest.fixture
def record_acceptance():
    def record(key: str, passed: bool, detail: str):
        ACCEPTANCE_LINES[key] = f"{key} {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[key])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
