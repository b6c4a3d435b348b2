"""Shared fixtures: every bundled scenario executed twice, once per session.

Running each scenario twice into separate directories backs the
determinism tests (byte-identical artifacts) and lets the engine,
report and acceptance tests share one set of runs instead of paying
for the simulations repeatedly.
"""

from pathlib import Path

import pytest

from tgsim.config import load_config
from tgsim.engine import run_scenario

REPO_ROOT = Path(__file__).resolve().parents[1]
SCENARIO_DIR = REPO_ROOT / "scenarios"


def scenario_paths() -> list[Path]:
    paths = sorted(SCENARIO_DIR.glob("*.yaml"))
    assert paths, f"no scenario configs under {SCENARIO_DIR}"
    return paths


@pytest.fixture(scope="session")
def scenario_runs(tmp_path_factory):
    """{stem: (first RunArtifacts, second RunArtifacts)} for all scenarios."""
    runs = {}
    for path in scenario_paths():
        cfg = load_config(path)
        stem = path.stem
        first = run_scenario(
            cfg, tmp_path_factory.mktemp(f"{stem}_a"), base_dir=SCENARIO_DIR
        )
        second = run_scenario(
            cfg, tmp_path_factory.mktemp(f"{stem}_b"), base_dir=SCENARIO_DIR
        )
        runs[stem] = (first, second)
    return runs


def artifact_files(run) -> dict[str, bytes]:
    """Every produced file by name, manifest included."""
    names = list(run.manifest["files"]) + ["manifest.json"]
    return {name: (run.out_dir / name).read_bytes() for name in names}
