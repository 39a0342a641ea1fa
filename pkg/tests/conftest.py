"""Shared fixtures: the heavy physics objects are built once per session.

`baseline_run` executes the shipped paper_baseline scenario twice into
temporary directories; the acceptance tests read their artifacts instead of
recomputing the pipeline, and the determinism criterion compares the two
trees byte for byte.
"""

from pathlib import Path

import numpy as np
import pytest

from obpb import profiles, scenario
from obpb.modes import ModeSet

REPO_ROOT = Path(__file__).resolve().parent.parent
BASELINE_YAML = REPO_ROOT / "scenarios" / "paper_baseline.yaml"


@pytest.fixture(scope="session")
def baseline_profile():
    return profiles.JointProfile(profiles.baseline_params())


@pytest.fixture(scope="session")
def bs_modes():
    return ModeSet(enclosing_radius=4.0 / np.sqrt(2.0))


@pytest.fixture(scope="session")
def ue_modes():
    return ModeSet(enclosing_radius=1.0 / np.sqrt(2.0))


@pytest.fixture(scope="session")
def baseline_fields(baseline_profile, bs_modes, ue_modes):
    return (profiles.profile_fields(baseline_profile, "bs", bs_modes),
            profiles.profile_fields(baseline_profile, "ue", ue_modes))


@pytest.fixture(scope="session")
def baseline_run(tmp_path_factory):
    """Two runs of paper_baseline; returns their output directories."""
    root = tmp_path_factory.mktemp("paper_baseline")
    outs = []
    for tag in ("run_a", "run_b"):
        scn = scenario.load_scenario(BASELINE_YAML)
        scn.output_dir = str(root / tag)
        outcome = scenario.run_scenario(scn)
        assert outcome.exit_code in (0, 2)
        outs.append(outcome)
    return {"a": outs[0], "b": outs[1]}
