"""Scenario parsing, the runner's artifact tree, and the CLI verbs.

Everything here runs at desk scale: one-wavelength apertures shrink the mode
space to J = 48/16 and a coarse quadrature keeps a full run under a couple
of seconds, while exercising the identical code paths as the shipped
baseline (validation, optimizer, projection, conventional chains, artifact
writing, exit codes).
"""

import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from obpb import cli, scenario

SMOKE_YAML = """\
name: smoke
output_dir: {out}
methods: [obpb:plane, obpb:optimal, full_array:det, sub_array]
n_ue: [2, 4]
report_m: 2
quadrature:
  bs: [48, 96]
  ue: [24, 48]
antenna:
  bs_aperture_side: 1.0
  ue_aperture_side: 0.5
obpb:
  epsilon: 0.01
  max_iterations: 60
  m_max: 2
conventional:
  n_v: 4
  n_h: 4
  beam_interval: 2
artifacts:
  cut_step_deg: 30.0
  grid_step_deg: 60.0
"""


@pytest.fixture(scope="module")
def smoke_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("smoke")
    cfg = root / "smoke.yaml"
    out = root / "out"
    cfg.write_text(SMOKE_YAML.format(out=out))
    scn = scenario.load_scenario(cfg)
    outcome = scenario.run_scenario(scn)
    return cfg, outcome


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_load_scenario_resolves_defaults(smoke_run):
    cfg, _ = smoke_run
    scn = scenario.load_scenario(cfg)
    assert scn.name == "smoke"
    assert [m["label"] for m in scn.methods] == [
        "obpb_plane", "obpb_optimal", "full_array_det", "sub_array"]
    assert scn.snr_db_siso == -12.0          # default kept
    assert scn.surface_density == 4.0
    assert scn.bs_radius == pytest.approx(1.0 / np.sqrt(2.0))


def test_scenario_error_messages_are_anchored(tmp_path):
    bad = tmp_path / "bad.yaml"

    bad.write_text("methods: [obpb:plane]\nn_ue: [4]\nturbo: 9\n")
    with pytest.raises(scenario.ScenarioError, match="unknown key 'turbo'"):
        scenario.load_scenario(bad)

    bad.write_text("methods: [obpb:moebius_strip]\nn_ue: [4]\n")
    with pytest.raises(scenario.ScenarioError,
                       match=r"methods\[0\].*moebius_strip"):
        scenario.load_scenario(bad)

    bad.write_text("methods: [obpb:plane]\nn_ue: [4]\nobpb: {epsilon: -1}\n")
    with pytest.raises(scenario.ScenarioError, match="epsilon"):
        scenario.load_scenario(bad)

    bad.write_text("methods: [obpb:plane]\nn_ue: [0]\n")
    with pytest.raises(scenario.ScenarioError, match=r"n_ue\[0\]"):
        scenario.load_scenario(bad)

    bad.write_text("methods: [obpb:plane, obpb:plane]\nn_ue: [4]\n")
    with pytest.raises(scenario.ScenarioError, match="duplicate"):
        scenario.load_scenario(bad)

    bad.write_text("methods: [obpb:plane]\nn_ue: [4]\nquadrature: {bs: [9]}\n")
    with pytest.raises(scenario.ScenarioError, match="n_theta, n_phi"):
        scenario.load_scenario(bad)


def test_yaml_syntax_errors_carry_line_numbers(tmp_path):
    bad = tmp_path / "broken.yaml"
    bad.write_text("methods: [obpb:plane\nn_ue: [4]\n")
    with pytest.raises(scenario.ScenarioError, match=r"broken\.yaml:\d+"):
        scenario.load_scenario(bad)


def test_missing_file_is_a_scenario_error(tmp_path):
    with pytest.raises(scenario.ScenarioError):
        scenario.load_scenario(tmp_path / "nope.yaml")


def test_output_root_env_reroots_relative_dirs(tmp_path, monkeypatch):
    scn = scenario.Scenario({"methods": ["sub_array"], "n_ue": [1],
                             "output_dir": "runs/here"})
    monkeypatch.setenv("OBPB_OUTPUT_ROOT", str(tmp_path))
    assert scn.resolved_output_dir() == tmp_path / "runs" / "here"
    monkeypatch.delenv("OBPB_OUTPUT_ROOT")
    assert scn.resolved_output_dir() == Path("runs/here")
    # absolute paths are never rerooted
    scn.output_dir = str(tmp_path / "abs")
    monkeypatch.setenv("OBPB_OUTPUT_ROOT", "/elsewhere")
    assert scn.resolved_output_dir() == tmp_path / "abs"


# ---------------------------------------------------------------------------
# runner artifacts
# ---------------------------------------------------------------------------

def test_run_writes_the_artifact_tree(smoke_run):
    _, outcome = smoke_run
    assert outcome.exit_code == 0
    out = outcome.output_dir
    assert (out / "summary.csv").is_file()
    assert outcome.manifest_path == out / "manifest.json"

    for label in ("obpb_plane", "obpb_optimal", "full_array_det",
                  "sub_array"):
        for n in (2, 4):
            point = out / label / f"n_ue_{n}"
            for fname in ("cut_phi_plane.csv", "cut_theta_plane.csv",
                          "pattern_grid.csv", "correlation.csv",
                          "capacity.json"):
                assert (point / fname).is_file(), (label, n, fname)
            ue_cut = point / "cut_phi_plane_ue.csv"
            assert ue_cut.is_file() == label.startswith("obpb")

    # 4 methods x 2 sweep points
    assert len(outcome.points) == 8
    summary = (out / "summary.csv").read_text().strip().splitlines()
    assert summary[0] == ("method,n_ue,m_opt,capacity_bits,det_db,report_m,"
                          "converged,sub_shape")
    assert len(summary) == 9


def test_manifest_resolves_every_knob(smoke_run):
    _, outcome = smoke_run
    man = json.loads(outcome.manifest_path.read_text())
    res = man["resolved"]
    assert res["antenna"]["bs_aperture_side"] == 1.0
    assert res["modes"]["j_bs"] == 48 and res["modes"]["j_ue"] == 16
    assert res["obpb"]["m_max"] == 2
    assert res["conventional"]["n_v"] == 4
    assert res["capacity"]["snr"] > 0
    assert "plane" in res["surfaces"]["shapes"]
    assert man["scenario_name"] == "smoke"
    assert set(man["obpb_histories"]) == {"1", "2"}
    assert len(man["points"]) == 8


def test_correlation_artifact_is_normalized(smoke_run):
    import csv
    _, outcome = smoke_run
    path = outcome.output_dir / "obpb_optimal" / "n_ue_2" / "correlation.csv"
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    diag = [float(r["abs"]) for r in rows if r["i"] == r["j"]]
    offd = [float(r["abs"]) for r in rows if r["i"] != r["j"]]
    assert diag and all(abs(v - 1.0) < 1e-12 for v in diag)
    assert all(0.0 <= v <= 1.0 + 1e-12 for v in offd)
    # the unconstrained eigenbeams are orthogonal by construction
    assert max(offd) < 1e-6


def test_pattern_cuts_have_expected_grid(smoke_run):
    _, outcome = smoke_run
    path = outcome.output_dir / "obpb_plane" / "n_ue_2" / "cut_phi_plane.csv"
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    assert header[0] == "phi_deg"
    assert header[1:] == ["stream_1_db", "stream_2_db"]
    angles = [float(l.split(",")[0]) for l in lines[1:]]
    assert angles[0] == -180.0 and angles[-1] == 180.0
    assert len(angles) == 13        # 30-degree steps


def test_capacity_json_is_self_describing(smoke_run):
    _, outcome = smoke_run
    payload = json.loads((outcome.output_dir / "sub_array" / "n_ue_4"
                          / "capacity.json").read_text())
    assert payload["method"] == "sub_array"
    assert payload["n_ue"] == 4
    assert payload["report_m"] <= 2
    assert "sub_shape" in payload
    cap = payload["capacity"]
    assert cap["total"] == pytest.approx(
        sum(c for _, c in cap["per_stream"]))


def test_nonconvergence_exits_2(tmp_path):
    cfg = tmp_path / "starved.yaml"
    cfg.write_text(SMOKE_YAML.format(out=tmp_path / "out")
                   .replace("max_iterations: 60", "max_iterations: 1")
                   .replace("methods: [obpb:plane, obpb:optimal, "
                            "full_array:det, sub_array]",
                            "methods: [obpb:optimal]"))
    outcome = scenario.run_scenario(scenario.load_scenario(cfg))
    assert outcome.exit_code == 2
    man = json.loads(outcome.manifest_path.read_text())
    assert man["converged"] is False


# ---------------------------------------------------------------------------
# CLI verbs
# ---------------------------------------------------------------------------

def test_cli_validate_ok(smoke_run, capsys):
    cfg, _ = smoke_run
    assert cli.main(["validate", str(cfg)]) == 0
    assert "ok (4 methods x 2 N_UE points" in capsys.readouterr().out


def test_cli_validate_rejects_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("methods: []\nn_ue: [4]\n")
    assert cli.main(["validate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and "methods" in err


def test_cli_run_quiet(tmp_path, capsys):
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text(SMOKE_YAML.format(out=tmp_path / "out")
                   .replace("methods: [obpb:plane, obpb:optimal, "
                            "full_array:det, sub_array]",
                            "methods: [sub_array]")
                   .replace("n_ue: [2, 4]", "n_ue: [2]"))
    assert cli.main(["run", "--quiet", str(cfg)]) == 0
    out = capsys.readouterr().out
    # progress suppressed; only the final artifact line remains
    assert out.strip().startswith("wrote ")
    assert (tmp_path / "out" / "manifest.json").is_file()


def test_cli_compare(smoke_run, tmp_path, capsys):
    _, outcome = smoke_run
    # a second, byte-identical run stands in for an alternative scenario
    twin = tmp_path / "twin"
    shutil.copytree(outcome.output_dir, twin)
    out_csv = tmp_path / "cmp.csv"
    rc = cli.main(["compare", str(outcome.manifest_path),
                   str(twin / "manifest.json"),
                   "--baseline", "sub_array", "--out", str(out_csv)])
    assert rc == 0
    lines = out_csv.read_text().strip().splitlines()
    header = lines[0].split(",")
    assert header[:2] == ["source", "method"]
    assert "capacity_ratio_vs_sub_array" in header
    assert len(lines) == 1 + 2 * 8
    # the baseline rows carry ratio 1.0
    ratio_col = header.index("capacity_ratio_vs_sub_array")
    for line in lines[1:]:
        cells = line.split(",")
        if cells[1] == "sub_array":
            assert float(cells[ratio_col]) == pytest.approx(1.0)


def test_cli_compare_needs_two_manifests(smoke_run, capsys):
    _, outcome = smoke_run
    assert cli.main(["compare", str(outcome.manifest_path)]) == 1
    assert "at least two" in capsys.readouterr().err


def test_cli_compare_rejects_unknown_baseline(smoke_run, tmp_path, capsys):
    _, outcome = smoke_run
    twin = tmp_path / "twin2"
    shutil.copytree(outcome.output_dir, twin)
    rc = cli.main(["compare", str(outcome.manifest_path),
                   str(twin / "manifest.json"), "--baseline", "maximal"])
    assert rc == 1
    assert "maximal" in capsys.readouterr().err


def test_cli_compare_rejects_non_manifest_json(smoke_run, tmp_path, capsys):
    _, outcome = smoke_run
    stray = tmp_path / "stray.json"
    stray.write_text("{\"hello\": 1}\n")
    rc = cli.main(["compare", str(outcome.manifest_path), str(stray)])
    assert rc == 1
    assert "not a run manifest" in capsys.readouterr().err
