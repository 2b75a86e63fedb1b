import json
import subprocess
import sys

import pytest

from uamflow.cli import main

from .conftest import PLANS, SCENARIOS

MINIMAL = str(SCENARIOS / "minimal.toml")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_writes_dump(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--scenario", MINIMAL, "--omega", "0.5", "--out", str(tmp_path))
    assert code == 0
    summary = json.loads(out)
    assert summary["status"] == "Converged"
    dump = json.loads((tmp_path / "solution.json").read_text())
    assert {"route_flows", "link_flows", "demand_fulfillment", "noise_increase_db", "trace"} <= set(dump)
    assert dump["parameters"]["omega"] == 0.5


def test_solver_flags_and_inf(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--scenario", MINIMAL, "--backend", "simplex", "--tol", "1e-6",
                       "--m-u", "inf", "--p-u", "0.0", "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["status"] == "Converged"


def test_sweep_worker_counts_identical(tmp_path, capsys):
    outs = []
    for workers in ("1", "3"):
        d = tmp_path / f"w{workers}"
        code, _, _ = run(capsys, "sweep", "--plan", str(PLANS / "quick.toml"), "--workers", workers, "--out", str(d))
        assert code == 0
        outs.append(d)
    for name in ("points.csv", "pareto.csv", "curve_demand.csv", "curve_noise.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_pareto_and_compare_from_points(tmp_path, capsys):
    sweep = tmp_path / "sweep"
    assert run(capsys, "sweep", "--plan", str(PLANS / "quick.toml"), "--out", str(sweep))[0] == 0
    points = str(sweep / "points.csv")
    code, out, _ = run(capsys, "pareto", "--points", points, "--out", str(tmp_path / "par"))
    assert code == 0 and json.loads(out)["points"] == 12
    code, out, _ = run(capsys, "compare", "--scenario", MINIMAL, "--points", points, "--designs", "2",
                       "--out", str(tmp_path / "cmp"))
    assert code == 0
    radar = (tmp_path / "cmp" / "radar.csv").read_text().splitlines()
    assert radar[0].startswith("design,source_index,criterion,status")
    code, _, err = run(capsys, "compare", "--scenario", MINIMAL, "--points", points, "--indices", "999",
                       "--out", str(tmp_path / "cmp2"))
    assert code == 1 and json.loads(err)["details"] == [999]
    assert not (tmp_path / "cmp2").exists()


def test_export_noise_map_from_solution(tmp_path, capsys):
    assert run(capsys, "solve", "--scenario", MINIMAL, "--out", str(tmp_path))[0] == 0
    code, _, _ = run(capsys, "export-noise-map", "--scenario", MINIMAL,
                     "--solution", str(tmp_path / "solution.json"), "--out", str(tmp_path))
    assert code == 0
    doc = json.loads((tmp_path / "noise_map.geojson").read_text())
    assert len(doc["features"]) == 3


def test_gen_scenario_then_validate(tmp_path, capsys):
    code, out, _ = run(capsys, "gen-scenario", "--seed", "5", "--n-vertiports", "8", "--n-communities", "20",
                       "--n-od-pairs", "8", "--n-corridors", "12", "--out", str(tmp_path), "--name", "s.toml")
    assert code == 0 and json.loads(out)["crossings"] == 0
    code, out, _ = run(capsys, "validate", str(tmp_path / "s.toml"), MINIMAL)
    assert code == 0
    assert all(v["ok"] for v in json.loads(out).values())


def test_validate_lists_every_error(tmp_path, capsys):
    text = (SCENARIOS / "minimal.toml").read_text()
    text = text.replace('to = "B"', 'to = "Q"').replace("demand = 12.0", "demand = -1.0")
    bad = tmp_path / "bad.toml"
    bad.write_text(text)
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 1
    payload = json.loads(err)
    assert payload["error"] == "ValidationError"
    details = "\n".join(payload["details"])
    assert "'Q'" in details and details.count("demand") == 2


def test_missing_file_is_validation_error(tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--scenario", str(tmp_path / "nope.toml"), "--out", str(tmp_path / "o"))
    assert code == 1 and json.loads(err)["error"] == "ValidationError"
    assert not (tmp_path / "o").exists()


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--scenario", MINIMAL, "--colour", "red"])
    assert exc.value.code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "UsageError"


def test_bad_workers(capsys):
    assert main(["sweep", "--plan", str(PLANS / "quick.toml"), "--workers", "0"]) == 2


def test_help_documents_flags():
    res = subprocess.run([sys.executable, "-m", "uamflow.cli", "solve", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for flag in ("--omega", "--delta1", "--m-u", "--p-u", "--tol", "--max-iter", "--backend", "--out"):
        assert flag in res.stdout
