import json

import pytest

import coopsim as cs
from coopsim.cli import main
from conftest import CONFIG_DIR, make_doc

TOY = str(CONFIG_DIR / "toy_single.json")
GOODBAD = str(CONFIG_DIR / "toy_goodbad.json")
DESK = str(CONFIG_DIR / "desk.json")


def test_region_toy(capsys):
    assert main(["region", TOY, "--direction", "1"]) == 0
    out = capsys.readouterr().out
    assert "rho_star,0.5" in out
    assert "status,optimal" in out


def test_region_missing_file(capsys):
    assert main(["region", "does/not/exist.json"]) == 2
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err != ""


def test_region_zero_direction(capsys):
    assert main(["region", TOY, "--direction", "0"]) == 2
    assert capsys.readouterr().err != ""


def test_region_bad_config(tmp_path, capsys):
    doc = make_doc()
    doc["fading"]["states"][0]["p"] = 0.9
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert main(["region", str(p)]) == 2
    assert "distribution-not-normalized" in capsys.readouterr().err


def test_region_witness_json(capsys):
    assert main(["region", GOODBAD, "--witness"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rho_star"] == pytest.approx(0.5, abs=1e-9)
    assert doc["a"] and doc["b"]
    assert doc["a"][0]["m"] == 0


def test_simulate_writes_outputs(tmp_path, capsys):
    rc = main(
        ["simulate", TOY, "--lambda", "0.3", "--horizon", "5000", "--seed", "7",
         "--out", str(tmp_path), "--queues", "queues.csv"]
    )
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["verdict"] == "stable"
    assert summary["lambda"] == [0.3]
    stdout_doc = json.loads(capsys.readouterr().out)
    assert stdout_doc == summary
    metrics = (tmp_path / "metrics.csv").read_text().splitlines()
    assert metrics[0].startswith("block,variant,m,g1,A,B")
    assert len(metrics) == 5001
    queues = (tmp_path / "queues.csv").read_text().splitlines()
    assert queues[0] == "block,Qs_1,Q_n0_m0_a"
    assert len(queues) == 5001


@pytest.mark.parametrize("lam,expected", [("0.3", "stable"), ("0.6", "unstable")])
def test_simulate_toy_verdicts(tmp_path, capsys, lam, expected):
    rc = main(["simulate", TOY, "--lambda", lam, "--horizon", "100000", "--seed", "7",
               "--out", str(tmp_path)])
    assert rc == 0
    capsys.readouterr()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["verdict"] == expected


def test_metrics_csv_marks_infeasible_second_hop(tmp_path, capsys):
    # good/bad toy: blocks with a bad second hop have no drainable queue
    rc = main(["simulate", GOODBAD, "--lambda", "0.3", "--horizon", "500", "--seed", "1",
               "--out", str(tmp_path)])
    assert rc == 0
    capsys.readouterr()
    body = (tmp_path / "metrics.csv").read_text()
    assert ",-inf," in body


def test_region_direction_broadcast(capsys):
    assert main(["region", DESK, "--direction", "1"]) == 0
    out = dict(
        line.rsplit(",", 1) for line in capsys.readouterr().out.strip().splitlines()
    )
    desk = cs.load_config(DESK)
    assert float(out["rho_star"]) == pytest.approx(
        cs.boundary_scale(desk, [1.0, 1.0]), abs=1e-12
    )
    assert float(out["direction_2"]) == 1.0


def test_simulate_byte_identical(tmp_path, capsys):
    args = ["simulate", GOODBAD, "--lambda", "0.3", "--horizon", "2000", "--seed", "3"]
    assert main(args + ["--out", str(tmp_path / "one")]) == 0
    assert main(args + ["--out", str(tmp_path / "two")]) == 0
    capsys.readouterr()
    one = (tmp_path / "one" / "metrics.csv").read_bytes()
    two = (tmp_path / "two" / "metrics.csv").read_bytes()
    assert one == two


def test_simulate_env_overrides_out(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("COOPSIM_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["simulate", TOY, "--lambda", "0.2", "--horizon", "100",
                 "--out", str(tmp_path / "flag")]) == 0
    capsys.readouterr()
    assert (tmp_path / "env" / "summary.json").exists()
    assert not (tmp_path / "flag").exists()


def test_simulate_bad_lambda(capsys):
    assert main(["simulate", TOY, "--lambda", "-0.5", "--horizon", "10"]) == 2
    assert capsys.readouterr().err != ""


def test_sweep_rows_and_consistency(tmp_path, capsys):
    spec = {"direction": [1.0, 1.0], "load_factors": [0.5, 1.1], "horizon": 8000,
            "seeds": [1, 2]}
    spec_path = tmp_path / "sweep.json"
    spec_path.write_text(json.dumps(spec))
    assert main(["sweep", DESK, str(spec_path), "--jobs", "1"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "load_factor,seed,growth_rate,verdict"
    assert len(lines) == 5
    rows = [ln.split(",") for ln in lines[1:]]
    assert [r[0] for r in rows] == ["0.5", "0.5", "1.1", "1.1"]
    assert [r[3] for r in rows[:2]] == ["stable", "stable"]
    assert [r[3] for r in rows[2:]] == ["unstable", "unstable"]

    # single-cell sweep row matches a direct simulate run at the same rate
    desk = cs.load_config(DESK)
    rho = cs.boundary_scale(desk, [1.0, 1.0])
    lam = 0.5 * rho
    rc = main(["simulate", DESK, "--lambda", f"{lam!r},{lam!r}", "--horizon", "8000",
               "--seed", "1", "--out", str(tmp_path)])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert repr(summary["growth_rate"]) == rows[0][2]


def test_sweep_jobs_identical_output(tmp_path, capsys):
    spec = {"direction": [1.0], "load_factors": [0.4, 0.8], "horizon": 2000, "seeds": [5, 6]}
    spec_path = tmp_path / "sweep.json"
    spec_path.write_text(json.dumps(spec))
    assert main(["sweep", GOODBAD, str(spec_path), "--jobs", "1"]) == 0
    one = capsys.readouterr().out
    assert main(["sweep", GOODBAD, str(spec_path), "--jobs", "2"]) == 0
    two = capsys.readouterr().out
    assert one == two


def test_sweep_empty_load_factors(tmp_path, capsys):
    spec_path = tmp_path / "sweep.json"
    spec_path.write_text(json.dumps({"load_factors": [], "horizon": 10, "seeds": [1]}))
    assert main(["sweep", TOY, str(spec_path)]) == 2
    assert capsys.readouterr().err != ""


def test_queue_count_formats(tmp_path, capsys):
    doc = make_doc(n=2, k=3, alphabet=("a", "b"),
                   rates=((1.0, 1.0, 1.0),) * 4, support=[])
    p = tmp_path / "m4.json"
    p.write_text(json.dumps(doc))
    assert main(["queue-count", str(p), "--state-based-levels", "4"]) == 0
    assert capsys.readouterr().out.strip() == "encoding=16 state_based=32768 ratio=2048"
    assert main(["queue-count", str(p)]) == 0
    assert capsys.readouterr().out.strip() == "encoding=16"


def test_queue_count_overflow_exit_code(tmp_path, capsys):
    k = 50
    doc = {
        "shape": {"N": 1, "K": k, "T": 1},
        "fading": {"alphabet": ["a", "b"],
                   "states": [{"f1": ["a"], "f2": ["a"] * k, "p": 1.0}]},
        "schemes": [{"id": 0, "rates": [1.0] * k}],
        "support": [],
    }
    p = tmp_path / "big.json"
    p.write_text(json.dumps(doc))
    assert main(["queue-count", str(p), "--state-based-levels", "10"]) == 4
    assert "overflow" in capsys.readouterr().err


def test_drift_check_cli(capsys):
    rc = main(["drift-check", TOY, "--lambda", "0.3", "--qs", "10000",
               "--samples", "2000", "--seed", "1"])
    assert rc == 0
    out = dict(line.split(",") for line in capsys.readouterr().out.strip().splitlines())
    assert float(out["mean_dv"]) < 0
    assert float(out["stderr"]) > 0
    assert out["samples"] == "2000"


def test_drift_check_cli_relay_fill(capsys):
    # growth-ray probe at exterior load: positive drift
    rc = main(["drift-check", TOY, "--lambda", "0.75", "--qs", "10000",
               "--relay-fill", "4000", "--samples", "2000", "--seed", "1"])
    assert rc == 0
    out = dict(line.split(",") for line in capsys.readouterr().out.strip().splitlines())
    assert float(out["mean_dv"]) > 0
