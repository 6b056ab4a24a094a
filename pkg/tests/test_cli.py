import json
import re

import pytest

from cbceval.cli import main
from cbceval.model import DeadlockCause, DeadlockReport

from helpers import FEASIBLE_AT_6


def run_cli(*argv):
    return main(list(argv))


def test_cluster_sample(sample_paths, capsys):
    data, _ = sample_paths
    code = run_cli("cluster", "--data", str(data), "--k", "3", "--seed", "42")
    out = capsys.readouterr().out
    assert code == 0
    payload = json.loads(out)
    assert payload["k"] == 3
    assert len(payload["assignment"]) == 10
    assert len(payload["centroids"]) == 3


def test_cluster_missing_file(tmp_path, capsys):
    code = run_cli("cluster", "--data", str(tmp_path / "missing.csv"), "--k", "2", "--seed", "1")
    err = capsys.readouterr().err
    assert code == 1
    assert "cannot read" in err


def test_cluster_k_too_large(sample_paths, capsys):
    data, _ = sample_paths
    code = run_cli("cluster", "--data", str(data), "--k", "11", "--seed", "1")
    err = capsys.readouterr().err
    assert code == 1
    assert "k exceeds candidate count" in err


def test_cluster_byte_determinism(sample_paths, tmp_path):
    data, _ = sample_paths
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    assert run_cli("cluster", "--data", str(data), "--k", "3", "--seed", "7", "--out", str(out1)) == 0
    assert run_cli("cluster", "--data", str(data), "--k", "3", "--seed", "7", "--out", str(out2)) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_evaluate_sample(sample_paths, capsys):
    data, constraints = sample_paths
    code = run_cli(
        "evaluate", "--data", str(data), "--constraints", str(constraints),
        "--k", "3", "--seed", "42",
    )
    out = capsys.readouterr().out
    assert code == 0
    payload = json.loads(out)
    assert [r["id"] for r in payload["ranking"]][0] == "T103"
    assert len(payload["ranking"]) == 6
    assert {r["id"] for r in payload["ranking"]} == set(FEASIBLE_AT_6)


def test_evaluate_deadlock_exit_code(sample_paths, tmp_path, capsys):
    data, _ = sample_paths
    bad = tmp_path / "bad.json"
    bad.write_text(
        json.dumps({"feasibility_threshold": 6, "min_cluster_size": 4}),
        encoding="utf-8",
    )
    out = tmp_path / "report.json"
    code = run_cli(
        "evaluate", "--data", str(data), "--constraints", str(bad),
        "--k", "3", "--seed", "1", "--out", str(out),
    )
    assert code == 2
    payload = json.loads(out.read_text())
    assert payload["deadlock"]["deadlocked"] is True
    assert payload["deadlock"]["causes"][0]["kind"] == "size-arithmetic"
    assert "ranking" not in payload


def test_evaluate_unreadable_constraints(sample_paths, tmp_path, capsys):
    data, _ = sample_paths
    code = run_cli(
        "evaluate", "--data", str(data),
        "--constraints", str(tmp_path / "nope.json"), "--seed", "1",
    )
    assert code == 1


def test_evaluate_byte_determinism_modulo_timestamp(sample_paths, tmp_path):
    data, constraints = sample_paths
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    for out in (out1, out2):
        code = run_cli(
            "evaluate", "--data", str(data), "--constraints", str(constraints),
            "--seed", "42", "--out", str(out),
        )
        assert code == 0

    def neutralize(text):
        return re.sub(r'"timestamp": "[^"]*"', '"timestamp": "-"', text)

    assert neutralize(out1.read_text()) == neutralize(out2.read_text())


def test_evaluate_k_conflict_with_spec(sample_paths, tmp_path, capsys):
    data, _ = sample_paths
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"feasibility_threshold": 6, "k": 2}), encoding="utf-8")
    code = run_cli(
        "evaluate", "--data", str(data), "--constraints", str(spec),
        "--k", "3", "--seed", "1",
    )
    err = capsys.readouterr().err
    assert code == 1
    assert "conflicts" in err


def test_evaluate_assignment_deadlock_exit(sample_paths, tmp_path, capsys):
    # Feasible spec (bind check passes) on which the greedy component order
    # finds no slot at seed 0: T100/T101 fill one cluster, then the
    # cannot-linked pair T102/T103 cannot share the other.
    data, _ = sample_paths
    rows = [line for line in data.read_text().splitlines() if not line.startswith(("T104", "T105", "T106", "T107", "T108", "T109"))]
    small = tmp_path / "four.csv"
    small.write_text("\n".join(rows) + "\n", encoding="utf-8")
    spec = tmp_path / "tight.json"
    spec.write_text(
        json.dumps(
            {
                "feasibility_threshold": 1,
                "max_cluster_size": 2,
                "cannot_link": [["T102", "T103"]],
            }
        ),
        encoding="utf-8",
    )
    code = run_cli(
        "evaluate", "--data", str(small), "--constraints", str(spec),
        "--k", "2", "--seed", "0",
    )
    err = capsys.readouterr().err
    assert code == 3
    assert "deadlock" in err


def test_check_sample(sample_paths, capsys):
    data, constraints = sample_paths
    code = run_cli("check", "--data", str(data), "--constraints", str(constraints))
    out = capsys.readouterr().out
    assert code == 0
    payload = json.loads(out)
    assert payload["deadlocked"] is False
    assert payload["causes"] == []


def test_check_conflict(sample_paths, tmp_path, capsys):
    data, _ = sample_paths
    spec = tmp_path / "conflict.json"
    spec.write_text(
        json.dumps(
            {
                "feasibility_threshold": 6,
                "must_link": [["T100", "T101"], ["T101", "T102"]],
                "cannot_link": [["T100", "T102"]],
            }
        ),
        encoding="utf-8",
    )
    code = run_cli("check", "--data", str(data), "--constraints", str(spec), "--k", "3")
    out = capsys.readouterr().out
    assert code == 2
    payload = json.loads(out)
    assert payload["deadlocked"] is True
    conflict = next(c for c in payload["causes"] if c["kind"] == "link-conflict")
    assert conflict["witness"]["path"] == ["T100", "T101", "T102"]


def test_check_unknown_id(sample_paths, tmp_path, capsys):
    data, _ = sample_paths
    spec = tmp_path / "unknown.json"
    spec.write_text(
        json.dumps({"feasibility_threshold": 6, "must_link": [["T100", "T999"]]}),
        encoding="utf-8",
    )
    code = run_cli("check", "--data", str(data), "--constraints", str(spec))
    err = capsys.readouterr().err
    assert code == 1
    assert "unknown id T999" in err


def test_verify_sample_within_gap(sample_paths, capsys):
    data, _ = sample_paths
    code = run_cli("verify", "--data", str(data), "--k", "2", "--seed", "0")
    out = capsys.readouterr().out
    assert code == 0
    gap_line = next(line for line in out.splitlines() if line.startswith("gap"))
    gap = float(gap_line.split()[-1].rstrip("%"))
    assert gap <= 5.0
    assert "PASS engine-not-below-oracle" in out


def test_verify_with_constraints_agreement(sample_paths, capsys):
    data, constraints = sample_paths
    code = run_cli(
        "verify", "--data", str(data), "--constraints", str(constraints), "--k", "2",
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "feasibility" in out


def test_verify_capacity_guard(tmp_path, capsys):
    rows = ["id," + ",".join(f"f{i}" for i in range(3)) + ",constraints"]
    rows += [f"C{i},5,5,5,5" for i in range(13)]
    big = tmp_path / "big.csv"
    big.write_text("\n".join(rows) + "\n", encoding="utf-8")
    code = run_cli("verify", "--data", str(big), "--k", "2")
    err = capsys.readouterr().err
    assert code == 4
    assert "capacity" in err.lower()


def test_verify_detects_injected_disagreement(sample_paths, capsys, monkeypatch):
    import cbceval.cli as cli_module

    fake = DeadlockReport(
        deadlocked=True,
        causes=(DeadlockCause(kind="empty-feasible-set", detail="injected fault"),),
    )
    monkeypatch.setattr(cli_module, "detect_deadlock", lambda *a, **kw: fake)
    data, constraints = sample_paths
    code = run_cli(
        "verify", "--data", str(data), "--constraints", str(constraints), "--k", "2",
    )
    out = capsys.readouterr().out
    assert code == 5
    assert "FAIL feasibility-agreement" in out


def test_cluster_with_weights_file(sample_paths, tmp_path, capsys):
    data, _ = sample_paths
    weights = tmp_path / "weights.json"
    weights.write_text(json.dumps({"pay_per_use": 3.0}), encoding="utf-8")
    code = run_cli(
        "cluster", "--data", str(data), "--k", "2", "--seed", "1",
        "--weights", str(weights),
    )
    assert code == 0
    assert json.loads(capsys.readouterr().out)["k"] == 2

    bad = tmp_path / "bad_weights.json"
    bad.write_text(json.dumps({"pay_per_use": "heavy"}), encoding="utf-8")
    code = run_cli(
        "cluster", "--data", str(data), "--k", "2", "--seed", "1",
        "--weights", str(bad),
    )
    assert code == 1


def test_no_color_env(sample_paths, capsys, monkeypatch):
    monkeypatch.setenv("CBC_NO_COLOR", "1")
    data, _ = sample_paths
    code = run_cli("cluster", "--data", str(data), "--k", "11", "--seed", "1")
    err = capsys.readouterr().err
    assert code == 1
    assert "\x1b[" not in err


def test_help_per_command(capsys):
    for command in ("cluster", "evaluate", "check", "verify"):
        with pytest.raises(SystemExit) as exc:
            run_cli(command, "--help")
        assert exc.value.code == 0
        assert command in capsys.readouterr().out
