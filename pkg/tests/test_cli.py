import dataclasses
import json

import pytest

from quantum_leakage.cli import main as cli
from quantum_leakage.cli.main import EXIT_BOUND_VIOLATION, EXIT_CONFIG, EXIT_INPUT, EXIT_NOT_CONVERGED, main
from quantum_leakage.core.inference import AUDIT_COLUMNS

S = 0.7071067811865476


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_leakage_basis(capsys):
    assert main(["leakage", "--ensemble", "basis", "--alphabet", "4", "--dim", "4"]) == 0
    payload = _json_out(capsys)
    assert payload["leakage_bits"] == pytest.approx(2.0, abs=1e-9)
    assert payload["converged"] is True
    assert len(payload["assignment"]) == len(payload["povm"])


def test_leakage_single_label_is_zero(capsys):
    assert main(["leakage", "--ensemble", "random", "--alphabet", "1", "--dim", "3"]) == 0
    assert _json_out(capsys)["leakage_bits"] == pytest.approx(0.0, abs=1e-12)


def test_leakage_from_file(tmp_path, capsys):
    path = tmp_path / "pair.json"
    path.write_text(json.dumps({
        "alphabet": [0, 1],
        "dim": 2,
        "states": [{"dim": 2, "re": [1.0, 0.0], "im": [0.0, 0.0]},
                   {"dim": 2, "re": [S, S], "im": [0.0, 0.0]}],
    }))
    main(["leakage", "--ensemble", "file", "--ensemble-file", str(path)])
    assert _json_out(capsys)["leakage_bits"] == pytest.approx(0.771553, abs=1e-5)


def test_leakage_writes_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(["leakage", "--alphabet", "2", "--dim", "2", "--trace", str(trace)]) == 0
    assert trace.read_text().splitlines()[0] == "iteration,objective,leakage_bits"


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"ensemble": "basis", "alphabet": 2, "dim": 2}))
    assert main(["leakage", "--config", str(cfg), "--alphabet", "4", "--dim", "4"]) == 0
    assert _json_out(capsys)["leakage_bits"] == pytest.approx(2.0, abs=1e-9)


def test_bad_config_exits_one(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["leakage", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["leakage", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["leakage", "--dim", "0"]) == EXIT_CONFIG


def test_invalid_input_exits_two(tmp_path):
    assert main(["leakage", "--ensemble", "basis", "--alphabet", "3", "--dim", "2"]) == EXIT_INPUT
    assert main(["leakage", "--ensemble", "file"]) == EXIT_INPUT
    assert main(["sweep", "--qubits", "3:1"]) == EXIT_INPUT


def test_not_converged_exits_three(mocker, capsys):
    real = cli.compute_leakage
    mocker.patch.object(cli, "compute_leakage",
                        side_effect=lambda *a, **k: dataclasses.replace(real(*a, **k), converged=False))
    assert main(["leakage", "--alphabet", "2", "--dim", "2"]) == EXIT_NOT_CONVERGED
    assert _json_out(capsys)["converged"] is False


def test_optimize_writes_outputs(tmp_path, capsys):
    out = tmp_path / "runs"
    argv = ["optimize", "--alphabet", "2", "--dim", "2", "--restarts", "1", "--iters", "0", "--out", str(out)]
    assert main(argv) == 0
    report = _json_out(capsys)
    assert report["best_restart"] == 0
    assert (out / "runs.csv").read_text().splitlines()[0] == "run_id,iteration,leakage_bits"
    assert (out / "summary.csv").read_text().splitlines()[0] == "iteration,median_bits,min_bits,max_bits"
    best = json.loads((out / "best_ensemble.json").read_text())
    assert best["dim"] == 2 and len(best["states"]) == 2


def test_sweep_prints_csv(capsys):
    assert main(["sweep", "--alphabet", "2", "--qubits", "1:1", "--iters", "1", "--restarts", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "qubits,leakage_bits"
    qubits, bits = lines[1].split(",")
    assert qubits == "1"
    assert float(bits) == pytest.approx(1.0, abs=1e-6)


def test_verify_without_trials_writes_header(capsys):
    assert main(["verify", "--trials", "0"]) == 0
    assert capsys.readouterr().out.splitlines() == [",".join(AUDIT_COLUMNS)]


def test_verify_small_run(tmp_path):
    out = tmp_path / "audit.csv"
    assert main(["verify", "--trials", "3", "--dim-max", "2", "--alphabet-max", "2", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4


def test_verify_counterexample(capsys):
    assert main(["verify", "--counterexample", "--counterexample-dim", "4"]) == 0
    report = _json_out(capsys)
    assert report["dim"] == 4
    assert report["corrected_holds"] is True
    assert report["literal_holds"] is False


def test_verify_violation_exits_four(mocker, capsys):
    frame = cli.audit_sweep(1, 2, 2, 0)
    frame.loc[:, "corrected_holds"] = False
    mocker.patch.object(cli, "audit_sweep", return_value=frame)
    assert main(["verify", "--trials", "1"]) == EXIT_BOUND_VIOLATION


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["verify", "--trials", "2", "--dim-max", "2", "--alphabet-max", "2", "--seed", "5",
                     "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_unreadable_ensemble_file_exits_two(tmp_path):
    missing = tmp_path / "missing.json"
    assert main(["leakage", "--ensemble", "file", "--ensemble-file", str(missing)]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"states": 3}))
    assert main(["leakage", "--ensemble", "file", "--ensemble-file", str(bad)]) == EXIT_INPUT
