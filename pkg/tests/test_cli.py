from __future__ import annotations

import pytest

from face4d import load_model, read_report, read_sequence, validate_model
from face4d.cli import main, resolve_port
from face4d.errors import Face4DError


def run(*argv):
    return main(list(argv))


def gen_model_args(path, seed=7, vertices=400, kid=10, kexp=5, landmarks=24):
    return ["gen-model", "--seed", str(seed), "--vertices", str(vertices),
            "--kid", str(kid), "--kexp", str(kexp), "--landmarks", str(landmarks),
            "--out", str(path)]


def test_gen_model_output_loads_and_validates(tmp_path):
    out = tmp_path / "global.m4dm"
    assert run(*gen_model_args(out)) == 0
    with open(out, "rb") as fh:
        model = load_model(fh)
    validate_model(model)
    assert model.n_landmarks == 24


def test_gen_model_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.m4dm", tmp_path / "b.m4dm"
    assert run(*gen_model_args(a)) == 0
    assert run(*gen_model_args(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_model_invalid_config_exits_2(tmp_path, capsys):
    code = run("gen-model", "--seed", "7", "--vertices", "3", "--kid", "5",
               "--kexp", "1", "--landmarks", "3", "--out", str(tmp_path / "x.m4dm"))
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_gen_sequence_deterministic_and_loadable(tmp_path):
    model_path = tmp_path / "m.m4dm"
    run(*gen_model_args(model_path))
    args = ["gen-sequence", "--model", str(model_path), "--seed", "3",
            "--frames", "12", "--noise", "0.5"]
    a, b = tmp_path / "a.lmk.jsonl", tmp_path / "b.lmk.jsonl"
    assert run(*args, "--out", str(a)) == 0
    assert run(*args, "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    with open(a, "rb") as fh:
        sequence = read_sequence(fh)
    assert len(sequence) == 12


def test_full_pipeline_noiseless(tmp_path, capsys):
    model_path = tmp_path / "m.m4dm"
    seq_path = tmp_path / "s.lmk.jsonl"
    truth_path = tmp_path / "truth.json"
    report_path = tmp_path / "r.fit.jsonl"
    assert run(*gen_model_args(model_path)) == 0
    assert run("gen-sequence", "--model", str(model_path), "--seed", "3",
               "--frames", "10", "--out", str(seq_path),
               "--truth-out", str(truth_path)) == 0
    assert truth_path.exists()
    assert run("fit", "--model", str(model_path), "--sequence", str(seq_path),
               "--out", str(report_path), "--lambda", "1e-8",
               "--alternations", "30") == 0
    with open(report_path, "rb") as fh:
        _, summary = read_report(fh)
    assert summary["mean_rmse"] < 1e-6

    assert run("stats", str(report_path)) == 0
    out = capsys.readouterr().out
    assert "mean RMSE" in out and "jitter" in out


def test_fit_missing_model_exits_2_and_names_path(tmp_path, capsys):
    code = run("fit", "--model", str(tmp_path / "missing.m4dm"),
               "--sequence", str(tmp_path / "s.lmk.jsonl"),
               "--out", str(tmp_path / "r.fit.jsonl"))
    assert code == 2
    assert "missing.m4dm" in capsys.readouterr().err


def test_fit_corrupt_sequence_exits_2(tmp_path, capsys):
    model_path = tmp_path / "m.m4dm"
    run(*gen_model_args(model_path))
    bad = tmp_path / "bad.lmk.jsonl"
    bad.write_bytes(b"not a header\n")
    code = run("fit", "--model", str(model_path), "--sequence", str(bad),
               "--out", str(tmp_path / "r.fit.jsonl"))
    assert code == 2


def test_usage_error_exits_1(capsys):
    with pytest.raises(SystemExit) as exc_info:
        run("gen-model", "--seed", "7", "--frobnicate")
    assert exc_info.value.code == 1
    with pytest.raises(SystemExit) as exc_info:
        run("no-such-command")
    assert exc_info.value.code == 1


def test_stats_missing_report_exits_2(tmp_path, capsys):
    assert run("stats", str(tmp_path / "none.fit.jsonl")) == 2


def test_smoothing_flag_changes_jitter(tmp_path):
    model_path = tmp_path / "m.m4dm"
    seq_path = tmp_path / "s.lmk.jsonl"
    run(*gen_model_args(model_path))
    run("gen-sequence", "--model", str(model_path), "--seed", "3", "--frames", "60",
        "--noise", "1.0", "--out", str(seq_path))
    smooth_report = tmp_path / "smooth.fit.jsonl"
    raw_report = tmp_path / "raw.fit.jsonl"
    assert run("fit", "--model", str(model_path), "--sequence", str(seq_path),
               "--out", str(smooth_report)) == 0
    assert run("fit", "--model", str(model_path), "--sequence", str(seq_path),
               "--out", str(raw_report), "--no-smoothing") == 0
    with open(smooth_report, "rb") as fh:
        _, smooth_summary = read_report(fh)
    with open(raw_report, "rb") as fh:
        _, raw_summary = read_report(fh)
    # --no-smoothing: emitted poses are the raw fits
    assert raw_summary["jitter_smoothed"] == raw_summary["jitter_raw"]
    assert raw_summary["jitter_raw"] >= smooth_summary["jitter_smoothed"]


def test_serve_subprocess_speaks_protocol(tmp_path):
    import json
    import socket
    import subprocess
    import sys
    import time

    from websockets.sync.client import connect

    model_dir = tmp_path / "models"
    model_dir.mkdir()
    run(*gen_model_args(model_dir / "global.m4dm", vertices=120, kid=4, kexp=2, landmarks=10))
    seq_path = tmp_path / "s.lmk.jsonl"
    run("gen-sequence", "--model", str(model_dir / "global.m4dm"), "--seed", "3",
        "--frames", "8", "--out", str(seq_path))

    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    proc = subprocess.Popen(
        [sys.executable, "-m", "face4d.cli", "serve", "--model-dir", str(model_dir),
         "--sequence", str(seq_path), "--port", str(port)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    try:
        conn = None
        for _ in range(50):
            try:
                conn = connect(f"ws://127.0.0.1:{port}/", open_timeout=2)
                break
            except OSError:
                assert proc.poll() is None, proc.stderr.read().decode()
                time.sleep(0.1)
        assert conn is not None, "server never came up"
        hello = json.loads(conn.recv(timeout=5))
        assert hello == {"type": "hello", "protocol": 1}
        info = json.loads(conn.recv(timeout=5))
        assert info["type"] == "model_info" and info["model_id"] == "global"
        conn.close()
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_resolve_port(monkeypatch):
    monkeypatch.delenv("M4D_PORT", raising=False)
    assert resolve_port(None) == 7464
    assert resolve_port(9000) == 9000
    monkeypatch.setenv("M4D_PORT", "8123")
    assert resolve_port(None) == 8123
    assert resolve_port(9000) == 9000   # flag wins
    monkeypatch.setenv("M4D_PORT", "not-a-port")
    with pytest.raises(Face4DError):
        resolve_port(None)
