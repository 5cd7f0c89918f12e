import json
import os
import socket
import subprocess
import sys
import time

import numpy as np
import pytest

from handteleop.handstream import frame_to_obj
from handteleop.session import (
    BindFailure,
    ConfigInvalid,
    EngineCore,
    ReplayNotFound,
    SessionConfig,
    run_replay,
    run_session,
)
from handteleop.synthetic import (
    make_sweep,
    right_hand,
    scripted_session_lines,
    sweep_hand_frames,
)

ENGINE = [sys.executable, "-m", "handteleop.cli"]


def _control(action, axis=None):
    msg = {"type": "calib_control", "action": action}
    if axis:
        msg["axis"] = axis
    return msg


def _frame_msg(frame):
    obj = frame_to_obj(frame)
    obj["type"] = "hand_frame"
    return obj


def _drive_calibration(engine, axes=("x", "y", "z"), length=0.4, t0=0.0):
    directions = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}
    t = t0
    out = []
    for axis in axes:
        out += engine.handle_message(_control("begin_axis", axis))
        sweep = make_sweep(axis, directions[axis], t0=t, length=length)
        for frame in sweep_hand_frames(sweep):
            out += engine.handle_message(_frame_msg(frame))
        t = float(sweep.times[-1]) + 0.1
        out += engine.handle_message(_control("end_axis"))
    return out, t


def test_calibration_protocol_happy_path():
    engine = EngineCore(SessionConfig(replay="unused"))
    out, _ = _drive_calibration(engine)
    assert out == []  # collection is silent
    out = engine.handle_message(_control("finish"))
    assert len(out) == 1 and out[0]["type"] == "calibration"
    assert out[0]["quality"]["axis_pair_angles"] == pytest.approx([90.0] * 3, abs=1e-6)
    assert engine.phase == "calibrated"
    assert engine.operator_frames is not None


def test_calibration_missing_axis_error():
    engine = EngineCore(SessionConfig(replay="unused"))
    _drive_calibration(engine, axes=("x", "y"))
    out = engine.handle_message(_control("finish"))
    assert out[0]["type"] == "error"
    assert out[0]["error"] == "MissingAxis"
    assert out[0]["missing_axis"] == "z"


def test_calibration_degenerate_sweep_allows_retry():
    engine = EngineCore(SessionConfig(replay="unused"))
    # x sweep too small, y and z fine
    engine.handle_message(_control("begin_axis", "x"))
    for frame in sweep_hand_frames(make_sweep("x", (1, 0, 0), length=0.05)):
        engine.handle_message(_frame_msg(frame))
    engine.handle_message(_control("end_axis"))
    _drive_calibration(engine, axes=("y", "z"), t0=10.0)
    out = engine.handle_message(_control("finish"))
    assert out[0]["type"] == "error"
    assert out[0]["error"] == "SweepDegenerate"
    assert out[0]["axis"] == "x"
    assert engine.phase == "idle"  # session stays alive, ready for retry
    # retry just the x sweep
    engine.handle_message(_control("begin_axis", "x"))
    for frame in sweep_hand_frames(make_sweep("x", (1, 0, 0), t0=100.0)):
        engine.handle_message(_frame_msg(frame))
    engine.handle_message(_control("end_axis"))
    out = engine.handle_message(_control("finish"))
    assert out[0]["type"] == "calibration"


def test_teleop_after_calibration_moves_arm():
    engine = EngineCore(SessionConfig(replay="unused"))
    _, t = _drive_calibration(engine)
    engine.handle_message(_control("finish"))
    start = engine.sim.state.pose.translation.copy()
    engine.handle_message(_frame_msg_from_wrist(t + 0.1, [0.0, 0.1, 0.6]))
    engine.advance_to(t + 2.0)
    engine.handle_message(_frame_msg_from_wrist(t + 2.1, [0.3, 0.1, 0.6]))
    engine.advance_to(t + 6.0)
    moved = engine.sim.state.pose.translation - start
    assert moved[0] == pytest.approx(0.3 * 0.3, abs=1e-6)  # alpha_fast * 30 cm


def _frame_msg_from_wrist(t, wrist):
    obj = frame_to_obj(
        __import__("handteleop.handstream", fromlist=["HandFrame"]).HandFrame(
            t=t, right=right_hand(wrist)
        )
    )
    obj["type"] = "hand_frame"
    return obj


def test_engine_rejects_and_counts_bad_input():
    engine = EngineCore(SessionConfig(replay="unused"))
    out = engine.handle_line("{broken json")
    assert out[0]["type"] == "error"
    out = engine.handle_message({"type": "hand_frame", "t": "NaN"})
    assert out[0]["type"] == "error"
    out = engine.handle_message(_frame_msg_from_wrist(5.0, [0, 0, 0.5]))
    assert out == []
    out = engine.handle_message(_frame_msg_from_wrist(4.0, [0, 0, 0.5]))  # regression
    assert out[0]["type"] == "error"
    assert engine.frames_rejected == 3


def test_state_messages_have_increasing_timestamps():
    engine = EngineCore(SessionConfig(replay="unused"))
    stamps = [engine.tick()["t"] for _ in range(20)]
    assert all(b > a for a, b in zip(stamps, stamps[1:]))
    msg = engine.state_message()
    assert msg["type"] == "engine_state"
    assert set(msg) >= {"pose", "commanded", "gripper", "alpha", "scaling_mode",
                        "engaged", "calibration_phase"}


# -- replay ------------------------------------------------------------------------

def test_replay_determinism(tmp_path):
    session_file = tmp_path / "session.jsonl"
    session_file.write_text("\n".join(scripted_session_lines(30.0, seed=3)) + "\n")
    reports = []
    for run in range(2):
        out_path = tmp_path / f"report{run}.json"
        with open(out_path, "w") as out:
            run_replay(
                SessionConfig(replay=str(session_file), scenario="peg_in_hole"),
                out=out,
            )
        reports.append(out_path.read_bytes())
    assert reports[0] == reports[1]
    report = json.loads(reports[0])
    assert report["calibrated"] is True
    assert report["frames_in"] > 0


def test_replay_missing_file():
    with pytest.raises(ReplayNotFound):
        run_replay(SessionConfig(replay="/nonexistent/path.jsonl"))


def test_config_requires_exactly_one_source():
    with pytest.raises(ConfigInvalid):
        run_session(SessionConfig())
    with pytest.raises(ConfigInvalid):
        run_session(SessionConfig(listen="tcp://127.0.0.1:1", replay="x"))


def test_record_during_replay_reproduces_input(tmp_path):
    session_file = tmp_path / "session.jsonl"
    lines = scripted_session_lines(12.0, seed=5)
    session_file.write_text("\n".join(lines) + "\n")
    record_file = tmp_path / "record.jsonl"
    run_replay(
        SessionConfig(replay=str(session_file), record=str(record_file))
    )
    assert record_file.read_text() == session_file.read_text()


# -- CLI ---------------------------------------------------------------------------

def test_cli_exit_code_config_invalid():
    proc = subprocess.run(
        ENGINE + ["run"], capture_output=True, text=True, timeout=60
    )
    assert proc.returncode == 4


def test_cli_exit_code_replay_not_found():
    proc = subprocess.run(
        ENGINE + ["run", "--replay", "/no/such/file.jsonl"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 3


def test_cli_exit_code_bind_failure():
    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        proc = subprocess.run(
            ENGINE + ["run", "--listen", f"tcp://127.0.0.1:{port}"],
            capture_output=True, text=True, timeout=60,
        )
        assert proc.returncode == 2
    finally:
        blocker.close()


def test_cli_replay_report_and_log(tmp_path):
    session_file = tmp_path / "session.jsonl"
    session_file.write_text("\n".join(scripted_session_lines(15.0, seed=2)) + "\n")
    log_file = tmp_path / "trajectory.jsonl"
    proc = subprocess.run(
        ENGINE
        + [
            "run", "--replay", str(session_file),
            "--scenario", "peg_in_hole", "--seed", "1",
            "--log", str(log_file),
        ],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    report = json.loads(proc.stdout)
    assert report["calibrated"] is True
    assert report["scenario"]["kind"] == "peg_in_hole"
    assert log_file.exists()

    summary = subprocess.run(
        ENGINE + ["report", str(log_file)], capture_output=True, text=True, timeout=60
    )
    assert summary.returncode == 0
    assert "episode summary" in summary.stdout
    assert "scaling factor" in summary.stdout


def test_cli_calibrate_check(tmp_path):
    sweeps_file = tmp_path / "sweeps.jsonl"
    sweeps_file.write_text("\n".join(scripted_session_lines(31.0, seed=4)) + "\n")
    proc = subprocess.run(
        ENGINE + ["calibrate-check", str(sweeps_file)],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0, proc.stderr
    assert "operator frame quality" in proc.stdout
    assert "axis pair angles" in proc.stdout


# -- live socket -----------------------------------------------------------------------

def _free_port():
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def _connect_with_retry(port, attempts=50):
    for _ in range(attempts):
        try:
            return socket.create_connection(("127.0.0.1", port), timeout=1.0)
        except OSError:
            time.sleep(0.1)
    raise RuntimeError("engine never came up")


def test_live_tcp_session_calibrate_and_teleop(tmp_path):
    port = _free_port()
    record_file = tmp_path / "live_record.jsonl"
    proc = subprocess.Popen(
        ENGINE + ["run", "--listen", f"tcp://127.0.0.1:{port}",
                  "--record", str(record_file)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE,
    )
    try:
        sock = _connect_with_retry(port)
        reader = sock.makefile("r", encoding="utf-8")

        def send(obj):
            sock.sendall((json.dumps(obj) + "\n").encode())

        def wait_for(predicate, timeout=20.0):
            deadline = time.monotonic() + timeout
            while time.monotonic() < deadline:
                line = reader.readline()
                if not line:
                    break
                msg = json.loads(line)
                if predicate(msg):
                    return msg
            raise AssertionError("expected message never arrived")

        hello = wait_for(lambda m: m["type"] == "session_info")
        assert hello["calibration_phase"] == "idle"

        directions = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}
        t = 0.0
        for axis, d in directions.items():
            send(_control("begin_axis", axis))
            sweep = make_sweep(axis, d, t0=t, n=40)
            for frame in sweep_hand_frames(sweep):
                send(_frame_msg(frame))
            t = float(sweep.times[-1]) + 0.1
            send(_control("end_axis"))
        send(_control("finish"))
        calib = wait_for(lambda m: m["type"] == "calibration")
        assert calib["quality"]["axis_pair_angles"] == pytest.approx([90.0] * 3, abs=1e-6)

        send(_frame_msg_from_wrist(t + 0.1, [0.0, 0.1, 0.6]))
        engaged = wait_for(lambda m: m["type"] == "engine_state" and m["engaged"])
        assert engaged["calibration_phase"] == "calibrated"
        assert engaged["alpha"] == 0.3
        sock.close()
        time.sleep(0.3)
        assert record_file.exists() and record_file.read_text().strip()
    finally:
        proc.terminate()
        proc.wait(timeout=10)
