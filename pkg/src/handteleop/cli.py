"""`engine` command line: run live or replay sessions, check calibration
recordings, and summarize episode logs."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .calibration import (
    AXES,
    CalibrationError,
    CalibrationSweep,
    calibrate,
    frame_quality_report,
)
from .geometry import RigidTransform, geodesic_distance
from .session import ConfigInvalid, SessionError, load_config, run_session

LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging():
    level = os.environ.get("ENGINE_LOG_LEVEL", "warn").lower()
    logging.basicConfig(
        level=LOG_LEVELS.get(level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    cfg.listen = args.listen
    cfg.replay = args.replay
    cfg.record = args.record
    cfg.log_path = args.log
    if args.scenario is not None:
        cfg.scenario = args.scenario
    if args.seed is not None:
        cfg.seed = args.seed
    return run_session(cfg, out=sys.stdout)


def _cmd_calibrate_check(args) -> int:
    sweeps: dict[str, list] = {}
    active = None
    finished = False
    with open(args.sweeps, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            kind = obj.get("type", "hand_frame")
            if kind == "calib_control":
                action = obj.get("action")
                if action == "begin_axis":
                    active = obj.get("axis")
                    sweeps[active] = []
                elif action == "end_axis":
                    active = None
                elif action == "finish":
                    finished = True
                    active = None
            elif kind == "hand_frame" and active is not None:
                right = obj.get("right")
                if right is not None:
                    sweeps[active].append(
                        (float(obj["t"]), np.asarray(right["p"], dtype=float))
                    )
    missing = [a for a in AXES if not sweeps.get(a)]
    if missing:
        print(f"error: no sweep recorded for axis {missing[0]}", file=sys.stderr)
        return 1
    if not finished:
        print("note: recording has no finish message; checking anyway", file=sys.stderr)
    try:
        frames = calibrate(
            [CalibrationSweep.from_samples(a, sweeps[a]) for a in AXES]
        )
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return 1
    print(frame_quality_report(frames))
    return 0


def _pose_from_obj(obj) -> RigidTransform:
    return RigidTransform(
        np.asarray(obj["r"], dtype=float).reshape(3, 3),
        np.asarray(obj["p"], dtype=float),
    )


def _cmd_report(args) -> int:
    entries = []
    with open(args.log, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    if not entries:
        print("empty log", file=sys.stderr)
        return 1

    duration = entries[-1]["t"] - entries[0]["t"]
    alpha_ticks: dict[float, int] = {}
    path_length = 0.0
    max_gap = 0.0
    gripper_changes = 0
    prev_pos = None
    prev_gripper = None
    for e in entries:
        alpha_ticks[e["alpha"]] = alpha_ticks.get(e["alpha"], 0) + 1
        achieved = _pose_from_obj(e["achieved"])
        if prev_pos is not None:
            path_length += float(np.linalg.norm(achieved.translation - prev_pos))
        prev_pos = achieved.translation
        if e["commanded"] is not None:
            commanded = _pose_from_obj(e["commanded"])
            gap = float(
                np.linalg.norm(commanded.translation - achieved.translation)
            )
            max_gap = max(max_gap, gap)
        if prev_gripper is not None and e["gripper"] != prev_gripper:
            gripper_changes += 1
        prev_gripper = e["gripper"]

    last = entries[-1]
    print("episode summary")
    print(f"  ticks: {len(entries)}   duration: {duration:.2f} s")
    print(f"  end-effector path length: {path_length:.3f} m")
    print(f"  max command-vs-achieved gap: {max_gap * 1000:.1f} mm")
    print(f"  gripper transitions: {gripper_changes}   final: {last['gripper']}")
    print("  time share by scaling factor:")
    total = len(entries)
    for alpha in sorted(alpha_ticks, reverse=True):
        print(f"    alpha={alpha:g}: {100.0 * alpha_ticks[alpha] / total:.1f}%")
    if last["commanded"] is not None:
        commanded = _pose_from_obj(last["commanded"])
        achieved = _pose_from_obj(last["achieved"])
        gap = float(np.linalg.norm(commanded.translation - achieved.translation))
        ang = geodesic_distance(commanded.rotation, achieved.rotation)
        print(
            f"  final tracking error: {gap * 1000:.2f} mm, {np.degrees(ang):.2f} deg"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="engine", description="hand-teleoperation retargeting engine"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a live or replayed session")
    run.add_argument("--listen", help="tcp://host:port or ws://host:port")
    run.add_argument("--replay", help="recorded session file (JSON Lines)")
    run.add_argument("--record", help="record inbound messages to this file")
    run.add_argument("--config", help="session config JSON file")
    run.add_argument("--scenario", help="scenario name, e.g. peg_in_hole")
    run.add_argument("--seed", type=int, help="random seed (RANSAC etc.)")
    run.add_argument("--log", help="write per-tick trajectory log (JSON Lines)")
    run.set_defaults(func=_cmd_run)

    check = sub.add_parser(
        "calibrate-check", help="fit and grade a recorded calibration session"
    )
    check.add_argument("sweeps", help="recorded sweeps (JSON Lines)")
    check.set_defaults(func=_cmd_calibrate_check)

    report = sub.add_parser("report", help="summarize an episode trajectory log")
    report.add_argument("log", help="trajectory log (JSON Lines)")
    report.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SessionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
