import numpy as np
import pytest

from handteleop.geometry import RigidTransform, geodesic_distance, rotation_about_axis
from handteleop.handstream import HandFrame
from handteleop.retarget import (
    GRIPPER_CLOSED,
    GRIPPER_OPEN,
    RetargetCommand,
    RetargetConfig,
    ScalingState,
    reengage,
    translate,
)
from handteleop.simarm import (
    ArmSimulator,
    ArmState,
    ServoConfig,
    check_scenario,
    peg_in_hole_scenario,
    run_episode,
)
from handteleop.synthetic import identity_frames, left_control_hand, right_hand

POSE0 = RigidTransform(np.eye(3), np.zeros(3))


def _cmd(pose, gripper=GRIPPER_OPEN):
    return RetargetCommand(pose=pose, gripper=gripper, alpha_active=0.3, engaged=True)


def test_servo_fixed_point():
    sim = ArmSimulator(ArmState(POSE0), ServoConfig(command_latency=0.0))
    state = sim.step(_cmd(POSE0))
    assert state.pose.almost_equal(POSE0, tol=0.0)


def test_servo_exact_rate_limited_step():
    cfg = ServoConfig(max_linear_speed=0.1, tick=0.1, command_latency=0.0)
    sim = ArmSimulator(ArmState(POSE0), cfg)
    target = RigidTransform(np.eye(3), [1.0, 0.0, 0.0])
    state = sim.step(_cmd(target))
    assert np.allclose(state.pose.translation, [0.01, 0.0, 0.0], atol=1e-15)


def test_servo_latency_delay_line():
    cfg = ServoConfig(command_latency=0.5, tick=0.1, max_linear_speed=10.0)
    sim = ArmSimulator(ArmState(POSE0), cfg)
    target = RigidTransform(np.eye(3), [0.05, 0.0, 0.0])
    state = sim.step(_cmd(target))
    for _ in range(4):
        state = sim.step()
    # first 5 ticks ignore the command...
    assert np.allclose(state.pose.translation, 0.0, atol=1e-15)
    state = sim.step()
    # ...the 6th applies it
    assert np.linalg.norm(state.pose.translation) > 0.0


def test_servo_fifo_order():
    cfg = ServoConfig(command_latency=0.2, tick=0.1, max_linear_speed=1000.0)
    sim = ArmSimulator(ArmState(POSE0), cfg)
    first = RigidTransform(np.eye(3), [1.0, 0.0, 0.0])
    second = RigidTransform(np.eye(3), [0.0, 1.0, 0.0])
    sim.step(_cmd(first))
    sim.step(_cmd(second))
    state = sim.step()  # t=0.3: first matured at t=0.2, second at t=0.3
    positions = [state.pose.translation.copy()]
    state = sim.step()
    positions.append(state.pose.translation.copy())
    # both commands applied, in order, never reordered
    assert np.allclose(positions[-1], [0.0, 1.0, 0.0], atol=1e-12)


def test_servo_respects_speed_limits():
    rng = np.random.default_rng(3)
    cfg = ServoConfig(max_linear_speed=0.15, max_angular_speed=1.0, tick=0.01,
                      command_latency=0.05)
    sim = ArmSimulator(ArmState(POSE0), cfg)
    prev = sim.state.pose
    for k in range(300):
        command = None
        if k % 7 == 0:
            command = _cmd(
                RigidTransform(
                    rotation_about_axis(rng.normal(0, 1, 3) + 1e-9, rng.uniform(-3, 3)),
                    rng.normal(0, 0.5, 3),
                )
            )
        state = sim.step(command)
        dt_pos = np.linalg.norm(state.pose.translation - prev.translation)
        dt_rot = geodesic_distance(prev.rotation, state.pose.rotation)
        assert dt_pos <= cfg.max_linear_speed * cfg.tick + 1e-12
        assert dt_rot <= cfg.max_angular_speed * cfg.tick + 1e-12
        prev = state.pose


def test_servo_tracking_exactness_without_latency():
    cfg = ServoConfig(max_linear_speed=1e9, max_angular_speed=1e9,
                      command_latency=0.0, tick=0.01)
    sim = ArmSimulator(ArmState(POSE0), cfg)
    target = RigidTransform(rotation_about_axis([1, 2, 3], 1.1), [0.3, -0.2, 0.5])
    state = sim.step(_cmd(target, gripper=GRIPPER_CLOSED))
    assert state.pose.almost_equal(target, tol=1e-12)
    assert state.gripper == GRIPPER_CLOSED


def test_jitter_attenuation_through_scaling():
    # Command noise std equals alpha * wrist noise std (the map is linear).
    rng = np.random.default_rng(11)
    cfg = RetargetConfig()
    frames = identity_frames()
    arm = RigidTransform(np.eye(3), [0.4, 0.0, 0.3])
    obs = right_hand([0.0, 0.0, 0.5])
    engagement = reengage(obs, arm, frames, cfg)
    sigma = 0.005
    for alpha, mode in ((cfg.alpha_fast, "fast"), (cfg.alpha_slow, "slow")):
        scaling = ScalingState(mode, alpha)
        noise = rng.normal(0.0, sigma, (10**4, 3))
        commands = np.array(
            [
                translate(obs.wrist_position + n, frames, engagement, scaling, cfg)
                for n in noise
            ]
        )
        measured = commands.std(axis=0).mean()
        assert measured == pytest.approx(alpha * sigma, rel=0.05)


def test_check_scenario_cases():
    scenario = peg_in_hole_scenario()
    at_target = ArmState(scenario.target_pose)
    check = check_scenario(at_target, scenario)
    assert check.success and check.position_error == 0.0 and check.axis_error == 0.0

    off = ArmState(
        RigidTransform(
            scenario.target_pose.rotation,
            scenario.target_pose.translation + [0.0014, 0.0, 0.0],
        )
    )
    assert check_scenario(off, scenario).success  # 1.4 mm < 1.5 mm tolerance

    tilted = ArmState(
        RigidTransform(
            scenario.target_pose.rotation @ rotation_about_axis([1, 0, 0], np.radians(10)),
            scenario.target_pose.translation,
        )
    )
    assert not check_scenario(tilted, scenario).success  # 10 deg > 5 deg


def test_run_episode_empty_stream():
    scenario = peg_in_hole_scenario()
    report = run_episode(
        [], identity_frames(), RetargetConfig(), ServoConfig(), scenario,
        initial_pose=scenario.target_pose, settle_time=0.0,
    )
    assert report.num_frames == 0
    assert report.duration == 0.0
    assert report.success  # started exactly at the target


def test_run_episode_frozen_throughout():
    frozen_left = left_control_hand(wrist_y=0.0, freeze=True)
    rng = np.random.default_rng(5)
    frames = [
        HandFrame(t=0.1 * k, right=right_hand(rng.normal(0, 0.3, 3) + [0, 0, 0.6]),
                  left=frozen_left)
        for k in range(50)
    ]
    start = RigidTransform(np.eye(3), [0.4, 0.0, 0.3])
    report = run_episode(
        frames, identity_frames(), RetargetConfig(), ServoConfig(),
        peg_in_hole_scenario(), initial_pose=start,
    )
    achieved = [entry.achieved.translation for entry in report.log]
    assert np.max(np.linalg.norm(np.asarray(achieved) - start.translation, axis=1)) == 0.0
