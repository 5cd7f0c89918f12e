/**
 * Drives the real engine process over the wire: the wizard completes a
 * calibration from scripted UI events, every emitted frame passes schema
 * validation, and the freeze gesture provably halts end-effector motion
 * while the hand cursor keeps moving.
 */

import { ChildProcess, spawn } from "node:child_process";
import { createConnection } from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { EngineClient } from "../src/transport";
import { FrameStreamer, initialHandState, VirtualHandState } from "../src/virtualHand";
import { CalibrationWizard } from "../src/wizard";
import type { EngineStateMessage, InboundMessage } from "../src/protocol";
import { tcpTransport } from "./tcpTransport";

const PYTHON = process.env.PYTHON ?? "python3";
const HOST = "127.0.0.1";
const PORT = 39000 + Math.floor(Math.random() * 2000);

let engine: ChildProcess;
let client: EngineClient;
const inbound: InboundMessage[] = [];
let engineStates: EngineStateMessage[] = [];

function waitForPort(port: number, attempts = 100): Promise<void> {
  return new Promise((resolve, reject) => {
    const tryOnce = (left: number) => {
      const socket = createConnection({ host: HOST, port }, () => {
        socket.destroy();
        resolve();
      });
      socket.on("error", () => {
        socket.destroy();
        if (left <= 0) reject(new Error("engine never came up"));
        else setTimeout(() => tryOnce(left - 1), 100);
      });
    };
    tryOnce(attempts);
  });
}

function waitFor(
  predicate: (msg: InboundMessage) => boolean,
  timeoutMs = 20000,
): Promise<InboundMessage> {
  return new Promise((resolve, reject) => {
    const check = (msg: InboundMessage) => {
      if (predicate(msg)) {
        unsubscribe();
        clearTimeout(timer);
        resolve(msg);
      }
    };
    const unsubscribe = client.onMessage(check);
    const timer = setTimeout(() => {
      unsubscribe();
      reject(new Error("expected message never arrived"));
    }, timeoutMs);
  });
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

beforeAll(async () => {
  engine = spawn(
    PYTHON,
    ["-m", "handteleop.cli", "run", "--listen", `tcp://${HOST}:${PORT}`,
     "--scenario", "peg_in_hole", "--seed", "7"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  engine.stderr?.on("data", () => {});
  await waitForPort(PORT);
  client = new EngineClient(() => tcpTransport(HOST, PORT));
  client.onMessage((msg) => {
    inbound.push(msg);
    if (msg.type === "engine_state") engineStates.push(msg);
  });
  void client.start();
  await waitFor((m) => m.type === "session_info");
});

afterAll(async () => {
  client?.stop();
  engine?.kill("SIGTERM");
  await sleep(200);
  engine?.kill("SIGKILL");
});

describe("console against a live engine", () => {
  const hand: VirtualHandState = initialHandState();
  let clock = 0;
  const streamer = new FrameStreamer(
    (frame) => client.send(frame),
    () => hand,
  );

  /** One scripted 30 Hz input tick: mutate the hand, emit one frame. */
  function uiTick(mutate?: (h: VirtualHandState) => void): void {
    mutate?.(hand);
    clock += 1 / 30;
    streamer.emit(clock);
  }

  it("completes the calibration wizard in under 2 minutes of UI events", async () => {
    const started = Date.now();
    const wizard = new CalibrationWizard({
      sendControl: (action, axis) =>
        client.send({ type: "calib_control", action, axis }),
    });
    const unsubscribe = client.onMessage((msg) => wizard.handleMessage(msg));

    const sweeps: Array<(h: VirtualHandState) => void> = [
      (h) => (h.wrist[0] += 0.01),  // x: drag right
      (h) => (h.wrist[1] += 0.01),  // y: drag down the pad
      (h) => (h.wrist[2] += 0.01),  // z: scroll away
    ];
    wizard.start();
    for (const move of sweeps) {
      expect(wizard.view().phase).toBe("prompt");
      wizard.beginSweep();
      for (let k = 0; k < 40; k++) uiTick(move);
      wizard.endSweep();
    }
    expect(wizard.view().phase).toBe("awaiting_result");
    await waitFor((m) => m.type === "calibration");
    // give the wizard's own listener a microtask to observe the message
    await sleep(0);
    const view = wizard.view();
    unsubscribe();

    expect(view.phase).toBe("done");
    expect(view.quality?.axis_pair_angles).toHaveLength(3);
    for (const angle of view.quality?.axis_pair_angles ?? []) {
      expect(angle).toBeGreaterThan(85);
      expect(angle).toBeLessThan(95);
    }
    const elapsedS = (Date.now() - started) / 1000;
    expect(elapsedS).toBeLessThan(120);     // wall time of the scripted events
    expect(clock).toBeLessThan(120);        // logical duration of the stream
    expect(streamer.validationFailures).toBe(0);
  });

  it("moves the arm during teleop and emits only schema-valid frames", async () => {
    engineStates = [];
    for (let k = 0; k < 15; k++) {
      uiTick((h) => (h.wrist[0] += 0.01));
      await sleep(33);
    }
    await sleep(800); // let latency + servo catch up
    const positions = engineStates
      .filter((s) => s.engaged)
      .map((s) => s.pose.p);
    expect(positions.length).toBeGreaterThan(10);
    const first = positions[0];
    const last = positions[positions.length - 1];
    const moved = Math.hypot(
      last[0] - first[0], last[1] - first[1], last[2] - first[2],
    );
    expect(moved).toBeGreaterThan(0.005);
    expect(streamer.validationFailures).toBe(0);
    expect(streamer.framesSent).toBeGreaterThan(130);
  });

  it("freeze halts end-effector motion while the cursor keeps moving", async () => {
    // Press freeze, keep streaming until the arm settles on the held command.
    hand.freeze = true;
    for (let k = 0; k < 40; k++) {
      uiTick();
      await sleep(25);
    }
    const frozenState = engineStates[engineStates.length - 1];
    expect(frozenState.scaling_mode).toBe("frozen");
    expect(frozenState.alpha).toBe(0);

    // Now move the cursor hard with the freeze held.
    engineStates = [];
    for (let k = 0; k < 45; k++) {
      uiTick((h) => {
        h.wrist[0] += 0.04 * Math.sin(k / 3);
        h.wrist[1] += 0.03;
      });
      await sleep(25);
    }
    const frozenPoses = engineStates.map((s) => s.pose.p);
    expect(frozenPoses.length).toBeGreaterThan(30);
    const reference = frozenPoses[0];
    for (const p of frozenPoses) {
      expect(p).toEqual(reference); // bitwise still: no robot motion at all
    }

    // Releasing the freeze re-engages without a jump and motion resumes.
    hand.freeze = false;
    engineStates = [];
    for (let k = 0; k < 30; k++) {
      uiTick((h) => (h.wrist[1] += 0.015));
      await sleep(25);
    }
    await sleep(800);
    const resumed = engineStates.map((s) => s.pose.p);
    const end = resumed[resumed.length - 1];
    const movedAgain = Math.hypot(
      end[0] - reference[0], end[1] - reference[1], end[2] - reference[2],
    );
    expect(movedAgain).toBeGreaterThan(0.003);
    expect(streamer.validationFailures).toBe(0);
  });
});
