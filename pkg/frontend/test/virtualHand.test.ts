import { describe, expect, it } from "vitest";

import {
  INDEX_TIP,
  PINKY_TIP,
  THUMB_TIP,
  validateFrameObject,
} from "../src/protocol";
import {
  FrameStreamer,
  initialHandState,
  makeHandFrame,
  synthesizeKeypoints,
} from "../src/virtualHand";

function dist(a: number[], b: number[]): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1]);
}

describe("keypoint synthesis", () => {
  it("places thumb and index tips at the requested pinch distance", () => {
    for (const px of [0, 20, 60, 120]) {
      const kp = synthesizeKeypoints([320, 240], px);
      expect(dist(kp[THUMB_TIP], kp[INDEX_TIP])).toBeCloseTo(px, 6);
      expect(kp).toHaveLength(21);
    }
  });

  it("places the pinky tip for the freeze gesture", () => {
    const kp = synthesizeKeypoints([160, 240], 120, 5);
    expect(dist(kp[THUMB_TIP], kp[PINKY_TIP])).toBeCloseTo(5, 6);
  });
});

describe("frame synthesis", () => {
  it("emits schema-valid frames for the whole control range", () => {
    const state = initialHandState();
    for (const pinch of [0, 0.33, 1]) {
      for (const freeze of [false, true]) {
        for (const leftPresent of [true, false]) {
          state.pinch = pinch;
          state.freeze = freeze;
          state.leftPresent = leftPresent;
          state.wrist = [Math.random() - 0.5, Math.random() - 0.5, 0.4 + Math.random()];
          const frame = makeHandFrame(state, 1.25);
          expect(validateFrameObject(frame)).toEqual([]);
          expect(frame.right?.p).toEqual(state.wrist);
          expect(frame.left === null).toBe(!leftPresent);
        }
      }
    }
  });

  it("round-trips through JSON untouched", () => {
    const frame = makeHandFrame(initialHandState(), 0.5);
    const decoded = JSON.parse(JSON.stringify(frame));
    expect(validateFrameObject(decoded)).toEqual([]);
    expect(decoded).toEqual(frame);
  });
});

describe("FrameStreamer", () => {
  it("keeps timestamps monotonic and validates every emitted frame", () => {
    const state = initialHandState();
    const sent: number[] = [];
    const streamer = new FrameStreamer((f) => sent.push(f.t), () => state);
    streamer.emit(0.0);
    streamer.emit(0.1);
    streamer.emit(0.05); // a clock hiccup must not regress the stream
    streamer.emit(0.2);
    expect(sent).toEqual([0.0, 0.1, 0.1, 0.2]);
    expect(streamer.framesSent).toBe(4);
    expect(streamer.validationFailures).toBe(0);
  });

  it("refuses to send a frame that fails validation", () => {
    const state = initialHandState();
    state.wrist = [Number.NaN, 0, 0.5];
    const streamer = new FrameStreamer(() => {}, () => state);
    expect(() => streamer.emit(0)).toThrow(/schema validation/);
    expect(streamer.validationFailures).toBe(1);
    expect(streamer.framesSent).toBe(0);
  });
});

describe("frame schema validator", () => {
  it("mirrors the engine-side checks", () => {
    expect(validateFrameObject({ t: 1, right: null, left: null })).toEqual([]);
    expect(validateFrameObject({ t: "x" })).toContain("t must be a finite number");
    const bad = makeHandFrame(initialHandState(), 0) as unknown as {
      right: { kp: number[][] };
    };
    bad.right.kp = bad.right.kp.slice(0, 5);
    expect(validateFrameObject(bad)).toContain("right.kp must be 21 [u, v] pairs");
  });
});
