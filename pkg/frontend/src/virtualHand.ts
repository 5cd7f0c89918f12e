/**
 * The virtual hand: a mouse/touch-driven stand-in for a tracked hand.
 *
 * State (wrist position in the synthetic camera frame, orientation, pinch
 * amount, left-hand controls) is rendered into hand frames that satisfy
 * the engine's hand-stream schema: 21 keypoints synthesized around the
 * wrist pixel with gesture distances (thumb-index for the gripper,
 * thumb-pinky for the freeze) placed at pinch-dependent offsets.
 */

import {
  HandFrameMessage,
  HandObject,
  INDEX_TIP,
  PINKY_TIP,
  THUMB_TIP,
  validateFrameObject,
} from "./protocol";

export interface VirtualHandState {
  /** Right wrist position, meters, synthetic camera frame. */
  wrist: [number, number, number];
  /** Right wrist orientation, 9 row-major entries. */
  rotation: number[];
  /** Thumb-index pinch amount: 0 = wide open, 1 = touching. */
  pinch: number;
  /** Left-hand y level driving fast/precise scaling, meters. */
  leftY: number;
  /** Freeze gesture (left thumb-pinky pinch). */
  freeze: boolean;
  /** Whether the left hand is shown to the tracker at all. */
  leftPresent: boolean;
}

export function initialHandState(): VirtualHandState {
  return {
    wrist: [0, 0.2, 0.6],
    rotation: [1, 0, 0, 0, 1, 0, 0, 0, 1],
    pinch: 0,
    leftY: 0.3,
    freeze: false,
    leftPresent: true,
  };
}

/** Open-hand landmark layout, pixels, wrist at the origin, fingers up. */
const HAND_TEMPLATE: ReadonlyArray<readonly [number, number]> = [
  [0, 0],
  [-25, -20], [-45, -40], [-60, -60], [-70, -75],
  [-20, -55], [-25, -85], [-28, -105], [-30, -120],
  [0, -60], [0, -95], [0, -115], [0, -130],
  [18, -55], [22, -88], [25, -108], [27, -122],
  [35, -45], [42, -70], [47, -88], [50, -100],
];

const PINCH_OPEN_PX = 120;
const FREEZE_PX = 5;
const LEFT_OPEN_SPAN_PX = 160;

export function synthesizeKeypoints(
  center: [number, number],
  pinchPx: number,
  thumbPinkyPx?: number,
): number[][] {
  const kp = HAND_TEMPLATE.map(([u, v]) => [u + center[0], v + center[1]]);
  const mid = [
    (kp[THUMB_TIP][0] + kp[INDEX_TIP][0]) / 2,
    (kp[THUMB_TIP][1] + kp[INDEX_TIP][1]) / 2,
  ];
  let gap = [
    kp[INDEX_TIP][0] - kp[THUMB_TIP][0],
    kp[INDEX_TIP][1] - kp[THUMB_TIP][1],
  ];
  const gapLen = Math.hypot(gap[0], gap[1]);
  gap = [gap[0] / gapLen, gap[1] / gapLen];
  kp[THUMB_TIP] = [mid[0] - (gap[0] * pinchPx) / 2, mid[1] - (gap[1] * pinchPx) / 2];
  kp[INDEX_TIP] = [mid[0] + (gap[0] * pinchPx) / 2, mid[1] + (gap[1] * pinchPx) / 2];
  if (thumbPinkyPx !== undefined) {
    let span = [
      kp[PINKY_TIP][0] - kp[THUMB_TIP][0],
      kp[PINKY_TIP][1] - kp[THUMB_TIP][1],
    ];
    const spanLen = Math.hypot(span[0], span[1]);
    span = [span[0] / spanLen, span[1] / spanLen];
    kp[PINKY_TIP] = [
      kp[THUMB_TIP][0] + span[0] * thumbPinkyPx,
      kp[THUMB_TIP][1] + span[1] * thumbPinkyPx,
    ];
  }
  return kp;
}

function rightHand(state: VirtualHandState): HandObject {
  return {
    kp: synthesizeKeypoints([320, 240], (1 - state.pinch) * PINCH_OPEN_PX),
    p: [...state.wrist],
    r: [...state.rotation],
    conf: 1.0,
  };
}

function leftHand(state: VirtualHandState): HandObject {
  return {
    kp: synthesizeKeypoints(
      [160, 240],
      PINCH_OPEN_PX,
      state.freeze ? FREEZE_PX : LEFT_OPEN_SPAN_PX,
    ),
    p: [-0.3, state.leftY, 0.6],
    r: [1, 0, 0, 0, 1, 0, 0, 0, 1],
    conf: 1.0,
  };
}

/** Render the virtual hand into one wire frame at timestamp t (seconds). */
export function makeHandFrame(state: VirtualHandState, t: number): HandFrameMessage {
  return {
    type: "hand_frame",
    t,
    right: rightHand(state),
    left: state.leftPresent ? leftHand(state) : null,
  };
}

/**
 * Streams hand frames at a fixed rate with monotonic timestamps and
 * validates every frame against the schema before it leaves the console.
 */
export class FrameStreamer {
  framesSent = 0;
  validationFailures = 0;
  private lastT = -Infinity;

  constructor(
    private readonly send: (frame: HandFrameMessage) => void,
    private readonly getState: () => VirtualHandState,
  ) {}

  emit(t: number): HandFrameMessage {
    const stamped = Math.max(t, this.lastT); // timestamps never regress
    const frame = makeHandFrame(this.getState(), stamped);
    const problems = validateFrameObject(frame);
    if (problems.length > 0) {
      this.validationFailures += 1;
      throw new Error(`emitted frame failed schema validation: ${problems.join("; ")}`);
    }
    this.lastT = stamped;
    this.framesSent += 1;
    this.send(frame);
    return frame;
  }
}
