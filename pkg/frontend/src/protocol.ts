/**
 * Wire protocol spoken with the teleoperation engine.
 *
 * One duplex channel, JSON messages: the console sends hand_frame and
 * calib_control, the engine answers with session_info, engine_state,
 * calibration and error messages. The hand-frame schema validator here
 * mirrors the engine's: every frame the console emits must pass it.
 */

export type Axis = "x" | "y" | "z";

export interface PoseObject {
  r: number[]; // 9 row-major rotation entries
  p: number[]; // translation, meters
}

export interface HandObject {
  kp: number[][]; // 21 [u, v] pixel pairs
  p: number[];    // wrist position, meters, camera frame
  r: number[];    // 9 row-major wrist rotation entries
  conf: number;   // 0..1
}

export interface HandFrameMessage {
  type: "hand_frame";
  t: number;
  right: HandObject | null;
  left: HandObject | null;
}

export interface CalibControlMessage {
  type: "calib_control";
  action: "begin_axis" | "end_axis" | "finish" | "reset";
  axis?: Axis;
}

export interface SessionInfoMessage {
  type: "session_info";
  tick: number;
  calibration_phase: string;
  scenario: {
    kind: string;
    target_pose: PoseObject;
    position_tolerance: number;
    axis_tolerance: number;
  } | null;
}

export interface EngineStateMessage {
  type: "engine_state";
  t: number;
  pose: PoseObject;
  commanded: PoseObject | null;
  gripper: "open" | "closed";
  alpha: number;
  scaling_mode: "fast" | "slow" | "frozen";
  engaged: boolean;
  calibration_phase: string;
}

export interface CalibrationQuality {
  axis_pair_angles: number[];
  residual_rms: number[];
  origin_residual: number;
  basis_det: number;
  warnings: string[];
}

export interface CalibrationMessage {
  type: "calibration";
  frames: unknown;
  quality: CalibrationQuality;
}

export interface ErrorMessage {
  type: "error";
  error: string;
  message: string;
  axis?: Axis;
  missing_axis?: Axis;
}

export type InboundMessage =
  | SessionInfoMessage
  | EngineStateMessage
  | CalibrationMessage
  | ErrorMessage;

export type OutboundMessage = HandFrameMessage | CalibControlMessage;

export const NUM_KEYPOINTS = 21;
export const WRIST = 0;
export const THUMB_TIP = 4;
export const INDEX_TIP = 8;
export const PINKY_TIP = 20;

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function handProblems(side: string, hand: unknown): string[] {
  if (hand === null) return [];
  if (typeof hand !== "object" || hand === undefined) {
    return [`${side} must be an object or null`];
  }
  const problems: string[] = [];
  const h = hand as Record<string, unknown>;
  const kp = h.kp;
  if (
    !Array.isArray(kp) ||
    kp.length !== NUM_KEYPOINTS ||
    kp.some((pt) => !Array.isArray(pt) || pt.length !== 2 || !pt.every(isFiniteNumber))
  ) {
    problems.push(`${side}.kp must be 21 [u, v] pairs`);
  }
  if (!Array.isArray(h.p) || h.p.length !== 3 || !h.p.every(isFiniteNumber)) {
    problems.push(`${side}.p must be a 3-vector`);
  }
  if (!Array.isArray(h.r) || h.r.length !== 9 || !h.r.every(isFiniteNumber)) {
    problems.push(`${side}.r must be 9 row-major reals`);
  }
  if (!isFiniteNumber(h.conf) || h.conf < 0 || h.conf > 1) {
    problems.push(`${side}.conf must be in [0, 1]`);
  }
  return problems;
}

/** Schema check for a hand frame; returns a list of problems (empty = valid). */
export function validateFrameObject(obj: unknown): string[] {
  if (typeof obj !== "object" || obj === null) {
    return ["frame must be a JSON object"];
  }
  const frame = obj as Record<string, unknown>;
  const problems: string[] = [];
  if (!isFiniteNumber(frame.t)) {
    problems.push("t must be a finite number");
  }
  problems.push(...handProblems("right", frame.right ?? null));
  problems.push(...handProblems("left", frame.left ?? null));
  return problems;
}

export function decodeInbound(line: string): InboundMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const type = (obj as Record<string, unknown>).type;
  if (
    type === "session_info" ||
    type === "engine_state" ||
    type === "calibration" ||
    type === "error"
  ) {
    return obj as InboundMessage;
  }
  return null;
}

export function encode(msg: OutboundMessage): string {
  return JSON.stringify(msg);
}
