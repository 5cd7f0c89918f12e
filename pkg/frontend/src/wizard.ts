/**
 * Calibration wizard state machine (DOM-free, so it is unit-testable and
 * drivable by scripted events).
 *
 * Flow: for each of x, y, z the operator is prompted to hold the begin
 * control and sweep the virtual hand along the direction they want that
 * robot axis to follow; releasing sends end_axis. After the third sweep
 * the wizard sends finish and waits for the calibration result. Engine
 * errors surface inline and put the wizard back on the offending axis;
 * a disconnect mid-sweep re-prompts the interrupted axis (sweeps already
 * accepted live in the engine and survive the reconnect).
 */

import {
  Axis,
  CalibrationMessage,
  CalibrationQuality,
  ErrorMessage,
  InboundMessage,
} from "./protocol";

export const AXES: readonly Axis[] = ["x", "y", "z"];

export type WizardPhase = "idle" | "prompt" | "sweeping" | "awaiting_result" | "done";

export interface WizardView {
  phase: WizardPhase;
  axis: Axis | null;
  completed: Axis[];
  error: string | null;
  quality: CalibrationQuality | null;
}

export interface WizardHooks {
  sendControl(action: "begin_axis" | "end_axis" | "finish" | "reset", axis?: Axis): void;
  onChange?(view: WizardView): void;
}

export class CalibrationWizard {
  private phase: WizardPhase = "idle";
  private axisIndex = 0;
  private completed: Axis[] = [];
  private error: string | null = null;
  private quality: CalibrationQuality | null = null;

  constructor(private readonly hooks: WizardHooks) {}

  view(): WizardView {
    return {
      phase: this.phase,
      axis: this.phase === "prompt" || this.phase === "sweeping"
        ? AXES[this.axisIndex]
        : null,
      completed: [...this.completed],
      error: this.error,
      quality: this.quality,
    };
  }

  start(): void {
    this.phase = "prompt";
    this.axisIndex = 0;
    this.completed = [];
    this.error = null;
    this.quality = null;
    this.notify();
  }

  /** The operator presses the sweep control. */
  beginSweep(): void {
    if (this.phase !== "prompt") return;
    this.hooks.sendControl("begin_axis", AXES[this.axisIndex]);
    this.phase = "sweeping";
    this.notify();
  }

  /** The operator releases the sweep control. */
  endSweep(): void {
    if (this.phase !== "sweeping") return;
    this.hooks.sendControl("end_axis");
    this.completed.push(AXES[this.axisIndex]);
    const remaining = AXES.findIndex((a) => !this.completed.includes(a));
    if (remaining >= 0) {
      this.axisIndex = remaining;
      this.phase = "prompt";
    } else {
      this.hooks.sendControl("finish");
      this.phase = "awaiting_result";
    }
    this.notify();
  }

  handleMessage(msg: InboundMessage): void {
    if (msg.type === "calibration") {
      this.handleCalibration(msg);
    } else if (msg.type === "error" && this.phase !== "idle") {
      this.handleError(msg);
    }
  }

  /** Transport dropped; any in-flight sweep is lost and must be redone. */
  handleDisconnect(): void {
    if (this.phase === "sweeping") {
      this.phase = "prompt";
      this.error = "connection lost mid-sweep; sweep this axis again";
      this.notify();
    } else if (this.phase === "awaiting_result") {
      // The finish result may have been lost; re-request on reconnect.
      this.error = "connection lost while calibrating; will retry finish";
      this.notify();
    }
  }

  handleReconnect(): void {
    if (this.phase === "awaiting_result") {
      this.hooks.sendControl("finish");
      this.notify();
    }
  }

  private handleCalibration(msg: CalibrationMessage): void {
    this.quality = msg.quality;
    this.error = null;
    this.phase = "done";
    this.notify();
  }

  private handleError(msg: ErrorMessage): void {
    if (this.phase !== "awaiting_result" && this.phase !== "sweeping") return;
    this.error = msg.message;
    const axis = msg.axis ?? msg.missing_axis;
    if (axis && AXES.includes(axis)) {
      // Redo just the offending axis.
      this.axisIndex = AXES.indexOf(axis);
      this.completed = this.completed.filter((a) => a !== axis);
    } else if (msg.error === "AxesNearParallel" || msg.error === "AxesNearCoplanar") {
      // Joint geometry problem: start over.
      this.axisIndex = 0;
      this.completed = [];
    }
    this.phase = "prompt";
    this.notify();
  }

  private notify(): void {
    this.hooks.onChange?.(this.view());
  }
}
