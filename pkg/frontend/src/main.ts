/**
 * Operator console: wires the engine connection, calibration wizard,
 * virtual-hand input pad, HUD indicators and the 3D teleop view together.
 *
 * All control math lives server-side; the console can be killed and
 * reloaded at any moment without touching engine state.
 */

import { EngineStateMessage, InboundMessage } from "./protocol";
import { EngineClient, webSocketTransport } from "./transport";
import { FrameStreamer, initialHandState } from "./virtualHand";
import { CalibrationWizard, WizardView } from "./wizard";
import { TeleopScene } from "./scene";

const FRAME_RATE_HZ = 30;
const STALE_AFTER_MS = 1000;
const PAD_METERS_PER_PX = 0.0022;
const WHEEL_METERS_PER_STEP = 0.01;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function main(): void {
  const params = new URLSearchParams(location.search);
  const url = params.get("engine") ?? "ws://127.0.0.1:8765";

  const hand = initialHandState();
  const client = new EngineClient(() => webSocketTransport(url));
  const streamer = new FrameStreamer((frame) => client.send(frame), () => hand);
  const scene = new TeleopScene(el<HTMLCanvasElement>("view"));

  const wizard = new CalibrationWizard({
    sendControl: (action, axis) =>
      client.send({ type: "calib_control", action, axis }),
    onChange: renderWizard,
  });

  // -- connection + staleness banners ---------------------------------------

  const banner = el<HTMLDivElement>("banner");
  let lastStateAt = 0;
  client.onStatus((status) => {
    if (status === "connected") {
      banner.className = "banner hidden";
      wizard.handleReconnect();
    } else {
      banner.textContent = "engine connection lost - reconnecting...";
      banner.className = "banner error";
      wizard.handleDisconnect();
    }
  });
  setInterval(() => {
    if (client.status !== "connected") return;
    const stale = performance.now() - lastStateAt > STALE_AFTER_MS;
    if (stale) {
      banner.textContent = "engine state stale (no message for > 1 s)";
      banner.className = "banner warn";
    } else if (banner.classList.contains("warn")) {
      banner.className = "banner hidden";
    }
  }, 250);

  // -- inbound messages --------------------------------------------------------

  const alphaRing = el<HTMLDivElement>("alpha-ring");
  const modeLabel = el<HTMLSpanElement>("mode-label");
  const gripperLabel = el<HTMLSpanElement>("gripper-label");
  const engagedLabel = el<HTMLSpanElement>("engaged-label");

  function renderEngineState(state: EngineStateMessage): void {
    lastStateAt = performance.now();
    scene.update(state);
    modeLabel.textContent = `${state.scaling_mode} (alpha ${state.alpha})`;
    modeLabel.dataset.mode = state.scaling_mode;
    // The ring diameter tracks how far the hand reaches per unit arm motion.
    const scale = state.alpha === 0 ? 0.12 : Math.max(0.25, Math.min(1, state.alpha / 0.3));
    alphaRing.style.transform = `scale(${scale})`;
    alphaRing.dataset.mode = state.scaling_mode;
    gripperLabel.textContent = state.gripper;
    gripperLabel.dataset.state = state.gripper;
    engagedLabel.textContent = state.engaged ? "engaged" : "idle";
  }

  client.onMessage((msg: InboundMessage) => {
    wizard.handleMessage(msg);
    if (msg.type === "engine_state") {
      renderEngineState(msg);
    } else if (msg.type === "session_info") {
      scene.setScenario(msg.scenario);
    } else if (msg.type === "error") {
      console.warn("engine error:", msg.error, msg.message);
    }
  });

  // -- wizard panel --------------------------------------------------------------

  const wizardPrompt = el<HTMLParagraphElement>("wizard-prompt");
  const wizardError = el<HTMLParagraphElement>("wizard-error");
  const wizardQuality = el<HTMLPreElement>("wizard-quality");
  const sweepButton = el<HTMLButtonElement>("sweep-button");
  const startButton = el<HTMLButtonElement>("wizard-start");

  const axisHints: Record<string, string> = {
    x: "drag the hand pad left-to-right (the robot's +x)",
    y: "drag the hand pad bottom-to-top (the robot's +y)",
    z: "scroll / shift-drag away from you (the robot's +z)",
  };

  function renderWizard(view: WizardView): void {
    wizardError.textContent = view.error ?? "";
    sweepButton.disabled = view.phase !== "prompt" && view.phase !== "sweeping";
    sweepButton.textContent =
      view.phase === "sweeping" ? `sweeping ${view.axis}... release to stop` : "hold to sweep";
    switch (view.phase) {
      case "idle":
        wizardPrompt.textContent = "define the operator frame with three wrist sweeps";
        break;
      case "prompt":
        wizardPrompt.textContent =
          `axis ${view.axis}: hold the sweep button and ${axisHints[view.axis ?? "x"]}`;
        break;
      case "sweeping":
        wizardPrompt.textContent = `sweeping ${view.axis} - keep the motion straight`;
        break;
      case "awaiting_result":
        wizardPrompt.textContent = "fitting operator frames...";
        break;
      case "done": {
        wizardPrompt.textContent = "calibrated - you are driving the arm";
        const q = view.quality;
        if (q) {
          wizardQuality.textContent = [
            `pair angles: ${q.axis_pair_angles.map((a) => a.toFixed(1)).join(" / ")} deg`,
            `sweep residuals: ${q.residual_rms.map((r) => (r * 1000).toFixed(1)).join(" / ")} mm`,
            `origin residual: ${(q.origin_residual * 1000).toFixed(1)} mm`,
            q.warnings.length ? `warnings: ${q.warnings.join("; ")}` : "no warnings",
          ].join("\n");
        }
        break;
      }
    }
  }

  startButton.onclick = () => wizard.start();
  sweepButton.onpointerdown = () => wizard.beginSweep();
  sweepButton.onpointerup = () => wizard.endSweep();
  sweepButton.onpointerleave = () => wizard.endSweep();

  // -- virtual hand input -----------------------------------------------------------

  const pad = el<HTMLDivElement>("hand-pad");
  const cursor = el<HTMLDivElement>("hand-cursor");
  const depthLabel = el<HTMLSpanElement>("depth-label");
  let dragging = false;
  let shiftDepth = false;
  let lastX = 0;
  let lastY = 0;

  function renderCursor(): void {
    // Pad shows the camera's x-y plane; wrist x right, y down (camera frame).
    const rect = pad.getBoundingClientRect();
    const px = rect.width / 2 + hand.wrist[0] / PAD_METERS_PER_PX / 4;
    const py = rect.height / 2 + hand.wrist[1] / PAD_METERS_PER_PX / 4;
    cursor.style.left = `${Math.max(0, Math.min(rect.width, px))}px`;
    cursor.style.top = `${Math.max(0, Math.min(rect.height, py))}px`;
    cursor.style.setProperty("--pinch", `${1 - hand.pinch}`);
    depthLabel.textContent = `z = ${hand.wrist[2].toFixed(2)} m`;
  }

  pad.onpointerdown = (ev) => {
    dragging = true;
    shiftDepth = ev.shiftKey;
    lastX = ev.clientX;
    lastY = ev.clientY;
    pad.setPointerCapture(ev.pointerId);
  };
  pad.onpointermove = (ev) => {
    if (!dragging) return;
    const dx = (ev.clientX - lastX) * PAD_METERS_PER_PX;
    const dy = (ev.clientY - lastY) * PAD_METERS_PER_PX;
    lastX = ev.clientX;
    lastY = ev.clientY;
    if (shiftDepth) {
      hand.wrist[2] = Math.max(0.2, hand.wrist[2] - dy);
    } else {
      hand.wrist[0] += dx;
      hand.wrist[1] += dy;
    }
    renderCursor();
  };
  pad.onpointerup = () => (dragging = false);
  pad.onwheel = (ev) => {
    ev.preventDefault();
    hand.wrist[2] = Math.max(
      0.2, hand.wrist[2] - Math.sign(ev.deltaY) * WHEEL_METERS_PER_STEP,
    );
    renderCursor();
  };

  const pinchSlider = el<HTMLInputElement>("pinch-slider");
  pinchSlider.oninput = () => {
    hand.pinch = Number(pinchSlider.value);
    renderCursor();
  };
  const leftYSlider = el<HTMLInputElement>("lefty-slider");
  leftYSlider.oninput = () => {
    hand.leftY = Number(leftYSlider.value);
    el<HTMLSpanElement>("lefty-label").textContent =
      `${hand.leftY.toFixed(2)} m ${hand.leftY < 0.1 ? "(precise)" : "(fast)"}`;
  };
  const freezeButton = el<HTMLButtonElement>("freeze-button");
  freezeButton.onclick = () => {
    hand.freeze = !hand.freeze;
    freezeButton.dataset.active = String(hand.freeze);
    freezeButton.textContent = hand.freeze ? "frozen - click to release" : "freeze";
  };
  const leftPresent = el<HTMLInputElement>("left-present");
  leftPresent.onchange = () => (hand.leftPresent = leftPresent.checked);

  // -- frame streaming and render loop ------------------------------------------------

  const t0 = performance.now();
  setInterval(() => {
    if (client.status === "connected") {
      streamer.emit((performance.now() - t0) / 1000);
    }
  }, 1000 / FRAME_RATE_HZ);

  function resize(): void {
    const canvas = el<HTMLCanvasElement>("view");
    scene.resize(canvas.clientWidth, canvas.clientHeight);
  }
  window.onresize = resize;
  resize();
  renderCursor();

  function loop(): void {
    scene.render();
    requestAnimationFrame(loop);
  }
  requestAnimationFrame(loop);

  client.start();
}

main();
