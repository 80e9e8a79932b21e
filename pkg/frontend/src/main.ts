// Browser wiring: one socket reader task feeding the snapshot store, a
// render loop reading the latest snapshot, buttons enqueueing outbound
// operator messages.

import { decode, handOffsetMessage, promptMessage, PromptWord } from "./protocol.js";
import { composeFrame, renderProgressBar, renderTorqueStrip, Raster } from "./render.js";
import {
  applyMessage,
  ConsoleSession,
  controlsEnabled,
  freshSession,
  isStale,
  recordPrompt,
} from "./state.js";

const SCALE = 4; // composite frames arrive at half sensor resolution

let session: ConsoleSession = freshSession();
let socket: WebSocket | null = null;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el;
}

function blit(canvas: HTMLCanvasElement, raster: Raster, scale: number): void {
  canvas.width = raster.width * scale;
  canvas.height = raster.height * scale;
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    return;
  }
  const small = new OffscreenCanvas(raster.width, raster.height);
  const smallCtx = small.getContext("2d");
  if (smallCtx === null) {
    return;
  }
  const pixels = new Uint8ClampedArray(raster.rgba); // fresh ArrayBuffer backing
  smallCtx.putImageData(new ImageData(pixels, raster.width, raster.height), 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(small, 0, 0, canvas.width, canvas.height);
}

function connect(): void {
  const url = (($("url") as HTMLInputElement).value || "ws://127.0.0.1:8765").trim();
  socket = new WebSocket(url);
  socket.binaryType = "arraybuffer";
  socket.onopen = () => {
    session = { ...session, connected: true };
  };
  socket.onclose = () => {
    session = { ...session, connected: false };
    socket = null;
  };
  socket.onmessage = (ev: MessageEvent) => {
    if (!(ev.data instanceof ArrayBuffer)) {
      return;
    }
    try {
      session = applyMessage(session, decode(new Uint8Array(ev.data)));
    } catch {
      // tolerate malformed frames; the stream is advisory display data
    }
  };
}

function sendPrompt(word: PromptWord): void {
  if (socket === null || socket.readyState !== WebSocket.OPEN) {
    return;
  }
  session = recordPrompt(session, word);
  socket.send(promptMessage(word));
}

function sendOffset(deltaMm: number): void {
  if (socket === null || socket.readyState !== WebSocket.OPEN) {
    return;
  }
  socket.send(handOffsetMessage(deltaMm));
}

function renderLoop(): void {
  const frameCanvas = $("frame") as HTMLCanvasElement;
  const progressCanvas = $("progress") as HTMLCanvasElement;
  const torqueCanvas = $("torque") as HTMLCanvasElement;

  if (session.composite !== null) {
    blit(frameCanvas, composeFrame(session.composite), SCALE);
  }
  blit(progressCanvas, renderProgressBar(session.fsm?.holdProgress ?? 0), 2);
  blit(torqueCanvas, renderTorqueStrip(session.torque), 2);

  $("stale").textContent = isStale(session) ? "STALE (>1 s old)" : "live";
  $("stale").className = isStale(session) ? "stale" : "live";
  $("conn").textContent = session.connected ? "connected" : "disconnected";

  const fsm = session.fsm;
  $("distance").textContent =
    fsm?.distanceMm != null ? `${fsm.distanceMm.toFixed(1)} mm` : "--";
  $("stack").textContent = String(fsm?.stackDepth ?? 0);
  $("pending").textContent = fsm?.pendingGrip ? "yes" : "no";
  const maintain = fsm?.maintainActive ?? false;
  const maintainEl = $("maintain");
  maintainEl.textContent = maintain ? "MAINTAIN ACTIVE" : "idle";
  maintainEl.className = maintain ? "maintain-on" : "maintain-off";

  const enabled = controlsEnabled(session);
  ($("btn-grip") as HTMLButtonElement).disabled = !enabled.grip;
  ($("btn-release") as HTMLButtonElement).disabled = !enabled.release;
  ($("btn-stop") as HTMLButtonElement).disabled = !enabled.stop;

  const history = $("history");
  history.innerHTML = "";
  for (const rec of session.history.slice(-12).reverse()) {
    const li = document.createElement("li");
    li.textContent = `t=${rec.t.toFixed(2)}s ${rec.word}`;
    if (rec.droppedWhileMaintain) {
      li.className = "dropped";
      li.textContent += " (dropped: maintain)";
    }
    history.appendChild(li);
  }

  requestAnimationFrame(renderLoop);
}

export function start(): void {
  $("connect").addEventListener("click", connect);
  $("btn-grip").addEventListener("click", () => sendPrompt("grip"));
  $("btn-release").addEventListener("click", () => sendPrompt("release"));
  $("btn-stop").addEventListener("click", () => sendPrompt("stop"));
  $("closer").addEventListener("click", () => sendOffset(-25));
  $("farther").addEventListener("click", () => sendOffset(25));
  requestAnimationFrame(renderLoop);
}

if (typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", start);
}
