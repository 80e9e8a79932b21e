// Console session store: the socket reader folds incoming messages into
// an immutable snapshot; the render loop only ever reads the latest
// snapshot, so rendering can never block the reader.

import { TAG_DEPTH_FRAME, TAG_TELEMETRY, WireMessage, jsonPayload } from "./protocol.js";

export interface CompositeFrame {
  t: number;
  frame: number;
  width: number;
  height: number;
  depthMm: number[];
  mask: number[];
  grasp: { u: number; v: number; distance_mm: number } | null;
}

export interface FsmSnapshot {
  t: number;
  stackDepth: number;
  pendingGrip: boolean;
  maintainActive: boolean;
  gripDispatched: boolean;
  holdProgress: number; // 0..1 over the 2 s hold window
  distanceMm: number | null;
  handOffsetMm: number;
}

export interface TelemetrySample {
  t: number;
  angle: number;
  omega: number;
  tau: number;
  mode: string;
}

export interface CommandRecord {
  t: number;
  word: string;
  droppedWhileMaintain: boolean;
}

export const TORQUE_WINDOW_S = 10.0;
export const STALE_AFTER_S = 1.0;

export interface ConsoleSession {
  connected: boolean;
  composite: CompositeFrame | null;
  fsm: FsmSnapshot | null;
  torque: TelemetrySample[]; // ring buffer, last TORQUE_WINDOW_S seconds
  history: CommandRecord[];
  lastMessageT: number; // latest simulation time seen on the socket
}

export function freshSession(): ConsoleSession {
  return {
    connected: false,
    composite: null,
    fsm: null,
    torque: [],
    history: [],
    lastMessageT: 0,
  };
}

function trimTorque(samples: TelemetrySample[], now: number): TelemetrySample[] {
  const cutoff = now - TORQUE_WINDOW_S;
  let start = 0;
  while (start < samples.length && samples[start].t < cutoff) {
    start += 1;
  }
  return start > 0 ? samples.slice(start) : samples;
}

export function applyMessage(session: ConsoleSession, msg: WireMessage): ConsoleSession {
  if (msg.tag === TAG_TELEMETRY) {
    const payload = jsonPayload(msg);
    if (payload.type === "telemetry") {
      const sample: TelemetrySample = {
        t: payload.t,
        angle: payload.angle,
        omega: payload.omega,
        tau: payload.tau,
        mode: payload.mode,
      };
      return {
        ...session,
        torque: trimTorque([...session.torque, sample], sample.t),
        lastMessageT: Math.max(session.lastMessageT, sample.t),
      };
    }
    if (payload.type === "state") {
      const fsm: FsmSnapshot = {
        t: payload.t,
        stackDepth: payload.stack_depth,
        pendingGrip: payload.pending_grip,
        maintainActive: payload.maintain_active,
        gripDispatched: payload.grip_dispatched,
        holdProgress: payload.hold_progress,
        distanceMm: payload.distance_mm,
        handOffsetMm: payload.hand_offset_mm,
      };
      return { ...session, fsm, lastMessageT: Math.max(session.lastMessageT, fsm.t) };
    }
    return session;
  }
  if (msg.tag === TAG_DEPTH_FRAME) {
    const payload = jsonPayload(msg);
    const composite: CompositeFrame = {
      t: payload.t,
      frame: payload.frame,
      width: payload.width,
      height: payload.height,
      depthMm: payload.depth_mm,
      mask: payload.mask,
      grasp: payload.grasp ?? null,
    };
    return {
      ...session,
      composite,
      lastMessageT: Math.max(session.lastMessageT, composite.t),
    };
  }
  return session;
}

// Operator prompts are appended locally; a grip/stop issued while the
// Maintain latch is visible will be dropped by the mid-layer, and the
// history grays it out so the gating rule is visible to the operator.
export function recordPrompt(session: ConsoleSession, word: string): ConsoleSession {
  const dropped =
    session.fsm !== null && session.fsm.maintainActive && word !== "release";
  const record: CommandRecord = {
    t: session.lastMessageT,
    word,
    droppedWhileMaintain: dropped,
  };
  return { ...session, history: [...session.history, record] };
}

export function isStale(session: ConsoleSession): boolean {
  if (session.composite === null) {
    return true;
  }
  return session.lastMessageT - session.composite.t > STALE_AFTER_S;
}

// Grip and stop are pointless while the latch holds; only release passes.
export function controlsEnabled(session: ConsoleSession): {
  grip: boolean;
  release: boolean;
  stop: boolean;
} {
  if (!session.connected) {
    return { grip: false, release: false, stop: false };
  }
  const latched = session.fsm?.maintainActive ?? false;
  return { grip: !latched, release: true, stop: !latched };
}
