// Wire protocol: 4-byte big-endian length (tag + payload), 1-byte tag,
// then the payload. Command tags carry no payload; data tags carry
// UTF-8 JSON. Must stay byte-compatible with the server.

export const TAG_GRIP = 0x01;
export const TAG_RELEASE = 0x02;
export const TAG_STOP = 0x03;
export const TAG_MAINTAIN = 0x04;
export const TAG_DEPTH_FRAME = 0x10;
export const TAG_TELEMETRY = 0x11;
export const TAG_PROMPT = 0x12;
export const TAG_OPERATOR_INPUT = 0x13;

const VALID_TAGS = new Set([
  TAG_GRIP, TAG_RELEASE, TAG_STOP, TAG_MAINTAIN,
  TAG_DEPTH_FRAME, TAG_TELEMETRY, TAG_PROMPT, TAG_OPERATOR_INPUT,
]);

export const MAX_FRAME_BYTES = 16 * 1024 * 1024;

export interface WireMessage {
  tag: number;
  payload: Uint8Array;
}

export class FramingError extends Error {}

export function encode(msg: WireMessage): Uint8Array {
  if (!VALID_TAGS.has(msg.tag)) {
    throw new FramingError(`unknown tag 0x${msg.tag.toString(16)}`);
  }
  const length = 1 + msg.payload.length;
  if (length > MAX_FRAME_BYTES) {
    throw new FramingError(`frame of ${length} bytes exceeds the cap`);
  }
  const out = new Uint8Array(4 + length);
  new DataView(out.buffer).setUint32(0, length, false);
  out[4] = msg.tag;
  out.set(msg.payload, 5);
  return out;
}

export function decode(data: Uint8Array): WireMessage {
  if (data.length < 4) {
    throw new FramingError("incomplete length prefix");
  }
  const length = new DataView(data.buffer, data.byteOffset).getUint32(0, false);
  if (length > MAX_FRAME_BYTES) {
    throw new FramingError(`declared ${length} bytes exceeds the cap`);
  }
  if (length < 1) {
    throw new FramingError("frame length must cover the tag byte");
  }
  if (data.length !== 4 + length) {
    throw new FramingError(`need ${4 + length} bytes, have ${data.length}`);
  }
  const tag = data[4];
  if (!VALID_TAGS.has(tag)) {
    throw new FramingError(`unknown tag 0x${tag.toString(16)}`);
  }
  return { tag, payload: data.slice(5) };
}

export function jsonMessage(tag: number, obj: unknown): WireMessage {
  return { tag, payload: new TextEncoder().encode(JSON.stringify(obj)) };
}

export function jsonPayload(msg: WireMessage): any {
  return JSON.parse(new TextDecoder().decode(msg.payload));
}

export type PromptWord = "grip" | "release" | "stop";

export function promptMessage(word: PromptWord): Uint8Array {
  return encode(jsonMessage(TAG_OPERATOR_INPUT, { kind: "prompt", prompt: word }));
}

export function handOffsetMessage(deltaMm: number): Uint8Array {
  return encode(jsonMessage(TAG_OPERATOR_INPUT, { kind: "hand_offset", delta_mm: deltaMm }));
}
