// Wire protocol types and message builders for the /viz and /params
// websocket services. Every message the console sends is built here so the
// golden-file tests pin the exact JSON shapes.

export interface ChannelSpec {
  name: string;
  kind: "scalar" | "vector" | "pose" | "state-id" | "event";
  unit?: string;
}

export interface SchemaFrame {
  type: "schema";
  version: number;
  channels: ChannelSpec[];
  model_hash: string;
  config?: unknown;
}

export interface RecordFrame {
  type: "record";
  t: number;
  channel: string;
  payload: unknown;
}

export type VizFrame = SchemaFrame | RecordFrame;

export interface AckReply {
  result: "ack" | "nack";
  reason?: string | null;
  key?: string;
  value?: unknown;
  keys?: string[];
}

// Canonical serialization: sorted keys, no whitespace; matches the server.
export function canonical(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonical).join(",") + "]";
  }
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj).sort();
  return "{" + keys.map((k) => JSON.stringify(k) + ":" + canonical(obj[k])).join(",") + "}";
}

export function interruptMessage(code: string): string {
  return canonical({ op: "interrupt", code });
}

export function setMessage(key: string, value: unknown): string {
  return canonical({ op: "set", key, value });
}

export function getMessage(key: string): string {
  return canonical({ op: "get", key });
}

export function listMessage(): string {
  return canonical({ op: "list" });
}

export function teleopMessage(
  t: number, pos: [number, number, number],
  quat: [number, number, number, number], gripper: boolean,
): string {
  return canonical({ op: "teleop", pose: { t, pos, quat, gripper } });
}

export function seekMessage(t: number): string {
  return canonical({ op: "seek", t });
}

export function rateMessage(value: number): string {
  return canonical({ op: "rate", value });
}

export function parseVizFrame(raw: string): VizFrame | null {
  try {
    const doc = JSON.parse(raw);
    if (doc && (doc.type === "schema" || doc.type === "record")) {
      return doc as VizFrame;
    }
  } catch {
    /* malformed frames are dropped by the caller */
  }
  return null;
}
