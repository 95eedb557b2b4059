// Stable scene hashing for replay-equality checks: canonical JSON with
// quantized floats (wire payloads are float64-exact, but quantization keeps
// the hash meaningful if a renderer ever re-derives values).

import { canonical } from "./protocol.js";

function quantize(value: unknown): unknown {
  if (typeof value === "number") {
    return Math.round(value * 1e9) / 1e9;
  }
  if (Array.isArray(value)) {
    return value.map(quantize);
  }
  if (value && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const [k, v] of Object.entries(value as Record<string, unknown>)) {
      out[k] = quantize(v);
    }
    return out;
  }
  return value;
}

export function fnv1a(text: string): string {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h.toString(16).padStart(8, "0");
}

export function hashScene(scene: unknown): string {
  return fnv1a(canonical(quantize(scene)));
}
