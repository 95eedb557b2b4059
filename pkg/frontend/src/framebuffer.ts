// Channel state between message ingestion and rendering: latest-wins per
// channel for the scene, ring buffers per channel for the plots.

import { RecordFrame } from "./protocol.js";

export interface ChannelSample {
  t: number;
  payload: unknown;
}

export class FrameBuffer {
  latest = new Map<string, ChannelSample>();
  rings = new Map<string, ChannelSample[]>();
  window = 30.0; // seconds of plot history
  clock = 0.0;   // latest record time seen

  ingest(frame: RecordFrame): void {
    const sample = { t: frame.t, payload: frame.payload };
    this.latest.set(frame.channel, sample);
    if (frame.t > this.clock) {
      this.clock = frame.t;
    }
    let ring = this.rings.get(frame.channel);
    if (!ring) {
      ring = [];
      this.rings.set(frame.channel, ring);
    }
    ring.push(sample);
    const cutoff = this.clock - this.window;
    while (ring.length > 0 && ring[0].t < cutoff) {
      ring.shift();
    }
  }

  // Channels silent for longer than maxAge are considered stale (greyed in
  // the scene, flagged in plots).
  isStale(channel: string, maxAge = 1.0): boolean {
    const s = this.latest.get(channel);
    if (!s) {
      return true;
    }
    return this.clock - s.t > maxAge;
  }

  vector(channel: string): number[] | null {
    const s = this.latest.get(channel);
    if (!s || !Array.isArray(s.payload)) {
      return null;
    }
    return s.payload as number[];
  }

  series(prefix: string): Map<string, ChannelSample[]> {
    const out = new Map<string, ChannelSample[]>();
    for (const [name, ring] of this.rings) {
      if (name.startsWith(prefix)) {
        out.set(name, ring);
      }
    }
    return out;
  }

  reset(): void {
    this.latest.clear();
    this.rings.clear();
    this.clock = 0.0;
  }
}
