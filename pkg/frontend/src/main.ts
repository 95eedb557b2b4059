// Runtime wiring: two websocket connections, canvas rendering, plots, and
// the command/gain panels. The console is a pure observer plus command
// source; killing it never changes robot behavior.

import { FrameBuffer } from "./framebuffer.js";
import { CommandPanel } from "./panels.js";
import {
  AckReply, SchemaFrame, parseVizFrame, rateMessage, seekMessage,
} from "./protocol.js";
import { Scene, buildScene } from "./scene.js";

const fb = new FrameBuffer();
let schema: SchemaFrame | null = null;
let connected = false;
let replayMode = new URLSearchParams(location.search).has("replay");

const host = location.host || "127.0.0.1:8800";
const vizUrl = `ws://${host}/viz`;
const paramsUrl = `ws://${host}/params`;

// --- /params connection ------------------------------------------------------

let paramsWs: WebSocket | null = null;
const pendingReplies: ((r: AckReply) => void)[] = [];
let lastReply: Promise<AckReply> = Promise.resolve({ result: "ack" });

function sendTracked(msg: string): void {
  if (paramsWs && paramsWs.readyState === WebSocket.OPEN) {
    lastReply = new Promise((resolve) => pendingReplies.push(resolve));
    paramsWs.send(msg);
  }
}

const panel = new CommandPanel(sendTracked);
panel.live = !replayMode;

function connectParams(): void {
  paramsWs = new WebSocket(paramsUrl);
  paramsWs.onmessage = (ev) => {
    const reply = JSON.parse(ev.data) as AckReply;
    const cb = pendingReplies.shift();
    if (cb) cb(reply);
  };
  paramsWs.onclose = () => setTimeout(connectParams, 1000);
}

// --- /viz connection ---------------------------------------------------------

function connectViz(): void {
  const ws = new WebSocket(vizUrl);
  ws.onopen = () => { connected = true; };
  ws.onmessage = (ev) => {
    const frame = parseVizFrame(ev.data as string);
    if (!frame) return;
    if (frame.type === "schema") {
      schema = frame;
      fb.reset();
    } else {
      fb.ingest(frame);
    }
  };
  ws.onclose = () => {
    connected = false;
    setTimeout(connectViz, 1000);
  };
  vizSocket = ws;
}
let vizSocket: WebSocket | null = null;

// --- rendering ---------------------------------------------------------------

function project(xyz: [number, number, number], view: "side" | "top",
                 w: number, h: number): [number, number] {
  const scale = 260;
  if (view === "side") {
    return [w / 2 + xyz[0] * scale, h - 30 - xyz[2] * scale];
  }
  return [w / 2 + xyz[0] * scale, h / 2 - xyz[1] * scale];
}

function drawScene(canvas: HTMLCanvasElement, scene: Scene, view: "side" | "top"): void {
  const ctx = canvas.getContext("2d")!;
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  if (view === "side") {
    ctx.beginPath();
    ctx.moveTo(0, h - 30);
    ctx.lineTo(w, h - 30);
    ctx.stroke();
  }
  for (const item of scene.items) {
    if (item.kind === "segment") {
      ctx.strokeStyle = item.stale ? "#bbb" : "#245";
      ctx.lineWidth = 3;
      const a = project(item.a, view, w, h);
      const b = project(item.b, view, w, h);
      ctx.beginPath();
      ctx.moveTo(a[0], a[1]);
      ctx.lineTo(b[0], b[1]);
      ctx.stroke();
    } else if (item.kind === "point") {
      const p = project(item.xyz, view, w, h);
      ctx.fillStyle = item.name === "dcm" ? "#c33" :
        item.stale ? "#bbb" : "#2a2";
      ctx.beginPath();
      ctx.arc(p[0], p[1], 5, 0, 2 * Math.PI);
      ctx.fill();
    } else {
      const o = project(item.origin, view, w, h);
      const tip = project([item.origin[0] + item.vec[0],
                           item.origin[1] + item.vec[1],
                           item.origin[2] + item.vec[2]], view, w, h);
      ctx.strokeStyle = item.name.startsWith("grf") ? "#d80" : "#08d";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(o[0], o[1]);
      ctx.lineTo(tip[0], tip[1]);
      ctx.stroke();
    }
  }
  ctx.fillStyle = "#333";
  ctx.font = "12px monospace";
  ctx.fillText(`t=${scene.t.toFixed(3)}s  grf=${scene.grfTotal.toFixed(1)}N`, 8, 16);
  if (!connected) {
    ctx.fillStyle = "#c00";
    ctx.font = "bold 16px sans-serif";
    ctx.fillText("disconnected", 8, 36);
  }
  if (scene.unknownChannels.length) {
    ctx.fillStyle = "#960";
    ctx.fillText(`unknown: ${scene.unknownChannels.join(",")}`, 8, h - 8);
  }
}

function drawPlots(canvas: HTMLCanvasElement, prefix: string): void {
  const ctx = canvas.getContext("2d")!;
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const series = fb.series(prefix);
  const colors = ["#c33", "#2a2", "#23c", "#c93", "#939"];
  let ci = 0;
  const t1 = fb.clock;
  const t0 = t1 - fb.window;
  for (const [name, ring] of series) {
    if (!ring.length || !Array.isArray(ring[0].payload)) continue;
    const dims = (ring[0].payload as number[]).length;
    for (let d = 0; d < Math.min(dims, 3); d++) {
      const vals = ring.map((s) => (s.payload as number[])[d]);
      const lo = Math.min(...vals);
      const hi = Math.max(...vals);
      const span = Math.max(hi - lo, 1e-9);
      ctx.strokeStyle = colors[ci++ % colors.length];
      ctx.beginPath();
      ring.forEach((s, i) => {
        const x = ((s.t - t0) / fb.window) * w;
        const y = h - ((vals[i] - lo) / span) * (h - 20) - 10;
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
    }
    ctx.fillStyle = "#333";
    ctx.font = "11px monospace";
    ctx.fillText(name, 8, 14 + 14 * (ci - 1));
  }
}

// --- UI assembly ---------------------------------------------------------------

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function buildUi(): void {
  const root = document.getElementById("app")!;
  const side = el("canvas", { width: "560", height: "420" });
  const top = el("canvas", { width: "560", height: "420" });
  const plot = el("canvas", { width: "1120", height: "220" });
  const bar = el("div", { class: "bar" });
  const status = el("span", {}, "...");

  const button = (label: string, fn: () => void) => {
    const b = el("button", {}, label);
    b.onclick = fn;
    bar.appendChild(b);
  };
  const now = () => fb.clock;
  button("step-in-place", () => void panel.stepInPlace(now()));
  button("walk", () => void panel.walk(now()));
  button("stop", () => void panel.stop(now()));
  button("turn-left", () => void panel.interrupt(now(), "turn-left"));
  button("turn-right", () => void panel.interrupt(now(), "turn-right"));

  const slider = el("input", {
    type: "range", min: "-0.5", max: "0.5", step: "0.05", value: "0",
  });
  slider.onchange = async () => {
    const out = panel.velocitySlider(now(), "x", parseFloat(slider.value));
    if (out) {
      const reply = await lastReply;
      status.textContent = reply.result === "ack" ? "vx ack" :
        `vx nack: ${reply.reason}`;
    }
  };
  bar.appendChild(el("span", {}, " vx: "));
  bar.appendChild(slider);

  const gainKey = el("input", { type: "text", value: "com",
                                placeholder: "task name" });
  const gainVal = el("input", { type: "text", value: "[120,120,150]" });
  button("set kp", async () => {
    try {
      const out = panel.gainEdit(now(), gainKey.value, "kp",
                                 JSON.parse(gainVal.value));
      if (out) {
        const reply = await lastReply;
        status.textContent = reply.result === "ack" ? "gain ack" :
          `gain nack: ${reply.reason}`;
        gainVal.style.background = reply.result === "ack" ? "#cfc" : "#fcc";
      }
    } catch {
      status.textContent = "bad gain JSON";
    }
  });
  bar.appendChild(gainKey);
  bar.appendChild(gainVal);

  button("export journal", () => {
    const blob = new Blob([panel.journal.export()],
                          { type: "application/json" });
    const a = el("a", { href: URL.createObjectURL(blob),
                        download: "session_events.json" });
    a.click();
  });

  if (replayMode) {
    const scrub = el("input", { type: "range", min: "0", max: "60",
                                step: "0.1", value: "0" });
    scrub.onchange = () => vizSocket?.send(seekMessage(parseFloat(scrub.value)));
    const rate = el("input", { type: "range", min: "0.1", max: "4",
                               step: "0.1", value: "1" });
    rate.onchange = () => vizSocket?.send(rateMessage(parseFloat(rate.value)));
    bar.appendChild(el("span", {}, " seek: "));
    bar.appendChild(scrub);
    bar.appendChild(el("span", {}, " rate: "));
    bar.appendChild(rate);
  }

  bar.appendChild(status);
  root.appendChild(bar);
  root.appendChild(side);
  root.appendChild(top);
  root.appendChild(plot);

  // Keyboard bindings mirror the headless `keys` config defaults.
  const keyMap: Record<string, string> = {
    w: "walk-forward", x: "stop", s: "step-in-place",
    a: "turn-left", d: "turn-right",
    i: "vx+", k: "vx-", j: "vy+", l: "vy-",
  };
  document.addEventListener("keydown", (ev) => {
    const code = keyMap[ev.key];
    if (code) void panel.interrupt(now(), code);
  });

  const render = () => {
    const scene = buildScene(fb);
    drawScene(side, scene, "side");
    drawScene(top, scene, "top");
    drawPlots(plot, "com.");
    requestAnimationFrame(render);
  };
  requestAnimationFrame(render);
}

connectViz();
connectParams();
buildUi();
