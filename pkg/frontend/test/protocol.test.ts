// S2: each panel action emits exactly the documented JSON message.
import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { CommandPanel } from "../src/panels.js";
import {
  getMessage, interruptMessage, listMessage, rateMessage, seekMessage,
  setMessage, teleopMessage,
} from "../src/protocol.js";

const golden = JSON.parse(
  readFileSync(new URL("../golden/messages.json", import.meta.url), "utf-8"),
);

describe("wire messages match the documented shapes", () => {
  it("interrupt", () => {
    expect(interruptMessage("step-in-place")).toBe(golden.interrupt);
  });
  it("set", () => {
    expect(setMessage("mpc.ref_velocity.x", 0.3)).toBe(golden.set_velocity);
    expect(setMessage("task.com.kp", [120, 120, 150])).toBe(golden.set_gain);
  });
  it("get/list", () => {
    expect(getMessage("task.com.kp")).toBe(golden.get);
    expect(listMessage()).toBe(golden.list);
  });
  it("teleop", () => {
    expect(teleopMessage(1.5, [0.25, 0.0, 0.45], [1, 0, 0, 0], false))
      .toBe(golden.teleop);
  });
  it("replay control", () => {
    expect(seekMessage(5.0)).toBe(golden.seek);
    expect(rateMessage(2.0)).toBe(golden.rate);
  });
});

describe("command panel", () => {
  it("buttons and sliders send exactly one documented message", () => {
    const sent: string[] = [];
    const panel = new CommandPanel((m) => sent.push(m));
    panel.stepInPlace(1.0);
    panel.velocitySlider(2.0, "x", 0.3);
    panel.gainEdit(3.0, "com", "kp", [120, 120, 150]);
    expect(sent).toEqual([
      golden.interrupt, golden.set_velocity, golden.set_gain,
    ]);
  });

  it("replay mode never sends commands", () => {
    const sent: string[] = [];
    const panel = new CommandPanel((m) => sent.push(m));
    panel.live = false;
    expect(panel.stepInPlace(1.0)).toBeNull();
    expect(panel.velocitySlider(1.0, "x", 0.1)).toBeNull();
    expect(sent).toEqual([]);
    expect(panel.journal.entries).toEqual([]);
  });
});
