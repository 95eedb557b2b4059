// S1 (journal half, console side): the exported journal is a valid
// events-script the headless runner replays; the cross-check against the
// recorded state trace runs in the host test suite over the same golden.
import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { CommandPanel } from "../src/panels.js";

const golden = readFileSync(
  new URL("../golden/journal_session.json", import.meta.url), "utf-8");

describe("session journal", () => {
  it("scripted panel session exports the golden events-script", () => {
    const panel = new CommandPanel(() => {});
    panel.stepInPlace(0.5);
    panel.velocitySlider(3.4, "x", 0.2);
    panel.stop(6.0);
    expect(panel.journal.export()).toBe(golden.trimEnd());
  });

  it("export parses as a JSON list with t fields", () => {
    const panel = new CommandPanel(() => {});
    panel.walk(1.0);
    panel.teleopJog(2.0, [0.3, 0.0, 0.5]);
    const doc = JSON.parse(panel.journal.export());
    expect(Array.isArray(doc)).toBe(true);
    expect(doc.every((e: { t: number }) => typeof e.t === "number")).toBe(true);
  });
});
