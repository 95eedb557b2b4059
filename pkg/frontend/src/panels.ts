// Command-panel actions: pure mapping from UI intents to wire messages.
// The runtime wires DOM events to these; the golden tests pin the exact
// JSON each action emits.

import { interruptMessage, setMessage, teleopMessage } from "./protocol.js";
import { SessionJournal } from "./journal.js";

export interface OutboundAction {
  message: string;             // exact JSON sent on /params
}

export class CommandPanel {
  journal = new SessionJournal();
  live = true;                 // replay mode never sends commands

  constructor(private send: (message: string) => void) {}

  private emit(t: number, message: string): OutboundAction | null {
    if (!this.live) {
      return null;
    }
    this.send(message);
    return { message };
  }

  stepInPlace(t: number): OutboundAction | null {
    const out = this.emit(t, interruptMessage("step-in-place"));
    if (out) this.journal.recordInterrupt(t, "step-in-place");
    return out;
  }

  walk(t: number): OutboundAction | null {
    const out = this.emit(t, interruptMessage("walk"));
    if (out) this.journal.recordInterrupt(t, "walk");
    return out;
  }

  stop(t: number): OutboundAction | null {
    const out = this.emit(t, interruptMessage("stop"));
    if (out) this.journal.recordInterrupt(t, "stop");
    return out;
  }

  interrupt(t: number, code: string): OutboundAction | null {
    const out = this.emit(t, interruptMessage(code));
    if (out) this.journal.recordInterrupt(t, code);
    return out;
  }

  velocitySlider(t: number, axis: "x" | "y" | "yaw", value: number): OutboundAction | null {
    const key = `mpc.ref_velocity.${axis}`;
    const out = this.emit(t, setMessage(key, value));
    if (out) this.journal.recordSet(t, key, value);
    return out;
  }

  gainEdit(t: number, taskName: string, which: "kp" | "kd" | "weight",
           value: number | number[]): OutboundAction | null {
    const key = `task.${taskName}.${which}`;
    const out = this.emit(t, setMessage(key, value));
    if (out) this.journal.recordSet(t, key, value);
    return out;
  }

  teleopJog(t: number, pos: [number, number, number],
            quat: [number, number, number, number] = [1, 0, 0, 0],
            gripper = false): OutboundAction | null {
    const out = this.emit(t, teleopMessage(t, pos, quat, gripper));
    if (out) this.journal.recordTeleop(t, pos, quat, gripper);
    return out;
  }
}
