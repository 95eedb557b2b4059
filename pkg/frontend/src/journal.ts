// Session journal: every command the console sends is recorded and can be
// exported as an events-script JSON replayable by the headless runner.

export interface JournalEntry {
  t: number;                     // simulated time when the action was sent
  kind: "interrupt" | "param" | "teleop";
  code?: string;
  path?: string;
  value?: unknown;
  pos?: number[];
  quat?: number[];
  gripper?: boolean;
}

export class SessionJournal {
  entries: JournalEntry[] = [];

  recordInterrupt(t: number, code: string): void {
    this.entries.push({ t, kind: "interrupt", code });
  }

  recordSet(t: number, path: string, value: unknown): void {
    this.entries.push({ t, kind: "param", path, value });
  }

  recordTeleop(t: number, pos: number[], quat: number[], gripper: boolean): void {
    this.entries.push({ t, kind: "teleop", pos, quat, gripper });
  }

  // Events-script form: interrupts keep the compact {t, code} shape the
  // format documents; params/teleop carry their kind explicitly.
  export(): string {
    const events = this.entries.map((e) => {
      if (e.kind === "interrupt") {
        return { t: e.t, code: e.code };
      }
      if (e.kind === "param") {
        return { t: e.t, kind: "param", path: e.path, value: e.value };
      }
      return { t: e.t, kind: "teleop", pos: e.pos, quat: e.quat,
               gripper: e.gripper };
    });
    return JSON.stringify(events, null, 1);
  }
}
