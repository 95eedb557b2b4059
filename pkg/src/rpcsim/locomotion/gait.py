"""Phase-based gait scheduling for velocity-mode walking."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class GaitSchedule:
    """Periodic contact pattern: per-foot phase offset and stance duty."""

    cycle_time: float = 0.5
    offsets: dict = field(default_factory=lambda: {"left": 0.0, "right": 0.5})
    duty: float = 0.5

    def phase(self, t, foot):
        return ((t / self.cycle_time) - self.offsets[foot]) % 1.0

    def in_stance(self, t, foot):
        return self.phase(t, foot) < self.duty

    def contacts_at(self, t):
        return {f: self.in_stance(t, f) for f in self.offsets}

    def swing_progress(self, t, foot):
        """(in_swing, progress 0..1, remaining seconds) for the foot."""
        ph = self.phase(t, foot)
        if ph < self.duty:
            return False, 0.0, 0.0
        swing_len = (1.0 - self.duty) * self.cycle_time
        prog = (ph - self.duty) / (1.0 - self.duty)
        return True, prog, (1.0 - prog) * swing_len

    def stance_duration(self):
        return self.duty * self.cycle_time

    def time_to_liftoff(self, t, foot):
        """Seconds until the foot leaves stance (0 if already swinging)."""
        ph = self.phase(t, foot)
        if ph >= self.duty:
            return 0.0
        return (self.duty - ph) * self.cycle_time

    def horizon_contacts(self, t, horizon, dt):
        feet = list(self.offsets)
        out = np.zeros((horizon, len(feet)), dtype=bool)
        for k in range(horizon):
            # Sample mid-interval so boundary steps land deterministically.
            tk = t + (k + 0.5) * dt
            for i, f in enumerate(feet):
                out[k, i] = self.in_stance(tk, f)
        return out

    def time_to_touchdown(self, t, foot):
        ph = self.phase(t, foot)
        if ph < self.duty:
            return 0.0
        return (1.0 - ph) * self.cycle_time
