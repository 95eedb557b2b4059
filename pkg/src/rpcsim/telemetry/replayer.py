"""Timed playback of a recorded log into a telemetry hub."""
from __future__ import annotations

import bisect
import time

from .hub import TelemetryHub
from .logfile import LogReader


class LogReplayer:
    """Streams records at a rate multiple with seek/pause for scrubbing."""

    def __init__(self, path, hub: TelemetryHub):
        self.reader = LogReader(path)
        self.hub = hub
        self.records = list(self.reader.records())
        self.times = [r.t for r in self.records]
        self.position = 0
        self.rate = 1.0
        self.paused = False
        self.done = False

    @property
    def duration(self):
        return self.times[-1] if self.times else 0.0

    def seek(self, t):
        """Jump so the next record yielded has rec.t >= t."""
        self.position = bisect.bisect_left(self.times, t)
        self.done = self.position >= len(self.records)

    def run(self, should_stop=None, realtime=True):
        """Push records to the hub; rate-controlled when realtime."""
        last_wall = time.perf_counter()
        while self.position < len(self.records):
            if should_stop is not None and should_stop():
                return
            if self.paused:
                time.sleep(0.02)
                last_wall = time.perf_counter()
                continue
            rec = self.records[self.position]
            if realtime and self.position > 0:
                dt_sim = rec.t - self.records[self.position - 1].t
                if dt_sim > 0 and self.rate > 0:
                    target = dt_sim / self.rate
                    elapsed = time.perf_counter() - last_wall
                    if target > elapsed:
                        time.sleep(min(target - elapsed, 0.1))
            last_wall = time.perf_counter()
            self.hub.log(rec.t, rec.channel, rec.payload)
            self.position += 1
        self.done = True
