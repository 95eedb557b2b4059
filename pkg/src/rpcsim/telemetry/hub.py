"""Telemetry fan-out: synchronous file sink plus lossy live broadcast.

The control loop calls log() and never blocks: file writes go through the
buffered writer (deterministic, every record lands), while live
subscribers get best-effort delivery through bounded queues with a drop
counter.
"""
from __future__ import annotations

import queue
import threading

from ..errors import ConfigError
from .logfile import LogWriter
from .records import LogRecord, SessionSchema


class Subscriber:
    def __init__(self, maxsize, prefix=""):
        self.queue = queue.Queue(maxsize=maxsize)
        self.prefix = prefix
        self.dropped = 0

    def offer(self, rec: LogRecord):
        if self.prefix and not rec.channel.startswith(self.prefix):
            return
        try:
            self.queue.put_nowait(rec)
        except queue.Full:
            self.dropped += 1


class TelemetryHub:
    def __init__(self, schema: SessionSchema, log_path=None, queue_size=4096):
        self.schema = schema
        self.queue_size = queue_size
        self.writer = LogWriter(log_path, schema) if log_path else None
        self._subscribers = []
        self._lock = threading.Lock()
        self.record_count = 0

    def log(self, t, channel, payload):
        if not self.schema.has(channel):
            raise ConfigError(f"channel '{channel}' not registered at startup")
        rec = LogRecord(t=t, channel=channel, payload=payload)
        if self.writer is not None:
            self.writer.write(rec)
        self.record_count += 1
        with self._lock:
            subs = list(self._subscribers)
        for sub in subs:
            sub.offer(rec)

    def subscribe(self, prefix="", maxsize=None) -> Subscriber:
        sub = Subscriber(maxsize or self.queue_size, prefix)
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscriber):
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def total_dropped(self):
        with self._lock:
            return sum(s.dropped for s in self._subscribers)

    def close(self):
        if self.writer is not None:
            self.writer.close()
