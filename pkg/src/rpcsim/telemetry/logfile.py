"""On-disk log format: schema header, newline-delimited JSON records, and
a binary time-index footer for seeking.

Layout:
    line 1: {"schema": {...}}
    lines:  {"t":..,"c":..,"v":..}
    footer: #INDEX <base64 of packed (t, byte-offset) pairs>
            #END <footer-line byte offset>

Writes to the file are synchronous (buffered) so two identical runs yield
byte-identical files; only the live broadcast path is lossy.
"""
from __future__ import annotations

import base64
import bisect
import io
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .records import LogRecord, SessionSchema, record_from_json, record_to_json

_INDEX_PREFIX = "#INDEX "
_END_PREFIX = "#END "
_PAIR = struct.Struct("<dQ")


class LogWriter:
    def __init__(self, path, schema: SessionSchema, index_stride=64):
        self.path = path
        self.schema = schema
        self.index_stride = index_stride
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        header = record_to_json_header(schema)
        self._fh.write(header + "\n")
        self._offset = len(header.encode("utf-8")) + 1
        self._index = []
        self._count = 0
        self._last_t = {}
        self.closed = False

    def write(self, rec: LogRecord):
        if self.closed:
            return
        if not self.schema.has(rec.channel):
            raise ConfigError(f"channel '{rec.channel}' not registered in schema")
        last = self._last_t.get(rec.channel)
        if last is not None and rec.t < last:
            raise ConfigError(f"time went backwards on channel '{rec.channel}'")
        self._last_t[rec.channel] = rec.t
        if self._count % self.index_stride == 0:
            self._index.append((rec.t, self._offset))
        line = record_to_json(rec)
        self._fh.write(line + "\n")
        self._offset += len(line.encode("utf-8")) + 1
        self._count += 1

    def close(self):
        if self.closed:
            return
        packed = b"".join(_PAIR.pack(t, off) for t, off in self._index)
        footer = _INDEX_PREFIX + base64.b64encode(packed).decode("ascii")
        self._fh.write(footer + "\n")
        self._fh.write(_END_PREFIX + str(self._offset) + "\n")
        self._fh.close()
        self.closed = True


def record_to_json_header(schema: SessionSchema) -> str:
    import json
    return json.dumps({"schema": schema.to_dict()},
                      separators=(",", ":"), sort_keys=True)


@dataclass
class Truncation:
    """Yielded (as metadata) when a file ends mid-record."""

    complete_records: int


class LogReader:
    def __init__(self, path):
        self.path = path
        with open(path, "r", encoding="utf-8", newline="\n") as fh:
            header = fh.readline()
        import json
        try:
            doc = json.loads(header)
            self.schema = SessionSchema.from_dict(doc["schema"])
        except (json.JSONDecodeError, KeyError):
            raise ConfigError(f"'{path}' has no valid schema header")
        self._header_len = len(header.encode("utf-8"))
        self._index = self._load_index()
        self.truncated = False

    def _load_index(self):
        try:
            with open(self.path, "rb") as fh:
                fh.seek(0, io.SEEK_END)
                size = fh.tell()
                tail = min(size, 1 << 16)
                fh.seek(size - tail)
                chunk = fh.read().decode("utf-8", errors="replace")
        except OSError:
            return None
        lines = chunk.splitlines()
        for line in reversed(lines[-4:]):
            if line.startswith(_INDEX_PREFIX):
                try:
                    packed = base64.b64decode(line[len(_INDEX_PREFIX):])
                    return [(_PAIR.unpack_from(packed, i)[0],
                             _PAIR.unpack_from(packed, i)[1])
                            for i in range(0, len(packed), _PAIR.size)]
                except Exception:
                    return None
        return None

    def records(self, start_t=None):
        """Yield records in file order; optional seek to the first t >= start_t."""
        self.truncated = False
        with open(self.path, "r", encoding="utf-8", newline="\n") as fh:
            if start_t is not None and self._index:
                times = [t for t, _ in self._index]
                k = bisect.bisect_left(times, start_t)
                off = self._index[max(k - 1, 0)][1]
                fh.seek(off)
            else:
                fh.readline()   # skip header
            for line in fh:
                if line.startswith("#"):
                    break
                if not line.endswith("\n"):
                    self.truncated = True
                    break
                try:
                    rec = record_from_json(line)
                except Exception:
                    self.truncated = True
                    break
                if start_t is not None and rec.t < start_t:
                    continue
                yield rec

    def seek_time(self, t):
        """First record with rec.t >= t (list of remaining records)."""
        return self.records(start_t=t)


def replay(path, start_t=None):
    """Record stream from a log file; header must be valid."""
    return LogReader(path).records(start_t=start_t)
