"""Structured log records and the session channel schema."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

PAYLOAD_KINDS = ("scalar", "vector", "pose", "state-id", "event")


@dataclass(frozen=True)
class ChannelSpec:
    name: str
    kind: str
    unit: str = ""

    def __post_init__(self):
        if self.kind not in PAYLOAD_KINDS:
            raise ConfigError(f"channel '{self.name}': unknown payload kind "
                              f"'{self.kind}'")


@dataclass
class LogRecord:
    t: float
    channel: str
    payload: object


class SessionSchema:
    """Channel registry written once at the head of every log file."""

    VERSION = 1

    def __init__(self, channels=(), model_hash="", config_snapshot=None):
        self.channels = {}
        for ch in channels:
            self.add(ch)
        self.model_hash = model_hash
        self.config_snapshot = config_snapshot or {}

    def add(self, spec: ChannelSpec):
        if spec.name in self.channels:
            raise ConfigError(f"channel '{spec.name}' registered twice")
        self.channels[spec.name] = spec

    def has(self, name):
        return name in self.channels

    def to_dict(self):
        return {
            "version": self.VERSION,
            "channels": [
                {"name": c.name, "kind": c.kind, "unit": c.unit}
                for c in self.channels.values()
            ],
            "model_hash": self.model_hash,
            "config": self.config_snapshot,
        }

    @staticmethod
    def from_dict(doc):
        schema = SessionSchema(
            model_hash=doc.get("model_hash", ""),
            config_snapshot=doc.get("config", {}))
        for c in doc.get("channels", []):
            schema.add(ChannelSpec(c["name"], c["kind"], c.get("unit", "")))
        return schema


def model_hash_of(urdf_text: str) -> str:
    return hashlib.sha256(urdf_text.encode("utf-8")).hexdigest()[:16]


def encode_payload(payload):
    """JSON-ready payload: arrays become lists, scalars floats."""
    if isinstance(payload, np.ndarray):
        return [float(x) for x in payload.ravel()]
    if isinstance(payload, (np.floating, np.integer)):
        return float(payload)
    if isinstance(payload, dict):
        return {k: encode_payload(v) for k, v in sorted(payload.items())}
    if isinstance(payload, (list, tuple)):
        return [encode_payload(v) for v in payload]
    return payload


def record_to_json(rec: LogRecord) -> str:
    return json.dumps(
        {"t": rec.t, "c": rec.channel, "v": encode_payload(rec.payload)},
        separators=(",", ":"), sort_keys=True)


def record_from_json(line: str) -> LogRecord:
    doc = json.loads(line)
    return LogRecord(t=doc["t"], channel=doc["c"], payload=doc["v"])
