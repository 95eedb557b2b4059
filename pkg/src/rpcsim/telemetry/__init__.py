from .records import (ChannelSpec, LogRecord, SessionSchema, encode_payload,
                      model_hash_of, record_from_json, record_to_json)
from .logfile import LogReader, LogWriter, replay
from .hub import Subscriber, TelemetryHub

__all__ = [
    "ChannelSpec", "LogRecord", "SessionSchema", "encode_payload",
    "model_hash_of", "record_from_json", "record_to_json",
    "LogReader", "LogWriter", "replay",
    "Subscriber", "TelemetryHub",
]
