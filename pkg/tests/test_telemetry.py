import json
import threading
import time

import numpy as np
import pytest

from rpcsim.errors import ConfigError
from rpcsim.telemetry import (ChannelSpec, LogReader, LogRecord, LogWriter,
                              SessionSchema, TelemetryHub, record_from_json,
                              record_to_json)


def make_schema():
    return SessionSchema([
        ChannelSpec("a.scalar", "scalar"),
        ChannelSpec("a.vec", "vector", "m"),
        ChannelSpec("a.state", "state-id"),
        ChannelSpec("a.event", "event"),
    ], model_hash="cafe", config_snapshot={"x": 1})


class TestRecords:
    def test_round_trip(self):
        rec = LogRecord(1.25, "a.vec", np.array([1.0, 2.5, -3.0]))
        line = record_to_json(rec)
        back = record_from_json(line)
        assert back.t == rec.t
        assert back.channel == "a.vec"
        assert back.payload == [1.0, 2.5, -3.0]

    def test_deterministic_serialization(self):
        rec = LogRecord(0.5, "a.event", {"b": 1, "a": [2.0]})
        assert record_to_json(rec) == record_to_json(
            LogRecord(0.5, "a.event", {"a": [2.0], "b": 1}))


class TestLogFile:
    def test_write_read_round_trip(self, tmp_path):
        path = tmp_path / "run.rpclog"
        w = LogWriter(path, make_schema())
        records = [LogRecord(k * 0.01, "a.vec", [float(k), 0.5]) for k in range(500)]
        for r in records:
            w.write(r)
        w.close()
        r = LogReader(path)
        got = list(r.records())
        assert len(got) == 500
        assert not r.truncated
        assert got[17].payload == [17.0, 0.5]
        assert r.schema.model_hash == "cafe"

    def test_unregistered_channel_rejected(self, tmp_path):
        w = LogWriter(tmp_path / "x.rpclog", make_schema())
        with pytest.raises(ConfigError):
            w.write(LogRecord(0.0, "not.registered", 1.0))

    def test_time_monotonicity_per_channel(self, tmp_path):
        w = LogWriter(tmp_path / "x.rpclog", make_schema())
        w.write(LogRecord(1.0, "a.scalar", 1.0))
        with pytest.raises(ConfigError):
            w.write(LogRecord(0.5, "a.scalar", 2.0))

    def test_seek_to_time(self, tmp_path):
        path = tmp_path / "run.rpclog"
        w = LogWriter(path, make_schema())
        for k in range(2000):
            w.write(LogRecord(k * 0.001, "a.scalar", float(k)))
        w.close()
        r = LogReader(path)
        first = next(iter(r.records(start_t=1.0)))
        assert first.t >= 1.0
        assert first.t == pytest.approx(1.0, abs=1e-9)

    def test_truncated_file_yields_complete_records(self, tmp_path):
        path = tmp_path / "run.rpclog"
        w = LogWriter(path, make_schema())
        for k in range(100):
            w.write(LogRecord(k * 0.01, "a.scalar", float(k)))
        w.close()
        data = path.read_bytes()
        (tmp_path / "cut.rpclog").write_bytes(data[:len(data) // 2])
        r = LogReader(tmp_path / "cut.rpclog")
        got = list(r.records())
        assert 0 < len(got) < 100
        assert r.truncated

    def test_empty_log_schema_readable(self, tmp_path):
        path = tmp_path / "empty.rpclog"
        LogWriter(path, make_schema()).close()
        r = LogReader(path)
        assert list(r.records()) == []
        assert r.schema.has("a.vec")

    def test_large_file_no_corrupt_lines(self, tmp_path):
        path = tmp_path / "big.rpclog"
        w = LogWriter(path, make_schema())
        n = 100_000
        for k in range(n):
            w.write(LogRecord(k * 1e-4, "a.vec", [float(k % 7), -1.25]))
        w.close()
        count = sum(1 for _ in LogReader(path).records())
        assert count == n


class TestHub:
    def test_wire_equals_disk(self, tmp_path):
        path = tmp_path / "run.rpclog"
        hub = TelemetryHub(make_schema(), log_path=path)
        sub = hub.subscribe()
        payloads = [[float(k), 2.0] for k in range(50)]
        for k, p in enumerate(payloads):
            hub.log(k * 0.01, "a.vec", p)
        hub.close()
        from_wire = [sub.queue.get_nowait().payload for _ in range(50)]
        from_disk = [r.payload for r in LogReader(path).records()]
        assert from_wire == from_disk

    def test_bounded_queue_drops_without_blocking(self):
        hub = TelemetryHub(make_schema(), queue_size=16)
        sub = hub.subscribe()
        t0 = time.perf_counter()
        for k in range(1000):
            hub.log(k * 1e-3, "a.scalar", float(k))
        elapsed = time.perf_counter() - t0
        assert elapsed < 0.5
        assert sub.dropped == 1000 - 16
        assert hub.total_dropped() == sub.dropped

    def test_prefix_subscription(self):
        hub = TelemetryHub(make_schema())
        sub = hub.subscribe(prefix="a.vec")
        hub.log(0.0, "a.scalar", 1.0)
        hub.log(0.0, "a.vec", [1.0])
        assert sub.queue.qsize() == 1


class TestReplayer:
    def test_seek_and_stream(self, tmp_path):
        from rpcsim.telemetry.replayer import LogReplayer
        path = tmp_path / "run.rpclog"
        w = LogWriter(path, make_schema())
        for k in range(1000):
            w.write(LogRecord(k * 0.01, "a.scalar", float(k)))
        w.close()
        hub = TelemetryHub(make_schema())
        sub = hub.subscribe()
        rp = LogReplayer(path, hub)
        rp.seek(5.0)
        rp.run(realtime=False)
        first = sub.queue.get_nowait()
        assert first.t >= 5.0
        assert rp.done


@pytest.fixture(scope="module")
def served_session():
    from fastapi.testclient import TestClient
    from rpcsim.architecture.config import load_config
    from rpcsim.runner import SimSession
    from rpcsim.telemetry.server import build_app

    cfg = load_config({"sim": {"substeps": 2}})
    session = SimSession(config=cfg, demo="stand")
    app = build_app(session)
    stop = threading.Event()

    def loop():
        while not stop.is_set():
            session.step()

    th = threading.Thread(target=loop, daemon=True)
    th.start()
    yield session, TestClient(app)
    stop.set()
    th.join(timeout=3.0)


class TestServer:
    def test_params_ops(self, served_session):
        _, client = served_session
        with client.websocket_connect("/params") as ws:
            ws.send_text(json.dumps({"op": "list"}))
            r = ws.receive_json()
            assert r["result"] == "ack" and "task.com.kp" in r["keys"]
            ws.send_text(json.dumps({"op": "get", "key": "nonexistent"}))
            assert ws.receive_json() == {"reason": "unknown", "result": "nack"}
            ws.send_text(json.dumps({"op": "set", "key": "task.com.kp",
                                     "value": [120, 120, 150]}))
            assert ws.receive_json() == {"result": "ack"}
            ws.send_text(json.dumps({"op": "get", "key": "task.com.kp"}))
            assert ws.receive_json()["value"] == [120.0, 120.0, 150.0]
            ws.send_text(json.dumps({"op": "set", "key": "task.com.kp",
                                     "value": -5}))
            assert ws.receive_json() == {"reason": "range", "result": "nack"}
            ws.send_text("{oops")
            assert ws.receive_json() == {"reason": "malformed", "result": "nack"}
            ws.send_text(json.dumps({"op": "zap"}))
            assert ws.receive_json() == {"reason": "unknown-op", "result": "nack"}

    def test_viz_stream_schema_then_records(self, served_session):
        _, client = served_session
        with client.websocket_connect("/viz") as ws:
            first = ws.receive_json()
            assert first["type"] == "schema"
            assert any(c["name"] == "cmd.tau" for c in first["channels"])
            got = 0
            deadline = time.time() + 10
            while got < 10 and time.time() < deadline:
                if ws.receive_json()["type"] == "record":
                    got += 1
            assert got == 10

    def test_health_and_rest_mirrors(self, served_session):
        _, client = served_session
        assert client.get("/health").json()["status"] == "ok"
        assert client.get("/schema").json()["version"] == 1
        r = client.post("/params", json={"key": "mpc.ref_velocity.x",
                                         "value": 0.1})
        assert r.json()["result"] == "ack"
        r = client.get("/params/mpc.ref_velocity.x")
        assert r.json()["value"] == 0.1
        r = client.post("/interrupt", json={"code": "bogus"})
        assert r.json()["result"] == "nack"
