"""Websocket/HTTP services for the operator console and scripted clients.

Two independent endpoints share one FastAPI app:
  /viz     - streams schema + channel records as JSON frames
  /params  - request/response parameter ops and command messages

Wire shapes are documented in docs/wire_protocol.md; responses use
{"result": "ack"|"nack", "reason": ...}.  Each websocket session runs on
the server's event loop and exchanges data with the control loop only
through the telemetry hub queues and the architecture's inbound queues.
"""
from __future__ import annotations

import asyncio
import json
import queue
import threading
from typing import Any, Optional

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..architecture.teleop import TeleopPose
from .records import encode_payload


class HealthResponse(BaseModel):
    status: str
    sim_time: float
    locomotion_state: str
    manipulation_state: str
    fault_count: int
    frozen: bool


class ChannelInfo(BaseModel):
    name: str
    kind: str
    unit: str = ""


class SchemaResponse(BaseModel):
    version: int
    channels: list[ChannelInfo]
    model_hash: str


class InterruptRequest(BaseModel):
    code: str = Field(min_length=1)


class SetParamRequest(BaseModel):
    key: str
    value: Any = None


class AckResponse(BaseModel):
    result: str
    reason: Optional[str] = None


def _nack(reason):
    return {"result": "nack", "reason": reason}


def _ack(**extra):
    out = {"result": "ack"}
    out.update(extra)
    return out


def build_app(session) -> FastAPI:
    """FastAPI app bound to a live SimSession (or a replay source)."""
    app = FastAPI(title="robot control service")
    hub = session.hub
    arch = getattr(session, "arch", None)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            sim_time=float(session.sensors.t) if session.sensors else 0.0,
            locomotion_state=arch.loco.machine.active if arch else "replay",
            manipulation_state=arch.manip.machine.active if arch else "replay",
            fault_count=arch.fault_count if arch else 0,
            frozen=arch.frozen if arch else False,
        )

    @app.get("/schema", response_model=SchemaResponse)
    def schema():
        doc = hub.schema.to_dict()
        return SchemaResponse(
            version=doc["version"],
            channels=[ChannelInfo(**c) for c in doc["channels"]],
            model_hash=doc["model_hash"],
        )

    @app.post("/interrupt", response_model=AckResponse)
    def interrupt(req: InterruptRequest):
        reply = _handle_params_op(arch, {"op": "interrupt", "code": req.code})
        return AckResponse(**reply)

    # REST mirrors of the /params websocket ops for thin clients.
    @app.get("/params")
    def list_params():
        return _handle_params_op(arch, {"op": "list"})

    @app.get("/params/{key:path}")
    def get_param(key: str):
        return _handle_params_op(arch, {"op": "get", "key": key})

    @app.post("/params")
    def set_param(req: SetParamRequest):
        return _handle_params_op(arch, {"op": "set", "key": req.key,
                                        "value": req.value})

    @app.websocket("/viz")
    async def viz(ws: WebSocket):
        await ws.accept()
        await ws.send_text(json.dumps(
            {"type": "schema", **hub.schema.to_dict()},
            separators=(",", ":"), sort_keys=True))
        sub = hub.subscribe()
        loop = asyncio.get_event_loop()
        try:
            while True:
                try:
                    rec = await loop.run_in_executor(None, sub.queue.get, True, 0.25)
                except queue.Empty:
                    # Drain any inbound control frames (seek/rate for replay).
                    try:
                        msg = await asyncio.wait_for(ws.receive_text(), timeout=0.001)
                        _handle_viz_inbound(session, msg)
                    except (asyncio.TimeoutError, json.JSONDecodeError):
                        pass
                    continue
                frame = {"type": "record", "t": rec.t, "channel": rec.channel,
                         "payload": encode_payload(rec.payload)}
                await ws.send_text(json.dumps(frame, separators=(",", ":"),
                                              sort_keys=True))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            hub.unsubscribe(sub)

    @app.websocket("/params")
    async def params(ws: WebSocket):
        await ws.accept()
        loop = asyncio.get_event_loop()
        while True:
            try:
                raw = await ws.receive_text()
            except (WebSocketDisconnect, RuntimeError):
                break
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                await ws.send_text(json.dumps(_nack("malformed"),
                                              sort_keys=True, separators=(",", ":")))
                continue
            reply = await loop.run_in_executor(None, _handle_params_op, arch, msg)
            await ws.send_text(json.dumps(reply, sort_keys=True,
                                          separators=(",", ":")))

    return app


def _handle_viz_inbound(session, raw):
    msg = json.loads(raw)
    op = msg.get("op")
    replayer = getattr(session, "replayer", None)
    if replayer is None:
        return
    if op == "seek":
        replayer.seek(float(msg.get("t", 0.0)))
    elif op == "rate":
        replayer.rate = float(msg.get("value", 1.0))
    elif op == "pause":
        replayer.paused = True
    elif op == "resume":
        replayer.paused = False


def _handle_params_op(arch, msg):
    if not isinstance(msg, dict) or "op" not in msg:
        return _nack("malformed")
    op = msg["op"]
    if arch is None:
        return _nack("replay")
    if op == "list":
        return _ack(keys=arch.params.keys())
    if op == "get":
        key = msg.get("key")
        ok, reason, value = arch.params.get(key) if key else (False, "unknown", None)
        if not ok:
            return _nack(reason)
        return _ack(key=key, value=value)
    if op == "set":
        key = msg.get("key")
        if key is None or "value" not in msg:
            return _nack("malformed")
        req = arch.submit_parameter(key, msg["value"])
        ok, reason = req.wait(timeout=2.0)
        if not req.done.is_set():
            return _nack("timeout")
        return _ack() if ok else _nack(reason)
    if op == "interrupt":
        code = msg.get("code")
        if not code:
            return _nack("malformed")
        from ..architecture.control import INTERRUPT_CODES
        if code not in INTERRUPT_CODES:
            return _nack("unknown")
        arch.submit_interrupt(code, source="Console")
        return _ack()
    if op == "teleop":
        pose = msg.get("pose")
        if not isinstance(pose, dict) or "pos" not in pose:
            return _nack("malformed")
        arch.submit_teleop(TeleopPose(
            t=float(pose.get("t", 0.0)),
            pos=np.asarray(pose["pos"], dtype=float),
            quat=np.asarray(pose.get("quat", [1, 0, 0, 0]), dtype=float),
            gripper=bool(pose.get("gripper", False))))
        return _ack()
    return _nack("unknown-op")


def mount_console(app: FastAPI, dist_dir):
    """Serve the operator console build when it exists."""
    import os
    if os.path.isdir(dist_dir):
        app.mount("/", StaticFiles(directory=dist_dir, html=True), name="console")


class ServerThread:
    """uvicorn on a daemon thread; the control loop stays in the caller."""

    def __init__(self, app, host="127.0.0.1", port=8800):
        import uvicorn
        self.config = uvicorn.Config(app, host=host, port=port, log_level="warning")
        self.server = uvicorn.Server(self.config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def start(self):
        self.thread.start()

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=3.0)
