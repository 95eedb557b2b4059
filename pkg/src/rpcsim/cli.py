"""Command-line entry points: rpc-sim, rpc-replay, rpc-params."""
from __future__ import annotations

import argparse
import json

from .architecture.config import load_config, load_config_file
from .runner import (DEMOS, SimSession, default_duration, load_events_script)


class _KeyboardReader:
    """Raw-mode stdin keys mapped through the config `keys` bindings."""

    def __init__(self, arch, bindings):
        self.arch = arch
        self.bindings = bindings
        self._stop = False
        self._restore = None
        self.thread = None

    def start(self):
        import sys
        if not sys.stdin.isatty():
            return
        try:
            import termios
            import threading
            import tty
            fd = sys.stdin.fileno()
            self._restore = (fd, termios.tcgetattr(fd))
            tty.setcbreak(fd)
        except Exception:
            return

        def loop():
            import select
            while not self._stop:
                ready, _, _ = select.select([sys.stdin], [], [], 0.1)
                if not ready:
                    continue
                key = sys.stdin.read(1)
                code = self.bindings.get(key)
                if code:
                    self.arch.submit_interrupt(code, source="Keyboard")

        import threading
        self.thread = threading.Thread(target=loop, daemon=True)
        self.thread.start()

    def stop(self):
        self._stop = True
        if self._restore is not None:
            import termios
            fd, attrs = self._restore
            termios.tcsetattr(fd, termios.TCSADRAIN, attrs)


def main_sim(argv=None):
    ap = argparse.ArgumentParser(
        prog="rpc-sim",
        description="Run the built-in test environment with the planning and "
                    "control stack on a robot description")
    ap.add_argument("--robot", help="URDF file (overrides the config entry)")
    ap.add_argument("--config", help="config JSON (defaults merged underneath)")
    ap.add_argument("--demo", default="stand", choices=DEMOS)
    ap.add_argument("--headless", action="store_true",
                    help="run flat out with no realtime pacing")
    ap.add_argument("--duration", type=float, default=None, help="seconds")
    ap.add_argument("--log", help="telemetry log file path")
    ap.add_argument("--serve", type=int, metavar="PORT",
                    help="serve /viz and /params websockets plus the console")
    ap.add_argument("--script", help="events-script JSON of timed interrupts")
    ap.add_argument("--dump-qp", metavar="DIR",
                    help="write every WBC QP to DIR for offline reproduction")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)

    config = load_config_file(args.config) if args.config else load_config()
    if args.robot:
        config["robot"]["urdf"] = args.robot
    if args.seed is not None:
        config["sim"]["seed"] = args.seed
    script = load_events_script(args.script) if args.script else None

    session = SimSession(config=config, demo=args.demo, log_path=args.log,
                         script_events=script, dump_qp=args.dump_qp)

    server = None
    if args.serve:
        from .telemetry.server import ServerThread, build_app, mount_console
        app = build_app(session)
        mount_console(app, "frontend/dist")
        server = ServerThread(app, port=args.serve)
        server.start()
        print(f"serving /viz and /params on port {args.serve}")

    keyboard = None
    if not args.headless:
        keyboard = _KeyboardReader(session.arch, config["keys"])
        keyboard.start()

    duration = args.duration if args.duration is not None else default_duration(args.demo)
    try:
        session.run(duration, realtime=not args.headless)
    except KeyboardInterrupt:
        pass
    finally:
        session.close()
        if keyboard is not None:
            keyboard.stop()
        if server is not None:
            server.stop()
    print(f"done: t={session.sensors.t:.3f}s ticks={session.tick_count} "
          f"state={session.arch.loco.machine.active}")
    return 0


def main_replay(argv=None):
    ap = argparse.ArgumentParser(
        prog="rpc-replay",
        description="Replay a telemetry log, optionally serving it to the console")
    ap.add_argument("log")
    ap.add_argument("--serve", type=int, metavar="PORT")
    ap.add_argument("--rate", type=float, default=1.0)
    ap.add_argument("--start", type=float, default=None,
                    help="seek to this simulated time before playing")
    args = ap.parse_args(argv)

    from .telemetry.hub import TelemetryHub
    from .telemetry.replayer import LogReplayer

    reader_hub = None
    if args.serve:
        from .telemetry.logfile import LogReader
        reader = LogReader(args.log)
        reader_hub = TelemetryHub(reader.schema)
        replayer = LogReplayer(args.log, reader_hub)
        if args.start is not None:
            replayer.seek(args.start)
        replayer.rate = args.rate

        class ReplaySession:
            hub = reader_hub
            sensors = None
            arch = None

        session = ReplaySession()
        session.replayer = replayer
        from .telemetry.server import ServerThread, build_app, mount_console
        app = build_app(session)
        mount_console(app, "frontend/dist")
        server = ServerThread(app, port=args.serve)
        server.start()
        print(f"replaying {args.log} at {args.rate}x on port {args.serve}")
        try:
            replayer.run(realtime=True)
        except KeyboardInterrupt:
            pass
        finally:
            server.stop()
        return 0

    # Headless summary / dump mode.
    from .telemetry.logfile import LogReader
    reader = LogReader(args.log)
    count = 0
    t_first = t_last = None
    per_channel = {}
    for rec in reader.records(start_t=args.start):
        count += 1
        t_first = rec.t if t_first is None else t_first
        t_last = rec.t
        per_channel[rec.channel] = per_channel.get(rec.channel, 0) + 1
    print(f"log: {args.log}")
    print(f"model hash: {reader.schema.model_hash}")
    print(f"records: {count}  span: [{t_first}, {t_last}]  "
          f"truncated: {reader.truncated}")
    for name in sorted(per_channel):
        print(f"  {name}: {per_channel[name]}")
    return 0


def main_params(argv=None):
    ap = argparse.ArgumentParser(
        prog="rpc-params",
        description="Thin client for a running control service")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8800)
    sub = ap.add_subparsers(dest="op", required=True)
    sub.add_parser("list")
    g = sub.add_parser("get")
    g.add_argument("key")
    s = sub.add_parser("set")
    s.add_argument("key")
    s.add_argument("value", help="JSON value, e.g. 0.3 or [120,120,150]")
    i = sub.add_parser("interrupt")
    i.add_argument("code")
    h = sub.add_parser("health")
    args = ap.parse_args(argv)

    import httpx
    base = f"http://{args.host}:{args.port}"
    with httpx.Client(timeout=5.0) as client:
        if args.op == "health":
            r = client.get(f"{base}/health")
        elif args.op == "list":
            r = client.get(f"{base}/params")
        elif args.op == "get":
            r = client.get(f"{base}/params/{args.key}")
        elif args.op == "set":
            r = client.post(f"{base}/params",
                            json={"key": args.key, "value": json.loads(args.value)})
        elif args.op == "interrupt":
            r = client.post(f"{base}/interrupt", json={"code": args.code})
        print(r.text)
        return 0 if r.status_code == 200 else 1
