"""WebSocket telemetry/teleoperation server.

Runs an asyncio event loop on its own thread, bridging the in-process bus
to external clients: on connect a client gets the map_meta frame, then the
latest state snapshot at a fixed rate (latest-wins: slow clients skip
frames, they never block the sim loop). Incoming drive/goal/estop frames
are republished onto bus topics.
"""

from __future__ import annotations

import asyncio
import logging
import threading

from . import stack as stack_mod
from . import wire
from .bus import Bus
from .core import AckermannDrive, Pose2D
from .mux_esc import StampedCommand

log = logging.getLogger(__name__)


class TelemetryServer:
    def __init__(self, bus: Bus, map_meta: dict, host: str = "127.0.0.1",
                 port: int = 8077, snapshot_rate: float = 20.0,
                 now_fn=None):
        self.bus = bus
        self.map_meta_text = wire.dumps(map_meta)
        self.host = host
        self.port = port
        self.snapshot_rate = snapshot_rate
        self.now_fn = now_fn or (lambda: 0.0)
        self._latest_state: str | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._server = None
        self._started = threading.Event()
        bus.subscribe(stack_mod.TOPIC_STATE, self._on_state, dict)

    def _on_state(self, frame: dict) -> None:
        self._latest_state = wire.dumps(frame)

    async def _sender(self, ws) -> None:
        period = 1.0 / self.snapshot_rate
        last_sent = None
        while True:
            latest = self._latest_state
            if latest is not None and latest is not last_sent:
                await ws.send(latest)
                last_sent = latest
            await asyncio.sleep(period)

    def _handle_frame(self, frame: dict) -> None:
        kind = frame["type"]
        if kind == "drive":
            cmd = AckermannDrive(float(frame["speed"]), float(frame["steering"]))
            self.bus.publish(stack_mod.TOPIC_TELEOP, StampedCommand(
                stack_mod.TELEOP_SOURCE_ID, self.now_fn(), cmd))
        elif kind == "goal":
            self.bus.publish(stack_mod.TOPIC_GOAL,
                             Pose2D(float(frame["x"]), float(frame["y"]), 0.0))
        elif kind == "estop":
            self.bus.publish(stack_mod.TOPIC_TELEOP, StampedCommand(
                stack_mod.TELEOP_SOURCE_ID, self.now_fn(),
                AckermannDrive(0.0, 0.0)))
        else:
            raise ValueError(f"unknown frame type {kind!r}")

    async def _handler(self, ws) -> None:
        await ws.send(self.map_meta_text)
        sender = asyncio.ensure_future(self._sender(ws))
        try:
            async for message in ws:
                try:
                    self._handle_frame(wire.loads(message))
                except (ValueError, KeyError, TypeError) as e:
                    await ws.send(wire.dumps({"type": "error",
                                              "detail": str(e)}))
        finally:
            sender.cancel()

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name="telemetry")
        self._thread.start()
        if not self._started.wait(10.0):
            raise RuntimeError("telemetry server failed to start")

    def _run(self) -> None:
        asyncio.run(self._main())

    async def _main(self) -> None:
        from websockets.asyncio.server import serve
        self._loop = asyncio.get_running_loop()
        self._stop = asyncio.Event()
        async with serve(self._handler, self.host, self.port) as server:
            self._server = server
            self.port = server.sockets[0].getsockname()[1]
            self._started.set()
            await self._stop.wait()

    def stop(self) -> None:
        if self._loop is not None:
            self._loop.call_soon_threadsafe(self._stop.set)
        if self._thread is not None:
            self._thread.join(10.0)
