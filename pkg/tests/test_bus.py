import json
import threading
import time

import numpy as np
import pytest
from websockets.sync.client import connect

from gridcar import stack as stack_mod
from gridcar import wire
from gridcar.bus import Bus, ProtocolError
from gridcar.core import Pose2D
from gridcar.mapio import grid_from_array
from gridcar.mux_esc import StampedCommand
from gridcar.telemetry import TelemetryServer


class TestBus:
    def test_single_subscriber_sees_messages_in_order(self):
        bus = Bus()
        seen = []
        bus.subscribe("/x", seen.append)
        for i in range(3):
            bus.publish("/x", i)
        assert seen == [0, 1, 2]

    def test_fan_out_identical_sequences(self):
        bus = Bus()
        a, b = [], []
        bus.subscribe("/x", a.append)
        bus.subscribe("/x", b.append)
        for i in range(10):
            bus.publish("/x", i)
        assert a == b == list(range(10))

    def test_publish_without_subscribers_is_dropped(self):
        Bus().publish("/void", 42)  # no error

    def test_no_messages_before_subscription(self):
        bus = Bus()
        bus.publish("/x", 0)
        seen = []
        bus.subscribe("/x", seen.append)
        bus.publish("/x", 1)
        assert seen == [1]

    def test_type_mismatch_raises(self):
        bus = Bus()
        bus.publish("/x", 1)
        with pytest.raises(ProtocolError):
            bus.publish("/x", "oops")

    def test_typed_subscribe_conflict(self):
        bus = Bus()
        bus.subscribe("/x", lambda m: None, payload_type=int)
        with pytest.raises(ProtocolError):
            bus.subscribe("/x", lambda m: None, payload_type=str)

    def test_unsubscribe(self):
        bus = Bus()
        seen = []
        sub = bus.subscribe("/x", seen.append)
        bus.publish("/x", 1)
        bus.unsubscribe(sub)
        bus.publish("/x", 2)
        assert seen == [1]

    def test_fifo_across_threads_per_publisher(self):
        bus = Bus()
        seen = []
        bus.subscribe("/x", seen.append)

        def worker(tag):
            for i in range(200):
                bus.publish("/x", (tag, i))

        threads = [threading.Thread(target=worker, args=(t,)) for t in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for tag in range(4):
            ours = [i for (t, i) in seen if t == tag]
            assert ours == list(range(200))


def tiny_grid():
    cells = np.zeros((4, 4), np.uint8)
    cells[0, :] = 1
    return grid_from_array(cells, 0.5, Pose2D(-1.0, -1.0, 0.0))


@pytest.fixture
def server():
    bus = Bus()
    grid = tiny_grid()
    srv = TelemetryServer(bus, wire.map_meta_frame(grid), port=0,
                          snapshot_rate=50.0, now_fn=lambda: 42.0)
    srv.start()
    yield srv, bus, grid
    srv.stop()


def state_frame(stamp=0.0):
    return {"type": "state", "stamp": stamp,
            "pose": {"x": 0, "y": 0, "theta": 0},
            "estimate": {"x": 0, "y": 0, "theta": 0},
            "scan": None, "particles": [], "rollouts": [],
            "mux": {"active_source": None, "speed": 0, "steering": 0},
            "collided": False, "goal": None, "done": False}


class TestTelemetryServer:
    def test_handshake_sends_map_meta_first(self, server):
        srv, bus, grid = server
        with connect(f"ws://127.0.0.1:{srv.port}") as ws:
            frame = wire.loads(ws.recv(timeout=5))
            assert frame["type"] == "map_meta"
            assert frame["width"] == 4 and frame["height"] == 4
            cells = wire.decode_cells(frame["cells"], 16)
            assert np.array_equal(cells.reshape(4, 4), grid.cells)

    def test_state_snapshots_streamed(self, server):
        srv, bus, _ = server
        with connect(f"ws://127.0.0.1:{srv.port}") as ws:
            ws.recv(timeout=5)  # map_meta
            bus.publish(stack_mod.TOPIC_STATE, state_frame(1.25))
            frame = wire.loads(ws.recv(timeout=5))
            assert frame["type"] == "state" and frame["stamp"] == 1.25

    def test_drive_republished_as_teleop_command(self, server):
        srv, bus, _ = server
        got = []
        done = threading.Event()

        def on_cmd(c):
            got.append(c)
            done.set()

        bus.subscribe(stack_mod.TOPIC_TELEOP, on_cmd)
        with connect(f"ws://127.0.0.1:{srv.port}") as ws:
            ws.recv(timeout=5)
            ws.send(wire.dumps({"type": "drive", "speed": 1.0,
                                "steering": 0.1}))
            assert done.wait(5)
        cmd = got[0]
        assert isinstance(cmd, StampedCommand)
        assert cmd.source_id == "teleop"
        assert cmd.stamp == 42.0
        assert (cmd.cmd.speed, cmd.cmd.steering_angle) == (1.0, 0.1)

    def test_goal_republished(self, server):
        srv, bus, _ = server
        got = []
        done = threading.Event()
        bus.subscribe(stack_mod.TOPIC_GOAL,
                      lambda g: (got.append(g), done.set()))
        with connect(f"ws://127.0.0.1:{srv.port}") as ws:
            ws.recv(timeout=5)
            ws.send(wire.dumps({"type": "goal", "x": 0.25, "y": -0.5}))
            assert done.wait(5)
        assert (got[0].x, got[0].y) == (0.25, -0.5)

    def test_estop_republished_as_zero_teleop(self, server):
        srv, bus, _ = server
        got = []
        done = threading.Event()
        bus.subscribe(stack_mod.TOPIC_TELEOP,
                      lambda c: (got.append(c), done.set()))
        with connect(f"ws://127.0.0.1:{srv.port}") as ws:
            ws.recv(timeout=5)
            ws.send(wire.dumps({"type": "estop"}))
            assert done.wait(5)
        assert got[0].cmd.speed == 0.0 and got[0].cmd.steering_angle == 0.0

    def test_malformed_message_gets_error_frame_keeps_connection(self, server):
        srv, bus, _ = server
        with connect(f"ws://127.0.0.1:{srv.port}") as ws:
            ws.recv(timeout=5)
            ws.send("not json at all")
            frame = wire.loads(ws.recv(timeout=5))
            assert frame["type"] == "error"
            # connection still alive: a valid frame still works
            got = threading.Event()
            bus.subscribe(stack_mod.TOPIC_TELEOP, lambda c: got.set())
            ws.send(wire.dumps({"type": "drive", "speed": 0.5,
                                "steering": 0.0}))
            assert got.wait(5)

    def test_unknown_type_gets_error_frame(self, server):
        srv, bus, _ = server
        with connect(f"ws://127.0.0.1:{srv.port}") as ws:
            ws.recv(timeout=5)
            ws.send(wire.dumps({"type": "warp"}))
            assert wire.loads(ws.recv(timeout=5))["type"] == "error"

    def test_two_clients_last_stamp_wins_in_mux(self, server):
        from gridcar.mux_esc import CommandMux, CommandSource
        srv, bus, _ = server
        mux = CommandMux([CommandSource("teleop", 30, 0.3)])
        n_seen = []
        done = threading.Event()

        def on_cmd(c):
            mux.offer(c)
            n_seen.append(c)
            if len(n_seen) >= 2:
                done.set()

        bus.subscribe(stack_mod.TOPIC_TELEOP, on_cmd)
        with connect(f"ws://127.0.0.1:{srv.port}") as a, \
                connect(f"ws://127.0.0.1:{srv.port}") as b:
            a.recv(timeout=5)
            b.recv(timeout=5)
            a.send(wire.dumps({"type": "drive", "speed": 1.0, "steering": 0.0}))
            while len(n_seen) < 1:
                time.sleep(0.01)
            b.send(wire.dumps({"type": "drive", "speed": -1.0, "steering": 0.0}))
            assert done.wait(5)
        cmd, src = mux.select(42.0)
        assert src == "teleop"
        assert cmd.speed == -1.0  # last arrival wins within the source

    def test_slow_client_does_not_block_publishing(self, server):
        srv, bus, _ = server
        # a client that never reads; publishing many states must stay fast
        ws = connect(f"ws://127.0.0.1:{srv.port}")
        ws.recv(timeout=5)
        t0 = time.perf_counter()
        for i in range(2000):
            bus.publish(stack_mod.TOPIC_STATE, state_frame(float(i)))
        elapsed = time.perf_counter() - t0
        assert elapsed < 2.0  # latest-wins: no per-client backpressure
        ws.close()
