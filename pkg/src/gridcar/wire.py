"""Telemetry wire protocol: JSON text frames and the map cell encoding.

Frames (field names are load-bearing; the browser client parses these):

server -> client
  map_meta  {type, width, height, resolution, origin:{x,y,theta}, cells}
  state     {type, stamp, pose, estimate, scan, particles, rollouts,
             mux:{active_source, speed, steering}, collided, goal, done}
  error     {type, detail}

client -> server
  drive     {type, speed, steering}
  goal      {type, x, y}
  estop     {type}

``cells`` is a base64 string of run-length records; each record is 3 bytes:
cell value (0=free, 1=occupied, 2=unknown) followed by a big-endian uint16
run count. Runs longer than 65535 are split. Cells are serialized row-major
with row 0 at the grid origin (world-bottom) edge.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from .core import Pose2D
from .mapio import OccupancyGrid


def encode_cells(cells: np.ndarray) -> str:
    flat = np.asarray(cells, dtype=np.uint8).ravel()
    if flat.size == 0:
        return ""
    # run boundaries
    change = np.nonzero(np.diff(flat))[0] + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [flat.size]))
    out = bytearray()
    for s, e in zip(starts, ends):
        v = int(flat[s])
        run = int(e - s)
        while run > 0:
            chunk = min(run, 0xFFFF)
            out += bytes((v, chunk >> 8, chunk & 0xFF))
            run -= chunk
    return base64.b64encode(bytes(out)).decode("ascii")


def decode_cells(data: str, count: int) -> np.ndarray:
    raw = base64.b64decode(data)
    if len(raw) % 3 != 0:
        raise ValueError("cell run-length payload length not a multiple of 3")
    out = np.empty(count, dtype=np.uint8)
    pos = 0
    for i in range(0, len(raw), 3):
        run = (raw[i + 1] << 8) | raw[i + 2]
        out[pos:pos + run] = raw[i]
        pos += run
    if pos != count:
        raise ValueError(f"run-length payload decodes to {pos} cells, expected {count}")
    return out


def pose_dict(p: Pose2D) -> dict:
    return {"x": p.x, "y": p.y, "theta": p.theta}


def map_meta_frame(grid: OccupancyGrid) -> dict:
    return {
        "type": "map_meta",
        "width": grid.width,
        "height": grid.height,
        "resolution": grid.resolution,
        "origin": pose_dict(grid.origin),
        "cells": encode_cells(grid.cells),
    }


def dumps(frame: dict) -> str:
    return json.dumps(frame, separators=(",", ":"), allow_nan=False)


def loads(text: str | bytes) -> dict:
    frame = json.loads(text)
    if not isinstance(frame, dict) or "type" not in frame:
        raise ValueError("frame must be an object with a 'type' field")
    return frame
