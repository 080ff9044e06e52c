"""In-process publish/subscribe bus.

Topics are typed on first use: the first publish or typed subscribe pins
the payload type for the lifetime of the bus, and later mismatches raise
ProtocolError. Delivery is synchronous in the publisher's thread under a
per-topic lock, which gives per-topic FIFO ordering and guarantees no
subscriber handler ever runs concurrently with itself on the same topic.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable


class ProtocolError(Exception):
    pass


@dataclass
class _Topic:
    name: str
    payload_type: type | None = None
    handlers: dict[int, Callable[[Any], None]] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass(frozen=True)
class Subscription:
    topic: str
    handle: int


class Bus:
    def __init__(self):
        self._topics: dict[str, _Topic] = {}
        self._lock = threading.Lock()
        self._next_handle = 0

    def _topic(self, name: str) -> _Topic:
        with self._lock:
            t = self._topics.get(name)
            if t is None:
                t = self._topics[name] = _Topic(name)
            return t

    def subscribe(self, topic: str, handler: Callable[[Any], None],
                  payload_type: type | None = None) -> Subscription:
        t = self._topic(topic)
        with t.lock:
            if payload_type is not None:
                if t.payload_type is None:
                    t.payload_type = payload_type
                elif t.payload_type is not payload_type:
                    raise ProtocolError(
                        f"topic {topic!r} carries {t.payload_type.__name__}, "
                        f"not {payload_type.__name__}")
            with self._lock:
                handle = self._next_handle
                self._next_handle += 1
            t.handlers[handle] = handler
        return Subscription(topic, handle)

    def unsubscribe(self, sub: Subscription) -> None:
        t = self._topic(sub.topic)
        with t.lock:
            t.handlers.pop(sub.handle, None)

    def publish(self, topic: str, message: Any) -> None:
        t = self._topic(topic)
        with t.lock:
            if t.payload_type is None:
                t.payload_type = type(message)
            elif not isinstance(message, t.payload_type):
                raise ProtocolError(
                    f"topic {topic!r} carries {t.payload_type.__name__}, "
                    f"got {type(message).__name__}")
            handlers = list(t.handlers.values())
            for h in handlers:
                h(message)
