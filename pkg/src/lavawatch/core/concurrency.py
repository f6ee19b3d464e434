from __future__ import annotations

import asyncio
import logging
from collections.abc import Awaitable, Callable
from dataclasses import dataclass

from lavawatch.core.interfaces import EruptionEvent

LOG = logging.getLogger(__name__)

EventHandler = Callable[[EruptionEvent, bool], Awaitable[None]]


@dataclass(frozen=True)
class PendingEvent:
    """An event whose snapshot write may still be running; ``stored`` resolves to its outcome."""

    event: EruptionEvent
    stored: asyncio.Future[bool]


@dataclass(frozen=True)
class DispatchStats:
    pending: int
    max_pending: int
    handled: int
    handler_errors: int


class DispatchQueue:
    """Hands events to one consumer task so dispatch never reorders them.

    The frame loop awaits ``enqueue`` and only blocks once ``max_pending`` events
    are waiting. The consumer waits for each event's snapshot before calling the
    handler, in enqueue order. A handler exception is logged and the consumer moves on.
    """

    def __init__(self, handler: EventHandler, max_pending: int = 64) -> None:
        if max_pending < 1:
            raise ValueError("max_pending must be >= 1")
        self._handler = handler
        self._queue: asyncio.Queue[PendingEvent | None] = asyncio.Queue(maxsize=max_pending)
        self._consumer: asyncio.Task[None] | None = None
        self._handled = 0
        self._errors = 0

    @property
    def running(self) -> bool:
        return self._consumer is not None

    async def start(self) -> None:
        if self._consumer is None:
            self._consumer = asyncio.create_task(self._consume(), name="event-dispatch")

    async def enqueue(self, pending: PendingEvent) -> None:
        if self._consumer is None:
            raise RuntimeError("DispatchQueue is not started")
        await self._queue.put(pending)

    async def drain(self) -> None:
        await self._queue.join()

    async def stop(self) -> None:
        if self._consumer is None:
            return
        consumer, self._consumer = self._consumer, None
        await self._queue.put(None)
        await asyncio.gather(consumer, return_exceptions=True)

    def stats(self) -> DispatchStats:
        return DispatchStats(
            pending=self._queue.qsize(),
            max_pending=self._queue.maxsize,
            handled=self._handled,
            handler_errors=self._errors,
        )

    async def _consume(self) -> None:
        while True:
            pending = await self._queue.get()
            try:
                if pending is None:
                    return
                stored = await pending.stored
                await self._handler(pending.event, stored)
                self._handled += 1
            except Exception:
                self._errors += 1
                LOG.exception("event dispatch crashed event_id=%s", pending.event.event_id)
            finally:
                self._queue.task_done()
