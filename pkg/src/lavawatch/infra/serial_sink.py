from __future__ import annotations

import asyncio
import logging

from lavawatch.core.alerts import encode_serial
from lavawatch.core.interfaces import EruptionEvent, SinkKind

LOG = logging.getLogger(__name__)


class FileByteSink:
    kind = SinkKind.SERIAL

    def __init__(self, name: str, path: str) -> None:
        self.name = name
        self._path = path

    async def deliver(self, event: EruptionEvent) -> None:
        payload = encode_serial(event)
        await asyncio.to_thread(self._write, payload)
        LOG.info(
            "serial frame written sink=%s event_id=%s bytes=%s",
            self.name,
            event.event_id,
            len(payload),
        )

    def _write(self, payload: bytes) -> None:
        with open(self._path, "ab", buffering=0) as handle:
            handle.write(payload)


class TcpByteSink:
    kind = SinkKind.SERIAL

    def __init__(self, name: str, host: str, port: int, timeout_sec: float = 5.0) -> None:
        self.name = name
        self._host = host
        self._port = port
        self._timeout_sec = timeout_sec

    async def deliver(self, event: EruptionEvent) -> None:
        payload = encode_serial(event)
        async with asyncio.timeout(self._timeout_sec):
            _, writer = await asyncio.open_connection(self._host, self._port)
            try:
                writer.write(payload)
                await writer.drain()
            finally:
                writer.close()
                await writer.wait_closed()
        LOG.info(
            "serial frame sent sink=%s target=%s:%s event_id=%s",
            self.name,
            self._host,
            self._port,
            event.event_id,
        )

