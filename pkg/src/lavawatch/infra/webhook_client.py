from __future__ import annotations

import logging

import httpx

from lavawatch.core.alerts import event_to_json_bytes, format_sms
from lavawatch.core.interfaces import EruptionEvent, SinkKind

LOG = logging.getLogger(__name__)


class WebhookSink:
    kind = SinkKind.WEBHOOK

    def __init__(self, name: str, url: str, timeout_sec: float = 5.0) -> None:
        self.name = name
        self._url = url
        self._timeout_sec = timeout_sec

    async def deliver(self, event: EruptionEvent) -> None:
        body = event_to_json_bytes(event)
        LOG.info(
            "posting event webhook sink=%s event_id=%s bytes=%s",
            self.name,
            event.event_id,
            len(body),
        )
        async with httpx.AsyncClient(timeout=self._timeout_sec) as client:
            response = await client.post(
                self._url,
                content=body,
                headers={"Content-Type": "application/json"},
            )
            response.raise_for_status()


class SmsGatewaySink:
    kind = SinkKind.SMS

    def __init__(self, name: str, url: str, to: str, timeout_sec: float = 5.0) -> None:
        self.name = name
        self._url = url
        self._to = to
        self._timeout_sec = timeout_sec

    async def deliver(self, event: EruptionEvent) -> None:
        text = format_sms(event)
        LOG.info(
            "posting sms sink=%s event_id=%s chars=%s",
            self.name,
            event.event_id,
            len(text),
        )
        async with httpx.AsyncClient(timeout=self._timeout_sec) as client:
            response = await client.post(self._url, json={"to": self._to, "body": text})
            response.raise_for_status()
