from __future__ import annotations

import json

import httpx
import pytest

from lavawatch.core.alerts import event_to_json_bytes
from lavawatch.infra.webhook_client import SmsGatewaySink, WebhookSink


class FakeAsyncClient:
    def __init__(self, timeout: float, status_code: int = 200) -> None:
        self.timeout = timeout
        self.status_code = status_code
        self.posts: list[tuple[str, dict]] = []

    async def __aenter__(self):
        return self

    async def __aexit__(self, exc_type, exc, tb):
        return False

    async def post(self, url: str, **kwargs):
        self.posts.append((url, kwargs))
        return FakeResponse(url, self.status_code)


class FakeResponse:
    def __init__(self, url: str, status_code: int) -> None:
        self.url = url
        self.status_code = status_code

    def raise_for_status(self) -> None:
        if self.status_code >= 400:
            request = httpx.Request("POST", self.url)
            raise httpx.HTTPStatusError(
                f"status {self.status_code}",
                request=request,
                response=httpx.Response(self.status_code, request=request),
            )


def _install(monkeypatch, status_code: int = 200) -> list[FakeAsyncClient]:
    created: list[FakeAsyncClient] = []

    def fake_client(*, timeout: float):
        client = FakeAsyncClient(timeout=timeout, status_code=status_code)
        created.append(client)
        return client

    monkeypatch.setattr("lavawatch.infra.webhook_client.httpx.AsyncClient", fake_client)
    return created


async def test_webhook_posts_canonical_json(monkeypatch, make_event) -> None:
    created = _install(monkeypatch)
    event = make_event()

    await WebhookSink("ops", "https://hooks.example/lava", timeout_sec=2.5).deliver(event)

    assert len(created) == 1
    assert created[0].timeout == 2.5
    url, kwargs = created[0].posts[0]
    assert url == "https://hooks.example/lava"
    assert kwargs["content"] == event_to_json_bytes(event)
    assert kwargs["headers"] == {"Content-Type": "application/json"}
    assert json.loads(kwargs["content"])["flows"][0]["direction"] == "SW"


async def test_webhook_raises_on_http_error(monkeypatch, make_event) -> None:
    _install(monkeypatch, status_code=503)

    with pytest.raises(httpx.HTTPStatusError):
        await WebhookSink("ops", "https://hooks.example/lava").deliver(make_event())


async def test_sms_gateway_posts_text(monkeypatch, make_event) -> None:
    created = _install(monkeypatch)

    await SmsGatewaySink("phone", "https://sms.example/send", "+5550100").deliver(make_event())

    url, kwargs = created[0].posts[0]
    assert url == "https://sms.example/send"
    assert kwargs["json"] == {
        "to": "+5550100",
        "body": "VOLCAN ALERTA WARNING flujos=1 dir=SW area=400px t=2015-08-14T12:00:00Z",
    }
