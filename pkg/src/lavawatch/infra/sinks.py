from __future__ import annotations

from collections.abc import Sequence

from lavawatch.core.config import parse_host_port
from lavawatch.core.interfaces import AlertSink, SinkConfig, SinkKind
from lavawatch.infra.serial_sink import FileByteSink, TcpByteSink
from lavawatch.infra.webhook_client import SmsGatewaySink, WebhookSink


def build_sinks(configs: Sequence[SinkConfig], timeout_sec: float = 5.0) -> list[AlertSink]:
    sinks: list[AlertSink] = []
    for cfg in configs:
        if cfg.kind == SinkKind.WEBHOOK:
            sinks.append(WebhookSink(cfg.name, cfg.url or "", timeout_sec=timeout_sec))
        elif cfg.kind == SinkKind.SMS:
            sinks.append(
                SmsGatewaySink(cfg.name, cfg.url or "", cfg.to or "", timeout_sec=timeout_sec),
            )
        elif cfg.tcp is not None:
            host, port = parse_host_port(cfg.tcp, f"sink.{cfg.name}.tcp")
            sinks.append(TcpByteSink(cfg.name, host, port, timeout_sec=timeout_sec))
        else:
            sinks.append(FileByteSink(cfg.name, cfg.path or ""))
    return sinks
