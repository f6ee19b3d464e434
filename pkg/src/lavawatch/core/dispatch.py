from __future__ import annotations

import asyncio
import logging
from collections.abc import Awaitable, Callable, Sequence
from dataclasses import dataclass

from lavawatch.core.interfaces import AlertSink, DeliveryReport, EruptionEvent, SinkOutcome

LOG = logging.getLogger(__name__)

Sleep = Callable[[float], Awaitable[None]]


@dataclass(frozen=True)
class RetryPolicy:
    """``max_attempts`` counts every try, the first included.

    The default 3 tries wait 1 s and 2 s in between; a 4 s wait needs ``max_attempts=4``.
    """

    max_attempts: int = 3
    backoff_base_sec: float = 1.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.backoff_base_sec < 0:
            raise ValueError("backoff_base_sec must be >= 0")

    def delay_before(self, attempt: int) -> float:
        """Backoff before ``attempt`` (2-based): base, 2*base, 4*base, ..."""
        return self.backoff_base_sec * 2 ** (attempt - 2)


async def dispatch(
    event: EruptionEvent,
    sinks: Sequence[AlertSink],
    policy: RetryPolicy | None = None,
    sleep: Sleep = asyncio.sleep,
) -> DeliveryReport:
    retry = policy or RetryPolicy()
    outcomes = await asyncio.gather(
        *(_deliver_with_retry(event, sink, retry, sleep) for sink in sinks),
    )
    report = DeliveryReport(event_id=event.event_id, outcomes=tuple(outcomes))
    LOG.info(
        "event dispatched event_id=%s sinks=%s failed=%s",
        event.event_id,
        len(report.outcomes),
        ",".join(report.failed) or "-",
    )
    return report


class AlertDispatcher:
    def __init__(
        self,
        sinks: Sequence[AlertSink],
        policy: RetryPolicy | None = None,
        sleep: Sleep = asyncio.sleep,
    ) -> None:
        self._sinks = tuple(sinks)
        self._policy = policy or RetryPolicy()
        self._sleep = sleep

    @property
    def sinks(self) -> tuple[AlertSink, ...]:
        return self._sinks

    async def dispatch(self, event: EruptionEvent) -> DeliveryReport:
        return await dispatch(event, self._sinks, self._policy, self._sleep)


async def _deliver_with_retry(
    event: EruptionEvent,
    sink: AlertSink,
    policy: RetryPolicy,
    sleep: Sleep,
) -> SinkOutcome:
    last_error = ""
    for attempt in range(1, policy.max_attempts + 1):
        if attempt > 1:
            await sleep(policy.delay_before(attempt))
        try:
            await sink.deliver(event)
        except Exception as exc:
            last_error = f"{type(exc).__name__}: {exc}"
            LOG.warning(
                "sink delivery failed sink=%s event_id=%s attempt=%s error=%s",
                sink.name,
                event.event_id,
                attempt,
                last_error,
            )
            continue
        return SinkOutcome(name=sink.name, kind=sink.kind, delivered=True, attempts=attempt)
    LOG.error(
        "sink delivery exhausted sink=%s event_id=%s attempts=%s",
        sink.name,
        event.event_id,
        policy.max_attempts,
    )
    return SinkOutcome(
        name=sink.name,
        kind=sink.kind,
        delivered=False,
        attempts=policy.max_attempts,
        error=last_error,
    )
