from __future__ import annotations

import logging
import os
from dataclasses import dataclass

from fastapi import FastAPI

from lavawatch.api.routes import router
from lavawatch.core.interfaces import MonitorConfig
from lavawatch.core.status import StatusBoard

LOG = logging.getLogger(__name__)


@dataclass
class MonitorContainer:
    monitor: MonitorConfig
    board: StatusBoard


def create_monitor_app(
    monitor: MonitorConfig | None = None,
    board: StatusBoard | None = None,
) -> FastAPI:
    configure_logging()
    cfg = monitor or MonitorConfig()
    container = MonitorContainer(
        monitor=cfg,
        board=board or StatusBoard(max_event_history=cfg.max_event_history),
    )
    app = FastAPI(title=cfg.page_title, docs_url=None, redoc_url=None, openapi_url=None)
    app.state.container = container
    app.include_router(router)
    if not cfg.password_hash:
        LOG.warning("monitor has no password_hash configured; every request will get 401")
    LOG.info(
        "monitor app initialized bind=%s:%s max_event_history=%s",
        cfg.bind_host,
        cfg.bind_port,
        cfg.max_event_history,
    )
    return app


def configure_logging() -> None:
    root_logger = logging.getLogger()
    if root_logger.handlers:
        return
    level_name = os.getenv("LOG_LEVEL", "INFO").strip().upper() or "INFO"
    level = getattr(logging, level_name, logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )
