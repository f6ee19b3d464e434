from __future__ import annotations

import logging
import socket
import threading
import time

import uvicorn

from lavawatch.core.errors import BindFailure
from lavawatch.core.interfaces import MonitorConfig
from lavawatch.core.status import StatusBoard
from lavawatch.main import create_monitor_app

LOG = logging.getLogger(__name__)
STARTUP_TIMEOUT_SEC = 10.0


class MonitorHandle:
    """Running monitor service; ``stop()`` asks uvicorn to exit and joins its thread."""

    def __init__(self, server: uvicorn.Server, thread: threading.Thread, sock: socket.socket):
        self._server = server
        self._thread = thread
        self._sock = sock
        host, port = sock.getsockname()[:2]
        self.address: tuple[str, int] = (host, port)

    @property
    def running(self) -> bool:
        return self._thread.is_alive()

    def stop(self, timeout_sec: float = 5.0) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=timeout_sec)
        self._sock.close()
        LOG.info("monitor stopped address=%s:%s", *self.address)


def bind_socket(host: str, port: int) -> socket.socket:
    family = socket.AF_INET6 if ":" in host else socket.AF_INET
    sock = socket.socket(family, socket.SOCK_STREAM)
    try:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))
        sock.listen(128)
    except OSError as exc:
        sock.close()
        raise BindFailure(f"cannot bind monitor to {host}:{port}: {exc}") from exc
    sock.set_inheritable(True)
    return sock


def serve_status(cfg: MonitorConfig, board: StatusBoard) -> MonitorHandle:
    sock = bind_socket(cfg.bind_host, cfg.bind_port)
    app = create_monitor_app(cfg, board)
    server = uvicorn.Server(
        uvicorn.Config(app, log_config=None, access_log=False, lifespan="off"),
    )
    thread = threading.Thread(
        target=server.run,
        kwargs={"sockets": [sock]},
        name="lavawatch-monitor",
        daemon=True,
    )
    thread.start()
    deadline = time.monotonic() + STARTUP_TIMEOUT_SEC
    while not server.started:
        if not thread.is_alive() or time.monotonic() > deadline:
            server.should_exit = True
            sock.close()
            raise BindFailure(f"monitor failed to start on {cfg.bind_host}:{cfg.bind_port}")
        time.sleep(0.01)
    handle = MonitorHandle(server, thread, sock)
    LOG.info("monitor listening address=%s:%s", *handle.address)
    return handle
