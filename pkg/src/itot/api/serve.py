"""Run the API under uvicorn with a stoppable handle."""

from __future__ import annotations

import threading
import time

import uvicorn

from ..errors import BindFailure
from .app import ApiConfig, create_app

STARTUP_TIMEOUT = 10.0


class ServiceHandle:
    """A running service; ``stop()`` triggers graceful shutdown."""

    def __init__(self, server: uvicorn.Server, thread: threading.Thread):
        self._server = server
        self._thread = thread

    @property
    def port(self) -> int:
        for srv in self._server.servers:
            for sock in srv.sockets:
                return sock.getsockname()[1]
        raise RuntimeError("server has no bound socket")

    def stop(self, timeout: float = 10.0) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=timeout)

    def wait(self) -> None:
        self._thread.join()


def serve(config: ApiConfig | None = None, host: str = "127.0.0.1") -> ServiceHandle:
    """Start the service in a background thread and return its handle.

    In-flight expansions get a grace period on shutdown; any still running
    are aborted with an error event.
    """
    config = config or ApiConfig.from_env()
    app = create_app(config)
    server = uvicorn.Server(
        uvicorn.Config(app, host=host, port=config.port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, name="itot-api", daemon=True)
    thread.start()
    deadline = time.monotonic() + STARTUP_TIMEOUT
    while not server.started:
        if not thread.is_alive():
            raise BindFailure(f"service failed to start on port {config.port}")
        if time.monotonic() > deadline:
            server.should_exit = True
            raise BindFailure(f"service did not start within {STARTUP_TIMEOUT}s")
        time.sleep(0.01)
    return ServiceHandle(server, thread)
