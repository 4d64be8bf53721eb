from __future__ import annotations

import threading
import time

import pytest

pytest.importorskip("fastapi")
from fastapi.testclient import TestClient


@pytest.fixture(scope="session")
def app():
    """One service instance for the whole session; the model loads once.

    Point EMBED_SERVICE_MODEL at a local model directory to run offline.
    """
    from embed_service import create_app

    try:
        return create_app()
    except Exception as exc:  # no model available (offline, no cache)
        pytest.skip(f"sentence encoder unavailable: {exc}")


@pytest.fixture(scope="session")
def client(app) -> TestClient:
    return TestClient(app)


@pytest.fixture(scope="session")
def live_server(app):
    """The same app behind a real socket, for HTTP-client integration tests."""
    import uvicorn

    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 30
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("embed service did not start in time")
        time.sleep(0.05)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=10)
