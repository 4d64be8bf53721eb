from __future__ import annotations

import json
import threading
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from issuegroups.corpus import Corpus, Issue


@pytest.fixture
def tiny_corpus() -> Corpus:
    return Corpus(
        (
            Issue("A1", "technical", "model drift over time", "devices change and scores move"),
            Issue("A2", "technical", "training data not representative", "population shift"),
            Issue("B1", "ethics", "unequal benefit for patients", "care standards may differ"),
            Issue("B2", "ethics", "no consent pathway", "patients unaware of automated scoring"),
        ),
        source="fixture",
    )


def stub_vector(text: str, dim: int) -> list[float]:
    """Deterministic toy embedding used by the stub HTTP service."""
    vec = [0.0] * dim
    for i, ch in enumerate(text.encode("utf-8")):
        vec[(i + ch) % dim] += (ch % 13) - 6.0
    vec[0] += 1.0  # never the zero vector
    return vec


class _StubHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output clean
        pass

    def do_POST(self):
        server: StubEmbedServer = self.server  # type: ignore[assignment]
        if self.path != "/embed":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        body = json.loads(raw)
        server.requests.append(body)
        behavior = server.plan.popleft() if server.plan else "ok"
        if behavior == "error500":
            payload = b"internal failure"
            self.send_response(500)
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)
            return
        if behavior == "garbage":
            payload = b"this is not json"
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)
            return
        dim = server.dim if behavior == "ok" else int(behavior)
        response = {
            "embeddings": [stub_vector(t, dim) for t in body["texts"]],
            "dim": dim,
            "model_name": server.model_name,
        }
        payload = json.dumps(response).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


class StubEmbedServer(ThreadingHTTPServer):
    """In-process embedding service stub with a scriptable behavior plan.

    plan entries: "ok", "error500", "garbage", or an int (serve that dim).
    """

    def __init__(self, dim: int = 16, model_name: str = "stub-model"):
        super().__init__(("127.0.0.1", 0), _StubHandler)
        self.dim = dim
        self.model_name = model_name
        self.plan: deque = deque()
        self.requests: list[dict] = []

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.server_address[1]}"


@pytest.fixture
def stub_service():
    server = StubEmbedServer()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()


def grouping_labels(grouping) -> dict[str, int]:
    """Group index per non-noise id; mirrors Grouping.labels but kept test-local."""
    return {i: gi for gi, g in enumerate(grouping.groups) for i in g.ids}


def random_unit_vectors(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    vectors = rng.normal(size=(n, dim))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
