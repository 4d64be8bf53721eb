"""HTTP embedding service wrapping a pretrained sentence encoder.

One model is loaded at process start and served for the whole lifetime:

    POST /embed   {"texts": [...], "model_name": "..."} -> {"embeddings", "dim", "model_name"}
    GET  /health  -> {"status": "ok", "model_name": ..., "dim": ...}

Environment:
    EMBED_SERVICE_MODEL       model id or local path (default all-mpnet-base-v2)
    EMBED_SERVICE_MODEL_NAME  advertised name when MODEL is a local path
    EMBED_SERVICE_MAX_BATCH   request size limit (default 64)
    EMBED_SERVICE_PORT        port for the `embed-service` entry point (default 8090)
"""
from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

DEFAULT_MODEL = "sentence-transformers/all-mpnet-base-v2"


class Encoder:
    """Loads the sentence encoder once and turns text batches into vectors."""

    def __init__(self, model_path: str | None = None, model_name: str | None = None):
        from sentence_transformers import SentenceTransformer

        self.model_path = model_path or os.environ.get("EMBED_SERVICE_MODEL", DEFAULT_MODEL)
        self.model_name = (
            model_name
            or os.environ.get("EMBED_SERVICE_MODEL_NAME")
            or self.model_path
        )
        self.model = SentenceTransformer(self.model_path, device="cpu")
        self.model.eval()
        # renamed to get_embedding_dimension in newer sentence-transformers
        get_dim = getattr(self.model, "get_embedding_dimension", None)
        if get_dim is None:
            get_dim = self.model.get_sentence_embedding_dimension
        self.dim = int(get_dim())

    def encode(self, texts: list[str]) -> list[list[float]]:
        vectors = self.model.encode(
            texts, convert_to_numpy=True, show_progress_bar=False, batch_size=32
        )
        return [[float(x) for x in row] for row in vectors]


def _bad_request(detail: str, status: int = 400) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": detail})


def create_app(
    model_path: str | None = None,
    model_name: str | None = None,
    max_batch: int | None = None,
) -> FastAPI:
    encoder = Encoder(model_path=model_path, model_name=model_name)
    limit = max_batch or int(os.environ.get("EMBED_SERVICE_MAX_BATCH", "64"))
    app = FastAPI(title="embed-service", version="0.1.0")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "model_name": encoder.model_name, "dim": encoder.dim}

    @app.post("/embed")
    async def embed(request: Request):
        # Validated by hand so the error codes stay exact: 400 for malformed
        # or oversized requests, 422 for empty texts, 500 for model failures.
        try:
            body = await request.json()
        except Exception:
            return _bad_request("request body is not valid JSON")
        if not isinstance(body, dict):
            return _bad_request("request body must be a JSON object")
        texts = body.get("texts")
        if not isinstance(texts, list) or not texts:
            return _bad_request("'texts' must be a non-empty list of strings")
        if len(texts) > limit:
            return _bad_request(f"batch of {len(texts)} exceeds the limit of {limit}")
        if not all(isinstance(t, str) for t in texts):
            return _bad_request("'texts' must contain only strings")
        empties = [i for i, t in enumerate(texts) if not t.strip()]
        if empties:
            return _bad_request(f"empty text at positions {empties[:5]}", status=422)
        requested_model = body.get("model_name")
        if requested_model is not None and requested_model != encoder.model_name:
            return _bad_request(
                f"this service runs {encoder.model_name!r}, not {requested_model!r}"
            )
        try:
            embeddings = encoder.encode(texts)
        except Exception as exc:  # surfaced to the client, not swallowed
            return _bad_request(f"model failure: {exc}", status=500)
        return {
            "embeddings": embeddings,
            "dim": encoder.dim,
            "model_name": encoder.model_name,
        }

    return app


def run() -> None:
    import uvicorn

    port = int(os.environ.get("EMBED_SERVICE_PORT", "8090"))
    uvicorn.run(create_app(), host="0.0.0.0", port=port)


if __name__ == "__main__":
    run()
