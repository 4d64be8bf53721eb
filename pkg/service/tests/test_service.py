from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def embed(client, texts, **extra):
    return client.post("/embed", json={"texts": texts, **extra})


def cosine(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


# --- /health ---


def test_health_reports_model_and_dim(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "ok"
    assert body["dim"] == 768
    assert body["model_name"]


# --- /embed contract ---


def test_embed_single_text_dim_768(client):
    response = embed(client, ["hello world"])
    assert response.status_code == 200
    body = response.json()
    assert body["dim"] == 768
    assert len(body["embeddings"]) == 1
    assert len(body["embeddings"][0]) == 768
    assert all(math.isfinite(x) for x in body["embeddings"][0])


def test_embed_identical_texts_identical_vectors(client):
    body = embed(client, ["the very same sentence", "the very same sentence"]).json()
    assert body["embeddings"][0] == body["embeddings"][1]


def test_embed_deterministic_across_requests(client):
    texts = ["first probe text", "second probe text", "third probe text"]
    first = embed(client, texts).json()
    second = embed(client, texts).json()
    assert first == second


def test_embed_order_preserving(client):
    texts = ["alpha sentence", "beta sentence", "gamma sentence"]
    forward = embed(client, texts).json()["embeddings"]
    backward = embed(client, list(reversed(texts))).json()["embeddings"]
    for i in range(3):
        assert np.allclose(forward[i], backward[2 - i], atol=1e-5)


def test_embed_count_matches_request(client):
    texts = [f"sentence number {i}" for i in range(7)]
    body = embed(client, texts).json()
    assert len(body["embeddings"]) == 7


def test_embed_accepts_matching_model_name(client):
    advertised = client.get("/health").json()["model_name"]
    response = embed(client, ["hello"], model_name=advertised)
    assert response.status_code == 200


# --- error codes: 400 malformed/oversized, 422 empty text, 400 model mismatch ---


def test_embed_rejects_invalid_json_body(client):
    response = client.post(
        "/embed", content=b"not json at all", headers={"Content-Type": "application/json"}
    )
    assert response.status_code == 400


@pytest.mark.parametrize(
    "payload",
    [
        {},
        {"texts": []},
        {"texts": "just a string"},
        {"texts": [1, 2, 3]},
        {"texts": None},
    ],
)
def test_embed_rejects_malformed_payloads(client, payload):
    response = client.post("/embed", json=payload)
    assert response.status_code == 400


def test_embed_rejects_oversized_batch(client):
    response = embed(client, ["x"] * 65)
    assert response.status_code == 400
    assert "65" in response.json()["error"]


def test_embed_rejects_empty_text_with_422(client):
    response = embed(client, ["fine text", "   "])
    assert response.status_code == 422
    assert "1" in response.json()["error"]


def test_embed_rejects_wrong_model_name(client):
    response = embed(client, ["hello"], model_name="some-other-model")
    assert response.status_code == 400


# --- semantic probes: paraphrase beats unrelated on the shipped fixtures ---


def test_probe_pairs_paraphrase_beats_unrelated(client):
    pairs = json.loads((FIXTURES / "probe_pairs.json").read_text())["pairs"]
    assert len(pairs) == 3
    for pair in pairs:
        body = embed(
            client, [pair["anchor"], pair["paraphrase"], pair["unrelated"]]
        ).json()
        anchor, paraphrase, unrelated = body["embeddings"]
        sim_para = cosine(anchor, paraphrase)
        sim_unrel = cosine(anchor, unrelated)
        assert sim_para > sim_unrel, pair["anchor"]
        # same sign as when the margins were recorded
        assert pair["recorded_margin"] > 0


# --- live-service parity with the stored-embeddings provider ---


def test_provider_http_round_trip_matches_provider_file(live_server, tmp_path):
    ig = pytest.importorskip("issuegroups")

    corpus, _ = ig.synth_corpus(2, [3, 3], vocab_overlap=0.0, seed=5)
    provider = ig.provider_http(live_server, timeout=120.0, batch_size=4)
    over_http = ig.embed_corpus(corpus, provider)
    assert over_http.dim == 768

    dump = tmp_path / "service_vectors.json"
    ig.save_embeddings(over_http, dump)
    from_file = ig.embed_corpus(corpus, ig.provider_file(dump))
    assert from_file == over_http  # exact at serialized precision


def test_live_health_matches_embed_model(live_server):
    import urllib.request

    with urllib.request.urlopen(live_server + "/health", timeout=30) as response:
        health = json.loads(response.read())
    assert health["status"] == "ok"
    assert health["dim"] == 768
