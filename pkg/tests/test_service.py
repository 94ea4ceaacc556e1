import numpy as np
import pytest
from fastapi.testclient import TestClient

from graphqa.gcn import GcnHyper, train_gcn
from graphqa.kg import Graph
from graphqa.service.app import create_app
from graphqa.stack import QAStack, RetrievalParams, build_refined
from graphqa.transe import TransEHyper, train_transe


@pytest.fixture(scope="module")
def tobacco_client():
    g = Graph()
    h = g.add_entity("tobacco mosaic disease")
    r = g.add_relation("treated by")
    t = g.add_entity("spraying antiviral agents")
    g.add_triple(h, r, t)
    emb, _ = train_transe(g, TransEHyper(dim=8, epochs=20, seed=1))
    params, _ = train_gcn(g, emb, GcnHyper(epochs=10, seed=1))
    refined = build_refined(g, emb, params)
    stack = QAStack(graph=g, emb=emb, refined=refined, retrieval=RetrievalParams())
    return TestClient(create_app(stack))


@pytest.fixture(scope="module")
def planted_client(planted_stack):
    return TestClient(create_app(planted_stack))


class TestHealth:
    def test_ok_with_counts(self, tobacco_client):
        body = tobacco_client.get("/api/health").json()
        assert body["status"] == "ok"
        assert body["counts"] == {"entities": 2, "relations": 1, "triples": 1}


class TestModes:
    def test_four_tags(self, tobacco_client):
        assert tobacco_client.get("/api/modes").json() == [
            "plain",
            "kge",
            "text_rag",
            "graphrag",
        ]


class TestQuery:
    def test_worked_example(self, tobacco_client):
        resp = tobacco_client.post(
            "/api/query",
            json={
                "question": "How to prevent tobacco mosaic disease?",
                "mode": "graphrag",
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        assert "spraying antiviral agents" in body["answer"]
        assert body["linked_entities"] == ["tobacco mosaic disease"]
        assert len(body["triples"]) == 1
        assert body["triples"][0]["head"] == "tobacco mosaic disease"
        assert body["triples"][0]["relation"] == "treated by"
        assert body["triples"][0]["tail"] == "spraying antiviral agents"
        assert body["mode"] == "graphrag"
        assert body["latency_ms"] >= 0

    def test_plain_mode_mock(self, tobacco_client):
        body = tobacco_client.post(
            "/api/query", json={"question": "anything", "mode": "plain"}
        ).json()
        assert body["answer"] == "insufficient context"
        assert body["triples"] == []

    def test_malformed_body_400(self, tobacco_client):
        resp = tobacco_client.post("/api/query", json={"mode": "plain"})
        assert resp.status_code == 400
        resp = tobacco_client.post(
            "/api/query", json={"question": "x", "mode": "bogus"}
        )
        assert resp.status_code == 400

    def test_responses_byte_identical_apart_from_latency(self, planted_client):
        g_name = None
        for _ in range(2):
            pass
        q = {"question": "What treated by disease0?", "mode": "graphrag"}
        a = planted_client.post("/api/query", json=q).json()
        b = planted_client.post("/api/query", json=q).json()
        a.pop("latency_ms")
        b.pop("latency_ms")
        assert a == b


class TestNeighborhood:
    def test_one_hop_on_paper_head(self, tobacco_client):
        resp = tobacco_client.get(
            "/api/graph/neighborhood",
            params={"entity": "tobacco mosaic disease", "k": 1},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["nodes"]) == 2
        assert len(body["edges"]) == 1
        assert body["edges"][0]["relation"] == "treated by"

    def test_zero_hops_seed_only(self, tobacco_client):
        body = tobacco_client.get(
            "/api/graph/neighborhood",
            params={"entity": "tobacco mosaic disease", "k": 0},
        ).json()
        assert len(body["nodes"]) == 1
        assert body["edges"] == []

    def test_unknown_entity_404(self, tobacco_client):
        resp = tobacco_client.get(
            "/api/graph/neighborhood", params={"entity": "martian blight"}
        )
        assert resp.status_code == 404

    def test_alias_lookup(self, planted_client, planted_stack):
        name = planted_stack.graph.entity_name(0)
        resp = planted_client.get(
            "/api/graph/neighborhood", params={"entity": name.upper(), "k": 1}
        )
        assert resp.status_code == 200
