"""HTTP query service over a loaded, immutable pipeline stack.

The service performs no writes; training happens only through the CLI, so
concurrent requests share state safely.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..errors import GatewayError
from ..gateway import MODES
from ..stack import QAStack
from .schemas import (
    EdgeOut,
    GraphCounts,
    HealthResponse,
    NeighborhoodResponse,
    NodeOut,
    QueryRequest,
    QueryResponse,
    TripleOut,
)


def create_app(stack: QAStack, cors_origin: str = "*") -> FastAPI:
    app = FastAPI(title="graphqa", docs_url="/api/docs", openapi_url="/api/openapi.json")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin] if cors_origin != "*" else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    g = stack.graph

    @app.exception_handler(RequestValidationError)
    async def malformed_body(_: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc.errors())})

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok",
            counts=GraphCounts(
                entities=g.num_entities,
                relations=g.num_relations,
                triples=g.num_triples,
            ),
        )

    @app.get("/api/modes")
    def modes() -> list[str]:
        return list(MODES)

    @app.post("/api/query", response_model=QueryResponse)
    def query(request: QueryRequest) -> QueryResponse:
        start = time.perf_counter()
        try:
            outcome = stack.answer(request.question, request.mode)
        except GatewayError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        latency_ms = (time.perf_counter() - start) * 1000.0
        return QueryResponse(
            answer=outcome.answer.text,
            linked_entities=[g.entity_name(m.entity) for m in outcome.matches],
            triples=[
                TripleOut(
                    head=g.entity_name(t.head),
                    relation=g.relation_name(t.relation),
                    tail=g.entity_name(t.tail),
                    score=score,
                )
                for t, score in outcome.evidence
            ],
            fusion_fallback=outcome.fusion_fallback,
            mode=request.mode,
            latency_ms=round(latency_ms, 3),
        )

    @app.get("/api/graph/neighborhood", response_model=NeighborhoodResponse)
    def neighborhood(entity: str, k: int = 1) -> NeighborhoodResponse:
        eid = g.find_entity(entity)
        if eid is None:
            raise HTTPException(status_code=404, detail=f"entity not found: {entity}")
        if k < 0:
            raise HTTPException(status_code=400, detail="k must be >= 0")
        sub = g.k_hop_subgraph({eid}, k)
        node_ids = {eid}
        for t in sub.triples:
            node_ids.add(t.head)
            node_ids.add(t.tail)
        return NeighborhoodResponse(
            entity=g.entity_name(eid),
            k=k,
            nodes=[NodeOut(id=n, name=g.entity_name(n)) for n in sorted(node_ids)],
            edges=[
                EdgeOut(source=t.head, target=t.tail, relation=g.relation_name(t.relation))
                for t in sub.triples
            ],
        )

    return app
