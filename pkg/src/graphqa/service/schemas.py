"""Pydantic request/response models for the query service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class QueryRequest(BaseModel):
    question: str = Field(min_length=1)
    mode: Literal["plain", "kge", "text_rag", "graphrag"] = "graphrag"


class TripleOut(BaseModel):
    head: str
    relation: str
    tail: str
    score: float


class QueryResponse(BaseModel):
    answer: str
    linked_entities: list[str]
    triples: list[TripleOut]
    fusion_fallback: bool
    mode: str
    latency_ms: float


class NodeOut(BaseModel):
    id: int
    name: str


class EdgeOut(BaseModel):
    source: int
    target: int
    relation: str


class NeighborhoodResponse(BaseModel):
    entity: str
    k: int
    nodes: list[NodeOut]
    edges: list[EdgeOut]


class GraphCounts(BaseModel):
    entities: int
    relations: int
    triples: int


class HealthResponse(BaseModel):
    status: str
    counts: GraphCounts
