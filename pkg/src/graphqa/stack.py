"""Loaded pipeline state shared by the service, the CLI, and the bench.

A stack bundles the graph, the trained embeddings, the refined node vectors,
and a gateway; it is immutable after construction, so concurrent queries are
safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GatewayError
from .gateway import (
    MODES,
    Answer,
    ChatEndpointConfig,
    PromptBundle,
    complete,
    mock_complete,
)
from .gcn import GcnParams, build_normalized_adjacency, gcn_forward
from .kg import Graph, Triple
from .retrieval import (
    NO_FACTS_SENTINEL,
    RELATED_PREFIX,
    EntityMatch,
    FusionVector,
    build_context,
    default_template,
    encode_text,
    fuse_embeddings,
    link_entities,
    rank_triples,
)
from .transe import EmbeddingTable

SYSTEM_PREAMBLE = (
    "Answer the question using only the provided context. "
    "If the context is not sufficient, say so."
)


@dataclass
class RetrievalParams:
    hop: int = 2
    budget: int = 12
    alpha: float = 0.5
    encoder_seed: int = 13
    encoder_dim: int = 256  # hash buckets; independent of the embedding dim
    kge_top_n: int = 8


@dataclass
class QueryOutcome:
    """Everything a query produced, for provenance rendering."""

    answer: Answer
    mode: str
    matches: list[EntityMatch]
    evidence: list[tuple[Triple, float]]  # budget-truncated, scores descending
    fusions: list[FusionVector]
    context: str

    @property
    def fusion_fallback(self) -> bool:
        return any(f.fallback for f in self.fusions)


@dataclass
class QAStack:
    graph: Graph
    emb: EmbeddingTable
    refined: np.ndarray
    retrieval: RetrievalParams = field(default_factory=RetrievalParams)
    endpoint: ChatEndpointConfig | None = None  # None -> mock gateway
    template: str | None = None
    _text_cache: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.template is None:
            self.template = default_template()

    def answer(self, question: str, mode: str) -> QueryOutcome:
        """Run one question through the requested retrieval mode."""
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        matches: list[EntityMatch] = []
        evidence: list[tuple[Triple, float]] = []
        fusions: list[FusionVector] = []
        context = ""
        if mode != "plain":
            matches = link_entities(self.graph, question)
        if mode == "kge":
            context = self._kge_context(matches)
        elif mode in ("text_rag", "graphrag"):
            hop = 1 if mode == "text_rag" else self.retrieval.hop
            alpha = 0.0 if mode == "text_rag" else self.retrieval.alpha
            ranked: list[tuple[Triple, float]] = []
            if matches:
                sub = self.graph.k_hop_subgraph({m.entity for m in matches}, hop)
                query_vec = encode_text(
                    question, self.retrieval.encoder_dim, self.retrieval.encoder_seed
                )
                ranked = rank_triples(
                    self.graph,
                    sub,
                    matches,
                    self.refined,
                    query_vec,
                    alpha=alpha,
                    encoder_seed=self.retrieval.encoder_seed,
                    text_cache=self._text_cache,
                )
            evidence = ranked[: self.retrieval.budget]
            context = build_context(
                self.graph, ranked, matches, self.retrieval.budget, self.template
            )
            if mode == "graphrag":
                fusions = [
                    fuse_embeddings(
                        self.emb.entity_vecs[m.entity], self.refined[m.entity]
                    )
                    for m in matches
                ]
        bundle = PromptBundle(SYSTEM_PREAMBLE, context, question, mode)
        if self.endpoint is None:
            ans = mock_complete(bundle, self.graph)
        else:
            ans = complete(bundle, self.endpoint, self.graph)
        return QueryOutcome(ans, mode, matches, evidence, fusions, context)

    def _kge_context(self, matches: list[EntityMatch]) -> str:
        """Entity-only context: names nearest the linked entities in
        embedding space, no triples."""
        anchors = sorted({m.entity for m in matches})
        top: list[str] = []
        if anchors:
            ent = self.emb.entity_vecs
            best: dict[int, float] = {}
            for a in anchors:
                dists = np.linalg.norm(ent - ent[a], axis=1)
                for e in range(ent.shape[0]):
                    if e in anchors:
                        continue
                    d = float(dists[e])
                    if e not in best or d < best[e]:
                        best[e] = d
            ordered = sorted(best.items(), key=lambda kv: (kv[1], kv[0]))
            top = [
                self.graph.entity_name(e)
                for e, _ in ordered[: self.retrieval.kge_top_n]
            ]
        listing = RELATED_PREFIX + ", ".join(top) if top else NO_FACTS_SENTINEL
        names = ", ".join(
            dict.fromkeys(self.graph.entity_name(m.entity) for m in matches)
        )
        template = self.template or default_template()
        return template.replace("{entities}", names or "none").replace(
            "{facts}", listing
        )


def build_refined(
    graph: Graph, emb: EmbeddingTable, params: GcnParams, self_loops: bool = False
) -> np.ndarray:
    """Run the trained convolution once over the whole graph."""
    adj = build_normalized_adjacency(graph, self_loops)
    return gcn_forward(params, emb.entity_vecs, adj)


class PipelineError(GatewayError):
    """Gateway failure annotated with the mode and item that triggered it."""

    def __init__(self, mode: str, item_id: str, cause: GatewayError):
        self.mode = mode
        self.item_id = item_id
        self.cause = cause
        super().__init__(f"mode={mode} item={item_id}: {cause}")
