"""Query-side retrieval: entity linking, triple ranking, fusion, prompt context.

All operations are pure functions over read-only graph and embedding state,
so arbitrarily many queries may run concurrently.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ArgumentError
from .kg import Graph, Subgraph, Triple

_WORD = re.compile(r"[0-9A-Za-z]+")

FACT_LINE = "{head} — {relation} — {tail}."
NO_FACTS_SENTINEL = "No graph facts retrieved."
RELATED_PREFIX = "Related entities: "


@dataclass(frozen=True)
class EntityMatch:
    """One linked span: entity id plus where it sits in the query text."""

    entity: int
    start: int
    end: int
    alias: str

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class FusionVector:
    """Concatenation [entity embedding ; refined embedding], dim 2k."""

    values: np.ndarray
    fallback: bool


def _token_spans(text: str) -> list[tuple[int, int, str]]:
    return [(m.start(), m.end(), m.group(0).casefold()) for m in _WORD.finditer(text)]


def _phrase_matches(
    text: str, index: dict[str, int], max_tokens: int
) -> list[tuple[int, int, int, str]]:
    """All (start, end, id, normalized phrase) token-run matches, longest per start."""
    spans = _token_spans(text)
    out = []
    for i in range(len(spans)):
        for length in range(min(max_tokens, len(spans) - i), 0, -1):
            phrase = " ".join(tok for _, _, tok in spans[i : i + length])
            hit = index.get(phrase)
            if hit is not None:
                out.append((spans[i][0], spans[i + length - 1][1], hit, phrase))
                break
    return out


def link_entities(g: Graph, query: str) -> list[EntityMatch]:
    """Greedy longest-match-first scan of the query against names and aliases.

    Matching normalizes by case-fold and whitespace collapse; overlapping
    shorter matches are suppressed. Offsets index characters of the query.
    """
    if not query:
        raise ArgumentError("query must be non-empty")
    candidates = _phrase_matches(query, g.name_index(), g.max_name_tokens)
    candidates.sort(key=lambda c: (-(c[1] - c[0]), c[0]))
    taken: list[tuple[int, int]] = []
    accepted = []
    for start, end, eid, phrase in candidates:
        if any(start < e and end > s for s, e in taken):
            continue
        taken.append((start, end))
        accepted.append(EntityMatch(eid, start, end, g.surface_form(phrase)))
    accepted.sort(key=lambda m: m.start)
    return accepted


def link_relation_phrases(
    g: Graph, query: str, skip_spans: list[tuple[int, int]] | None = None
) -> list[tuple[int, int]]:
    """Relation surface names found in the query, as (relation id, start).

    Spans overlapping ``skip_spans`` (typically entity matches) are ignored.
    """
    max_tokens = max(
        (len(name.split()) for name in g.relation_index()), default=0
    )
    candidates = _phrase_matches(query, g.relation_index(), max_tokens)
    candidates.sort(key=lambda c: (-(c[1] - c[0]), c[0]))
    taken = list(skip_spans or [])
    accepted = []
    for start, end, rid, _ in candidates:
        if any(start < e and end > s for s, e in taken):
            continue
        taken.append((start, end))
        accepted.append((rid, start))
    accepted.sort(key=lambda m: m[1])
    return accepted


def encode_text(text: str, dim: int, seed: int = 13) -> np.ndarray:
    """Deterministic signed-hash bag-of-tokens encoder, L2-normalized.

    Stands in for a learned sentence encoder; any external encoder producing
    fixed-dim vectors can replace it behind the same call shape.
    """
    if dim <= 0:
        raise ArgumentError(f"dim must be positive, got {dim}")
    vec = np.zeros(dim, dtype=float)
    for m in _WORD.finditer(text.casefold()):
        digest = hashlib.sha256(f"{seed}\x1f{m.group(0)}".encode()).digest()
        bucket = int.from_bytes(digest[:4], "big") % dim
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def serialize_triple(g: Graph, t: Triple) -> str:
    return (
        f"{g.entity_name(t.head)} {g.relation_name(t.relation)} "
        f"{g.entity_name(t.tail)}"
    )


def rank_triples(
    g: Graph,
    sub: Subgraph,
    matches: list[EntityMatch],
    refined: np.ndarray,
    query_vec: np.ndarray,
    alpha: float = 0.5,
    encoder_seed: int = 13,
    text_cache: dict[int, np.ndarray] | None = None,
) -> list[tuple[Triple, float]]:
    """Score and sort candidate triples, best first.

    score = alpha * (refined-embedding similarity to the closest matched
    entity, over both endpoints) + (1 - alpha) * (text similarity between the
    query and the serialized triple). Ties keep graph insertion order.
    """
    matched_ids = sorted({m.entity for m in matches})
    dim = len(query_vec)
    scored = []
    for t in sub.triples:
        graph_side = 0.0
        for m in matched_ids:
            for endpoint in (t.head, t.tail):
                c = _cosine(refined[m], refined[endpoint])
                if c > graph_side:
                    graph_side = c
        tid = g.triple_id(t)
        if text_cache is not None and tid in text_cache:
            tvec = text_cache[tid]
        else:
            tvec = encode_text(serialize_triple(g, t), dim, encoder_seed)
            if text_cache is not None:
                text_cache[tid] = tvec
        text_side = _cosine(query_vec, tvec)
        score = alpha * graph_side + (1.0 - alpha) * text_side
        scored.append((t, score, tid))
    scored.sort(key=lambda item: (-item[1], item[2]))
    return [(t, score) for t, score, _ in scored]


def fuse_embeddings(e_d: np.ndarray, g_d: np.ndarray) -> FusionVector:
    """Exact concatenation; an all-zero refined vector falls back to e_d."""
    if e_d.shape != g_d.shape:
        raise ArgumentError(f"dim mismatch: {e_d.shape} vs {g_d.shape}")
    fallback = not np.any(g_d)
    second = e_d if fallback else g_d
    return FusionVector(np.concatenate([e_d, second]), fallback)


def default_template() -> str:
    return (
        resources.files("graphqa").joinpath("templates/prompt.txt").read_text("utf-8")
    )


def build_context(
    g: Graph,
    ranked: list[tuple[Triple, float]],
    matches: list[EntityMatch],
    budget: int,
    template: str | None = None,
) -> str:
    """Render the top-budget triples into the prompt template.

    Fills {entities} and {facts}; the {question} placeholder stays for the
    gateway to substitute at send time.
    """
    if budget < 1:
        raise ArgumentError(f"budget must be >= 1, got {budget}")
    if template is None:
        template = default_template()
    names = []
    for m in sorted(matches, key=lambda m: m.start):
        name = g.entity_name(m.entity)
        if name not in names:
            names.append(name)
    entities = ", ".join(names) if names else "none"
    lines = [
        FACT_LINE.format(
            head=g.entity_name(t.head),
            relation=g.relation_name(t.relation),
            tail=g.entity_name(t.tail),
        )
        for t, _ in ranked[:budget]
    ]
    facts = "\n".join(lines) if lines else NO_FACTS_SENTINEL
    return template.replace("{entities}", entities).replace("{facts}", facts)
