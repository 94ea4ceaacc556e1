"""Answer generation: a wire client for chat-completion endpoints plus a
deterministic mock that answers strictly from the supplied context.

The mock is intentionally only as good as its context block, so evaluation
differences between retrieval modes measure retrieval quality rather than
model knowledge.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from urllib.parse import urlparse

import httpx

from .errors import ArgumentError, GatewayTimeoutError, ProtocolError, ProviderError
from .kg import Graph, normalize_surface, tokenize
from .retrieval import RELATED_PREFIX, link_entities, link_relation_phrases

MODES = ("plain", "kge", "text_rag", "graphrag")

_FACT_RE = re.compile(r"^(.+?) — (.+?) — (.+?)\.$")

INSUFFICIENT = "insufficient context"


@dataclass(frozen=True)
class PromptBundle:
    """One prepared request: system preamble, context block, question, mode."""

    system: str
    context: str
    question: str
    mode: str

    def validate(self) -> None:
        if not self.question:
            raise ArgumentError("question must be non-empty")
        if self.mode not in MODES:
            raise ArgumentError(f"unknown mode {self.mode!r}")
        if (self.mode == "plain") != (self.context == ""):
            raise ArgumentError("context must be empty exactly when mode is plain")


@dataclass
class Answer:
    text: str
    mentions: frozenset[int]
    latency_ms: float
    provider: str


@dataclass(frozen=True)
class ChatEndpointConfig:
    url: str
    model: str = "chat"
    timeout: float = 30.0
    retries: int = 2
    token_env: str = "GRAPHQA_API_TOKEN"


def _user_content(bundle: PromptBundle) -> str:
    if not bundle.context:
        return bundle.question
    if "{question}" in bundle.context:
        return bundle.context.replace("{question}", bundle.question)
    return bundle.context + "\n\n" + bundle.question


def extract_mentions(g: Graph | None, text: str) -> frozenset[int]:
    if g is None or not text:
        return frozenset()
    return frozenset(m.entity for m in link_entities(g, text))


def complete(
    bundle: PromptBundle,
    cfg: ChatEndpointConfig,
    g: Graph | None = None,
    transport: httpx.BaseTransport | None = None,
) -> Answer:
    """Send one chat request; retried attempts reuse the identical body bytes."""
    bundle.validate()
    payload = {
        "model": cfg.model,
        "messages": [
            {"role": "system", "content": bundle.system},
            {"role": "user", "content": _user_content(bundle)},
        ],
        "temperature": 0,
    }
    body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(cfg.token_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"

    start = time.perf_counter()
    last_exc: Exception | None = None
    response = None
    with httpx.Client(timeout=cfg.timeout, transport=transport) as client:
        for _ in range(cfg.retries + 1):
            try:
                response = client.post(cfg.url, content=body, headers=headers)
                break
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_exc = exc
    if response is None:
        raise GatewayTimeoutError(
            f"endpoint {cfg.url} unreachable after {cfg.retries + 1} attempts: "
            f"{last_exc}"
        )
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    if response.status_code < 200 or response.status_code >= 300:
        raise ProviderError(response.status_code, response.text[:200])
    try:
        data = response.json()
        text = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"cannot read completion from response: {exc}") from exc
    if not isinstance(text, str):
        raise ProtocolError(f"completion content is {type(text).__name__}, not text")
    return Answer(
        text=text,
        mentions=extract_mentions(g, text),
        latency_ms=elapsed_ms,
        provider=urlparse(cfg.url).netloc or cfg.url,
    )


# -- deterministic mock -------------------------------------------------------


@dataclass(frozen=True)
class _ContextFacts:
    triples: tuple[tuple[str, str, str], ...]  # normalized (head, relation, tail)
    tail_surface: dict[str, str] = field(default_factory=dict)
    related: tuple[str, ...] = ()  # normalized entity names from a kge listing
    related_surface: dict[str, str] = field(default_factory=dict)


def _parse_context(context: str) -> _ContextFacts:
    triples = []
    tail_surface: dict[str, str] = {}
    related: list[str] = []
    related_surface: dict[str, str] = {}
    for line in context.splitlines():
        line = line.strip()
        m = _FACT_RE.match(line)
        if m:
            head, rel, tail = (normalize_surface(part) for part in m.groups())
            triples.append((head, rel, tail))
            tail_surface.setdefault(tail, m.group(3).strip())
            continue
        if line.startswith(RELATED_PREFIX):
            for name in line[len(RELATED_PREFIX):].split(", "):
                name = name.strip().rstrip(".")
                if name:
                    norm = normalize_surface(name)
                    related.append(norm)
                    related_surface.setdefault(norm, name)
    return _ContextFacts(tuple(triples), tail_surface, tuple(related), related_surface)


def _tails_of(facts: _ContextFacts, head: str, relations: set[str] | None) -> set[str]:
    return {
        t
        for h, r, t in facts.triples
        if h == head and (relations is None or r in relations)
    }


def mock_complete(bundle: PromptBundle, g: Graph) -> Answer:
    """Answer strictly from the context block; fully deterministic.

    Direct questions return tails of context triples headed by a linked
    question entity; two relation phrases trigger two-step chaining through
    the context; a "both X and Y" pattern intersects the anchors' tails. When
    a relation phrase from the graph occurs in the question, tail lookups are
    restricted to it. Anything unanswerable yields the fixed string
    "insufficient context".
    """
    bundle.validate()
    facts = _parse_context(bundle.context)
    matches = link_entities(g, bundle.question)
    rel_matches = link_relation_phrases(
        g, bundle.question, [(m.start, m.end) for m in matches]
    )
    rel_norms = [normalize_surface(g.relation_name(rid)) for rid, _ in rel_matches]
    linked_norms = [normalize_surface(g.entity_name(m.entity)) for m in matches]
    question_tokens = set(tokenize(bundle.question))

    answers: set[str] = set()
    if facts.triples:
        if "both" in question_tokens and len(linked_norms) >= 2:
            allowed = {rel_norms[0]} if rel_norms else None
            sets = [
                _tails_of(facts, anchor, allowed) for anchor in linked_norms[:2]
            ]
            answers = sets[0] & sets[1]
        elif len(rel_norms) >= 2 and linked_norms:
            # Chain order: the phrase nearest the head entity is hop one,
            # the earlier phrase is hop two.
            hop1, hop2 = rel_norms[-1], rel_norms[0]
            for anchor in linked_norms:
                for h, r, mid in facts.triples:
                    if h == anchor and r == hop1:
                        answers |= _tails_of(facts, mid, {hop2})
        elif linked_norms:
            allowed = {rel_norms[0]} if rel_norms else None
            for anchor in linked_norms:
                answers |= _tails_of(facts, anchor, allowed)
    elif facts.related:
        answers = set(facts.related) - set(linked_norms)

    if not answers:
        return Answer(INSUFFICIENT, frozenset(), 0.0, "mock")

    def surface(norm: str) -> str:
        if norm in facts.tail_surface:
            return facts.tail_surface[norm]
        return facts.related_surface.get(norm, norm)

    def sort_key(norm: str):
        eid = g.find_entity(norm)
        return (0, eid) if eid is not None else (1, norm)

    text = ", ".join(surface(n) for n in sorted(answers, key=sort_key)) + "."
    return Answer(text, extract_mentions(g, text), 0.0, "mock")
