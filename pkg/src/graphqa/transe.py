"""Translational embeddings trained with a margin-based ranking loss.

For a valid triple the head vector plus the relation vector should land on
the tail vector; training pushes each positive at least ``margin`` closer
than a corrupted negative under the configured distance. Plain per-pair SGD,
deterministic per seed, single-threaded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ArgumentError,
    ExhaustionError,
    NotFoundError,
    NumericalError,
    ParseError,
)
from .kg import Graph, Triple

NORMS = ("L1", "L2")


@dataclass
class TransEHyper:
    dim: int = 100
    learning_rate: float = 0.01
    margin: float = 1.0
    norm: str = "L2"
    epochs: int = 500
    batch_size: int = 64
    seed: int = 7

    def validate(self) -> None:
        if self.dim <= 0:
            raise ArgumentError(f"dim must be positive, got {self.dim}")
        if self.learning_rate <= 0:
            raise ArgumentError("learning rate must be positive")
        if self.margin <= 0:
            raise ArgumentError("margin must be positive")
        if self.norm not in NORMS:
            raise ArgumentError(f"norm must be L1 or L2, got {self.norm!r}")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ArgumentError("epochs and batch size must be positive")


@dataclass
class EmbeddingTable:
    """Entity and relation vectors; entity rows are unit L2 after each epoch."""

    entity_vecs: np.ndarray
    relation_vecs: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.entity_vecs.shape[1])

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.entity_vecs.copy(), self.relation_vecs.copy())


@dataclass(frozen=True)
class LinkPredReport:
    mean_rank: float
    hits_at_1: float
    hits_at_10: float


def init_embeddings(g: Graph, hyper: TransEHyper) -> EmbeddingTable:
    """Uniform init in [-6/sqrt(k), +6/sqrt(k)], then entity rows normalized."""
    hyper.validate()
    if g.num_entities == 0 or g.num_relations == 0:
        raise ArgumentError("graph must have entities and relations")
    rng = np.random.default_rng(hyper.seed)
    bound = 6.0 / math.sqrt(hyper.dim)
    ent = rng.uniform(-bound, bound, size=(g.num_entities, hyper.dim))
    rel = rng.uniform(-bound, bound, size=(g.num_relations, hyper.dim))
    _normalize_rows(ent)
    return EmbeddingTable(ent, rel)


def _normalize_rows(mat: np.ndarray) -> None:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    np.divide(mat, norms, out=mat, where=norms > 0)


def _distance(diff: np.ndarray, norm: str) -> float:
    if norm == "L1":
        return float(np.sum(np.abs(diff)))
    return float(np.linalg.norm(diff))


def _distance_grad(diff: np.ndarray, d: float, norm: str) -> np.ndarray:
    # Subgradient conventions: sign(0) = 0 for L1, zero vector at d = 0 for L2.
    if norm == "L1":
        return np.sign(diff)
    if d == 0.0:
        return np.zeros_like(diff)
    return diff / d


def score_triple(emb: EmbeddingTable, t: Triple, norm: str = "L2") -> float:
    """Distance of head + relation from tail; lower means more plausible."""
    if norm not in NORMS:
        raise ArgumentError(f"norm must be L1 or L2, got {norm!r}")
    n_ent, n_rel = emb.entity_vecs.shape[0], emb.relation_vecs.shape[0]
    if not (0 <= t.head < n_ent and 0 <= t.tail < n_ent):
        raise NotFoundError(f"entity id out of range in {t}")
    if not 0 <= t.relation < n_rel:
        raise NotFoundError(f"relation id out of range in {t}")
    diff = emb.entity_vecs[t.head] + emb.relation_vecs[t.relation] - emb.entity_vecs[t.tail]
    return _distance(diff, norm)


def sample_negative(g: Graph, t: Triple, rng: np.random.Generator) -> Triple:
    """Corrupt head or tail (coin flip) into a triple absent from the graph.

    Resamples until the corruption is not an existing triple; after
    ``num_entities`` failed attempts on the chosen side it switches sides.
    When random attempts on both sides fail, a systematic sweep settles
    whether any corruption exists at all before raising.
    """
    n = g.num_entities
    if n < 2:
        raise ExhaustionError("graph too small to corrupt triples")
    first_head = bool(rng.random() < 0.5)
    sides = (first_head, not first_head)
    for corrupt_head in sides:
        for _ in range(n):
            cand = int(rng.integers(n))
            neg = (
                Triple(cand, t.relation, t.tail)
                if corrupt_head
                else Triple(t.head, t.relation, cand)
            )
            if neg != t and not g.has_triple(neg):
                return neg
    offset = int(rng.integers(n))
    for corrupt_head in sides:
        for i in range(n):
            cand = (offset + i) % n
            neg = (
                Triple(cand, t.relation, t.tail)
                if corrupt_head
                else Triple(t.head, t.relation, cand)
            )
            if neg != t and not g.has_triple(neg):
                return neg
    raise ExhaustionError(f"no valid corruption exists for {t}")


def train_epoch(
    emb: EmbeddingTable, g: Graph, hyper: TransEHyper, rng: np.random.Generator
) -> float:
    """One shuffled pass; per positive, one filtered negative and one SGD step.

    Returns the mean per-triple hinge loss. Entity rows are re-normalized to
    unit L2 at the end of the pass.
    """
    triples = g.triples
    if not triples:
        return 0.0
    ent = emb.entity_vecs
    rel = emb.relation_vecs
    lr = hyper.learning_rate
    total = 0.0
    order = rng.permutation(len(triples))
    for idx in order:
        pos = triples[idx]
        neg = sample_negative(g, pos, rng)
        diff_pos = ent[pos.head] + rel[pos.relation] - ent[pos.tail]
        diff_neg = ent[neg.head] + rel[neg.relation] - ent[neg.tail]
        d_pos = _distance(diff_pos, hyper.norm)
        d_neg = _distance(diff_neg, hyper.norm)
        loss = hyper.margin + d_pos - d_neg
        if not math.isfinite(loss):
            raise NumericalError(
                f"non-finite loss at triple {int(idx)}", index=int(idx)
            )
        if loss <= 0.0:
            continue
        total += loss
        u_pos = _distance_grad(diff_pos, d_pos, hyper.norm)
        u_neg = _distance_grad(diff_neg, d_neg, hyper.norm)
        ent[pos.head] -= lr * u_pos
        ent[pos.tail] += lr * u_pos
        rel[pos.relation] -= lr * (u_pos - u_neg)
        ent[neg.head] += lr * u_neg
        ent[neg.tail] -= lr * u_neg
    _normalize_rows(ent)
    return total / len(triples)


def train_transe(g: Graph, hyper: TransEHyper) -> tuple[EmbeddingTable, list[float]]:
    """Initialize and train; returns the table and the per-epoch loss trace."""
    hyper.validate()
    emb = init_embeddings(g, hyper)
    rng = np.random.default_rng(hyper.seed)
    trace: list[float] = []
    for epoch in range(hyper.epochs):
        try:
            trace.append(train_epoch(emb, g, hyper, rng))
        except NumericalError as exc:
            raise NumericalError(
                f"epoch {epoch}: {exc}", epoch=epoch, index=exc.index
            ) from exc
    return emb, trace


def evaluate_link_prediction(
    emb: EmbeddingTable,
    g: Graph,
    test: list[Triple],
    norm: str = "L2",
    filtered: bool = True,
) -> LinkPredReport:
    """Rank the true head/tail of each test triple against all entities.

    Filtered evaluation removes competitors that are themselves known true
    triples (graph plus test set). Ties break by entity id ascending.
    """
    if not test:
        raise ArgumentError("test list must be non-empty")
    known = set(g.triples) | set(test)
    ent = emb.entity_vecs
    rel = emb.relation_vecs
    n = ent.shape[0]
    ranks: list[int] = []
    for t in test:
        for replace_tail in (True, False):
            if replace_tail:
                target = ent[t.head] + rel[t.relation]
                true_id = t.tail
                competitor = lambda c: Triple(t.head, t.relation, c)  # noqa: E731
            else:
                target = ent[t.tail] - rel[t.relation]
                true_id = t.head
                competitor = lambda c: Triple(c, t.relation, t.tail)  # noqa: E731
            diffs = ent - target
            if norm == "L1":
                dists = np.sum(np.abs(diffs), axis=1)
            else:
                dists = np.linalg.norm(diffs, axis=1)
            d_true = dists[true_id]
            rank = 1
            for c in range(n):
                if c == true_id:
                    continue
                if filtered and competitor(c) in known:
                    continue
                if dists[c] < d_true or (dists[c] == d_true and c < true_id):
                    rank += 1
            ranks.append(rank)
    arr = np.asarray(ranks, dtype=float)
    return LinkPredReport(
        mean_rank=float(arr.mean()),
        hits_at_1=float(np.mean(arr <= 1)),
        hits_at_10=float(np.mean(arr <= 10)),
    )


# -- persistence ------------------------------------------------------------
#
# Text format: header `transe <dim> <num_entities> <num_relations>` then one
# whitespace-separated row per entity, then per relation; 9 significant digits.


def save_embeddings(emb: EmbeddingTable, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"transe {emb.dim} {emb.entity_vecs.shape[0]} "
            f"{emb.relation_vecs.shape[0]}\n"
        )
        for row in emb.entity_vecs:
            fh.write(" ".join(f"{v:.9g}" for v in row) + "\n")
        for row in emb.relation_vecs:
            fh.write(" ".join(f"{v:.9g}" for v in row) + "\n")


def load_embeddings(path) -> EmbeddingTable:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "transe":
            raise ParseError("bad embedding header", path=str(path), line=1)
        dim, n_ent, n_rel = (int(x) for x in header[1:])
        rows = []
        for line_no, line in enumerate(fh, start=2):
            vals = line.split()
            if len(vals) != dim:
                raise ParseError(
                    f"expected {dim} values, got {len(vals)}",
                    path=str(path),
                    line=line_no,
                )
            rows.append([float(v) for v in vals])
    if len(rows) != n_ent + n_rel:
        raise ParseError(
            f"expected {n_ent + n_rel} rows, got {len(rows)}", path=str(path), line=1
        )
    mat = np.asarray(rows, dtype=float)
    return EmbeddingTable(mat[:n_ent].copy(), mat[n_ent:].copy())
