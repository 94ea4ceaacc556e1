"""Two-layer graph convolution over symmetric-degree-normalized adjacency.

Aggregation weights each neighbor j of node i by 1/sqrt(deg(i)*deg(j)), which
keeps repeated aggregation from blowing up numerically. Forward and backward
passes are written directly against the sparse coefficient list; gradients
are exact reverse-mode and are checked against finite differences in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, NumericalError, ParseError
from .kg import Graph, Triple
from .transe import EmbeddingTable, _distance, _distance_grad, sample_negative


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Sparse symmetric coefficient list; one entry per ordered node pair."""

    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    n_nodes: int

    def aggregate(self, feats: np.ndarray) -> np.ndarray:
        """out[i] = sum_j w_ij * feats[j]; zero rows for isolated nodes."""
        out = np.zeros((self.n_nodes, feats.shape[1]), dtype=feats.dtype)
        if len(self.rows):
            np.add.at(out, self.rows, self.weights[:, None] * feats[self.cols])
        return out

    def aggregate_transpose(self, feats: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n_nodes, feats.shape[1]), dtype=feats.dtype)
        if len(self.rows):
            np.add.at(out, self.cols, self.weights[:, None] * feats[self.rows])
        return out


@dataclass
class GcnParams:
    """Layer weights; ReLU after layer 0, identity (or ReLU) after layer 1."""

    w0: np.ndarray
    w1: np.ndarray
    final_activation: bool = False

    @property
    def in_dim(self) -> int:
        return int(self.w0.shape[0])

    @property
    def hidden_dim(self) -> int:
        return int(self.w0.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.w1.shape[1])


@dataclass
class GcnHyper:
    learning_rate: float = 0.05
    epochs: int = 400
    margin: float = 1.0
    seed: int = 7
    hidden_dim: int = 0  # 0 -> input dim
    norm: str = "L2"
    self_loops: bool = False
    final_activation: bool = False
    # weight of the pull toward the input features; keeps refined vectors in
    # the translational geometry the relation vectors were trained for
    anchor_weight: float = 2.0


def build_normalized_adjacency(g: Graph, self_loops: bool = False) -> NormalizedAdjacency:
    """Undirected incidence from the directed triples.

    Degrees count parallel relations with multiplicity; the coefficient list
    holds one entry per distinct neighbor pair. With ``self_loops`` every node
    gains an (i, i) entry and degrees are recomputed including the loop.
    """
    n = g.num_entities
    deg = np.array([g.degree(e) for e in range(n)], dtype=float)
    pairs: set[tuple[int, int]] = set()
    for t in g.triples:
        if t.head != t.tail:
            pairs.add((t.head, t.tail))
            pairs.add((t.tail, t.head))
    if self_loops:
        deg = deg + 1.0
        pairs.update((i, i) for i in range(n))
    ordered = sorted(pairs)
    rows = np.array([p[0] for p in ordered], dtype=np.int64)
    cols = np.array([p[1] for p in ordered], dtype=np.int64)
    if len(ordered):
        weights = 1.0 / np.sqrt(deg[rows] * deg[cols])
    else:
        weights = np.zeros(0, dtype=float)
    return NormalizedAdjacency(rows, cols, weights, n)


def _check_shapes(params: GcnParams, features: np.ndarray, adj: NormalizedAdjacency) -> None:
    if features.ndim != 2:
        raise ArgumentError("features must be a 2-D matrix")
    if features.shape[0] != adj.n_nodes:
        raise ArgumentError(
            f"feature rows {features.shape[0]} != node count {adj.n_nodes}"
        )
    if features.shape[1] != params.in_dim:
        raise ArgumentError(
            f"feature dim {features.shape[1]} != layer-0 input dim {params.in_dim}"
        )
    if params.w0.shape[1] != params.w1.shape[0]:
        raise ArgumentError("layer dims do not chain: w0 columns != w1 rows")


def gcn_forward(
    params: GcnParams, features: np.ndarray, adj: NormalizedAdjacency
) -> np.ndarray:
    """Refined node representations; isolated nodes come out as zero rows."""
    _check_shapes(params, features, adj)
    z1 = adj.aggregate(features) @ params.w0
    h1 = np.maximum(z1, 0.0)
    z2 = adj.aggregate(h1) @ params.w1
    out = np.maximum(z2, 0.0) if params.final_activation else z2
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite value in forward pass")
    return out


def gcn_backward(
    params: GcnParams,
    features: np.ndarray,
    adj: NormalizedAdjacency,
    upstream: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradients of the two-layer forward w.r.t. (w0, w1).

    ReLU subgradient is 0 at 0; ``upstream`` is dLoss/dOutput from a prior
    forward pass over the same inputs.
    """
    _check_shapes(params, features, adj)
    if upstream.shape != (adj.n_nodes, params.out_dim):
        raise ArgumentError(
            f"upstream shape {upstream.shape} != {(adj.n_nodes, params.out_dim)}"
        )
    agg_x = adj.aggregate(features)
    z1 = agg_x @ params.w0
    h1 = np.maximum(z1, 0.0)
    agg_h1 = adj.aggregate(h1)
    if params.final_activation:
        z2 = agg_h1 @ params.w1
        g2 = upstream * (z2 > 0.0)
    else:
        g2 = upstream
    grad_w1 = agg_h1.T @ g2
    dh1 = adj.aggregate_transpose(g2) @ params.w1.T
    dz1 = dh1 * (z1 > 0.0)
    grad_w0 = agg_x.T @ dz1
    return grad_w0, grad_w1


def init_gcn_params(
    in_dim: int, hidden_dim: int, seed: int, final_activation: bool = False
) -> GcnParams:
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(in_dim)
    w0 = rng.uniform(-bound, bound, size=(in_dim, hidden_dim))
    w1 = rng.uniform(-bound, bound, size=(hidden_dim, in_dim))
    return GcnParams(w0, w1, final_activation)


def margin_loss_on_pairs(
    refined: np.ndarray,
    relation_vecs: np.ndarray,
    pairs: list[tuple[Triple, Triple]],
    margin: float,
    norm: str = "L2",
) -> tuple[float, np.ndarray]:
    """Mean hinge loss over (positive, negative) pairs scored on refined rows.

    Also returns dLoss/dRefined, the upstream gradient for ``gcn_backward``.
    """
    upstream = np.zeros_like(refined)
    total = 0.0
    n = len(pairs)
    for pos, neg in pairs:
        diff_pos = refined[pos.head] + relation_vecs[pos.relation] - refined[pos.tail]
        diff_neg = refined[neg.head] + relation_vecs[neg.relation] - refined[neg.tail]
        d_pos = _distance(diff_pos, norm)
        d_neg = _distance(diff_neg, norm)
        loss = margin + d_pos - d_neg
        if loss <= 0.0:
            continue
        total += loss
        u_pos = _distance_grad(diff_pos, d_pos, norm)
        u_neg = _distance_grad(diff_neg, d_neg, norm)
        upstream[pos.head] += u_pos / n
        upstream[pos.tail] -= u_pos / n
        upstream[neg.head] -= u_neg / n
        upstream[neg.tail] += u_neg / n
    return total / n if n else 0.0, upstream


def train_gcn(
    g: Graph, emb: EmbeddingTable, hyper: GcnHyper
) -> tuple[GcnParams, list[float]]:
    """Full-batch gradient descent on the ranking loss over refined vectors.

    TransE entity vectors are the frozen input features and relation vectors
    stay fixed; only the two layer weights move. An anchor term pulls refined
    vectors toward the input features so refinement adds neighborhood signal
    without leaving the translational geometry. Deterministic per seed.
    """
    if not g.triples:
        raise ArgumentError("cannot train on a graph with no triples")
    k = emb.dim
    hidden = hyper.hidden_dim or k
    params = init_gcn_params(k, hidden, hyper.seed, hyper.final_activation)
    adj = build_normalized_adjacency(g, hyper.self_loops)
    features = emb.entity_vecs
    rng = np.random.default_rng(hyper.seed)
    trace: list[float] = []
    positives = g.triples
    n_nodes = features.shape[0]
    for epoch in range(hyper.epochs):
        refined = gcn_forward(params, features, adj)
        pairs = [(pos, sample_negative(g, pos, rng)) for pos in positives]
        loss, upstream = margin_loss_on_pairs(
            refined, emb.relation_vecs, pairs, hyper.margin, hyper.norm
        )
        if hyper.anchor_weight > 0.0:
            residual = refined - features
            loss += hyper.anchor_weight * float(np.sum(residual**2)) / n_nodes
            upstream = upstream + hyper.anchor_weight * 2.0 * residual / n_nodes
        if not math.isfinite(loss):
            raise NumericalError(f"non-finite loss at epoch {epoch}", epoch=epoch)
        trace.append(loss)
        grad_w0, grad_w1 = gcn_backward(params, features, adj, upstream)
        params.w0 -= hyper.learning_rate * grad_w0
        params.w1 -= hyper.learning_rate * grad_w1
    return params, trace


# -- persistence ------------------------------------------------------------
#
# Text format: header `gcn <k> <k_hidden> <self_loops 0|1>` then row-major
# w0 rows, then w1 rows; 9 significant digits.


def save_gcn_params(params: GcnParams, self_loops: bool, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"gcn {params.in_dim} {params.hidden_dim} {int(self_loops)}\n")
        for row in params.w0:
            fh.write(" ".join(f"{v:.9g}" for v in row) + "\n")
        for row in params.w1:
            fh.write(" ".join(f"{v:.9g}" for v in row) + "\n")


def load_gcn_params(path) -> tuple[GcnParams, bool]:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "gcn":
            raise ParseError("bad gcn header", path=str(path), line=1)
        k, hidden, loops = (int(x) for x in header[1:])
        rows = [[float(v) for v in line.split()] for line in fh if line.strip()]
    if len(rows) != k + hidden:
        raise ParseError(
            f"expected {k + hidden} rows, got {len(rows)}", path=str(path), line=1
        )
    w0 = np.asarray(rows[:k], dtype=float)
    w1 = np.asarray(rows[k:], dtype=float)
    if w0.shape != (k, hidden) or w1.shape != (hidden, k):
        raise ParseError("weight shapes do not match header", path=str(path), line=1)
    return GcnParams(w0, w1), bool(loops)
