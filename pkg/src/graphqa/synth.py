"""Synthetic knowledge graphs with planted translational structure.

Entities live on a small 2-D integer lattice; each relation is a fixed lattice
offset, and a planted triple (h, r, t) holds exactly when t sits at h's
position plus r's offset. TransE can therefore recover the structure, and a
triple violating its relation's offset is, by construction, noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .kg import Graph, Triple

_ENTITY_KINDS = ("disease", "symptom", "treatment", "pest", "pesticide")
_RELATION_NAMES = (
    "treated by",
    "causes",
    "prevented by",
    "affects",
    "spread by",
    "managed by",
    "worsens",
    "detected by",
    "carried by",
    "mitigated by",
)


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a generated graph.

    ``triples_per_relation=0`` plants every feasible pair; a positive value
    caps each relation at that many planted triples. ``noise_rate`` is the
    target fraction of off-structure triples in the final graph.
    """

    entities: int
    relations: int
    noise_rate: float = 0.0
    triples_per_relation: int = 0


@dataclass(frozen=True)
class PlantedStructure:
    """What the generator hid in the graph, for oracles and audits."""

    positions: tuple[tuple[int, int], ...]
    offsets: tuple[tuple[int, int], ...]
    planted: frozenset[Triple]
    noise: frozenset[Triple] = field(default_factory=frozenset)

    def violates(self, t: Triple) -> bool:
        """True when the triple does not follow its relation's offset."""
        hx, hy = self.positions[t.head]
        ox, oy = self.offsets[t.relation]
        return self.positions[t.tail] != (hx + ox, hy + oy)


def _offset_pool(count: int) -> list[tuple[int, int]]:
    radius = 2
    while True:
        pool = [
            (dx, dy)
            for dx in range(-radius, radius + 1)
            for dy in range(-radius, radius + 1)
            if (dx, dy) != (0, 0)
        ]
        if len(pool) >= count:
            return pool
        radius += 1


def generate_synthetic_kg(
    spec: SyntheticSpec, seed: int
) -> tuple[Graph, PlantedStructure]:
    """Deterministic per seed; returns the graph and its planted structure."""
    if spec.entities < 2:
        raise ArgumentError(f"need at least 2 entities, got {spec.entities}")
    if spec.relations < 1:
        raise ArgumentError(f"need at least 1 relation, got {spec.relations}")
    if not 0.0 <= spec.noise_rate < 1.0:
        raise ArgumentError(f"noise rate must be in [0, 1), got {spec.noise_rate}")

    rng = np.random.default_rng(seed)
    n = spec.entities

    side = math.ceil(math.sqrt(n))
    cells = [(i % side, i // side) for i in range(n)]
    perm = rng.permutation(n)
    positions = [cells[perm[e]] for e in range(n)]
    cell_to_entity = {pos: e for e, pos in enumerate(positions)}

    pool = _offset_pool(spec.relations)
    order = rng.permutation(len(pool))
    offsets = [pool[i] for i in order[: spec.relations]]

    g = Graph()
    for e in range(n):
        # single-token names: instances never share tokens, so bag-of-token
        # text similarity cannot free-ride on a category word
        g.add_entity(f"{_ENTITY_KINDS[e % len(_ENTITY_KINDS)]}{e}")
    for r in range(spec.relations):
        if r < len(_RELATION_NAMES):
            g.add_relation(_RELATION_NAMES[r])
        else:
            g.add_relation(f"relation {r}")

    planted: list[Triple] = []
    for r, (ox, oy) in enumerate(offsets):
        feasible = []
        for h in range(n):
            hx, hy = positions[h]
            t = cell_to_entity.get((hx + ox, hy + oy))
            if t is not None and t != h:
                feasible.append((h, t))
        cap = spec.triples_per_relation or len(feasible)
        if cap > len(feasible):
            raise ArgumentError(
                f"relation {r}: {cap} planted triples demanded but only "
                f"{len(feasible)} pairs exist"
            )
        pick = rng.permutation(len(feasible))[:cap]
        for i in sorted(pick):
            h, t = feasible[i]
            if g.add_triple(h, r, t):
                planted.append(Triple(h, r, t))

    structure = PlantedStructure(
        positions=tuple(positions),
        offsets=tuple(offsets),
        planted=frozenset(planted),
    )

    noise: list[Triple] = []
    if spec.noise_rate > 0.0:
        target = round(spec.noise_rate / (1.0 - spec.noise_rate) * len(planted))
        attempts = 0
        while len(noise) < target and attempts < 100 * max(target, 1):
            attempts += 1
            h = int(rng.integers(n))
            t = int(rng.integers(n))
            r = int(rng.integers(spec.relations))
            cand = Triple(h, r, t)
            if h == t or not structure.violates(cand) or g.has_triple(cand):
                continue
            g.add_triple(h, r, t)
            noise.append(cand)

    structure = PlantedStructure(
        positions=structure.positions,
        offsets=structure.offsets,
        planted=structure.planted,
        noise=frozenset(noise),
    )
    return g, structure
