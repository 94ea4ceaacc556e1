"""Knowledge graph store: entity/relation catalogs, deduplicated triples, adjacency.

Graphs are built through :func:`load_triples`, the synthetic generator, or the
``add_*`` construction methods, and are treated as immutable afterwards;
concurrent readers need no coordination.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .errors import ArgumentError, NotFoundError, ParseError

_WS = re.compile(r"\s+")
_WORD = re.compile(r"[0-9A-Za-z]+")


def normalize_surface(text: str) -> str:
    """Case-fold and collapse whitespace; the key used for all name lookups."""
    return _WS.sub(" ", text.strip()).casefold()


def tokenize(text: str) -> list[str]:
    """Split on non-alphanumeric boundaries and case-fold each token."""
    return [m.group(0).casefold() for m in _WORD.finditer(text)]


@dataclass(frozen=True)
class Triple:
    """One directed fact: head entity, relation, tail entity (dense ids)."""

    head: int
    relation: int
    tail: int


@dataclass(frozen=True)
class Subgraph:
    """Triples within `hop` undirected steps of the seed entities."""

    seeds: frozenset[int]
    hop: int
    triples: tuple[Triple, ...]


class Graph:
    """Directed multigraph with dense first-seen integer ids.

    Entity and relation surface names are unique after whitespace-trim and
    case-fold; aliases share the entity's id. Triples are stored at most once.
    """

    def __init__(self) -> None:
        self._entity_names: list[str] = []
        self._entity_aliases: list[list[str]] = []
        self._relation_names: list[str] = []
        self._entity_by_norm: dict[str, int] = {}
        self._relation_by_norm: dict[str, int] = {}
        self._surface_by_norm: dict[str, str] = {}
        self._triples: list[Triple] = []
        self._triple_index: dict[Triple, int] = {}
        self._out_adj: list[list[int]] = []
        self._in_adj: list[list[int]] = []
        self._max_name_tokens = 0

    # -- catalogs ------------------------------------------------------

    @property
    def num_entities(self) -> int:
        return len(self._entity_names)

    @property
    def num_relations(self) -> int:
        return len(self._relation_names)

    @property
    def num_triples(self) -> int:
        return len(self._triples)

    @property
    def triples(self) -> tuple[Triple, ...]:
        return tuple(self._triples)

    def entity_name(self, entity: int) -> str:
        self._check_entity(entity)
        return self._entity_names[entity]

    def entity_aliases(self, entity: int) -> tuple[str, ...]:
        self._check_entity(entity)
        return tuple(self._entity_aliases[entity])

    def relation_name(self, relation: int) -> str:
        if not 0 <= relation < len(self._relation_names):
            raise NotFoundError(f"unknown relation id {relation}")
        return self._relation_names[relation]

    def find_entity(self, name: str) -> int | None:
        """Resolve a surface name or alias to an entity id, or None."""
        return self._entity_by_norm.get(normalize_surface(name))

    def find_relation(self, name: str) -> int | None:
        return self._relation_by_norm.get(normalize_surface(name))

    def surface_form(self, normalized: str) -> str:
        """The registered surface string behind a normalized key."""
        return self._surface_by_norm[normalized]

    def triple_id(self, triple: Triple) -> int:
        idx = self._triple_index.get(triple)
        if idx is None:
            raise NotFoundError(f"triple {triple} not in graph")
        return idx

    def has_triple(self, triple: Triple) -> bool:
        return triple in self._triple_index

    @property
    def max_name_tokens(self) -> int:
        """Longest registered name/alias, in tokens; bounds linker scans."""
        return self._max_name_tokens

    def name_index(self) -> dict[str, int]:
        """Normalized surface/alias -> entity id (read-only view by convention)."""
        return self._entity_by_norm

    def relation_index(self) -> dict[str, int]:
        return self._relation_by_norm

    # -- construction ----------------------------------------------------

    def add_entity(self, name: str) -> int:
        norm = normalize_surface(name)
        if not norm:
            raise ArgumentError("entity name must be non-empty")
        existing = self._entity_by_norm.get(norm)
        if existing is not None:
            return existing
        eid = len(self._entity_names)
        self._entity_names.append(name.strip())
        self._entity_aliases.append([])
        self._entity_by_norm[norm] = eid
        self._surface_by_norm[norm] = name.strip()
        self._out_adj.append([])
        self._in_adj.append([])
        self._max_name_tokens = max(self._max_name_tokens, len(tokenize(norm)))
        return eid

    def add_alias(self, entity: int, alias: str) -> None:
        self._check_entity(entity)
        norm = normalize_surface(alias)
        if not norm:
            raise ArgumentError("alias must be non-empty")
        existing = self._entity_by_norm.get(norm)
        if existing == entity:
            return
        if existing is not None:
            raise ArgumentError(
                f"alias {alias!r} collides with {self._entity_names[existing]!r}"
            )
        self._entity_by_norm[norm] = entity
        self._surface_by_norm[norm] = alias.strip()
        self._entity_aliases[entity].append(alias.strip())
        self._max_name_tokens = max(self._max_name_tokens, len(tokenize(norm)))

    def add_relation(self, name: str) -> int:
        norm = normalize_surface(name)
        if not norm:
            raise ArgumentError("relation name must be non-empty")
        existing = self._relation_by_norm.get(norm)
        if existing is not None:
            return existing
        rid = len(self._relation_names)
        self._relation_names.append(name.strip())
        self._relation_by_norm[norm] = rid
        return rid

    def add_triple(self, head: int, relation: int, tail: int) -> bool:
        """Register a triple; returns False when it was already present."""
        self._check_entity(head)
        self._check_entity(tail)
        if not 0 <= relation < len(self._relation_names):
            raise NotFoundError(f"unknown relation id {relation}")
        triple = Triple(head, relation, tail)
        if triple in self._triple_index:
            return False
        idx = len(self._triples)
        self._triples.append(triple)
        self._triple_index[triple] = idx
        self._out_adj[head].append(idx)
        self._in_adj[tail].append(idx)
        return True

    # -- queries ---------------------------------------------------------

    def neighbors(
        self, entity: int, direction: str = "both"
    ) -> list[tuple[int, int, Triple]]:
        """Incident triples as (relation, other endpoint, triple).

        Stable triple-insertion order within each direction; ``both`` is the
        out list followed by the in list.
        """
        self._check_entity(entity)
        if direction not in ("out", "in", "both"):
            raise ArgumentError(f"direction must be out|in|both, got {direction!r}")
        result: list[tuple[int, int, Triple]] = []
        if direction in ("out", "both"):
            for idx in self._out_adj[entity]:
                t = self._triples[idx]
                result.append((t.relation, t.tail, t))
        if direction in ("in", "both"):
            for idx in self._in_adj[entity]:
                t = self._triples[idx]
                result.append((t.relation, t.head, t))
        return result

    def degree(self, entity: int) -> int:
        """Incident triple count over both directions, with multiplicity."""
        self._check_entity(entity)
        return len(self._out_adj[entity]) + len(self._in_adj[entity])

    def k_hop_subgraph(self, seeds, k: int) -> Subgraph:
        """Breadth-first expansion over undirected incidence.

        Contains exactly the triples reachable within k hops of any seed;
        discovery order, each triple once.
        """
        seed_ids = sorted(set(seeds))
        if not seed_ids:
            raise ArgumentError("seed set must be non-empty")
        if k < 0:
            raise ArgumentError(f"hop count must be >= 0, got {k}")
        for s in seed_ids:
            self._check_entity(s)
        dist = {s: 0 for s in seed_ids}
        queue = deque(seed_ids)
        seen: set[int] = set()
        ordered: list[Triple] = []
        while queue:
            node = queue.popleft()
            d = dist[node]
            if d >= k:
                continue
            for idx in self._out_adj[node] + self._in_adj[node]:
                if idx not in seen:
                    seen.add(idx)
                    ordered.append(self._triples[idx])
                t = self._triples[idx]
                other = t.tail if t.head == node else t.head
                if other not in dist:
                    dist[other] = d + 1
                    queue.append(other)
        return Subgraph(frozenset(seed_ids), k, tuple(ordered))

    def _check_entity(self, entity: int) -> None:
        if not 0 <= entity < len(self._entity_names):
            raise NotFoundError(f"unknown entity id {entity}")


def clone_with_triples(g: Graph, triples) -> Graph:
    """Same entity/relation catalogs, different triple set (e.g. train split)."""
    out = Graph()
    for eid in range(g.num_entities):
        out.add_entity(g.entity_name(eid))
        for alias in g.entity_aliases(eid):
            out.add_alias(eid, alias)
    for rid in range(g.num_relations):
        out.add_relation(g.relation_name(rid))
    for t in triples:
        out.add_triple(t.head, t.relation, t.tail)
    return out


# -- file formats ---------------------------------------------------------
#
# Triples file: UTF-8, LF lines, head<TAB>relation<TAB>tail, `#` comment lines.
# Alias file:   entity<TAB>alias, same conventions.


def load_triples(path, aliases_path=None) -> Graph:
    """Load a graph from a tab-separated triples file.

    Duplicate lines collapse to one triple. A sidecar alias file is merged
    when present: pass ``aliases_path`` explicitly or place it at
    ``<path>.aliases``. Alias lines may register entities that have no
    triples.
    """
    path = Path(path)
    g = Graph()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"expected 3 tab-separated fields, got {len(fields)}",
                    path=str(path),
                    line=line_no,
                )
            head_s, rel_s, tail_s = fields
            if not head_s.strip() or not rel_s.strip() or not tail_s.strip():
                raise ParseError("empty field", path=str(path), line=line_no)
            h = g.add_entity(head_s)
            r = g.add_relation(rel_s)
            t = g.add_entity(tail_s)
            g.add_triple(h, r, t)
    if aliases_path is None:
        candidate = Path(str(path) + ".aliases")
        aliases_path = candidate if candidate.exists() else None
    if aliases_path is not None:
        _merge_aliases(g, Path(aliases_path))
    return g


def _merge_aliases(g: Graph, path: Path) -> None:
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(
                    f"expected 2 tab-separated fields, got {len(fields)}",
                    path=str(path),
                    line=line_no,
                )
            entity_s, alias_s = fields
            if not entity_s.strip() or not alias_s.strip():
                raise ParseError("empty field", path=str(path), line=line_no)
            eid = g.add_entity(entity_s)
            try:
                g.add_alias(eid, alias_s)
            except ArgumentError as exc:
                raise ParseError(str(exc), path=str(path), line=line_no) from exc


def save_triples(g: Graph, path, aliases_path=None) -> None:
    """Serialize to the triples/alias file formats.

    Round-trips exactly: loading the written files reproduces id assignment
    and the triple set. Entities with neither triples nor aliases are kept
    alive through a self-alias line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in g.triples:
            fh.write(
                f"{g.entity_name(t.head)}\t{g.relation_name(t.relation)}"
                f"\t{g.entity_name(t.tail)}\n"
            )
    if aliases_path is None:
        aliases_path = Path(str(path) + ".aliases")
    connected = set()
    for t in g.triples:
        connected.add(t.head)
        connected.add(t.tail)
    lines = []
    for eid in range(g.num_entities):
        name = g.entity_name(eid)
        aliases = g.entity_aliases(eid)
        for alias in aliases:
            lines.append(f"{name}\t{alias}\n")
        if eid not in connected and not aliases:
            lines.append(f"{name}\t{name}\n")
    with open(aliases_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)
