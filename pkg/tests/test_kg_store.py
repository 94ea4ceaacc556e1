import numpy as np
import pytest

from graphqa.errors import ArgumentError, NotFoundError, ParseError
from graphqa.kg import Graph, Triple, clone_with_triples, load_triples, save_triples

TOBACCO_LINE = "tobacco mosaic disease\ttreated by\tspraying antiviral agents\n"


def bfs_subgraph_oracle(g, seeds, k):
    """Reference BFS written against brute-force triple scans."""
    adjacency = {}
    for idx, t in enumerate(g.triples):
        adjacency.setdefault(t.head, set()).add(t.tail)
        adjacency.setdefault(t.tail, set()).add(t.head)
    dist = {s: 0 for s in seeds}
    frontier = set(seeds)
    for d in range(1, k + 1):
        nxt = set()
        for u in frontier:
            for v in adjacency.get(u, ()):
                if v not in dist:
                    dist[v] = d
                    nxt.add(v)
        frontier = nxt
    return {
        t
        for t in g.triples
        if min(dist.get(t.head, k + 1), dist.get(t.tail, k + 1)) + 1 <= k
    }


def random_graph(rng, n_entities=20, n_relations=3, n_triples=40):
    g = Graph()
    for i in range(n_entities):
        g.add_entity(f"node {i}")
    for r in range(n_relations):
        g.add_relation(f"rel {r}")
    for _ in range(n_triples):
        g.add_triple(
            int(rng.integers(n_entities)),
            int(rng.integers(n_relations)),
            int(rng.integers(n_entities)),
        )
    return g


class TestLoadTriples:
    def test_single_line(self, tmp_path):
        path = tmp_path / "kg.tsv"
        path.write_text(TOBACCO_LINE, encoding="utf-8")
        g = load_triples(path)
        assert g.num_entities == 2
        assert g.num_relations == 1
        assert g.num_triples == 1
        assert g.entity_name(0) == "tobacco mosaic disease"
        assert g.entity_name(1) == "spraying antiviral agents"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "kg.tsv"
        path.write_text("", encoding="utf-8")
        g = load_triples(path)
        assert g.num_entities == 0
        assert g.num_triples == 0

    def test_duplicates_collapse(self, tmp_path):
        path = tmp_path / "kg.tsv"
        path.write_text(TOBACCO_LINE * 3, encoding="utf-8")
        g = load_triples(path)
        assert g.num_triples == 1

    def test_comments_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "kg.tsv"
        path.write_text("# header\n\n" + TOBACCO_LINE, encoding="utf-8")
        assert load_triples(path).num_triples == 1

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "kg.tsv"
        path.write_text(TOBACCO_LINE + "only two\tfields\n", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            load_triples(path)
        assert err.value.line == 2

    def test_empty_field_rejected(self, tmp_path):
        path = tmp_path / "kg.tsv"
        path.write_text("a\t\tb\n", encoding="utf-8")
        with pytest.raises(ParseError):
            load_triples(path)

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            load_triples(tmp_path / "nope.tsv")

    def test_sidecar_aliases_merged(self, tmp_path):
        path = tmp_path / "kg.tsv"
        path.write_text(TOBACCO_LINE, encoding="utf-8")
        (tmp_path / "kg.tsv.aliases").write_text(
            "tobacco mosaic disease\tTMV disease\nlonely entity\tlonely\n",
            encoding="utf-8",
        )
        g = load_triples(path)
        assert g.find_entity("tmv  Disease") == 0
        # entities may be registered by the alias file alone
        assert g.find_entity("lonely entity") == 2
        assert g.degree(2) == 0

    def test_case_fold_dedups_entities(self, tmp_path):
        path = tmp_path / "kg.tsv"
        path.write_text("Aphid\teats\tleaf\naphid\teats\tstem\n", encoding="utf-8")
        g = load_triples(path)
        assert g.num_entities == 3  # Aphid/aphid collapse


class TestRoundTrip:
    def test_load_save_load_fixed_point(self, tmp_path):
        path = tmp_path / "kg.tsv"
        path.write_text(
            TOBACCO_LINE + "aphid\tcontrolled by\tspraying antiviral agents\n",
            encoding="utf-8",
        )
        (tmp_path / "kg.tsv.aliases").write_text(
            "aphid\tplant louse\n", encoding="utf-8"
        )
        g1 = load_triples(path)
        out = tmp_path / "out.tsv"
        save_triples(g1, out)
        g2 = load_triples(out)
        assert [g1.entity_name(i) for i in range(g1.num_entities)] == [
            g2.entity_name(i) for i in range(g2.num_entities)
        ]
        assert g1.triples == g2.triples
        assert g1.entity_aliases(2) == g2.entity_aliases(2)
        # and the serialization itself is stable
        out2 = tmp_path / "out2.tsv"
        save_triples(g2, out2)
        assert out.read_text() == out2.read_text()


class TestNeighborsDegree:
    def test_single_triple_out(self):
        g = Graph()
        h = g.add_entity("tobacco mosaic disease")
        r = g.add_relation("treated by")
        t = g.add_entity("spraying antiviral agents")
        g.add_triple(h, r, t)
        assert g.neighbors(h, "out") == [(r, t, Triple(h, r, t))]
        assert g.neighbors(t, "out") == []
        assert g.neighbors(t, "in") == [(r, h, Triple(h, r, t))]

    def test_unknown_entity(self):
        g = Graph()
        g.add_entity("a")
        with pytest.raises(NotFoundError):
            g.neighbors(5, "out")
        with pytest.raises(NotFoundError):
            g.degree(5)

    def test_bad_direction(self):
        g = Graph()
        g.add_entity("a")
        with pytest.raises(ArgumentError):
            g.neighbors(0, "sideways")

    def test_both_equals_out_plus_in(self):
        rng = np.random.default_rng(11)
        g = random_graph(rng)
        for e in range(g.num_entities):
            combined = g.neighbors(e, "out") + g.neighbors(e, "in")
            assert g.neighbors(e, "both") == combined

    def test_isolated_entity_degree_zero(self):
        g = Graph()
        g.add_entity("loner")
        assert g.degree(0) == 0

    def test_star_center_degree(self):
        g = Graph()
        center = g.add_entity("center")
        r = g.add_relation("spoke")
        for i in range(5):
            leaf = g.add_entity(f"leaf {i}")
            g.add_triple(center, r, leaf)
        assert g.degree(center) == 5

    def test_degree_sum_is_twice_triples(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            g = random_graph(rng, n_triples=int(rng.integers(5, 60)))
            total = sum(g.degree(e) for e in range(g.num_entities))
            assert total == 2 * g.num_triples

    def test_neighbors_count_matches_degree(self):
        rng = np.random.default_rng(5)
        g = random_graph(rng)
        for e in range(g.num_entities):
            assert len(g.neighbors(e, "both")) == g.degree(e)


class TestKHopSubgraph:
    def path_graph(self):
        g = Graph()
        a, b, c = (g.add_entity(x) for x in ("a", "b", "c"))
        r = g.add_relation("r")
        g.add_triple(a, r, b)
        g.add_triple(b, r, c)
        return g, a, b, c, r

    def test_zero_hops_is_empty(self):
        g, a, *_ = self.path_graph()
        assert g.k_hop_subgraph({a}, 0).triples == ()

    def test_one_hop_on_path(self):
        g, a, b, c, r = self.path_graph()
        sub = g.k_hop_subgraph({a}, 1)
        assert sub.triples == (Triple(a, r, b),)

    def test_empty_seeds_rejected(self):
        g, *_ = self.path_graph()
        with pytest.raises(ArgumentError):
            g.k_hop_subgraph(set(), 1)

    def test_unknown_seed_rejected(self):
        g, *_ = self.path_graph()
        with pytest.raises(NotFoundError):
            g.k_hop_subgraph({99}, 1)

    def test_matches_bfs_oracle_on_random_graphs(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            g = random_graph(
                rng,
                n_entities=int(rng.integers(3, 25)),
                n_triples=int(rng.integers(1, 50)),
            )
            seeds = set(
                int(rng.integers(g.num_entities))
                for _ in range(int(rng.integers(1, 4)))
            )
            k = int(rng.integers(0, 5))
            sub = g.k_hop_subgraph(seeds, k)
            assert set(sub.triples) == bfs_subgraph_oracle(g, seeds, k)
            assert len(sub.triples) == len(set(sub.triples))

    def test_monotone_in_k(self):
        rng = np.random.default_rng(9)
        g = random_graph(rng)
        for k in range(4):
            smaller = set(g.k_hop_subgraph({0}, k).triples)
            larger = set(g.k_hop_subgraph({0}, k + 1).triples)
            assert smaller <= larger


def test_clone_with_triples_keeps_catalogs():
    rng = np.random.default_rng(2)
    g = random_graph(rng)
    subset = g.triples[::2]
    clone = clone_with_triples(g, subset)
    assert clone.num_entities == g.num_entities
    assert clone.num_relations == g.num_relations
    assert clone.triples == tuple(subset)
