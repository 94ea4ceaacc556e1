import numpy as np
import pytest

from graphqa.errors import ArgumentError
from graphqa.kg import Graph, Triple
from graphqa.retrieval import (
    NO_FACTS_SENTINEL,
    build_context,
    default_template,
    encode_text,
    fuse_embeddings,
    link_entities,
    link_relation_phrases,
    rank_triples,
    serialize_triple,
)
from graphqa.synth import SyntheticSpec, generate_synthetic_kg

TEMPLATE = "Knowledge graph context for: {entities}\n\nFacts:\n{facts}\n\nQuestion: {question}\n"


def tobacco_graph():
    g = Graph()
    h = g.add_entity("tobacco mosaic disease")
    r = g.add_relation("treated by")
    t = g.add_entity("spraying antiviral agents")
    g.add_triple(h, r, t)
    return g, h, r, t


class TestLinkEntities:
    def test_paper_query_links_disease(self):
        g, h, _, _ = tobacco_graph()
        matches = link_entities(g, "How to prevent tobacco mosaic disease?")
        assert len(matches) == 1
        assert matches[0].entity == h
        assert matches[0].alias == "tobacco mosaic disease"
        query = "How to prevent tobacco mosaic disease?"
        span = query[matches[0].start : matches[0].end]
        assert span.casefold() == "tobacco mosaic disease"

    def test_no_match_returns_empty(self):
        g, *_ = tobacco_graph()
        assert link_entities(g, "completely unrelated text") == []

    def test_longest_match_suppresses_substring(self):
        g = Graph()
        short = g.add_entity("mosaic")
        long = g.add_entity("tobacco mosaic disease")
        matches = link_entities(g, "what about tobacco mosaic disease here")
        assert [m.entity for m in matches] == [long]

    def test_short_form_still_matches_alone(self):
        g = Graph()
        g.add_entity("mosaic")
        g.add_entity("tobacco mosaic disease")
        matches = link_entities(g, "classic mosaic symptoms")
        assert [m.entity for m in matches] == [0]

    def test_case_fold_and_whitespace_collapse(self):
        g, h, _, _ = tobacco_graph()
        matches = link_entities(g, "TOBACCO   Mosaic  DISEASE outbreak")
        assert [m.entity for m in matches] == [h]

    def test_aliases_match(self):
        g, h, _, _ = tobacco_graph()
        g.add_alias(h, "TMV")
        matches = link_entities(g, "is tmv dangerous?")
        assert [m.entity for m in matches] == [h]

    def test_spans_never_overlap(self):
        g = Graph()
        for name in ("alpha beta", "beta gamma", "gamma", "alpha"):
            g.add_entity(name)
        matches = link_entities(g, "alpha beta gamma alpha")
        spans = [(m.start, m.end) for m in matches]
        for i, (s1, e1) in enumerate(spans):
            for s2, e2 in spans[i + 1 :]:
                assert e1 <= s2 or e2 <= s1

    def test_empty_query_rejected(self):
        g, *_ = tobacco_graph()
        with pytest.raises(ArgumentError):
            link_entities(g, "")

    def test_word_boundary_respected(self):
        g = Graph()
        g.add_entity("ant")
        matches = link_entities(g, "plant authority")
        assert matches == []


class TestLinkRelations:
    def test_finds_relation_phrase(self):
        g, _, r, _ = tobacco_graph()
        found = link_relation_phrases(g, "what is treated by this", [])
        assert [rid for rid, _ in found] == [r]

    def test_skips_entity_spans(self):
        g = Graph()
        g.add_entity("treated by luck")  # entity containing the phrase
        g.add_relation("treated by")
        query = "treated by luck"
        spans = [(m.start, m.end) for m in link_entities(g, query)]
        assert link_relation_phrases(g, query, spans) == []

    def test_order_by_position(self):
        g = Graph()
        r1 = g.add_relation("causes")
        r2 = g.add_relation("treated by")
        found = link_relation_phrases(g, "what is treated by what causes it", [])
        assert [rid for rid, _ in found] == [r2, r1]


class TestEncodeText:
    def test_empty_is_zero_vector(self):
        assert np.array_equal(encode_text("", 16), np.zeros(16))

    def test_deterministic(self):
        a = encode_text("spraying antiviral agents", 32, seed=13)
        b = encode_text("spraying antiviral agents", 32, seed=13)
        assert np.array_equal(a, b)

    def test_repeated_token_same_direction(self):
        one = encode_text("aphid", 32)
        two = encode_text("aphid aphid", 32)
        assert np.allclose(one, two)

    def test_normalized(self):
        v = encode_text("some words here", 64)
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_seed_changes_embedding(self):
        assert not np.array_equal(
            encode_text("aphid", 32, seed=1), encode_text("aphid", 32, seed=2)
        )

    def test_overlapping_text_more_similar(self):
        q = encode_text("what treats tobacco mosaic disease", 64)
        near = encode_text("tobacco mosaic disease treated by spray", 64)
        far = encode_text("unrelated words entirely different", 64)
        assert float(q @ near) > float(q @ far)


class TestRankTriples:
    def make_stack(self, seed=3):
        g, structure = generate_synthetic_kg(SyntheticSpec(30, 3), seed=seed)
        rng = np.random.default_rng(seed)
        refined = rng.normal(size=(g.num_entities, 16))
        return g, refined

    def test_incident_triple_wins_under_alpha_one(self):
        g, refined = self.make_stack()
        anchor = g.triples[0].head
        sub = g.k_hop_subgraph({anchor}, 2)
        matches = link_entities(g, g.entity_name(anchor))
        assert matches
        qv = encode_text("anything", 16)
        ranked = rank_triples(g, sub, matches, refined, qv, alpha=1.0)
        top_triple = ranked[0][0]
        assert anchor in (top_triple.head, top_triple.tail)
        assert ranked[0][1] == pytest.approx(1.0)

    def test_alpha_zero_is_pure_text_ordering(self):
        g, refined = self.make_stack()
        anchor = g.triples[0].head
        sub = g.k_hop_subgraph({anchor}, 2)
        matches = link_entities(g, g.entity_name(anchor))
        qv = encode_text(serialize_triple(g, sub.triples[0]), 16)
        ranked = rank_triples(g, sub, matches, refined, qv, alpha=0.0)
        text_scores = {
            t: float(qv @ encode_text(serialize_triple(g, t), 16))
            for t in sub.triples
        }
        expect = sorted(
            sub.triples, key=lambda t: (-round(text_scores[t], 12), g.triple_id(t))
        )
        assert [t for t, _ in ranked] == expect

    def test_sorted_permutation_with_nonincreasing_scores(self):
        rng = np.random.default_rng(0)
        for trial in range(10):
            g, refined = self.make_stack(seed=trial)
            anchor = int(rng.integers(g.num_entities))
            sub = g.k_hop_subgraph({anchor}, 2)
            if not sub.triples:
                continue
            matches = link_entities(g, g.entity_name(anchor))
            qv = encode_text("treated by disease", 16)
            ranked = rank_triples(g, sub, matches, refined, qv, alpha=0.5)
            assert sorted(
                (t for t, _ in ranked), key=lambda t: g.triple_id(t)
            ) == sorted(sub.triples, key=lambda t: g.triple_id(t))
            scores = [s for _, s in ranked]
            assert all(a >= b for a, b in zip(scores, scores[1:]))


class TestFusion:
    def test_concatenation(self):
        fv = fuse_embeddings(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
        assert np.array_equal(fv.values, [1.0, 2.0, 3.0, 4.0])
        assert not fv.fallback

    def test_zero_refined_falls_back(self):
        fv = fuse_embeddings(np.array([1.0, 0.0]), np.array([0.0, 0.0]))
        assert np.array_equal(fv.values, [1.0, 0.0, 1.0, 0.0])
        assert fv.fallback

    def test_dim_100_gives_200(self):
        rng = np.random.default_rng(0)
        fv = fuse_embeddings(rng.normal(size=100), rng.normal(size=100))
        assert fv.values.shape == (200,)

    def test_mismatch_rejected(self):
        with pytest.raises(ArgumentError):
            fuse_embeddings(np.zeros(3), np.zeros(4))

    def test_first_half_bitwise_equal(self):
        rng = np.random.default_rng(1)
        e = rng.normal(size=50)
        fv = fuse_embeddings(e, rng.normal(size=50))
        assert np.array_equal(fv.values[:50], e)


class TestBuildContext:
    def test_paper_triple_renders_exactly(self):
        g, h, r, t = tobacco_graph()
        matches = link_entities(g, "How to prevent tobacco mosaic disease?")
        ranked = [(Triple(h, r, t), 1.0)]
        ctx = build_context(g, ranked, matches, budget=12, template=TEMPLATE)
        assert (
            "tobacco mosaic disease — treated by — spraying antiviral agents."
            in ctx
        )
        assert "Knowledge graph context for: tobacco mosaic disease" in ctx
        assert "{question}" in ctx

    def test_empty_retrieval_uses_sentinel(self):
        g, *_ = tobacco_graph()
        ctx = build_context(g, [], [], budget=3, template=TEMPLATE)
        assert NO_FACTS_SENTINEL in ctx

    def test_budget_truncates(self):
        g = Graph()
        r = g.add_relation("r")
        ids = [g.add_entity(f"e{i}") for i in range(6)]
        ranked = [
            (Triple(ids[i], r, ids[i + 1]), 1.0 - 0.1 * i) for i in range(5)
        ]
        for t, _ in ranked:
            g.add_triple(t.head, t.relation, t.tail)
        ctx = build_context(g, ranked, [], budget=3, template=TEMPLATE)
        fact_lines = [l for l in ctx.splitlines() if " — " in l]
        assert len(fact_lines) == 3
        assert "e0 — r — e1." in ctx
        assert "e3 — r — e4." not in ctx

    def test_budget_zero_rejected(self):
        g, *_ = tobacco_graph()
        with pytest.raises(ArgumentError):
            build_context(g, [], [], budget=0, template=TEMPLATE)

    def test_default_template_is_stable(self):
        # golden bytes: the shipped template is part of the wire behavior
        assert default_template() == TEMPLATE

    def test_deterministic(self):
        g, h, r, t = tobacco_graph()
        matches = link_entities(g, "tobacco mosaic disease?")
        ranked = [(Triple(h, r, t), 0.5)]
        a = build_context(g, ranked, matches, 12)
        b = build_context(g, ranked, matches, 12)
        assert a == b
