import pytest

from graphqa.gcn import GcnHyper, train_gcn
from graphqa.stack import QAStack, RetrievalParams, build_refined
from graphqa.synth import SyntheticSpec, generate_synthetic_kg
from graphqa.transe import TransEHyper, train_transe


def build_planted_stack(
    entities=40, relations=4, seed=7, dim=16, transe_epochs=200, gcn_epochs=150
):
    g, structure = generate_synthetic_kg(
        SyntheticSpec(entities, relations), seed=seed
    )
    emb, _ = train_transe(
        g, TransEHyper(dim=dim, epochs=transe_epochs, seed=seed)
    )
    params, _ = train_gcn(g, emb, GcnHyper(epochs=gcn_epochs, seed=seed))
    refined = build_refined(g, emb, params)
    stack = QAStack(graph=g, emb=emb, refined=refined, retrieval=RetrievalParams())
    return stack, structure


@pytest.fixture(scope="session")
def planted_stack():
    stack, _ = build_planted_stack()
    return stack
