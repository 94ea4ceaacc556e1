"""graphqa: knowledge-graph retrieval-augmented question answering."""

from .kg import Graph, Subgraph, Triple, load_triples, save_triples
from .transe import EmbeddingTable, TransEHyper, train_transe

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "Subgraph",
    "Triple",
    "load_triples",
    "save_triples",
    "EmbeddingTable",
    "TransEHyper",
    "train_transe",
    "__version__",
]
