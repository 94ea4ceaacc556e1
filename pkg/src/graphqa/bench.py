"""QA dataset generation, the four-mode pipeline runner, and scoring.

Questions come in three flavors: direct lookups, two-hop chains whose
intermediate entity never appears in the question text, and comparative
intersections over two anchors. Gold sets are computed by exhaustive
traversal of the full graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArgumentError, GatewayError, GenerationError
from .gateway import MODES
from .kg import Graph, normalize_surface
from .retrieval import link_entities
from .stack import PipelineError, QAStack

QTYPES = ("direct", "multi_hop", "comparative")


@dataclass(frozen=True)
class QAItem:
    id: str
    question: str
    gold: frozenset[int]
    qtype: str
    provenance: tuple[int, ...]  # graph triple ids used to author the question


@dataclass
class MetricsReport:
    """Percentages in [0, 100]; accuracy is exact set match, P/R/F1 micro."""

    mode: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_qtype: dict[str, dict[str, float]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_qtype": self.per_qtype,
        }


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean on the percentage scale; 0 when both sides are 0."""
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


# -- gold oracles (exhaustive traversal over the full triple list) ----------


def direct_gold(g: Graph, head: int, relation: int) -> frozenset[int]:
    return frozenset(
        t.tail for t in g.triples if t.head == head and t.relation == relation
    )


def chain_gold(g: Graph, head: int, rel1: int, rel2: int) -> frozenset[int]:
    mids = {t.tail for t in g.triples if t.head == head and t.relation == rel1}
    return frozenset(
        t.tail for t in g.triples if t.head in mids and t.relation == rel2
    )


def comparative_gold(g: Graph, a: int, b: int) -> frozenset[int]:
    tails_a = {t.tail for t in g.triples if t.head == a}
    tails_b = {t.tail for t in g.triples if t.head == b}
    return frozenset(tails_a & tails_b)


def _mentions_any(g: Graph, question: str, entities: set[int]) -> bool:
    return any(m.entity in entities for m in link_entities(g, question))


def generate_qa(
    g: Graph,
    counts: dict[str, int],
    seed: int,
    max_gold: int = 4,
    max_head_degree: int = 8,
) -> list[QAItem]:
    """Deterministic per seed. ``counts`` maps qtype to how many items.

    Multi-hop questions are built so the intermediate entity is absent from
    the question text, forcing relational traversal; gold sets are kept small
    enough (``max_gold``) that a budgeted context can hold the evidence.
    """
    for qtype in counts:
        if qtype not in QTYPES:
            raise ArgumentError(f"unknown question type {qtype!r}")
    rng = np.random.default_rng(seed)
    triples = g.triples
    if not triples:
        raise GenerationError("direct", "graph has no triples")
    items: list[QAItem] = []

    n_direct = counts.get("direct", 0)
    used: set = set()
    made = 0
    for _ in range(200 * max(n_direct, 1)):
        if made >= n_direct:
            break
        t = triples[int(rng.integers(len(triples)))]
        key = (t.head, t.relation)
        if key in used:
            continue
        gold = direct_gold(g, t.head, t.relation)
        if not gold or len(gold) > max_gold:
            continue
        used.add(key)
        rel = g.relation_name(t.relation)
        head = g.entity_name(t.head)
        question = f"What {rel} {head}?"
        provenance = tuple(
            g.triple_id(x)
            for x in triples
            if x.head == t.head and x.relation == t.relation
        )
        items.append(
            QAItem(f"direct-{made:03d}", question, gold, "direct", provenance)
        )
        made += 1
    if made < n_direct:
        raise GenerationError("direct", f"only {made} of {n_direct} items possible")

    n_multi = counts.get("multi_hop", 0)
    used = set()
    made = 0
    for _ in range(400 * max(n_multi, 1)):
        if made >= n_multi:
            break
        first = triples[int(rng.integers(len(triples)))]
        hops = [
            x
            for x in g.neighbors(first.tail, "out")
            if x[0] != first.relation and x[2].tail != first.head
        ]
        if not hops:
            continue
        _, _, second = hops[int(rng.integers(len(hops)))]
        key = (first.head, first.relation, second.relation)
        if key in used:
            continue
        gold = chain_gold(g, first.head, first.relation, second.relation)
        if not gold or len(gold) > max_gold:
            continue
        if g.degree(first.head) > max_head_degree:
            continue
        mids = {
            t.tail
            for t in triples
            if t.head == first.head and t.relation == first.relation
        }
        rel1 = g.relation_name(first.relation)
        rel2 = g.relation_name(second.relation)
        head = g.entity_name(first.head)
        question = f"What {rel2} the {rel1} of {head}?"
        if _mentions_any(g, question, mids):
            continue
        used.add(key)
        provenance = (g.triple_id(first), g.triple_id(second))
        items.append(
            QAItem(f"multi_hop-{made:03d}", question, gold, "multi_hop", provenance)
        )
        made += 1
    if made < n_multi:
        raise GenerationError(
            "multi_hop", f"only {made} of {n_multi} items possible"
        )

    n_comp = counts.get("comparative", 0)
    by_tail: dict[int, list[int]] = {}
    for t in triples:
        by_tail.setdefault(t.tail, []).append(t.head)
    shared = [
        (tail, sorted(set(heads)))
        for tail, heads in sorted(by_tail.items())
        if len(set(heads)) >= 2
    ]
    if n_comp and not shared:
        raise GenerationError("comparative", "no two heads share a tail")
    used = set()
    made = 0
    for _ in range(400 * max(n_comp, 1)):
        if made >= n_comp:
            break
        tail, heads = shared[int(rng.integers(len(shared)))]
        pick = rng.permutation(len(heads))[:2]
        a, b = sorted(heads[i] for i in pick)
        key = (a, b)
        if key in used:
            continue
        gold = comparative_gold(g, a, b)
        if not gold or len(gold) > max_gold:
            continue
        if g.degree(a) > max_head_degree or g.degree(b) > max_head_degree:
            continue
        used.add(key)
        question = (
            f"What is suitable for both {g.entity_name(a)} and {g.entity_name(b)}?"
        )
        provenance = tuple(
            sorted(
                g.triple_id(t)
                for t in triples
                if t.tail in gold and t.head in (a, b)
            )
        )
        items.append(
            QAItem(
                f"comparative-{made:03d}", question, gold, "comparative", provenance
            )
        )
        made += 1
    if made < n_comp:
        raise GenerationError(
            "comparative", f"only {made} of {n_comp} items possible"
        )
    return items


# -- dataset files (JSONL, gold as surface names) ----------------------------


def save_qa_jsonl(items: list[QAItem], g: Graph, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in items:
            record = {
                "id": item.id,
                "question": item.question,
                "gold": sorted(g.entity_name(e) for e in item.gold),
                "qtype": item.qtype,
                "provenance": list(item.provenance),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_qa_jsonl(path, g: Graph) -> list[QAItem]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            gold = []
            for name in record["gold"]:
                eid = g.find_entity(name)
                if eid is None:
                    raise ArgumentError(
                        f"{path}:{line_no}: gold entity {name!r} not in graph"
                    )
                gold.append(eid)
            items.append(
                QAItem(
                    id=record["id"],
                    question=record["question"],
                    gold=frozenset(gold),
                    qtype=record["qtype"],
                    provenance=tuple(record.get("provenance", [])),
                )
            )
    return items


# -- running and scoring ------------------------------------------------------


def run_pipeline(item: QAItem, mode: str, stack: QAStack) -> frozenset[int]:
    """Predicted entity set for one item under one retrieval mode."""
    try:
        outcome = stack.answer(item.question, mode)
    except GatewayError as exc:
        raise PipelineError(mode, item.id, exc) from exc
    return outcome.answer.mentions


def _micro_counts(
    preds: dict[str, frozenset[int]], golds: dict[str, frozenset[int]], ids
) -> tuple[int, int, int, int]:
    tp = fp = fn = exact = 0
    for item_id in ids:
        p, gold = preds[item_id], golds[item_id]
        tp += len(p & gold)
        fp += len(p - gold)
        fn += len(gold - p)
        exact += int(p == gold)
    return tp, fp, fn, exact


def _metrics(tp: int, fp: int, fn: int, exact: int, total: int) -> dict[str, float]:
    precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    return {
        "accuracy": 100.0 * exact / total if total else 0.0,
        "precision": precision,
        "recall": recall,
        "f1": f1_score(precision, recall),
    }


def score(
    preds: dict[str, frozenset[int]],
    golds: dict[str, frozenset[int]],
    qtypes: dict[str, str] | None = None,
    mode: str = "",
) -> MetricsReport:
    """Accuracy = exact set match; precision/recall micro-averaged over
    entity decisions across items; permutation-invariant in item order."""
    if set(preds) != set(golds):
        raise ArgumentError("prediction and gold item ids differ")
    ids = sorted(preds)
    overall = _metrics(*_micro_counts(preds, golds, ids), total=len(ids))
    report = MetricsReport(mode=mode, **overall)
    if qtypes:
        for qtype in QTYPES:
            slice_ids = [i for i in ids if qtypes.get(i) == qtype]
            if not slice_ids:
                continue
            report.per_qtype[qtype] = _metrics(
                *_micro_counts(preds, golds, slice_ids), total=len(slice_ids)
            )
    return report


def compare_modes(
    dataset: list[QAItem], stack: QAStack, out_dir=None
) -> tuple[list[MetricsReport], list[dict], str]:
    """Run all four modes over identical items; render a comparison table.

    Returns (reports in fixed mode order, per-item audit records, table).
    When ``out_dir`` is given, writes ``report.json`` and ``records.jsonl``;
    both are deterministic byte-for-byte for a fixed stack and dataset.
    """
    if not dataset:
        raise ArgumentError("dataset must be non-empty")
    golds = {item.id: item.gold for item in dataset}
    qtypes = {item.id: item.qtype for item in dataset}
    reports: list[MetricsReport] = []
    records: list[dict] = []
    g = stack.graph
    for mode in MODES:
        preds = {}
        for item in dataset:
            pred = run_pipeline(item, mode, stack)
            preds[item.id] = pred
            records.append(
                {
                    "id": item.id,
                    "mode": mode,
                    "qtype": item.qtype,
                    "question": item.question,
                    "gold": sorted(g.entity_name(e) for e in item.gold),
                    "predicted": sorted(g.entity_name(e) for e in pred),
                    "exact_match": pred == item.gold,
                }
            )
        reports.append(score(preds, golds, qtypes, mode=mode))
    table = render_table(reports)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = {"modes": [r.as_dict() for r in reports]}
        (out / "report.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        with open(out / "records.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for record in records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    return reports, records, table


def render_table(reports: list[MetricsReport]) -> str:
    """Fixed-order comparison table plus per-qtype accuracy breakdown."""
    lines = [
        f"{'Mode':<10} {'Accuracy':>9} {'Precision':>10} {'Recall':>8} {'F1':>8}"
    ]
    for r in reports:
        lines.append(
            f"{r.mode:<10} {r.accuracy:>9.2f} {r.precision:>10.2f} "
            f"{r.recall:>8.2f} {r.f1:>8.2f}"
        )
    qtypes = [q for q in QTYPES if any(q in r.per_qtype for r in reports)]
    if qtypes:
        lines.append("")
        header = f"{'Accuracy by type':<18}" + "".join(
            f"{q:>14}" for q in qtypes
        )
        lines.append(header)
        for r in reports:
            row = f"{r.mode:<18}" + "".join(
                f"{r.per_qtype.get(q, {}).get('accuracy', 0.0):>14.2f}"
                for q in qtypes
            )
            lines.append(row)
    return "\n".join(lines)
