"""Command-line entry points; thin wrappers over the core package.

Exit codes: 0 success, 1 runtime/numerical failure, 2 usage or configuration
problem. Every command is deterministic for a fixed config and seed when the
mock gateway is active.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, gcn, kg, synth, transe
from .config import AppConfig, apply_overrides, load_config
from .errors import (
    ArgumentError,
    ConfigError,
    GatewayError,
    GenerationError,
    GraphQAError,
    NotFoundError,
    NumericalError,
    ParseError,
)
from .gateway import MODES, ChatEndpointConfig
from .retrieval import default_template
from .stack import QAStack, RetrievalParams, build_refined

USAGE_ERRORS = (ArgumentError, ConfigError, ParseError, NotFoundError)


def _load_graph(cfg: AppConfig) -> kg.Graph:
    path = Path(cfg.snapshot_path)
    if not path.exists():
        raise ConfigError(f"graph snapshot not found: {path} (run kg-build first)")
    return kg.load_triples(path)


def _template(cfg: AppConfig) -> str:
    if cfg.template_path:
        return Path(cfg.template_path).read_text(encoding="utf-8")
    return default_template()


def build_stack(cfg: AppConfig) -> QAStack:
    graph = _load_graph(cfg)
    emb_path = Path(cfg.embeddings_path)
    if not emb_path.exists():
        raise ConfigError(f"embeddings not found: {emb_path} (run train --stage transe)")
    emb = transe.load_embeddings(emb_path)
    gcn_path = Path(cfg.gcn_params_path)
    if not gcn_path.exists():
        raise ConfigError(f"gcn params not found: {gcn_path} (run train --stage gcn)")
    params, self_loops = gcn.load_gcn_params(gcn_path)
    refined = build_refined(graph, emb, params, self_loops)
    endpoint = None
    if not cfg.gateway_mock:
        if not cfg.gateway_url:
            raise ConfigError("gateway_url required when gateway_mock is off")
        endpoint = ChatEndpointConfig(
            url=cfg.gateway_url,
            model=cfg.gateway_model,
            timeout=cfg.gateway_timeout,
            retries=cfg.gateway_retries,
            token_env=cfg.gateway_token_env,
        )
    return QAStack(
        graph=graph,
        emb=emb,
        refined=refined,
        retrieval=RetrievalParams(
            hop=cfg.hop,
            budget=cfg.budget,
            alpha=cfg.alpha,
            encoder_seed=cfg.encoder_seed,
            encoder_dim=cfg.encoder_dim,
            kge_top_n=cfg.kge_top_n,
        ),
        endpoint=endpoint,
        template=_template(cfg),
    )


def cmd_kg_build(cfg: AppConfig, use_synth: bool) -> int:
    if use_synth:
        spec = synth.SyntheticSpec(
            entities=cfg.synth_entities,
            relations=cfg.synth_relations,
            noise_rate=cfg.synth_noise,
            triples_per_relation=cfg.synth_triples_per_relation,
        )
        graph, _ = synth.generate_synthetic_kg(spec, cfg.seed)
    else:
        source = Path(cfg.triples_path)
        if not source.exists():
            raise ConfigError(f"triples file not found: {source}")
        graph = kg.load_triples(source, cfg.aliases_path or None)
    kg.save_triples(graph, cfg.snapshot_path)
    # Snapshot round-trip keeps id assignment canonical for later commands.
    graph = kg.load_triples(cfg.snapshot_path)
    print(
        f"{graph.num_entities} entities, {graph.num_relations} relations, "
        f"{graph.num_triples} triples"
    )
    print(f"snapshot written to {cfg.snapshot_path}")
    return 0


def _write_loss_csv(trace: list[float], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(trace):
            fh.write(f"{epoch},{loss:.9g}\n")


def cmd_train(cfg: AppConfig, stage: str) -> int:
    graph = _load_graph(cfg)
    if stage == "transe":
        hyper = transe.TransEHyper(
            dim=cfg.dim,
            learning_rate=cfg.learning_rate,
            margin=cfg.margin,
            norm=cfg.norm,
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            seed=cfg.seed,
        )
        emb, trace = transe.train_transe(graph, hyper)
        transe.save_embeddings(emb, cfg.embeddings_path)
        csv_path = Path(cfg.embeddings_path + ".loss.csv")
        _write_loss_csv(trace, csv_path)
        print(f"embeddings written to {cfg.embeddings_path}")
    else:
        emb_path = Path(cfg.embeddings_path)
        if not emb_path.exists():
            raise ConfigError(f"embeddings not found: {emb_path}")
        emb = transe.load_embeddings(emb_path)
        hyper = gcn.GcnHyper(
            learning_rate=cfg.gcn_learning_rate,
            epochs=cfg.gcn_epochs,
            margin=cfg.gcn_margin,
            seed=cfg.seed,
            hidden_dim=cfg.gcn_hidden,
            norm=cfg.norm,
            self_loops=cfg.self_loops,
            final_activation=cfg.final_activation,
            anchor_weight=cfg.gcn_anchor,
        )
        params, trace = gcn.train_gcn(graph, emb, hyper)
        gcn.save_gcn_params(params, cfg.self_loops, cfg.gcn_params_path)
        csv_path = Path(cfg.gcn_params_path + ".loss.csv")
        _write_loss_csv(trace, csv_path)
        print(f"gcn params written to {cfg.gcn_params_path}")
    print(f"loss trace written to {csv_path}")
    print(f"final epoch loss: {trace[-1]:.6f}")
    return 0


def cmd_query(cfg: AppConfig, question: str, mode: str, as_json: bool) -> int:
    stack = build_stack(cfg)
    outcome = stack.answer(question, mode)
    g = stack.graph
    evidence = [
        {
            "head": g.entity_name(t.head),
            "relation": g.relation_name(t.relation),
            "tail": g.entity_name(t.tail),
            "score": round(score, 6),
        }
        for t, score in outcome.evidence
    ]
    if as_json:
        payload = {
            "answer": outcome.answer.text,
            "mode": mode,
            "linked_entities": [g.entity_name(m.entity) for m in outcome.matches],
            "triples": evidence,
            "fusion_fallback": outcome.fusion_fallback,
        }
        print(json.dumps(payload, sort_keys=True))
        return 0
    print(f"mode: {mode}")
    print(f"answer: {outcome.answer.text}")
    linked = ", ".join(g.entity_name(m.entity) for m in outcome.matches) or "none"
    print(f"linked entities: {linked}")
    print(f"fusion fallback: {'yes' if outcome.fusion_fallback else 'no'}")
    if evidence:
        print("evidence:")
        for i, e in enumerate(evidence, 1):
            print(
                f"  {i}. {e['head']} — {e['relation']} — {e['tail']}."
                f"  (score={e['score']:.4f})"
            )
    else:
        print("evidence: none")
    return 0


def cmd_eval(cfg: AppConfig, dataset_path: str | None, use_synth: bool) -> int:
    stack = build_stack(cfg)
    if use_synth:
        counts = {
            "direct": cfg.qa_direct,
            "multi_hop": cfg.qa_multi_hop,
            "comparative": cfg.qa_comparative,
        }
        items = bench.generate_qa(stack.graph, counts, cfg.seed)
    elif dataset_path:
        items = bench.load_qa_jsonl(dataset_path, stack.graph)
    else:
        raise ConfigError("eval needs --dataset PATH or --synth")
    _, _, table = bench.compare_modes(items, stack, out_dir=cfg.report_dir)
    print(table)
    print(f"report written to {cfg.report_dir}/report.json")
    return 0


def cmd_serve(cfg: AppConfig) -> int:
    import uvicorn

    from .service.app import create_app

    stack = build_stack(cfg)
    app = create_app(stack, cors_origin=cfg.cors_origin)
    uvicorn.run(app, host=cfg.bind, port=cfg.port, log_level="info")
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphqa",
        description="Knowledge-graph retrieval-augmented question answering.",
    )
    parser.add_argument("--config", help="path to a key=value config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.set_defaults(config=None, seed=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def subparser(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        # also accepted after the subcommand; SUPPRESS keeps an absent flag
        # from clobbering a value parsed before it
        p.add_argument("--config", default=argparse.SUPPRESS)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        return p

    p = subparser("kg-build", "load (or generate) and snapshot the graph")
    p.add_argument("--synth", action="store_true", help="generate a synthetic graph")

    p = subparser("train", "train a model stage")
    p.add_argument("--stage", choices=["transe", "gcn"], required=True)

    p = subparser("query", "answer one question")
    p.add_argument("question")
    p.add_argument("--mode", choices=list(MODES), default="graphrag")
    p.add_argument("--json", action="store_true", dest="as_json")

    p = subparser("eval", "run the four-mode benchmark")
    p.add_argument("--dataset", help="QA dataset (JSONL)")
    p.add_argument("--synth", action="store_true", help="generate a synthetic dataset")

    p = subparser("serve", "start the HTTP query service")
    p.add_argument("--bind", help="bind address")
    p.add_argument("--port", type=int, help="port")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        apply_overrides(cfg, {"seed": args.seed})
        if args.command == "serve":
            apply_overrides(cfg, {"bind": args.bind, "port": args.port})
        if args.command == "kg-build":
            return cmd_kg_build(cfg, args.synth)
        if args.command == "train":
            return cmd_train(cfg, args.stage)
        if args.command == "query":
            return cmd_query(cfg, args.question, args.mode, args.as_json)
        if args.command == "eval":
            return cmd_eval(cfg, args.dataset, args.synth)
        if args.command == "serve":
            return cmd_serve(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return 2
    except (NumericalError, GenerationError, GatewayError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GraphQAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
