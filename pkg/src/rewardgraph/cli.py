"""Command-line pipeline over the JSONL / JSON file formats.

Subcommands: synth, ingest, split, build-graph, train-gnn, eval-gnn, trace,
predict, grpo, pipeline. Every command takes --config/--seed/--set/--out;
diagnostics go to stderr, data to files or stdout. Outputs are byte-stable
given identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .graph import build_warmup, load_graph, save_graph
from .grpo import run_experiment
from .metrics import predict_reward
from .model import init_model, load_model, save_model, score_graph
from .rewards import SOURCE_GNN, SOURCE_GROUND_TRUTH
from .store import ingest_jsonl, split_labels, synth_generate, write_jsonl
from .training import evaluate, trace_report, train
from .graph import attach_query
from .tensor import sigmoid


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


def _dump_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    for spec in args.set or []:
        config.apply_override(spec)
    if args.seed is not None:
        config.set_seed(args.seed)
    config.validate()
    return config


def _stage(name: str, fn, *fn_args, **fn_kwargs):
    try:
        return fn(*fn_args, **fn_kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - stage boundary
        raise StageError(name, exc) from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    config = _load_config(args)
    store = _stage("synth", synth_generate, config.synth)
    path = _out_dir(args) / config.paths["data"]
    _stage("synth", write_jsonl, store, path)
    _info(f"synth: {len(store)} queries, {store.n_rollouts()} rollouts -> {path}")
    return 0


def cmd_ingest(args) -> int:
    config = _load_config(args)
    store, counts = _stage("ingest", ingest_jsonl, args.data,
                           config.synth.embedding_dim if args.check_dim else None)
    _info(f"ingest: dim={store.dim} queries={len(store)} "
          f"rollouts={store.n_rollouts()} splits={counts}")
    return 0


def cmd_split(args) -> int:
    config = _load_config(args)
    store, _ = _stage("split", ingest_jsonl, args.data)
    split_store = _stage("split", split_labels, store, config.budget)
    path = _out_dir(args) / (args.output or "dataset.split.jsonl")
    _stage("split", write_jsonl, split_store, path)
    labeled = len(split_store.labeled_train_queries())
    total = len(split_store.split_queries("train"))
    _info(f"split: {labeled}/{total} train queries labeled "
          f"(gt_ratio={config.budget.gt_ratio}) -> {path}")
    return 0


def cmd_build_graph(args) -> int:
    config = _load_config(args)
    store, _ = _stage("build-graph", ingest_jsonl, args.data)
    graph = _stage("build-graph", build_warmup, store, config.k)
    path = _out_dir(args) / config.paths["graph"]
    _stage("build-graph", save_graph, graph, path)
    _info(f"build-graph: {graph.n_queries} queries, {graph.n_rollouts} rollouts, "
          f"{len(graph.qq_src)} qq edges -> {path}")
    return 0


def cmd_train_gnn(args) -> int:
    config = _load_config(args)
    store, _ = _stage("train-gnn", ingest_jsonl, args.data)
    graph = _stage("train-gnn", load_graph, args.graph)
    config.gnn.input_dim = store.dim
    model = _stage("train-gnn", init_model, config.gnn)
    model, history = _stage("train-gnn", train, model, graph, store, config.train)
    out = _out_dir(args)
    _stage("train-gnn", save_model, model, out / config.paths["model"])
    _dump_json(history, out / "history.json")
    _info(f"train-gnn: best epoch {history['best_epoch']} "
          f"val_loss={history['best_val_loss']:.4f} -> {out / config.paths['model']}")
    return 0


def cmd_eval_gnn(args) -> int:
    store, _ = _stage("eval-gnn", ingest_jsonl, args.data)
    graph = _stage("eval-gnn", load_graph, args.graph)
    model = _stage("eval-gnn", load_model, args.model)
    queries = store.split_queries(args.split)
    report = _stage("eval-gnn", evaluate, model, graph, queries)
    print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    return 0


def cmd_trace(args) -> int:
    store, _ = _stage("trace", ingest_jsonl, args.data)
    graph = _stage("trace", load_graph, args.graph)
    model = _stage("trace", load_model, args.model)
    query = _stage("trace", store.get, args.query_id)
    report = _stage("trace", trace_report, model, graph, store, query)
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_predict(args) -> int:
    store, _ = _stage("predict", ingest_jsonl, args.data)
    graph = _stage("predict", load_graph, args.graph)
    model = _stage("predict", load_model, args.model)
    for q in store:
        if q.labeled:
            _info(f"predict: query {q.query_id!r} is labeled; "
                  "emitting model scores anyway")
        if not q.rollouts:
            continue
        probe = q if q.query_id not in graph.q_ids else None
        if probe is None:
            _info(f"predict: query {q.query_id!r} is part of the warmup graph; skipped")
            continue
        overlay = _stage("predict", attach_query, graph, q)
        raw, refs = _stage("predict", score_graph, model, overlay)
        preds = predict_reward(raw)
        sig = sigmoid(raw)
        for (qid, rid), r, s, p in zip(refs, raw, sig, preds):
            print(json.dumps({
                "query_id": qid,
                "rollout_id": rid,
                "source": SOURCE_GROUND_TRUTH if q.labeled else SOURCE_GNN,
                "raw_score": float(r),
                "sigmoid": float(s),
                "reward": int(q.rollouts[[x.rollout_id for x in q.rollouts].index(rid)].gt_reward
                              if q.labeled else p),
            }, sort_keys=True))
    return 0


def cmd_grpo(args) -> int:
    config = _load_config(args)
    store, _ = _stage("grpo", ingest_jsonl, args.data)
    model = _stage("grpo", load_model, args.model) if args.model else None
    graph = _stage("grpo", load_graph, args.graph) if args.graph else None
    report = _stage("grpo", run_experiment, args.mode, store, model, graph, config.grpo)
    out = _out_dir(args)
    _dump_json(report.to_dict(), out / f"grpo_{args.mode}.json")
    (out / f"grpo_{args.mode}.csv").write_text(report.to_csv(), encoding="utf-8")
    _info(f"grpo[{args.mode}]: final held-out accuracy {report.final_accuracy:.4f}")
    return 0


def _pipeline_once(config: RunConfig, store, out: Path, tag: str = "",
                   with_traces: bool = True) -> dict:
    """split -> graph -> train -> evaluate -> three policy runs."""
    suffix = f".{tag}" if tag else ""
    split_store = _stage("split", split_labels, store, config.budget)
    graph = _stage("build-graph", build_warmup, split_store, config.k)
    config.gnn.input_dim = split_store.dim
    model = _stage("train-gnn", init_model, config.gnn)
    model, history = _stage("train-gnn", train, model, graph, split_store, config.train)
    save_model(model, out / f"model{suffix}.json")
    save_graph(graph, out / f"graph{suffix}.json")

    test_queries = split_store.split_queries("test")
    report = _stage("eval-gnn", evaluate, model, graph, test_queries)

    if with_traces:
        traces = [
            _stage("trace", trace_report, model, graph, split_store, q)
            for q in test_queries[:2]
        ]
        _dump_json(traces, out / f"traces{suffix}.json")

    runs = {}
    for mode in ("partial", "mixed", "oracle"):
        run = _stage("grpo", run_experiment, mode, split_store,
                     model if mode == "mixed" else None,
                     graph if mode == "mixed" else None, config.grpo)
        _dump_json(run.to_dict(), out / f"grpo_{mode}{suffix}.json")
        (out / f"grpo_{mode}{suffix}.csv").write_text(run.to_csv(), encoding="utf-8")
        runs[mode] = run
    return {
        "eval": report.to_dict(),
        "history": {"best_epoch": history["best_epoch"],
                    "best_val_loss": history["best_val_loss"]},
        "modes": {m: r.final_accuracy for m, r in runs.items()},
    }


def _format_summary_table(summary: dict) -> str:
    lines = []
    lines.append(f"{'mode':<12}{'final_accuracy':>16}")
    for mode, acc in summary["modes"].items():
        lines.append(f"{mode:<12}{acc:>16.4f}")
    overall = summary["eval"]["overall"]
    auc = overall["roc_auc"]
    sep = overall["separation"]
    lines.append("")
    lines.append(f"{'reward model':<16}"
                 f"acc={overall['accuracy']:.3f} "
                 f"auc={'n/a' if auc is None else format(auc, '.3f')} "
                 f"sep={'n/a' if sep is None else format(sep, '.3f')}")
    return "\n".join(lines)


def cmd_pipeline(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    store, _ = _stage("ingest", ingest_jsonl, args.data)

    summary: dict = {"config": config.to_dict()}
    if args.sweep_gt_ratios:
        ratios = [float(x) for x in args.sweep_gt_ratios.split(",")]
        rows = {}
        for ratio in ratios:
            config.budget.gt_ratio = ratio
            rows[f"{ratio:g}"] = _pipeline_once(config, store, out,
                                                tag=f"gt{ratio:g}", with_traces=False)
        summary["gt_ratio_sweep"] = rows
    elif args.ablation:
        rows = {}
        for variant in ("full", "mlp", "homogeneous", "no_thinking"):
            config.gnn.variant = variant
            rows[variant] = _pipeline_once(config, store, out, tag=variant,
                                           with_traces=False)["eval"]
        summary["ablation"] = rows
    else:
        summary.update(_pipeline_once(config, store, out))

    _dump_json(summary, out / "summary.json")
    if "modes" in summary:
        print(_format_summary_table(summary))
    else:
        print(json.dumps({k: v for k, v in summary.items() if k != "config"},
                         sort_keys=True, indent=2))
    _info(f"pipeline: summary -> {out / 'summary.json'}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a JSON run configuration")
    p.add_argument("--seed", type=int, help="master seed applied to every stage")
    p.add_argument("--set", action="append", metavar="K=V",
                   help="override a config field by dotted path (repeatable)")
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rewardgraph",
        description="Experience-graph reward propagation pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("ingest", help="validate a dataset file")
    _add_common(p)
    p.add_argument("data")
    p.add_argument("--check-dim", action="store_true",
                   help="require the configured embedding dimension")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("split", help="apply a label budget to a dataset")
    _add_common(p)
    p.add_argument("data")
    p.add_argument("--output", help="output file name (under --out)")
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("build-graph", help="build the warmup graph")
    _add_common(p)
    p.add_argument("data")
    p.set_defaults(fn=cmd_build_graph)

    p = sub.add_parser("train-gnn", help="train the reward model")
    _add_common(p)
    p.add_argument("data")
    p.add_argument("graph")
    p.set_defaults(fn=cmd_train_gnn)

    p = sub.add_parser("eval-gnn", help="evaluate the reward model")
    _add_common(p)
    p.add_argument("data")
    p.add_argument("graph")
    p.add_argument("model")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.set_defaults(fn=cmd_eval_gnn)

    p = sub.add_parser("trace", help="propagation trace for one query")
    _add_common(p)
    p.add_argument("data")
    p.add_argument("graph")
    p.add_argument("model")
    p.add_argument("query_id")
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("predict", help="score a query file")
    _add_common(p)
    p.add_argument("graph")
    p.add_argument("model")
    p.add_argument("data")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("grpo", help="one policy-optimization run")
    _add_common(p)
    p.add_argument("data")
    p.add_argument("--mode", default="mixed", choices=("partial", "mixed", "oracle"))
    p.add_argument("--model")
    p.add_argument("--graph")
    p.set_defaults(fn=cmd_grpo)

    p = sub.add_parser("pipeline", help="full pipeline with summary report")
    _add_common(p)
    p.add_argument("data")
    p.add_argument("--sweep-gt-ratios", metavar="R1,R2,...",
                   help="run the pipeline once per label ratio")
    p.add_argument("--ablation", action="store_true",
                   help="compare all model variants")
    p.set_defaults(fn=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        _info(f"error {exc}")
        return 1
    except (ValueError, OSError) as exc:
        _info(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
