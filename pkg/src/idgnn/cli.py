"""Command-line entry point tying the toolkit into reproducible pipelines.

Subcommands: generate, features, wl, expressiveness, train, eval, report.
Every file output is written atomically and gets a sidecar
``<out>.manifest.json`` recording the subcommand, flags, seeds, input
digests, and tool version; identical manifests always reproduce
byte-identical outputs. All randomness flows from explicit --seed flags.

Exit codes: 0 success, 2 usage or input error, 3 capability limit,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys

from . import __version__
from .counts import augment_features, graph_signature
from .datasets import (
    GraphRecord,
    atomic_write_text,
    dumps_canonical,
    load_graph,
    load_jsonl,
    record_to_obj,
    save_jsonl,
)
from .errors import CapabilityError, InputError, NumericError
from .expressiveness import run_regular_experiment
from .generators import RNG_NAME, STREAM_SPLIT, GeneratorSpec, gen_dataset
from .graph import build_graph
from .nn import ModelConfig, init_model, load_model, save_model
from .tasks import (
    make_graph_cc_task,
    make_node_cc_task,
    make_spd_task,
    split,
    train,
)
from .wl import are_isomorphic, wl_graph_hash

_TASK_ALIASES = {"node-cc": "node_cc", "edge-spd": "edge_spd", "graph-cc": "graph_cc"}
_FAMILY_ALIASES = {
    "d-regular": "d_regular",
    "small-world": "small_world",
    "scale-free": "scale_free",
}
_VARIANT_ALIASES = {"plain": "plain", "id-full": "id_full", "id-fast": "id_fast"}


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path: str, subcommand: str, flags: dict,
                    inputs: list[str], outputs: list[str]) -> None:
    manifest = {
        "tool": "idgnn",
        "version": __version__,
        "subcommand": subcommand,
        "flags": {k: v for k, v in sorted(flags.items())},
        "inputs": {p: _sha256(p) for p in sorted(inputs)},
        "outputs": sorted(outputs),
        "rng": {"name": RNG_NAME, "stream_split": STREAM_SPLIT},
    }
    atomic_write_text(
        out_path + ".manifest.json",
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )


def _flags(args: argparse.Namespace) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _cmd_generate(args) -> int:
    family = _FAMILY_ALIASES[args.family]
    if family == "d_regular":
        if args.d is None:
            raise InputError("--d is required for d-regular")
        degree, prob = args.d, 0.0
    elif family == "small_world":
        if args.k is None:
            raise InputError("--k is required for small-world")
        degree, prob = args.k, args.p
    else:
        if args.m is None:
            raise InputError("--m is required for scale-free")
        degree, prob = args.m, args.p_triad
    spec = GeneratorSpec(
        family=family, num_nodes=args.n, degree_param=degree,
        rewire_or_triad_prob=prob, seed=args.seed,
    )
    graphs = gen_dataset(spec, args.count, args.seed)
    save_jsonl([GraphRecord(g) for g in graphs], args.out)
    _write_manifest(args.out, "generate", _flags(args), [], [args.out])
    print(f"wrote {len(graphs)} graphs to {args.out}")
    return 0


def _cmd_features(args) -> int:
    records = load_jsonl(args.data)
    out_records = []
    for rec in records:
        g = rec.graph
        feats = augment_features(g, args.k)
        g2 = build_graph(g.num_nodes, g.edges, feats)
        out_records.append(GraphRecord(g2, rec.label, rec.node_labels))
    save_jsonl(out_records, args.out)
    _write_manifest(args.out, "features", _flags(args), [args.data], [args.out])
    print(f"appended {args.k} walk-count columns to {len(out_records)} graphs")
    return 0


def _cmd_wl_hash(args) -> int:
    g = load_graph(args.graph)
    print(f"{wl_graph_hash(g):016x}")
    return 0


def _cmd_wl_compare(args) -> int:
    g1 = load_graph(args.graph1)
    g2 = load_graph(args.graph2)
    h1, h2 = wl_graph_hash(g1), wl_graph_hash(g2)
    print(f"{h1:016x}  {args.graph1}")
    print(f"{h2:016x}  {args.graph2}")
    if h1 != h2:
        print("verdict: WL-distinguishable, NOT isomorphic")
    elif are_isomorphic(g1, g2):
        print("verdict: isomorphic")
    else:
        print("verdict: WL-indistinguishable, NOT isomorphic")
    return 0


def _cmd_wl_dedupe(args) -> int:
    records = load_jsonl(args.data)
    kept: list[GraphRecord] = []
    kept_sigs: list[bytes] = []
    for rec in records:
        sig = graph_signature(rec.graph, min(10, max(rec.graph.num_nodes - 1, 1)))
        duplicate = any(
            sig == s and are_isomorphic(rec.graph, k.graph)
            for k, s in zip(kept, kept_sigs)
        )
        if not duplicate:
            kept.append(rec)
            kept_sigs.append(sig)
    save_jsonl(kept, args.out)
    _write_manifest(args.out, "wl-dedupe", _flags(args), [args.data], [args.out])
    print(f"kept {len(kept)} of {len(records)} graphs")
    return 0


def _cmd_expressiveness(args) -> int:
    k_list = [int(tok) for tok in args.k_list.split(",") if tok.strip()]
    report = run_regular_experiment(args.n, args.d, args.count, k_list, args.seed)
    if args.stamp:
        import datetime

        report.timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    atomic_write_text(args.out, dumps_canonical(report.to_obj()) + "\n")
    csv_path = os.path.splitext(args.out)[0] + ".csv"
    atomic_write_text(csv_path, report.to_csv())
    _write_manifest(args.out, "expressiveness", _flags(args), [], [args.out, csv_path])
    for k in sorted(report.fractions):
        print(f"K={k}: {report.fractions[k]:.2f}")
    print(f"1-WL baseline: {report.wl_distinguished_fraction:.2f} "
          f"(all hashes equal: {report.wl_all_equal})")
    return 0


def _load_task(records, task_kind: str, args):
    graphs = [rec.graph for rec in records]
    if task_kind == "node_cc":
        return make_node_cc_task(graphs)
    if task_kind == "graph_cc":
        return make_graph_cc_task(graphs)
    return make_spd_task(graphs, args.pairs_per_graph, args.seed)


def _cmd_train(args) -> int:
    task_kind = _TASK_ALIASES[args.task]
    variant = _VARIANT_ALIASES[args.variant]
    records = load_jsonl(args.data)
    if not records:
        raise InputError(f"dataset {args.data} is empty")
    task_data = _load_task(records, task_kind, args)
    task = split(task_data, args.split_fraction, args.seed)

    layers = args.layers if args.layers is not None else (5 if task_kind == "edge_spd" else 3)
    base_dim = (records[0].graph.node_features.shape[1]
                if records[0].graph.node_features is not None else 1)
    input_dim = base_dim + args.fast_k if variant == "id_fast" else base_dim
    config = ModelConfig(
        flavor=args.flavor, variant=variant, num_layers=layers,
        hidden_dim=args.hidden, input_dim=input_dim,
        output_dim=task.spec.num_classes,
        aggregation=args.aggregation or "", fast_k=args.fast_k, seed=args.seed,
    )
    model = init_model(config)
    report = train(model, task, epochs=args.epochs, lr=args.lr, seed=args.seed)
    save_model(model, args.out)
    outputs = [args.out]
    if args.report:
        atomic_write_text(
            args.report,
            dumps_canonical(report.to_obj(include_wall_clock=args.stamp)) + "\n",
        )
        outputs.append(args.report)
    _write_manifest(args.out, "train", _flags(args), [args.data], outputs)
    print(f"wiring: {report.wiring}")
    print(f"final validation accuracy: {report.final_val_accuracy:.4f}")
    return 0


def _cmd_eval(args) -> int:
    from .tasks import evaluate

    task_kind = _TASK_ALIASES[args.task]
    model = load_model(args.model)
    records = load_jsonl(args.data)
    if not records:
        raise InputError(f"dataset {args.data} is empty")
    task_data = _load_task(records, task_kind, args)
    accuracy = evaluate(model, task_data.spec, task_data.items)
    result = {"task": task_kind, "accuracy": accuracy, "graphs": len(records)}
    print(dumps_canonical(result))
    if args.out:
        atomic_write_text(args.out, dumps_canonical(result) + "\n")
        _write_manifest(args.out, "eval", _flags(args),
                        [args.model, args.data], [args.out])
    return 0


def _cmd_report(args) -> int:
    rows = []
    for path in args.reports:
        with open(path) as fh:
            obj = json.load(fh)
        rows.append(
            {
                "report": os.path.splitext(os.path.basename(path))[0],
                "flavor": obj["config"]["flavor"],
                "variant": obj["config"]["variant"],
                "task": obj["task"],
                "seed": obj["seed"],
                "accuracy": obj["final_val_accuracy"],
            }
        )
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=["report", "flavor", "variant", "task", "seed", "accuracy"],
        lineterminator="\n",
    )
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    atomic_write_text(args.out, buf.getvalue())
    _write_manifest(args.out, "report", _flags(args), list(args.reports), [args.out])
    print(f"summarized {len(rows)} reports to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idgnn",
        description="identity-aware GNN toolkit: generators, WL lab, "
                    "walk-count analytics, and a trainable engine",
    )
    parser.add_argument("--version", action="version", version=f"idgnn {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="generate a synthetic JSONL dataset")
    p.add_argument("--family", required=True, choices=sorted(_FAMILY_ALIASES))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--d", type=int, help="degree (d-regular)")
    p.add_argument("--k", type=int, help="ring neighbors (small-world)")
    p.add_argument("--p", type=float, default=0.0, help="rewiring probability")
    p.add_argument("--m", type=int, help="attachments per node (scale-free)")
    p.add_argument("--p-triad", type=float, default=0.0, help="triad probability")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("features", help="append walk-count columns to node features")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("wl", help="WL hashing, comparison, and dedupe")
    wl_sub = p.add_subparsers(dest="wl_mode", required=True)
    q = wl_sub.add_parser("hash", help="print the WL hash of a graph JSON file")
    q.add_argument("graph")
    q.set_defaults(func=_cmd_wl_hash)
    q = wl_sub.add_parser("compare", help="compare two graph JSON files")
    q.add_argument("graph1")
    q.add_argument("graph2")
    q.set_defaults(func=_cmd_wl_compare)
    q = wl_sub.add_parser("dedupe", help="drop exact-isomorphic duplicates from a dataset")
    q.add_argument("--data", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_wl_dedupe)

    p = sub.add_parser("expressiveness",
                       help="distinguish random d-regular graphs by walk counts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--k-list", default="3,4,5,6")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stamp", action="store_true",
                   help="embed a timestamp (breaks byte-identical reruns)")
    p.set_defaults(func=_cmd_expressiveness)

    p = sub.add_parser("train", help="train a model on a synthetic task")
    p.add_argument("--data", required=True)
    p.add_argument("--task", required=True, choices=sorted(_TASK_ALIASES))
    p.add_argument("--flavor", default="sage", choices=["gcn", "sage", "gin"])
    p.add_argument("--variant", default="plain", choices=sorted(_VARIANT_ALIASES))
    p.add_argument("--layers", type=int, default=None,
                   help="default 3, or 5 for edge-spd")
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fast-k", type=int, default=10)
    p.add_argument("--aggregation", default=None, choices=["sum", "mean", "max"])
    p.add_argument("--pairs-per-graph", type=int, default=20)
    p.add_argument("--split-fraction", type=float, default=0.8)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--report", default=None, help="TrainReport JSON path")
    p.add_argument("--stamp", action="store_true",
                   help="include wall-clock time in the report")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--task", required=True, choices=sorted(_TASK_ALIASES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pairs-per-graph", type=int, default=20)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="summarize TrainReport JSONs into a CSV")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
