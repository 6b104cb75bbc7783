"""Graph JSON / JSONL serialization.

A graph object is ``{"num_nodes": n, "edges": [[u, v], ...],
"node_features": [[...], ...]}`` where ``node_features`` is optional.
Datasets are JSONL, one graph object per line, with optional per-graph
``"label"`` and per-node ``"node_labels"`` fields.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

from .errors import ParseError
from .graph import Graph, build_graph


@dataclass
class GraphRecord:
    graph: Graph
    label: int | None = None
    node_labels: list[int] | None = None


def graph_to_obj(g: Graph) -> dict:
    obj = {"num_nodes": g.num_nodes, "edges": [[u, v] for u, v in g.edges]}
    if g.node_features is not None:
        obj["node_features"] = g.node_features.tolist()
    return obj


def graph_from_obj(obj: dict) -> Graph:
    try:
        return build_graph(
            int(obj["num_nodes"]), obj["edges"], obj.get("node_features")
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad graph object: {exc}") from exc


def record_to_obj(rec: GraphRecord) -> dict:
    obj = graph_to_obj(rec.graph)
    if rec.label is not None:
        obj["label"] = rec.label
    if rec.node_labels is not None:
        obj["node_labels"] = list(rec.node_labels)
    return obj


def record_from_obj(obj: dict) -> GraphRecord:
    g = graph_from_obj(obj)
    label = obj.get("label")
    node_labels = obj.get("node_labels")
    if node_labels is not None:
        node_labels = [int(x) for x in node_labels]
    return GraphRecord(g, None if label is None else int(label), node_labels)


def dumps_canonical(obj) -> str:
    # fixed separators and no key sorting: dicts are built in canonical
    # field order, so identical inputs serialize byte-identically
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_graph(g: Graph, path: str) -> None:
    atomic_write_text(path, dumps_canonical(graph_to_obj(g)) + "\n")


def load_graph(path: str) -> Graph:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path}: {exc.msg}", exc.lineno) from exc
    return graph_from_obj(obj)


def save_jsonl(records, path: str) -> None:
    lines = [dumps_canonical(record_to_obj(rec)) for rec in records]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def load_jsonl(path: str) -> list[GraphRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            try:
                records.append(record_from_obj(obj))
            except ParseError as exc:
                raise ParseError(str(exc), lineno) from exc
    return records
