"""Synthetic supervised tasks, splits, training loops, and metrics.

Three task kinds: per-node clustering-coefficient classification (10 bins on
[0, 1]), shortest-path-distance classification on sampled node pairs (5-way:
distances 1..4 and >= 5), and per-graph mean clustering-coefficient
classification (10 bins on [0, 0.5], matching the generator sweep range).

Edge-task wiring follows the variant: id_full scores a pair through the
conditional embedding of u with identity at v and a linear head, while plain
and id_fast concatenate two independent node embeddings into the pair MLP.

id_fast training inputs are log(1 + count)-scaled closed-walk features:
raw counts grow geometrically with the walk length, and without a
normalization layer (deliberately absent, for determinism) they drown the
constant base features and stall training. The log transform is injective,
deterministic, and applied only at the feature boundary; everything
analytic stays in raw integer counts.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .counts import augment_features, clustering_direct, mean_clustering
from .errors import InputError
from .generators import child_seed
from .graph import EgoNet, Graph, bfs_distances, extract_ego
from .nn import (
    Model,
    backward_id_full,
    backward_layers,
    edge_pair_backward,
    edge_pair_score,
    forward_id_full,
    forward_plain,
    head_backward,
    head_logits,
    readout_graph,
    zero_grads,
)
from .optim import AdamState, adam_step, loss_xent

log = logging.getLogger(__name__)

TASK_KINDS = ("node_cc", "edge_spd", "graph_cc")

NODE_CC_BINS = tuple(i / 10 for i in range(11))
GRAPH_CC_BINS = tuple(i / 20 for i in range(11))
SPD_CLASSES = 5


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    num_classes: int
    bin_edges: tuple[float, ...] = ()
    pairs_per_graph: int = 0
    distance_cap: int = SPD_CLASSES

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise InputError(f"unknown task kind {self.kind!r}")


@dataclass
class LabeledGraph:
    graph: Graph
    node_labels: np.ndarray | None = None
    graph_label: int | None = None
    pairs: list[tuple[int, int, int]] | None = None  # (u, v, class)


@dataclass
class TaskData:
    spec: TaskSpec
    items: list[LabeledGraph]


@dataclass
class TaskSplit:
    spec: TaskSpec
    train: list[LabeledGraph]
    val: list[LabeledGraph]


@dataclass
class TrainReport:
    config: dict
    task: str
    wiring: str
    epochs: int
    lr: float
    seed: int
    train_losses: list[float]
    final_val_accuracy: float
    num_parameters: int
    bin_edges: list[float]
    wall_clock_seconds: float | None = None

    def to_obj(self, include_wall_clock: bool = False) -> dict:
        return {
            "config": self.config,
            "task": self.task,
            "wiring": self.wiring,
            "epochs": self.epochs,
            "lr": self.lr,
            "seed": self.seed,
            "train_losses": self.train_losses,
            "final_val_accuracy": self.final_val_accuracy,
            "num_parameters": self.num_parameters,
            "bin_edges": self.bin_edges,
            "wall_clock_seconds": self.wall_clock_seconds if include_wall_clock else None,
        }


def _bin_index(value: float, edges: tuple[float, ...]) -> int:
    """Index of the half-open bin [edges[i], edges[i+1]) holding value; the
    top bin is closed and values beyond it clamp into it."""
    nbins = len(edges) - 1
    for i in range(nbins):
        if value < edges[i + 1]:
            return i
    return nbins - 1


def make_node_cc_task(graphs) -> TaskData:
    """Label every node with the bin of its clustering coefficient."""
    spec = TaskSpec(kind="node_cc", num_classes=10, bin_edges=NODE_CC_BINS)
    items = []
    for g in graphs:
        labels = np.array(
            [_bin_index(clustering_direct(g, v), NODE_CC_BINS) for v in range(g.num_nodes)],
            dtype=np.int64,
        )
        items.append(LabeledGraph(graph=g, node_labels=labels))
    return TaskData(spec, items)


def make_graph_cc_task(graphs) -> TaskData:
    """Label every graph with the bin of its mean clustering coefficient."""
    spec = TaskSpec(kind="graph_cc", num_classes=10, bin_edges=GRAPH_CC_BINS)
    items = [
        LabeledGraph(graph=g, graph_label=_bin_index(mean_clustering(g), GRAPH_CC_BINS))
        for g in graphs
    ]
    return TaskData(spec, items)


def _spd_class(dist: int | None) -> int:
    if dist is None:
        return SPD_CLASSES - 1  # farther than the cap counts as ">= 5"
    return min(dist, SPD_CLASSES) - 1


def make_spd_task(graphs, pairs_per_graph: int, seed: int) -> TaskData:
    """Sample node pairs per graph, labeled by thresholded shortest-path
    distance (classes: 1, 2, 3, 4, >=5), stratified per class where possible.
    """
    if pairs_per_graph < 1:
        raise InputError("pairs_per_graph must be >= 1")
    spec = TaskSpec(
        kind="edge_spd", num_classes=SPD_CLASSES, pairs_per_graph=pairs_per_graph
    )
    items = []
    for gi, g in enumerate(graphs):
        rng = np.random.Generator(np.random.PCG64(child_seed(seed, gi)))
        by_class: list[list[tuple[int, int]]] = [[] for _ in range(SPD_CLASSES)]
        for u in range(g.num_nodes):
            dist = bfs_distances(g, u, g.num_nodes)
            for v in range(u + 1, g.num_nodes):
                by_class[_spd_class(dist[v])].append((u, v))
        quota = pairs_per_graph // SPD_CLASSES
        extra = pairs_per_graph % SPD_CLASSES
        chosen: list[tuple[int, int, int]] = []
        leftovers: list[tuple[int, int, int]] = []
        for c, pool in enumerate(by_class):
            want = quota + (1 if c < extra else 0)
            if not pool:
                if want:
                    log.warning(
                        "graph %d: no pairs at distance class %d, class skipped",
                        gi, c,
                    )
                continue
            take = min(want, len(pool))
            idx = rng.choice(len(pool), size=take, replace=False)
            picked = {int(i) for i in idx}
            chosen.extend((pool[i][0], pool[i][1], c) for i in sorted(picked))
            leftovers.extend(
                (pool[i][0], pool[i][1], c) for i in range(len(pool)) if i not in picked
            )
        short = pairs_per_graph - len(chosen)
        if short > 0 and leftovers:
            idx = rng.choice(len(leftovers), size=min(short, len(leftovers)), replace=False)
            chosen.extend(leftovers[int(i)] for i in sorted(idx))
        items.append(LabeledGraph(graph=g, pairs=sorted(chosen)))
    return TaskData(spec, items)


def split(task: TaskData, fraction: float, seed: int) -> TaskSplit:
    """Deterministic shuffled graph-level split; no graph straddles sides."""
    if not 0.0 < fraction < 1.0:
        raise InputError(f"fraction must be in (0, 1), got {fraction}")
    order = np.random.Generator(np.random.PCG64(seed)).permutation(len(task.items))
    cut = int(round(fraction * len(task.items)))
    if cut == 0 or cut == len(task.items):
        raise InputError(
            f"split of {len(task.items)} items at {fraction} leaves a side empty"
        )
    train = [task.items[i] for i in order[:cut]]
    val = [task.items[i] for i in order[cut:]]
    return TaskSplit(task.spec, train, val)


# ---------------------------------------------------------------------------
# model wiring


def task_wiring(spec: TaskSpec, model: Model) -> str:
    if spec.kind == "edge_spd":
        return "conditional" if model.config.variant == "id_full" else "pair_concat"
    return "node_head" if spec.kind == "node_cc" else "sum_pool_head"


@dataclass
class _Prepared:
    """Per-graph tensors computed once before training."""

    item: LabeledGraph
    x: np.ndarray
    egos: list[EgoNet] = field(default_factory=list)


def _prepare(model: Model, spec: TaskSpec, items) -> list[_Prepared]:
    cfg = model.config
    prepared = []
    for item in items:
        g = item.graph
        if g.node_features is not None:
            x = g.node_features
        else:
            base = cfg.input_dim - (cfg.fast_k if cfg.variant == "id_fast" else 0)
            x = np.ones((g.num_nodes, base))
        if cfg.variant == "id_fast":
            counts = augment_features(g, cfg.fast_k)[:, -cfg.fast_k:]
            x = np.concatenate([x, np.log1p(counts)], axis=1)
        if x.shape[1] != cfg.input_dim:
            raise InputError(
                f"model expects input_dim={cfg.input_dim} but task features "
                f"have width {x.shape[1]}"
            )
        p = _Prepared(item=item, x=x)
        if cfg.variant == "id_full":
            if spec.kind == "edge_spd":
                p.egos = [
                    extract_ego(g, u, cfg.num_layers, identity_at=v)
                    for u, v, _ in (item.pairs or [])
                ]
            else:
                p.egos = [extract_ego(g, v, cfg.num_layers) for v in range(g.num_nodes)]
        prepared.append(p)
    return prepared


def _forward_item(model: Model, spec: TaskSpec, p: _Prepared, record: bool):
    """Logits and labels for one graph, plus the caches backward needs."""
    cfg = model.config
    item = p.item
    state: dict = {}
    if cfg.variant == "id_full":
        tapes: list = []
        embeddings = []
        if spec.kind == "edge_spd":
            for ego in p.egos:
                x_local = p.x[list(ego.to_parent), :]
                h = forward_id_full(model, ego, x_local, tapes if record else None)
                embeddings.append(h)
            H = np.stack(embeddings) if embeddings else np.zeros((0, cfg.hidden_dim))
            logits = head_logits(model, H)
            labels = np.array([c for _, _, c in item.pairs or []], dtype=np.int64)
            state.update(H=H, tapes=tapes)
            return logits, labels, state
        for ego in p.egos:
            x_local = p.x[list(ego.to_parent), :]
            embeddings.append(forward_id_full(model, ego, x_local, tapes if record else None))
        H = np.stack(embeddings)
        state.update(H=H, tapes=tapes)
    else:
        tape_box: list = []
        H = forward_plain(model, item.graph, p.x, tape_box if record else None)
        state.update(H=H, tapes=tape_box)
        if spec.kind == "edge_spd":
            pair_caches: list = []
            logits_rows = []
            for u, v, _ in item.pairs or []:
                logits_rows.append(
                    edge_pair_score(H[u], H[v], model.pair_head,
                                    pair_caches if record else None)
                )
            logits = (np.stack(logits_rows) if logits_rows
                      else np.zeros((0, cfg.output_dim)))
            labels = np.array([c for _, _, c in item.pairs or []], dtype=np.int64)
            state["pair_caches"] = pair_caches
            return logits, labels, state

    if spec.kind == "node_cc":
        logits = head_logits(model, H)
        labels = item.node_labels
    else:  # graph_cc
        pooled = readout_graph(H)
        logits = head_logits(model, pooled)[None, :]
        labels = np.array([item.graph_label], dtype=np.int64)
        state["pooled"] = pooled
    return logits, labels, state


def _backward_item(model: Model, spec: TaskSpec, p: _Prepared, state: dict,
                   G_logits: np.ndarray, grads: dict) -> None:
    cfg = model.config
    item = p.item
    if spec.kind == "edge_spd":
        if cfg.variant == "id_full":
            _backward_item_conditional(model, p, state, G_logits, grads)
            return
        H = state["H"]
        G_H = np.zeros_like(H)
        for (u, v, _), cache, g_row in zip(item.pairs or [], state["pair_caches"], G_logits):
            g_u, g_v = edge_pair_backward(model.pair_head, cache, g_row, grads)
            G_H[u] += g_u
            G_H[v] += g_v
        backward_layers(model, state["tapes"][0], G_H, grads)
        return
    if spec.kind == "node_cc":
        G_H = head_backward(model, state["H"], G_logits, grads)
        if cfg.variant == "id_full":
            for ego, tape, g_row in zip(p.egos, state["tapes"], G_H):
                backward_id_full(model, ego, tape, g_row, grads)
        else:
            backward_layers(model, state["tapes"][0], G_H, grads)
        return
    # graph_cc: logits came from the pooled embedding
    g_pooled = head_backward(model, state["pooled"], G_logits[0], grads)
    H = state["H"]
    G_H = np.tile(g_pooled, (H.shape[0], 1))
    if cfg.variant == "id_full":
        for ego, tape, g_row in zip(p.egos, state["tapes"], G_H):
            backward_id_full(model, ego, tape, g_row, grads)
    else:
        backward_layers(model, state["tapes"][0], G_H, grads)


def _backward_item_conditional(model: Model, p: _Prepared, state: dict,
                               G_logits: np.ndarray, grads: dict) -> None:
    """Edge task with conditional embeddings: linear head over center rows."""
    H = state["H"]
    G_H = head_backward(model, H, G_logits, grads)
    for ego, tape, g_row in zip(p.egos, state["tapes"], G_H):
        backward_id_full(model, ego, tape, g_row, grads)


def predictions(model: Model, spec: TaskSpec, items) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (logits, labels) over every labeled unit in the items."""
    prepared = _prepare(model, spec, items)
    all_logits = []
    all_labels = []
    for p in prepared:
        logits, labels, _ = _forward_item(model, spec, p, record=False)
        if logits.shape[0]:
            all_logits.append(np.atleast_2d(logits))
            all_labels.append(labels)
    if not all_logits:
        raise InputError("no labeled items to evaluate")
    return np.concatenate(all_logits), np.concatenate(all_labels)


def evaluate(model: Model, spec: TaskSpec, items) -> float:
    """Argmax accuracy; ties break toward the lowest class index."""
    logits, labels = predictions(model, spec, items)
    pred = np.argmax(logits, axis=1)
    return float(np.mean(pred == labels))


def train(model: Model, task: TaskSplit, epochs: int, lr: float = 0.01,
          seed: int = 0) -> TrainReport:
    """Full-batch Adam training; deterministic given the model seed and task.

    One optimizer step per epoch over the summed gradients of every train
    item, in fixed item order. Raises NumericError if the loss goes
    non-finite.
    """
    if epochs < 0:
        raise InputError("epochs must be nonnegative")
    started = time.monotonic()
    spec = task.spec
    if model.config.output_dim != spec.num_classes:
        raise InputError(
            f"model output_dim {model.config.output_dim} != task classes "
            f"{spec.num_classes}"
        )
    prepared = _prepare(model, spec, task.train)
    params = dict(model.named_parameters())
    state = AdamState()
    losses: list[float] = []
    for _ in range(epochs):
        logits_parts = []
        labels_parts = []
        stages = []
        for p in prepared:
            logits, labels, st = _forward_item(model, spec, p, record=True)
            stages.append((p, st, logits.shape[0]))
            if logits.shape[0]:
                logits_parts.append(np.atleast_2d(logits))
                labels_parts.append(labels)
        if not logits_parts:
            raise InputError("no labeled items in the training split")
        logits_all = np.concatenate(logits_parts)
        labels_all = np.concatenate(labels_parts)
        loss, G_all = loss_xent(logits_all, labels_all)
        losses.append(loss)
        grads = zero_grads(model)
        offset = 0
        for p, st, rows in stages:
            if rows == 0:
                continue
            G_logits = G_all[offset:offset + rows]
            offset += rows
            _backward_item(model, spec, p, st, G_logits, grads)
        adam_step(params, grads, state, lr=lr)
    accuracy = evaluate(model, spec, task.val)
    return TrainReport(
        config=dict(
            flavor=model.config.flavor,
            variant=model.config.variant,
            num_layers=model.config.num_layers,
            hidden_dim=model.config.hidden_dim,
            input_dim=model.config.input_dim,
            output_dim=model.config.output_dim,
            aggregation=model.config.aggregation,
            fast_k=model.config.fast_k,
            seed=model.config.seed,
        ),
        task=spec.kind,
        wiring=task_wiring(spec, model),
        epochs=epochs,
        lr=lr,
        seed=seed,
        train_losses=losses,
        final_val_accuracy=accuracy,
        num_parameters=model.num_parameters(),
        bin_edges=list(spec.bin_edges),
        wall_clock_seconds=time.monotonic() - started,
    )
