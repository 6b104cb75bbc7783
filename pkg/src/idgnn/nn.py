"""Trainable message-passing engine with manual reverse-mode gradients.

Three layer flavors share one heterogeneous message stage: every node's
outgoing message goes through the msg0 linear map, except the identity
node's message, which goes through msg1. Plain models alias msg1 to msg0,
so the two schemes coincide whenever no identity node is set.

Flavors:
  gcn   h' = ReLU(A_norm @ M)  with symmetric normalization over the closed
        neighborhood (self loop included)
  sage  m = ReLU(msg(h)); h' = ReLU(U @ concat(AGG(m), h))  with AGG one of
        sum / mean / max over open neighborhoods
  gin   z = (1 + eps) * h + sum(msg(h)); h' = ReLU(W2 @ ReLU(W1 @ z))

All tensors are float64. Forward passes record a Tape of per-layer caches;
backward walks the tape and returns exact gradients for every parameter
(max aggregation routes ties to the lowest-index maximizer, ReLU uses
subgradient 0 at 0).

Checkpoint layout: 8-byte magic ``IDGNNMDL``, little-endian uint32 header
length, UTF-8 JSON header holding the config and a parameter index table
(name and shape, in order), then the concatenated little-endian float64
parameter blob.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .errors import InputError
from .graph import EgoNet, Graph, extract_ego

FLAVORS = ("gcn", "sage", "gin")
VARIANTS = ("plain", "id_full", "id_fast")
AGGREGATIONS = ("sum", "mean", "max")

_FLAVOR_DEFAULT_AGG = {"gcn": "mean", "sage": "max", "gin": "sum"}

CHECKPOINT_MAGIC = b"IDGNNMDL"


@dataclass(frozen=True)
class ModelConfig:
    flavor: str
    variant: str
    num_layers: int
    hidden_dim: int
    input_dim: int
    output_dim: int
    aggregation: str = ""
    fast_k: int = 10
    seed: int = 0
    edge_dim: int = 0  # width of per-edge features folded into messages

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise InputError(f"unknown flavor {self.flavor!r}")
        if self.variant not in VARIANTS:
            raise InputError(f"unknown variant {self.variant!r}")
        if self.num_layers < 1:
            raise InputError("num_layers must be >= 1")
        if min(self.hidden_dim, self.input_dim, self.output_dim) < 1:
            raise InputError("all dimensions must be >= 1")
        if self.edge_dim < 0:
            raise InputError("edge_dim must be nonnegative")
        if self.variant == "id_fast" and self.fast_k < 1:
            raise InputError("id_fast requires fast_k >= 1")
        if not self.aggregation:
            object.__setattr__(
                self, "aggregation", _FLAVOR_DEFAULT_AGG[self.flavor]
            )
        if self.aggregation not in AGGREGATIONS:
            raise InputError(f"unknown aggregation {self.aggregation!r}")
        if self.flavor == "gin" and self.aggregation != "sum":
            raise InputError("gin always uses sum aggregation")
        if self.flavor == "gcn" and self.aggregation != "mean":
            raise InputError("gcn uses its symmetric-normalized mean scheme")


@dataclass
class LayerParams:
    """Per-layer parameter tensors; unused slots are None for the flavor."""

    msg0_weight: np.ndarray
    msg0_bias: np.ndarray
    msg1_weight: np.ndarray
    msg1_bias: np.ndarray
    update_weight: np.ndarray | None = None
    update_bias: np.ndarray | None = None
    mlp2_weight: np.ndarray | None = None
    mlp2_bias: np.ndarray | None = None
    gin_eps: np.ndarray | None = None


@dataclass
class PairHead:
    """Two-layer perceptron scoring a concatenated embedding pair."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass
class Model:
    config: ModelConfig
    layers: list[LayerParams]
    head_weight: np.ndarray
    head_bias: np.ndarray
    pair_head: PairHead

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        """All trainable tensors in deterministic order.

        Plain and id_fast models alias msg1 to msg0, so msg1 is omitted for
        them (there is a single shared message function).
        """
        hetero = self.config.variant == "id_full"
        out = []
        for i, lp in enumerate(self.layers):
            out.append((f"layers.{i}.msg0_weight", lp.msg0_weight))
            out.append((f"layers.{i}.msg0_bias", lp.msg0_bias))
            if hetero:
                out.append((f"layers.{i}.msg1_weight", lp.msg1_weight))
                out.append((f"layers.{i}.msg1_bias", lp.msg1_bias))
            for name in ("update_weight", "update_bias", "mlp2_weight",
                         "mlp2_bias", "gin_eps"):
                arr = getattr(lp, name)
                if arr is not None:
                    out.append((f"layers.{i}.{name}", arr))
        out.append(("head.weight", self.head_weight))
        out.append(("head.bias", self.head_bias))
        out.append(("pair.w1", self.pair_head.w1))
        out.append(("pair.b1", self.pair_head.b1))
        out.append(("pair.w2", self.pair_head.w2))
        out.append(("pair.b2", self.pair_head.b2))
        return out

    def num_parameters(self) -> int:
        return sum(arr.size for _, arr in self.named_parameters())

    def parameter_report(self) -> dict[str, int]:
        return {name: int(arr.size) for name, arr in self.named_parameters()}


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def init_model(config: ModelConfig) -> Model:
    """Seeded fan-in-scaled uniform initialization, U(-1/sqrt(fan_in), +).

    Biases start at zero and the GIN epsilon at zero (trainable). The same
    config and seed always produce bit-identical parameters.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    layers = []
    for i in range(config.num_layers):
        d_in = config.input_dim if i == 0 else config.hidden_dim
        d_out = config.hidden_dim
        d_msg = d_in if config.flavor == "gin" else d_out
        fan = d_in + config.edge_dim
        msg0_w = _uniform(rng, (d_msg, fan), fan)
        msg0_b = np.zeros(d_msg)
        if config.variant == "id_full":
            msg1_w = _uniform(rng, (d_msg, fan), fan)
            msg1_b = np.zeros(d_msg)
        else:
            msg1_w, msg1_b = msg0_w, msg0_b
        lp = LayerParams(msg0_w, msg0_b, msg1_w, msg1_b)
        if config.flavor == "sage":
            lp.update_weight = _uniform(rng, (d_out, d_out + d_in), d_out + d_in)
            lp.update_bias = np.zeros(d_out)
        elif config.flavor == "gin":
            lp.update_weight = _uniform(rng, (d_out, d_in), d_in)
            lp.update_bias = np.zeros(d_out)
            lp.mlp2_weight = _uniform(rng, (d_out, d_out), d_out)
            lp.mlp2_bias = np.zeros(d_out)
            lp.gin_eps = np.zeros(())
        layers.append(lp)
    h = config.hidden_dim
    head_w = _uniform(rng, (config.output_dim, h), h)
    head_b = np.zeros(config.output_dim)
    pair = PairHead(
        w1=_uniform(rng, (h, 2 * h), 2 * h),
        b1=np.zeros(h),
        w2=_uniform(rng, (config.output_dim, h), h),
        b2=np.zeros(config.output_dim),
    )
    return Model(config, layers, head_w, head_b, pair)


# ---------------------------------------------------------------------------
# forward / backward


class _GraphOps:
    """Dense adjacency helpers for one (sub)graph, built per forward call.

    With ``edge_dim > 0`` the directed-edge arrays (src, dst, per-edge
    features) are materialized too, since messages then differ per edge
    rather than per source node. GCN self-loops become explicit edges with
    zero features.
    """

    def __init__(self, g: Graph, edge_dim: int = 0):
        n = g.num_nodes
        self.n = n
        self.adjacency = g.adjacency
        A = np.zeros((n, n))
        for u, v in g.edges:
            A[u, v] = 1.0
            A[v, u] = 1.0
        self.A = A
        deg = A.sum(axis=1)
        self.deg = deg
        self.inv_deg = np.where(deg > 0, 1.0 / np.maximum(deg, 1.0), 0.0)
        d_hat = 1.0 / np.sqrt(deg + 1.0)
        self.A_gcn = (A + np.eye(n)) * d_hat[:, None] * d_hat[None, :]
        self.edge_dim = edge_dim
        if edge_dim:
            if g.edge_features is None:
                raise InputError("model expects edge features but graph has none")
            src, dst, feats = [], [], []
            for u, v in g.edges:
                f = g.edge_features.get((u, v))
                if f is None or f.shape != (edge_dim,):
                    raise InputError(
                        f"edge ({u}, {v}) needs a feature vector of width {edge_dim}"
                    )
                src.extend((u, v))
                dst.extend((v, u))
                feats.extend((f, f))
            # explicit self-loop edges with zero features, used by gcn only
            self.loop_start = len(src)
            src.extend(range(n))
            dst.extend(range(n))
            feats.extend(np.zeros(edge_dim) for _ in range(n))
            self.src = np.array(src, dtype=np.int64)
            self.dst = np.array(dst, dtype=np.int64)
            self.F = np.array(feats) if feats else np.zeros((0, edge_dim))
            self.gcn_norm = d_hat[self.src] * d_hat[self.dst]
            self.incoming = [
                np.flatnonzero(self.dst[: self.loop_start] == u) for u in range(n)
            ]


@dataclass
class Tape:
    """Recorded forward pass: inputs, graph helpers, per-layer caches."""

    ops: _GraphOps
    x: np.ndarray
    identity_local: int | None
    caches: list[dict] = field(default_factory=list)
    out: np.ndarray | None = None


def _agg_max(M: np.ndarray, adjacency):
    n, d = M.shape
    S = np.zeros_like(M)
    src = np.full((n, d), -1, dtype=np.int64)
    cols = np.arange(d)
    for u, nbrs in enumerate(adjacency):
        if not nbrs:
            continue
        block = M[list(nbrs)]
        idx = np.argmax(block, axis=0)  # first max = lowest neighbor id
        S[u] = block[idx, cols]
        src[u] = np.asarray(nbrs, dtype=np.int64)[idx]
    return S, src


def _agg_max_backward(G_S: np.ndarray, src: np.ndarray, n: int) -> np.ndarray:
    G_M = np.zeros((n, G_S.shape[1]))
    cols = np.arange(G_S.shape[1])
    for u in range(n):
        rows = src[u]
        valid = rows >= 0
        if valid.all():
            np.add.at(G_M, (rows, cols), G_S[u])
        elif valid.any():
            np.add.at(G_M, (rows[valid], cols[valid]), G_S[u][valid])
    return G_M


def _messages(lp: LayerParams, H: np.ndarray, identity_local: int | None):
    M = H @ lp.msg0_weight.T + lp.msg0_bias
    if identity_local is not None:
        M[identity_local] = H[identity_local] @ lp.msg1_weight.T + lp.msg1_bias
    return M


def _messages_backward(lp, H, identity_local, G_M, grads, prefix):
    G_H = np.zeros_like(H)
    if identity_local is None:
        grads[prefix + "msg0_weight"] += G_M.T @ H
        grads[prefix + "msg0_bias"] += G_M.sum(axis=0)
        G_H += G_M @ lp.msg0_weight
    else:
        i = identity_local
        G0 = G_M.copy()
        g1 = G0[i].copy()
        G0[i] = 0.0
        grads[prefix + "msg0_weight"] += G0.T @ H
        grads[prefix + "msg0_bias"] += G0.sum(axis=0)
        G_H += G0 @ lp.msg0_weight
        # aliased message functions share one gradient block
        shared = lp.msg1_weight is lp.msg0_weight
        key_w = prefix + ("msg0_weight" if shared else "msg1_weight")
        key_b = prefix + ("msg0_bias" if shared else "msg1_bias")
        grads[key_w] += np.outer(g1, H[i])
        grads[key_b] += g1
        G_H[i] += g1 @ lp.msg1_weight
    return G_H


def _edge_messages(lp: LayerParams, ops: _GraphOps, H: np.ndarray,
                   identity_local: int | None, with_loops: bool):
    """Per-directed-edge messages with edge features appended to the sender
    state (the per-edge attribute hook). Returns (M, Z, edge slice used)."""
    stop = None if with_loops else ops.loop_start
    src = ops.src[:stop]
    Z = np.concatenate([H[src], ops.F[:stop]], axis=1)
    M = Z @ lp.msg0_weight.T + lp.msg0_bias
    if identity_local is not None:
        sel = src == identity_local
        if sel.any():
            M[sel] = Z[sel] @ lp.msg1_weight.T + lp.msg1_bias
    return M, Z, src


def _edge_messages_backward(lp, ops, Z, src, identity_local, G_M, grads,
                            prefix, G_H):
    if identity_local is None or not (src == identity_local).any():
        grads[prefix + "msg0_weight"] += G_M.T @ Z
        grads[prefix + "msg0_bias"] += G_M.sum(axis=0)
        G_Z = G_M @ lp.msg0_weight
    else:
        sel = src == identity_local
        G_M0 = G_M.copy()
        G_M0[sel] = 0.0
        grads[prefix + "msg0_weight"] += G_M0.T @ Z
        grads[prefix + "msg0_bias"] += G_M0.sum(axis=0)
        G_Z = G_M0 @ lp.msg0_weight
        shared = lp.msg1_weight is lp.msg0_weight
        key_w = prefix + ("msg0_weight" if shared else "msg1_weight")
        key_b = prefix + ("msg0_bias" if shared else "msg1_bias")
        grads[key_w] += G_M[sel].T @ Z[sel]
        grads[key_b] += G_M[sel].sum(axis=0)
        G_Z[sel] = G_M[sel] @ lp.msg1_weight
    d_in = G_H.shape[1]
    np.add.at(G_H, src, G_Z[:, :d_in])


def _layer_forward_edge(lp: LayerParams, config: ModelConfig, ops: _GraphOps,
                        H: np.ndarray, identity_local: int | None):
    n = ops.n
    cache: dict = {"H": H}
    if config.flavor == "gcn":
        M, Z, src = _edge_messages(lp, ops, H, identity_local, with_loops=True)
        S = np.zeros((n, M.shape[1]))
        np.add.at(S, ops.dst, ops.gcn_norm[:, None] * M)
        cache.update(M=M, Z=Z, src=src, S=S)
        return np.maximum(S, 0.0), cache
    M, Z, src = _edge_messages(lp, ops, H, identity_local, with_loops=False)
    dst = ops.dst[: ops.loop_start]
    cache.update(M=M, Z=Z, src=src)
    if config.flavor == "sage":
        Mr = np.maximum(M, 0.0)
        if config.aggregation == "max":
            S = np.zeros((n, M.shape[1]))
            pick = np.full((n, M.shape[1]), -1, dtype=np.int64)
            cols = np.arange(M.shape[1])
            for u in range(n):
                inc = ops.incoming[u]
                if inc.size:
                    block = Mr[inc]
                    idx = np.argmax(block, axis=0)
                    S[u] = block[idx, cols]
                    pick[u] = inc[idx]
            cache["pick"] = pick
        else:
            S = np.zeros((n, M.shape[1]))
            np.add.at(S, dst, Mr)
            if config.aggregation == "mean":
                S *= ops.inv_deg[:, None]
        Zu = np.concatenate([S, H], axis=1)
        P = Zu @ lp.update_weight.T + lp.update_bias
        cache.update(Zu=Zu, P=P)
        return np.maximum(P, 0.0), cache
    # gin: plain sum over incoming edge messages
    S = np.zeros((n, M.shape[1]))
    np.add.at(S, dst, M)
    eps = float(lp.gin_eps)
    Zg = (1.0 + eps) * H + S
    P1 = Zg @ lp.update_weight.T + lp.update_bias
    Hd = np.maximum(P1, 0.0)
    P2 = Hd @ lp.mlp2_weight.T + lp.mlp2_bias
    cache.update(Zg=Zg, P1=P1, Hd=Hd, P2=P2)
    return np.maximum(P2, 0.0), cache


def _layer_backward_edge(lp: LayerParams, config: ModelConfig, ops: _GraphOps,
                         cache: dict, identity_local: int | None,
                         G_out: np.ndarray, grads: dict, prefix: str) -> np.ndarray:
    H = cache["H"]
    G_H = np.zeros_like(H)
    dst = ops.dst[: ops.loop_start]
    if config.flavor == "gcn":
        G_S = G_out * (cache["S"] > 0.0)
        G_M = ops.gcn_norm[:, None] * G_S[ops.dst]
        _edge_messages_backward(lp, ops, cache["Z"], cache["src"],
                                identity_local, G_M, grads, prefix, G_H)
        return G_H
    if config.flavor == "sage":
        G_P = G_out * (cache["P"] > 0.0)
        grads[prefix + "update_weight"] += G_P.T @ cache["Zu"]
        grads[prefix + "update_bias"] += G_P.sum(axis=0)
        G_Zu = G_P @ lp.update_weight
        d_out = config.hidden_dim
        G_S = G_Zu[:, :d_out]
        G_H += G_Zu[:, d_out:]
        M = cache["M"]
        if config.aggregation == "max":
            G_Mr = np.zeros_like(M)
            cols = np.arange(M.shape[1])
            for u in range(ops.n):
                rows = cache["pick"][u]
                valid = rows >= 0
                if valid.all():
                    np.add.at(G_Mr, (rows, cols), G_S[u])
                elif valid.any():
                    np.add.at(G_Mr, (rows[valid], cols[valid]), G_S[u][valid])
        elif config.aggregation == "mean":
            G_Mr = (ops.inv_deg[:, None] * G_S)[dst]
        else:
            G_Mr = G_S[dst]
        G_M = G_Mr * (M > 0.0)
        _edge_messages_backward(lp, ops, cache["Z"], cache["src"],
                                identity_local, G_M, grads, prefix, G_H)
        return G_H
    # gin
    G_P2 = G_out * (cache["P2"] > 0.0)
    grads[prefix + "mlp2_weight"] += G_P2.T @ cache["Hd"]
    grads[prefix + "mlp2_bias"] += G_P2.sum(axis=0)
    G_Hd = G_P2 @ lp.mlp2_weight
    G_P1 = G_Hd * (cache["P1"] > 0.0)
    grads[prefix + "update_weight"] += G_P1.T @ cache["Zg"]
    grads[prefix + "update_bias"] += G_P1.sum(axis=0)
    G_Z = G_P1 @ lp.update_weight
    eps = float(lp.gin_eps)
    grads[prefix + "gin_eps"] += np.sum(G_Z * H)
    G_H += (1.0 + eps) * G_Z
    G_M = G_Z[dst]
    _edge_messages_backward(lp, ops, cache["Z"], cache["src"],
                            identity_local, G_M, grads, prefix, G_H)
    return G_H


def _layer_forward(lp: LayerParams, config: ModelConfig, ops: _GraphOps,
                   H: np.ndarray, identity_local: int | None) -> tuple[np.ndarray, dict]:
    if ops.edge_dim:
        return _layer_forward_edge(lp, config, ops, H, identity_local)
    cache: dict = {"H": H}
    M = _messages(lp, H, identity_local)
    cache["M"] = M
    if config.flavor == "gcn":
        S = ops.A_gcn @ M
        cache["S"] = S
        return np.maximum(S, 0.0), cache
    if config.flavor == "sage":
        Mr = np.maximum(M, 0.0)
        if config.aggregation == "sum":
            S = ops.A @ Mr
        elif config.aggregation == "mean":
            S = ops.inv_deg[:, None] * (ops.A @ Mr)
        else:
            S, src = _agg_max(Mr, ops.adjacency)
            cache["src"] = src
        Z = np.concatenate([S, H], axis=1)
        P = Z @ lp.update_weight.T + lp.update_bias
        cache.update(Z=Z, P=P)
        return np.maximum(P, 0.0), cache
    # gin
    S = ops.A @ M
    eps = float(lp.gin_eps)
    Z = (1.0 + eps) * H + S
    P1 = Z @ lp.update_weight.T + lp.update_bias
    Hd = np.maximum(P1, 0.0)
    P2 = Hd @ lp.mlp2_weight.T + lp.mlp2_bias
    cache.update(Z=Z, P1=P1, Hd=Hd, P2=P2)
    return np.maximum(P2, 0.0), cache


def _layer_backward(lp: LayerParams, config: ModelConfig, ops: _GraphOps,
                    cache: dict, identity_local: int | None,
                    G_out: np.ndarray, grads: dict, prefix: str) -> np.ndarray:
    if ops.edge_dim:
        return _layer_backward_edge(lp, config, ops, cache, identity_local,
                                    G_out, grads, prefix)
    H = cache["H"]
    M = cache["M"]
    if config.flavor == "gcn":
        G_S = G_out * (cache["S"] > 0.0)
        G_M = ops.A_gcn.T @ G_S
        return _messages_backward(lp, H, identity_local, G_M, grads, prefix)
    if config.flavor == "sage":
        G_P = G_out * (cache["P"] > 0.0)
        grads[prefix + "update_weight"] += G_P.T @ cache["Z"]
        grads[prefix + "update_bias"] += G_P.sum(axis=0)
        G_Z = G_P @ lp.update_weight
        d_out = config.hidden_dim
        G_S = G_Z[:, :d_out]
        G_H_skip = G_Z[:, d_out:]
        if config.aggregation == "sum":
            G_Mr = ops.A.T @ G_S
        elif config.aggregation == "mean":
            G_Mr = ops.A.T @ (ops.inv_deg[:, None] * G_S)
        else:
            G_Mr = _agg_max_backward(G_S, cache["src"], H.shape[0])
        G_M = G_Mr * (M > 0.0)
        G_H = _messages_backward(lp, H, identity_local, G_M, grads, prefix)
        return G_H + G_H_skip
    # gin
    G_P2 = G_out * (cache["P2"] > 0.0)
    grads[prefix + "mlp2_weight"] += G_P2.T @ cache["Hd"]
    grads[prefix + "mlp2_bias"] += G_P2.sum(axis=0)
    G_Hd = G_P2 @ lp.mlp2_weight
    G_P1 = G_Hd * (cache["P1"] > 0.0)
    grads[prefix + "update_weight"] += G_P1.T @ cache["Z"]
    grads[prefix + "update_bias"] += G_P1.sum(axis=0)
    G_Z = G_P1 @ lp.update_weight
    eps = float(lp.gin_eps)
    grads[prefix + "gin_eps"] += np.sum(G_Z * H)
    G_S = G_Z
    G_M = ops.A.T @ G_S
    G_H = _messages_backward(lp, H, identity_local, G_M, grads, prefix)
    return G_H + (1.0 + eps) * G_Z


def _check_features(config: ModelConfig, g: Graph, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape != (g.num_nodes, config.input_dim):
        raise InputError(
            f"feature matrix must be {g.num_nodes} x {config.input_dim}, "
            f"got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise InputError("feature matrix contains non-finite values")
    return x


def _run_layers(model: Model, g: Graph, x: np.ndarray,
                identity_local: int | None, record: bool):
    ops = _GraphOps(g, model.config.edge_dim)
    tape = Tape(ops=ops, x=x, identity_local=identity_local) if record else None
    H = x
    for lp in model.layers:
        H, cache = _layer_forward(lp, model.config, ops, H, identity_local)
        if record:
            tape.caches.append(cache)
    if record:
        tape.out = H
    return H, tape


def zero_grads(model: Model) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in model.named_parameters()}


def forward_plain(model: Model, g: Graph, x, tape_out: list | None = None) -> np.ndarray:
    """All-node embeddings from homogeneous message passing (plain and
    id_fast variants; id_fast differs only in its augmented inputs)."""
    if model.config.variant == "id_full":
        raise InputError("id_full models embed nodes through forward_id_full")
    x = _check_features(model.config, g, x)
    H, tape = _run_layers(model, g, x, None, tape_out is not None)
    if tape_out is not None:
        tape_out.append(tape)
    return H


def backward_layers(model: Model, tape: Tape, G_H: np.ndarray,
                    grads: dict[str, np.ndarray] | None = None):
    """Backpropagate a node-embedding gradient through the recorded layers.

    Accumulates into ``grads`` (created zeroed when not given) and returns
    (grads, gradient with respect to the input features).
    """
    if grads is None:
        grads = zero_grads(model)
    G = np.asarray(G_H, dtype=np.float64)
    for i in range(len(model.layers) - 1, -1, -1):
        G = _layer_backward(
            model.layers[i], model.config, tape.ops, tape.caches[i],
            tape.identity_local, G, grads, f"layers.{i}.",
        )
    return grads, G


def forward_id_full(model: Model, ego: EgoNet, x_local,
                    tape_out: list | None = None) -> np.ndarray:
    """Center-node embedding from heterogeneous message passing on an ego net.

    Messages from the identity-masked node use msg1; all other nodes use
    msg0. With an all-false mask (conditioning node outside the ball) this
    reduces to the plain scheme on the ego subgraph.
    """
    if model.config.variant != "id_full":
        raise InputError(f"variant {model.config.variant!r} is not id_full")
    x = _check_features(model.config, ego.subgraph, x_local)
    identity = ego.identity_local_index
    H, tape = _run_layers(model, ego.subgraph, x, identity, tape_out is not None)
    if tape_out is not None:
        tape_out.append(tape)
    return H[ego.center_local_index]


def backward_id_full(model: Model, ego: EgoNet, tape: Tape, g_center: np.ndarray,
                     grads: dict[str, np.ndarray] | None = None):
    G_H = np.zeros_like(tape.out)
    G_H[ego.center_local_index] = g_center
    return backward_layers(model, tape, G_H, grads)


def default_features(g: Graph, input_dim: int) -> np.ndarray:
    """Constant all-ones features for graphs without node attributes."""
    if g.node_features is not None:
        return g.node_features
    return np.ones((g.num_nodes, input_dim))


def forward_conditional(model: Model, g: Graph, u: int, v: int) -> np.ndarray:
    """Embedding of u with the identity color placed at v: the ego net of u
    is extracted at radius num_layers and v is the identity node when it
    falls inside the ball."""
    ego = extract_ego(g, u, model.config.num_layers, identity_at=v)
    x = default_features(ego.subgraph, model.config.input_dim)
    return forward_id_full(model, ego, x)


def readout_graph(embeddings: np.ndarray) -> np.ndarray:
    """Global sum pooling over node embeddings."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] == 0:
        raise InputError("readout needs a nonempty node-embedding matrix")
    return embeddings.sum(axis=0)


def head_logits(model: Model, h: np.ndarray) -> np.ndarray:
    """Linear classifier head applied to one embedding or a matrix of them."""
    return h @ model.head_weight.T + model.head_bias


def head_backward(model: Model, h: np.ndarray, G_logits: np.ndarray,
                  grads: dict[str, np.ndarray]):
    h2 = np.atleast_2d(h)
    G2 = np.atleast_2d(G_logits)
    grads["head.weight"] += G2.T @ h2
    grads["head.bias"] += G2.sum(axis=0)
    G_h = G2 @ model.head_weight
    return G_h if np.ndim(h) > 1 else G_h[0]


def edge_pair_score(h_u: np.ndarray, h_v: np.ndarray, head: PairHead,
                    cache_out: list | None = None) -> np.ndarray:
    """Class logits for an ordered pair: concat, then the two-layer head.

    The concatenation is ordered, so swapping u and v generally changes the
    logits.
    """
    h_u = np.asarray(h_u, dtype=np.float64)
    h_v = np.asarray(h_v, dtype=np.float64)
    if h_u.shape != h_v.shape:
        raise InputError(f"pair dims differ: {h_u.shape} vs {h_v.shape}")
    z = np.concatenate([h_u, h_v])
    p1 = head.w1 @ z + head.b1
    hid = np.maximum(p1, 0.0)
    logits = head.w2 @ hid + head.b2
    if cache_out is not None:
        cache_out.append({"z": z, "p1": p1, "hid": hid})
    return logits


def edge_pair_backward(head: PairHead, cache: dict, G_logits: np.ndarray,
                       grads: dict[str, np.ndarray]):
    grads["pair.w2"] += np.outer(G_logits, cache["hid"])
    grads["pair.b2"] += G_logits
    G_hid = head.w2.T @ G_logits
    G_p1 = G_hid * (cache["p1"] > 0.0)
    grads["pair.w1"] += np.outer(G_p1, cache["z"])
    grads["pair.b1"] += G_p1
    G_z = head.w1.T @ G_p1
    d = G_z.size // 2
    return G_z[:d], G_z[d:]


# ---------------------------------------------------------------------------
# explicit walk-counting weights


def make_walk_count_model(k: int) -> Model:
    """A k-layer id_full sum-aggregation model whose center embedding is the
    closed-walk count vector (lengths 1..k) of the ego center.

    Layer 1 zeroes its input and emits the identity indicator into slot 1;
    later layers shift the count vector down one slot and inject the
    indicator. All values stay nonnegative, so the ReLUs never clip and the
    float64 arithmetic is exact integer arithmetic at desk scale. Run it on
    extract_ego(g, v, k) with all-ones (or any) features of width k.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    config = ModelConfig(
        flavor="sage", variant="id_full", num_layers=k, hidden_dim=k,
        input_dim=k, output_dim=k, aggregation="sum", seed=0,
    )
    model = init_model(config)
    shift = np.zeros((k, k))
    for j in range(1, k):
        shift[j, j - 1] = 1.0
    e1 = np.zeros(k)
    e1[0] = 1.0
    select_agg = np.concatenate([np.eye(k), np.zeros((k, k))], axis=1)
    for i, lp in enumerate(model.layers):
        lp.msg0_weight[...] = 0.0 if i == 0 else shift
        lp.msg0_bias[...] = 0.0
        lp.msg1_weight[...] = 0.0 if i == 0 else shift
        lp.msg1_bias[...] = e1
        lp.update_weight[...] = select_agg
        lp.update_bias[...] = 0.0
    return model


# ---------------------------------------------------------------------------
# budget matching


def match_hidden_dim(base: ModelConfig, variant: str,
                     input_dim: int | None = None) -> int:
    """Largest hidden width whose ``variant`` model stays within the plain
    baseline's trainable-parameter budget."""
    plain = replace(base, variant="plain")
    budget = init_model(plain).num_parameters()
    h = base.hidden_dim
    while h > 1:
        cand = replace(
            base, variant=variant, hidden_dim=h,
            input_dim=base.input_dim if input_dim is None else input_dim,
        )
        if init_model(cand).num_parameters() <= budget:
            return h
        h -= 1
    return 1


# ---------------------------------------------------------------------------
# checkpoints


def save_model(model: Model, path: str) -> None:
    names = model.named_parameters()
    header = {
        "format": "idgnn-checkpoint",
        "version": 1,
        "config": asdict(model.config),
        "params": [{"name": n, "shape": list(a.shape)} for n, a in names],
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode()
    blob = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in names
    )
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)


def load_model(path: str) -> Model:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise InputError(f"{path} is not a model checkpoint")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        blob = fh.read()
    config = ModelConfig(**header["config"])
    model = init_model(config)
    params = dict(model.named_parameters())
    offset = 0
    for entry in header["params"]:
        name, shape = entry["name"], tuple(entry["shape"])
        arr = params[name]
        if arr.shape != shape:
            raise InputError(f"checkpoint shape mismatch for {name}")
        nbytes = arr.size * 8
        flat = np.frombuffer(blob[offset:offset + nbytes], dtype="<f8")
        arr[...] = flat.reshape(shape)
        offset += nbytes
    if offset != len(blob):
        raise InputError("checkpoint blob size mismatch")
    return model
