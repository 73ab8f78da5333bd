"""Interactive message-passing encoder with gated updates and feature-wise attention.

Graphs are encoded in batches: several molecular graphs are stacked into
one disjoint union and every per-graph quantity (feature-wise attention,
readout) is computed with segment operations keyed by the atom's graph id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .featurize import N_BOND, atom_dim

MESSAGE_SCHEMES = ("ATOM", "BOND", "ATT", "MAX", "MEAN", "SUM", "MUL", "MIX")


@dataclass(frozen=True)
class EncoderConfig:
    d: int = 64
    K: int = 3
    a: int = 4
    r: int = 4
    dropout: float = 0.1
    message_scheme: str = "ATOM"
    fa_enabled: bool = True
    extras: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be at least 1, got {self.K}")
        if self.d < 1 or self.a < 1 or self.d % self.a:
            raise ValueError(f"a={self.a} must divide d={self.d}")
        if self.r < 1 or self.d % self.r:
            raise ValueError(f"r={self.r} must divide d={self.d}")
        if self.message_scheme not in MESSAGE_SCHEMES:
            raise ValueError(f"unknown message scheme {self.message_scheme!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def n_atom_features(self) -> int:
        return atom_dim(self.extras)


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_encoder_params(cfg: EncoderConfig, rng: np.random.Generator,
                        prefix: str = "encoder.") -> dict[str, T.Tensor]:
    """Parameter block; names are stable checkpoint keys.

    W_atom (d_n, d) and W_bond (10, d) project raw features; layer k >= 1
    has its own W (d, d); every layer has W1 (a, d, d), W2 (3d or 2d, a) and
    b (a,). The gate W3 (3d, d) and the attention pair W4 (d, d/r),
    W5 (d/r, d) are shared by all layers and exist only when FA is on.
    """
    d, a = cfg.d, cfg.a
    w2_in = 2 * d if cfg.message_scheme == "ATT" else 3 * d
    shapes: dict[str, tuple] = {
        "W_atom": ((cfg.n_atom_features, d), cfg.n_atom_features, d),
        "W_bond": ((N_BOND, d), N_BOND, d),
    }
    for k in range(cfg.K):
        if k > 0:
            shapes[f"layer{k}.W"] = ((d, d), d, d)
        shapes[f"layer{k}.W1"] = ((a, d, d), d, d)
        shapes[f"layer{k}.W2"] = ((w2_in, a), w2_in, a)
        shapes[f"layer{k}.b"] = ((a,), 0, 0)
    shapes["W3"] = ((3 * d, d), 3 * d, d)
    if cfg.fa_enabled:
        shapes["W4"] = ((d, d // cfg.r), d, d // cfg.r)
        shapes["W5"] = ((d // cfg.r, d), d // cfg.r, d)
    params = {}
    for name, (shape, fan_in, fan_out) in shapes.items():
        data = np.zeros(shape) if fan_in == 0 else glorot(rng, shape, fan_in, fan_out)
        params[prefix + name] = T.Tensor(data, requires_grad=True, name=prefix + name)
    return params


@dataclass
class GraphBatch:
    """Disjoint union of featurized graphs."""
    x: np.ndarray          # (N, d_n) atom features
    src: np.ndarray        # (E,) directed edge sources j
    dst: np.ndarray        # (E,) directed edge targets i
    e: np.ndarray          # (E, 10) bond features of e_ji
    graph: np.ndarray      # (N,) graph id of each atom
    n_graphs: int

    @property
    def n_atoms(self) -> int:
        return len(self.x)


def batch_graphs(graphs) -> GraphBatch:
    """Stack (x, edges, e) triples from featurize_graph into one batch."""
    xs, srcs, dsts, es, gids = [], [], [], [], []
    offset = 0
    for g, (x, edges, e) in enumerate(graphs):
        xs.append(x)
        srcs.append(edges[:, 0] + offset)
        dsts.append(edges[:, 1] + offset)
        es.append(e)
        gids.append(np.full(len(x), g, dtype=np.int64))
        offset += len(x)
    return GraphBatch(
        x=np.concatenate(xs), src=np.concatenate(srcs).astype(np.int64),
        dst=np.concatenate(dsts).astype(np.int64), e=np.concatenate(es).reshape(-1, N_BOND),
        graph=np.concatenate(gids), n_graphs=len(graphs),
    )


def interaction_scores(h_i, h_j, e_ji, W1, W2, b, scheme: str = "ATOM"):
    """alpha = tanh(h_i W1 h_j + W2 [h_i, e_ji, h_j] + b), one row per edge.

    The ATT scheme leaves the bond term out: W2 [h_i, h_j].
    """
    parts = [h_i, h_j] if scheme == "ATT" else [h_i, e_ji, h_j]
    linear = T.matmul(T.concat(parts, axis=1), W2)
    return T.tanh(T.add(T.add(T.bilinear_slices(h_i, W1, h_j), linear), b))


def message_payload(h_j, e_ji, scheme: str):
    if scheme in ("ATOM", "ATT"):
        return h_j
    if scheme == "BOND":
        return e_ji
    if scheme == "MUL":
        return T.mul(h_j, e_ji)
    if scheme == "MIX":
        return T.add(T.add(h_j, e_ji), T.mul(h_j, e_ji))
    if scheme == "MAX":
        return T.maximum(h_j, e_ji)
    if scheme == "MEAN":
        return T.mul(T.add(h_j, e_ji), 0.5)
    if scheme == "SUM":
        return T.add(h_j, e_ji)
    raise ValueError(f"unknown message scheme {scheme!r}")


def message_pass(alpha, payload, dst, n_atoms: int):
    """m_i = relu(sum over incoming edges of the slice-scaled payload)."""
    return T.relu(T.segment_sum(T.scale_slices(alpha, payload), dst, n_atoms))


def gated_update(h, m, W3, beta=None):
    """h' = beta * h + (1 - beta) * m with beta = sigmoid([h, m, h - m] W3).

    Passing beta overrides the learned gate.
    """
    diff = T.sub(h, m)
    if beta is None:
        beta = T.sigmoid(T.matmul(T.concat([h, m, diff], axis=1), W3))
    return T.add(m, T.mul(beta, diff))


def fa_scale(H, graph, n_graphs: int, W4, W5):
    """Per-graph channel weights c = sigmoid(W5 relu(W4 f_sum) + W5 relu(W4 f_max))."""
    f_sum = T.segment_sum(H, graph, n_graphs)
    f_max = T.segment_max(H, graph, n_graphs)
    z = T.add(T.matmul(T.relu(T.matmul(f_sum, W4)), W5),
              T.matmul(T.relu(T.matmul(f_max, W4)), W5))
    return T.sigmoid(z)


def fa_recalibrate(H, graph, n_graphs: int, W4, W5):
    c = fa_scale(H, graph, n_graphs, W4, W5)
    return T.mul(H, T.gather(c, graph))


def encode(batch: GraphBatch, cfg: EncoderConfig, params: dict, train: bool = False,
           key=None, prefix: str = "encoder."):
    """Graph embeddings h_G (n_graphs, d) and the final atom states.

    key is (seed, step) for dropout; each layer adds its own index.
    """
    p = {name[len(prefix):]: t for name, t in params.items() if name.startswith(prefix)}
    n = batch.n_atoms
    e = T.matmul(T.Tensor(batch.e), p["W_bond"])
    h = T.relu(T.matmul(T.Tensor(batch.x), p["W_atom"]))
    for k in range(cfg.K):
        if k > 0:
            h = T.matmul(h, p[f"layer{k}.W"])
        h_i = T.gather(h, batch.dst)
        h_j = T.gather(h, batch.src)
        alpha = interaction_scores(h_i, h_j, e, p[f"layer{k}.W1"], p[f"layer{k}.W2"],
                                   p[f"layer{k}.b"], cfg.message_scheme)
        m = message_pass(alpha, message_payload(h_j, e, cfg.message_scheme), batch.dst, n)
        h = gated_update(h, m, p["W3"])
        if cfg.fa_enabled:
            h = fa_recalibrate(h, batch.graph, batch.n_graphs, p["W4"], p["W5"])
        if train and cfg.dropout > 0:
            h = T.dropout(h, cfg.dropout, True, key=(*key, k))
    return T.segment_sum(h, batch.graph, batch.n_graphs), h
