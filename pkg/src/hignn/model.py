"""Full model: shared encoder over molecule and fragments, attention combiner, predictor."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import tensor as T
from .encoder import EncoderConfig, GraphBatch, batch_graphs, encode, glorot, init_encoder_params

MODES = ("FULL", "NO_HI", "NO_FA", "NO_ALL")
TASK_TYPES = ("REGRESSION", "BINARY_MULTITASK")
N_HEADS = 4


class EmptyFragmentSet(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    d: int = 64
    K: int = 3
    a: int = 4
    r: int = 4
    dropout: float = 0.1
    message_scheme: str = "ATOM"
    extras: bool = True
    mode: str = "FULL"
    task_type: str = "REGRESSION"
    n_tasks: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.task_type not in TASK_TYPES:
            raise ValueError(f"unknown task type {self.task_type!r}")
        if self.n_tasks < 1:
            raise ValueError("n_tasks must be positive")
        if self.uses_fragments and self.d % N_HEADS:
            raise ValueError(f"d={self.d} must be divisible by {N_HEADS} heads")
        self.encoder  # validates the encoder fields

    @property
    def uses_fragments(self) -> bool:
        return self.mode in ("FULL", "NO_FA")

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(d=self.d, K=self.K, a=self.a, r=self.r, dropout=self.dropout,
                             message_scheme=self.message_scheme,
                             fa_enabled=self.mode in ("FULL", "NO_HI"), extras=self.extras)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ModelBatch:
    """Molecules 0..B-1 followed by their fragments in one graph batch."""
    graphs: GraphBatch
    n_mols: int
    frag_owner: np.ndarray  # (T_total,) molecule index of each fragment graph


def make_batch(samples, with_fragments: bool = True) -> ModelBatch:
    """samples: objects with .graph and .fragment_graphs (featurize_graph triples)."""
    graphs = [s.graph for s in samples]
    owner = []
    if with_fragments:
        for b, s in enumerate(samples):
            if not s.fragment_graphs:
                raise EmptyFragmentSet(f"sample {b} has no fragments")
            graphs.extend(s.fragment_graphs)
            owner.extend([b] * len(s.fragment_graphs))
    return ModelBatch(batch_graphs(graphs), len(samples), np.asarray(owner, dtype=np.int64))


@dataclass
class MoleculeEncoding:
    h_G: np.ndarray
    s_list: np.ndarray
    s_G: np.ndarray
    alpha: list = field(default_factory=list)   # per head, (T_total,) weights
    frag_owner: np.ndarray | None = None


def combine(h_G, S, owner, n_mols: int, heads):
    """Four-head additive attention of each molecule over its fragments.

    heads is a list of (W6 (d, d/4), attn (d/2, 1)) pairs. Returns s_G
    (n_mols, d) and the per-head fragment weights.
    """
    if len(owner) == 0 or len(np.unique(owner)) != n_mols:
        raise EmptyFragmentSet("every molecule needs at least one fragment")
    outs, alphas = [], []
    for W6, attn in heads:
        q = T.gather(T.matmul(h_G, W6), owner)
        v = T.matmul(S, W6)
        score = T.leaky_relu(T.reshape(T.matmul(T.concat([q, v], axis=1), attn), (-1,)))
        alpha = T.segment_softmax(score, owner, n_mols)
        outs.append(T.segment_sum(T.mul(T.reshape(alpha, (-1, 1)), v), owner, n_mols))
        alphas.append(alpha)
    return T.concat(outs, axis=1), alphas


class HignnModel:
    def __init__(self, config: ModelConfig, params: dict | None = None):
        self.config = config
        self.params = params if params is not None else self.init_params(config)

    @staticmethod
    def init_params(cfg: ModelConfig) -> dict:
        rng = np.random.default_rng(cfg.seed)
        params = init_encoder_params(cfg.encoder, rng)
        d = cfg.d
        extra = {}
        if cfg.uses_fragments:
            dh = d // N_HEADS
            for h in range(N_HEADS):
                extra[f"combiner.head{h}.W6"] = glorot(rng, (d, dh), d, dh)
                extra[f"combiner.head{h}.attn"] = glorot(rng, (2 * dh, 1), 2 * dh, 1)
        width = 2 * d if cfg.uses_fragments else d
        extra["predictor.W1"] = glorot(rng, (width, d), width, d)
        extra["predictor.b1"] = np.zeros(d)
        extra["predictor.W2"] = glorot(rng, (d, cfg.n_tasks), d, cfg.n_tasks)
        extra["predictor.b2"] = np.zeros(cfg.n_tasks)
        for name, data in extra.items():
            params[name] = T.Tensor(data, requires_grad=True, name=name)
        return params

    def parameters(self) -> list[T.Tensor]:
        return [self.params[k] for k in sorted(self.params)]

    def heads(self):
        return [(self.params[f"combiner.head{h}.W6"], self.params[f"combiner.head{h}.attn"])
                for h in range(N_HEADS)]

    def predictor(self, z, train=False, key=None):
        p = self.params
        hidden = T.relu(T.add(T.matmul(z, p["predictor.W1"]), p["predictor.b1"]))
        if train and self.config.dropout > 0:
            hidden = T.dropout(hidden, self.config.dropout, True, key=(*key, 1000))
        return T.add(T.matmul(hidden, p["predictor.W2"]), p["predictor.b2"])

    def forward(self, batch: ModelBatch, train: bool = False, key=None):
        """Predictions (n_mols, n_tasks) and the intermediate encodings."""
        cfg = self.config
        h_all, _ = encode(batch.graphs, cfg.encoder, self.params, train=train, key=key)
        B = batch.n_mols
        if cfg.uses_fragments:
            idx = np.arange(B)
            h_G = T.gather(h_all, idx)
            S = T.gather(h_all, np.arange(B, batch.graphs.n_graphs))
            s_G, alphas = combine(h_G, S, batch.frag_owner, B, self.heads())
            z = T.concat([h_G, s_G], axis=1)
            enc = MoleculeEncoding(h_G.data, S.data, s_G.data,
                                   [a.data for a in alphas], batch.frag_owner)
        else:
            h_G = T.gather(h_all, np.arange(B)) if batch.graphs.n_graphs != B else h_all
            z = h_G
            enc = MoleculeEncoding(h_G.data, np.zeros((0, cfg.d)), np.zeros((B, 0)))
        return self.predictor(z, train=train, key=key), enc

    def predict(self, batch: ModelBatch) -> np.ndarray:
        """Eval-mode outputs; probabilities for binary tasks."""
        out, _ = self.forward(batch, train=False)
        y = out.data
        if self.config.task_type == "BINARY_MULTITASK":
            y = 1.0 / (1.0 + np.exp(-y))
        return y

    def with_params(self, params: dict) -> "HignnModel":
        return HignnModel(replace(self.config), params)


FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def checkpoint_to_json(model: HignnModel, extra: dict | None = None) -> str:
    """Versioned JSON; floats are written with repr so they round-trip exactly."""
    config = {"model": model.config.to_dict()}
    config.update(extra or {})
    params = {name: {"shape": list(t.data.shape), "data": t.data.ravel().tolist()}
              for name, t in sorted(model.params.items())}
    return json.dumps({"format_version": FORMAT_VERSION, "config": config, "params": params},
                      sort_keys=True) + "\n"


def checkpoint_from_json(text: str) -> tuple[HignnModel, dict]:
    try:
        raw = json.loads(text)
    except ValueError as exc:
        raise CheckpointError(f"checkpoint is not JSON: {exc}") from None
    if raw.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format {raw.get('format_version')!r}")
    config = raw["config"]
    cfg = ModelConfig.from_dict(config["model"])
    expected = HignnModel.init_params(cfg)
    stored = raw["params"]
    if set(stored) != set(expected):
        raise CheckpointError(f"parameter names differ: {sorted(set(stored) ^ set(expected))}")
    params = {}
    for name, ref in expected.items():
        shape = tuple(stored[name]["shape"])
        if shape != ref.data.shape:
            raise CheckpointError(f"{name}: shape {shape} != {ref.data.shape}")
        data = np.array(stored[name]["data"], dtype=np.float64).reshape(shape)
        params[name] = T.Tensor(data, requires_grad=True, name=name)
    return HignnModel(cfg, params), config


def save_checkpoint(path: str, model: HignnModel, extra: dict | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(checkpoint_to_json(model, extra))


def load_checkpoint(path: str) -> tuple[HignnModel, dict]:
    with open(path, encoding="utf-8") as fh:
        return checkpoint_from_json(fh.read())
