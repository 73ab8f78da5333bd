"""Masked losses, AdamW, the epoch loop and evaluation."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .config import TrainConfig
from .data import Dataset, Sample, Split
from .metrics import evaluate_predictions, higher_is_better
from .model import HignnModel, make_batch

logger = logging.getLogger(__name__)

EVAL_BATCH = 256


class AllMasked(ValueError):
    pass


class NumericFailure(RuntimeError):
    """Training loss or gradients became non-finite."""


def loss(pred, labels, mask, task_type: str):
    """Mean over unmasked entries: MSE for regression, sigmoid cross-entropy otherwise."""
    mask = np.asarray(mask, bool)
    if not mask.any():
        raise AllMasked("every label in the batch is missing")
    labels = np.where(mask, labels, 0.0)
    if task_type == "REGRESSION":
        return T.mse(pred, labels, mask)
    return T.bce_with_logits(pred, labels, mask)


class AdamW:
    """Adam with decoupled weight decay: p -= lr * (wd * p + m_hat / (sqrt(v_hat) + eps))."""

    def __init__(self, params, lr=1e-3, weight_decay=0.0, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.weight_decay = lr, weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / c1) / (np.sqrt(v / c2) + self.eps)
            p.data -= self.lr * (self.weight_decay * p.data + update)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


@dataclass
class Scaler:
    """Per-task z-scoring fitted on training labels (identity for binary tasks)."""
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, labels, mask, task_type: str) -> "Scaler":
        n_tasks = labels.shape[1]
        if task_type != "REGRESSION":
            return cls(np.zeros(n_tasks), np.ones(n_tasks))
        mean, std = np.zeros(n_tasks), np.ones(n_tasks)
        for t in range(n_tasks):
            vals = labels[mask[:, t], t]
            if vals.size:
                mean[t] = vals.mean()
                s = vals.std()
                std[t] = s if s > 0 else 1.0
        return cls(mean, std)

    def transform(self, y):
        return (y - self.mean) / self.std

    def inverse(self, y):
        return y * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Scaler":
        return cls(np.array(data["mean"], float), np.array(data["std"], float))


def predict_samples(model: HignnModel, samples: list[Sample], scaler: Scaler | None = None,
                    batch_size: int = EVAL_BATCH) -> np.ndarray:
    """Eval-mode predictions in label units (probabilities for binary tasks)."""
    outs = []
    for start in range(0, len(samples), batch_size):
        batch = make_batch(samples[start:start + batch_size], model.config.uses_fragments)
        outs.append(model.predict(batch))
    y = np.concatenate(outs) if outs else np.zeros((0, model.config.n_tasks))
    if scaler is not None and model.config.task_type == "REGRESSION":
        y = scaler.inverse(y)
    return y


def evaluate(model: HignnModel, samples: list[Sample], labels, mask, scaler: Scaler | None = None,
             metric: str = "auto") -> dict:
    pred = predict_samples(model, samples, scaler)
    return evaluate_predictions(pred, labels, mask, model.config.task_type,
                                "prc" if metric == "prc" else None)


@dataclass
class TrainResult:
    model: HignnModel                   # parameters of the best validation epoch
    scaler: Scaler
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    metric: str = ""

    def checkpoint_extra(self, train_cfg: TrainConfig, tasks: list[str]) -> dict:
        return {"train": asdict(train_cfg), "tasks": list(tasks), "scaler": self.scaler.to_dict(),
                "best_epoch": self.best_epoch}


def history_csv(history: list[dict]) -> str:
    lines = ["epoch,train_loss,val_metric,test_metric"]
    for row in history:
        lines.append(f"{row['epoch']},{row['train_loss']!r},{row['val_metric']!r},"
                     f"{row['test_metric']!r}")
    return "\n".join(lines) + "\n"


def _snapshot(model: HignnModel) -> dict:
    return {k: T.Tensor(t.data.copy(), requires_grad=True, name=k) for k, t in model.params.items()}


def train_model(model: HignnModel, dataset: Dataset, samples: list[Sample], split: Split,
                cfg: TrainConfig, on_epoch=None) -> TrainResult:
    """Minibatch AdamW; keeps the parameters with the best validation metric.

    samples[i] is the featurized row i of dataset. Shuffling uses
    (seed, epoch) and dropout uses (seed, step), so a run is a pure
    function of its inputs.
    """
    task_type = model.config.task_type
    train_idx = np.asarray(split.train, dtype=np.int64)
    if len(train_idx) == 0:
        raise ValueError("empty training partition")
    scaler = Scaler.fit(dataset.labels[train_idx], dataset.mask[train_idx], task_type)
    targets = np.where(dataset.mask, scaler.transform(np.nan_to_num(dataset.labels)), 0.0)

    def part(name):
        idx = split.partition(name)
        return [samples[i] for i in idx], dataset.labels[idx], dataset.mask[idx]

    val, test = part("val"), part("test")
    opt = AdamW(model.parameters(), cfg.lr, cfg.weight_decay)
    better = None
    best = None
    result = TrainResult(model, scaler)
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(train_idx)
        losses, weights = [], []
        for start in range(0, len(order), cfg.batch_size):
            rows = order[start:start + cfg.batch_size]
            if not dataset.mask[rows].any():
                continue
            batch = make_batch([samples[i] for i in rows], model.config.uses_fragments)
            opt.zero_grad()
            with T.Tape() as tape:
                out, _ = model.forward(batch, train=True, key=(cfg.seed, step))
                value = loss(out, targets[rows], dataset.mask[rows], task_type)
            if not np.isfinite(value.data):
                raise NumericFailure(f"non-finite loss {float(value.data)} at epoch {epoch}, step {step}")
            tape.backward(value)
            for p in opt.params:
                if p.grad is not None and not np.all(np.isfinite(p.grad)):
                    raise NumericFailure(f"non-finite gradient in {p.name} at epoch {epoch}, step {step}")
            opt.step()
            step += 1
            losses.append(float(value.data))
            weights.append(len(rows))
        train_loss = float(np.average(losses, weights=weights)) if losses else float("nan")
        val_metric = _score(model, val, scaler, cfg.metric)
        test_metric = _score(model, test, scaler, cfg.metric)
        row = {"epoch": epoch, "train_loss": train_loss, "val_metric": val_metric,
               "test_metric": test_metric}
        result.history.append(row)
        if on_epoch is not None:
            on_epoch(row)
        metric = _metric_name(task_type, cfg.metric)
        result.metric = metric
        ref = val_metric if not np.isnan(val_metric) else -train_loss
        if better is None or _improves(ref, better, metric if not np.isnan(val_metric) else "auc"):
            better = ref
            best = _snapshot(model)
            result.best_epoch = epoch
    if best is not None:
        result.model = model.with_params(best)
    else:
        result.model = model.with_params(_snapshot(model))
    return result


def _metric_name(task_type: str, metric: str) -> str:
    if task_type == "REGRESSION":
        return "rmse"
    return "prc_auc" if metric == "prc" else "roc_auc"


def _improves(value: float, best: float, metric: str) -> bool:
    return value > best if higher_is_better(metric) else value < best


def _score(model, part, scaler, metric) -> float:
    samples, labels, mask = part
    if not samples:
        return float("nan")
    try:
        return evaluate(model, samples, labels, mask, scaler, metric)["mean"]
    except ValueError:
        return float("nan")
