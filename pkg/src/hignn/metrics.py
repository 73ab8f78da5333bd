"""Regression and ranking metrics with missing-label masks."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


class NoValidTask(ValueError):
    pass


def rmse(pred, target) -> float:
    pred, target = np.asarray(pred, float), np.asarray(target, float)
    return float(np.sqrt(np.mean((pred - target) ** 2)))


def roc_auc(scores, labels) -> float:
    """Mann-Whitney U over n_pos * n_neg, ties counted as one half."""
    scores, labels = np.asarray(scores, float), np.asarray(labels).astype(bool)
    n_pos, n_neg = labels.sum(), (~labels).sum()
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC-AUC needs both classes")
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Area under the precision-recall curve as a step sum over score thresholds."""
    scores, labels = np.asarray(scores, float), np.asarray(labels).astype(bool)
    n_pos = labels.sum()
    if n_pos == 0:
        raise ValueError("average precision needs a positive")
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    # last index of each distinct threshold
    ends = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    precision = tp / (tp + fp)
    recall = tp / n_pos
    prev = np.r_[0.0, recall[:-1]]
    return float(np.sum((recall - prev) * precision))


def evaluate_predictions(pred, labels, mask, task_type: str, metric: str | None = None) -> dict:
    """Per-task metric and the unweighted mean over tasks that can be scored.

    Regression uses RMSE; binary tasks use ROC-AUC unless metric="prc".
    Tasks without labels (or with one class) are skipped and listed.
    """
    pred, labels, mask = np.asarray(pred), np.asarray(labels), np.asarray(mask, bool)
    name = "rmse" if task_type == "REGRESSION" else ("prc_auc" if metric == "prc" else "roc_auc")
    per_task, skipped = [], []
    for t in range(labels.shape[1]):
        m = mask[:, t]
        if not m.any():
            per_task.append(None)
            skipped.append(t)
            continue
        p, y = pred[m, t], labels[m, t]
        if name == "rmse":
            per_task.append(rmse(p, y))
        elif y.min() == y.max():
            per_task.append(None)
            skipped.append(t)
        elif name == "roc_auc":
            per_task.append(roc_auc(p, y))
        else:
            per_task.append(average_precision(p, y))
    valid = [v for v in per_task if v is not None]
    if not valid:
        raise NoValidTask("no task has scorable labels")
    return {"metric": name, "per_task": per_task, "mean": float(np.mean(valid)),
            "skipped": skipped}


def higher_is_better(metric: str) -> bool:
    return metric != "rmse"
