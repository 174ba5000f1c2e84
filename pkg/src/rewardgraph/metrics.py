"""Binary prediction quality metrics for reward scores.

ROC-AUC uses the rank-statistic (Mann-Whitney) form with tied scores
counting one half, computed in exact half-integer arithmetic so it matches
a brute-force pairwise comparison bit for bit on small sets. Precision,
recall, and AUC are reported as None when their denominator is empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def predict_reward(raw_scores: np.ndarray) -> np.ndarray:
    """Thresholded prediction sigma(r) > 0.5, implemented exactly as r > 0.

    The sigmoid is strictly increasing with sigma(0) = 0.5, so the two rules
    coincide for every finite score; comparing the raw score avoids the
    float round-trip through the sigmoid at the boundary.
    """
    return (np.asarray(raw_scores) > 0.0).astype(np.int64)


def roc_auc(scores, labels) -> float | None:
    """Rank-statistic ROC-AUC with ties counting 1/2; None if one class."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    # doubled average ranks stay integral, keeping the result exact
    double_rank_sum = 0
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        group_pos = int(sorted_labels[i:j + 1].sum())
        double_rank_sum += group_pos * ((i + 1) + (j + 1))
        i = j + 1
    double_u = double_rank_sum - n_pos * (n_pos + 1)
    return double_u / (2 * n_pos * n_neg)


def score_separation(sigma_scores, labels) -> float | None:
    """Mean sigmoid score over correct minus mean over incorrect rollouts."""
    sigma_scores = np.asarray(sigma_scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pos = sigma_scores[labels == 1]
    neg = sigma_scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        return None
    return float(pos.mean() - neg.mean())


@dataclass
class MetricBundle:
    accuracy: float
    precision: float | None
    recall: float | None
    roc_auc: float | None
    separation: float | None
    n_pos: int
    n_neg: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "roc_auc": self.roc_auc,
            "separation": self.separation,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
        }


@dataclass
class EvalReport:
    overall: MetricBundle
    per_dataset: dict[str, MetricBundle] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.to_dict(),
            "per_dataset": {tag: m.to_dict() for tag, m in sorted(self.per_dataset.items())},
        }


def metric_bundle(raw_scores, sigma_scores, labels) -> MetricBundle:
    raw_scores = np.asarray(raw_scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    preds = predict_reward(raw_scores)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    tp = int(((preds == 1) & (labels == 1)).sum())
    fp = int(((preds == 1) & (labels == 0)).sum())
    fn = int(((preds == 0) & (labels == 1)).sum())
    return MetricBundle(
        accuracy=float((preds == labels).mean()) if labels.size else 0.0,
        precision=tp / (tp + fp) if tp + fp > 0 else None,
        recall=tp / (tp + fn) if tp + fn > 0 else None,
        roc_auc=roc_auc(raw_scores, labels),
        separation=score_separation(sigma_scores, labels),
        n_pos=n_pos,
        n_neg=n_neg,
    )
