"""Supervised warmup training of the reward model, evaluation, and traces.

Training is full-graph: one Adam step per epoch over every labeled rollout,
with validation loss computed by attaching each validation query to the
warmup graph as an overlay. The best-validation snapshot is kept and
training stops early once validation loss fails to improve for ``patience``
consecutive epochs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import HeteroGraph, attach_query
from .metrics import EvalReport, MetricBundle, metric_bundle, predict_reward
from .model import (GnnModel, backward_core, forward_with_cache, mlp_backward,
                    mlp_forward, score_backward, score_forward, score_graph, view_of)
from .store import QueryRecord, RolloutStore
from .tensor import adam_step, sigmoid


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 150
    patience: int = 20
    seed: int = 0

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")


def bce_loss(raw_scores, labels) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy against sigmoid(raw), stable at any magnitude.

    Uses the softplus form y*softplus(-r) + (1-y)*softplus(r); the gradient
    w.r.t. each raw score is (sigmoid(r) - y) / n.
    """
    raw = np.asarray(raw_scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if raw.shape != y.shape or raw.size == 0:
        raise ValueError("raw scores and labels must be matching non-empty arrays")
    softplus = np.maximum(raw, 0.0) + np.log1p(np.exp(-np.abs(raw)))
    losses = softplus - y * raw  # y*sp(-r) + (1-y)*sp(r) simplified
    loss = float(losses.mean())
    grads = (sigmoid(raw) - y) / raw.size
    return loss, grads


def training_loss_and_grads(model: GnnModel, graph: HeteroGraph, labels: np.ndarray,
                            rng: np.random.Generator) -> tuple[float, np.ndarray]:
    """One full forward/backward pass; gradients accumulate into the store."""
    view = view_of(graph)
    if model.variant == "mlp":
        raw, cache = mlp_forward(model, view)
        loss, d_raw = bce_loss(raw, labels)
        mlp_backward(model, cache, d_raw)
        return loss, raw
    states, caches = forward_with_cache(model, view, training=True, rng=rng)
    raw, score_cache = score_forward(model, states, view.pairs)
    loss, d_raw = bce_loss(raw, labels)
    d_top = score_backward(model, states, view.pairs, score_cache, d_raw)
    backward_core(model, view, states, caches, d_top)
    return loss, raw


def _overlay_scores(model: GnnModel, graph: HeteroGraph, query: QueryRecord
                    ) -> np.ndarray:
    overlay = attach_query(graph, query)
    raw, _ = score_graph(model, overlay, training=False)
    return raw


def _pooled_validation(model: GnnModel, graph: HeteroGraph,
                       queries: list[QueryRecord]) -> float:
    scores, labels = [], []
    for q in queries:
        raw = _overlay_scores(model, graph, q)
        scores.append(raw)
        labels.extend(r.true_reward() for r in q.rollouts)
    loss, _ = bce_loss(np.concatenate(scores), np.asarray(labels, dtype=np.float64))
    return loss


def train(model: GnnModel, graph: HeteroGraph, store: RolloutStore,
          config: TrainConfig) -> tuple[GnnModel, dict]:
    """Train on the warmup graph's labeled rollouts; returns (model, history)."""
    config.validate()
    if graph.n_rollouts == 0:
        raise ValueError("warmup graph has no labeled rollouts to train on")
    labels = np.asarray(
        [store.true_reward(qid, rid) for qid, rid in graph.rollout_refs],
        dtype=np.float64,
    )
    val_queries = store.split_queries("val")
    if not val_queries:
        raise ValueError("training requires a non-empty validation split")

    history: list[dict] = []
    best_val = np.inf
    best_epoch = 0
    best_params = model.store.snapshot()
    stale = 0
    for epoch in range(1, config.epochs + 1):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((config.seed, epoch))))
        model.store.zero_grads()
        train_loss, _ = training_loss_and_grads(model, graph, labels, rng)
        adam_step(model.store, lr=config.lr)
        val_loss = _pooled_validation(model, graph, val_queries)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = model.store.snapshot()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    model.store.restore(best_params)
    return model, {
        "epochs": history,
        "best_epoch": best_epoch,
        "best_val_loss": best_val,
        "stopped_early": len(history) < config.epochs,
    }


def evaluate(model: GnnModel, graph: HeteroGraph, queries: list[QueryRecord],
             threshold: float = 0.5) -> EvalReport:
    """Attach each held-out query, score its rollouts, report quality metrics."""
    if threshold != 0.5:
        raise ValueError("only the 0.5 decision threshold is supported")
    rows: list[tuple[str, float, int]] = []
    for q in queries:
        raw = _overlay_scores(model, graph, q)
        for r, score in zip(q.rollouts, raw):
            reward = r.true_reward()
            if reward is None:
                raise ValueError(f"query {q.query_id!r} has unscored rollouts")
            rows.append((q.dataset_tag, float(score), int(reward)))
    if not rows:
        raise ValueError("no rollouts to evaluate")
    tags = [t for t, _, _ in rows]
    raw = np.asarray([s for _, s, _ in rows])
    labels = np.asarray([y for _, _, y in rows])
    sig = sigmoid(raw)
    per_dataset: dict[str, MetricBundle] = {}
    for tag in sorted(set(tags)):
        mask = np.asarray([t == tag for t in tags])
        per_dataset[tag] = metric_bundle(raw[mask], sig[mask], labels[mask])
    return EvalReport(overall=metric_bundle(raw, sig, labels), per_dataset=per_dataset)


# ---------------------------------------------------------------------------
# propagation trace


def assemble_trace_rows(raw_scores, gt_rewards) -> tuple[list[dict], float | None]:
    """Per-rollout trace rows plus the score separation for the group."""
    raw = np.asarray(raw_scores, dtype=np.float64)
    gts = np.asarray(gt_rewards, dtype=np.int64)
    sig = sigmoid(raw)
    preds = predict_reward(raw)
    rows = [
        {
            "index": i,
            "score": float(sig[i]),
            "gt": int(gts[i]),
            "pred": int(preds[i]),
            "match": bool(preds[i] == gts[i]),
        }
        for i in range(len(raw))
    ]
    pos = sig[gts == 1]
    neg = sig[gts == 0]
    separation = float(pos.mean() - neg.mean()) if pos.size and neg.size else None
    return rows, separation


def trace_report(model: GnnModel, graph: HeteroGraph, store: RolloutStore,
                 query: QueryRecord) -> dict:
    """Full inference path for one query: neighbors, tallies, per-rollout rows.

    Schema:
      query_id, dataset: str
      neighbors: [{rank, query_id, dataset, cosine_sim, correct, total}]
      rollouts:  [{index, rollout_id, score, gt, pred, match}]
      accuracy: float, separation: float|null
    """
    overlay = attach_query(graph, query)
    raw, refs = score_graph(model, overlay, training=False)
    neighbors = []
    for rank, (idx, sim) in enumerate(zip(overlay.neighbor_idx, overlay.neighbor_sim),
                                      start=1):
        neighbor_id = graph.q_ids[int(idx)]
        rollouts = store.get(neighbor_id).rollouts
        correct = sum(int(r.true_reward() or 0) for r in rollouts)
        neighbors.append({
            "rank": rank,
            "query_id": neighbor_id,
            "dataset": graph.q_tags[int(idx)],
            "cosine_sim": float(sim),
            "correct": correct,
            "total": len(rollouts),
        })
    gts = [r.true_reward() for r in query.rollouts]
    if any(g is None for g in gts):
        raise ValueError(f"query {query.query_id!r} lacks rewards for tracing")
    rows, separation = assemble_trace_rows(raw, gts)
    for row, (_, rollout_id) in zip(rows, refs):
        row["rollout_id"] = rollout_id
    matches = sum(r["match"] for r in rows)
    return {
        "query_id": query.query_id,
        "dataset": query.dataset_tag,
        "neighbors": neighbors,
        "rollouts": rows,
        "accuracy": matches / len(rows) if rows else 0.0,
        "separation": separation,
    }
