"""Mixed reward acquisition for the online phase.

Labeled rollouts pass their ground-truth rewards through untouched; for
unlabeled rollouts the query is attached to the warmup graph, its rollouts
are scored by the frozen reward model, and the binary reward is the strict
threshold sigma(score) > 0.5 (realized exactly as score > 0, so a raw score
of 0.0 yields reward 0). The model is never updated here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import HeteroGraph, attach_query
from .metrics import predict_reward
from .model import GnnModel, score_graph
from .store import QueryRecord, RolloutRecord

SOURCE_GROUND_TRUTH = "ground_truth"
SOURCE_GNN = "gnn"


@dataclass
class RewardRequest:
    query: QueryRecord
    rollouts: list[RolloutRecord]
    labeled: bool


@dataclass
class RewardBatch:
    rewards: np.ndarray  # (N,) ints in {0, 1}
    source: list[str]  # per-rollout SOURCE_* tag
    raw_scores: np.ndarray | None  # present only on the model path


def acquire_rewards(request: RewardRequest, model: GnnModel,
                    warmup_graph: HeteroGraph, k: int | None = None) -> RewardBatch:
    """Rewards for one query's rollouts per the mixed acquisition rule."""
    if request.labeled:
        rewards = []
        for r in request.rollouts:
            if r.gt_reward is None:
                raise ValueError(
                    f"labeled request for {request.query.query_id!r} is missing a "
                    f"gt_reward on rollout {r.rollout_id!r}"
                )
            rewards.append(int(r.gt_reward))
        return RewardBatch(
            rewards=np.asarray(rewards, dtype=np.int64),
            source=[SOURCE_GROUND_TRUTH] * len(rewards),
            raw_scores=None,
        )

    probe = QueryRecord(
        query_id=request.query.query_id,
        dataset_tag=request.query.dataset_tag,
        split=request.query.split,
        labeled=False,
        query_embedding=request.query.query_embedding,
        rollouts=request.rollouts,
    )
    overlay = attach_query(warmup_graph, probe, k=k)
    raw, _ = score_graph(model, overlay, training=False)
    return RewardBatch(
        rewards=predict_reward(raw),
        source=[SOURCE_GNN] * len(raw),
        raw_scores=raw,
    )
