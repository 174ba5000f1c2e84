"""Experience-graph reward propagation for policy optimization, desk scale.

Pipeline: build a heterogeneous graph (query / thinking / answer nodes) from
labeled rollouts, train a relational attention model to predict binary
rewards, then feed a group-relative policy optimizer with ground-truth
rewards where labels exist and thresholded model predictions elsewhere.
"""

__version__ = "0.1.0"

from .graph import AttachmentOverlay, HeteroGraph, attach_query, build_warmup, cosine_topk
from .kernels import BACKEND
from .metrics import EvalReport, predict_reward, roc_auc, score_separation
from .model import GnnConfig, GnnModel, forward, forward_variant, init_model, score_rollouts
from .rewards import RewardBatch, RewardRequest, acquire_rewards
from .store import (LabelBudget, QueryRecord, RolloutRecord, RolloutStore,
                    SynthConfig, ingest_jsonl, split_labels, synth_generate,
                    write_jsonl)
from .tensor import ParamStore, adam_step, grad_check, make_rng, segment_softmax
from .training import TrainConfig, bce_loss, evaluate, trace_report, train
from .grpo import GrpoConfig, RunReport, advantages, grpo_step, run_experiment, sample_rollouts

__all__ = [
    "__version__",
    "BACKEND",
    "AttachmentOverlay",
    "HeteroGraph",
    "attach_query",
    "build_warmup",
    "cosine_topk",
    "EvalReport",
    "predict_reward",
    "roc_auc",
    "score_separation",
    "GnnConfig",
    "GnnModel",
    "forward",
    "forward_variant",
    "init_model",
    "score_rollouts",
    "RewardBatch",
    "RewardRequest",
    "acquire_rewards",
    "LabelBudget",
    "QueryRecord",
    "RolloutRecord",
    "RolloutStore",
    "SynthConfig",
    "ingest_jsonl",
    "split_labels",
    "synth_generate",
    "write_jsonl",
    "ParamStore",
    "adam_step",
    "grad_check",
    "make_rng",
    "segment_softmax",
    "TrainConfig",
    "bce_loss",
    "evaluate",
    "trace_report",
    "train",
    "GrpoConfig",
    "RunReport",
    "advantages",
    "grpo_step",
    "run_experiment",
    "sample_rollouts",
]
