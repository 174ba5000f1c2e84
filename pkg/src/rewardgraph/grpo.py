"""Group-relative policy optimization over a toy categorical policy.

Each synthetic cluster gets one row of logits over a small answer vocabulary;
a rollout is a single sampled answer (token length 1), so the clipped
importance-ratio objective applies without a token sum. Rewards come from a
pluggable acquirer so the same loop runs under full ground truth, partial
ground truth (unlabeled tasks skipped), or the mixed rule that scores
unlabeled rollouts with the frozen reward model.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .graph import HeteroGraph
from .model import GnnModel
from .rewards import RewardRequest, acquire_rewards
from .store import (QueryRecord, RolloutRecord, RolloutStore, SynthMeta,
                    sample_rollout_pair)
from .tensor import ParamStore, adam_step

MODES = ("partial", "mixed", "oracle")


@dataclass
class GrpoConfig:
    n_rollouts: int = 8
    epsilon: float = 0.2
    beta: float = 1e-3
    lr: float = 0.05
    steps: int = 100
    temperature: float = 1.0
    batch_size: int = 16
    eval_every: int = 10
    seed: int = 0

    def validate(self) -> None:
        if self.n_rollouts < 2:
            raise ValueError(f"n_rollouts must be >= 2, got {self.n_rollouts}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.steps < 1 or self.batch_size < 1:
            raise ValueError("steps and batch_size must be >= 1")


@dataclass
class ToyTask:
    query: QueryRecord
    answer_vocab: int
    correct_answer: int
    cluster_index: int
    meta: SynthMeta | None = None


@dataclass
class CategoricalPolicy:
    """Per-cluster logits with a frozen reference copy and Adam state."""

    logits: np.ndarray  # (clusters, vocab); view into the param store
    ref_logits: np.ndarray
    temperature: float
    store: ParamStore


def make_policy(num_clusters: int, vocab: int, temperature: float = 1.0
                ) -> CategoricalPolicy:
    store = ParamStore()
    logits = store.add("logits", np.zeros((num_clusters, vocab)))
    return CategoricalPolicy(
        logits=store.value("logits"),
        ref_logits=logits.copy(),
        temperature=temperature,
        store=store,
    )


def softmax_rows(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    z = logits / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def tasks_from_store(store: RolloutStore, split: str = "train") -> list[ToyTask]:
    meta = _require_meta(store)
    tasks = []
    for q in store.split_queries(split):
        cluster = meta.cluster_index(q.dataset_tag)
        tasks.append(ToyTask(
            query=q,
            answer_vocab=meta.config.answer_vocab,
            correct_answer=int(meta.correct_answers[cluster]),
            cluster_index=cluster,
            meta=meta,
        ))
    return tasks


def _require_meta(store: RolloutStore) -> SynthMeta:
    if store.synth_meta is None:
        raise ValueError("policy simulation needs a store with synthetic metadata")
    return store.synth_meta


def sample_rollouts(policy: CategoricalPolicy, task: ToyTask, n: int,
                    temperature: float, rng: np.random.Generator,
                    meta: SynthMeta) -> tuple[list[RolloutRecord], np.ndarray, np.ndarray]:
    """Sample N answers and synthesize matching rollout embeddings.

    Embeddings follow the store's generator scheme, so the warmup-trained
    reward model can score these rollouts. Returns (rollouts, answer
    indices, log-probs of the sampled answers).
    """
    probs = softmax_rows(policy.logits[task.cluster_index], temperature)
    answers = rng.choice(len(probs), size=n, p=probs)
    logp = np.log(probs[answers])
    rollouts = []
    for j, answer in enumerate(answers):
        correct = int(answer) == task.correct_answer
        e_t, e_a = sample_rollout_pair(meta, task.cluster_index, correct, rng)
        rollouts.append(RolloutRecord(
            rollout_id=f"{task.query.query_id}-p{j}",
            thinking_embedding=e_t,
            answer_embedding=e_a,
            gt_reward=None,
            answer_key=str(int(answer)),
        ))
    return rollouts, answers.astype(np.int64), logp


def advantages(rewards) -> np.ndarray:
    """Group-standardized rewards (population std); all zero if degenerate."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.size < 2:
        raise ValueError("advantages need at least 2 rewards")
    std = float(r.std())
    if std < 1e-8:
        return np.zeros_like(r)
    return (r - r.mean()) / std


def kl_categorical(p_logits: np.ndarray, q_logits: np.ndarray,
                   temperature: float = 1.0) -> float:
    p = softmax_rows(p_logits, temperature)
    q = softmax_rows(q_logits, temperature)
    return float(np.sum(p * (np.log(p) - np.log(q))))


def grpo_objective(
    logits: np.ndarray,
    ref_logits: np.ndarray,
    temperature: float,
    cluster_ids: np.ndarray,  # (B,)
    answers: np.ndarray,  # (B, N)
    logp_old: np.ndarray,  # (B, N)
    adv: np.ndarray,  # (B, N)
    epsilon: float,
    beta: float,
) -> tuple[float, np.ndarray]:
    """Clipped-ratio surrogate minus the KL penalty, with its exact gradient.

    Per task: mean_j min(rho*A, clip(rho, 1-eps, 1+eps)*A) with
    rho = pi_new(answer) / pi_old(answer), minus beta * KL(pi_new || pi_ref)
    for the task's cluster; averaged over the batch.
    """
    n_batch, n_roll = answers.shape
    probs = softmax_rows(logits, temperature)
    ref_probs = softmax_rows(ref_logits, temperature)
    grad = np.zeros_like(logits)
    total = 0.0
    for b in range(n_batch):
        c = int(cluster_ids[b])
        p = probs[c]
        logp_new = np.log(p[answers[b]])
        rho = np.exp(logp_new - logp_old[b])
        surr_plain = rho * adv[b]
        surr_clip = np.clip(rho, 1.0 - epsilon, 1.0 + epsilon) * adv[b]
        chosen = np.minimum(surr_plain, surr_clip)
        total += chosen.mean()
        # gradient flows only where the unclipped branch is selected
        active = surr_plain <= surr_clip
        coeff = np.where(active, adv[b] * rho, 0.0) / n_roll
        for j in range(n_roll):
            if coeff[j] == 0.0:
                continue
            one_hot = np.zeros_like(p)
            one_hot[answers[b, j]] = 1.0
            grad[c] += coeff[j] * (one_hot - p) / temperature

        log_ratio = np.log(p) - np.log(ref_probs[c])
        kl = float(np.sum(p * log_ratio))
        total -= beta * kl
        grad[c] -= beta * p * (log_ratio - kl) / temperature
    total /= n_batch
    grad /= n_batch
    return total, grad


@dataclass
class StepStats:
    objective: float
    mean_reward: float
    mean_true_reward: float
    n_tasks: int


def grpo_step(policy: CategoricalPolicy, tasks: list[ToyTask], reward_fn,
              config: GrpoConfig, rng_for_task) -> StepStats:
    """Sample one group per task, acquire rewards, take one ascent step.

    ``reward_fn(task, rollouts, answers) -> (rewards, true_rewards)`` decides
    the supervision regime; ``rng_for_task(task_index)`` supplies the
    deterministic per-task stream.
    """
    if not tasks:
        return StepStats(objective=0.0, mean_reward=0.0, mean_true_reward=0.0, n_tasks=0)
    meta_rows = []
    all_rewards, all_true = [], []
    for ti, task in enumerate(tasks):
        rng = rng_for_task(ti)
        rollouts, answers, logp = sample_rollouts(
            policy, task, config.n_rollouts, config.temperature, rng,
            meta=task.meta)
        rewards, true_rewards = reward_fn(task, rollouts, answers)
        meta_rows.append((task.cluster_index, answers, logp,
                          advantages(np.asarray(rewards, dtype=np.float64))))
        all_rewards.extend(int(r) for r in rewards)
        all_true.extend(int(r) for r in true_rewards)

    cluster_ids = np.asarray([m[0] for m in meta_rows], dtype=np.int64)
    answers = np.vstack([m[1] for m in meta_rows])
    logp_old = np.vstack([m[2] for m in meta_rows])
    adv = np.vstack([m[3] for m in meta_rows])
    objective, grad = grpo_objective(
        policy.logits, policy.ref_logits, config.temperature,
        cluster_ids, answers, logp_old, adv, config.epsilon, config.beta,
    )
    policy.store["logits"].grad[...] = -grad  # ascend the objective
    adam_step(policy.store, lr=config.lr)
    return StepStats(
        objective=objective,
        mean_reward=float(np.mean(all_rewards)),
        mean_true_reward=float(np.mean(all_true)),
        n_tasks=len(tasks),
    )


@dataclass
class RunReport:
    mode: str
    seed: int
    final_accuracy: float
    curve: list[dict] = field(default_factory=list)  # step, mean_true_reward, held_out_accuracy

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "final_accuracy": self.final_accuracy,
            "curve": self.curve,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["step", "mean_true_reward", "held_out_accuracy"])
        for row in self.curve:
            writer.writerow([row["step"], row["mean_true_reward"],
                             row["held_out_accuracy"]])
        return buf.getvalue()


def held_out_accuracy(policy: CategoricalPolicy, tasks: list[ToyTask],
                      temperature: float) -> float:
    """Expected true reward of the sampling policy over held-out tasks."""
    if not tasks:
        return 0.0
    probs = softmax_rows(policy.logits, temperature)
    return float(np.mean([probs[t.cluster_index, t.correct_answer] for t in tasks]))


def run_experiment(mode: str, store: RolloutStore, model: GnnModel | None,
                   graph: HeteroGraph | None, config: GrpoConfig) -> RunReport:
    """One policy-optimization run under the chosen supervision regime.

    * ``oracle``  -- every task gets verifier (ground-truth) rewards
    * ``partial`` -- unlabeled tasks are dropped from each batch
    * ``mixed``   -- labeled tasks get verifier rewards, unlabeled tasks get
                     thresholded reward-model predictions
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "mixed" and (model is None or graph is None):
        raise ValueError("mixed mode needs a trained model and a warmup graph")
    config.validate()
    meta = _require_meta(store)
    tasks = tasks_from_store(store, "train")
    heldout = tasks_from_store(store, "test")
    if not tasks:
        raise ValueError("no train tasks available")

    policy = make_policy(meta.config.num_clusters, meta.config.answer_vocab,
                         config.temperature)

    def verifier(task: ToyTask, answers: np.ndarray) -> np.ndarray:
        return (answers == task.correct_answer).astype(np.int64)

    def reward_fn(task: ToyTask, rollouts: list[RolloutRecord], answers: np.ndarray):
        true_rewards = verifier(task, answers)
        if mode == "oracle" or (mode == "mixed" and task.query.labeled):
            return true_rewards, true_rewards
        if mode == "partial":
            return true_rewards, true_rewards  # partial batches are pre-filtered
        request = RewardRequest(query=task.query, rollouts=rollouts, labeled=False)
        batch = acquire_rewards(request, model, graph, k=graph.k)
        return batch.rewards, true_rewards

    batch_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((config.seed, 0xBA7C4))))
    curve = []
    for step in range(1, config.steps + 1):
        chosen = batch_rng.choice(len(tasks), size=min(config.batch_size, len(tasks)),
                                  replace=False)
        batch = [tasks[i] for i in chosen]
        if mode == "partial":
            batch = [t for t in batch if t.query.labeled]

        def rng_for_task(ti: int, _step=step):
            return np.random.Generator(np.random.PCG64(
                np.random.SeedSequence((config.seed, _step, ti))))

        stats = grpo_step(policy, batch, reward_fn, config, rng_for_task)
        if step % config.eval_every == 0 or step == config.steps:
            curve.append({
                "step": step,
                "mean_true_reward": stats.mean_true_reward,
                "held_out_accuracy": held_out_accuracy(policy, heldout,
                                                       config.temperature),
            })
    return RunReport(
        mode=mode,
        seed=config.seed,
        final_accuracy=held_out_accuracy(policy, heldout, config.temperature),
        curve=curve,
    )
