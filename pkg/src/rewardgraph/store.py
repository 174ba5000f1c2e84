"""Rollout data model, JSONL ingestion, label budgets, and synthetic data.

A store holds queries with precomputed embeddings and their rollouts (one
thinking vector, one answer vector, an optional binary reward each). The
synthetic generator produces clustered stores whose rollout embeddings carry
a tunable correctness signal so graph-based reward propagation can be studied
without any text encoder.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .tensor import make_rng

TRAIN_FRAC = 0.5
VAL_FRAC = 0.2
SIGNAL_MODES = ("direction", "thinking_only", "cluster")


@dataclass
class RolloutRecord:
    """One policy sample: a thinking vector, an answer vector, a reward."""

    rollout_id: str
    thinking_embedding: np.ndarray
    answer_embedding: np.ndarray
    gt_reward: int | None = None
    answer_key: str | None = None
    # Populated by split_labels when the owning query's label is hidden;
    # read only by evaluation code, never by training.
    sealed_reward: int | None = None

    def true_reward(self) -> int | None:
        return self.gt_reward if self.gt_reward is not None else self.sealed_reward


@dataclass
class QueryRecord:
    query_id: str
    dataset_tag: str
    split: str  # train | val | test
    labeled: bool
    query_embedding: np.ndarray
    rollouts: list[RolloutRecord]


@dataclass
class LabelBudget:
    """Fraction of train queries whose rewards stay visible, plus a seed."""

    gt_ratio: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gt_ratio <= 1.0:
            raise ValueError(f"gt_ratio must lie in [0, 1], got {self.gt_ratio}")


@dataclass
class SynthConfig:
    num_clusters: int = 8
    queries_per_cluster: int = 40
    rollouts_per_query: int = 8
    embedding_dim: int = 16
    cluster_noise: float = 1.6
    answer_vocab: int = 8
    correctness_signal: float = 0.8
    # Where the correctness signal lives: "direction" shifts thinking and
    # answer vectors along a global axis, "thinking_only" shifts only the
    # thinking vector, "cluster" pulls incorrect rollouts toward a wrong
    # cluster center so only relative structure separates the classes.
    signal_mode: str = "direction"
    seed: int = 0

    def validate(self) -> None:
        for name in ("num_clusters", "queries_per_cluster", "rollouts_per_query",
                     "embedding_dim", "answer_vocab"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.cluster_noise < 0:
            raise ValueError(f"cluster_noise must be >= 0, got {self.cluster_noise}")
        if not 0.0 <= self.correctness_signal <= 1.0:
            raise ValueError("correctness_signal must lie in [0, 1]")
        if self.signal_mode not in SIGNAL_MODES:
            raise ValueError(f"signal_mode must be one of {SIGNAL_MODES}")
        if self.signal_mode == "cluster" and self.num_clusters < 2:
            raise ValueError("cluster signal mode needs at least 2 clusters")


@dataclass
class SynthMeta:
    """Generator parameters kept with a synthetic store.

    The policy simulator reuses them to synthesize embeddings for fresh
    rollouts with the same scheme the stored rollouts were drawn from.
    """

    config: SynthConfig
    cluster_tags: list[str]
    centers: np.ndarray  # (num_clusters, D)
    direction: np.ndarray  # (D,)
    correct_answers: np.ndarray  # (num_clusters,) int

    def cluster_index(self, tag: str) -> int:
        return self.cluster_tags.index(tag)


class RolloutStore:
    """Immutable-after-construction collection of queries and rollouts."""

    def __init__(self, dim: int, queries: list[QueryRecord] | None = None,
                 synth_meta: SynthMeta | None = None):
        self.dim = int(dim)
        self.queries: list[QueryRecord] = []
        self.synth_meta = synth_meta
        self._index: dict[str, QueryRecord] = {}
        for q in queries or []:
            self.add(q)

    def add(self, query: QueryRecord) -> None:
        if query.query_id in self._index:
            raise ValueError(f"duplicate query_id {query.query_id!r}")
        _check_dim(query.query_embedding, self.dim, query.query_id)
        for r in query.rollouts:
            _check_dim(r.thinking_embedding, self.dim, query.query_id)
            _check_dim(r.answer_embedding, self.dim, query.query_id)
            if r.gt_reward is not None and r.gt_reward not in (0, 1):
                raise ValueError(
                    f"gt_reward must be 0 or 1, got {r.gt_reward} in {query.query_id!r}"
                )
        if query.labeled and any(r.gt_reward is None for r in query.rollouts):
            raise ValueError(
                f"labeled query {query.query_id!r} has rollouts without gt_reward"
            )
        self.queries.append(query)
        self._index[query.query_id] = query

    def __len__(self) -> int:
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)

    def get(self, query_id: str) -> QueryRecord:
        return self._index[query_id]

    def split_queries(self, split: str) -> list[QueryRecord]:
        return [q for q in self.queries if q.split == split]

    def labeled_train_queries(self) -> list[QueryRecord]:
        return [q for q in self.queries if q.split == "train" and q.labeled]

    def counts_per_split(self) -> dict[str, int]:
        counts = {"train": 0, "val": 0, "test": 0}
        for q in self.queries:
            counts[q.split] = counts.get(q.split, 0) + 1
        return counts

    def n_rollouts(self) -> int:
        return sum(len(q.rollouts) for q in self.queries)

    def true_reward(self, query_id: str, rollout_id: str) -> int:
        q = self._index[query_id]
        for r in q.rollouts:
            if r.rollout_id == rollout_id:
                reward = r.true_reward()
                if reward is None:
                    raise ValueError(
                        f"rollout {rollout_id!r} of {query_id!r} carries no reward"
                    )
                return reward
        raise KeyError(f"rollout {rollout_id!r} not found under {query_id!r}")


def _check_dim(vec: np.ndarray, dim: int, query_id: str) -> None:
    if vec.shape != (dim,):
        raise ValueError(
            f"embedding dimension mismatch for query {query_id!r}: "
            f"expected {dim}, got {vec.shape}"
        )


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        raise ValueError("cannot normalize a zero vector")
    return vec / norm


# ---------------------------------------------------------------------------
# JSONL serialization
#
# First line is a header {"schema_version": 1, "dim": D} (plus an optional
# "synth" object with generator parameters); every following line is one
# query object.


def write_jsonl(store: RolloutStore, path: str | Path) -> None:
    path = Path(path)
    header: dict = {"schema_version": 1, "dim": store.dim}
    if store.synth_meta is not None:
        header["synth"] = _synth_meta_to_json(store.synth_meta)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for q in store.queries:
            fh.write(json.dumps(_query_to_json(q), sort_keys=True) + "\n")


def _query_to_json(q: QueryRecord) -> dict:
    rollouts = []
    for r in q.rollouts:
        obj = {
            "rollout_id": r.rollout_id,
            "thinking_embedding": r.thinking_embedding.tolist(),
            "answer_embedding": r.answer_embedding.tolist(),
            "gt_reward": r.gt_reward,
            "answer_key": r.answer_key,
        }
        if r.sealed_reward is not None:
            obj["sealed_reward"] = r.sealed_reward
        rollouts.append(obj)
    return {
        "query_id": q.query_id,
        "dataset": q.dataset_tag,
        "split": q.split,
        "labeled": q.labeled,
        "query_embedding": q.query_embedding.tolist(),
        "rollouts": rollouts,
    }


def ingest_jsonl(path: str | Path, expected_dim: int | None = None
                 ) -> tuple[RolloutStore, dict[str, int]]:
    """Load and validate a JSONL store; returns (store, counts per split).

    An empty file yields an empty store (``expected_dim`` then supplies the
    dimension). Malformed lines report their 1-based line number.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        store = RolloutStore(dim=expected_dim or 0)
        return store, store.counts_per_split()

    header = _parse_line(lines[0], 1)
    if header.get("schema_version") != 1:
        raise ValueError(f"unsupported schema_version {header.get('schema_version')!r}")
    dim = int(header["dim"])
    if expected_dim is not None and dim != expected_dim:
        raise ValueError(f"header dim {dim} does not match expected_dim {expected_dim}")
    meta = _synth_meta_from_json(header["synth"]) if "synth" in header else None

    store = RolloutStore(dim=dim, synth_meta=meta)
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        obj = _parse_line(raw, lineno)
        try:
            store.add(_query_from_json(obj, dim))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"line {lineno}: malformed query object ({exc})") from exc
    return store, store.counts_per_split()


def _parse_line(raw: str, lineno: int) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ValueError(f"line {lineno}: expected a JSON object")
    return obj


def _query_from_json(obj: dict, dim: int) -> QueryRecord:
    rollouts = []
    for r in obj["rollouts"]:
        reward = r.get("gt_reward")
        rollouts.append(RolloutRecord(
            rollout_id=r["rollout_id"],
            thinking_embedding=np.asarray(r["thinking_embedding"], dtype=np.float64),
            answer_embedding=np.asarray(r["answer_embedding"], dtype=np.float64),
            gt_reward=None if reward is None else int(reward),
            answer_key=r.get("answer_key"),
            sealed_reward=(None if r.get("sealed_reward") is None
                           else int(r["sealed_reward"])),
        ))
    split = obj["split"]
    if split not in ("train", "val", "test"):
        raise ValueError(f"unknown split {split!r} for query {obj.get('query_id')!r}")
    labeled = obj.get("labeled")
    if labeled is None:
        labeled = all(r.gt_reward is not None for r in rollouts)
    return QueryRecord(
        query_id=obj["query_id"],
        dataset_tag=obj["dataset"],
        split=split,
        labeled=bool(labeled),
        query_embedding=np.asarray(obj["query_embedding"], dtype=np.float64),
        rollouts=rollouts,
    )


def _synth_meta_to_json(meta: SynthMeta) -> dict:
    return {
        "config": vars(meta.config).copy(),
        "cluster_tags": meta.cluster_tags,
        "centers": meta.centers.tolist(),
        "direction": meta.direction.tolist(),
        "correct_answers": meta.correct_answers.tolist(),
    }


def _synth_meta_from_json(obj: dict) -> SynthMeta:
    return SynthMeta(
        config=SynthConfig(**obj["config"]),
        cluster_tags=list(obj["cluster_tags"]),
        centers=np.asarray(obj["centers"], dtype=np.float64),
        direction=np.asarray(obj["direction"], dtype=np.float64),
        correct_answers=np.asarray(obj["correct_answers"], dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# label budget


def _labeled_count(gt_ratio: float, n: int) -> int:
    if n == 0 or gt_ratio <= 0.0:
        return 0
    # ceil with a guard against float dust (0.2 * 750 must give 150, not 151)
    count = math.ceil(gt_ratio * n - 1e-9)
    return min(n, max(1, count))


def split_labels(store: RolloutStore, budget: LabelBudget) -> RolloutStore:
    """Return a copy of the store with the label budget applied.

    Per dataset tag, ceil(gt_ratio * n_train) train queries keep their
    rewards visible (selected by seeded shuffle); the rest have rewards moved
    into the sealed field. Validation and test labels stay visible.
    """
    if len(store) == 0:
        raise ValueError("cannot split an empty store")
    train = [q for q in store.queries if q.split == "train"]
    for q in train:
        if any(r.true_reward() is None for r in q.rollouts):
            raise ValueError(f"train query {q.query_id!r} lacks ground-truth rewards")

    by_tag: dict[str, list[str]] = {}
    for q in train:
        by_tag.setdefault(q.dataset_tag, []).append(q.query_id)

    rng = make_rng(budget.seed)
    visible: set[str] = set()
    for tag in sorted(by_tag):
        ids = sorted(by_tag[tag])
        take = _labeled_count(budget.gt_ratio, len(ids))
        order = rng.permutation(len(ids))
        visible.update(ids[i] for i in order[:take])

    out = RolloutStore(dim=store.dim, synth_meta=store.synth_meta)
    for q in store.queries:
        if q.split != "train":
            out.add(replace(q, labeled=True))
            continue
        keep = q.query_id in visible
        rollouts = []
        for r in q.rollouts:
            reward = r.true_reward()
            rollouts.append(replace(
                r,
                gt_reward=reward if keep else None,
                sealed_reward=None if keep else reward,
            ))
        out.add(replace(q, labeled=keep, rollouts=rollouts))
    return out


# ---------------------------------------------------------------------------
# synthetic generator


def rollout_embedding(
    center: np.ndarray,
    correct: bool,
    role: str,
    meta: SynthMeta,
    rng: np.random.Generator,
    wrong_center: np.ndarray | None = None,
) -> np.ndarray:
    """One rollout embedding under the store's signal scheme.

    ``role`` is "thinking" or "answer"; ``wrong_center`` must be supplied in
    cluster mode for incorrect rollouts.
    """
    cfg = meta.config
    dim = cfg.embedding_dim
    s = cfg.correctness_signal
    noise = cfg.cluster_noise * rng.standard_normal(dim) / math.sqrt(dim)
    if cfg.signal_mode == "cluster":
        if correct:
            base = center
        else:
            if wrong_center is None:
                raise ValueError("cluster signal mode needs a wrong_center")
            base = (1.0 - s) * center + s * wrong_center
        return _unit(base + noise)
    carries = cfg.signal_mode == "direction" or role == "thinking"
    shift = s * (1.0 if correct else -1.0) * meta.direction if carries else 0.0
    return _unit(center + shift + noise)


def _pick_wrong_center(meta: SynthMeta, cluster: int, rng: np.random.Generator) -> np.ndarray:
    other = int(rng.integers(meta.config.num_clusters - 1))
    if other >= cluster:
        other += 1
    return meta.centers[other]


def sample_rollout_pair(
    meta: SynthMeta,
    cluster: int,
    correct: bool,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """(thinking, answer) embeddings for one rollout of the given cluster."""
    center = meta.centers[cluster]
    wrong = None
    if meta.config.signal_mode == "cluster" and not correct:
        wrong = _pick_wrong_center(meta, cluster, rng)
    e_t = rollout_embedding(center, correct, "thinking", meta, rng, wrong)
    if meta.config.signal_mode == "cluster" and not correct:
        wrong = _pick_wrong_center(meta, cluster, rng)
    e_a = rollout_embedding(center, correct, "answer", meta, rng, wrong)
    return e_t, e_a


def synth_generate(config: SynthConfig) -> RolloutStore:
    """Deterministic clustered store with controllable correctness signal.

    Queries are cluster centers plus Gaussian noise (unit-normalized). Each
    query draws a success rate near its cluster's base rate, so reward
    patterns correlate within a cluster. Splits are assigned 50/20/30
    train/val/test per cluster by seeded shuffle.
    """
    config.validate()
    rng = make_rng(config.seed)
    c, q_per, n, dim = (config.num_clusters, config.queries_per_cluster,
                        config.rollouts_per_query, config.embedding_dim)

    centers = np.vstack([_unit(rng.standard_normal(dim)) for _ in range(c)])
    direction = _unit(rng.standard_normal(dim))
    correct_answers = rng.integers(0, config.answer_vocab, size=c)
    base_rates = rng.uniform(0.25, 0.75, size=c)
    tags = [f"cluster{i:02d}" for i in range(c)]
    meta = SynthMeta(config=config, cluster_tags=tags, centers=centers,
                     direction=direction, correct_answers=correct_answers)

    n_train = int(TRAIN_FRAC * q_per)
    n_val = int(VAL_FRAC * q_per)
    store = RolloutStore(dim=dim, synth_meta=meta)
    for ci in range(c):
        order = rng.permutation(q_per)
        splits = [""] * q_per
        for pos, qi in enumerate(order):
            splits[qi] = ("train" if pos < n_train
                          else "val" if pos < n_train + n_val else "test")
        for qi in range(q_per):
            q_emb = _unit(centers[ci]
                          + config.cluster_noise * rng.standard_normal(dim) / math.sqrt(dim))
            p_q = float(np.clip(base_rates[ci] + rng.uniform(-0.1, 0.1), 0.05, 0.95))
            query_id = f"{tags[ci]}-q{qi:03d}"
            rollouts = []
            for j in range(n):
                # a 1-word vocabulary leaves no way to answer incorrectly
                correct = bool(rng.random() < p_q) or config.answer_vocab == 1
                if correct:
                    answer = int(correct_answers[ci])
                else:
                    answer = int(rng.integers(config.answer_vocab - 1))
                    if answer >= correct_answers[ci]:
                        answer += 1
                e_t, e_a = sample_rollout_pair(meta, ci, correct, rng)
                rollouts.append(RolloutRecord(
                    rollout_id=f"{query_id}-r{j}",
                    thinking_embedding=e_t,
                    answer_embedding=e_a,
                    gt_reward=int(correct),
                    answer_key=str(answer),
                ))
            store.add(QueryRecord(
                query_id=query_id,
                dataset_tag=tags[ci],
                split=splits[qi],
                labeled=True,
                query_embedding=q_emb,
                rollouts=rollouts,
            ))
    return store
