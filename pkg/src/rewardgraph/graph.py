"""Heterogeneous experience graph: construction and online attachment.

The warmup graph holds the labeled train queries plus one thinking node and
one answer node per rollout. Query-query edges come from exact top-k cosine
search over query embeddings; query-thinking and thinking-answer edges follow
ownership. All edge weights are 1; learned attention lives in the model, not
the graph. New queries are attached as overlays that never mutate the base.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .store import QueryRecord, RolloutStore

log = logging.getLogger(__name__)


def cosine_topk(target: np.ndarray, candidates: np.ndarray, k: int
                ) -> list[tuple[int, float]]:
    """Exact top-k cosine similarity, ties broken by ascending index.

    Zero-norm candidates get similarity 0 (with a warning); a zero-norm
    target is an error.
    """
    target = np.asarray(target, dtype=np.float64)
    candidates = np.asarray(candidates, dtype=np.float64)
    if candidates.size == 0:
        return []
    t_norm = float(np.linalg.norm(target))
    if t_norm < 1e-12:
        raise ValueError("cosine_topk target has zero norm")
    norms = np.linalg.norm(candidates, axis=1)
    zero = norms < 1e-12
    if np.any(zero):
        log.warning("cosine_topk: %d zero-norm candidates scored as 0", int(zero.sum()))
    sims = candidates @ target / (np.where(zero, 1.0, norms) * t_norm)
    sims = np.where(zero, 0.0, sims)
    order = np.argsort(-sims, kind="stable")[: min(k, len(sims))]
    return [(int(i), float(sims[i])) for i in order]


@dataclass
class HeteroGraph:
    """Typed node arrays and typed edge lists with unit weights.

    Rollout ``i`` owns thinking node ``i`` and answer node ``i``; ``owner_q``
    maps it to its query. ``qq_src/qq_dst`` store the raw directed top-k
    selections (no self-pairs); symmetrization is a model-side decision.
    """

    dim: int
    k: int
    q_ids: list[str]
    q_tags: list[str]
    q_emb: np.ndarray  # (n_q, D)
    rollout_refs: list[tuple[str, str]]  # (query_id, rollout_id) per rollout
    t_emb: np.ndarray  # (n_r, D)
    a_emb: np.ndarray  # (n_r, D)
    owner_q: np.ndarray  # (n_r,) int64
    qq_src: np.ndarray  # directed: qq_src[i] selected qq_dst[i]
    qq_dst: np.ndarray

    @property
    def n_queries(self) -> int:
        return len(self.q_ids)

    @property
    def n_rollouts(self) -> int:
        return len(self.rollout_refs)

    def query_index(self, query_id: str) -> int:
        return self.q_ids.index(query_id)


@dataclass
class AttachmentOverlay:
    """A new query and its rollouts connected to (but not part of) the base."""

    base: HeteroGraph
    query_id: str
    dataset_tag: str
    q_emb: np.ndarray  # (D,)
    rollout_refs: list[tuple[str, str]]
    t_emb: np.ndarray
    a_emb: np.ndarray
    neighbor_idx: np.ndarray  # base query indices, similarity-descending
    neighbor_sim: np.ndarray


def build_warmup(store: RolloutStore, k: int = 7) -> HeteroGraph:
    """Warmup graph over the labeled train queries of the store."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    queries = store.labeled_train_queries()
    if not queries:
        raise ValueError("store has no labeled train queries")
    if len(queries) < 2:
        log.warning("fewer than 2 labeled queries; graph has no query-query edges")

    q_ids = [q.query_id for q in queries]
    q_tags = [q.dataset_tag for q in queries]
    q_emb = np.vstack([q.query_embedding for q in queries])

    refs, t_rows, a_rows, owners = [], [], [], []
    for qi, q in enumerate(queries):
        for r in q.rollouts:
            refs.append((q.query_id, r.rollout_id))
            t_rows.append(r.thinking_embedding)
            a_rows.append(r.answer_embedding)
            owners.append(qi)

    src, dst = [], []
    if len(queries) >= 2:
        for qi in range(len(queries)):
            others = np.delete(np.arange(len(queries)), qi)
            hits = cosine_topk(q_emb[qi], q_emb[others], k)
            for local, _sim in hits:
                src.append(qi)
                dst.append(int(others[local]))

    return HeteroGraph(
        dim=store.dim,
        k=k,
        q_ids=q_ids,
        q_tags=q_tags,
        q_emb=q_emb,
        rollout_refs=refs,
        t_emb=np.vstack(t_rows) if t_rows else np.zeros((0, store.dim)),
        a_emb=np.vstack(a_rows) if a_rows else np.zeros((0, store.dim)),
        owner_q=np.asarray(owners, dtype=np.int64),
        qq_src=np.asarray(src, dtype=np.int64),
        qq_dst=np.asarray(dst, dtype=np.int64),
    )


def attach_query(graph: HeteroGraph, query: QueryRecord, k: int | None = None
                 ) -> AttachmentOverlay:
    """Connect a new query to its top-k most similar warmup queries.

    The overlay references the base graph without modifying it; overlay
    queries never connect to other overlay queries.
    """
    if query.query_embedding.shape != (graph.dim,):
        raise ValueError(
            f"query {query.query_id!r} has dim {query.query_embedding.shape[0]}, "
            f"graph expects {graph.dim}"
        )
    if query.query_id in graph.q_ids:
        raise ValueError(f"query {query.query_id!r} is already in the graph")
    k = graph.k if k is None else k
    hits = cosine_topk(query.query_embedding, graph.q_emb, k)
    refs = [(query.query_id, r.rollout_id) for r in query.rollouts]
    t_emb = (np.vstack([r.thinking_embedding for r in query.rollouts])
             if query.rollouts else np.zeros((0, graph.dim)))
    a_emb = (np.vstack([r.answer_embedding for r in query.rollouts])
             if query.rollouts else np.zeros((0, graph.dim)))
    return AttachmentOverlay(
        base=graph,
        query_id=query.query_id,
        dataset_tag=query.dataset_tag,
        q_emb=np.asarray(query.query_embedding, dtype=np.float64),
        rollout_refs=refs,
        t_emb=t_emb,
        a_emb=a_emb,
        neighbor_idx=np.asarray([i for i, _ in hits], dtype=np.int64),
        neighbor_sim=np.asarray([s for _, s in hits], dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# checkpoint serialization


def graph_to_json(graph: HeteroGraph) -> dict:
    qq = [[int(s), int(d), 1.0] for s, d in zip(graph.qq_src, graph.qq_dst)]
    qt = [[int(graph.owner_q[i]), i, 1.0] for i in range(graph.n_rollouts)]
    ta = [[i, i, 1.0] for i in range(graph.n_rollouts)]
    return {
        "schema_version": 1,
        "dim": graph.dim,
        "k": graph.k,
        "q_nodes": [
            {"query_id": qid, "dataset": tag, "embedding": emb.tolist()}
            for qid, tag, emb in zip(graph.q_ids, graph.q_tags, graph.q_emb)
        ],
        "t_nodes": [
            {"rollout_ref": list(ref), "embedding": emb.tolist()}
            for ref, emb in zip(graph.rollout_refs, graph.t_emb)
        ],
        "a_nodes": [
            {"rollout_ref": list(ref), "embedding": emb.tolist()}
            for ref, emb in zip(graph.rollout_refs, graph.a_emb)
        ],
        "edges": {"qq": qq, "qt": qt, "ta": ta},
    }


def graph_from_json(obj: dict) -> HeteroGraph:
    if obj.get("schema_version") != 1:
        raise ValueError(f"unsupported graph schema_version {obj.get('schema_version')!r}")
    dim = int(obj["dim"])
    q_nodes, t_nodes, a_nodes = obj["q_nodes"], obj["t_nodes"], obj["a_nodes"]
    if len(t_nodes) != len(a_nodes):
        raise ValueError("thinking and answer node counts differ")
    owner = np.zeros(len(t_nodes), dtype=np.int64)
    for q_idx, t_idx, _w in obj["edges"]["qt"]:
        owner[int(t_idx)] = int(q_idx)
    qq = obj["edges"]["qq"]
    return HeteroGraph(
        dim=dim,
        k=int(obj.get("k", 7)),
        q_ids=[n["query_id"] for n in q_nodes],
        q_tags=[n.get("dataset", "") for n in q_nodes],
        q_emb=(np.asarray([n["embedding"] for n in q_nodes], dtype=np.float64)
               if q_nodes else np.zeros((0, dim))),
        rollout_refs=[tuple(n["rollout_ref"]) for n in t_nodes],
        t_emb=(np.asarray([n["embedding"] for n in t_nodes], dtype=np.float64)
               if t_nodes else np.zeros((0, dim))),
        a_emb=(np.asarray([n["embedding"] for n in a_nodes], dtype=np.float64)
               if a_nodes else np.zeros((0, dim))),
        owner_q=owner,
        qq_src=np.asarray([e[0] for e in qq], dtype=np.int64),
        qq_dst=np.asarray([e[1] for e in qq], dtype=np.int64),
    )


def save_graph(graph: HeteroGraph, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(graph_to_json(graph), sort_keys=True) + "\n", encoding="utf-8"
    )


def load_graph(path: str | Path) -> HeteroGraph:
    return graph_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def graph_fingerprint(graph: HeteroGraph) -> str:
    """Stable content hash of the serialized graph."""
    blob = json.dumps(graph_to_json(graph), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()
