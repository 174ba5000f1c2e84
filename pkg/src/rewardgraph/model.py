"""Relational attention model over the experience graph.

Architecture: type-specific input projections, L layers of per-relation
attention message passing, and a scaled-dot-product reward head. Attention
follows the GATv2 form: the logit for edge u->v is a . LeakyReLU(W h_u + U h_v),
normalized per destination; the message is the attention-weighted sum of
W h_u, averaged over heads so the hidden width stays constant.

Per-node updates take the arithmetic mean over the relation aggregates that
have at least one incoming edge, then ReLU. The query-query relation carries
one self-loop per query (otherwise a query's own state would be averaged
away) and is symmetrized: a directed top-k selection sends messages both
ways. There are no biases anywhere in message passing.

Backward passes are explicit and composed by the caller; see
``training.training_loss_and_grads`` for the full chain.

Variants:
* ``full``          -- five relations (qq, tq, qt, at, ta), own weights each
* ``homogeneous``   -- same topology, one shared (W, U, a) per layer
* ``no_thinking``   -- thinking nodes dropped; answers wired to queries
* ``mlp``           -- no message passing; a 2-layer perceptron on
                       [projected query || thinking || answer]
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import kernels as _k
from .graph import AttachmentOverlay, HeteroGraph
from .tensor import ParamStore, ensure_finite, make_rng, relu, relu_backward

VARIANTS = ("full", "homogeneous", "no_thinking", "mlp")

# relation name -> (source node type, destination node type)
REL_TYPES = {
    "qq": ("q", "q"),
    "tq": ("t", "q"),
    "qt": ("q", "t"),
    "at": ("a", "t"),
    "ta": ("t", "a"),
    "aq": ("a", "q"),
    "qa": ("q", "a"),
}

# destination type -> incoming relations, per variant
_INCOMING = {
    "full": {"q": ("qq", "tq"), "t": ("qt", "at"), "a": ("ta",)},
    "homogeneous": {"q": ("qq", "tq"), "t": ("qt", "at"), "a": ("ta",)},
    "no_thinking": {"q": ("qq", "aq"), "a": ("qa",)},
}


@dataclass
class GnnConfig:
    input_dim: int
    hidden_dim: int = 32
    layers: int = 2
    heads: int = 4
    dropout: float = 0.1
    head_dim: int | None = None  # score-head space; defaults to hidden_dim
    variant: str = "full"
    leaky_slope: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.input_dim < 1 or self.hidden_dim < 1:
            raise ValueError("input_dim and hidden_dim must be >= 1")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if self.heads < 1 or self.hidden_dim % self.heads != 0:
            raise ValueError(
                f"heads ({self.heads}) must divide hidden_dim ({self.hidden_dim})"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")

    @property
    def score_dim(self) -> int:
        return self.hidden_dim if self.head_dim is None else self.head_dim


@dataclass
class NodeStates:
    """Per-type hidden states for layers 0..L (layer 0 = projected inputs)."""

    q: list[np.ndarray]
    t: list[np.ndarray]
    a: list[np.ndarray]

    def final(self, node_type: str) -> np.ndarray:
        return getattr(self, node_type)[-1]


@dataclass
class GnnModel:
    config: GnnConfig
    store: ParamStore

    @property
    def variant(self) -> str:
        return self.config.variant

    def node_types(self) -> tuple[str, ...]:
        return ("q", "a") if self.variant == "no_thinking" else ("q", "t", "a")

    def incoming(self, dst_type: str) -> tuple[str, ...]:
        return _INCOMING[self.variant][dst_type]

    def relation_param_names(self, layer: int, rel: str) -> list[tuple[str, str, str]]:
        key = "shared" if self.variant == "homogeneous" else rel
        return [
            (f"l{layer}.{key}.h{m}.src", f"l{layer}.{key}.h{m}.dst", f"l{layer}.{key}.h{m}.att")
            for m in range(self.config.heads)
        ]

    def relation_params(self, layer: int, rel: str) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        return [
            (self.store.value(w), self.store.value(u), self.store.value(a)[:, 0])
            for w, u, a in self.relation_param_names(layer, rel)
        ]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
            gain: float = 1.0) -> np.ndarray:
    limit = gain * math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


# Head averaging (x2), the two-relation mean and ReLU (~sqrt2 each), and
# attention mixing all shrink state magnitude per layer; this gain keeps the
# stack roughly scale-preserving at init so early training has usable
# gradients instead of a flat plateau.
_MESSAGE_GAIN = 3.0


def init_model(config: GnnConfig) -> GnnModel:
    """Allocate parameters with scaled-uniform (Glorot) init; bias starts at 0."""
    config.validate()
    rng = make_rng(config.seed)
    store = ParamStore()
    d_in, h, d_score = config.input_dim, config.hidden_dim, config.score_dim

    if config.variant == "mlp":
        store.add("proj_q", _glorot(rng, d_in, h))
        store.add("mlp.w1", _glorot(rng, h + 2 * d_in, h))
        store.add("mlp.w2", _glorot(rng, h, 1))
        store.add("head.bias", np.zeros((1, 1)))
        return GnnModel(config=config, store=store)

    model = GnnModel(config=config, store=store)
    for x in model.node_types():
        store.add(f"proj_{x}", _glorot(rng, d_in, h))
    rel_keys = (("shared",) if config.variant == "homogeneous"
                else tuple(dict.fromkeys(
                    r for t in model.node_types() for r in model.incoming(t))))
    for layer in range(config.layers):
        for key in rel_keys:
            for m in range(config.heads):
                store.add(f"l{layer}.{key}.h{m}.src", _glorot(rng, h, h, _MESSAGE_GAIN))
                store.add(f"l{layer}.{key}.h{m}.dst", _glorot(rng, h, h, _MESSAGE_GAIN))
                store.add(f"l{layer}.{key}.h{m}.att", _glorot(rng, h, 1))
    store.add("head.phi_q", _glorot(rng, h, d_score))
    rollout_width = h if config.variant == "no_thinking" else 2 * h
    store.add("head.phi_r", _glorot(rng, rollout_width, d_score))
    store.add("head.bias", np.zeros((1, 1)))
    return model


# ---------------------------------------------------------------------------
# graph view: embeddings + relation edge arrays for a graph or an overlay


@dataclass
class GraphView:
    emb: dict[str, np.ndarray]
    qq_src: np.ndarray  # symmetrized, with self-loops
    qq_dst: np.ndarray
    owner: np.ndarray  # owning query per rollout
    pairs: np.ndarray  # (n_scored, 3) q/t/a indices of the rollouts to score
    rollout_refs: list[tuple[str, str]]

    @property
    def n_q(self) -> int:
        return self.emb["q"].shape[0]

    @property
    def n_rollouts(self) -> int:
        return self.owner.shape[0]


def _symmetrize_with_loops(src: np.ndarray, dst: np.ndarray, n_q: int
                           ) -> tuple[np.ndarray, np.ndarray]:
    loops = np.arange(n_q, dtype=np.int64)
    code = np.concatenate([src * n_q + dst, dst * n_q + src, loops * n_q + loops])
    code = np.unique(code)
    return code // n_q, code % n_q


def view_of(source: HeteroGraph | AttachmentOverlay) -> GraphView:
    if isinstance(source, HeteroGraph):
        g = source
        src, dst = _symmetrize_with_loops(g.qq_src, g.qq_dst, g.n_queries)
        pairs = np.column_stack([
            g.owner_q,
            np.arange(g.n_rollouts, dtype=np.int64),
            np.arange(g.n_rollouts, dtype=np.int64),
        ]) if g.n_rollouts else np.zeros((0, 3), dtype=np.int64)
        return GraphView(
            emb={"q": g.q_emb, "t": g.t_emb, "a": g.a_emb},
            qq_src=src, qq_dst=dst,
            owner=g.owner_q, pairs=pairs, rollout_refs=list(g.rollout_refs),
        )
    ov = source
    g = ov.base
    new_q = g.n_queries
    sel_src = np.concatenate([g.qq_src, np.full(len(ov.neighbor_idx), new_q, dtype=np.int64)])
    sel_dst = np.concatenate([g.qq_dst, ov.neighbor_idx])
    src, dst = _symmetrize_with_loops(sel_src, sel_dst, new_q + 1)
    n_new = len(ov.rollout_refs)
    owner = np.concatenate([g.owner_q, np.full(n_new, new_q, dtype=np.int64)])
    new_rows = np.arange(g.n_rollouts, g.n_rollouts + n_new, dtype=np.int64)
    pairs = (np.column_stack([np.full(n_new, new_q, dtype=np.int64), new_rows, new_rows])
             if n_new else np.zeros((0, 3), dtype=np.int64))
    return GraphView(
        emb={
            "q": np.vstack([g.q_emb, ov.q_emb[None, :]]),
            "t": np.vstack([g.t_emb, ov.t_emb]) if n_new else g.t_emb,
            "a": np.vstack([g.a_emb, ov.a_emb]) if n_new else g.a_emb,
        },
        qq_src=src, qq_dst=dst,
        owner=owner, pairs=pairs, rollout_refs=list(ov.rollout_refs),
    )


def _relation_edges(view: GraphView, rel: str) -> tuple[np.ndarray, np.ndarray, int]:
    rollouts = np.arange(view.n_rollouts, dtype=np.int64)
    if rel == "qq":
        return view.qq_src, view.qq_dst, view.n_q
    if rel == "tq" or rel == "aq":
        return rollouts, view.owner, view.n_q
    if rel == "qt" or rel == "qa":
        return view.owner, rollouts, view.n_rollouts
    if rel in ("at", "ta"):
        return rollouts, rollouts, view.n_rollouts
    raise ValueError(f"unknown relation {rel!r}")


# ---------------------------------------------------------------------------
# per-relation attention, forward and backward


def relation_attention(
    src_states: np.ndarray,
    dst_states: np.ndarray,
    edges: tuple[np.ndarray, np.ndarray],
    params: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
    leaky_slope: float = 0.2,
    n_dst: int | None = None,
    training: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate attention-weighted messages per destination node.

    ``params`` holds one (W, U, a) triple per head. Returns the head-averaged
    messages (n_dst, H) and a mask of destinations with >= 1 incoming edge.
    """
    src_idx = np.asarray(edges[0], dtype=np.int64)
    dst_idx = np.asarray(edges[1], dtype=np.int64)
    if n_dst is None:
        n_dst = dst_states.shape[0]
    msg, present, _ = _relation_forward(
        src_states, dst_states, src_idx, dst_idx, n_dst, params,
        leaky_slope, dropout, training, rng,
    )
    return msg, present


def _stack_params(params):
    """Stack per-head (W, U, a) into (H, M*H), (H, M*H), and (M, H)."""
    w_all = np.hstack([w for w, _, _ in params])
    u_all = np.hstack([u for _, u, _ in params])
    att = np.stack([a for _, _, a in params])
    return w_all, u_all, att


def _relation_forward(h_src, h_dst, src_idx, dst_idx, n_dst, params,
                      slope, dropout, training, rng):
    n_heads = len(params)
    n_edges = src_idx.shape[0]
    hidden = h_src.shape[1]
    if n_edges == 0:
        return (np.zeros((n_dst, hidden)), np.zeros(n_dst, dtype=bool),
                {"empty": True, "n_dst": n_dst})

    # per-head transforms as one BLAS call each; edge math in fused kernels
    w_all, u_all, att = _stack_params(params)
    s_states = np.ascontiguousarray((h_src @ w_all).reshape(-1, n_heads, hidden))
    d_states = np.ascontiguousarray((h_dst @ u_all).reshape(-1, n_heads, hidden))
    logits = _k.edge_logits(s_states, d_states, src_idx, dst_idx, att, slope)

    alpha = _k.segment_softmax(logits, dst_idx, n_dst)
    drop_mask = None
    if training and dropout > 0.0:
        if rng is None:
            raise ValueError("training forward with dropout needs an rng")
        drop_mask = rng.random((n_edges, n_heads)) >= dropout
        alpha_used = alpha * drop_mask / (1.0 - dropout)
    else:
        alpha_used = alpha

    msg = _k.edge_messages(s_states, alpha_used, src_idx, dst_idx, n_dst)
    present = np.bincount(dst_idx, minlength=n_dst) > 0
    cache = {
        "empty": False, "src_idx": src_idx, "dst_idx": dst_idx, "n_dst": n_dst,
        "h_src": h_src, "h_dst": h_dst, "s_states": s_states, "d_states": d_states,
        "att": att, "alpha": alpha, "alpha_used": alpha_used,
        "drop_mask": drop_mask, "dropout": dropout, "slope": slope,
    }
    return msg, present, cache


def _relation_backward(model: GnnModel, names: list[tuple[str, str, str]],
                       cache: dict, g_msg: np.ndarray
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Backprop one relation; accumulates parameter grads, returns state grads."""
    if cache["empty"]:
        return None, None
    h_src, h_dst = cache["h_src"], cache["h_dst"]
    src_idx, dst_idx, n_dst = cache["src_idx"], cache["dst_idx"], cache["n_dst"]
    alpha, alpha_used = cache["alpha"], cache["alpha_used"]
    s_states, d_states, att = cache["s_states"], cache["d_states"], cache["att"]
    slope = cache["slope"]
    n_heads = len(names)
    params = [(model.store.value(w), model.store.value(u)) for w, u, _ in names]

    grad_node = np.ascontiguousarray(g_msg / n_heads)  # (n_dst, H)
    d_alpha = _k.edge_dalpha(s_states, grad_node, src_idx, dst_idx)
    if cache["drop_mask"] is not None:
        d_alpha = d_alpha * cache["drop_mask"] / (1.0 - cache["dropout"])
    # softmax backward per destination segment, all heads at once
    weighted = alpha * d_alpha
    seg_inner = _k.segment_sum(weighted, dst_idx, n_dst)
    d_logit = weighted - alpha * seg_inner[dst_idx]

    d_s, d_t, d_att = _k.edge_backward(
        s_states, d_states, att, alpha_used, d_logit, grad_node,
        src_idx, dst_idx, slope,
    )

    dh_src = np.zeros_like(h_src)
    dh_dst = np.zeros_like(h_dst)
    for m, (w_name, u_name, a_name) in enumerate(names):
        model.store.accumulate(a_name, d_att[m][:, None])
        model.store.accumulate(w_name, h_src.T @ d_s[:, m, :])
        model.store.accumulate(u_name, h_dst.T @ d_t[:, m, :])
        dh_src += d_s[:, m, :] @ params[m][0].T
        dh_dst += d_t[:, m, :] @ params[m][1].T
    return dh_src, dh_dst


# ---------------------------------------------------------------------------
# full forward / backward over the layered graph


def forward_with_cache(model: GnnModel, view: GraphView, training: bool = False,
                       rng: np.random.Generator | None = None):
    cfg = model.config
    if cfg.variant == "mlp":
        raise ValueError("mlp variant has no message-passing forward")
    types = model.node_types()
    states = {x: [view.emb[x] @ model.store.value(f"proj_{x}")] for x in types}
    caches = []
    for layer in range(cfg.layers):
        cur = {x: states[x][-1] for x in types}
        layer_cache = {"rel": {}, "node": {}}
        new = {}
        for dst_type in types:
            aggs, presents = [], []
            for rel in model.incoming(dst_type):
                src_type = REL_TYPES[rel][0]
                src_idx, dst_idx, n_dst = _relation_edges(view, rel)
                msg, present, rc = _relation_forward(
                    cur[src_type], cur[dst_type], src_idx, dst_idx, n_dst,
                    model.relation_params(layer, rel),
                    cfg.leaky_slope, cfg.dropout, training, rng,
                )
                layer_cache["rel"][(dst_type, rel)] = rc
                aggs.append(msg)
                presents.append(present)
            counts = np.maximum(sum(p.astype(np.float64) for p in presents), 1.0)
            pre = sum(aggs) / counts[:, None]
            new[dst_type] = relu(pre)
            layer_cache["node"][dst_type] = (pre, counts, presents)
        for x in types:
            states[x].append(new[x])
        caches.append(layer_cache)
    for x in types:
        ensure_finite(states[x][-1], f"{x}-node states")
    return states, caches


def backward_core(model: GnnModel, view: GraphView, states: dict, caches: list,
                  d_top: dict[str, np.ndarray]) -> None:
    """Backprop through all layers into parameter grads (accumulated)."""
    types = model.node_types()
    d_cur = {x: d_top[x] for x in types}
    for layer in reversed(range(model.config.layers)):
        layer_cache = caches[layer]
        d_prev = {x: np.zeros_like(states[x][layer]) for x in types}
        for dst_type in types:
            pre, counts, presents = layer_cache["node"][dst_type]
            d_pre = relu_backward(pre, d_cur[dst_type]) / counts[:, None]
            for rel, present in zip(model.incoming(dst_type), presents):
                g_msg = d_pre * present[:, None]
                dh_src, dh_dst = _relation_backward(
                    model, model.relation_param_names(layer, rel),
                    layer_cache["rel"][(dst_type, rel)], g_msg,
                )
                if dh_src is None:
                    continue
                src_type = REL_TYPES[rel][0]
                d_prev[src_type] += dh_src
                d_prev[dst_type] += dh_dst
        d_cur = d_prev
    for x in types:
        model.store.accumulate(f"proj_{x}", view.emb[x].T @ d_cur[x])


def forward(model: GnnModel, source: HeteroGraph | AttachmentOverlay,
            training: bool = False, rng: np.random.Generator | None = None
            ) -> NodeStates:
    """Node states for every layer; deterministic when training is False."""
    view = view_of(source)
    states, _ = forward_with_cache(model, view, training, rng)
    empty = [np.zeros((0, model.config.hidden_dim))]
    return NodeStates(q=states["q"], t=states.get("t", empty), a=states["a"])


# ---------------------------------------------------------------------------
# reward head


def score_forward(model: GnnModel, states: dict, pairs: np.ndarray):
    cfg = model.config
    h_q = states["q"][-1][pairs[:, 0]]
    if cfg.variant == "no_thinking":
        rollout_repr = states["a"][-1][pairs[:, 2]]
    else:
        rollout_repr = np.hstack([states["t"][-1][pairs[:, 1]], states["a"][-1][pairs[:, 2]]])
    phi_q = model.store.value("head.phi_q")
    phi_r = model.store.value("head.phi_r")
    bias = float(model.store.value("head.bias")[0, 0])
    u = h_q @ phi_q
    v = rollout_repr @ phi_r
    raw = (u * v).sum(axis=1) / math.sqrt(cfg.score_dim) + bias
    ensure_finite(raw, "rollout scores")
    cache = {"h_q": h_q, "rollout_repr": rollout_repr, "u": u, "v": v}
    return raw, cache


def score_backward(model: GnnModel, states: dict, pairs: np.ndarray,
                   cache: dict, d_raw: np.ndarray) -> dict[str, np.ndarray]:
    """Head gradients plus d(final-layer states), scattered to node rows."""
    cfg = model.config
    scale = 1.0 / math.sqrt(cfg.score_dim)
    u, v = cache["u"], cache["v"]
    d_u = d_raw[:, None] * v * scale
    d_v = d_raw[:, None] * u * scale
    model.store.accumulate("head.phi_q", cache["h_q"].T @ d_u)
    model.store.accumulate("head.phi_r", cache["rollout_repr"].T @ d_v)
    model.store.accumulate("head.bias", np.array([[d_raw.sum()]]))

    d_hq_rows = d_u @ model.store.value("head.phi_q").T
    d_rep = d_v @ model.store.value("head.phi_r").T
    d_top = {x: np.zeros_like(states[x][-1]) for x in model.node_types()}
    np.add.at(d_top["q"], pairs[:, 0], d_hq_rows)
    if cfg.variant == "no_thinking":
        np.add.at(d_top["a"], pairs[:, 2], d_rep)
    else:
        h = cfg.hidden_dim
        np.add.at(d_top["t"], pairs[:, 1], d_rep[:, :h])
        np.add.at(d_top["a"], pairs[:, 2], d_rep[:, h:])
    return d_top


def score_rollouts(model: GnnModel, states: NodeStates, pairs: np.ndarray) -> np.ndarray:
    """Raw (pre-sigmoid) scores for (query, thinking, answer) index triples."""
    pairs = np.asarray(pairs, dtype=np.int64)
    state_map = {"q": states.q, "t": states.t, "a": states.a}
    raw, _ = score_forward(model, state_map, pairs)
    return raw


# ---------------------------------------------------------------------------
# mlp baseline: projected query embedding + raw rollout embeddings


def mlp_forward(model: GnnModel, view: GraphView):
    pairs = view.pairs
    q_in = view.emb["q"][pairs[:, 0]]
    x = np.hstack([
        q_in @ model.store.value("proj_q"),
        view.emb["t"][pairs[:, 1]],
        view.emb["a"][pairs[:, 2]],
    ])
    z1 = x @ model.store.value("mlp.w1")
    h1 = relu(z1)
    raw = (h1 @ model.store.value("mlp.w2"))[:, 0] + float(model.store.value("head.bias")[0, 0])
    ensure_finite(raw, "mlp scores")
    return raw, {"q_in": q_in, "x": x, "z1": z1, "h1": h1}


def mlp_backward(model: GnnModel, cache: dict, d_raw: np.ndarray) -> None:
    h = model.config.hidden_dim
    model.store.accumulate("head.bias", np.array([[d_raw.sum()]]))
    model.store.accumulate("mlp.w2", cache["h1"].T @ d_raw[:, None])
    d_h1 = d_raw[:, None] @ model.store.value("mlp.w2").T
    d_z1 = relu_backward(cache["z1"], d_h1)
    model.store.accumulate("mlp.w1", cache["x"].T @ d_z1)
    d_x = d_z1 @ model.store.value("mlp.w1").T
    model.store.accumulate("proj_q", cache["q_in"].T @ d_x[:, :h])


# ---------------------------------------------------------------------------
# unified scoring entry points


def score_graph(model: GnnModel, source: HeteroGraph | AttachmentOverlay,
                training: bool = False, rng: np.random.Generator | None = None
                ) -> tuple[np.ndarray, list[tuple[str, str]]]:
    """Raw scores for the rollouts a graph (all) or overlay (new ones) scores."""
    view = view_of(source)
    if model.variant == "mlp":
        raw, _ = mlp_forward(model, view)
        return raw, view.rollout_refs
    states, _ = forward_with_cache(model, view, training, rng)
    raw, _ = score_forward(model, states, view.pairs)
    return raw, view.rollout_refs


def forward_variant(model: GnnModel, source: HeteroGraph | AttachmentOverlay,
                    variant: str) -> np.ndarray:
    """Score all of a source's rollouts under the named ablation variant."""
    if variant != model.variant:
        raise ValueError(
            f"model was built as {model.variant!r}, cannot run as {variant!r}"
        )
    raw, _ = score_graph(model, source, training=False)
    return raw


# ---------------------------------------------------------------------------
# checkpoints


def model_to_json(model: GnnModel) -> dict:
    return {
        "schema_version": 1,
        "config": asdict(model.config),
        "params": {
            name: {"shape": list(entry.value.shape),
                   "values": entry.value.ravel().tolist()}
            for name, entry in model.store.entries.items()
        },
    }


def model_from_json(obj: dict) -> GnnModel:
    if obj.get("schema_version") != 1:
        raise ValueError(f"unsupported model schema_version {obj.get('schema_version')!r}")
    config = GnnConfig(**obj["config"])
    model = init_model(config)
    for name, spec in obj["params"].items():
        if name not in model.store:
            raise ValueError(f"checkpoint parameter {name!r} not in model")
        value = np.asarray(spec["values"], dtype=np.float64).reshape(spec["shape"])
        model.store[name].value[...] = value
    return model


def save_model(model: GnnModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model), sort_keys=True) + "\n",
                          encoding="utf-8")


def load_model(path: str | Path) -> GnnModel:
    return model_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
