"""Hot kernels for the attention message-passing inner loop.

Two interchangeable backends compute identical results:

* ``numba`` -- fused ``@njit`` edge loops (the default whenever numba
  imports cleanly); no per-edge temporaries are materialized,
* ``numpy``  -- a pure-numpy path built on ufunc.at scatters and einsum.

Selection is controlled by the ``REWARDGRAPH_NUMBA`` environment variable:
``0``/``off`` forces the numpy path, ``1``/``on`` requires numba (an import
error becomes fatal), anything else means "numba if available". The
``benchmarks/bench_kernels.py`` script times one backend against the other.

Shapes: ``states`` are (n_nodes, heads, hidden) per-head transformed node
states; ``src``/``dst`` are int64 edge endpoint indices; ``att`` is the
(heads, hidden) stack of attention vectors.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "segment_sum",
    "segment_softmax",
    "edge_logits",
    "edge_messages",
    "edge_dalpha",
    "edge_backward",
    "available_backends",
]


# ---------------------------------------------------------------------------
# numpy backend


def _np_segment_sum(values, segments, n_segments):
    out = np.zeros((n_segments, values.shape[1]))
    np.add.at(out, segments, values)
    return out


def _np_segment_softmax(logits, segments, n_segments):
    if logits.shape[0] == 0:
        return np.empty_like(logits)
    peak = np.full((n_segments, logits.shape[1]), -np.inf)
    np.maximum.at(peak, segments, logits)
    shifted = np.exp(logits - peak[segments])
    denom = np.zeros((n_segments, logits.shape[1]))
    np.add.at(denom, segments, shifted)
    return shifted / denom[segments]


def _np_edge_logits(states_src, states_dst, src, dst, att, slope):
    pre = states_src[src] + states_dst[dst]
    act = np.where(pre > 0.0, pre, slope * pre)
    return np.einsum("emh,mh->em", act, att)


def _np_edge_messages(states_src, alpha, src, dst, n_dst):
    n_heads, hidden = states_src.shape[1], states_src.shape[2]
    weighted = (alpha[:, :, None] * states_src[src]).reshape(len(src), n_heads * hidden)
    out = np.zeros((n_dst, n_heads * hidden))
    np.add.at(out, dst, weighted)
    return out.reshape(n_dst, n_heads, hidden).mean(axis=1)


def _np_edge_dalpha(states_src, grad_node, src, dst):
    return np.einsum("eh,emh->em", grad_node[dst], states_src[src])


def _np_edge_backward(states_src, states_dst, att, alpha, d_logit, grad_node,
                      src, dst, slope):
    pre = states_src[src] + states_dst[dst]
    act = np.where(pre > 0.0, pre, slope * pre)
    d_att = np.einsum("em,emh->mh", d_logit, act)
    d_pre = d_logit[:, :, None] * att[None, :, :]
    d_pre *= np.where(pre > 0.0, 1.0, slope)
    d_src_rows = d_pre + alpha[:, :, None] * grad_node[dst][:, None, :]
    width = states_src.shape[1] * states_src.shape[2]
    d_states_src = np.zeros((states_src.shape[0], width))
    np.add.at(d_states_src, src, d_src_rows.reshape(len(src), width))
    d_states_dst = np.zeros((states_dst.shape[0], width))
    np.add.at(d_states_dst, dst, d_pre.reshape(len(dst), width))
    return (d_states_src.reshape(states_src.shape),
            d_states_dst.reshape(states_dst.shape), d_att)


# ---------------------------------------------------------------------------
# numba backend


def _build_numba():
    from numba import njit

    @njit(cache=True)
    def nb_segment_sum(values, segments, n_segments):
        rows, cols = values.shape
        out = np.zeros((n_segments, cols))
        for e in range(rows):
            s = segments[e]
            for c in range(cols):
                out[s, c] += values[e, c]
        return out

    @njit(cache=True)
    def nb_segment_softmax(logits, segments, n_segments):
        rows, cols = logits.shape
        peak = np.full((n_segments, cols), -np.inf)
        for e in range(rows):
            s = segments[e]
            for c in range(cols):
                if logits[e, c] > peak[s, c]:
                    peak[s, c] = logits[e, c]
        out = np.empty((rows, cols))
        denom = np.zeros((n_segments, cols))
        for e in range(rows):
            s = segments[e]
            for c in range(cols):
                v = np.exp(logits[e, c] - peak[s, c])
                out[e, c] = v
                denom[s, c] += v
        for e in range(rows):
            s = segments[e]
            for c in range(cols):
                out[e, c] /= denom[s, c]
        return out

    @njit(cache=True)
    def nb_edge_logits(states_src, states_dst, src, dst, att, slope):
        n_edges = src.shape[0]
        n_heads, hidden = att.shape
        out = np.empty((n_edges, n_heads))
        for e in range(n_edges):
            s, d = src[e], dst[e]
            for m in range(n_heads):
                acc = 0.0
                for h in range(hidden):
                    v = states_src[s, m, h] + states_dst[d, m, h]
                    if v <= 0.0:
                        v *= slope
                    acc += v * att[m, h]
                out[e, m] = acc
        return out

    @njit(cache=True)
    def nb_edge_messages(states_src, alpha, src, dst, n_dst):
        n_edges = src.shape[0]
        n_heads = alpha.shape[1]
        hidden = states_src.shape[2]
        out = np.zeros((n_dst, hidden))
        for e in range(n_edges):
            s, d = src[e], dst[e]
            for m in range(n_heads):
                a = alpha[e, m]
                for h in range(hidden):
                    out[d, h] += a * states_src[s, m, h]
        return out / n_heads

    @njit(cache=True)
    def nb_edge_dalpha(states_src, grad_node, src, dst):
        n_edges = src.shape[0]
        n_heads = states_src.shape[1]
        hidden = states_src.shape[2]
        out = np.empty((n_edges, n_heads))
        for e in range(n_edges):
            s, d = src[e], dst[e]
            for m in range(n_heads):
                acc = 0.0
                for h in range(hidden):
                    acc += grad_node[d, h] * states_src[s, m, h]
                out[e, m] = acc
        return out

    @njit(cache=True)
    def nb_edge_backward(states_src, states_dst, att, alpha, d_logit, grad_node,
                         src, dst, slope):
        n_edges = src.shape[0]
        n_heads, hidden = att.shape
        d_states_src = np.zeros(states_src.shape)
        d_states_dst = np.zeros(states_dst.shape)
        d_att = np.zeros((n_heads, hidden))
        for e in range(n_edges):
            s, d = src[e], dst[e]
            for m in range(n_heads):
                dl = d_logit[e, m]
                a = alpha[e, m]
                for h in range(hidden):
                    pre = states_src[s, m, h] + states_dst[d, m, h]
                    if pre > 0.0:
                        d_att[m, h] += dl * pre
                        d_pre = dl * att[m, h]
                    else:
                        d_att[m, h] += dl * slope * pre
                        d_pre = dl * att[m, h] * slope
                    d_states_src[s, m, h] += d_pre + a * grad_node[d, h]
                    d_states_dst[d, m, h] += d_pre
        return d_states_src, d_states_dst, d_att

    return {
        "segment_sum": nb_segment_sum,
        "segment_softmax": nb_segment_softmax,
        "edge_logits": nb_edge_logits,
        "edge_messages": nb_edge_messages,
        "edge_dalpha": nb_edge_dalpha,
        "edge_backward": nb_edge_backward,
    }


_NUMPY_IMPLS = {
    "segment_sum": _np_segment_sum,
    "segment_softmax": _np_segment_softmax,
    "edge_logits": _np_edge_logits,
    "edge_messages": _np_edge_messages,
    "edge_dalpha": _np_edge_dalpha,
    "edge_backward": _np_edge_backward,
}

_flag = os.environ.get("REWARDGRAPH_NUMBA", "auto").strip().lower()
_impls = None
if _flag not in ("0", "off", "false", "no"):
    try:
        _impls = _build_numba()
    except ImportError:
        if _flag in ("1", "on", "true", "yes"):
            raise
        _impls = None

if _impls is not None:
    BACKEND = "numba"
else:
    BACKEND = "numpy"
    _impls = _NUMPY_IMPLS

segment_sum = _impls["segment_sum"]
segment_softmax = _impls["segment_softmax"]
edge_logits = _impls["edge_logits"]
edge_messages = _impls["edge_messages"]
edge_dalpha = _impls["edge_dalpha"]
edge_backward = _impls["edge_backward"]


def available_backends() -> dict[str, dict]:
    """Backend name -> kernel table, for parity tests and benchmarks."""
    table = {"numpy": dict(_NUMPY_IMPLS)}
    try:
        table["numba"] = _build_numba()
    except ImportError:
        pass
    return table
