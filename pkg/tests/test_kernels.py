"""Backend parity tests: the numba kernels must match the numpy fallbacks."""

import numpy as np
import pytest

from rewardgraph.kernels import BACKEND, available_backends
from rewardgraph.tensor import make_rng

BACKENDS = available_backends()
needs_numba = pytest.mark.skipif("numba" not in BACKENDS,
                                 reason="numba not importable")


def random_problem(seed, n_src=9, n_dst=6, n_edges=40, heads=3, hidden=5):
    rng = make_rng(seed)
    return {
        "states_src": rng.standard_normal((n_src, heads, hidden)),
        "states_dst": rng.standard_normal((n_dst, heads, hidden)),
        "src": rng.integers(0, n_src, n_edges),
        "dst": rng.integers(0, n_dst, n_edges),
        "att": rng.standard_normal((heads, hidden)),
        "alpha": rng.random((n_edges, heads)),
        "d_logit": rng.standard_normal((n_edges, heads)),
        "grad_node": rng.standard_normal((n_dst, hidden)),
        "n_dst": n_dst,
    }


def test_backend_flag_report():
    assert BACKEND in ("numpy", "numba")
    assert "numpy" in BACKENDS


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_segment_kernels_agree(seed):
    rng = make_rng(seed)
    values = rng.standard_normal((30, 4))
    segments = rng.integers(0, 7, 30)
    for name, tol in (("segment_sum", 1e-12), ("segment_softmax", 1e-13)):
        a = BACKENDS["numpy"][name](values, segments, 7)
        b = BACKENDS["numba"][name](values, segments, 7)
        assert np.max(np.abs(a - b)) < tol


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_edge_kernels_agree(seed):
    p = random_problem(seed)
    np_k, nb_k = BACKENDS["numpy"], BACKENDS["numba"]
    logits_np = np_k["edge_logits"](p["states_src"], p["states_dst"],
                                    p["src"], p["dst"], p["att"], 0.2)
    logits_nb = nb_k["edge_logits"](p["states_src"], p["states_dst"],
                                    p["src"], p["dst"], p["att"], 0.2)
    assert np.max(np.abs(logits_np - logits_nb)) < 1e-12

    msg_np = np_k["edge_messages"](p["states_src"], p["alpha"], p["src"],
                                   p["dst"], p["n_dst"])
    msg_nb = nb_k["edge_messages"](p["states_src"], p["alpha"], p["src"],
                                   p["dst"], p["n_dst"])
    assert np.max(np.abs(msg_np - msg_nb)) < 1e-12

    da_np = np_k["edge_dalpha"](p["states_src"], p["grad_node"], p["src"], p["dst"])
    da_nb = nb_k["edge_dalpha"](p["states_src"], p["grad_node"], p["src"], p["dst"])
    assert np.max(np.abs(da_np - da_nb)) < 1e-12

    bw_np = np_k["edge_backward"](p["states_src"], p["states_dst"], p["att"],
                                  p["alpha"], p["d_logit"], p["grad_node"],
                                  p["src"], p["dst"], 0.2)
    bw_nb = nb_k["edge_backward"](p["states_src"], p["states_dst"], p["att"],
                                  p["alpha"], p["d_logit"], p["grad_node"],
                                  p["src"], p["dst"], 0.2)
    for a, b in zip(bw_np, bw_nb):
        assert np.max(np.abs(a - b)) < 1e-12


@needs_numba
def test_empty_edge_sets():
    empty = np.empty(0, dtype=np.int64)
    states = np.zeros((3, 2, 4))
    att = np.zeros((2, 4))
    for kernels in BACKENDS.values():
        logits = kernels["edge_logits"](states, states, empty, empty, att, 0.2)
        assert logits.shape == (0, 2)
        msg = kernels["edge_messages"](states, np.zeros((0, 2)), empty, empty, 3)
        assert msg.shape == (3, 4) and not msg.any()


@needs_numba
def test_scores_match_across_backends_end_to_end(monkeypatch):
    # run the same forward with each backend wired in
    import rewardgraph.model as model_mod
    import rewardgraph as rg

    store = rg.synth_generate(rg.SynthConfig(
        num_clusters=2, queries_per_cluster=6, rollouts_per_query=3,
        embedding_dim=8, cluster_noise=0.5, seed=12))
    split = rg.split_labels(store, rg.LabelBudget(gt_ratio=1.0, seed=0))
    graph = rg.build_warmup(split, k=3)
    model = rg.init_model(rg.GnnConfig(input_dim=8, hidden_dim=16, heads=2, seed=12))

    results = {}
    for name, kernels in BACKENDS.items():
        for attr, fn in kernels.items():
            monkeypatch.setattr(model_mod._k, attr, fn)
        results[name], _ = model_mod.score_graph(model, graph)
    assert np.max(np.abs(results["numpy"] - results["numba"])) < 1e-10
