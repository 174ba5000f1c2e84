#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times each hot kernel on edge sets shaped like a desk-scale warmup graph,
then a whole-graph forward+score pass with each backend wired in. Run:

    python3 benchmarks/bench_kernels.py [--edges 2000] [--repeats 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import rewardgraph as rg
import rewardgraph.model as model_mod
from rewardgraph.kernels import available_backends
from rewardgraph.tensor import make_rng


def time_fn(fn, repeats):
    fn()  # warmup (numba compiles here)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench_kernels(n_edges, repeats):
    rng = make_rng(0)
    n_src, n_dst, heads, hidden = 600, 600, 4, 32
    states_src = rng.standard_normal((n_src, heads, hidden))
    states_dst = rng.standard_normal((n_dst, heads, hidden))
    src = rng.integers(0, n_src, n_edges)
    dst = rng.integers(0, n_dst, n_edges)
    att = rng.standard_normal((heads, hidden))
    alpha = rng.random((n_edges, heads))
    d_logit = rng.standard_normal((n_edges, heads))
    grad_node = rng.standard_normal((n_dst, hidden))
    values = rng.standard_normal((n_edges, heads))

    calls = {
        "segment_sum": lambda k: k["segment_sum"](values, dst, n_dst),
        "segment_softmax": lambda k: k["segment_softmax"](values, dst, n_dst),
        "edge_logits": lambda k: k["edge_logits"](states_src, states_dst, src,
                                                  dst, att, 0.2),
        "edge_messages": lambda k: k["edge_messages"](states_src, alpha, src,
                                                      dst, n_dst),
        "edge_dalpha": lambda k: k["edge_dalpha"](states_src, grad_node, src, dst),
        "edge_backward": lambda k: k["edge_backward"](states_src, states_dst, att,
                                                      alpha, d_logit, grad_node,
                                                      src, dst, 0.2),
    }
    backends = available_backends()
    print(f"\nper-kernel mean time over {repeats} calls "
          f"({n_edges} edges, {heads} heads, hidden {hidden}):")
    header = f"{'kernel':<18}" + "".join(f"{name:>12}" for name in backends)
    print(header)
    for kernel_name, call in calls.items():
        row = f"{kernel_name:<18}"
        times = {}
        for backend_name, table in backends.items():
            times[backend_name] = time_fn(lambda: call(table), repeats)
            row += f"{times[backend_name] * 1e6:>10.1f}us"
        if {"numpy", "numba"} <= times.keys():
            row += f"   x{times['numpy'] / times['numba']:.1f}"
        print(row)


def bench_forward(repeats):
    store = rg.synth_generate(rg.SynthConfig(seed=0))
    split = rg.split_labels(store, rg.LabelBudget(gt_ratio=0.2, seed=0))
    graph = rg.build_warmup(split, k=7)
    model = rg.init_model(rg.GnnConfig(input_dim=16, seed=0))
    query = split.split_queries("val")[0]
    overlay = rg.attach_query(graph, query)

    print(f"\nfull forward+score over the warmup graph "
          f"({graph.n_queries} queries, {graph.n_rollouts} rollouts):")
    backends = available_backends()
    times = {}
    for name, table in backends.items():
        for attr, fn in table.items():
            setattr(model_mod._k, attr, fn)
        times[name] = time_fn(lambda: model_mod.score_graph(model, overlay),
                              max(10, repeats // 10))
        print(f"  {name:>6}: {times[name] * 1e3:8.2f} ms per overlay scoring")
    if {"numpy", "numba"} <= times.keys():
        print(f"  speedup: x{times['numpy'] / times['numba']:.1f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--edges", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    print(f"active backend: {rg.BACKEND}")
    bench_kernels(args.edges, args.repeats)
    bench_forward(args.repeats)


if __name__ == "__main__":
    main()
