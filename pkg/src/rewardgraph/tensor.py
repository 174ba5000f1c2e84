"""Dense float64 linear algebra with explicit forward/backward pairs.

There is no autodiff tape: every operation exposes its backward rule and the
caller composes them. Matrices are plain 2-D float64 ndarrays; public
operations validate shapes and guarantee finite outputs. Randomness comes
from numpy's PCG64 so identical seeds reproduce identical streams on every
platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernels import segment_softmax as _segment_softmax_2d
from .kernels import segment_sum as _segment_sum_2d

__all__ = [
    "make_rng",
    "as_matrix",
    "ensure_finite",
    "matmul",
    "matmul_backward",
    "relu",
    "relu_backward",
    "leaky_relu",
    "leaky_relu_backward",
    "sigmoid",
    "sigmoid_backward",
    "activation",
    "activation_backward",
    "segment_softmax",
    "segment_softmax_backward",
    "segment_sum",
    "ParamEntry",
    "ParamStore",
    "adam_step",
    "grad_check",
]


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator (PCG64) for the given 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def ensure_finite(a: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise FloatingPointError(f"non-finite values in {what}")
    return a


# ---------------------------------------------------------------------------
# matmul


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return ensure_finite(a @ b, "matmul output")


def matmul_backward(a, b, grad_out) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``a @ b`` w.r.t. both operands given the output gradient."""
    a, b, g = as_matrix(a), as_matrix(b), as_matrix(grad_out)
    return g @ b.T, a.T @ g


# ---------------------------------------------------------------------------
# elementwise activations


def relu(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(x, grad_out) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.asarray(grad_out, dtype=np.float64) * (x > 0.0)


def leaky_relu(x, slope: float = 0.2) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0.0, x, slope * x)


def leaky_relu_backward(x, grad_out, slope: float = 0.2) -> np.ndarray:
    # derivative at exactly 0 is defined as the slope
    x = np.asarray(x, dtype=np.float64)
    return np.asarray(grad_out, dtype=np.float64) * np.where(x > 0.0, 1.0, slope)


def sigmoid(x) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(x, grad_out) -> np.ndarray:
    s = sigmoid(x)
    return np.asarray(grad_out, dtype=np.float64) * s * (1.0 - s)


def activation(x, kind: str, slope: float = 0.2) -> np.ndarray:
    if kind == "relu":
        return relu(x)
    if kind == "leaky_relu":
        return leaky_relu(x, slope)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown activation kind {kind!r}")


def activation_backward(x, grad_out, kind: str, slope: float = 0.2) -> np.ndarray:
    if kind == "relu":
        return relu_backward(x, grad_out)
    if kind == "leaky_relu":
        return leaky_relu_backward(x, grad_out, slope)
    if kind == "sigmoid":
        return sigmoid_backward(x, grad_out)
    raise ValueError(f"unknown activation kind {kind!r}")


# ---------------------------------------------------------------------------
# segment softmax (normalizes attention logits per destination node)


def segment_softmax(scores, segments) -> np.ndarray:
    """Softmax within each segment of a flat score array.

    Segments may appear in any order; each output segment is positive and
    sums to 1. Empty input yields empty output.
    """
    scores = np.asarray(scores, dtype=np.float64)
    segments = np.asarray(segments, dtype=np.int64)
    if scores.ndim != 1 or segments.shape != scores.shape:
        raise ValueError("scores and segments must be matching 1-D arrays")
    if scores.size == 0:
        return np.empty(0)
    n = int(segments.max()) + 1
    return ensure_finite(
        _segment_softmax_2d(scores[:, None], segments, n)[:, 0], "segment_softmax"
    )


def segment_softmax_backward(probs, segments, grad_out) -> np.ndarray:
    """Backward of segment_softmax given its output ``probs``."""
    probs = np.asarray(probs, dtype=np.float64)
    segments = np.asarray(segments, dtype=np.int64)
    g = np.asarray(grad_out, dtype=np.float64)
    if probs.size == 0:
        return np.empty(0)
    n = int(segments.max()) + 1
    weighted = probs * g
    inner = _segment_sum_2d(weighted[:, None], segments, n)[:, 0]
    return weighted - probs * inner[segments]


def segment_sum(values, segments, n_segments: int) -> np.ndarray:
    """Row-wise scatter-add of a 2-D array into ``n_segments`` buckets."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    segments = np.ascontiguousarray(segments, dtype=np.int64)
    return _segment_sum_2d(values, segments, int(n_segments))


# ---------------------------------------------------------------------------
# parameter store and Adam


@dataclass
class ParamEntry:
    value: np.ndarray
    grad: np.ndarray
    adam_m: np.ndarray
    adam_v: np.ndarray


@dataclass
class ParamStore:
    """Named learnable matrices with their gradient and Adam moment buffers.

    Single-owner mutable state; every other structure in the package is
    immutable after construction.
    """

    entries: dict[str, ParamEntry] = field(default_factory=dict)
    step: int = 0

    def add(self, name: str, value) -> np.ndarray:
        if name in self.entries:
            raise ValueError(f"duplicate parameter {name!r}")
        value = as_matrix(value).copy()
        self.entries[name] = ParamEntry(
            value=value,
            grad=np.zeros_like(value),
            adam_m=np.zeros_like(value),
            adam_v=np.zeros_like(value),
        )
        return value

    def __getitem__(self, name: str) -> ParamEntry:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def names(self) -> list[str]:
        return list(self.entries)

    def value(self, name: str) -> np.ndarray:
        return self.entries[name].value

    def accumulate(self, name: str, grad: np.ndarray) -> None:
        self.entries[name].grad += grad

    def zero_grads(self) -> None:
        for entry in self.entries.values():
            entry.grad[...] = 0.0

    def n_params(self) -> int:
        return sum(e.value.size for e in self.entries.values())

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: e.value.copy() for name, e in self.entries.items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        for name, value in snapshot.items():
            self.entries[name].value[...] = value


def adam_step(
    store: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> ParamStore:
    """One bias-corrected Adam update over every entry; grads are zeroed."""
    store.step += 1
    mc = 1.0 - beta1**store.step
    vc = 1.0 - beta2**store.step
    for name, e in store.entries.items():
        e.adam_m *= beta1
        e.adam_m += (1.0 - beta1) * e.grad
        e.adam_v *= beta2
        e.adam_v += (1.0 - beta2) * (e.grad * e.grad)
        e.value -= lr * (e.adam_m / mc) / (np.sqrt(e.adam_v / vc) + eps)
        ensure_finite(e.value, f"parameter {name!r} after adam_step")
        e.grad[...] = 0.0
    return store


def grad_check(
    loss_fn: Callable[[ParamStore], float],
    store: ParamStore,
    eps: float = 1e-5,
    names: list[str] | None = None,
) -> float:
    """Central-difference check of the gradients already stored in ``store``.

    ``loss_fn`` must be a deterministic scalar function of the parameter
    values (it must not touch the grad buffers). Returns the worst relative
    error max |analytic - numeric| / max(1e-8, |analytic| + |numeric|) over
    all checked coordinates.
    """
    worst = 0.0
    for name in names if names is not None else store.names():
        entry = store[name]
        flat_value = entry.value.ravel()
        flat_grad = entry.grad.ravel()
        for i in range(flat_value.size):
            orig = flat_value[i]
            flat_value[i] = orig + eps
            f_plus = float(loss_fn(store))
            flat_value[i] = orig - eps
            f_minus = float(loss_fn(store))
            flat_value[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise FloatingPointError(
                    f"non-finite loss while perturbing {name!r}[{i}]"
                )
            numeric = (f_plus - f_minus) / (2.0 * eps)
            analytic = flat_grad[i]
            rel = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
            if rel > worst:
                worst = rel
    return worst
