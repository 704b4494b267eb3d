"""Single-hidden-layer tanh networks with hand-written backprop and Adam.

A network computes ``w2 @ tanh(w1 @ x + bias1) + bias2``. Inputs are batched
row-wise: ``x`` has shape ``(N, input_dim)`` (a 1-D vector is treated as a
batch of one and returned 1-D).

Checkpoint layout (JSON, one object, written with sorted keys)::

    {"format": "ledkkl.dense_net/1",
     "input_dim": int, "hidden_dim": int, "output_dim": int, "seed": int | null,
     "w1": [hidden*input floats, row-major], "bias1": [hidden floats],
     "w2": [output*hidden floats, row-major], "bias2": [output floats],
     "meta": {...}}

Floats are written with ``repr`` so a save/load cycle is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT = "ledkkl.dense_net/1"
PARAM_NAMES = ("w1", "bias1", "w2", "bias2")


@dataclass(frozen=True)
class NetworkParams:
    w1: np.ndarray
    bias1: np.ndarray
    w2: np.ndarray
    bias2: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        h, n = self.w1.shape
        m, h2 = self.w2.shape
        if h2 != h or self.bias1.shape != (h,) or self.bias2.shape != (m,):
            raise ValueError(
                f"inconsistent shapes: w1 {self.w1.shape}, bias1 {self.bias1.shape}, "
                f"w2 {self.w2.shape}, bias2 {self.bias2.shape}"
            )

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    def arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, k) for k in PARAM_NAMES)

    def replace(self, **arrays) -> "NetworkParams":
        kw = {k: getattr(self, k) for k in PARAM_NAMES}
        kw.update(arrays)
        return NetworkParams(seed=self.seed, **kw)

    def __call__(self, x):
        return forward(self, x)


def zeros_like(net: NetworkParams) -> NetworkParams:
    return NetworkParams(*(np.zeros_like(a) for a in net.arrays()), seed=net.seed)


def init_network(input_dim: int, hidden_dim: int, output_dim: int, seed: int) -> NetworkParams:
    """Glorot-uniform weights, zero biases."""
    if min(input_dim, hidden_dim, output_dim) < 1:
        raise ValueError("network dimensions must be positive")
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(6.0 / (input_dim + hidden_dim))
    lim2 = np.sqrt(6.0 / (hidden_dim + output_dim))
    return NetworkParams(
        w1=rng.uniform(-lim1, lim1, size=(hidden_dim, input_dim)),
        bias1=np.zeros(hidden_dim),
        w2=rng.uniform(-lim2, lim2, size=(output_dim, hidden_dim)),
        bias2=np.zeros(output_dim),
        seed=seed,
    )


def _as_batch(net: NetworkParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ValueError(f"expected input with {net.input_dim} features, got shape {x.shape}")
    return x, single


def forward(net: NetworkParams, x) -> np.ndarray:
    xb, single = _as_batch(net, x)
    out = np.tanh(xb @ net.w1.T + net.bias1) @ net.w2.T + net.bias2
    return out[0] if single else out


def forward_with_cache(net: NetworkParams, x) -> tuple[np.ndarray, np.ndarray]:
    """Batched forward that also returns the hidden activations for :func:`backward`."""
    xb, _ = _as_batch(net, x)
    hidden = np.tanh(xb @ net.w1.T + net.bias1)
    return hidden @ net.w2.T + net.bias2, hidden


def backward(net: NetworkParams, x, upstream, hidden: np.ndarray | None = None):
    """Gradients of ``sum_n <upstream_n, forward(net, x_n)>``.

    Returns ``(grads, grad_x)`` where ``grads`` is a :class:`NetworkParams`
    holding the parameter gradients summed over the batch and ``grad_x`` has
    the shape of ``x``.
    """
    xb, single = _as_batch(net, x)
    g = np.atleast_2d(np.asarray(upstream, dtype=float))
    if g.shape != (xb.shape[0], net.output_dim):
        raise ValueError(f"upstream gradient shape {g.shape} does not match output ({xb.shape[0]}, {net.output_dim})")
    if hidden is None:
        hidden = np.tanh(xb @ net.w1.T + net.bias1)
    grad_w2 = g.T @ hidden
    grad_b2 = g.sum(axis=0)
    g_pre = (g @ net.w2) * (1.0 - hidden**2)
    grad_w1 = g_pre.T @ xb
    grad_b1 = g_pre.sum(axis=0)
    grad_x = g_pre @ net.w1
    grads = NetworkParams(w1=grad_w1, bias1=grad_b1, w2=grad_w2, bias2=grad_b2, seed=net.seed)
    return grads, (grad_x[0] if single else grad_x)


@dataclass(frozen=True)
class AdamState:
    m: NetworkParams
    v: NetworkParams
    step: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_network(cls, net: NetworkParams, **hyper) -> "AdamState":
        return cls(m=zeros_like(net), v=zeros_like(net), **hyper)


def adam_step(net: NetworkParams, grads: NetworkParams, state: AdamState,
              learning_rate: float | None = None) -> tuple[NetworkParams, AdamState]:
    """Bias-corrected Adam update; ``learning_rate`` overrides the state's rate for this step."""
    lr = state.learning_rate if learning_rate is None else learning_rate
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_p, new_m, new_v = {}, {}, {}
    for k in PARAM_NAMES:
        g = getattr(grads, k)
        m = b1 * getattr(state.m, k) + (1.0 - b1) * g
        v = b2 * getattr(state.v, k) + (1.0 - b2) * g * g
        new_p[k] = getattr(net, k) - lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
        new_m[k], new_v[k] = m, v
    return (
        net.replace(**new_p),
        AdamState(m=state.m.replace(**new_m), v=state.v.replace(**new_v), step=t,
                  learning_rate=state.learning_rate, beta1=b1, beta2=b2, epsilon=state.epsilon),
    )


def save_checkpoint(net: NetworkParams, path, meta: dict | None = None) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "input_dim": net.input_dim,
        "hidden_dim": net.hidden_dim,
        "output_dim": net.output_dim,
        "seed": net.seed,
        "meta": meta or {},
    }
    for k in PARAM_NAMES:
        doc[k] = [float(v) for v in getattr(net, k).ravel()]
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def load_checkpoint(path) -> tuple[NetworkParams, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    n, h, m = doc["input_dim"], doc["hidden_dim"], doc["output_dim"]
    shapes = {"w1": (h, n), "bias1": (h,), "w2": (m, h), "bias2": (m,)}
    arrays = {k: np.asarray(doc[k], dtype=float).reshape(shapes[k]) for k in PARAM_NAMES}
    return NetworkParams(seed=doc["seed"], **arrays), doc.get("meta", {})
