"""Small fully connected classifier with two tap points.

The network serves both the source and target streams (shared weights).
Two activations are exposed for discrepancy losses: ``rep`` (output of the
penultimate layer) and ``logits`` (output of the final, identity layer).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec, ShapeMismatch
from .numerics import as_matrix, derived_rng

ACTIVATIONS = ("relu", "identity")


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str


def specs_from_dims(dims) -> tuple[LayerSpec, ...]:
    """Layer chain from a dim list [in, hidden..., classes]: ReLU hidden, identity last."""
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2:
        raise InvalidSpec("need at least [input_dim, output_dim]")
    acts = ["relu"] * (len(dims) - 2) + ["identity"]
    return tuple(
        LayerSpec(dims[i], dims[i + 1], acts[i]) for i in range(len(dims) - 1)
    )


@dataclass
class Network:
    specs: tuple[LayerSpec, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def num_layers(self) -> int:
        return len(self.specs)

    @property
    def num_classes(self) -> int:
        return self.specs[-1].out_dim

    @property
    def in_dim(self) -> int:
        return self.specs[0].in_dim

    def copy(self) -> "Network":
        return Network(self.specs, [w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass(frozen=True)
class ForwardTrace:
    """Everything the backward pass needs for one batch."""

    inputs: np.ndarray
    preacts: list[np.ndarray]
    acts: list[np.ndarray]
    rep: np.ndarray
    logits: np.ndarray


@dataclass
class ParamGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class OptState:
    """SGD momentum velocities, one pair per layer."""

    vel_w: list[np.ndarray] = field(default_factory=list)
    vel_b: list[np.ndarray] = field(default_factory=list)


def _validate_specs(specs):
    if not specs:
        raise InvalidSpec("layer spec list is empty")
    for s in specs:
        if s.in_dim < 1 or s.out_dim < 1:
            raise InvalidSpec(f"layer dims must be >= 1, got {s}")
        if s.activation not in ACTIVATIONS:
            raise InvalidSpec(f"unknown activation {s.activation!r}")
    for a, b in zip(specs, specs[1:]):
        if a.out_dim != b.in_dim:
            raise InvalidSpec(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")
    if specs[-1].activation != "identity":
        raise InvalidSpec("final layer must use the identity activation")


def init_network(specs, seed: int) -> Network:
    """Glorot-uniform weights, zero biases, deterministic under seed."""
    specs = tuple(specs)
    _validate_specs(specs)
    rng = derived_rng(seed, 0)
    weights, biases = [], []
    for s in specs:
        bound = np.sqrt(6.0 / (s.in_dim + s.out_dim))
        weights.append(rng.uniform(-bound, bound, size=(s.in_dim, s.out_dim)))
        biases.append(np.zeros(s.out_dim))
    return Network(specs, weights, biases)


def forward(net: Network, batch) -> ForwardTrace:
    """Run the batch through every layer, capturing all intermediates."""
    X = as_matrix(batch)
    if X.shape[1] != net.in_dim:
        raise ShapeMismatch(f"batch has {X.shape[1]} features, network expects {net.in_dim}")
    a = X
    preacts, acts = [], []
    for spec, W, b in zip(net.specs, net.weights, net.biases):
        z = a @ W + b
        a = np.maximum(z, 0.0) if spec.activation == "relu" else z
        preacts.append(z)
        acts.append(a)
    rep = acts[-2] if net.num_layers >= 2 else X
    return ForwardTrace(X, preacts, acts, rep, acts[-1])


def backward(net: Network, contributions) -> ParamGrads:
    """Exact parameter gradients, accumulated over traces.

    ``contributions`` is a sequence of (trace, rep_grad, logit_grad) with
    either gradient optionally None. rep_grad is injected at the penultimate
    layer's output on the way down.
    """
    L = net.num_layers
    gw = [np.zeros_like(w) for w in net.weights]
    gb = [np.zeros_like(b) for b in net.biases]
    for trace, rep_grad, logit_grad in contributions:
        if logit_grad is not None and logit_grad.shape != trace.logits.shape:
            raise ShapeMismatch("logit gradient shape does not match trace")
        if rep_grad is not None and rep_grad.shape != trace.rep.shape:
            raise ShapeMismatch("rep gradient shape does not match trace")
        da = logit_grad if logit_grad is not None else np.zeros_like(trace.logits)
        for i in range(L - 1, -1, -1):
            if net.specs[i].activation == "relu":
                dz = da * (trace.preacts[i] > 0.0)
            else:
                dz = da
            a_prev = trace.acts[i - 1] if i > 0 else trace.inputs
            gw[i] += a_prev.T @ dz
            gb[i] += dz.sum(axis=0)
            if i > 0:
                da = dz @ net.weights[i].T
                if i - 1 == L - 2 and rep_grad is not None:
                    da = da + rep_grad
    return ParamGrads(gw, gb)


def sgd_step(net: Network, grads: ParamGrads, lr: float, momentum: float,
             weight_decay: float, state: OptState | None) -> tuple[Network, OptState]:
    """Momentum SGD update, in place. Weight decay skips biases.

    v <- momentum*v - lr*(grad + weight_decay*param); param <- param + v
    """
    if state is None or not state.vel_w:
        state = OptState([np.zeros_like(w) for w in net.weights],
                         [np.zeros_like(b) for b in net.biases])
    for i in range(net.num_layers):
        if grads.weights[i].shape != net.weights[i].shape:
            raise ShapeMismatch(f"weight grad shape mismatch at layer {i}")
        state.vel_w[i] = momentum * state.vel_w[i] - lr * (grads.weights[i] + weight_decay * net.weights[i])
        net.weights[i] += state.vel_w[i]
        state.vel_b[i] = momentum * state.vel_b[i] - lr * grads.biases[i]
        net.biases[i] += state.vel_b[i]
    return net, state
