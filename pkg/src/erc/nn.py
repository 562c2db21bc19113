"""Feed-forward networks with hand-written backprop, Adam and Polyak updates.

Parameters live in one flat float64 vector so that optimizers, target
updates and checkpoints work on a single array.  Layer weights are exposed
as reshaped views into that vector, so in-place updates of ``values`` are
visible through ``weights``/``biases`` without copying.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

HIDDEN_ACTIVATIONS = ("tanh", "relu")
OUTPUT_ACTIVATIONS = ("linear", "sigmoid")

_MAGIC = b"ERCP"
_BLOB_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    output_dim: int
    hidden_dims: tuple[int, ...] = (100, 100)
    hidden_activation: str = "tanh"
    output_activation: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(int(d) < 1 for d in dims):
            raise ValueError(f"all layer sizes must be >= 1, got {dims}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        return list(zip(dims[:-1], dims[1:]))

    @property
    def n_params(self) -> int:
        return sum((fan_in + 1) * fan_out for fan_in, fan_out in self.layer_dims)


class ParameterSet:
    """Flat parameter vector plus a (layer, weight/bias) -> slice layout."""

    def __init__(self, spec: MlpSpec, values: np.ndarray | None = None):
        self.spec = spec
        if values is None:
            values = np.zeros(spec.n_params)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != (spec.n_params,):
            raise ValueError(f"expected {spec.n_params} parameters, got shape {values.shape}")
        self.values = values
        self.layout: dict[tuple[int, str], slice] = {}
        offset = 0
        for i, (fan_in, fan_out) in enumerate(spec.layer_dims):
            self.layout[(i, "W")] = slice(offset, offset + fan_in * fan_out)
            offset += fan_in * fan_out
            self.layout[(i, "b")] = slice(offset, offset + fan_out)
            offset += fan_out
        self._bind_views()

    def _bind_views(self):
        self.weights = []
        self.biases = []
        for i, (fan_in, fan_out) in enumerate(self.spec.layer_dims):
            self.weights.append(self.values[self.layout[(i, "W")]].reshape(fan_in, fan_out))
            self.biases.append(self.values[self.layout[(i, "b")]])

    def copy(self) -> ParameterSet:
        return ParameterSet(self.spec, self.values.copy())

    def zeros_like(self) -> np.ndarray:
        return np.zeros_like(self.values)

    def __len__(self):
        return self.values.size

    def to_bytes(self) -> bytes:
        s = self.spec
        header = struct.pack(
            "<4sHIIBBI",
            _MAGIC,
            _BLOB_VERSION,
            s.input_dim,
            s.output_dim,
            HIDDEN_ACTIVATIONS.index(s.hidden_activation),
            OUTPUT_ACTIVATIONS.index(s.output_activation),
            len(s.hidden_dims),
        )
        hidden = struct.pack(f"<{len(s.hidden_dims)}I", *s.hidden_dims)
        return header + hidden + self.values.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> ParameterSet:
        params, _ = cls.read_from(blob, 0)
        return params

    @classmethod
    def read_from(cls, blob: bytes, offset: int) -> tuple[ParameterSet, int]:
        """Decode one blob starting at ``offset``; return it and the end offset."""
        head = struct.calcsize("<4sHIIBBI")
        magic, version, n_in, n_out, h_act, o_act, n_hidden = struct.unpack_from(
            "<4sHIIBBI", blob, offset
        )
        if magic != _MAGIC:
            raise ValueError("not a parameter blob (bad magic)")
        if version != _BLOB_VERSION:
            raise ValueError(f"unsupported parameter blob version {version}")
        offset += head
        hidden = struct.unpack_from(f"<{n_hidden}I", blob, offset)
        offset += 4 * n_hidden
        spec = MlpSpec(n_in, n_out, hidden, HIDDEN_ACTIVATIONS[h_act], OUTPUT_ACTIVATIONS[o_act])
        n = spec.n_params
        values = np.frombuffer(blob, dtype="<f8", count=n, offset=offset).astype(np.float64)
        return cls(spec, values), offset + 8 * n


def mlp_init(spec: MlpSpec, seed: int | np.random.Generator) -> ParameterSet:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = ParameterSet(spec)
    for W in params.weights:
        bound = 1.0 / np.sqrt(W.shape[0])
        W[...] = rng.uniform(-bound, bound, size=W.shape)
    return params


@dataclass
class ForwardCache:
    inputs: np.ndarray
    # post-activation output of every hidden layer
    hidden: list[np.ndarray]
    output: np.ndarray
    squeeze: bool


def mlp_forward(params: ParameterSet, x) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network on one input vector or a (batch, input_dim) array."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.spec.input_dim:
        raise ValueError(f"input shape {x.shape} does not match input_dim={params.spec.input_dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite network input")
    relu = params.spec.hidden_activation == "relu"
    hidden = []
    h = x
    last = len(params.weights) - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ W
        z += b
        if i < last:
            h = np.maximum(z, 0.0) if relu else np.tanh(z)
            hidden.append(h)
        else:
            h = z
    if params.spec.output_activation == "sigmoid":
        h = _sigmoid(h)
    cache = ForwardCache(x, hidden, h, squeeze)
    return (h[0] if squeeze else h), cache


def mlp_backward(params: ParameterSet, cache: ForwardCache, output_grad) -> tuple[np.ndarray, np.ndarray]:
    """Reverse-mode gradients of sum(output * output_grad).

    Returns (flat parameter gradient, input gradient shaped like the input).
    """
    g = np.asarray(output_grad, dtype=np.float64)
    if cache.squeeze:
        g = g[None, :] if g.ndim == 1 else g
    if g.shape != cache.output.shape:
        raise ValueError(f"output_grad shape {g.shape} does not match output {cache.output.shape}")
    if params.spec.output_activation == "sigmoid":
        y = cache.output
        g = g * y * (1.0 - y)
    relu = params.spec.hidden_activation == "relu"
    grads = np.empty_like(params.values)
    layout = params.layout
    n_layers = len(params.weights)
    for i in range(n_layers - 1, -1, -1):
        h_in = cache.hidden[i - 1] if i > 0 else cache.inputs
        grads[layout[(i, "W")]] = (h_in.T @ g).ravel()
        grads[layout[(i, "b")]] = g.sum(axis=0)
        g = g @ params.weights[i].T
        if i > 0:
            if relu:
                g = g * (h_in > 0.0)
            else:
                g = g * (1.0 - h_in * h_in)
    return grads, (g[0] if cache.squeeze else g)


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


sigmoid = _sigmoid


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    skipped: int = field(default=0)

    @classmethod
    def for_params(cls, params: ParameterSet | np.ndarray, lr: float = 1e-3) -> AdamState:
        n = len(params)
        return cls(np.zeros(n), np.zeros(n), lr=lr)

    def copy(self) -> AdamState:
        return AdamState(self.m.copy(), self.v.copy(), self.t, self.lr,
                         self.beta1, self.beta2, self.eps, self.skipped)


def adam_step(state: AdamState, params: ParameterSet | np.ndarray, grads: np.ndarray) -> bool:
    """Apply one bias-corrected Adam step in place.

    Returns False (and counts the event in ``state.skipped``) when the
    gradient contains non-finite entries; nothing is modified then.
    """
    values = params.values if isinstance(params, ParameterSet) else params
    if not np.all(np.isfinite(grads)):
        state.skipped += 1
        return False
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grads
    state.v *= b2
    state.v += (1.0 - b2) * grads * grads
    m_hat = state.m / (1.0 - b1**state.t)
    v_hat = state.v / (1.0 - b2**state.t)
    values -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return True


def soft_update(target: ParameterSet, online: ParameterSet, tau: float) -> ParameterSet:
    """Polyak averaging target <- (1 - tau) * target + tau * online, in place."""
    if target.spec != online.spec:
        raise ValueError("target and online networks have different layouts")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    target.values *= 1.0 - tau
    target.values += tau * online.values
    return target
