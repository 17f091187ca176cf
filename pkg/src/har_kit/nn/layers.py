"""Layer implementations for the network engine.

Tensor layout is [batch, time, channels] for temporal layers and
[batch, features] after pooling.  Every layer implements ``forward``
(caching what its backward pass needs), ``backward`` (returning the
input gradient and accumulating parameter gradients in ``grads``), and
shape propagation via ``out_shape`` so that model construction fails on
mismatched shapes instead of the first training step.

Weights use Kaiming-uniform fan-in initialization (bound sqrt(6/fan_in),
the ReLU gain) with zero biases, drawn from the generator supplied at
construction so builds are reproducible.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from har_kit.rng import generator_state, restore_generator


def _kaiming_uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Base class; subclasses fill params/grads and the pass methods."""

    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def out_shape(self, in_shape: tuple) -> tuple:
        return in_shape

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def zero_grad(self):
        for key, p in self.params.items():
            self.grads[key] = np.zeros_like(p)

    def spec(self) -> dict:
        raise NotImplementedError

    # stochastic layers override these
    def rng_state(self):
        return None

    def set_rng_state(self, state):
        pass


class Conv1d(Layer):
    """Temporal cross-correlation, stride 1, valid or same padding.

    Valid padding shortens the sequence to T - kernel + 1; same padding
    pads (k-1)//2 left and k//2 right to preserve length.
    """

    kind = "conv1d"

    def __init__(self, in_channels, out_channels, kernel, padding="valid",
                 rng=None, dtype=np.float32):
        super().__init__()
        if padding not in ("valid", "same"):
            raise ValueError(f"padding must be 'valid' or 'same', got {padding!r}")
        if kernel < 1:
            raise ValueError("kernel must be >= 1")
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel = int(kernel)
        self.padding = padding
        rng = rng or np.random.default_rng(0)
        fan_in = self.kernel * self.in_channels
        self.params["W"] = _kaiming_uniform(
            rng, (self.kernel, self.in_channels, self.out_channels), fan_in, dtype
        )
        self.params["b"] = np.zeros(self.out_channels, dtype=dtype)
        self.zero_grad()
        self._cache = None

    def _pads(self):
        if self.padding == "valid":
            return 0, 0
        return (self.kernel - 1) // 2, self.kernel // 2

    def out_shape(self, in_shape):
        if len(in_shape) != 2 or in_shape[1] != self.in_channels:
            raise ValueError(
                f"conv1d expects [T, {self.in_channels}] input, got {in_shape}"
            )
        t = in_shape[0]
        pl, pr = self._pads()
        t_out = t + pl + pr - self.kernel + 1
        if t_out < 1:
            raise ValueError(
                f"sequence of length {t} too short for kernel {self.kernel} "
                f"({self.padding} padding)"
            )
        return (t_out, self.out_channels)

    def _im2col(self, x_padded, l_out):
        # [n, L, C, k] -> [n, L, k, C] -> [n, L, k*C]
        cols = sliding_window_view(x_padded, self.kernel, axis=1)
        return np.ascontiguousarray(cols.transpose(0, 1, 3, 2)).reshape(
            len(x_padded), l_out, -1
        )

    def forward(self, x, train):
        pl, pr = self._pads()
        if pl or pr:
            x = np.pad(x, ((0, 0), (pl, pr), (0, 0)))
        n, t, _ = x.shape
        l_out = t - self.kernel + 1
        cols = self._im2col(x, l_out)
        w2 = self.params["W"].reshape(-1, self.out_channels)
        y = cols @ w2 + self.params["b"]
        # cache the (small) padded input; backward rebuilds the column
        # matrix, trading a copy for an O(k) smaller activation cache
        self._cache = x
        return y

    def backward(self, dy):
        if self._cache is None:
            raise RuntimeError("conv1d backward called before forward")
        x_padded = self._cache
        n, l_out, _ = dy.shape
        cols = self._im2col(x_padded, l_out)
        w2 = self.params["W"].reshape(-1, self.out_channels)
        self.grads["b"] += dy.sum(axis=(0, 1))
        dw2 = np.tensordot(cols, dy, axes=([0, 1], [0, 1]))
        self.grads["W"] += dw2.reshape(self.params["W"].shape)
        dcols = (dy @ w2.T).reshape(n, l_out, self.kernel, self.in_channels)
        dx = np.zeros(x_padded.shape, dtype=dy.dtype)
        for j in range(self.kernel):
            dx[:, j : j + l_out, :] += dcols[:, :, j, :]
        pl, pr = self._pads()
        if pl or pr:
            dx = dx[:, pl : x_padded.shape[1] - pr, :]
        return dx

    def spec(self):
        return {
            "kind": self.kind,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel": self.kernel,
            "padding": self.padding,
        }


class TransposedConv1d(Layer):
    """Stride-1 transposed temporal convolution; lengthens T to T + k - 1.

    Adjoint of the valid-padding Conv1d, used by mirrored decoders.
    """

    kind = "transposed_conv1d"

    def __init__(self, in_channels, out_channels, kernel, rng=None, dtype=np.float32):
        super().__init__()
        if kernel < 1:
            raise ValueError("kernel must be >= 1")
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel = int(kernel)
        rng = rng or np.random.default_rng(0)
        fan_in = self.kernel * self.in_channels
        self.params["W"] = _kaiming_uniform(
            rng, (self.kernel, self.in_channels, self.out_channels), fan_in, dtype
        )
        self.params["b"] = np.zeros(self.out_channels, dtype=dtype)
        self.zero_grad()
        self._cache = None

    def out_shape(self, in_shape):
        if len(in_shape) != 2 or in_shape[1] != self.in_channels:
            raise ValueError(
                f"transposed_conv1d expects [T, {self.in_channels}] input, "
                f"got {in_shape}"
            )
        return (in_shape[0] + self.kernel - 1, self.out_channels)

    def forward(self, x, train):
        n, t, _ = x.shape
        y = np.zeros((n, t + self.kernel - 1, self.out_channels), dtype=x.dtype)
        w = self.params["W"]
        for j in range(self.kernel):
            y[:, j : j + t, :] += x @ w[j]
        y += self.params["b"]
        self._cache = x
        return y

    def backward(self, dy):
        if self._cache is None:
            raise RuntimeError("transposed_conv1d backward called before forward")
        x = self._cache
        n, t, _ = x.shape
        w = self.params["W"]
        self.grads["b"] += dy.sum(axis=(0, 1))
        dx = np.zeros_like(x)
        for j in range(self.kernel):
            dy_j = dy[:, j : j + t, :]
            self.grads["W"][j] += np.tensordot(x, dy_j, axes=([0, 1], [0, 1]))
            dx += dy_j @ w[j].T
        return dx

    def spec(self):
        return {
            "kind": self.kind,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel": self.kernel,
        }


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x, train):
        self._mask = x > 0
        return np.where(self._mask, x, 0)

    def backward(self, dy):
        if self._mask is None:
            raise RuntimeError("relu backward called before forward")
        return np.where(self._mask, dy, 0)

    def spec(self):
        return {"kind": self.kind}


class Dropout(Layer):
    """Inverted dropout: train-time mask scaled by 1/(1-p), identity in eval.

    ``hold_mask`` freezes the current mask across forwards (used by the
    gradient checker, which needs a deterministic function).
    """

    kind = "dropout"

    def __init__(self, p: float, rng=None):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout p must be in [0, 1), got {p}")
        self.p = float(p)
        self.rng = rng or np.random.default_rng(0)
        self.hold_mask = False
        self._mask = None
        self._train = False

    def forward(self, x, train):
        self._train = train and self.p > 0.0
        if not self._train:
            return x
        if not (self.hold_mask and self._mask is not None and self._mask.shape == x.shape):
            self._mask = self.rng.random(x.shape) >= self.p
        return np.where(self._mask, x / (1.0 - self.p), 0.0).astype(x.dtype)

    def backward(self, dy):
        if not self._train:
            return dy
        return np.where(self._mask, dy / (1.0 - self.p), 0.0).astype(dy.dtype)

    def spec(self):
        return {"kind": self.kind, "p": self.p}

    def rng_state(self):
        return generator_state(self.rng)

    def set_rng_state(self, state):
        self.rng = restore_generator(state)


class GlobalMaxPool(Layer):
    """Max over the time axis: [n, T, C] -> [n, C]."""

    kind = "global_max_pool"

    def __init__(self):
        super().__init__()
        self._cache = None

    def out_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ValueError(f"global_max_pool expects [T, C] input, got {in_shape}")
        return (in_shape[1],)

    def forward(self, x, train):
        idx = x.argmax(axis=1)  # first max on ties
        self._cache = (idx, x.shape)
        return np.take_along_axis(x, idx[:, None, :], axis=1)[:, 0, :]

    def backward(self, dy):
        if self._cache is None:
            raise RuntimeError("global_max_pool backward called before forward")
        idx, shape = self._cache
        dx = np.zeros(shape, dtype=dy.dtype)
        np.put_along_axis(dx, idx[:, None, :], dy[:, None, :], axis=1)
        return dx

    def spec(self):
        return {"kind": self.kind}


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_features, out_features, rng=None, dtype=np.float32):
        super().__init__()
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        rng = rng or np.random.default_rng(0)
        self.params["W"] = _kaiming_uniform(
            rng, (self.in_features, self.out_features), self.in_features, dtype
        )
        self.params["b"] = np.zeros(self.out_features, dtype=dtype)
        self.zero_grad()
        self._cache = None

    def out_shape(self, in_shape):
        if len(in_shape) != 1 or in_shape[0] != self.in_features:
            raise ValueError(
                f"dense expects [{self.in_features}] input, got {in_shape}"
            )
        return (self.out_features,)

    def forward(self, x, train):
        self._cache = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dy):
        if self._cache is None:
            raise RuntimeError("dense backward called before forward")
        x = self._cache
        self.grads["W"] += x.T @ dy
        self.grads["b"] += dy.sum(axis=0)
        return dy @ self.params["W"].T

    def spec(self):
        return {
            "kind": self.kind,
            "in_features": self.in_features,
            "out_features": self.out_features,
        }


_LAYER_KINDS = {
    "conv1d": Conv1d,
    "transposed_conv1d": TransposedConv1d,
    "relu": ReLU,
    "dropout": Dropout,
    "global_max_pool": GlobalMaxPool,
    "dense": Dense,
}


def layer_from_spec(spec: dict, rng=None, dtype=np.float32) -> Layer:
    """Rebuild a layer from its :meth:`Layer.spec` dict."""
    spec = dict(spec)
    kind = spec.pop("kind")
    cls = _LAYER_KINDS.get(kind)
    if cls is None:
        raise ValueError(f"unknown layer kind {kind!r}")
    if kind in ("conv1d", "transposed_conv1d", "dense"):
        return cls(rng=rng, dtype=dtype, **spec)
    if kind == "dropout":
        return cls(rng=rng, **spec)
    return cls(**spec)
