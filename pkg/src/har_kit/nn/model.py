"""Ordered layer stacks with shape validation and state snapshots."""

from __future__ import annotations

import numpy as np

from har_kit.nn.layers import Dropout, Layer


class Sequential:
    """A layer stack validated against ``input_shape`` at construction.

    ``input_shape`` excludes the batch dimension, e.g. ``(100, 3)`` for
    windows or ``(96,)`` for embeddings.  Forward/backward leave the
    parameters untouched; only an optimizer step changes them.
    Parameter gradients accumulate across backward calls until
    :meth:`zero_grad`, which is what shared encoders with several heads
    rely on.
    """

    def __init__(self, layers, input_shape, dtype=np.float32):
        self.layers: list[Layer] = list(layers)
        self.input_shape = tuple(int(s) for s in input_shape)
        self.dtype = np.dtype(dtype)
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.out_shape(shape)
        self.output_shape = shape
        self._forward_done = False

    # ---- naming ------------------------------------------------------
    def layer_name(self, i: int) -> str:
        return f"{i:02d}_{self.layers[i].kind}"

    def named_params(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            for key in sorted(layer.params):
                out.append((f"{self.layer_name(i)}.{key}", layer.params[key]))
        return out

    def named_grads(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            for key in sorted(layer.params):
                out.append((f"{self.layer_name(i)}.{key}", layer.grads[key]))
        return out

    def n_params(self) -> int:
        return sum(p.size for _, p in self.named_params())

    # ---- passes ------------------------------------------------------
    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if tuple(x.shape[1:]) != self.input_shape:
            raise ValueError(
                f"expected input shaped [n, {', '.join(map(str, self.input_shape))}], "
                f"got {x.shape}"
            )
        for layer in self.layers:
            x = layer.forward(x, train)
        self._forward_done = True
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if not self._forward_done:
            raise RuntimeError("backward called before forward")
        dy = np.asarray(dy, dtype=self.dtype)
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    # ---- dropout controls -------------------------------------------
    def dropout_layers(self) -> list[Dropout]:
        return [l for l in self.layers if isinstance(l, Dropout)]

    def set_dropout_hold(self, hold: bool):
        for layer in self.dropout_layers():
            layer.hold_mask = hold
            if not hold:
                layer._mask = None

    # ---- state -------------------------------------------------------
    def specs(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]

    def state_arrays(self) -> dict[str, np.ndarray]:
        return dict(self.named_params())

    def load_state_arrays(self, arrays: dict[str, np.ndarray], strict: bool = True):
        """Copy parameter values in (shape-checked, dtype-cast)."""
        for name, param in self.named_params():
            if name not in arrays:
                if strict:
                    raise KeyError(f"missing parameter {name!r}")
                continue
            value = np.asarray(arrays[name], dtype=param.dtype)
            if value.shape != param.shape:
                raise ValueError(
                    f"parameter {name!r} has shape {param.shape}, "
                    f"checkpoint has {value.shape}"
                )
            param[...] = value

    def rng_states(self) -> dict[str, dict]:
        states = {}
        for i, layer in enumerate(self.layers):
            state = layer.rng_state()
            if state is not None:
                states[self.layer_name(i)] = state
        return states

    def set_rng_states(self, states: dict[str, dict]):
        for i, layer in enumerate(self.layers):
            name = self.layer_name(i)
            if name in states:
                layer.set_rng_state(states[name])
