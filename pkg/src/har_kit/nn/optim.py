"""Optimizers and learning-rate schedules.

All optimizers bind a list of (name, param) / (name, grad) pairs whose
arrays they update in place.  ``adam`` applies weight decay as coupled
L2 through the gradient; ``adamw`` decouples it, scaling the decay by
the current learning rate so lr = 0 is a strict no-op.  Any non-finite
gradient aborts the step with a diagnostic naming the parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from har_kit.errors import NumericError


class Optimizer:
    kind = "optimizer"

    def __init__(self, named_params, named_grads, lr, weight_decay=0.0):
        self._params = list(named_params)
        self._grads = list(named_grads)
        if [n for n, _ in self._params] != [n for n, _ in self._grads]:
            raise ValueError("param/grad name lists differ")
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)
        self.t = 0

    def _check_finite(self):
        for name, g in self._grads:
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for parameter {name!r}")

    def step(self, lr: float | None = None):
        self._check_finite()
        self.t += 1
        self._update(self.lr if lr is None else float(lr))

    def _update(self, lr: float):
        raise NotImplementedError

    # ---- checkpoint state ---------------------------------------------
    def slot_names(self) -> tuple[str, ...]:
        return ()

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for slot in self.slot_names():
            for name, arr in getattr(self, slot).items():
                out[f"{slot}:{name}"] = arr
        return out

    def load_state(self, t: int, arrays: dict[str, np.ndarray]):
        self.t = int(t)
        for slot in self.slot_names():
            store = getattr(self, slot)
            for name in store:
                store[name] = np.asarray(arrays[f"{slot}:{name}"], dtype=store[name].dtype)


class SGDMomentum(Optimizer):
    """SGD with classical momentum and coupled L2 weight decay."""

    kind = "sgd"

    def __init__(self, named_params, named_grads, lr, weight_decay=0.0, momentum=0.9):
        super().__init__(named_params, named_grads, lr, weight_decay)
        self.momentum = float(momentum)
        self.velocity = {n: np.zeros_like(p) for n, p in self._params}

    def slot_names(self):
        return ("velocity",)

    def _update(self, lr):
        for (name, p), (_, g) in zip(self._params, self._grads):
            eff = g + self.weight_decay * p if self.weight_decay else g
            v = self.velocity[name]
            v *= self.momentum
            v += eff
            p -= (lr * v).astype(p.dtype)


class Adam(Optimizer):
    """Adam with bias correction; weight decay folded into the gradient."""

    kind = "adam"
    eps = 1e-8

    def __init__(self, named_params, named_grads, lr, weight_decay=0.0,
                 beta1=0.9, beta2=0.999):
        super().__init__(named_params, named_grads, lr, weight_decay)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.m = {n: np.zeros_like(p) for n, p in self._params}
        self.v = {n: np.zeros_like(p) for n, p in self._params}

    def slot_names(self):
        return ("m", "v")

    def _decay_into_grad(self) -> bool:
        return True

    def _update(self, lr):
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for (name, p), (_, g) in zip(self._params, self._grads):
            if self.weight_decay and self._decay_into_grad():
                g = g + self.weight_decay * p
            elif self.weight_decay:
                p -= (lr * self.weight_decay * p).astype(p.dtype)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p -= (lr * update).astype(p.dtype)


class AdamW(Adam):
    """Adam with decoupled weight decay (decay scaled by the learning rate)."""

    kind = "adamw"

    def _decay_into_grad(self) -> bool:
        return False


_OPTIMIZERS = {"sgd": SGDMomentum, "adam": Adam, "adamw": AdamW}


def make_optimizer(kind, named_params, named_grads, lr, weight_decay=0.0,
                   momentum=0.9) -> Optimizer:
    cls = _OPTIMIZERS.get(kind)
    if cls is None:
        raise ValueError(f"unknown optimizer {kind!r}; choose from {sorted(_OPTIMIZERS)}")
    if kind == "sgd":
        return cls(named_params, named_grads, lr, weight_decay, momentum=momentum)
    return cls(named_params, named_grads, lr, weight_decay)


@dataclass(frozen=True)
class StepSchedule:
    """rate(epoch) = base * gamma ** (epoch // every)."""

    base_lr: float
    gamma: float = 0.8
    every: int = 10

    def __call__(self, epoch: int) -> float:
        return self.base_lr * self.gamma ** (int(epoch) // self.every)


@dataclass(frozen=True)
class CosineSchedule:
    """Cosine annealing from base to exactly 0 at epoch == t_max."""

    base_lr: float
    t_max: int

    def __call__(self, epoch: int) -> float:
        return self.base_lr * 0.5 * (1.0 + np.cos(np.pi * int(epoch) / self.t_max))


def make_schedule(kind, base_lr, gamma=0.8, every=10, t_max=50):
    if kind == "step":
        return StepSchedule(base_lr, gamma=gamma, every=every)
    if kind == "cosine":
        return CosineSchedule(base_lr, t_max=t_max)
    if kind == "constant":
        return lambda epoch: base_lr
    raise ValueError(f"unknown schedule {kind!r}")


def schedule_rate(schedule, epoch: int) -> float:
    """Evaluate a schedule at an epoch (epochs count from 0)."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return float(schedule(epoch))
