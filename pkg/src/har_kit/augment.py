"""Stochastic time-series transformations for pretext tasks.

Eight window-level transforms operate on batches shaped [n, T, 3] and
always preserve that shape.  Every function takes an explicit generator,
so results are reproducible bit-for-bit and parallel callers can derive
per-window substreams.

The multi-task discrimination pool uses all eight kinds; the contrastive
pool drops segment permutation, leaving seven.  Contrastive training
walks all 42 ordered pairs of distinct kinds in seeded-shuffled order,
one pair per batch, reshuffling when the cycle is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from har_kit.errors import DataError
from har_kit.rng import generator_state, restore_generator

TRANSFORM_NAMES = (
    "jitter",
    "scale",
    "rotate3d",
    "negate",
    "time_flip",
    "permute",
    "time_warp",
    "channel_shuffle",
)

MULTITASK_POOL = TRANSFORM_NAMES
SIMCLR_POOL = tuple(n for n in TRANSFORM_NAMES if n != "permute")

# Floor on the instantaneous warp speed: keeps the cumulative time map
# strictly increasing even when the spline dips below zero.
_WARP_SPEED_FLOOR = 1e-3


@dataclass(frozen=True)
class AugmentParams:
    jitter_sigma: float = 0.05
    scale_sigma: float = 0.1
    scale_per_channel: bool = False
    time_warp_sigma: float = 0.2
    time_warp_knots: int = 4
    permute_segments: int = 4

    def __post_init__(self):
        if self.jitter_sigma <= 0 or self.scale_sigma <= 0 or self.time_warp_sigma <= 0:
            raise DataError("augmentation sigmas must be positive")
        if self.time_warp_knots < 1:
            raise DataError("time_warp_knots must be >= 1")
        if self.permute_segments < 2:
            raise DataError("permute_segments must be >= 2")

    def to_dict(self) -> dict:
        return {
            "jitter_sigma": self.jitter_sigma,
            "scale_sigma": self.scale_sigma,
            "scale_per_channel": self.scale_per_channel,
            "time_warp_sigma": self.time_warp_sigma,
            "time_warp_knots": self.time_warp_knots,
            "permute_segments": self.permute_segments,
        }


DEFAULT_PARAMS = AugmentParams()


def _check_batch(batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch)
    if batch.ndim != 3:
        raise DataError(f"expected [n, T, C] batch, got shape {batch.shape}")
    return batch


def jitter(batch, rng, sigma=DEFAULT_PARAMS.jitter_sigma):
    batch = _check_batch(batch)
    return batch + rng.normal(0.0, sigma, size=batch.shape)


def scale(batch, rng, sigma=DEFAULT_PARAMS.scale_sigma, per_channel=False):
    """Multiply each window by one factor ~ N(1, sigma^2) (or one per channel)."""
    batch = _check_batch(batch)
    n, _, c = batch.shape
    shape = (n, 1, c) if per_channel else (n, 1, 1)
    return batch * rng.normal(1.0, sigma, size=shape)


def random_rotations(rng, count: int) -> np.ndarray:
    """Axis-angle rotations: uniformly random unit axis, angle ~ U[0, 2pi).

    Returned as [count, 3, 3] proper rotation matrices (det +1).
    """
    axes = rng.normal(size=(count, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=count)
    x, y, z = axes[:, 0], axes[:, 1], axes[:, 2]
    c, s = np.cos(angles), np.sin(angles)
    cc = 1.0 - c
    rot = np.empty((count, 3, 3))
    rot[:, 0, 0] = c + x * x * cc
    rot[:, 0, 1] = x * y * cc - z * s
    rot[:, 0, 2] = x * z * cc + y * s
    rot[:, 1, 0] = y * x * cc + z * s
    rot[:, 1, 1] = c + y * y * cc
    rot[:, 1, 2] = y * z * cc - x * s
    rot[:, 2, 0] = z * x * cc - y * s
    rot[:, 2, 1] = z * y * cc + x * s
    rot[:, 2, 2] = c + z * z * cc
    return rot


def rotate3d(batch, rng):
    """Apply one random 3-D rotation per window, the same at every timestep."""
    batch = _check_batch(batch)
    if batch.shape[2] != 3:
        raise DataError("rotate3d requires exactly 3 channels")
    rot = random_rotations(rng, len(batch))
    return np.einsum("ntc,ncd->ntd", batch, np.swapaxes(rot, 1, 2))


def negate(batch, rng=None):
    return -_check_batch(batch)


def time_flip(batch, rng=None):
    return _check_batch(batch)[:, ::-1, :].copy()


def permute_segments(batch, rng, n_segments=DEFAULT_PARAMS.permute_segments):
    """Split the time axis into contiguous segments and shuffle their order."""
    batch = _check_batch(batch)
    n, t, _ = batch.shape
    if n_segments < 2:
        raise DataError("permute needs at least 2 segments")
    if n_segments > t:
        raise DataError(f"cannot split {t} timesteps into {n_segments} segments")
    segments = np.array_split(np.arange(t), n_segments)
    out = np.empty_like(batch)
    for i in range(n):
        order = rng.permutation(n_segments)
        idx = np.concatenate([segments[j] for j in order])
        out[i] = batch[i, idx]
    return out


def warp_time_maps(rng, count: int, t: int,
                   sigma=DEFAULT_PARAMS.time_warp_sigma,
                   knots=DEFAULT_PARAMS.time_warp_knots) -> np.ndarray:
    """Strictly increasing time maps [count, t] from 0 to t-1.

    A cubic spline through knots+2 random speeds ~ N(1, sigma^2) gives a
    smooth instantaneous rate, floored at a small positive value; its
    cumulative sum, rescaled to span [0, t-1], is the warp.
    """
    knot_x = np.linspace(0.0, t - 1.0, knots + 2)
    speeds = rng.normal(1.0, sigma, size=(knots + 2, count))
    curve = CubicSpline(knot_x, speeds, axis=0)(np.arange(t))  # [t, count]
    curve = np.maximum(curve, _WARP_SPEED_FLOOR)
    cum = np.cumsum(curve, axis=0)
    cum -= cum[0]
    cum *= (t - 1.0) / cum[-1]
    return cum.T


def time_warp(batch, rng, sigma=DEFAULT_PARAMS.time_warp_sigma,
              knots=DEFAULT_PARAMS.time_warp_knots):
    """Resample each window along a smooth random monotone time map."""
    batch = _check_batch(batch)
    n, t, c = batch.shape
    if t < 2:
        return batch.copy()
    warped = warp_time_maps(rng, n, t, sigma=sigma, knots=knots)  # [n, t]
    lo = np.clip(warped.astype(np.int64), 0, t - 2)
    frac = (warped - lo)[..., None]
    rows = np.arange(n)[:, None]
    return batch[rows, lo] * (1.0 - frac) + batch[rows, lo + 1] * frac


def channel_shuffle(batch, rng):
    """Randomly permute the channel order of each window."""
    batch = _check_batch(batch)
    n, t, c = batch.shape
    perms = np.argsort(rng.random((n, c)), axis=1)
    return np.take_along_axis(batch, perms[:, None, :].repeat(t, axis=1), axis=2)


def apply_transform(name: str, batch, rng, params: AugmentParams = DEFAULT_PARAMS):
    """Dispatch one named transform over a batch."""
    if name == "jitter":
        return jitter(batch, rng, sigma=params.jitter_sigma)
    if name == "scale":
        return scale(batch, rng, sigma=params.scale_sigma,
                     per_channel=params.scale_per_channel)
    if name == "rotate3d":
        return rotate3d(batch, rng)
    if name == "negate":
        return negate(batch)
    if name == "time_flip":
        return time_flip(batch)
    if name == "permute":
        return permute_segments(batch, rng, n_segments=params.permute_segments)
    if name == "time_warp":
        return time_warp(batch, rng, sigma=params.time_warp_sigma,
                         knots=params.time_warp_knots)
    if name == "channel_shuffle":
        return channel_shuffle(batch, rng)
    raise DataError(f"unknown transform {name!r}; choose from {TRANSFORM_NAMES}")


class TransformPairCursor:
    """Iterate all ordered pairs of distinct transforms, one per batch.

    Each cycle visits every pair exactly once in an order shuffled by the
    cursor's generator; exhausting the cycle reshuffles.  The cursor
    state snapshots into checkpoints so training can resume mid-cycle.
    """

    def __init__(self, pool, rng):
        pool = tuple(pool)
        if len(pool) < 2:
            raise DataError("transform pool needs at least 2 kinds")
        for name in pool:
            if name not in TRANSFORM_NAMES:
                raise DataError(f"unknown transform {name!r} in pool")
        self.pool = pool
        self.rng = rng
        self._queue: list[tuple[int, int]] = []

    def _refill(self):
        pairs = [(i, j) for i in range(len(self.pool))
                 for j in range(len(self.pool)) if i != j]
        order = self.rng.permutation(len(pairs))
        self._queue = [pairs[k] for k in order]

    def next_pair(self) -> tuple[str, str]:
        if not self._queue:
            self._refill()
        i, j = self._queue.pop()
        return self.pool[i], self.pool[j]

    @property
    def cycle_length(self) -> int:
        k = len(self.pool)
        return k * (k - 1)

    def state_dict(self) -> dict:
        return {
            "pool": list(self.pool),
            "queue": [list(p) for p in self._queue],
            "rng_state": generator_state(self.rng),
        }

    def load_state_dict(self, state: dict):
        if tuple(state["pool"]) != self.pool:
            raise DataError("cursor pool mismatch")
        self._queue = [tuple(p) for p in state["queue"]]
        self.rng = restore_generator(state["rng_state"])
