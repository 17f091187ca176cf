"""Sliding-window segmentation of labeled streams.

A stream of length ``T`` yields ``floor((T - win_len) / step) + 1``
windows starting at 0, step, 2*step, ...; the trailing partial window is
dropped.  Segmentation involves no randomness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from har_kit.data import N_CHANNELS, SensorStream
from har_kit.errors import DataError

LABEL_POLICIES = ("last", "first", "majority")


@dataclass
class WindowBatch:
    """Fixed-length windows with one label each, shaped [count, win_len, 3]."""

    data: np.ndarray
    labels: np.ndarray
    win_len: int
    step: int

    def __post_init__(self):
        self.data = np.asarray(self.data)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.data.ndim != 3:
            raise DataError(f"window data must be 3-D, got shape {self.data.shape}")
        if len(self.data) != len(self.labels):
            raise DataError("window/label count mismatch")
        if not (0 < self.step <= self.win_len):
            raise DataError(f"need 0 < step <= win_len, got {self.step}, {self.win_len}")

    def __len__(self) -> int:
        return len(self.data)

    @classmethod
    def empty(cls, win_len: int, step: int, n_channels: int = N_CHANNELS) -> "WindowBatch":
        return cls(
            data=np.empty((0, win_len, n_channels)),
            labels=np.empty((0,), dtype=np.int64),
            win_len=win_len,
            step=step,
        )


def _window_labels(label_slices: np.ndarray, policy: str) -> np.ndarray:
    if policy == "last":
        return label_slices[:, -1]
    if policy == "first":
        return label_slices[:, 0]
    if policy == "majority":
        # bincount per row; argmax returns the lowest id on ties
        out = np.empty(len(label_slices), dtype=np.int64)
        for i, row in enumerate(label_slices):
            out[i] = np.bincount(row).argmax()
        return out
    raise DataError(f"unknown label policy {policy!r}; choose from {LABEL_POLICIES}")


def segment(
    stream: SensorStream,
    win_len: int,
    step: int,
    label_policy: str = "last",
    drop_boundary_crossing: bool = False,
) -> WindowBatch:
    """Cut one stream into overlapping windows.

    A stream shorter than ``win_len`` yields an empty batch.  With
    ``drop_boundary_crossing`` windows spanning more than one activity
    are discarded instead of labeled by ``label_policy``.
    """
    if win_len <= 0 or step <= 0:
        raise DataError(f"win_len and step must be positive, got {win_len}, {step}")
    if step > win_len:
        raise DataError(f"step {step} must not exceed win_len {win_len}")
    if label_policy not in LABEL_POLICIES:
        raise DataError(
            f"unknown label policy {label_policy!r}; choose from {LABEL_POLICIES}"
        )

    total = len(stream)
    if total < win_len:
        return WindowBatch.empty(win_len, step)

    starts = np.arange(0, total - win_len + 1, step)
    index = starts[:, None] + np.arange(win_len)[None, :]
    data = stream.data[index]  # [n, win_len, 3] copy
    label_slices = stream.labels[index]

    if drop_boundary_crossing:
        keep = (label_slices == label_slices[:, :1]).all(axis=1)
        data = data[keep]
        label_slices = label_slices[keep]
        if len(data) == 0:
            return WindowBatch.empty(win_len, step)

    labels = _window_labels(label_slices, label_policy)
    return WindowBatch(data=data, labels=labels, win_len=win_len, step=step)


def segment_streams(
    streams,
    win_len: int,
    step: int,
    label_policy: str = "last",
    drop_boundary_crossing: bool = False,
) -> WindowBatch:
    """Segment several streams and stack the results.

    Output order is fixed by (subject id, start index) so the result is
    independent of the caller's stream ordering.
    """
    ordered = sorted(streams, key=lambda s: s.subject_id)
    batches = [
        segment(s, win_len, step, label_policy, drop_boundary_crossing)
        for s in ordered
    ]
    batches = [b for b in batches if len(b)]
    if not batches:
        return WindowBatch.empty(win_len, step)
    return WindowBatch(
        data=np.concatenate([b.data for b in batches], axis=0),
        labels=np.concatenate([b.labels for b in batches]),
        win_len=win_len,
        step=step,
    )
