"""Recording ingestion, subject splits, and z-score normalization.

The on-disk layout follows the public MotionSense release: one directory
per (activity, trial) named like ``wlk_7`` or ``jog_16``, each holding
one CSV per subject (``sub_12.csv``) with a header row and accelerometer
columns.  Labels are derived from the directory name.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from har_kit.errors import DataError
from har_kit.serialize import read_header, savez_stable

log = logging.getLogger(__name__)

ACTIVITY_NAMES = ("downstairs", "upstairs", "walking", "jogging", "standing", "sitting")
ACTIVITY_CODES = {"dws": 0, "ups": 1, "wlk": 2, "jog": 3, "std": 4, "sit": 5}
N_CLASSES = len(ACTIVITY_NAMES)
N_CHANNELS = 3

# Accepted accelerometer column triples, in order of preference.
_COLUMN_TRIPLES = (
    ("x", "y", "z"),
    ("userAcceleration.x", "userAcceleration.y", "userAcceleration.z"),
)

_TRIAL_DIR_RE = re.compile(r"^([a-z]+)_(\d+)$")
_SUBJECT_FILE_RE = re.compile(r"^sub_(\d+)\.csv$", re.IGNORECASE)

PREPARED_FORMAT = "har-kit.prepared"
PREPARED_VERSION = 1


@dataclass
class SensorStream:
    """Per-subject tri-axial accelerometer series with per-timestep labels."""

    subject_id: int
    data: np.ndarray  # [T, 3] float
    labels: np.ndarray  # [T] int in [0, N_CLASSES)
    sample_rate_hz: float = 50.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.data.ndim != 2 or self.data.shape[1] != N_CHANNELS:
            raise DataError(
                f"subject {self.subject_id}: expected [T, {N_CHANNELS}] data, "
                f"got shape {self.data.shape}"
            )
        if len(self.data) == 0:
            raise DataError(f"subject {self.subject_id}: empty stream")
        if len(self.labels) != len(self.data):
            raise DataError(
                f"subject {self.subject_id}: {len(self.data)} samples but "
                f"{len(self.labels)} labels"
            )
        if self.labels.min() < 0 or self.labels.max() >= N_CLASSES:
            raise DataError(
                f"subject {self.subject_id}: labels outside [0, {N_CLASSES})"
            )
        if self.sample_rate_hz <= 0:
            raise DataError("sample_rate_hz must be positive")

    def __len__(self) -> int:
        return len(self.data)


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint train/val/test subject-id sets for one seed."""

    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def __post_init__(self):
        groups = (set(self.train), set(self.val), set(self.test))
        total = sum(len(g) for g in groups)
        if len(groups[0] | groups[1] | groups[2]) != total:
            raise DataError("split groups overlap")

    def split_of(self, subject_id: int) -> str:
        for name in ("train", "val", "test"):
            if subject_id in getattr(self, name):
                return name
        raise KeyError(subject_id)

    def to_dict(self) -> dict:
        return {
            "train": list(self.train),
            "val": list(self.val),
            "test": list(self.test),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitAssignment":
        return cls(
            train=tuple(d["train"]),
            val=tuple(d["val"]),
            test=tuple(d["test"]),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True)
class NormStats:
    """Per-channel mean and standard deviation fitted on the train split."""

    mean: np.ndarray  # [3]
    std: np.ndarray  # [3], strictly positive

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(mean=np.asarray(d["mean"], float), std=np.asarray(d["std"], float))


def _read_trial_csv(path: Path) -> np.ndarray:
    """Parse one (subject, trial) CSV into a [T, 3] float array.

    Non-numeric and missing cells are rejected with the file and
    1-based data row in the message.
    """
    try:
        frame = pd.read_csv(path)
    except Exception as exc:  # malformed beyond repair
        raise DataError(f"{path}: unreadable CSV ({exc})") from exc

    columns = None
    for triple in _COLUMN_TRIPLES:
        if all(c in frame.columns for c in triple):
            columns = triple
            break
    if columns is None:
        raise DataError(
            f"{path}: no accelerometer columns; expected one of "
            + " or ".join("/".join(t) for t in _COLUMN_TRIPLES)
        )

    values = np.empty((len(frame), N_CHANNELS), dtype=np.float64)
    for j, col in enumerate(columns):
        numeric = pd.to_numeric(frame[col], errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(numeric)
        if bad.any():
            row = int(np.flatnonzero(bad)[0]) + 1  # 1-based, excluding header
            raise DataError(
                f"{path}: non-numeric or missing value in column '{col}' "
                f"at data row {row}"
            )
        values[:, j] = numeric
    if len(values) == 0:
        raise DataError(f"{path}: file contains a header but no samples")
    return values


def load_dataset(root_dir, sample_rate_hz: float = 50.0) -> list[SensorStream]:
    """Load every subject from a MotionSense-style directory tree.

    Trials of one subject are concatenated in lexicographic
    (activity code, trial number, file name) order so that repeated
    loads produce identical streams.  Returns streams sorted by
    subject id.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise DataError(f"dataset directory not found: {root}")

    trial_dirs = []
    for entry in sorted(root.iterdir()):
        if not entry.is_dir():
            continue
        m = _TRIAL_DIR_RE.match(entry.name)
        if m is None:
            continue
        code, trial = m.group(1), int(m.group(2))
        if code not in ACTIVITY_CODES:
            raise DataError(
                f"{entry}: unknown activity name '{code}' "
                f"(expected one of {sorted(ACTIVITY_CODES)})"
            )
        trial_dirs.append((code, trial, entry))
    trial_dirs.sort(key=lambda t: (t[0], t[1], t[2].name))

    per_subject: dict[int, list[tuple[np.ndarray, int]]] = {}
    for code, _trial, folder in trial_dirs:
        label = ACTIVITY_CODES[code]
        for csv_path in sorted(folder.iterdir()):
            m = _SUBJECT_FILE_RE.match(csv_path.name)
            if m is None:
                continue
            subject = int(m.group(1))
            values = _read_trial_csv(csv_path)
            per_subject.setdefault(subject, []).append((values, label))

    if not per_subject:
        raise DataError(f"no recordings found under {root}")

    streams = []
    for subject in sorted(per_subject):
        chunks = per_subject[subject]
        data = np.concatenate([c[0] for c in chunks], axis=0)
        labels = np.concatenate(
            [np.full(len(c[0]), c[1], dtype=np.int64) for c in chunks]
        )
        streams.append(
            SensorStream(
                subject_id=subject,
                data=data,
                labels=labels,
                sample_rate_hz=sample_rate_hz,
            )
        )
    return streams


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_subjects(
    subject_ids, test_frac: float, val_frac: float, seed: int
) -> SplitAssignment:
    """Assign subjects to disjoint train/val/test groups.

    The test group takes round(n * test_frac) subjects (half-up), the
    validation group round(m * val_frac) of the remainder; every group
    is forced non-empty.  The shuffle is keyed by ``seed`` only, so the
    caller's id ordering does not matter.
    """
    ids = sorted(int(s) for s in subject_ids)
    if len(ids) != len(set(ids)):
        raise DataError("duplicate subject ids")
    n = len(ids)
    if n < 3:
        raise DataError(f"need at least 3 subjects to split, got {n}")
    if not (0 < test_frac and 0 < val_frac and test_frac + val_frac < 1):
        raise DataError(
            f"fractions must satisfy 0 < test, 0 < val, test + val < 1; "
            f"got test={test_frac}, val={val_frac}"
        )

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    order = [ids[i] for i in rng.permutation(n)]

    n_test = min(max(_round_half_up(n * test_frac), 1), n - 2)
    m = n - n_test
    n_val = min(max(_round_half_up(m * val_frac), 1), m - 1)

    test = tuple(sorted(order[:n_test]))
    val = tuple(sorted(order[n_test : n_test + n_val]))
    train = tuple(sorted(order[n_test + n_val :]))
    return SplitAssignment(train=train, val=val, test=test, seed=int(seed))


def fit_normalizer(train_streams) -> NormStats:
    """Per-channel mean/std (population convention) over concatenated train data.

    A zero-variance channel gets std = 1 and a warning rather than
    poisoning the other channels with a division by zero.
    """
    streams = list(train_streams)
    if not streams:
        raise DataError("fit_normalizer needs at least one train stream")
    data = np.concatenate([s.data for s in streams], axis=0)
    mean = data.mean(axis=0)
    std = data.std(axis=0)  # ddof=0
    degenerate = std == 0.0
    if degenerate.any():
        log.warning(
            "zero-variance channel(s) %s; substituting std=1",
            np.flatnonzero(degenerate).tolist(),
        )
        std = np.where(degenerate, 1.0, std)
    return NormStats(mean=mean, std=std)


def apply_normalizer(stream: SensorStream, stats: NormStats) -> SensorStream:
    """Return a standardized copy of ``stream``; labels are untouched."""
    if stream.data.shape[1] != len(stats.mean):
        raise DataError(
            f"channel count mismatch: stream has {stream.data.shape[1]}, "
            f"stats have {len(stats.mean)}"
        )
    return SensorStream(
        subject_id=stream.subject_id,
        data=(stream.data - stats.mean) / stats.std,
        labels=stream.labels.copy(),
        sample_rate_hz=stream.sample_rate_hz,
    )


@dataclass
class PreparedDataset:
    """Normalized streams plus the split and stats that produced them."""

    streams: dict[int, SensorStream]
    split: SplitAssignment
    stats: NormStats
    meta: dict = field(default_factory=dict)

    def streams_for(self, split_name: str) -> list[SensorStream]:
        ids = getattr(self.split, split_name)
        return [self.streams[i] for i in ids]


def prepare_dataset(
    root_dir,
    test_frac: float = 0.2,
    val_frac: float = 0.2,
    seed: int = 0,
    sample_rate_hz: float = 50.0,
    meta: dict | None = None,
) -> PreparedDataset:
    """Ingest, split by subject, and normalize with train-split statistics."""
    streams = load_dataset(root_dir, sample_rate_hz=sample_rate_hz)
    split = split_subjects([s.subject_id for s in streams], test_frac, val_frac, seed)
    by_id = {s.subject_id: s for s in streams}
    stats = fit_normalizer([by_id[i] for i in split.train])
    normalized = {i: apply_normalizer(s, stats) for i, s in by_id.items()}
    return PreparedDataset(
        streams=normalized, split=split, stats=stats, meta=dict(meta or {})
    )


def save_prepared(path, prepared: PreparedDataset) -> None:
    """Write a PreparedDataset to one versioned ``.npz`` interchange file."""
    subject_ids = sorted(prepared.streams)
    header = {
        "format": PREPARED_FORMAT,
        "version": PREPARED_VERSION,
        "split": prepared.split.to_dict(),
        "stats": prepared.stats.to_dict(),
        "subject_ids": subject_ids,
        "sample_rate_hz": prepared.streams[subject_ids[0]].sample_rate_hz,
        "meta": prepared.meta,
    }
    arrays = {}
    for sid in subject_ids:
        arrays[f"data_{sid}"] = prepared.streams[sid].data
        arrays[f"labels_{sid}"] = prepared.streams[sid].labels
    savez_stable(path, arrays, header=header)


def load_prepared(path) -> PreparedDataset:
    """Read a file written by :func:`save_prepared`."""
    header, arrays = read_header(path, PREPARED_FORMAT, PREPARED_VERSION)
    with arrays:
        streams = {}
        for sid in header["subject_ids"]:
            streams[sid] = SensorStream(
                subject_id=sid,
                data=arrays[f"data_{sid}"],
                labels=arrays[f"labels_{sid}"],
                sample_rate_hz=header["sample_rate_hz"],
            )
    return PreparedDataset(
        streams=streams,
        split=SplitAssignment.from_dict(header["split"]),
        stats=NormStats.from_dict(header["stats"]),
        meta=header.get("meta", {}),
    )
