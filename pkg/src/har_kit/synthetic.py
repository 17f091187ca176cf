"""Synthetic accelerometer recordings in the MotionSense on-disk layout.

Real recordings cannot be redistributed with the toolkit, so tests and
demos use this generator instead.  Each activity has a distinct motion
model (gait frequency, harmonic mix, impact sharpness, gravity
orientation) and each subject gets fixed traits (frame rotation, gait
tempo, amplitude) so that subject-wise splits exhibit the usual
train/test domain shift.  The directory tree matches the public
release: ``<act>_<trial>/sub_<id>.csv`` with an index column and x/y/z
accelerometer columns in g.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from har_kit.data import ACTIVITY_CODES
from har_kit.rng import substream

# Trial numbers mirror the public MotionSense session ids; trials >= 10
# are the short sessions.
TRIALS = {
    "dws": (1, 2, 11),
    "ups": (3, 4, 12),
    "wlk": (7, 8, 15),
    "jog": (9, 16),
    "std": (6, 14),
    "sit": (5, 13),
}

_LONG_SECONDS = 60.0
_SHORT_SECONDS = 30.0


def _rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    cc = 1.0 - c
    return np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )


def _subject_traits(seed: int, subject: int) -> dict:
    rng = substream(seed, "synthetic-subject", subject)
    return {
        "rotation": _rotation_matrix(rng.normal(size=3), rng.uniform(-0.35, 0.35)),
        "tempo": rng.uniform(0.9, 1.1),
        "amplitude": rng.uniform(0.85, 1.15),
        "tilt": rng.uniform(-0.2, 0.2),
    }


def _activity_signal(code: str, t: np.ndarray, traits: dict, rng) -> np.ndarray:
    """Raw device-frame signal for one trial, shape [T, 3]."""
    n = len(t)
    phase = rng.uniform(0, 2 * np.pi)
    tempo = traits["tempo"]
    amp = traits["amplitude"]
    tilt = traits["tilt"]
    sig = np.zeros((n, 3))

    if code == "std":
        gravity = np.array([0.05 + tilt * 0.1, -0.05, 1.0])
        sway = 0.008 * np.sin(2 * np.pi * 0.25 * t + phase)
        sig[:, 0] = sway
        sig[:, 1] = 0.006 * np.sin(2 * np.pi * 0.17 * t + phase * 0.7)
        noise = 0.010
    elif code == "sit":
        gravity = np.array([0.55 + tilt * 0.2, 0.15, 0.80])
        sig[:, 2] = 0.005 * np.sin(2 * np.pi * 0.10 * t + phase)
        noise = 0.008
    elif code == "wlk":
        f = 1.9 * tempo
        gravity = np.array([0.1, tilt * 0.1, 1.0])
        sig[:, 2] = amp * (
            0.25 * np.sin(2 * np.pi * f * t + phase)
            + 0.10 * np.sin(4 * np.pi * f * t + 2 * phase)
        )
        sig[:, 0] = amp * 0.12 * np.sin(2 * np.pi * f * t + phase + np.pi / 3)
        sig[:, 1] = amp * 0.08 * np.sin(np.pi * f * t + phase)
        noise = 0.040
    elif code == "jog":
        f = 2.7 * tempo
        gravity = np.array([0.12, tilt * 0.1, 1.0])
        base = np.sin(2 * np.pi * f * t + phase)
        sig[:, 2] = amp * (0.70 * base + 0.30 * np.maximum(base, 0.0) ** 8)
        sig[:, 0] = amp * 0.35 * np.sin(2 * np.pi * f * t + phase + np.pi / 4)
        sig[:, 1] = amp * 0.18 * np.sin(np.pi * f * t + phase)
        noise = 0.100
    elif code == "dws":
        f = 2.1 * tempo
        gravity = np.array([0.08, tilt * 0.1 - 0.06, 1.0])
        base = np.sin(2 * np.pi * f * t + phase)
        sig[:, 2] = amp * (0.38 * base + 0.35 * np.abs(base) ** 5 - 0.10)
        sig[:, 0] = amp * 0.20 * np.sin(2 * np.pi * f * t + phase + np.pi / 2)
        sig[:, 1] = amp * 0.10 * np.sin(np.pi * f * t + phase)
        noise = 0.060
    elif code == "ups":
        f = 1.65 * tempo
        gravity = np.array([0.08, tilt * 0.1 + 0.06, 1.0])
        sig[:, 2] = amp * (
            0.40 * np.sin(2 * np.pi * f * t + phase)
            + 0.08 * np.sin(6 * np.pi * f * t + phase)
        )
        sig[:, 0] = amp * 0.25 * np.sin(2 * np.pi * f * t + phase) * (
            1.0 + 0.3 * np.sin(np.pi * f * t)
        )
        sig[:, 1] = amp * 0.10 * np.sin(np.pi * f * t + phase + np.pi / 5)
        noise = 0.060
    else:
        raise ValueError(f"unknown activity code {code!r}")

    sig += gravity[None, :]
    sig += rng.normal(0.0, noise, size=sig.shape)
    return sig @ traits["rotation"].T


def write_synthetic_dataset(
    root,
    n_subjects: int = 24,
    seed: int = 0,
    duration_scale: float = 1.0,
    sample_rate_hz: float = 50.0,
) -> Path:
    """Write a full synthetic dataset tree under ``root`` and return it.

    ``duration_scale`` shrinks every trial proportionally; tests use
    small values to keep runtimes down.
    """
    root = Path(root)
    for code in sorted(ACTIVITY_CODES):
        for trial in TRIALS[code]:
            folder = root / f"{code}_{trial}"
            folder.mkdir(parents=True, exist_ok=True)
            seconds = (_SHORT_SECONDS if trial >= 10 else _LONG_SECONDS) * duration_scale
            for subject in range(1, n_subjects + 1):
                traits = _subject_traits(seed, subject)
                rng = substream(seed, "synthetic-trial", subject, ACTIVITY_CODES[code], trial)
                n = max(int(round(seconds * sample_rate_hz)), 1)
                t = np.arange(n) / sample_rate_hz
                sig = _activity_signal(code, t, traits, rng)
                _write_trial_csv(folder / f"sub_{subject}.csv", sig)
    return root


def _write_trial_csv(path: Path, sig: np.ndarray) -> None:
    # Mirrors the public release: unnamed index column, then x,y,z.
    with open(path, "w", encoding="utf-8") as f:
        f.write(",x,y,z\n")
        for i, (x, y, z) in enumerate(sig):
            f.write(f"{i},{x:.6f},{y:.6f},{z:.6f}\n")


def synthetic_windows(
    count: int,
    win_len: int = 100,
    n_classes: int = 6,
    seed: int = 0,
    sample_rate_hz: float = 50.0,
):
    """Labeled windows drawn directly from the activity models.

    Returns ``(data, labels)`` with data shaped [count, win_len, 3];
    handy for classifier tests that do not need the file layout.
    """
    codes = sorted(ACTIVITY_CODES, key=ACTIVITY_CODES.get)[:n_classes]
    rng = substream(seed, "synthetic-windows")
    data = np.empty((count, win_len, 3))
    labels = np.empty(count, dtype=np.int64)
    for i in range(count):
        label = int(rng.integers(n_classes))
        subject = int(rng.integers(1, 1000))
        traits = _subject_traits(seed, subject)
        t = np.arange(win_len) / sample_rate_hz
        data[i] = _activity_signal(codes[label], t, traits, rng)
        labels[i] = label
    return data, labels
