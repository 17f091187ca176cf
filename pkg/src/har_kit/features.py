"""Per-window feature extraction: statistical and ECDF-quantile vectors.

Statistical features (15 per window): per channel the mean, population
variance, spectral energy, and spectral entropy, plus the Pearson
correlation of each channel pair.  Spectral quantities are computed on
the FFT of the zero-padded (next power of two) window with the DC bin
excluded; energy is the mean squared magnitude of the remaining bins
and entropy is the Shannon entropy (natural log) of the normalized
power spectrum.

ECDF features: per channel the inverse empirical CDF sampled at
``n_quantiles`` equally spaced probabilities (linear interpolation
between order statistics) followed by that channel's mean, channels
concatenated.  With the default 25 quantiles over 3 channels this gives
3 * (25 + 1) = 78 values per window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from har_kit.errors import DataError

_PAIRS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length real vector plus the schema that produced it."""

    values: np.ndarray
    schema_id: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"non-finite feature values under schema {self.schema_id}")


def _as_batch(windows: np.ndarray) -> np.ndarray:
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 2:
        windows = windows[None]
    if windows.ndim != 3:
        raise DataError(f"expected [n, T, C] windows, got shape {windows.shape}")
    if not np.all(np.isfinite(windows)):
        raise DataError("windows contain non-finite values")
    return windows


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def _spectral(windows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(energy, entropy) per window and channel, DC bin excluded."""
    n, t, c = windows.shape
    n_fft = _next_pow2(t)
    spectrum = np.fft.rfft(windows, n=n_fft, axis=1)
    power = np.abs(spectrum[:, 1:, :]) ** 2  # drop DC
    energy = power.mean(axis=1)
    total = power.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(total > 0, power / np.where(total > 0, total, 1.0), 0.0)
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    entropy = -plogp.sum(axis=1)
    entropy[total[:, 0, :] == 0] = 0.0  # all-zero spectrum convention
    return energy, entropy


def _correlations(windows: np.ndarray) -> np.ndarray:
    """Pearson r for channel pairs (0,1), (0,2), (1,2); 0 when degenerate."""
    centered = windows - windows.mean(axis=1, keepdims=True)
    std = centered.std(axis=1)
    out = np.empty((len(windows), len(_PAIRS)))
    for k, (i, j) in enumerate(_PAIRS):
        cov = (centered[:, :, i] * centered[:, :, j]).mean(axis=1)
        denom = std[:, i] * std[:, j]
        out[:, k] = np.where(denom > 0, cov / np.where(denom > 0, denom, 1.0), 0.0)
    return out


def statistical_schema(n_channels: int = 3) -> list[str]:
    names = []
    for c in range(n_channels):
        names += [f"mean_{c}", f"var_{c}", f"energy_{c}", f"entropy_{c}"]
    names += [f"corr_{i}{j}" for i, j in _PAIRS]
    return names


STATISTICAL_SCHEMA_ID = "statistical/v1"


def statistical_feature_matrix(windows: np.ndarray) -> np.ndarray:
    """Statistical features for a batch of windows, shape [n, 15]."""
    windows = _as_batch(windows)
    if windows.shape[1] < 2:
        raise DataError("statistical features need at least 2 timesteps")
    mean = windows.mean(axis=1)
    var = windows.var(axis=1)  # population
    energy, entropy = _spectral(windows)
    per_channel = np.stack([mean, var, energy, entropy], axis=2)  # [n, C, 4]
    flat = per_channel.reshape(len(windows), -1)
    return np.concatenate([flat, _correlations(windows)], axis=1)


def statistical_features(window: np.ndarray) -> FeatureVector:
    """Statistical features for a single [T, 3] window."""
    return FeatureVector(
        values=statistical_feature_matrix(window)[0], schema_id=STATISTICAL_SCHEMA_ID
    )


def ecdf_schema(n_quantiles: int, n_channels: int = 3) -> list[str]:
    names = []
    for c in range(n_channels):
        names += [f"q{k}_{c}" for k in range(n_quantiles)]
        names.append(f"mean_{c}")
    return names


def ecdf_schema_id(n_quantiles: int) -> str:
    return f"ecdf{n_quantiles}/v1"


def ecdf_feature_matrix(windows: np.ndarray, n_quantiles: int = 25) -> np.ndarray:
    """Inverse-ECDF quantiles plus channel means, shape [n, C*(q+1)].

    Quantile k sits at probability k/(q-1); values interpolate linearly
    between adjacent order statistics, so the first and last quantile
    equal the channel minimum and maximum.
    """
    if n_quantiles < 2:
        raise DataError(f"n_quantiles must be >= 2, got {n_quantiles}")
    windows = _as_batch(windows)
    probs = np.linspace(0.0, 1.0, n_quantiles)
    quant = np.quantile(windows, probs, axis=1)  # [q, n, C]
    quant = np.moveaxis(quant, 0, 2)  # [n, C, q]
    mean = windows.mean(axis=1)[:, :, None]  # [n, C, 1]
    return np.concatenate([quant, mean], axis=2).reshape(len(windows), -1)


def ecdf_features(window: np.ndarray, n_quantiles: int = 25) -> FeatureVector:
    """ECDF features for a single [T, 3] window."""
    return FeatureVector(
        values=ecdf_feature_matrix(window, n_quantiles)[0],
        schema_id=ecdf_schema_id(n_quantiles),
    )


def features_to_csv(path, matrix: np.ndarray, schema: list[str], labels=None) -> None:
    """Export a feature matrix with its schema header (and optional labels)."""
    matrix = np.asarray(matrix)
    if matrix.shape[1] != len(schema):
        raise DataError(
            f"matrix has {matrix.shape[1]} columns but schema has {len(schema)}"
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        header = list(schema) + (["label"] if labels is not None else [])
        writer.writerow(header)
        for i, row in enumerate(matrix):
            cells = [f"{v:.10g}" for v in row]
            if labels is not None:
                cells.append(int(labels[i]))
            writer.writerow(cells)
