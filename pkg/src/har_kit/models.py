"""Builders for the toolkit's convolutional architectures.

The shared backbone is three blocks of (temporal conv, ReLU, dropout)
with filters (32, 64, 96) and kernels (24, 16, 8).  Classification and
contrastive variants append global max pooling over time to produce a
96-dim embedding; the reconstruction variants keep the temporal axis.
All variants share parameter shapes, so conv weights learned under any
pretext task load into the classification encoder.

With valid padding the stack consumes 45 timesteps, so windows must be
at least kernel_sum - len(kernels) + 1 = 46 samples long.
"""

from __future__ import annotations

import numpy as np

from har_kit.nn.layers import (
    Conv1d,
    Dense,
    Dropout,
    GlobalMaxPool,
    ReLU,
    TransposedConv1d,
)
from har_kit.nn.model import Sequential
from har_kit.rng import substream

ENCODER_FILTERS = (32, 64, 96)
ENCODER_KERNELS = (24, 16, 8)
DEFAULT_DROPOUT = 0.1
CLASSIFIER_HIDDEN = 1024
PROJECTION_DIMS = (256, 128, 50)
N_CHANNELS = 3


def min_window_length(kernels=ENCODER_KERNELS) -> int:
    return sum(kernels) - len(kernels) + 1


def _conv_blocks(name, seed, dtype, padding, filters, kernels, dropout):
    layers = []
    in_ch = N_CHANNELS
    for i, (out_ch, kernel) in enumerate(zip(filters, kernels)):
        layers.append(
            Conv1d(in_ch, out_ch, kernel, padding=padding,
                   rng=substream(seed, f"init-{name}", i), dtype=dtype)
        )
        layers.append(ReLU())
        layers.append(Dropout(dropout, rng=substream(seed, f"dropout-{name}", i)))
        in_ch = out_ch
    return layers


def build_encoder(win_len, seed, dtype=np.float32, padding="valid", pooled=True,
                  filters=ENCODER_FILTERS, kernels=ENCODER_KERNELS,
                  dropout=DEFAULT_DROPOUT, name="encoder") -> Sequential:
    """Conv backbone; ``pooled`` appends global max pooling over time."""
    layers = _conv_blocks(name, seed, dtype, padding, filters, kernels, dropout)
    if pooled:
        layers.append(GlobalMaxPool())
    return Sequential(layers, input_shape=(win_len, N_CHANNELS), dtype=dtype)


def build_classifier_head(embed_dim, n_classes, seed, dtype=np.float32,
                          hidden=CLASSIFIER_HIDDEN, name="head") -> Sequential:
    """Two dense layers (hidden, n_classes) with ReLU between."""
    layers = [
        Dense(embed_dim, hidden, rng=substream(seed, f"init-{name}", 0), dtype=dtype),
        ReLU(),
        Dense(hidden, n_classes, rng=substream(seed, f"init-{name}", 1), dtype=dtype),
    ]
    return Sequential(layers, input_shape=(embed_dim,), dtype=dtype)


def build_projection_head(embed_dim, seed, dtype=np.float32,
                          dims=PROJECTION_DIMS, name="projection") -> Sequential:
    """Contrastive projection MLP with ReLU between the dense layers."""
    layers = []
    d_in = embed_dim
    for i, d_out in enumerate(dims):
        if i:
            layers.append(ReLU())
        layers.append(
            Dense(d_in, d_out, rng=substream(seed, f"init-{name}", i), dtype=dtype)
        )
        d_in = d_out
    return Sequential(layers, input_shape=(embed_dim,), dtype=dtype)


def build_decoder(encoded_len, seed, dtype=np.float32,
                  filters=ENCODER_FILTERS, kernels=ENCODER_KERNELS,
                  name="decoder") -> Sequential:
    """Mirror of the valid-padding backbone using transposed convolutions.

    Restores [n, encoded_len, filters[-1]] back to the original window
    shape, e.g. 55 -> 62 -> 77 -> 100 for the default geometry.
    """
    widths = (filters[-2::-1]) + (N_CHANNELS,)  # e.g. (64, 32, 3)
    layers = []
    in_ch = filters[-1]
    for i, (out_ch, kernel) in enumerate(zip(widths, kernels[::-1])):
        if i:
            layers.append(ReLU())
        layers.append(
            TransposedConv1d(in_ch, out_ch, kernel,
                             rng=substream(seed, f"init-{name}", i), dtype=dtype)
        )
        in_ch = out_ch
    return Sequential(layers, input_shape=(encoded_len, filters[-1]), dtype=dtype)


def build_reconstruction_head(win_len, seed, dtype=np.float32,
                              embed_channels=ENCODER_FILTERS[-1],
                              name="recon_head") -> Sequential:
    """Pointwise (kernel 1) conv mapping per-timestep features back to channels."""
    layers = [
        Conv1d(embed_channels, N_CHANNELS, 1, padding="valid",
               rng=substream(seed, f"init-{name}", 0), dtype=dtype)
    ]
    return Sequential(layers, input_shape=(win_len, embed_channels), dtype=dtype)


def build_discriminator_head(embed_dim, seed, dtype=np.float32, hidden=256,
                             name="disc") -> Sequential:
    """Binary applied/not-applied classifier for one transform kind."""
    layers = [
        Dense(embed_dim, hidden, rng=substream(seed, f"init-{name}", 0), dtype=dtype),
        ReLU(),
        Dense(hidden, 1, rng=substream(seed, f"init-{name}", 1), dtype=dtype),
    ]
    return Sequential(layers, input_shape=(embed_dim,), dtype=dtype)
