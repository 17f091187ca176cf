"""Self-supervised pretext objectives.

Four label-free tasks train the shared conv backbone:

* autoencoder: reconstruct the window through a mirrored decoder; loss
  is the squared Frobenius norm of the residual, averaged over the
  batch.
* masked reconstruction: ~10% of timesteps are selected; of those, 80%
  are zeroed, 10% left unchanged, and 10% replaced with another random
  timestep of the same window.  The squared error counts only the
  selected positions, normalized by the number of masked entries.
* multi-task discrimination: each transform kind is applied to each
  window independently with probability 0.5 and a per-kind binary head
  predicts whether it was applied; the total is the sum over heads.
* contrastive (NT-Xent): two augmented views per window; the positive
  for anchor i in one view is index i in the other view, negatives are
  the other same-view rows (j != i) plus all cross-view rows, with
  cosine similarity scaled by a temperature.

Loss functions return scalars and, where the caller trains, run the
backward passes that populate parameter gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from har_kit.augment import AugmentParams, DEFAULT_PARAMS, apply_transform
from har_kit.errors import DataError
from har_kit.nn.losses import bce_with_logits_loss

PRETEXT_TASKS = ("autoencoder", "masked", "multitask", "simclr")


# --------------------------------------------------------------------------
# autoencoder
# --------------------------------------------------------------------------

def autoencoder_loss(windows, encoder, decoder, train=True, backprop=True) -> float:
    """Mean per-window squared Frobenius reconstruction error."""
    windows = np.asarray(windows, dtype=encoder.dtype)
    n = len(windows)
    recon = decoder.forward(encoder.forward(windows, train), train)
    if recon.shape != windows.shape:
        raise DataError(
            f"decoder output {recon.shape} does not match input {windows.shape}"
        )
    diff = recon - windows
    loss = float((diff.astype(np.float64) ** 2).sum() / n)
    if backprop:
        encoder.backward(decoder.backward(2.0 * diff / n))
    return loss


# --------------------------------------------------------------------------
# masked reconstruction
# --------------------------------------------------------------------------

@dataclass
class MaskPlan:
    """Which timesteps are masked and what happens to each.

    ``mask`` is True at selected (loss-bearing) timesteps; ``action``
    is 0 = zero out, 1 = keep, 2 = replace with ``replace_src`` (all -1
    where unmasked).  Positions apply to whole timesteps across the 3
    channels.
    """

    mask: np.ndarray  # [n, T] bool
    action: np.ndarray  # [n, T] int8
    replace_src: np.ndarray  # [n, T] int64

    @property
    def n_masked(self) -> int:
        return int(self.mask.sum())


ACTION_ZERO, ACTION_KEEP, ACTION_REPLACE = 0, 1, 2
DEFAULT_ACTION_PROBS = (0.8, 0.1, 0.1)


def make_mask_plan(count, win_len, rng, mask_frac=0.1,
                   action_probs=DEFAULT_ACTION_PROBS) -> MaskPlan:
    """Sample masking plans for ``count`` windows of ``win_len`` steps.

    round(mask_frac * win_len) timesteps are chosen uniformly without
    replacement per window; actions follow ``action_probs``; replacement
    sources are uniform over the *other* timesteps of the same window.
    """
    if win_len < 10:
        raise DataError(f"masking needs windows of >= 10 steps, got {win_len}")
    p0, p1, p2 = action_probs
    if abs(p0 + p1 + p2 - 1.0) > 1e-9 or min(p0, p1, p2) < 0:
        raise DataError("action_probs must be a distribution over 3 actions")
    m = int(np.floor(mask_frac * win_len + 0.5))
    if m < 1 or m > win_len:
        raise DataError(f"mask fraction {mask_frac} selects {m} of {win_len} steps")

    positions = np.argsort(rng.random((count, win_len)), axis=1)[:, :m]
    u = rng.random((count, m))
    actions = np.where(u < p0, ACTION_ZERO,
                       np.where(u < p0 + p1, ACTION_KEEP, ACTION_REPLACE)).astype(np.int8)
    src = rng.integers(0, win_len - 1, size=(count, m))
    src = src + (src >= positions)  # skip the masked position itself

    mask = np.zeros((count, win_len), dtype=bool)
    action = np.full((count, win_len), -1, dtype=np.int8)
    replace_src = np.full((count, win_len), -1, dtype=np.int64)
    rows = np.repeat(np.arange(count), m)
    cols = positions.reshape(-1)
    mask[rows, cols] = True
    action[rows, cols] = actions.reshape(-1)
    replace_src[rows, cols] = src.reshape(-1)
    return MaskPlan(mask=mask, action=action, replace_src=replace_src)


def apply_mask_plan(windows, plan: MaskPlan) -> np.ndarray:
    """Corrupt windows according to the plan (zero / keep / replace)."""
    windows = np.asarray(windows)
    out = windows.copy()
    zero_rows, zero_cols = np.nonzero(plan.action == ACTION_ZERO)
    out[zero_rows, zero_cols, :] = 0.0
    rep_rows, rep_cols = np.nonzero(plan.action == ACTION_REPLACE)
    out[rep_rows, rep_cols, :] = windows[rep_rows, plan.replace_src[rep_rows, rep_cols], :]
    return out


def masked_reconstruction_loss(windows, plan: MaskPlan, encoder, head,
                               train=True, backprop=True) -> float:
    """Squared error at masked positions only, per masked entry."""
    windows = np.asarray(windows, dtype=encoder.dtype)
    corrupted = apply_mask_plan(windows, plan)
    recon = head.forward(encoder.forward(corrupted, train), train)
    if recon.shape != windows.shape:
        raise DataError(
            f"reconstruction head output {recon.shape} does not match "
            f"input {windows.shape}"
        )
    weight = plan.mask[:, :, None]
    n_entries = plan.n_masked * windows.shape[2]
    if n_entries == 0:
        raise DataError("mask plan selects no timesteps")
    diff = np.where(weight, recon.astype(np.float64) - windows, 0.0)
    loss = float((diff**2).sum() / n_entries)
    if backprop:
        encoder.backward(head.backward(2.0 * diff / n_entries))
    return loss


# --------------------------------------------------------------------------
# multi-task transform discrimination
# --------------------------------------------------------------------------

def multitask_loss(batch, encoder, heads: dict, rng,
                   params: AugmentParams = DEFAULT_PARAMS,
                   apply_prob: float = 0.5, train=True, backprop=True):
    """Sum of per-transform binary cross-entropies on the shared embedding.

    ``heads`` maps transform name -> binary head.  For each kind the
    batch is independently half-transformed and the head must tell which
    windows were touched.  Returns (total loss, {kind: loss}).
    Gradients accumulate into the shared encoder across branches.
    """
    batch = np.asarray(batch)
    if not heads:
        raise DataError("multitask_loss needs at least one head")
    n = len(batch)
    per_task = {}
    total = 0.0
    for name in heads:
        head = heads[name]
        applied = rng.random(n) < apply_prob
        views = batch.copy()
        if applied.any():
            views[applied] = apply_transform(name, batch[applied], rng, params)
        emb = encoder.forward(views, train)
        logits = head.forward(emb, train)[:, 0].astype(np.float64)
        loss, dlogits = bce_with_logits_loss(logits, applied.astype(np.float64))
        per_task[name] = loss
        total += loss
        if backprop:
            encoder.backward(head.backward(dlogits[:, None]))
    return total, per_task


# --------------------------------------------------------------------------
# contrastive (NT-Xent)
# --------------------------------------------------------------------------

def nt_xent_loss(o1, o2, temperature: float, eps: float = 1e-8):
    """Normalized temperature-scaled cross entropy over two views.

    For anchor i of view 1 the positive is row i of view 2; the
    denominator sums the same-view similarities over j != i plus all
    cross-view similarities (the positive included).  The loss is
    symmetrized over both views and averaged over the 2n anchors.
    Returns (loss, d_o1, d_o2).
    """
    if temperature <= 0:
        raise DataError("temperature must be positive")
    o1 = np.asarray(o1, dtype=np.float64)
    o2 = np.asarray(o2, dtype=np.float64)
    if o1.shape != o2.shape or o1.ndim != 2 or len(o1) == 0:
        raise DataError("nt_xent_loss expects two equal [n, d] embedding arrays")
    n = len(o1)
    tau = float(temperature)

    r1 = np.linalg.norm(o1, axis=1)
    r2 = np.linalg.norm(o2, axis=1)
    u = o1 / (r1 + eps)[:, None]
    v = o2 / (r2 + eps)[:, None]

    sim_uu = u @ u.T
    sim_uv = u @ v.T
    sim_vv = v @ v.T

    neg_inf = np.float64(-np.inf)
    m1 = np.concatenate([sim_uu / tau, sim_uv / tau], axis=1)
    m1[np.arange(n), np.arange(n)] = neg_inf  # same-view j == i excluded
    m2 = np.concatenate([sim_vv / tau, sim_uv.T / tau], axis=1)
    m2[np.arange(n), np.arange(n)] = neg_inf

    def row_softmax_and_loss(m, target_cols):
        mx = m.max(axis=1, keepdims=True)
        e = np.exp(m - mx)
        z = e.sum(axis=1, keepdims=True)
        lse = (np.log(z) + mx)[:, 0]
        loss_rows = lse - m[np.arange(n), target_cols]
        return e / z, loss_rows

    targets = n + np.arange(n)
    p1, loss1 = row_softmax_and_loss(m1, targets)
    p2, loss2 = row_softmax_and_loss(m2, targets)
    loss = float((loss1.sum() + loss2.sum()) / (2 * n))

    scale = 1.0 / (2 * n * tau)
    eye = np.eye(n)
    g_uu = p1[:, :n] * scale  # diagonal already zero
    g_vv = p2[:, :n] * scale
    g_uv = (p1[:, n:] - eye) * scale + ((p2[:, n:] - eye) * scale).T

    du = (g_uu + g_uu.T) @ u + g_uv @ v
    dv = (g_vv + g_vv.T) @ v + g_uv.T @ u

    def through_norm(g, o, r):
        denom = r + eps
        radial = (g * o).sum(axis=1) / (np.maximum(r, 1e-30) * denom**2)
        return g / denom[:, None] - o * radial[:, None]

    return loss, through_norm(du, o1, r1), through_norm(dv, o2, r2)


def simclr_batch_loss(batch, pair, encoder, projection, rng,
                      params: AugmentParams = DEFAULT_PARAMS,
                      temperature: float = 0.1, train=True, backprop=True) -> float:
    """One contrastive step: augment two views, embed, NT-Xent.

    The two views run through the models as one concatenated batch so a
    single backward pass sees consistent activations.
    """
    batch = np.asarray(batch)
    n = len(batch)
    view1 = apply_transform(pair[0], batch, rng, params)
    view2 = apply_transform(pair[1], batch, rng, params)
    both = np.concatenate([view1, view2], axis=0)
    z = projection.forward(encoder.forward(both, train), train)
    loss, d1, d2 = nt_xent_loss(z[:n], z[n:], temperature)
    if backprop:
        dz = np.concatenate([d1, d2], axis=0)
        encoder.backward(projection.backward(dz))
    return loss
