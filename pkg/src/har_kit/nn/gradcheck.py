"""Central-difference verification of the engine's analytic gradients.

Models are chained through a fixed random projection loss
L = sum(output * r), which breaks symmetries that could hide sign
errors.  Dropout masks are held constant during the check so the loss
is a deterministic function.  Run models in float64; at 32-bit the
finite differences drown in rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class GradCheckReport:
    tolerance: float
    per_param: dict[str, float] = field(default_factory=dict)
    input_error: float | None = None

    @property
    def max_error(self) -> float:
        errors = list(self.per_param.values())
        if self.input_error is not None:
            errors.append(self.input_error)
        return max(errors) if errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def worst(self, k: int = 5) -> list[tuple[str, float]]:
        return sorted(self.per_param.items(), key=lambda kv: -kv[1])[:k]


def _rel_err(a: float, n: float) -> float:
    denom = max(abs(a), abs(n), 1e-12)
    return abs(a - n) / denom


def grad_check(parts, x, tolerance: float = 1e-4, eps: float = 1e-5,
               seed: int = 0, check_input: bool = True,
               loss_grad_pair=None) -> GradCheckReport:
    """Compare analytic and numeric gradients for a chain of models.

    ``parts`` is one Sequential or a list applied in order.  By default
    the scalar loss is the random projection of the final output;
    ``loss_grad_pair(y) -> (loss, dy)`` substitutes a custom loss.
    Returns a report with the max relative error per parameter.
    """
    if not isinstance(parts, (list, tuple)):
        parts = [parts]
    x = np.asarray(x, dtype=np.float64)
    for part in parts:
        if part.dtype != np.float64:
            raise ValueError("grad_check requires models built with dtype=float64")
        part.set_dropout_hold(True)
        part.zero_grad()

    rng = np.random.default_rng(seed)
    projection = None

    def run(inp):
        nonlocal projection
        y = inp
        for part in parts:
            y = part.forward(y, train=True)
        if loss_grad_pair is not None:
            return loss_grad_pair(y)
        if projection is None:
            projection = rng.standard_normal(y.shape)
        return float((y * projection).sum()), projection

    loss0, dy = run(x)
    dx = dy
    for part in reversed(parts):
        dx = part.backward(dx)

    report = GradCheckReport(tolerance=tolerance)
    try:
        for p, part in enumerate(parts):
            grads = dict(part.named_grads())
            for name, param in part.named_params():
                analytic = grads[name]
                worst = 0.0
                flat = param.reshape(-1)
                aflat = analytic.reshape(-1)
                for i in range(flat.size):
                    orig = flat[i]
                    flat[i] = orig + eps
                    lp, _ = run(x)
                    flat[i] = orig - eps
                    lm, _ = run(x)
                    flat[i] = orig
                    numeric = (lp - lm) / (2.0 * eps)
                    worst = max(worst, _rel_err(float(aflat[i]), numeric))
                report.per_param[f"part{p}/{name}"] = worst

        if check_input:
            worst = 0.0
            flat = x.reshape(-1)
            dflat = np.asarray(dx, dtype=np.float64).reshape(-1)
            # probe a subset of inputs; full input scans add little
            idx = np.linspace(0, flat.size - 1, min(flat.size, 64)).astype(int)
            for i in idx:
                orig = flat[i]
                flat[i] = orig + eps
                lp, _ = run(x)
                flat[i] = orig - eps
                lm, _ = run(x)
                flat[i] = orig
                numeric = (lp - lm) / (2.0 * eps)
                worst = max(worst, _rel_err(float(dflat[i]), numeric))
            report.input_error = worst
    finally:
        for part in parts:
            part.set_dropout_hold(False)
    return report
