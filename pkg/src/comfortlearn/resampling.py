"""Minority-class oversampling on standardized training matrices.

Two synthesizers share one planning rule: every minority class is raised to
``min(round(1.5 * n), n_majority)``, half away from zero. The interpolation
synthesizer blends a class row toward one of its nearest same-class
neighbours; the generative synthesizer trains a small per-class
generator/discriminator pair with a moment-matching term and falls back to
interpolation if it diverges.

Run these on training rows only, after standardization; synthesizing across
the test partition would leak it into the model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .neural import DenseLayer, init_layers

logger = logging.getLogger(__name__)

__all__ = [
    "ResamplePlan",
    "AugmentedData",
    "GanConfig",
    "make_plan",
    "oversample",
    "oversample_interpolation",
    "oversample_gan",
]

SYNTHESIZERS = ("interpolation", "gan")


def _round_half_away(x: float) -> int:
    return int(np.floor(x + 0.5)) if x >= 0 else int(np.ceil(x - 0.5))


@dataclass(frozen=True)
class ResamplePlan:
    """Target post-synthesis count per class value."""

    targets: dict[int, int]
    synthesizer: str
    seed: int | Sequence[int] = 0

    def __post_init__(self):
        if self.synthesizer not in SYNTHESIZERS:
            raise ValueError(f"unknown synthesizer {self.synthesizer!r}")


@dataclass
class AugmentedData:
    """Original rows (verbatim, original order) followed by synthetic rows.

    ``provenance`` parallels the rows: ``("original", i)`` carries the input
    row index, ``("synthetic", class_value, j)`` numbers synthetic rows per
    class. Leak audits key off these tags.
    """

    matrix: np.ndarray
    labels: np.ndarray
    provenance: list[tuple]

    @property
    def n_original(self) -> int:
        return sum(1 for tag in self.provenance if tag[0] == "original")


def make_plan(
    class_counts: Mapping[int, int],
    synthesizer: str = "interpolation",
    seed: int | Sequence[int] = 0,
) -> ResamplePlan:
    """Growth plan: each class rises to min(round(1.5 n), n_majority).

    The majority class target equals its own count, so it is never
    synthesized; ties for majority all stay untouched.
    """
    if not class_counts:
        raise ValueError("no class counts given")
    bad = {c: n for c, n in class_counts.items() if n <= 0}
    if bad:
        raise ValueError(f"non-positive class counts: {bad}")
    n_majority = max(class_counts.values())
    targets = {
        int(c): min(_round_half_away(1.5 * n), n_majority)
        for c, n in class_counts.items()
    }
    return ResamplePlan(targets=targets, synthesizer=synthesizer, seed=seed)


def _class_rows(X: np.ndarray, y: np.ndarray, plan: ResamplePlan) -> dict[int, np.ndarray]:
    present = {int(c) for c in np.unique(y)}
    missing = sorted(set(plan.targets) - present)
    if missing:
        raise ValueError(f"plan covers classes {missing} absent from the labels")
    return {c: np.flatnonzero(y == c) for c in sorted(plan.targets)}


def _check_matrix(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise ValueError(f"matrix {X.shape} does not match {len(y)} labels")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix contains non-finite values")
    return X, y


def _assemble(
    X: np.ndarray,
    y: np.ndarray,
    synthetic: dict[int, np.ndarray],
) -> AugmentedData:
    """Originals first, then synthetic blocks in ascending class order."""
    blocks = [X]
    labels = [np.asarray(y)]
    provenance: list[tuple] = [("original", i) for i in range(X.shape[0])]
    for c in sorted(synthetic):
        rows = synthetic[c]
        if rows.shape[0] == 0:
            continue
        blocks.append(rows)
        labels.append(np.full(rows.shape[0], c, dtype=y.dtype))
        provenance.extend(("synthetic", c, j) for j in range(rows.shape[0]))
    return AugmentedData(
        matrix=np.vstack(blocks),
        labels=np.concatenate(labels),
        provenance=provenance,
    )


def _interpolate_class(
    rows: np.ndarray, deficit: int, rng: np.random.Generator
) -> np.ndarray:
    """Synthetic rows as convex blends of a class row and one of its k
    nearest same-class neighbours (k = 5, fewer when the class is tiny)."""
    n = rows.shape[0]
    if n == 1:
        return np.repeat(rows, deficit, axis=0)  # nothing to blend toward
    k = min(5, n - 1)
    # pairwise distances within the class; argsort column 0 is the row itself
    sq = ((rows[:, None, :] - rows[None, :, :]) ** 2).sum(axis=2)
    neighbours = np.argsort(sq, axis=1, kind="stable")[:, 1:k + 1]
    out = np.empty((deficit, rows.shape[1]))
    for j in range(deficit):
        i = int(rng.integers(n))
        nb = int(neighbours[i, rng.integers(k)])
        u = rng.uniform()
        out[j] = rows[i] + u * (rows[nb] - rows[i])
    return out


def oversample_interpolation(
    X: np.ndarray, y: np.ndarray, plan: ResamplePlan
) -> AugmentedData:
    """Grow minority classes to the plan targets by neighbour interpolation.

    Deterministic for a fixed plan seed: each class draws from its own
    generator seeded by (plan seed, class position).
    """
    X, y = _check_matrix(X, y)
    by_class = _class_rows(X, y, plan)
    synthetic: dict[int, np.ndarray] = {}
    for position, c in enumerate(sorted(plan.targets)):
        idx = by_class[c]
        deficit = plan.targets[c] - idx.size
        if deficit < 0:
            raise ValueError(f"class {c} already exceeds its target "
                             f"({idx.size} > {plan.targets[c]})")
        if deficit == 0:
            synthetic[c] = np.empty((0, X.shape[1]))
            continue
        rng = np.random.default_rng([_plan_seed(plan), position])
        synthetic[c] = _interpolate_class(X[idx], deficit, rng)
    return _assemble(X, y, synthetic)


def _plan_seed(plan: ResamplePlan) -> int | list[int]:
    seed = plan.seed
    return list(seed) if isinstance(seed, (tuple, list)) else int(seed)


# ---------------------------------------------------------------------------
# Per-class generative synthesizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GanConfig:
    """Settings for the per-class generator/discriminator pair.

    ``moment_weight`` scales a regularizer pulling the generated batch's
    per-column mean and spread toward the real batch's; it is what keeps the
    tiny generator honest on low-count classes.
    """

    latent_dim: int = 8
    generator_hidden: tuple[int, ...] = (32,)
    discriminator_hidden: tuple[int, ...] = (32,)
    epochs: int = 300
    batch_size: int = 128
    learning_rate: float = 1e-3
    moment_weight: float = 1.0
    seed: int | Sequence[int] = 0


class _GanDiverged(ArithmeticError):
    pass


class _Adam:
    """Adam state for one dense stack."""

    def __init__(self, layers: list[DenseLayer], lr: float):
        self.layers = layers
        self.lr = lr
        self.m = [(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in layers]
        self.v = [(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in layers]
        self.t = 0

    def step(self, grads: list[tuple[np.ndarray, np.ndarray]]) -> None:
        self.t += 1
        b1c = 1 - 0.9**self.t
        b2c = 1 - 0.999**self.t
        for layer, (mw, mb), (vw, vb), (gw, gb) in zip(self.layers, self.m, self.v, grads):
            mw *= 0.9; mw += 0.1 * gw
            mb *= 0.9; mb += 0.1 * gb
            vw *= 0.999; vw += 0.001 * gw * gw
            vb *= 0.999; vb += 0.001 * gb * gb
            layer.weights -= self.lr * (mw / b1c) / (np.sqrt(vw / b2c) + 1e-8)
            layer.biases -= self.lr * (mb / b1c) / (np.sqrt(vb / b2c) + 1e-8)


def _stack_forward(layers: list[DenseLayer], X: np.ndarray) -> list[np.ndarray]:
    acts = [X]
    a = X
    for layer in layers:
        z = a @ layer.weights + layer.biases
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z
        acts.append(a)
    return acts


def _stack_backward(
    layers: list[DenseLayer], acts: list[np.ndarray], d_out: np.ndarray
) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Gradients per layer plus the gradient w.r.t. the stack input."""
    grads: list = [None] * len(layers)
    delta = d_out
    for i in range(len(layers) - 1, -1, -1):
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        delta = delta @ layers[i].weights.T
        if i > 0 and layers[i - 1].activation == "relu":
            delta = delta * (acts[i] > 0.0)
    return grads, delta


#: Sampled rows beyond this magnitude count as divergence: inputs are
#: standardized, so legitimate synthetic rows stay within a few units.
_SANE_MAGNITUDE = 1e3


def _train_class_gan(
    rows: np.ndarray, deficit: int, config: GanConfig, seed: list
) -> np.ndarray:
    """Train one generator/discriminator pair on a class and sample it.

    Raises :class:`_GanDiverged` on a non-finite loss or parameter, or when
    sampled rows leave the plausible range, so the caller can fall back.
    """
    n, d = rows.shape
    rng = np.random.default_rng(seed)
    gen = init_layers((config.latent_dim, *config.generator_hidden, d),
                      seed=seed + [1])
    disc = init_layers((d, *config.discriminator_hidden, 1), seed=seed + [2])
    opt_g = _Adam(gen, config.learning_rate)
    opt_d = _Adam(disc, config.learning_rate)
    batch = max(2, min(config.batch_size, n))
    # fixed full-class moment targets; batch moments would be noisy
    mu_r = rows.mean(axis=0)
    sd_r = rows.std(axis=0)

    def sigmoid(z):
        return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))

    for _ in range(config.epochs):
        if not all(np.all(np.isfinite(l.weights)) for l in gen):
            raise _GanDiverged("generator weights non-finite")
        real = rows[rng.integers(n, size=batch)]
        z = rng.standard_normal((batch, config.latent_dim))
        fake = _stack_forward(gen, z)[-1]

        # discriminator step: logistic loss on real-vs-fake logits
        acts_r = _stack_forward(disc, real)
        acts_f = _stack_forward(disc, fake)
        s_r, s_f = acts_r[-1], acts_f[-1]
        d_loss = float(np.mean(np.logaddexp(0.0, -s_r)) + np.mean(np.logaddexp(0.0, s_f)))
        if not np.isfinite(d_loss):
            raise _GanDiverged(f"discriminator loss {d_loss}")
        grads_r, _ = _stack_backward(disc, acts_r, (sigmoid(s_r) - 1.0) / batch)
        grads_f, _ = _stack_backward(disc, acts_f, sigmoid(s_f) / batch)
        opt_d.step([(gr[0] + gf[0], gr[1] + gf[1]) for gr, gf in zip(grads_r, grads_f)])

        # generator step: non-saturating adversarial term + moment matching
        z = rng.standard_normal((batch, config.latent_dim))
        acts_g = _stack_forward(gen, z)
        fake = acts_g[-1]
        acts_d = _stack_forward(disc, fake)
        s = acts_d[-1]
        g_loss = float(np.mean(np.logaddexp(0.0, -s)))
        _, d_fake_adv = _stack_backward(disc, acts_d, (sigmoid(s) - 1.0) / batch)

        mu_f = fake.mean(axis=0)
        sd_f = fake.std(axis=0) + 1e-8
        moment_loss = float(np.mean((mu_f - mu_r) ** 2) + np.mean((sd_f - sd_r) ** 2))
        # d/d fake of mean((mu_f-mu_r)^2) + mean((sd_f-sd_r)^2), column-wise
        d_fake_mom = (2.0 * (mu_f - mu_r) / (d * batch)
                      + 2.0 * (sd_f - sd_r) * (fake - mu_f) / (d * batch * sd_f))
        if not np.isfinite(g_loss + moment_loss):
            raise _GanDiverged(f"generator loss {g_loss + moment_loss}")

        grads_g, _ = _stack_backward(
            gen, acts_g, d_fake_adv + config.moment_weight * d_fake_mom)
        opt_g.step(grads_g)

    z = rng.standard_normal((deficit, config.latent_dim))
    out = _stack_forward(gen, z)[-1]
    if not np.all(np.isfinite(out)) or np.abs(out).max() > _SANE_MAGNITUDE:
        raise _GanDiverged("sampled rows non-finite or implausibly large")
    return out


def oversample_gan(
    X: np.ndarray,
    y: np.ndarray,
    plan: ResamplePlan,
    config: GanConfig | None = None,
) -> AugmentedData:
    """Grow minority classes with per-class generators.

    A class whose generator diverges is synthesized by interpolation instead
    and the fallback is logged; the output row counts always match the plan.
    """
    X, y = _check_matrix(X, y)
    config = config or GanConfig(seed=plan.seed)
    by_class = _class_rows(X, y, plan)
    synthetic: dict[int, np.ndarray] = {}
    for position, c in enumerate(sorted(plan.targets)):
        idx = by_class[c]
        deficit = plan.targets[c] - idx.size
        if deficit <= 0:
            if deficit < 0:
                raise ValueError(f"class {c} already exceeds its target")
            synthetic[c] = np.empty((0, X.shape[1]))
            continue
        seed = _plan_seed(plan)
        seed = (seed if isinstance(seed, list) else [seed]) + [position]
        rows = X[idx]
        if idx.size < 2:
            synthetic[c] = np.repeat(rows, deficit, axis=0)
            continue
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                synthetic[c] = _train_class_gan(rows, deficit, config, seed)
        except _GanDiverged as exc:
            logger.warning("class %+d generator diverged (%s); "
                           "falling back to interpolation", c, exc)
            rng = np.random.default_rng(seed + [99])
            synthetic[c] = _interpolate_class(rows, deficit, rng)
    return _assemble(X, y, synthetic)


def oversample(
    X: np.ndarray,
    y: np.ndarray,
    plan: ResamplePlan,
    gan_config: GanConfig | None = None,
) -> AugmentedData:
    """Dispatch on the plan's synthesizer."""
    if plan.synthesizer == "gan":
        return oversample_gan(X, y, plan, gan_config)
    return oversample_interpolation(X, y, plan)
