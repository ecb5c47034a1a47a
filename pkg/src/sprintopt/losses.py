"""Loss-side utilities: asymmetric focal loss, uncertainty-weighted task
mixing, distance encoding, and the hyperparameter grouping schemes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .space import Dimension, SearchSpace

PROB_EPS = 1e-8


@dataclass(frozen=True)
class ASLParams:
    """Asymmetric loss knobs: probability margin for negatives and separate
    focusing exponents per polarity."""

    margin: float = 0.01
    gamma_pos: float = 1.0
    gamma_neg: float = 2.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.margin < 1.0:
            raise ValueError(f"margin must be in [0, 1), got {self.margin}")
        if self.gamma_pos < 0 or self.gamma_neg < 0:
            raise ValueError("focusing exponents must be >= 0")


def asl_loss(p: np.ndarray | float, y: np.ndarray | int, params: ASLParams = ASLParams()) -> np.ndarray | float:
    """Per-instance asymmetric focal loss.

    Positives: (1-p)^gamma_pos * (-log p).
    Negatives: shift p down by the margin, clamp at 0, then
    p_m^gamma_neg * (-log(1 - p_m)). With margin 0 and equal exponents this
    is focal loss; with exponents 0 it reduces to binary cross-entropy.
    """
    scalar = np.isscalar(p) and np.isscalar(y)
    p_arr = np.clip(np.asarray(p, dtype=float), PROB_EPS, 1.0 - PROB_EPS)
    y_arr = np.asarray(y)
    pos = (1.0 - p_arr) ** params.gamma_pos * (-np.log(p_arr))
    p_m = np.maximum(p_arr - params.margin, 0.0)
    neg = p_m**params.gamma_neg * (-np.log1p(-p_m))
    out = np.where(y_arr.astype(bool), pos, neg)
    return float(out) if scalar else out


def asl_grad_p(p: np.ndarray | float, y: np.ndarray | int, params: ASLParams = ASLParams()) -> np.ndarray | float:
    """Analytic d(asl_loss)/dp, for gradient checking against finite
    differences. Valid away from the clamp boundaries."""
    scalar = np.isscalar(p) and np.isscalar(y)
    p_arr = np.clip(np.asarray(p, dtype=float), PROB_EPS, 1.0 - PROB_EPS)
    y_arr = np.asarray(y).astype(bool)
    gp, gn, m = params.gamma_pos, params.gamma_neg, params.margin

    one_m_p = 1.0 - p_arr
    if gp == 0.0:
        d_pos = -1.0 / p_arr
    else:
        d_pos = gp * one_m_p ** (gp - 1.0) * np.log(p_arr) - one_m_p**gp / p_arr

    q = np.maximum(p_arr - m, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if gn == 0.0:
            d_neg = 1.0 / (1.0 - q)
        else:
            term = np.where(q > 0.0, gn * q ** (gn - 1.0) * (-np.log1p(-q)), 0.0)
            d_neg = term + np.where(q > 0.0, q**gn / (1.0 - q), 0.0)
    d_neg = np.where(q > 0.0, d_neg, 0.0 if gn > 0.0 else d_neg)
    out = np.where(y_arr, d_pos, d_neg)
    return float(out) if scalar else out


@dataclass
class TaskLossBundle:
    """Per-task losses plus the learnable log-variance knobs s_t."""

    names: tuple[str, ...]
    losses: np.ndarray
    log_vars: np.ndarray

    def __post_init__(self) -> None:
        self.losses = np.asarray(self.losses, dtype=float)
        self.log_vars = np.asarray(self.log_vars, dtype=float)
        if not (len(self.names) == self.losses.size == self.log_vars.size):
            raise ValueError("names, losses and log_vars must align")
        if self.losses.size == 0:
            raise ValueError("bundle needs >= 1 task")


def uncertainty_weighted_loss(
    bundle: TaskLossBundle, entropy_weight: float = 0.01
) -> tuple[float, np.ndarray]:
    """Total = sum_t [exp(-s_t) * L_t + s_t] + lambda * H(w) where the w_t are
    the normalized task weights exp(-s_t)/sum_u exp(-s_u) and H is their
    Shannon entropy. Returns (total, w)."""
    raw = np.exp(-bundle.log_vars)
    weights = raw / raw.sum()
    entropy = float(-(weights * np.log(weights)).sum())
    total = float((raw * bundle.losses).sum() + bundle.log_vars.sum() + entropy_weight * entropy)
    return total, weights


def log_linear_encode(distance: float | np.ndarray, scale_max: float) -> float | np.ndarray:
    """Compress a nonnegative distance to [0, 1]-ish via
    log2(1 + d) / log2(1 + scale_max)."""
    if scale_max <= 0:
        raise ValueError(f"scale_max must be > 0, got {scale_max}")
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be >= 0")
    out = np.log2(1.0 + d) / np.log2(1.0 + scale_max)
    return float(out) if np.isscalar(distance) else out


# Learning-rate / weight-decay grouping schemes. GLOBAL shares one lr and one
# weight decay across the network and tunes the four task-loss weights;
# LR0_L2 gives each parameter group its own lr and weight decay.
PARAMETER_GROUPS = ("shared", "mention", "coreference", "entity", "relation")
TASK_WEIGHT_NAMES = ("mention_weight", "coref_weight", "entity_weight", "relation_weight")

LR_RANGE = (1e-6, 1e-2)
WD_RANGE = (1e-8, 1e-1)
TASK_WEIGHT_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class GroupingScheme:
    name: str
    # (group, lr dimension, wd dimension or None)
    groups: tuple[tuple[str, str, str | None], ...]
    extra_dims: tuple[str, ...] = ()


def grouping_dimensions(scheme: str) -> tuple[Dimension, ...]:
    """Dimension set for a grouping scheme.

    GLOBAL -> 6 dims: lr, weight_decay (log-uniform) and the four task
    weights (uniform). LR0_L2 -> 10 dims: per-group lr and weight decay,
    all log-uniform.
    """
    if scheme == "GLOBAL":
        dims = [
            Dimension("lr", "log_uniform", *LR_RANGE),
            Dimension("weight_decay", "log_uniform", *WD_RANGE),
        ]
        dims += [Dimension(n, "uniform", *TASK_WEIGHT_RANGE) for n in TASK_WEIGHT_NAMES]
        return tuple(dims)
    if scheme == "LR0_L2":
        dims = [Dimension(f"lr_{g}", "log_uniform", *LR_RANGE) for g in PARAMETER_GROUPS]
        dims += [Dimension(f"wd_{g}", "log_uniform", *WD_RANGE) for g in PARAMETER_GROUPS]
        return tuple(dims)
    raise ValueError(f"unknown grouping scheme {scheme!r}")


def grouping_space(scheme: str, name: str | None = None, with_warmup: bool = False) -> SearchSpace:
    """Convenience: a fresh version-0 space for a grouping scheme, optionally
    with an integer lr_warmup dimension for scheduler-aware objectives."""
    dims = list(grouping_dimensions(scheme))
    if with_warmup:
        dims.append(Dimension("lr_warmup", "integer", 1, 10))
    return SearchSpace(name=name or scheme.lower(), dimensions=tuple(dims))
