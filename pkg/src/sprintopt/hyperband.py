"""Successive-halving budget arithmetic and asynchronous rung pruning.

Scores follow the engine convention: lower is better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class HyperbandError(ValueError):
    """Raised for invalid budget or bracket arguments."""


@dataclass(frozen=True)
class HyperbandConfig:
    max_resource: int  # R, in epochs
    eta: int = 3
    s_max: int = 0
    budget: int = 0  # B = (s_max + 1) * R

    @classmethod
    def derive(cls, max_resource: int, eta: int = 3) -> "HyperbandConfig":
        return derive_config(max_resource, eta)


@dataclass(frozen=True)
class Bracket:
    s: int
    # (n_configs, resource) per rung, resource in epochs
    rungs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class RungRecord:
    """One intermediate report: score observed at a resource level."""

    trial_id: int
    resource: int
    score: float
    prunable: bool = True


def derive_config(max_resource: int, eta: int = 3) -> HyperbandConfig:
    """s_max = floor(log_eta(R)) via exact integer arithmetic, B = (s_max+1)*R."""
    if max_resource < 1:
        raise HyperbandError(f"max_resource must be >= 1, got {max_resource}")
    if eta < 2:
        raise HyperbandError(f"eta must be >= 2, got {eta}")
    s_max = 0
    while eta ** (s_max + 1) <= max_resource:
        s_max += 1
    return HyperbandConfig(max_resource=max_resource, eta=eta, s_max=s_max, budget=(s_max + 1) * max_resource)


def bracket_schedule(config: HyperbandConfig, s: int) -> Bracket:
    """Classic bracket s: n = ceil((B/R) * eta^s / (s+1)) starting configs at
    initial resource R * eta^(-s); rung i keeps floor(n * eta^(-i)) configs at
    resource R * eta^(i-s), rounded to whole epochs (never below 1)."""
    if not 0 <= s <= config.s_max:
        raise HyperbandError(f"bracket s must be in [0, {config.s_max}], got {s}")
    R, eta = config.max_resource, config.eta
    # exact integer ceil/floor: float powers of eta round badly at eta**s_max
    n = -(-config.budget * eta**s // (R * (s + 1)))
    rungs = []
    for i in range(s + 1):
        n_i = n // eta**i
        r_i = max(1, round(R * float(eta) ** (i - s)))
        rungs.append((n_i, r_i))
    return Bracket(s=s, rungs=tuple(rungs))


def should_prune(rung_scores: Sequence[float], trial_score: float, eta: int = 3) -> bool:
    """Asynchronous rung decision. ``rung_scores`` are all scores reported at
    this rung so far, the calling trial's included. Keep the best
    max(1, floor(n/eta)); prune only when strictly worse than the boundary, so
    ties survive and a first arrival is never pruned."""
    if eta < 2:
        raise HyperbandError(f"eta must be >= 2, got {eta}")
    n = len(rung_scores)
    if n <= 1:
        return False
    keep = max(1, n // eta)
    boundary = sorted(rung_scores)[keep - 1]
    return trial_score > boundary


def resource_ticks(
    max_epochs: int, train_stride: int = 10, calibration_epochs: int = 0
) -> list[tuple[int, bool]]:
    """The (epoch, prunable) report schedule for one trial.

    Every training epoch emits a non-prunable validation tick; every
    train_stride-th epoch additionally emits a prunable checkpoint;
    calibration epochs are appended non-prunable.
    """
    if max_epochs < 1:
        raise HyperbandError(f"max_epochs must be >= 1, got {max_epochs}")
    if train_stride < 1:
        raise HyperbandError(f"train_stride must be >= 1, got {train_stride}")
    if calibration_epochs < 0:
        raise HyperbandError("calibration_epochs must be >= 0")
    ticks: list[tuple[int, bool]] = []
    for epoch in range(1, max_epochs + 1):
        ticks.append((epoch, False))
        if epoch % train_stride == 0:
            ticks.append((epoch, True))
    for extra in range(1, calibration_epochs + 1):
        ticks.append((max_epochs + extra, False))
    return ticks
