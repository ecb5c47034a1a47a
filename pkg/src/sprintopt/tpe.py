"""Tree-structured Parzen estimator: quantile split, per-dimension Parzen
densities with a uniform prior component, and density-ratio suggestion.

Numeric densities live in each dimension's normalized [0, 1] coordinate
(log dimensions through their log transform), so bandwidths are comparable
across dimensions and normalization can be checked by quadrature on [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.stats import norm

from .space import Dimension, HPoint, SearchSpace, sample_uniform


class TPEError(ValueError):
    """Raised for degenerate splits or malformed densities."""


@dataclass(frozen=True)
class TPEConfig:
    gamma: float = 0.25
    n_candidates: int = 24
    n_startup: int = 10

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise TPEError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.n_candidates < 1:
            raise TPEError("n_candidates must be >= 1")
        if self.n_startup < 0:
            raise TPEError("n_startup must be >= 0")


def split_trials(trials: Sequence[Any], gamma: float = 0.25) -> tuple[list[Any], list[Any]]:
    """Order by (score, trial id) and put the best max(1, ceil(gamma * n))
    into the good set; ties on score fall to the earlier id, hence into good
    first. Needs >= 2 scored trials."""
    scored = [t for t in trials if t.final_score is not None and math.isfinite(t.final_score)]
    if len(scored) < 2:
        raise TPEError(f"need >= 2 scored trials to split, have {len(scored)}")
    scored.sort(key=lambda t: (t.final_score, t.id))
    n_good = max(1, math.ceil(gamma * len(scored)))
    return scored[:n_good], scored[n_good:]


@dataclass
class ParzenDensity:
    """Mixture of truncated Gaussians on [0, 1] plus one uniform prior
    component, all equally weighted. For categorical dimensions the density
    is an add-one-smoothed category distribution instead."""

    kind: str
    centers: np.ndarray  # internal [0,1] coords; category counts for categorical
    bandwidths: np.ndarray
    category_probs: np.ndarray | None = None

    @property
    def n_components(self) -> int:
        return len(self.centers)

    def _component_matrix(self, u: np.ndarray) -> np.ndarray:
        # rows: query points, cols: mixture components (prior last)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        cols = [np.ones_like(u)]  # uniform prior on [0, 1]
        if self.n_components:
            c = self.centers[None, :]
            h = self.bandwidths[None, :]
            z = (u[:, None] - c) / h
            trunc_mass = norm.cdf((1.0 - c) / h) - norm.cdf((0.0 - c) / h)
            dens = norm.pdf(z) / (h * trunc_mass)
            dens[(u < 0.0) | (u > 1.0), :] = 0.0
            cols = [dens[:, j] for j in range(dens.shape[1])] + cols
        return np.column_stack(cols)

    def pdf(self, u: np.ndarray | float) -> np.ndarray:
        if self.kind == "categorical":
            raise TPEError("use category_probs for categorical densities")
        mat = self._component_matrix(u)
        return mat.mean(axis=1)

    def log_pdf(self, u: np.ndarray | float) -> np.ndarray:
        return np.log(np.maximum(self.pdf(u), 1e-300))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Inverse-CDF sampling per component; deterministic given rng."""
        if self.kind == "categorical":
            raise TPEError("sample categories via category_probs")
        comp = rng.integers(0, self.n_components + 1, n)
        u01 = rng.uniform(0.0, 1.0, n)
        out = np.empty(n)
        prior = comp == self.n_components
        out[prior] = u01[prior]
        for j in range(self.n_components):
            mask = comp == j
            if not mask.any():
                continue
            c, h = self.centers[j], self.bandwidths[j]
            lo, hi = norm.cdf((0.0 - c) / h), norm.cdf((1.0 - c) / h)
            out[mask] = c + h * norm.ppf(lo + u01[mask] * (hi - lo))
        return np.clip(out, 0.0, 1.0)


def fit_parzen(values: Sequence[Any], dimension: Dimension, bandwidth_rule: str = "nearest_neighbor") -> ParzenDensity:
    """One density per dimension.

    Numeric: one truncated Gaussian per observed value (center in normalized
    coordinates), bandwidth = max(distance to nearest neighboring center,
    range / (1 + n_components)); a lone center has no neighbor, so the floor
    term alone applies. Plus the uniform prior component.

    Categorical: add-one smoothed counts over the dimension's categories.
    """
    if bandwidth_rule != "nearest_neighbor":
        raise TPEError(f"unknown bandwidth rule {bandwidth_rule!r}")
    if dimension.kind == "categorical":
        counts = np.array([sum(1 for v in values if v == c) for c in dimension.categories], dtype=float)
        probs = (counts + 1.0) / (counts.sum() + len(counts))
        return ParzenDensity(kind="categorical", centers=counts, bandwidths=np.zeros_like(counts), category_probs=probs)

    centers = np.array(sorted(dimension.to_unit(v) for v in values), dtype=float)
    n = len(centers)
    floor = 1.0 / (1.0 + n) if n else 1.0
    if n == 0:
        bandwidths = np.array([])
    elif n == 1:
        bandwidths = np.array([floor])
    else:
        gaps = np.diff(centers)
        nn = np.empty(n)
        nn[0] = gaps[0]
        nn[-1] = gaps[-1]
        if n > 2:
            nn[1:-1] = np.minimum(gaps[:-1], gaps[1:])
        bandwidths = np.maximum(nn, floor)
    return ParzenDensity(kind=dimension.kind, centers=centers, bandwidths=bandwidths)


def _suggest_dimension(
    dim: Dimension,
    good_values: list[Any],
    bad_values: list[Any],
    config: TPEConfig,
    rng: np.random.Generator,
) -> tuple[Any, dict[str, Any]]:
    l_dens = fit_parzen(good_values, dim)
    g_dens = fit_parzen(bad_values, dim)
    if dim.kind == "categorical":
        idx = rng.choice(len(dim.categories), size=config.n_candidates, p=l_dens.category_probs)
        score = np.log(l_dens.category_probs[idx]) - np.log(g_dens.category_probs[idx])
        best = int(np.argmax(score))
        return dim.categories[int(idx[best])], {"candidates": idx, "log_l": np.log(l_dens.category_probs[idx]), "log_g": np.log(g_dens.category_probs[idx])}
    cands = l_dens.sample(rng, config.n_candidates)
    log_l = l_dens.log_pdf(cands)
    log_g = g_dens.log_pdf(cands)
    best = int(np.argmax(log_l - log_g))
    return dim.from_unit(float(cands[best])), {"candidates": cands, "log_l": log_l, "log_g": log_g}


def tpe_suggest(
    trials: Sequence[Any],
    space: SearchSpace,
    config: TPEConfig = TPEConfig(),
    rng_seed: int | Sequence[int] = 0,
    debug: bool = False,
) -> HPoint | tuple[HPoint, dict[str, dict[str, Any]]]:
    """Suggest the candidate maximizing log l(x) - log g(x) independently per
    dimension. Below n_startup scored trials this falls back to a uniform
    draw. Deterministic for a given (history, seed)."""
    scored = [t for t in trials if t.final_score is not None and math.isfinite(t.final_score)]
    if len(scored) < config.n_startup or len(scored) < 2:
        point = sample_uniform(space, rng_seed)
        return (point, {}) if debug else point
    good, bad = split_trials(scored, config.gamma)
    rng = np.random.default_rng(rng_seed)
    values: dict[str, Any] = {}
    info: dict[str, dict[str, Any]] = {}
    for dim in space.dimensions:
        if dim.is_frozen:
            values[dim.name] = dim.frozen_value
            continue
        g_vals = [t.point.values[dim.name] for t in good]
        b_vals = [t.point.values[dim.name] for t in bad]
        values[dim.name], info[dim.name] = _suggest_dimension(dim, g_vals, b_vals, config, rng)
    point = HPoint(values)
    return (point, info) if debug else point
