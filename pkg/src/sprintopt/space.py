"""Search-space model: typed dimensions, pruning, widening and sampling.

A space is an ordered, immutable collection of dimensions. Every edit
(pruning to the hull of the best trials, widening one bound, freezing)
produces a new space with ``version + 1`` and a parent pointer, so the
full lineage of a tuning campaign stays auditable.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Protocol, Sequence

import numpy as np

logger = logging.getLogger(__name__)

KINDS = ("log_uniform", "uniform", "integer", "categorical")


class SpaceError(ValueError):
    """Raised for malformed dimensions, spaces, or illegal edits."""


@dataclass(frozen=True)
class Dimension:
    """One tunable coordinate.

    ``frozen_value`` set means the dimension is pinned: samplers must emit
    exactly that value and space edits must leave the dimension alone.
    """

    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    categories: tuple[Any, ...] | None = None
    frozen_value: Any = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SpaceError(f"unknown dimension kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.categories:
                raise SpaceError(f"{self.name}: categorical needs >= 1 category")
            if self.low is not None or self.high is not None:
                raise SpaceError(f"{self.name}: categorical takes no bounds")
            object.__setattr__(self, "categories", tuple(self.categories))
        else:
            if self.categories is not None:
                raise SpaceError(f"{self.name}: numeric kind takes no categories")
            if self.low is None or self.high is None:
                raise SpaceError(f"{self.name}: numeric kind needs low/high")
            if not self.is_frozen and not self.low < self.high:
                raise SpaceError(f"{self.name}: low < high required, got [{self.low}, {self.high}]")
            if self.kind == "log_uniform" and self.low <= 0:
                raise SpaceError(f"{self.name}: log_uniform needs low > 0")
            if self.kind == "integer":
                if self.low != int(self.low) or self.high != int(self.high):
                    raise SpaceError(f"{self.name}: integer bounds must be integral")
                object.__setattr__(self, "low", int(self.low))
                object.__setattr__(self, "high", int(self.high))

    @property
    def is_frozen(self) -> bool:
        return self.frozen_value is not None

    def holds(self, value: Any) -> bool:
        """Membership test for a single value, frozen-aware."""
        if self.is_frozen:
            return value == self.frozen_value
        if self.kind == "categorical":
            return value in self.categories
        if not isinstance(value, (int, float, np.integer, np.floating)):
            return False
        if isinstance(value, bool):
            return False
        v = float(value)
        if self.kind == "integer" and v != int(v):
            return False
        return self.low <= v <= self.high

    # Normalized [0, 1] coordinate; log dimensions map through log so that
    # equal normalized steps are equal multiplicative steps.
    def to_unit(self, value: float) -> float:
        if self.kind == "categorical":
            raise SpaceError(f"{self.name}: categorical has no scalar unit coordinate")
        if self.kind == "log_uniform":
            return (math.log(value) - math.log(self.low)) / (math.log(self.high) - math.log(self.low))
        return (float(value) - self.low) / (self.high - self.low)

    def from_unit(self, u: float) -> float:
        if self.kind == "categorical":
            raise SpaceError(f"{self.name}: categorical has no scalar unit coordinate")
        u = min(1.0, max(0.0, float(u)))
        if self.kind == "log_uniform":
            return math.exp(math.log(self.low) + u * (math.log(self.high) - math.log(self.low)))
        x = self.low + u * (self.high - self.low)
        if self.kind == "integer":
            return int(min(self.high, max(self.low, round(x))))
        return x


@dataclass(frozen=True)
class HPoint:
    """A concrete assignment of one value per dimension."""

    values: dict[str, Any]

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def to_json(self) -> dict[str, Any]:
        return dict(self.values)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "HPoint":
        return cls(values=dict(data))


@dataclass(frozen=True)
class MarginPolicy:
    """How far pruned ranges extend beyond the top-k hull, per kind."""

    log_factor: float = 1.5
    uniform_delta: float = 0.01
    integer_pad: int = 1


class ScoredTrial(Protocol):
    point: HPoint
    final_score: float | None


@dataclass(frozen=True)
class SearchSpace:
    name: str
    dimensions: tuple[Dimension, ...]
    version: int = 0
    parent_version: int | None = None
    # rule that produced this version, for the audit trail (not serialized)
    audit_rule: str | None = None
    degenerate_dims: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise SpaceError("duplicate dimension names")
        object.__setattr__(self, "dimensions", tuple(self.dimensions))

    def dimension(self, name: str) -> Dimension:
        for d in self.dimensions:
            if d.name == name:
                return d
        raise SpaceError(f"no dimension named {name!r}")

    @property
    def active_dimensions(self) -> tuple[Dimension, ...]:
        return tuple(d for d in self.dimensions if not d.is_frozen)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dimensions)

    def to_json(self) -> dict[str, Any]:
        dims = []
        for d in self.dimensions:
            dims.append(
                {
                    "name": d.name,
                    "kind": d.kind,
                    "low": d.low,
                    "high": d.high,
                    "categories": list(d.categories) if d.categories is not None else None,
                    "frozen": d.frozen_value,
                }
            )
        return {"name": self.name, "version": self.version, "parent": self.parent_version, "dimensions": dims}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "SearchSpace":
        dims = tuple(
            Dimension(
                name=d["name"],
                kind=d["kind"],
                low=d["low"],
                high=d["high"],
                categories=tuple(d["categories"]) if d.get("categories") is not None else None,
                frozen_value=d.get("frozen"),
            )
            for d in data["dimensions"]
        )
        return cls(name=data["name"], dimensions=dims, version=data["version"], parent_version=data.get("parent"))

    def serialize(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def contains(space: SearchSpace, point: HPoint) -> bool:
    """True iff the point names exactly the space's dimensions and every
    value lies in range (frozen dimensions must carry the frozen value)."""
    if set(point.values) != set(space.names):
        return False
    return all(d.holds(point.values[d.name]) for d in space.dimensions)


def sample_uniform(space: SearchSpace, rng_seed: int | Sequence[int]) -> HPoint:
    """One uniform draw; log dimensions uniform in log space, integers on the
    lattice, categoricals equiprobable. Deterministic for a given seed."""
    if not space.active_dimensions:
        raise SpaceError("no active dimensions")
    rng = np.random.default_rng(rng_seed)
    values: dict[str, Any] = {}
    for d in space.dimensions:
        if d.is_frozen:
            values[d.name] = d.frozen_value
        elif d.kind == "log_uniform":
            values[d.name] = float(np.exp(rng.uniform(np.log(d.low), np.log(d.high))))
        elif d.kind == "uniform":
            values[d.name] = float(rng.uniform(d.low, d.high))
        elif d.kind == "integer":
            values[d.name] = int(rng.integers(d.low, d.high + 1))
        else:
            values[d.name] = d.categories[int(rng.integers(len(d.categories)))]
    return HPoint(values)


def _top_k_trials(trials: Iterable[ScoredTrial], k: int) -> list[ScoredTrial]:
    done = [t for t in trials if t.final_score is not None and math.isfinite(t.final_score)]
    if len(done) < k:
        raise SpaceError(f"need >= {k} completed trials with finite scores, have {len(done)}")
    done.sort(key=lambda t: t.final_score)  # lower is better
    return done[:k]


def prune_to_top_k(
    space: SearchSpace,
    trials: Sequence[ScoredTrial],
    k: int,
    margins: MarginPolicy | None = None,
) -> SearchSpace:
    """Shrink every active dimension to the hull of the k best trials plus a
    kind-specific margin, clipped to the current bounds.

    log_uniform: [a / log_factor, b * log_factor]
    uniform:     [a - uniform_delta, b + uniform_delta]
    integer:     [a - integer_pad, b + integer_pad]
    categorical: exactly the categories appearing among the top k

    A numeric dimension whose top-k values collapse to one point is left
    unchanged and flagged (a human decides whether to freeze it).
    """
    margins = margins or MarginPolicy()
    top = _top_k_trials(trials, k)
    new_dims: list[Dimension] = []
    degenerate: list[str] = []
    rules: list[str] = []
    for d in space.dimensions:
        if d.is_frozen:
            new_dims.append(d)
            continue
        vals = [t.point.values[d.name] for t in top]
        if d.kind == "categorical":
            kept = tuple(c for c in d.categories if c in set(vals))
            new_dims.append(replace(d, categories=kept))
            rules.append(f"{d.name}: top-{k} categories {list(kept)!r}")
            continue
        a, b = min(vals), max(vals)
        if a == b:
            degenerate.append(d.name)
            new_dims.append(d)
            rules.append(f"{d.name}: degenerate range at {a!r}, left unchanged")
            logger.warning("prune_to_top_k: %s has a degenerate top-%d range at %r", d.name, k, a)
            continue
        if d.kind == "log_uniform":
            lo, hi = max(a / margins.log_factor, d.low), min(b * margins.log_factor, d.high)
        elif d.kind == "uniform":
            lo, hi = max(a - margins.uniform_delta, d.low), min(b + margins.uniform_delta, d.high)
        else:
            lo = int(max(a - margins.integer_pad, d.low))
            hi = int(min(b + margins.integer_pad, d.high))
        new_dims.append(replace(d, low=lo, high=hi))
        rules.append(f"{d.name}: hull [{a!r}, {b!r}] -> [{lo!r}, {hi!r}]")
    return SearchSpace(
        name=space.name,
        dimensions=tuple(new_dims),
        version=space.version + 1,
        parent_version=space.version,
        audit_rule=f"prune_to_top_k(k={k}): " + "; ".join(rules),
        degenerate_dims=tuple(degenerate),
    )


def widen_dimension(space: SearchSpace, dim_name: str, side: str, amount: float) -> SearchSpace:
    """Move one bound outward: multiplicatively for log dimensions, additively
    for uniform/integer. Frozen and categorical dimensions reject widening."""
    if side not in ("low", "high"):
        raise SpaceError(f"side must be 'low' or 'high', got {side!r}")
    target = space.dimension(dim_name)
    if target.is_frozen:
        raise SpaceError(f"{dim_name} is frozen")
    if target.kind == "categorical":
        raise SpaceError(f"{dim_name} is categorical; widen does not apply")
    if target.kind == "log_uniform":
        lo = target.low / amount if side == "low" else target.low
        hi = target.high * amount if side == "high" else target.high
    else:
        lo = target.low - amount if side == "low" else target.low
        hi = target.high + amount if side == "high" else target.high
        if target.kind == "integer":
            lo, hi = int(lo), int(hi)
    new_dims = tuple(replace(d, low=lo, high=hi) if d.name == dim_name else d for d in space.dimensions)
    return SearchSpace(
        name=space.name,
        dimensions=new_dims,
        version=space.version + 1,
        parent_version=space.version,
        audit_rule=f"widen_dimension({dim_name}, {side}, {amount!r})",
    )


def freeze_dimension(space: SearchSpace, dim_name: str, value: Any = None) -> SearchSpace:
    """Pin a dimension to a single value (new space version). With no value,
    numeric dimensions freeze at the midpoint of their current range (the
    geometric mean on log scales); categoricals need an explicit choice."""
    target = space.dimension(dim_name)
    if value is None:
        if target.kind == "categorical":
            raise SpaceError(f"{dim_name}: categorical freeze needs an explicit value")
        value = target.from_unit(0.5)
    if not target.holds(value) and not target.is_frozen:
        raise SpaceError(f"{dim_name}: frozen value {value!r} outside range")
    new_dims = tuple(replace(d, frozen_value=value) if d.name == dim_name else d for d in space.dimensions)
    return SearchSpace(
        name=space.name,
        dimensions=new_dims,
        version=space.version + 1,
        parent_version=space.version,
        audit_rule=f"freeze_dimension({dim_name}, {value!r})",
    )


def unfreeze_dimension(
    space: SearchSpace, dim_name: str, low: float | None = None, high: float | None = None
) -> SearchSpace:
    """Release a frozen dimension, optionally re-bounding it."""
    target = space.dimension(dim_name)
    if not target.is_frozen:
        raise SpaceError(f"{dim_name} is not frozen")
    new_dim = replace(
        target,
        frozen_value=None,
        low=target.low if low is None else low,
        high=target.high if high is None else high,
    )
    new_dims = tuple(new_dim if d.name == dim_name else d for d in space.dimensions)
    return SearchSpace(
        name=space.name,
        dimensions=new_dims,
        version=space.version + 1,
        parent_version=space.version,
        audit_rule=f"unfreeze_dimension({dim_name}, low={low!r}, high={high!r})",
    )
