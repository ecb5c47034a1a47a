"""Shared optimization domain types: fidelity designations, trials, sprint
results, and the objective contract samplers drive."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Protocol

from .hyperband import RungRecord
from .space import HPoint


class FidelityError(ValueError):
    """Raised for malformed fidelity designations."""


class TrialPruned(Exception):
    """Raised inside an objective when the pruner stops a trial early."""

    def __init__(self, resource: int, last_score: float):
        super().__init__(f"pruned at resource {resource} with score {last_score}")
        self.resource = resource
        self.last_score = last_score


@dataclass(frozen=True)
class FidelitySpec:
    """Constant per-sprint training conditions.

    train_fraction_denominator k_T and val_fraction_denominator k_V mean the
    objective sees 1/k_T of the training data and 1/k_V of the validation
    data; max_epochs is the per-trial training budget. The scheduler flag and
    early-stop mode are part of the fidelity: two sprints only share a
    fidelity when every field matches.
    """

    train_fraction_denominator: int = 1
    val_fraction_denominator: int = 1
    max_epochs: int = 25
    scheduler_enabled: bool = True
    early_stop: str = "none"  # none | end_of_warmup
    calibration_epochs: int = 0

    def __post_init__(self) -> None:
        if self.train_fraction_denominator < 1 or self.val_fraction_denominator < 1:
            raise FidelityError("fraction denominators must be >= 1")
        if self.max_epochs < 1:
            raise FidelityError("max_epochs must be >= 1")
        if self.early_stop not in ("none", "end_of_warmup"):
            raise FidelityError(f"unknown early_stop mode {self.early_stop!r}")
        if self.calibration_epochs < 0:
            raise FidelityError("calibration_epochs must be >= 0")

    def designation(self) -> str:
        return f"T{self.train_fraction_denominator}_V{self.val_fraction_denominator}_M{self.max_epochs}"

    @classmethod
    def parse_designation(cls, text: str, **overrides: Any) -> "FidelitySpec":
        """Parse 'T{k}_V{k}_M{epochs}'; the M part may be omitted (defaults
        to 25 epochs)."""
        m = re.fullmatch(r"T(\d+)_V(\d+)(?:_M(\d+))?", text)
        if not m:
            raise FidelityError(f"bad fidelity designation {text!r}")
        return cls(
            train_fraction_denominator=int(m.group(1)),
            val_fraction_denominator=int(m.group(2)),
            max_epochs=int(m.group(3)) if m.group(3) else 25,
            **overrides,
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "train_fraction_denominator": self.train_fraction_denominator,
            "val_fraction_denominator": self.val_fraction_denominator,
            "max_epochs": self.max_epochs,
            "scheduler_enabled": self.scheduler_enabled,
            "early_stop": self.early_stop,
            "calibration_epochs": self.calibration_epochs,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "FidelitySpec":
        return cls(**data)


FULL_FIDELITY = FidelitySpec()


class TrialStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETE = "complete"
    PRUNED = "pruned"
    FAILED = "failed"


@dataclass(frozen=True)
class Provenance:
    """Where a trial's point came from: a fresh suggestion, a warm-primed
    import (score copied), or a cold-primed re-evaluation."""

    kind: str = "fresh"  # fresh | warm_primed | cold_primed
    source_sprint: str | None = None
    source_trial: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("fresh", "warm_primed", "cold_primed"):
            raise ValueError(f"unknown provenance kind {self.kind!r}")

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "source_sprint": self.source_sprint, "source_trial": self.source_trial}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Provenance":
        return cls(**data)


@dataclass
class Trial:
    id: int
    point: HPoint
    status: TrialStatus = TrialStatus.PENDING
    final_score: float | None = None
    intermediate: list[RungRecord] = field(default_factory=list)
    provenance: Provenance = field(default_factory=Provenance)
    seed: int = 0
    error: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "point": self.point.to_json(),
            "status": self.status.value,
            "final_score": self.final_score,
            "intermediate": [
                {"resource": r.resource, "score": r.score, "prunable": r.prunable} for r in self.intermediate
            ],
            "provenance": self.provenance.to_json(),
            "seed": self.seed,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Trial":
        return cls(
            id=data["id"],
            point=HPoint.from_json(data["point"]),
            status=TrialStatus(data["status"]),
            final_score=data["final_score"],
            intermediate=[
                RungRecord(trial_id=data["id"], resource=r["resource"], score=r["score"], prunable=r["prunable"])
                for r in data["intermediate"]
            ],
            provenance=Provenance.from_json(data["provenance"]),
            seed=data["seed"],
            error=data.get("error"),
        )

    def serialize(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# Reporter: called by objectives at each (epoch, score, prunable) tick.
# Returning False tells the objective to stop training early.
Reporter = Callable[[int, float, bool], bool]


class ObjectiveHandle(Protocol):
    """What a sampler needs from an objective: evaluate a point under a
    fidelity with a seed, streaming intermediate scores to the reporter and
    returning the final score (lower is better)."""

    def evaluate(
        self, point: HPoint, fidelity: FidelitySpec, seed: int, reporter: Reporter | None = None
    ) -> float: ...


@dataclass
class FunctionObjective:
    """Adapter turning a plain ``f(point) -> float`` into an ObjectiveHandle.
    Reports a single non-prunable tick at the final epoch."""

    fn: Callable[[HPoint], float]

    def evaluate(
        self, point: HPoint, fidelity: FidelitySpec, seed: int, reporter: Reporter | None = None
    ) -> float:
        score = float(self.fn(point))
        if reporter is not None:
            reporter(fidelity.max_epochs, score, False)
        return score


@dataclass
class SprintResult:
    """Outcome of one sprint run: every trial plus the incumbent."""

    trials: list[Trial]
    best_trial: Trial | None

    @property
    def best_score(self) -> float | None:
        return None if self.best_trial is None else self.best_trial.final_score

    def completed(self) -> list[Trial]:
        return [t for t in self.trials if t.status is TrialStatus.COMPLETE]

    def scatter(self, dim_name: str) -> list[dict[str, Any]]:
        """Per-dimension (value, score) points for plotting, one entry per
        trial that produced a score."""
        out = []
        for t in self.trials:
            if t.final_score is None:
                continue
            out.append(
                {
                    "trial_id": t.id,
                    "value": t.point.values.get(dim_name),
                    "score": t.final_score,
                    "provenance": t.provenance.kind,
                }
            )
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "trials": [t.to_json() for t in self.trials],
            "best_trial": self.best_trial.to_json() if self.best_trial else None,
        }


def incumbent(trials: list[Trial]) -> Trial | None:
    """Best completed trial by final score (lower is better); ties go to the
    earlier trial id."""
    done = [t for t in trials if t.status is TrialStatus.COMPLETE and t.final_score is not None]
    if not done:
        return None
    return min(done, key=lambda t: (t.final_score, t.id))
