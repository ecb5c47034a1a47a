"""Decision-threshold calibration: SCut threshold search, candidate
permutations, hill-climbing, and the train-then-calibrate fit loop.

Thresholds gate a three-stage prediction chain (mention -> coreference ->
relation); relation quality is the selection signal throughout. Higher F is
better here; the engine negates F-scores when it ingests them as trial
scores.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Protocol, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def micro_f_beta(tp: int, fp: int, fn: int, beta: float = 1.0) -> float:
    """Micro-averaged F_beta from pooled counts; 0 when tp == 0 (covers the
    empty-prediction and empty-gold corners without dividing by zero)."""
    if tp < 0 or fp < 0 or fn < 0:
        raise ValueError("counts must be >= 0")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    b2 = beta * beta
    return (1.0 + b2) * precision * recall / (b2 * precision + recall)


def scut_candidates(probs: np.ndarray) -> np.ndarray:
    """Candidate cuts: midpoints of consecutive distinct sorted probabilities
    plus the boundaries 0 and 1."""
    distinct = np.unique(np.asarray(probs, dtype=float))
    mids = (distinct[:-1] + distinct[1:]) / 2.0 if distinct.size > 1 else np.array([])
    return np.concatenate([[0.0], mids, [1.0]])


def scut(
    probs: np.ndarray | Sequence[float],
    labels: np.ndarray | Sequence[bool],
    beta: float = 1.0,
    low_bound: float = 0.05,
) -> float:
    """Best single cut by F_beta with the decision rule p >= threshold.

    Ties take the smallest cut; an all-negative instance set returns 1.0
    (reject everything). The result is floored at low_bound.
    """
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if probs.shape != labels.shape:
        raise ValueError("probs and labels must align")
    if probs.size == 0 or not labels.any():
        return max(1.0, low_bound)
    cuts = scut_candidates(probs)
    pred = probs[None, :] >= cuts[:, None]
    tp = (pred & labels[None, :]).sum(axis=1)
    fp = (pred & ~labels[None, :]).sum(axis=1)
    fn = (~pred & labels[None, :]).sum(axis=1)
    b2 = beta * beta
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(tp > 0, (1.0 + b2) * tp / ((1.0 + b2) * tp + b2 * fn + fp), 0.0)
    best = int(np.argmax(f))  # argmax takes the first (smallest) maximizing cut
    return max(float(cuts[best]), low_bound)


def scut_per_class(
    probs: np.ndarray,
    labels: np.ndarray,
    class_ids: np.ndarray,
    n_classes: int,
    beta: float = 1.0,
    low_bound: float = 0.05,
) -> np.ndarray:
    """Independent SCut per class over dense ids [0, n_classes). Classes with
    no instances fall back to low_bound and are flagged in the log."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    class_ids = np.asarray(class_ids, dtype=int)
    if class_ids.size and (class_ids.min() < 0 or class_ids.max() >= n_classes):
        raise ValueError("class ids must be dense in [0, n_classes)")
    out = np.empty(n_classes)
    empty = []
    for c in range(n_classes):
        mask = class_ids == c
        if not mask.any():
            out[c] = low_bound
            empty.append(c)
            continue
        out[c] = scut(probs[mask], labels[mask], beta=beta, low_bound=low_bound)
    if empty:
        logger.warning("scut_per_class: %d empty classes fell back to low_bound: %s", len(empty), empty[:8])
    return out


@dataclass(frozen=True)
class ThresholdSet:
    """One threshold per chain stage: scalar mention and coreference cuts
    plus a per-class relation vector."""

    mention: float
    coref: float
    relation: tuple[float, ...]

    def __post_init__(self) -> None:
        for v in (self.mention, self.coref, *self.relation):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"thresholds must lie in [0, 1], got {v}")
        object.__setattr__(self, "relation", tuple(float(v) for v in self.relation))

    def to_json(self) -> dict[str, Any]:
        return {"mention": self.mention, "coref": self.coref, "relation": list(self.relation)}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ThresholdSet":
        return cls(mention=data["mention"], coref=data["coref"], relation=tuple(data["relation"]))

    @classmethod
    def uniform(cls, value: float, n_classes: int) -> "ThresholdSet":
        return cls(mention=value, coref=value, relation=(value,) * n_classes)


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class CandidateSet:
    """{base, base-delta, base+delta}, clipped to [0, 1], deduplicated, base
    first (so all-base combinations sort first in permutation order)."""

    base: float
    delta: float

    @property
    def values(self) -> tuple[float, ...]:
        vals = [self.base, _clip01(self.base - self.delta), _clip01(self.base + self.delta)]
        seen: list[float] = []
        for v in vals:
            if v not in seen:
                seen.append(v)
        return tuple(seen)


@dataclass(frozen=True)
class VectorCandidateSet:
    """The relation analogue: the whole vector shifted by a common scalar
    offset in {0, -delta, +delta}, elementwise clipped."""

    base: tuple[float, ...]
    delta: float

    @property
    def values(self) -> tuple[tuple[float, ...], ...]:
        variants = []
        for off in (0.0, -self.delta, self.delta):
            variants.append(tuple(_clip01(v + off) for v in self.base))
        seen: list[tuple[float, ...]] = []
        for v in variants:
            if v not in seen:
                seen.append(v)
        return tuple(seen)


def permutations(
    z_m: CandidateSet | float,
    z_c: CandidateSet | float,
    z_r: VectorCandidateSet | tuple[float, ...] | Sequence[float],
) -> list[ThresholdSet]:
    """Cartesian product of the per-stage candidate values. Fixed components
    contribute a single value, perturbed ones up to three, so perturbing
    1 / 2 / 3 components yields up to 3 / 9 / 27 sets. The all-base set
    comes first."""
    m_vals = z_m.values if isinstance(z_m, CandidateSet) else (float(z_m),)
    c_vals = z_c.values if isinstance(z_c, CandidateSet) else (float(z_c),)
    r_vals = z_r.values if isinstance(z_r, VectorCandidateSet) else (tuple(float(v) for v in z_r),)
    return [ThresholdSet(m, c, r) for m, c, r in itertools.product(m_vals, c_vals, r_vals)]


STAGES = ("mention", "coref", "relation")


@dataclass(frozen=True)
class CalibrationPolicy:
    """Knobs for the fit loop and the calibration hill-climb."""

    fit_delta: float = 0.05
    calib_delta: float = 0.025
    hill_climb_start_epoch: int = 11
    # fit-phase rotation over which stages get perturbed, cycled per epoch
    rotation: tuple[tuple[str, ...], ...] = (("coref",), ("relation",), ("coref", "relation"))
    # calibration-phase rotation; default perturbs everything each iteration
    calib_rotation: tuple[tuple[str, ...], ...] = (("mention", "coref", "relation"),)
    max_calib_iterations: int = 7
    patience: int = 1
    beta: float = 1.0
    low_bound: float = 0.05

    def __post_init__(self) -> None:
        for cycle in (*self.rotation, *self.calib_rotation):
            for stage in cycle:
                if stage not in STAGES:
                    raise ValueError(f"unknown stage {stage!r}")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_calib_iterations < 0:
            raise ValueError("max_calib_iterations must be >= 0")


BatchEvaluate = Callable[[list[ThresholdSet]], Sequence[float]]


def _stage_candidates(current: ThresholdSet, subset: Sequence[str], delta: float) -> list[ThresholdSet]:
    z_m = CandidateSet(current.mention, delta) if "mention" in subset else current.mention
    z_c = CandidateSet(current.coref, delta) if "coref" in subset else current.coref
    z_r = VectorCandidateSet(current.relation, delta) if "relation" in subset else current.relation
    return permutations(z_m, z_c, z_r)


def hill_climb(
    evaluate: BatchEvaluate,
    start: ThresholdSet,
    policy: CalibrationPolicy = CalibrationPolicy(),
    start_score: float | None = None,
) -> tuple[ThresholdSet, float, list[dict[str, Any]]]:
    """Iterated local search over threshold permutations.

    ``evaluate`` receives the whole permutation list and must score it in a
    single validation pass. Each iteration adopts the argmax (the all-base
    combination is listed first, so exact ties keep the current set); the
    climb stops after ``patience`` iterations without strict improvement of
    the best score ever seen, or after max_calib_iterations.
    """
    best_set, current = start, start
    best_score = -np.inf if start_score is None else float(start_score)
    stall = 0
    trajectory: list[dict[str, Any]] = []
    for j in range(1, policy.max_calib_iterations + 1):
        subset = policy.calib_rotation[(j - 1) % len(policy.calib_rotation)]
        perms = _stage_candidates(current, subset, policy.calib_delta)
        scores = list(evaluate(list(perms)))
        if len(scores) != len(perms):
            raise ValueError("evaluate must return one score per permutation")
        k = int(np.argmax(scores))
        current = perms[k]
        improved = scores[k] > best_score
        if improved:
            best_score = float(scores[k])
            best_set = perms[k]
            stall = 0
        else:
            stall += 1
        trajectory.append(
            {
                "iteration": j,
                "n_permutations": len(perms),
                "adopted": current.to_json(),
                "score": float(scores[k]),
                "best_score": float(best_score) if np.isfinite(best_score) else None,
                "improved": improved,
            }
        )
        if stall >= policy.patience:
            break
    return best_set, float(best_score), trajectory


@dataclass
class ScoredInstances:
    """Flat per-instance predictions for one stage: probability, gold label,
    and (for relations) a dense class id."""

    probs: np.ndarray
    labels: np.ndarray
    class_ids: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=float)
        self.labels = np.asarray(self.labels, dtype=bool)
        if self.class_ids is not None:
            self.class_ids = np.asarray(self.class_ids, dtype=int)


@dataclass
class TaskPredictions:
    mention: ScoredInstances
    coref: ScoredInstances
    relation: ScoredInstances


class CalibratableModel(Protocol):
    """What the fit loop needs from a model: epoch training that returns the
    training-set prediction distributions, batched threshold validation in a
    single pass, final test scoring, and checkpoint snapshot/restore."""

    n_relation_classes: int

    def train_one_epoch(self) -> TaskPredictions: ...

    def validate_under_thresholds(self, threshold_sets: list[ThresholdSet]) -> list[float]: ...

    def test(self, thresholds: ThresholdSet) -> dict[str, float]: ...

    def snapshot(self) -> Any: ...

    def restore(self, state: Any) -> None: ...


@dataclass
class FitReport:
    epochs: list[dict[str, Any]]
    calibration: list[dict[str, Any]]
    thresholds: ThresholdSet
    best_epoch: int
    best_validation_f: float
    test_scores: dict[str, float]

    def to_json(self) -> dict[str, Any]:
        return {
            "epochs": self.epochs,
            "calibration": self.calibration,
            "thresholds": self.thresholds.to_json(),
            "best_epoch": self.best_epoch,
            "best_validation_f": self.best_validation_f,
            "test_scores": self.test_scores,
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def fit_with_calibration(
    model: CalibratableModel,
    n_epochs: int,
    policy: CalibrationPolicy = CalibrationPolicy(),
    initial: ThresholdSet | None = None,
) -> FitReport:
    """Train for n_epochs with per-epoch threshold upkeep, then hill-climb
    the thresholds of the best checkpoint, then test.

    Per epoch: mention threshold is re-fit by SCut on the fresh training
    distributions; from hill_climb_start_epoch onward the rotation schedule
    perturbs coreference/relation thresholds (relation's per-class base is
    seeded by per-class SCut at that first epoch), every permutation scored
    against validation in one pass, argmax adopted, checkpoint replaced on
    improvement. Earlier epochs only move the mention threshold.
    """
    C = model.n_relation_classes
    current = initial or ThresholdSet.uniform(0.5, C)
    best_val = -np.inf
    best_epoch = 0
    best_set = current
    best_state: Any = None
    epoch_log: list[dict[str, Any]] = []

    for epoch in range(1, n_epochs + 1):
        preds = model.train_one_epoch()
        m_thr = scut(preds.mention.probs, preds.mention.labels, beta=policy.beta, low_bound=policy.low_bound)
        current = replace(current, mention=m_thr)
        if epoch == policy.hill_climb_start_epoch:
            base = scut_per_class(
                preds.relation.probs,
                preds.relation.labels,
                preds.relation.class_ids,
                C,
                beta=policy.beta,
                low_bound=policy.low_bound,
            )
            current = replace(current, relation=tuple(base))
        if epoch >= policy.hill_climb_start_epoch:
            subset = policy.rotation[(epoch - policy.hill_climb_start_epoch) % len(policy.rotation)]
            perms = _stage_candidates(current, subset, policy.fit_delta)
        else:
            perms = [current]
        scores = list(model.validate_under_thresholds(list(perms)))
        k = int(np.argmax(scores))
        current = perms[k]
        val = float(scores[k])
        checkpointed = val > best_val
        if checkpointed:
            best_val, best_set, best_epoch = val, current, epoch
            best_state = model.snapshot()
        epoch_log.append(
            {
                "epoch": epoch,
                "mention_threshold": m_thr,
                "thresholds": current.to_json(),
                "n_permutations": len(perms),
                "validation_relation_f": val,
                "checkpointed": checkpointed,
            }
        )

    if best_state is not None:
        model.restore(best_state)
    final_set, final_score, trajectory = hill_climb(
        model.validate_under_thresholds, best_set, policy, start_score=best_val
    )
    test_scores = model.test(final_set)
    return FitReport(
        epochs=epoch_log,
        calibration=trajectory,
        thresholds=final_set,
        best_epoch=best_epoch,
        best_validation_f=float(max(best_val, final_score)),
        test_scores=test_scores,
    )
