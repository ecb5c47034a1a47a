"""Deterministic test objectives: closed-form synthetic landscapes with
learning curves and fidelity effects, and a chained toy prediction pipeline
for threshold calibration.

Everything here is seed-reproducible so optimizer behavior can be asserted
exactly in tests.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .calibrate import ScoredInstances, TaskPredictions, ThresholdSet, micro_f_beta
from .hyperband import resource_ticks
from .space import Dimension, HPoint, SearchSpace
from .trials import FidelitySpec, Reporter

LANDSCAPES = ("quadratic_bowl", "branin_like", "multitask_sim")
OBJECTIVES = (*LANDSCAPES, "toy_pipeline")
TRAIN_STRIDE = 10


def _point_digest(point: HPoint) -> int:
    blob = json.dumps(point.to_json(), sort_keys=True).encode()
    return int.from_bytes(hashlib.md5(blob).digest()[:8], "big")


@dataclass
class SyntheticObjective:
    """Closed-form landscape with a planted optimum, an exponential learning
    curve whose rate depends on the learning-rate mismatch, deterministic
    per-rotation subset offsets, and optional Gaussian observation noise.

    Scores are lower-is-better; the full-fidelity, full-epoch score at the
    planted optimum is the global best.
    """

    landscape: str
    space: SearchSpace
    optimum: HPoint
    dim_weights: dict[str, float]
    noise_sd: float = 0.0
    tau0: float = 2.5
    start_score: float = 1.0
    # Offsets act as pseudo-noise on partial-fidelity scores; a surrogate
    # cannot separate points whose curvature-scaled score gap is below the
    # offset spread, so the amplitude caps attainable localization at
    # roughly sqrt(amplitude / curvature).
    subset_amplitude: float = 0.00005
    calibration_gain: float = 0.02
    warmup_default: int = 7

    def __post_init__(self) -> None:
        if self.landscape not in LANDSCAPES:
            raise ValueError(f"unknown landscape {self.landscape!r}")
        self._lr_dim = None
        for d in self.space.dimensions:
            if d.kind == "log_uniform" and (d.name == "lr" or d.name.startswith("lr")):
                self._lr_dim = d
                break

    # --- landscape ---------------------------------------------------------
    def _unit_offsets(self, point: HPoint) -> dict[str, float]:
        out = {}
        for d in self.space.dimensions:
            if d.kind == "categorical":
                out[d.name] = 0.0 if point.values[d.name] == self.optimum.values[d.name] else 1.0
            else:
                out[d.name] = d.to_unit(point.values[d.name]) - d.to_unit(self.optimum.values[d.name])
        return out

    def landscape_value(self, point: HPoint) -> float:
        """Converged (infinite-epoch, full-fidelity, noiseless) score."""
        deltas = self._unit_offsets(point)
        if self.landscape == "branin_like":
            x = -5.0 + 15.0 * self.space.dimension("x").to_unit(point.values["x"])
            y = 15.0 * self.space.dimension("y").to_unit(point.values["y"])
            a, b, c = 1.0, 5.1 / (4 * math.pi**2), 5.0 / math.pi
            r, s, t = 6.0, 10.0, 1.0 / (8 * math.pi)
            branin = a * (y - b * x**2 + c * x - r) ** 2 + s * (1 - t) * math.cos(x) + s
            pull = sum(v * v for v in deltas.values())
            return (branin - 0.3978873577297384) / 300.0 + 0.05 * pull
        total_w = sum(self.dim_weights.values())
        value = sum(self.dim_weights[n] * deltas[n] ** 2 for n in deltas) / total_w
        if self.landscape == "multitask_sim":
            names = [d.name for d in self.space.dimensions if d.kind != "categorical"]
            if len(names) >= 2:
                value += 0.2 * (deltas[names[0]] + deltas[names[-1]]) ** 2
        return value

    def normalized_distance(self, point: HPoint) -> float:
        """Euclidean distance to the planted optimum in unit coordinates."""
        return math.sqrt(sum(v * v for v in self._unit_offsets(point).values()))

    # --- fidelity / curve --------------------------------------------------
    def subset_offset(self, rotation_index: int, denominator: int) -> float:
        """Planted deterministic per-rotation score offset; zero at full
        fidelity (denominator 1)."""
        if denominator <= 1:
            return 0.0
        r = rotation_index % denominator
        return self.subset_amplitude * (2.0 * r / (denominator - 1) - 1.0)

    def _tau(self, point: HPoint) -> float:
        if self._lr_dim is None:
            return self.tau0
        lr = float(point.values[self._lr_dim.name])
        lr_star = float(self.optimum.values[self._lr_dim.name])
        return self.tau0 * (1.0 + abs(math.log10(lr) - math.log10(lr_star)))

    def _warmup(self, point: HPoint) -> int:
        v = point.values.get("lr_warmup", self.warmup_default)
        return int(v)

    def curve_score(self, point: HPoint, epoch: int, fidelity: FidelitySpec) -> float:
        """Noiseless, offset-free score after ``epoch`` training epochs."""
        d = self.landscape_value(point)
        tau = self._tau(point)
        if fidelity.scheduler_enabled:
            w = self._warmup(point)
            progress = 1.2 * (epoch - 0.5 * min(epoch, w))
        else:
            progress = float(epoch)
        return d + (self.start_score - d) * math.exp(-progress / tau)

    def evaluate(
        self, point: HPoint, fidelity: FidelitySpec, seed: int, reporter: Reporter | None = None
    ) -> float:
        k_t = fidelity.train_fraction_denominator
        rotation = seed % k_t if k_t > 1 else 0
        offset = self.subset_offset(rotation, k_t)
        rng = np.random.default_rng([_point_digest(point), seed & 0x7FFFFFFF])

        max_epochs = fidelity.max_epochs
        calib = fidelity.calibration_epochs
        if fidelity.early_stop == "end_of_warmup":
            max_epochs = min(max_epochs, self._warmup(point))
            calib = 0
        score = self.start_score
        for epoch, prunable in resource_ticks(max_epochs, TRAIN_STRIDE, calib):
            if epoch <= max_epochs:
                score = self.curve_score(point, epoch, fidelity)
            else:
                # calibration epochs trim the score slightly and never prune
                score *= 1.0 - self.calibration_gain * (epoch - max_epochs) / max(1, calib)
            score += offset
            if self.noise_sd > 0.0:
                score += float(rng.normal(0.0, self.noise_sd * math.sqrt(fidelity.val_fraction_denominator)))
            if reporter is not None and not reporter(epoch, score, prunable):
                return score
        return score


def make_objective(
    landscape: str,
    space: SearchSpace,
    seed: int = 0,
    noise_sd: float = 0.0,
    **kwargs: Any,
) -> SyntheticObjective | PipelineObjective:
    """Plant an interior optimum and per-dimension curvature weights,
    deterministically from the seed."""
    if landscape == "toy_pipeline":
        return PipelineObjective(space=space, seed=seed, noise_sd=noise_sd, **kwargs)
    if landscape not in LANDSCAPES:
        raise ValueError(f"unknown landscape {landscape!r}")
    rng = np.random.default_rng([seed, 17])
    values: dict[str, Any] = {}
    weights: dict[str, float] = {}
    for d in space.dimensions:
        if landscape == "branin_like" and d.name == "x":
            u = (math.pi + 5.0) / 15.0
        elif landscape == "branin_like" and d.name == "y":
            u = 2.275 / 15.0
        else:
            u = float(rng.uniform(0.15, 0.85))
        if d.kind == "categorical":
            values[d.name] = d.categories[int(rng.integers(len(d.categories)))]
        elif d.is_frozen:
            values[d.name] = d.frozen_value
        else:
            values[d.name] = d.from_unit(u)
        weights[d.name] = float(rng.uniform(0.6, 1.0))
    return SyntheticObjective(
        landscape=landscape, space=space, optimum=HPoint(values), dim_weights=weights, noise_sd=noise_sd, **kwargs
    )


# ---------------------------------------------------------------------------
# Toy chained pipeline: span mentions -> coreference pairs -> typed relations
# ---------------------------------------------------------------------------


@dataclass
class _Split:
    # mentions
    mention_signal: np.ndarray
    mention_noise: np.ndarray
    mention_gold: np.ndarray
    # pairs (span index pairs per doc, flattened)
    pair_spans: np.ndarray  # (P, 2) span indices
    coref_signal: np.ndarray
    coref_noise: np.ndarray
    coref_gold: np.ndarray
    # relations: dense (P, C)
    rel_signal: np.ndarray
    rel_noise: np.ndarray
    rel_gold: np.ndarray


# Converged probabilities are separated from each planted threshold z by a
# +-GAP band with anchor instances exactly at z-GAP and z+GAP, so z is both
# the SCut midpoint and, at grid resolution 0.025 > GAP, the unique
# end-to-end optimum: one step down admits hard negatives whose pairs carry
# high-probability junk relations, one step up drops anchored gold chains.
GAP = 0.01


def _gen_split(
    rng: np.random.Generator,
    n_docs: int,
    spans_per_doc: int,
    n_classes: int,
    planted: ThresholdSet,
) -> _Split:
    S = n_docs * spans_per_doc
    zm = planted.mention
    gold_m = rng.uniform(size=S) < 0.7
    gold_m[0] = gold_m[1] = True
    gold_m[2] = False
    hard_m = ~gold_m & (rng.uniform(size=S) < 0.4)
    hard_m[2] = True
    m_sig = rng.uniform(0.02, max(0.03, zm - 0.15), S)
    m_sig[gold_m] = rng.uniform(zm + GAP, 0.96, int(gold_m.sum()))
    m_sig[hard_m] = rng.uniform(zm - 0.035, zm - GAP, int(hard_m.sum()))
    m_sig[0] = zm + GAP  # gold anchor: first mention lost one step up
    m_sig[2] = zm - GAP  # hard anchor: admitted one step down
    m_noise = rng.uniform(0.05, 0.95, S)

    pair_spans = []
    for doc in range(n_docs):
        base = doc * spans_per_doc
        for i in range(spans_per_doc):
            for j in range(i + 1, spans_per_doc):
                pair_spans.append((base + i, base + j))
    pair_spans = np.array(pair_spans, dtype=int)
    P = len(pair_spans)
    pair_index = {(int(a), int(b)): i for i, (a, b) in enumerate(pair_spans)}

    zc = planted.coref
    both_gold = gold_m[pair_spans[:, 0]] & gold_m[pair_spans[:, 1]]
    gold_c = both_gold & (rng.uniform(size=P) < 0.8)
    gold_c[pair_index[(0, 1)]] = True
    has_hard_m = hard_m[pair_spans[:, 0]] | hard_m[pair_spans[:, 1]]
    c_sig = rng.uniform(0.02, zc - 0.15, P)
    hard_c = ~gold_c & ~has_hard_m & (rng.uniform(size=P) < 0.3)
    c_sig[hard_c] = rng.uniform(zc - 0.035, zc - GAP, int(hard_c.sum()))
    # confusable pairs score above the coref cut; the usual ones hide behind
    # a hard-negative mention and only surface when the mention cut drops
    trap_c = ~gold_c & has_hard_m & (rng.uniform(size=P) < 0.5)
    floor_c = ~gold_c & ~has_hard_m & ~hard_c & (rng.uniform(size=P) < 0.02)
    c_sig[trap_c | floor_c] = rng.uniform(zc + GAP, 0.90, int((trap_c | floor_c).sum()))
    c_sig[gold_c] = rng.uniform(zc + GAP, 0.95, int(gold_c.sum()))
    gold_anchor_pairs = [i for i in np.flatnonzero(gold_c) if i != pair_index[(0, 1)]]
    c_pos_anchor = gold_anchor_pairs[0]
    c_sig[c_pos_anchor] = zc + GAP
    c_hard_anchor = int(np.flatnonzero(~gold_c & both_gold)[0])
    c_sig[c_hard_anchor] = zc - GAP
    hard_c[c_hard_anchor] = True
    trap_c[c_hard_anchor] = False
    floor_c[c_hard_anchor] = False
    c_sig[pair_index[(0, 1)]] = 0.9
    m_trap_pair = pair_index[(1, 2)]  # gold partner + hard anchor mention
    c_sig[m_trap_pair] = 0.9
    gold_c[m_trap_pair] = False
    c_noise = rng.uniform(0.05, 0.95, P)

    zr = np.asarray(planted.relation, dtype=float)
    C = n_classes
    gold_pairs = np.flatnonzero(gold_c)
    gold_r = np.zeros((P, C), dtype=bool)
    # six consecutive round-robin classes per gold pair cover every class
    # densely enough that per-class SCut is anchored by real positives
    for j, p in enumerate(gold_pairs):
        for c in range(6):
            gold_r[p, (6 * j + c) % C] = True
    r_sig = rng.uniform(0.02, 0.20, (P, C))
    hard_r = ~gold_r & gold_c[:, None] & (rng.uniform(size=(P, C)) < 0.15)
    zr_grid = np.broadcast_to(zr[None, :], (P, C))
    r_sig[gold_r] = rng.uniform(zr_grid[gold_r] + GAP, np.minimum(0.97, zr_grid[gold_r] + 0.25))
    r_sig[hard_r] = rng.uniform(zr_grid[hard_r] - 0.035, zr_grid[hard_r] - GAP)
    # junk payload on non-gold pairs: high-probability false relations that
    # fire whenever such a pair slips through the upstream cuts
    junk = ~gold_c[:, None] & (rng.uniform(size=(P, C)) < 0.01)
    r_sig[junk] = rng.uniform(0.80, 0.95, int(junk.sum()))
    for cls in range(min(4, C)):
        r_sig[m_trap_pair, cls] = 0.9
    for cls in range(4, min(7, C)):
        r_sig[c_hard_anchor, cls] = 0.9
    # per-class anchors: first gold cell at z+GAP, one hard cell at z-GAP
    for c in range(C):
        gold_cells = np.flatnonzero(gold_r[:, c])
        if gold_cells.size:
            r_sig[gold_cells[0], c] = zr[c] + GAP
        candidates = [p for p in gold_pairs if not gold_r[p, c]]
        if candidates:
            r_sig[candidates[0], c] = zr[c] - GAP
    r_noise = rng.uniform(0.05, 0.95, (P, C))
    return _Split(
        mention_signal=m_sig,
        mention_noise=m_noise,
        mention_gold=gold_m,
        pair_spans=pair_spans,
        coref_signal=c_sig,
        coref_noise=c_noise,
        coref_gold=gold_c,
        rel_signal=r_sig,
        rel_noise=r_noise,
        rel_gold=gold_r,
    )


def _counts_for_set(split: _Split, probs: dict[str, np.ndarray], ts: ThresholdSet) -> dict[str, tuple[int, int, int]]:
    m_pred = probs["mention"] >= ts.mention
    alive = m_pred[split.pair_spans[:, 0]] & m_pred[split.pair_spans[:, 1]]
    c_pred = alive & (probs["coref"] >= ts.coref)
    zr = np.asarray(ts.relation)
    r_pred = c_pred[:, None] & (probs["relation"] >= zr[None, :])

    def prf(pred: np.ndarray, gold: np.ndarray) -> tuple[int, int, int]:
        tp = int((pred & gold).sum())
        return tp, int(pred.sum()) - tp, int(gold.sum()) - tp

    return {
        "mention": prf(m_pred, split.mention_gold),
        "coref": prf(c_pred, split.coref_gold),
        "relation": prf(r_pred, split.rel_gold),
    }


class ToyPipeline:
    """A calibratable stand-in for the real multi-task model.

    Predicted probabilities are a quality-weighted blend of a planted signal
    and fixed per-instance noise; the quality parameter rises with training
    epochs, reaching 1 (pure signal) late in training. Prediction is chained:
    spans passing the mention cut form candidate pairs, pairs passing the
    coreference cut feed per-class relation decisions.
    """

    def __init__(
        self,
        seed: int = 0,
        n_docs: int = 18,
        spans_per_doc: int = 6,
        n_classes: int = 96,
        planted: ThresholdSet | None = None,
        beta: float = 1.0,
    ):
        if planted is None:
            zr = 0.25 + 0.5 * ((7 * np.arange(n_classes)) % 13) / 12.0
            planted = ThresholdSet(mention=0.35, coref=0.45, relation=tuple(zr))
        self.planted = planted
        self.n_relation_classes = n_classes
        self.beta = beta
        self.epoch = 0
        self.validation_pass_count = 0
        self._splits = {
            name: _gen_split(np.random.default_rng([seed, i]), n_docs, spans_per_doc, n_classes, planted)
            for i, name in enumerate(("train", "val", "test"))
        }

    # quality ramp: 0.28 after the first epoch, exactly 1 from epoch 10 on
    def quality(self, epoch: int) -> float:
        return min(1.0, 0.2 + 0.08 * epoch)

    def _probs(self, split_name: str, epoch: int | None = None) -> dict[str, np.ndarray]:
        q = self.quality(self.epoch if epoch is None else epoch)
        s = self._splits[split_name]
        return {
            "mention": np.clip(q * s.mention_signal + (1 - q) * s.mention_noise, 0.01, 0.99),
            "coref": np.clip(q * s.coref_signal + (1 - q) * s.coref_noise, 0.01, 0.99),
            "relation": np.clip(q * s.rel_signal + (1 - q) * s.rel_noise, 0.01, 0.99),
        }

    def train_one_epoch(self) -> TaskPredictions:
        self.epoch += 1
        probs = self._probs("train")
        s = self._splits["train"]
        P, C = s.rel_gold.shape
        return TaskPredictions(
            mention=ScoredInstances(probs["mention"], s.mention_gold),
            coref=ScoredInstances(probs["coref"], s.coref_gold),
            relation=ScoredInstances(
                probs["relation"].ravel(),
                s.rel_gold.ravel(),
                class_ids=np.tile(np.arange(C), P),
            ),
        )

    def predict_counts(self, thresholds: ThresholdSet, split: str = "val") -> dict[str, tuple[int, int, int]]:
        """Chained per-stage (tp, fp, fn) at the current training quality."""
        return _counts_for_set(self._splits[split], self._probs(split), thresholds)

    def validate_under_thresholds(self, threshold_sets: list[ThresholdSet]) -> list[float]:
        """Relation micro-F for every set, computed in one validation pass."""
        self.validation_pass_count += 1
        probs = self._probs("val")
        split = self._splits["val"]
        out = []
        for ts in threshold_sets:
            tp, fp, fn = _counts_for_set(split, probs, ts)["relation"]
            out.append(micro_f_beta(tp, fp, fn, self.beta))
        return out

    def test(self, thresholds: ThresholdSet) -> dict[str, float]:
        counts = self.predict_counts(thresholds, "test")
        scores = {f"{stage}_f": micro_f_beta(*counts[stage], self.beta) for stage in counts}
        scores["epoch"] = float(self.epoch)
        return scores

    def snapshot(self) -> int:
        return self.epoch

    def restore(self, state: int) -> None:
        self.epoch = int(state)


def toy_predict(pipeline: ToyPipeline, thresholds: ThresholdSet, split: str = "val") -> dict[str, tuple[int, int, int]]:
    return pipeline.predict_counts(thresholds, split)


@dataclass
class PipelineObjective:
    """Chained-pipeline objective for threads: each evaluation trains a fresh
    toy pipeline and scores one minus the validation relation micro-F at the
    pipeline's planted operating thresholds.

    The quality ramp slows as the learning rate leaves a sweet spot planted
    mid-range, so the score responds to tuning; calibration epochs model
    threshold refinement on the trained model by trimming the residual
    multiplicatively. Lower is better.
    """

    space: SearchSpace
    seed: int = 0
    noise_sd: float = 0.0
    n_docs: int = 12
    n_classes: int = 24
    warmup_default: int = 7
    calibration_gain: float = 0.02

    def __post_init__(self) -> None:
        self._lr_dim = None
        for d in self.space.dimensions:
            if d.kind == "log_uniform" and (d.name == "lr" or d.name.startswith("lr")):
                self._lr_dim = d
                break
        self.lr_star = None if self._lr_dim is None else float(self._lr_dim.from_unit(0.5))

    def _efficiency(self, point: HPoint) -> float:
        if self._lr_dim is None:
            return 1.0
        lr = float(point.values[self._lr_dim.name])
        return 1.0 / (1.0 + abs(math.log10(lr) - math.log10(self.lr_star)))

    def normalized_distance(self, point: HPoint) -> float:
        if self._lr_dim is None:
            return 0.0
        lr = float(point.values[self._lr_dim.name])
        return abs(self._lr_dim.to_unit(lr) - 0.5)

    def evaluate(
        self, point: HPoint, fidelity: FidelitySpec, seed: int, reporter: Reporter | None = None
    ) -> float:
        pipe = ToyPipeline(seed=self.seed, n_docs=self.n_docs, n_classes=self.n_classes)
        planted = pipe.planted
        eff = self._efficiency(point)
        max_epochs = fidelity.max_epochs
        calib = fidelity.calibration_epochs
        if fidelity.early_stop == "end_of_warmup":
            max_epochs = min(max_epochs, int(point.values.get("lr_warmup", self.warmup_default)))
            calib = 0
        rng = np.random.default_rng([_point_digest(point), seed & 0x7FFFFFFF])
        score = 1.0
        for epoch, prunable in resource_ticks(max_epochs, TRAIN_STRIDE, calib):
            if epoch <= max_epochs:
                pipe.epoch = eff * epoch
                tp, fp, fn = pipe.predict_counts(planted, "val")["relation"]
                # quadratic term keeps the score responsive once training saturates
                score = 1.0 - micro_f_beta(tp, fp, fn, pipe.beta)
                score += 0.05 * self.normalized_distance(point) ** 2
            else:
                frac = (epoch - max_epochs) / max(1, calib)
                score *= 1.0 - self.calibration_gain * frac
            if self.noise_sd > 0.0:
                score += float(rng.normal(0.0, self.noise_sd))
            if reporter is not None and not reporter(epoch, score, prunable):
                return score
        return score
