"""Search-space construction, sampling, membership, and the rule-based
range edits (prune to top-k hull, widen, freeze)."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sprintopt.space import (
    Dimension,
    HPoint,
    MarginPolicy,
    SearchSpace,
    SpaceError,
    contains,
    freeze_dimension,
    prune_to_top_k,
    sample_uniform,
    unfreeze_dimension,
    widen_dimension,
)

from conftest import make_stub


class TestDimension:
    def test_rejects_unknown_kind(self):
        with pytest.raises(SpaceError):
            Dimension("x", "gaussian", 0.0, 1.0)

    def test_rejects_inverted_bounds(self):
        with pytest.raises(SpaceError):
            Dimension("x", "uniform", 1.0, 0.0)

    def test_log_uniform_needs_positive_low(self):
        with pytest.raises(SpaceError):
            Dimension("lr", "log_uniform", 0.0, 1.0)

    def test_categorical_needs_categories(self):
        with pytest.raises(SpaceError):
            Dimension("head", "categorical")

    def test_unit_roundtrip_log(self):
        d = Dimension("lr", "log_uniform", 1e-5, 1e-1)
        for v in (1e-5, 1e-3, 1e-1):
            np.testing.assert_allclose(d.from_unit(d.to_unit(v)), v, rtol=1e-12)

    def test_unit_roundtrip_integer_lattice(self):
        d = Dimension("n", "integer", 1, 10)
        assert [d.from_unit(d.to_unit(v)) for v in range(1, 11)] == list(range(1, 11))


class TestSampleUniform:
    def test_values_stay_in_range(self, mixed_space):
        """Every sampled point satisfies contains(space, point)."""
        for seed in range(50):
            p = sample_uniform(mixed_space, seed)
            assert contains(mixed_space, p)

    def test_frozen_dimension_always_emits_frozen_value(self, mixed_space):
        space = freeze_dimension(mixed_space, "layers", 3)
        assert all(sample_uniform(space, s)["layers"] == 3 for s in range(20))

    def test_frozen_only_space_errors(self):
        space = SearchSpace(name="s", dimensions=(Dimension("x", "uniform", 0, 1, frozen_value=0.5),))
        with pytest.raises(SpaceError, match="no active dimensions"):
            sample_uniform(space, 0)

    def test_deterministic_per_seed(self, mixed_space):
        assert sample_uniform(mixed_space, 7).values == sample_uniform(mixed_space, 7).values

    def test_log_uniform_decade_mass(self):
        """Monte-Carlo oracle: over [1e-5, 1e-1] each of the four decades
        should hold about a quarter of the mass."""
        d = Dimension("lr", "log_uniform", 1e-5, 1e-1)
        space = SearchSpace(name="s", dimensions=(d,))
        draws = np.array([sample_uniform(space, [11, i])["lr"] for i in range(10_000)])
        frac = np.mean((draws >= 1e-5) & (draws <= 1e-4))
        assert abs(frac - 0.25) < 0.02


class TestContains:
    def test_inside(self, mixed_space):
        p = HPoint({"lr": 2e-5, "momentum": 0.5, "layers": 4, "head": "B"})
        assert contains(mixed_space, p)

    def test_pruned_out_category(self, mixed_space):
        pruned = SearchSpace(
            name="m2",
            dimensions=tuple(
                d if d.name != "head" else Dimension("head", "categorical", categories=("A", "C"))
                for d in mixed_space.dimensions
            ),
        )
        assert not contains(pruned, HPoint({"lr": 2e-5, "momentum": 0.5, "layers": 4, "head": "B"}))

    def test_missing_dimension_is_false(self, mixed_space):
        assert not contains(mixed_space, HPoint({"lr": 2e-5}))

    def test_extra_dimension_is_false(self, mixed_space):
        p = HPoint({"lr": 2e-5, "momentum": 0.5, "layers": 4, "head": "B", "ghost": 1})
        assert not contains(mixed_space, p)


def _trial_table(space: SearchSpace, n: int, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    trials = []
    for i in range(n):
        p = sample_uniform(space, [seed, i])
        trials.append(make_stub(i, p.values, float(rng.uniform(0, 1))))
    return trials


class TestPruneToTopK:
    def test_log_margin_arithmetic(self):
        """Hull [1e-5, 4e-5] widens to [1e-5/1.5, 4e-5*1.5]."""
        space = SearchSpace(name="s", dimensions=(Dimension("lr", "log_uniform", 1e-6, 1e-2),))
        vals = np.linspace(1e-5, 4e-5, 10)
        trials = [make_stub(i, {"lr": float(v)}, float(i)) for i, v in enumerate(vals)]
        out = prune_to_top_k(space, trials, 10)
        d = out.dimension("lr")
        np.testing.assert_allclose(d.low, 1e-5 / 1.5, rtol=1e-12)
        np.testing.assert_allclose(d.high, 4e-5 * 1.5, rtol=1e-12)

    def test_uniform_margin_arithmetic(self):
        space = SearchSpace(name="s", dimensions=(Dimension("w", "uniform", 0.0, 1.0),))
        vals = np.linspace(0.40, 0.70, 10)
        trials = [make_stub(i, {"w": float(v)}, float(i)) for i, v in enumerate(vals)]
        d = prune_to_top_k(space, trials, 10).dimension("w")
        np.testing.assert_allclose([d.low, d.high], [0.39, 0.71], rtol=1e-12)

    def test_integer_pad(self):
        space = SearchSpace(name="s", dimensions=(Dimension("n", "integer", 1, 20),))
        trials = [make_stub(i, {"n": v}, float(i)) for i, v in enumerate([5, 6, 7, 8, 9, 10, 5, 6, 7, 8])]
        d = prune_to_top_k(space, trials, 10).dimension("n")
        assert (d.low, d.high) == (4, 11)

    def test_categorical_keeps_only_top_categories_in_original_order(self):
        space = SearchSpace(name="s", dimensions=(Dimension("head", "categorical", categories=("A", "B", "C")),))
        cats = ["C", "A", "C", "A", "A", "C", "A", "C", "A", "C", "B", "B"]
        trials = [make_stub(i, {"head": c}, float(i)) for i, c in enumerate(cats)]
        d = prune_to_top_k(space, trials, 10).dimension("head")
        assert d.categories == ("A", "C")

    def test_clipped_to_original_bounds(self):
        space = SearchSpace(name="s", dimensions=(Dimension("w", "uniform", 0.0, 0.705),))
        vals = np.linspace(0.0, 0.70, 10)
        trials = [make_stub(i, {"w": float(v)}, float(i)) for i, v in enumerate(vals)]
        d = prune_to_top_k(space, trials, 10).dimension("w")
        assert d.low == 0.0 and d.high == 0.705

    def test_selects_by_score_not_order(self):
        """Only the k best-scoring trials define the hull."""
        space = SearchSpace(name="s", dimensions=(Dimension("w", "uniform", 0.0, 1.0),))
        good = [make_stub(i, {"w": 0.5 + 0.001 * i}, 0.1) for i in range(10)]
        bad = [make_stub(100 + i, {"w": 0.99}, 9.0) for i in range(10)]
        d = prune_to_top_k(space, bad + good, 10).dimension("w")
        assert d.high < 0.6

    def test_too_few_trials_errors(self):
        space = SearchSpace(name="s", dimensions=(Dimension("w", "uniform", 0.0, 1.0),))
        with pytest.raises(SpaceError):
            prune_to_top_k(space, [make_stub(0, {"w": 0.5}, 1.0)], 10)

    def test_degenerate_dimension_flagged_not_shrunk(self):
        space = SearchSpace(name="s", dimensions=(Dimension("w", "uniform", 0.0, 1.0),))
        trials = [make_stub(i, {"w": 0.5}, float(i)) for i in range(10)]
        out = prune_to_top_k(space, trials, 10)
        assert out.degenerate_dims == ("w",)
        assert (out.dimension("w").low, out.dimension("w").high) == (0.0, 1.0)

    def test_version_and_parent_lineage(self, mixed_space):
        trials = _trial_table(mixed_space, 30)
        out = prune_to_top_k(mixed_space, trials, 10)
        assert out.version == mixed_space.version + 1
        assert out.parent_version == mixed_space.version
        assert out.audit_rule is not None

    def test_custom_margins(self):
        space = SearchSpace(name="s", dimensions=(Dimension("w", "uniform", 0.0, 1.0),))
        vals = np.linspace(0.4, 0.6, 12)
        trials = [make_stub(i, {"w": float(v)}, float(i)) for i, v in enumerate(vals)]
        d = prune_to_top_k(space, trials, 12, MarginPolicy(uniform_delta=0.05)).dimension("w")
        np.testing.assert_allclose([d.low, d.high], [0.35, 0.65], rtol=1e-12)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_hull_subset_property(self, seed):
        """Pruned range contains the top-k hull and sits inside the original
        bounds, for random trial tables."""
        space = SearchSpace(
            name="s",
            dimensions=(
                Dimension("lr", "log_uniform", 1e-6, 1e-1),
                Dimension("w", "uniform", -1.0, 2.0),
            ),
        )
        rng = np.random.default_rng(seed)
        trials = []
        for i in range(25):
            p = sample_uniform(space, [seed, i])
            trials.append(make_stub(i, p.values, float(rng.uniform())))
        out = prune_to_top_k(space, trials, 10)
        best = sorted(trials, key=lambda t: t.final_score)[:10]
        for d in out.dimensions:
            vals = [t.point.values[d.name] for t in best]
            orig = space.dimension(d.name)
            assert d.low >= orig.low and d.high <= orig.high
            if d.name not in out.degenerate_dims:
                assert d.low <= min(vals) and d.high >= max(vals)

    def test_second_prune_hull_inside_first_range(self, mixed_space):
        trials = _trial_table(mixed_space, 40)
        once = prune_to_top_k(mixed_space, trials, 10)
        twice = prune_to_top_k(once, trials, 10)
        for d in twice.dimensions:
            if d.kind == "categorical":
                assert set(d.categories) <= set(once.dimension(d.name).categories)
            else:
                assert d.low >= once.dimension(d.name).low
                assert d.high <= once.dimension(d.name).high


class TestWidenFreeze:
    def test_widen_log_high_by_factor(self):
        space = SearchSpace(name="s", dimensions=(Dimension("lr", "log_uniform", 1e-5, 1e-3),))
        d = widen_dimension(space, "lr", "high", 10.0).dimension("lr")
        np.testing.assert_allclose([d.low, d.high], [1e-5, 1e-2], rtol=1e-12)

    def test_widen_uniform_low_by_delta(self):
        space = SearchSpace(name="s", dimensions=(Dimension("w", "uniform", 0.0, 1.0),))
        d = widen_dimension(space, "w", "low", 0.1).dimension("w")
        np.testing.assert_allclose([d.low, d.high], [-0.1, 1.0], rtol=1e-12)

    def test_widen_categorical_rejected(self, mixed_space):
        with pytest.raises(SpaceError):
            widen_dimension(mixed_space, "head", "high", 1.0)

    def test_widen_frozen_rejected(self, mixed_space):
        frozen = freeze_dimension(mixed_space, "momentum", 0.5)
        with pytest.raises(SpaceError):
            widen_dimension(frozen, "momentum", "high", 0.1)

    def test_freeze_then_unfreeze_roundtrip(self, mixed_space):
        frozen = freeze_dimension(mixed_space, "layers", 3)
        assert frozen.dimension("layers").is_frozen
        thawed = unfreeze_dimension(frozen, "layers", 1, 10)
        assert not thawed.dimension("layers").is_frozen
        assert thawed.version == mixed_space.version + 2

    def test_freeze_outside_range_rejected(self, mixed_space):
        with pytest.raises(SpaceError):
            freeze_dimension(mixed_space, "momentum", 2.0)

    def test_freeze_without_value_uses_the_midpoint(self, mixed_space):
        frozen = freeze_dimension(mixed_space, "momentum")
        assert frozen.dimension("momentum").frozen_value == 0.5
        # log scale: geometric mean of the bounds
        log_frozen = freeze_dimension(mixed_space, "lr")
        assert log_frozen.dimension("lr").frozen_value == pytest.approx(1e-3)

    def test_freeze_without_value_rejects_categoricals(self, mixed_space):
        with pytest.raises(SpaceError, match="explicit value"):
            freeze_dimension(mixed_space, "head")

    def test_versions_strictly_increase(self, mixed_space):
        s1 = widen_dimension(mixed_space, "momentum", "high", 0.1)
        s2 = freeze_dimension(s1, "layers", 2)
        assert (mixed_space.version, s1.version, s2.version) == (0, 1, 2)


class TestSerialization:
    def test_roundtrip_bit_exact(self, mixed_space):
        """JSON round-trip preserves category order and full float precision."""
        blob = mixed_space.serialize()
        back = SearchSpace.from_json(json.loads(blob))
        assert back.serialize() == blob
        assert back.dimension("head").categories == ("A", "B", "C")

    def test_roundtrip_preserves_awkward_floats(self):
        space = SearchSpace(
            name="s",
            dimensions=(Dimension("lr", "log_uniform", 1e-5 / 1.5, math.pi * 1e-3),),
        )
        back = SearchSpace.from_json(json.loads(space.serialize()))
        assert back.dimension("lr").low == space.dimension("lr").low
        assert back.dimension("lr").high == space.dimension("lr").high

    def test_frozen_value_survives(self, mixed_space):
        frozen = freeze_dimension(mixed_space, "head", "B")
        back = SearchSpace.from_json(json.loads(frozen.serialize()))
        assert back.dimension("head").frozen_value == "B"
