"""Quantile split, Parzen densities, and density-ratio suggestions.

The suggestion oracle recomputes the truncated-Gaussian mixture from raw
values with math.erf, so the pdf, the bandwidth rule, and the argmax are
all checked against code that shares nothing with the module.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from sprintopt.space import Dimension, HPoint, SearchSpace, sample_uniform
from sprintopt.tpe import ParzenDensity, TPEConfig, TPEError, fit_parzen, split_trials, tpe_suggest

from conftest import make_stub


def phi_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def phi_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def bandwidths_ref(centers: np.ndarray) -> np.ndarray:
    # nearest-neighbor distance with a 1/(1+n) floor; lone center: floor only
    n = len(centers)
    floor = 1.0 / (1.0 + n)
    if n == 1:
        return np.array([floor])
    nn = []
    for i, c in enumerate(centers):
        others = np.delete(centers, i)
        nn.append(np.abs(others - c).min())
    return np.maximum(nn, floor)


def parzen_pdf_ref(u: float, values: list[float], dim: Dimension) -> float:
    centers = np.sort([dim.to_unit(v) for v in values])
    bws = bandwidths_ref(centers)
    comps = [1.0]  # uniform prior on [0, 1]
    for c, h in zip(centers, bws):
        mass = phi_cdf((1.0 - c) / h) - phi_cdf((0.0 - c) / h)
        comps.append(phi_pdf((u - c) / h) / (h * mass))
    return sum(comps) / len(comps)


UNIT = Dimension("u", "uniform", 0.0, 1.0)


class TestSplitTrials:
    def test_split_sizes_across_gammas(self):
        """len(good) == max(1, ceil(gamma * n)) for n in [2, 100] and the
        three working quantiles."""
        for gamma in (0.1, 0.25, 0.5):
            for n in range(2, 101):
                trials = [make_stub(i, {"u": 0.5}, float(i)) for i in range(n)]
                good, bad = split_trials(trials, gamma)
                assert len(good) == max(1, math.ceil(gamma * n))
                assert len(good) + len(bad) == n

    def test_good_set_holds_lowest_scores(self):
        trials = [make_stub(i, {"u": 0.5}, s) for i, s in enumerate([0.9, 0.1, 0.5, 0.3])]
        good, bad = split_trials(trials, 0.5)
        assert sorted(t.final_score for t in good) == [0.1, 0.3]
        assert max(t.final_score for t in good) <= min(t.final_score for t in bad)

    def test_score_ties_fall_to_earlier_id(self):
        trials = [make_stub(2, {"u": 0.5}, 0.5), make_stub(1, {"u": 0.5}, 0.5), make_stub(3, {"u": 0.5}, 0.9)]
        good, bad = split_trials(trials, 0.25)
        assert [t.id for t in good] == [1]
        assert [t.id for t in bad] == [2, 3]

    def test_unscored_and_non_finite_dropped(self):
        trials = [
            make_stub(0, {"u": 0.5}, 0.1),
            make_stub(1, {"u": 0.5}, None),
            make_stub(2, {"u": 0.5}, float("nan")),
            make_stub(3, {"u": 0.5}, float("inf")),
            make_stub(4, {"u": 0.5}, 0.2),
        ]
        good, bad = split_trials(trials, 0.5)
        assert {t.id for t in good} | {t.id for t in bad} == {0, 4}

    def test_fewer_than_two_raises(self):
        with pytest.raises(TPEError):
            split_trials([make_stub(0, {"u": 0.5}, 0.1)], 0.25)


class TestFitParzen:
    def test_bandwidths_equal_gap_when_above_floor(self):
        dens = fit_parzen([0.1, 0.5, 0.9], UNIT)
        np.testing.assert_allclose(dens.centers, [0.1, 0.5, 0.9])
        np.testing.assert_allclose(dens.bandwidths, [0.4, 0.4, 0.4], rtol=1e-12)

    def test_floor_engages_for_clustered_values(self):
        # two nearly coincident centers: nn distance 0.005 < 1/3
        dens = fit_parzen([0.5, 0.505], UNIT)
        np.testing.assert_allclose(dens.bandwidths, [1.0 / 3.0, 1.0 / 3.0], rtol=1e-12)

    def test_lone_center_uses_floor_alone(self):
        dens = fit_parzen([0.7], UNIT)
        np.testing.assert_allclose(dens.bandwidths, [0.5], rtol=1e-12)

    def test_log_dimension_centers_in_log_coordinates(self):
        dim = Dimension("lr", "log_uniform", 1e-5, 1e-1)
        dens = fit_parzen([1e-4, 1e-2], dim)
        np.testing.assert_allclose(dens.centers, [0.25, 0.75], rtol=1e-12)

    def test_interior_bandwidth_takes_nearest_gap(self):
        dens = fit_parzen([0.0, 0.1, 0.9], UNIT)
        # middle center: min(0.1, 0.8) = 0.1 < floor 0.25 -> floor
        np.testing.assert_allclose(dens.bandwidths, [0.25, 0.25, 0.8], rtol=1e-12)

    def test_matches_reference_bandwidths(self):
        rng = np.random.default_rng(8)
        vals = list(rng.uniform(0, 1, 12))
        dens = fit_parzen(vals, UNIT)
        np.testing.assert_allclose(dens.bandwidths, bandwidths_ref(np.sort(vals)), rtol=1e-12)

    def test_categorical_add_one_smoothing(self):
        dim = Dimension("head", "categorical", categories=("A", "B", "C"))
        dens = fit_parzen(["A", "A", "A", "B"], dim)
        np.testing.assert_allclose(dens.category_probs, [4 / 7, 2 / 7, 1 / 7], rtol=1e-12)
        np.testing.assert_allclose(dens.category_probs.sum(), 1.0, rtol=1e-12)

    def test_unknown_bandwidth_rule_rejected(self):
        with pytest.raises(TPEError):
            fit_parzen([0.5], UNIT, bandwidth_rule="scott")


class TestParzenDensity:
    def test_integrates_to_one(self):
        """Quadrature over [0, 1] returns unit mass to 1e-6 for assorted
        center sets, including clustered and boundary-hugging ones."""
        cases = [
            [0.5],
            [0.1, 0.5, 0.9],
            [0.01, 0.02, 0.985],
            list(np.random.default_rng(0).uniform(0, 1, 15)),
        ]
        for values in cases:
            dens = fit_parzen(values, UNIT)
            mass, _ = quad(lambda u: float(dens.pdf(u)[0]), 0.0, 1.0, limit=200)
            np.testing.assert_allclose(mass, 1.0, atol=1e-6)

    def test_empty_density_is_pure_prior(self):
        dens = fit_parzen([], UNIT)
        np.testing.assert_allclose(dens.pdf(np.array([0.0, 0.3, 1.0])), [1.0, 1.0, 1.0])

    def test_pdf_matches_reference(self):
        vals = [0.2, 0.25, 0.8]
        dens = fit_parzen(vals, UNIT)
        grid = np.linspace(0, 1, 41)
        want = [parzen_pdf_ref(u, vals, UNIT) for u in grid]
        np.testing.assert_allclose(dens.pdf(grid), want, rtol=1e-10)

    def test_samples_deterministic_and_bounded(self):
        dens = fit_parzen([0.3, 0.6], UNIT)
        a = dens.sample(np.random.default_rng(5), 200)
        b = dens.sample(np.random.default_rng(5), 200)
        np.testing.assert_allclose(a, b)
        assert np.all((a >= 0.0) & (a <= 1.0))

    def test_samples_concentrate_near_centers(self):
        dens = fit_parzen([0.2, 0.21, 0.19, 0.2, 0.2], UNIT)
        draws = dens.sample(np.random.default_rng(1), 2000)
        assert np.mean(np.abs(draws - 0.2) < 0.2) > 0.6

    def test_categorical_density_rejects_pdf_and_sample(self):
        dim = Dimension("head", "categorical", categories=("A", "B"))
        dens = fit_parzen(["A"], dim)
        with pytest.raises(TPEError):
            dens.pdf(0.5)
        with pytest.raises(TPEError):
            dens.sample(np.random.default_rng(0), 1)


def _history(space: SearchSpace, n: int, score_fn, seed: int = 0) -> list:
    out = []
    for i in range(n):
        p = sample_uniform(space, [seed, i])
        out.append(make_stub(i, p.values, float(score_fn(p))))
    return out


class TestTPESuggest:
    def test_startup_falls_back_to_uniform(self, unit_square):
        trials = _history(unit_square, 5, lambda p: p["x"])
        cfg = TPEConfig(n_startup=10)
        got = tpe_suggest(trials, unit_square, cfg, rng_seed=42)
        assert got.values == sample_uniform(unit_square, 42).values

    def test_fewer_than_two_scored_falls_back(self, unit_square):
        trials = [make_stub(0, {"x": 0.5, "y": 0.5}, 0.3)]
        got = tpe_suggest(trials, unit_square, TPEConfig(n_startup=0), rng_seed=7)
        assert got.values == sample_uniform(unit_square, 7).values

    def test_deterministic_per_seed(self, unit_square):
        trials = _history(unit_square, 20, lambda p: (p["x"] - 0.3) ** 2)
        a = tpe_suggest(trials, unit_square, TPEConfig(n_startup=5), rng_seed=3)
        b = tpe_suggest(trials, unit_square, TPEConfig(n_startup=5), rng_seed=3)
        assert a.values == b.values

    def test_suggestion_attains_candidate_ratio_maximum(self, unit_square):
        """The returned value per dimension maximizes log l - log g over the
        drawn candidates, with both densities recomputed by the erf oracle."""
        trials = _history(unit_square, 30, lambda p: (p["x"] - 0.3) ** 2 + 0.5 * (p["y"] - 0.7) ** 2)
        cfg = TPEConfig(gamma=0.25, n_candidates=24, n_startup=5)
        point, info = tpe_suggest(trials, unit_square, cfg, rng_seed=11, debug=True)
        good, bad = split_trials(trials, cfg.gamma)
        for dim in unit_square.dimensions:
            g_vals = [t.point.values[dim.name] for t in good]
            b_vals = [t.point.values[dim.name] for t in bad]
            cands = info[dim.name]["candidates"]
            ratio = np.array(
                [
                    math.log(parzen_pdf_ref(u, g_vals, dim)) - math.log(parzen_pdf_ref(u, b_vals, dim))
                    for u in cands
                ]
            )
            np.testing.assert_allclose(ratio, info[dim.name]["log_l"] - info[dim.name]["log_g"], rtol=1e-9)
            assert point[dim.name] == dim.from_unit(float(cands[int(np.argmax(ratio))]))

    def test_categorical_suggestion_attains_maximum(self):
        space = SearchSpace(
            name="s",
            dimensions=(
                Dimension("u", "uniform", 0.0, 1.0),
                Dimension("head", "categorical", categories=("A", "B", "C")),
            ),
        )
        rng = np.random.default_rng(2)
        trials = []
        for i in range(24):
            head = ("A", "B", "C")[int(rng.integers(3))]
            u = float(rng.uniform())
            score = (0.1 if head == "B" else 0.9) + 0.01 * u
            trials.append(make_stub(i, {"u": u, "head": head}, score))
        point, info = tpe_suggest(trials, space, TPEConfig(n_startup=5), rng_seed=9, debug=True)
        ratio = info["head"]["log_l"] - info["head"]["log_g"]
        idx = info["head"]["candidates"]
        assert point["head"] == ("A", "B", "C")[int(idx[int(np.argmax(ratio))])]
        assert point["head"] == "B"  # the planted winner dominates the ratio

    def test_frozen_dimension_passes_through(self):
        space = SearchSpace(
            name="s",
            dimensions=(
                Dimension("u", "uniform", 0.0, 1.0),
                Dimension("w", "uniform", 0.0, 1.0, frozen_value=0.125),
            ),
        )
        trials = [make_stub(i, {"u": 0.1 * i, "w": 0.125}, float(i)) for i in range(12)]
        point = tpe_suggest(trials, space, TPEConfig(n_startup=2), rng_seed=0)
        assert point["w"] == 0.125

    def test_suggestions_track_good_region(self, unit_square):
        """Scores favoring x near 0.2: suggested x lands nearer 0.2 than the
        0.8 decoy on average."""
        trials = _history(unit_square, 40, lambda p: abs(p["x"] - 0.2), seed=4)
        xs = [
            tpe_suggest(trials, unit_square, TPEConfig(n_startup=5), rng_seed=s)["x"] for s in range(15)
        ]
        assert np.median(np.abs(np.array(xs) - 0.2)) < np.median(np.abs(np.array(xs) - 0.8))

    def test_config_validation(self):
        with pytest.raises(TPEError):
            TPEConfig(gamma=0.0)
        with pytest.raises(TPEError):
            TPEConfig(gamma=1.0)
        with pytest.raises(TPEError):
            TPEConfig(n_candidates=0)
        with pytest.raises(TPEError):
            TPEConfig(n_startup=-1)

    @given(n=st.integers(2, 60), gamma=st.sampled_from([0.1, 0.25, 0.5]))
    @settings(max_examples=60, deadline=None)
    def test_split_partition_property(self, n, gamma):
        trials = [make_stub(i, {"u": 0.5}, float((i * 7919) % 101)) for i in range(n)]
        good, bad = split_trials(trials, gamma)
        assert {t.id for t in good} | {t.id for t in bad} == set(range(n))
        assert not ({t.id for t in good} & {t.id for t in bad})
