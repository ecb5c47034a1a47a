"""Thread/sprint orchestration: naming, rotation, priming legality, the
run loop with both samplers, pruning, and crash replay."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sprintopt.engine import (
    Engine,
    EngineError,
    PrimingViolation,
    SprintNameParts,
    ThreePhaseConfig,
    parse_sprint_name,
    rotate_subset,
    sprint_name,
)
from sprintopt.space import Dimension, HPoint, SearchSpace, SpaceError, contains
from sprintopt.trials import FidelitySpec, TrialStatus

UNIT = SearchSpace(
    name="unit",
    dimensions=(
        Dimension("x", "uniform", 0.0, 1.0),
        Dimension("y", "uniform", 0.0, 1.0),
    ),
)
# cheap smoke fidelity: single epoch, no scheduler, subsetted data
LOW = FidelitySpec(
    train_fraction_denominator=6, val_fraction_denominator=3, max_epochs=1, scheduler_enabled=False
)
MID = FidelitySpec(
    train_fraction_denominator=3, val_fraction_denominator=3, max_epochs=1, scheduler_enabled=False
)


@pytest.fixture
def engine(tmp_path):
    return Engine(str(tmp_path / "store"))


@pytest.fixture
def bowl_thread(engine):
    return engine.create_thread("bowl", objective="quadratic_bowl", space=UNIT)


class _Exploding:
    def evaluate(self, point, fidelity, seed, reporter=None):
        raise RuntimeError("diverged")


class TestSprintName:
    def test_rendered_form(self):
        parts = SprintNameParts(
            model_type="Sim",
            variant="Toy",
            grouping="GLOBAL",
            fidelity=LOW,
            checkpoint=(10, 2),
            suffix="v2",
        )
        assert sprint_name(parts) == "Sim.Toy.GLOBAL.T6_V3_M1.E10_S2.v2"

    def test_parse_roundtrip(self):
        parts = SprintNameParts("Sim", "Toy", "LR0_L2", FidelitySpec(), (0, 0), "v1")
        assert parse_sprint_name(sprint_name(parts)) == parts

    def test_dot_in_free_text_rejected(self):
        with pytest.raises(EngineError, match="contains"):
            sprint_name(SprintNameParts("Si.m", "Toy", "GLOBAL", LOW))

    def test_empty_identity_part_rejected(self):
        with pytest.raises(EngineError, match="non-empty"):
            sprint_name(SprintNameParts("Sim", "", "GLOBAL", LOW))

    def test_wrong_arity_rejected(self):
        with pytest.raises(EngineError, match="6 dot-separated"):
            parse_sprint_name("Sim.Toy.GLOBAL.T1_V1_M25.v1")

    def test_bad_checkpoint_rejected(self):
        with pytest.raises(EngineError, match="checkpoint"):
            parse_sprint_name("Sim.Toy.GLOBAL.T1_V1_M25.EX_S0.v1")


class TestRotateSubset:
    def test_deterministic_for_fixed_arguments(self):
        a = rotate_subset(30, 3, 1, salt=4)
        b = rotate_subset(30, 3, 1, salt=4)
        np.testing.assert_array_equal(a, b)

    def test_rotation_index_wraps_modulo_denominator(self):
        np.testing.assert_array_equal(rotate_subset(10, 3, 0), rotate_subset(10, 3, 3))

    def test_denominator_one_returns_everything(self):
        np.testing.assert_array_equal(rotate_subset(7, 1, 0), np.arange(7))

    def test_salt_changes_the_permutation(self):
        assert any(
            not np.array_equal(rotate_subset(40, 4, r, salt=0), rotate_subset(40, 4, r, salt=1))
            for r in range(4)
        )

    def test_invalid_arguments(self):
        with pytest.raises(EngineError, match=">= 1"):
            rotate_subset(10, 0, 0)
        with pytest.raises(EngineError, match="cannot split"):
            rotate_subset(2, 3, 0)

    @settings(max_examples=120, deadline=None)
    @given(
        n=st.integers(min_value=1, max_value=50),
        den=st.integers(min_value=1, max_value=8),
        salt=st.integers(min_value=0, max_value=5),
    )
    def test_chunks_partition_the_items(self, n, den, salt):
        """Every item lands in exactly one chunk and sizes differ by at most one."""
        if n < den:
            return
        chunks = [rotate_subset(n, den, r, salt) for r in range(den)]
        flat = sorted(int(i) for c in chunks for i in c)
        assert flat == list(range(n))
        sizes = [len(c) for c in chunks]
        assert max(sizes) - min(sizes) <= 1


class TestCreateThread:
    def test_registers_space_and_snapshot(self, engine):
        th = engine.create_thread("bowl", objective="quadratic_bowl", space=UNIT)
        assert th.id == "th001"
        assert th.space_versions == [UNIT.version]
        assert th.current_space_version == UNIT.version
        snap = engine.store.read_snapshot(f"space-{th.id}-v{UNIT.version}")
        assert snap == UNIT.to_json()

    def test_default_space_comes_from_grouping(self, engine):
        th = engine.create_thread("g", grouping="GLOBAL", with_warmup=True)
        names = [d.name for d in engine.space(th.id).dimensions]
        assert "lr" in names
        assert "lr_warmup" in names

    def test_ids_increment(self, engine):
        a = engine.create_thread("one", space=UNIT, objective="quadratic_bowl")
        b = engine.create_thread("two", space=UNIT, objective="quadratic_bowl")
        assert (a.id, b.id) == ("th001", "th002")

    def test_default_model_config_id(self, engine):
        th = engine.create_thread("bowl", space=UNIT, objective="quadratic_bowl")
        assert th.model_config_id == "Sim/Toy/GLOBAL"

    def test_unknown_thread_lookup(self, engine):
        with pytest.raises(EngineError, match="unknown thread"):
            engine.thread("thXXX")


class TestCreateSprint:
    def test_fields_and_name(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=5, n_random=2, seed=7)
        assert sp.id == "sp0001"
        assert sp.status == "pending"
        assert sp.name == "Sim.Toy.GLOBAL.T6_V3_M1.E0_S0.v1"
        assert engine.thread(bowl_thread.id).sprint_ids == [sp.id]

    def test_sampler_and_pruner_validated(self, engine, bowl_thread):
        with pytest.raises(EngineError, match="sampler"):
            engine.create_sprint(bowl_thread.id, sampler="grid")
        with pytest.raises(EngineError, match="pruner"):
            engine.create_sprint(bowl_thread.id, pruner="median")
        with pytest.raises(EngineError, match="n_calls"):
            engine.create_sprint(bowl_thread.id, n_calls=0)

    def test_scheduler_compression_guard(self, engine, bowl_thread):
        """A scheduler-on sprint shorter than the schedule design length must
        declare an early-stop mode; disabling the scheduler also works."""
        with pytest.raises(EngineError, match="compression"):
            engine.create_sprint(bowl_thread.id, fidelity=FidelitySpec(max_epochs=10))
        engine.create_sprint(bowl_thread.id, fidelity=FidelitySpec(max_epochs=10, scheduler_enabled=False))
        engine.create_sprint(
            bowl_thread.id, fidelity=FidelitySpec(max_epochs=10, early_stop="end_of_warmup")
        )

    def test_hyperband_config_derived_from_fidelity(self, engine, bowl_thread):
        sp = engine.create_sprint(
            bowl_thread.id,
            sampler="tpe",
            pruner="hyperband",
            fidelity=FidelitySpec(max_epochs=25, calibration_epochs=7),
        )
        assert sp.hyperband is not None
        assert sp.hyperband.max_resource == 32
        assert sp.hyperband.eta == 3
        assert sp.hyperband.s_max == 3
        assert sp.hyperband.budget == 128

    def test_unknown_space_version(self, engine, bowl_thread):
        with pytest.raises(EngineError, match="space version"):
            engine.create_sprint(bowl_thread.id, space_version=99)

    def test_unknown_sprint_lookup(self, engine):
        with pytest.raises(EngineError, match="unknown sprint"):
            engine.sprint("spXXXX")


class TestRunSprintGP:
    def test_completes_and_records_incumbent(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=8, n_random=4, seed=0)
        result = engine.run_sprint(sp.id)
        sp = engine.sprint(sp.id)
        assert sp.status == "complete"
        assert len(result.trials) == 8
        assert all(t.status is TrialStatus.COMPLETE for t in result.trials)
        assert all(t.provenance.kind == "fresh" for t in result.trials)
        best = min(result.trials, key=lambda t: (t.final_score, t.id))
        assert sp.best_trial_id == best.id == result.best_trial.id

    def test_deterministic_given_seed(self, engine, bowl_thread):
        a = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=6, n_random=3, seed=5)
        b = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=6, n_random=3, seed=5)
        ra = engine.run_sprint(a.id)
        rb = engine.run_sprint(b.id)
        assert [t.point.values for t in ra.trials] == [t.point.values for t in rb.trials]
        assert [t.final_score for t in ra.trials] == [t.final_score for t in rb.trials]

    def test_all_failures_fail_the_sprint_but_keep_history(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=4, n_random=2, seed=0)
        engine.run_sprint(sp.id, objective=_Exploding())
        sp = engine.sprint(sp.id)
        assert sp.status == "failed"
        assert len(sp.trials) == 4
        assert all(t.status is TrialStatus.FAILED for t in sp.trials)
        assert all(t.error == "RuntimeError: diverged" for t in sp.trials)
        assert sp.best_trial_id is None

    def test_only_pending_sprints_run(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=2)
        engine.run_sprint(sp.id)
        with pytest.raises(EngineError, match="not pending"):
            engine.run_sprint(sp.id)

    def test_worker_limit_validated(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=2)
        with pytest.raises(EngineError, match="worker_limit"):
            engine.run_sprint(sp.id, worker_limit=0)

    def test_sprint_snapshot_written_on_finish(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=2)
        engine.run_sprint(sp.id)
        assert engine.store.read_snapshot(f"sprint-{sp.id}") == engine.sprint_snapshot(sp.id)


class TestRunSprintTPE:
    def test_completes_with_spec_trial_seeds(self, engine, bowl_thread):
        sp = engine.create_sprint(
            bowl_thread.id, sampler="tpe", fidelity=LOW, n_calls=12, n_random=0, seed=4
        )
        result = engine.run_sprint(sp.id)
        assert engine.sprint(sp.id).status == "complete"
        assert [t.seed for t in result.trials] == [4 * 100003 + i for i in range(12)]
        assert all(t.status is TrialStatus.COMPLETE for t in result.trials)
        space = engine.sprint_space(engine.sprint(sp.id))
        assert all(contains(space, t.point) for t in result.trials)

    def test_frozen_only_space_repeats_the_frozen_point(self, engine, bowl_thread):
        base = engine.space(bowl_thread.id)
        sp0 = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=4, n_random=2)
        engine.run_sprint(sp0.id)
        frozen = engine.prune_space(sp0.id, k=2, freezes=[("x", None), ("y", None)])
        sp = engine.create_sprint(
            bowl_thread.id, sampler="tpe", fidelity=LOW, n_calls=3, n_random=0, space_version=frozen.version
        )
        result = engine.run_sprint(sp.id)
        expect = {d.name: d.frozen_value for d in frozen.dimensions}
        assert [t.point.values for t in result.trials] == [expect] * 3
        assert base.version != frozen.version


class TestHyperbandPruning:
    def test_losing_trials_get_pruned_at_rungs(self, engine, bowl_thread):
        sp = engine.create_sprint(
            bowl_thread.id,
            sampler="tpe",
            pruner="hyperband",
            fidelity=FidelitySpec(max_epochs=25, scheduler_enabled=False),
            n_calls=12,
            n_random=0,
            seed=0,
        )
        result = engine.run_sprint(sp.id)
        pruned = [t for t in result.trials if t.status is TrialStatus.PRUNED]
        complete = [t for t in result.trials if t.status is TrialStatus.COMPLETE]
        assert pruned and complete
        assert all(t.final_score is None for t in pruned)
        # cuts happen only at the stride rungs
        assert all(t.intermediate[-1].resource in (10, 20) for t in pruned)
        assert set(k for k in engine.rungs if k[0] == sp.id) == {(sp.id, 10), (sp.id, 20)}

    def test_rung_registry_survives_replay(self, engine, bowl_thread, tmp_path):
        sp = engine.create_sprint(
            bowl_thread.id,
            sampler="tpe",
            pruner="hyperband",
            fidelity=FidelitySpec(max_epochs=25, scheduler_enabled=False),
            n_calls=6,
            n_random=0,
            seed=1,
        )
        engine.run_sprint(sp.id)
        rebuilt = Engine(str(tmp_path / "store"))
        assert rebuilt.rungs == engine.rungs


class TestPruneSpace:
    def test_new_version_holds_the_top_k_hull(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=10, n_random=5, seed=2)
        result = engine.run_sprint(sp.id)
        pruned = engine.prune_space(sp.id, k=4)
        th = engine.thread(bowl_thread.id)
        assert th.current_space_version == pruned.version
        assert pruned.version in th.space_versions
        top4 = sorted(result.trials, key=lambda t: (t.final_score, t.id))[:4]
        assert all(contains(pruned, t.point) for t in top4)
        assert engine.store.read_snapshot(f"space-{th.id}-v{pruned.version}") == pruned.to_json()

    def test_freezes_follow_as_separate_versions(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=10, n_random=5, seed=2)
        engine.run_sprint(sp.id)
        out = engine.prune_space(sp.id, k=4, freezes=[("y", None)])
        th = engine.thread(bowl_thread.id)
        y = next(d for d in out.dimensions if d.name == "y")
        assert y.is_frozen
        # prune then freeze: two registered edits
        assert th.space_versions[-2:] == [out.version - 1, out.version]

    def test_running_sprint_cannot_be_pruned(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=2)
        engine.sprints[sp.id].status = "running"
        with pytest.raises(EngineError, match="running"):
            engine.prune_space(sp.id, k=2)

    def test_too_few_completed_trials(self, engine, bowl_thread):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=2)
        engine.run_sprint(sp.id)
        with pytest.raises(SpaceError):
            engine.prune_space(sp.id, k=10)


class TestPrimingLegality:
    """The engine is the only enforcement point for priming rules."""

    def test_warm_requires_identical_fidelity(self, engine, bowl_thread):
        src = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=4, n_random=2)
        engine.run_sprint(src.id)
        target = engine.create_sprint(bowl_thread.id, fidelity=MID, n_calls=3, n_random=0)
        with pytest.raises(PrimingViolation) as exc:
            engine.warm_prime(target.id, src.id, 2)
        assert exc.value.reason == "fidelity-mismatch"
        assert "T3_V3_M1" in str(exc.value) and "T6_V3_M1" in str(exc.value)

    def test_cold_may_cross_fidelity(self, engine, bowl_thread):
        src = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=4, n_random=2)
        engine.run_sprint(src.id)
        target = engine.create_sprint(bowl_thread.id, fidelity=MID, n_calls=3, n_random=0)
        assert engine.cold_prime(target.id, src.id, 3) == 3

    def test_threads_are_isolated(self, engine):
        a = engine.create_thread("one", objective="quadratic_bowl", space=UNIT)
        b = engine.create_thread("two", objective="quadratic_bowl", space=UNIT)
        src = engine.create_sprint(a.id, fidelity=LOW, n_calls=4, n_random=2)
        engine.run_sprint(src.id)
        target = engine.create_sprint(b.id, fidelity=LOW, n_calls=3, n_random=0)
        for prime in (engine.warm_prime, engine.cold_prime):
            with pytest.raises(PrimingViolation) as exc:
                prime(target.id, src.id, 2)
            assert exc.value.reason == "thread-isolation"

    def test_init_checkpoint_mismatch_needs_override(self, engine, bowl_thread):
        src = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=4, n_random=2)
        engine.run_sprint(src.id)
        target = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=0, init_checkpoint=(5, 1))
        with pytest.raises(PrimingViolation) as exc:
            engine.warm_prime(target.id, src.id, 2)
        assert exc.value.reason == "init-mismatch"
        assert engine.warm_prime(target.id, src.id, 2, override_init_mismatch=True) == 2

    def test_check_priming_works_before_the_target_exists(self, engine, bowl_thread):
        src = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=4, n_random=2)
        engine.run_sprint(src.id)
        engine.check_priming(bowl_thread.id, LOW, (0, 0), src.id, "warm")
        with pytest.raises(PrimingViolation):
            engine.check_priming(bowl_thread.id, MID, (0, 0), src.id, "warm")
        engine.check_priming(bowl_thread.id, MID, (0, 0), src.id, "cold")

    def test_only_pending_targets_can_be_primed(self, engine, bowl_thread):
        src = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=4, n_random=2)
        engine.run_sprint(src.id)
        target = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=0)
        engine.run_sprint(target.id)
        with pytest.raises(EngineError, match="pending"):
            engine.warm_prime(target.id, src.id, 2)


class TestWarmPriming:
    def test_imports_trials_with_scores_and_lineage(self, engine, bowl_thread):
        src = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=6, n_random=3, seed=1)
        src_result = engine.run_sprint(src.id)
        target = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=0, seed=9)
        n = engine.warm_prime(target.id, src.id, 2)
        target = engine.sprint(target.id)
        assert n == 2 and target.n_imported == 2
        best2 = sorted(src_result.trials, key=lambda t: (t.final_score, t.id))[:2]
        for got, want in zip(target.trials, best2):
            assert got.status is TrialStatus.COMPLETE
            assert got.final_score == want.final_score
            assert got.point.values == want.point.values
            assert got.provenance.kind == "warm_primed"
            assert got.provenance.source_sprint == src.id
            assert got.provenance.source_trial == want.id
            assert len(got.intermediate) == len(want.intermediate)

    def test_imports_seed_the_sampler_not_the_budget(self, engine, bowl_thread):
        """Warm imports count as history; the target still runs its own calls."""
        src = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=6, n_random=3, seed=1)
        engine.run_sprint(src.id)
        target = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=0, seed=9)
        engine.warm_prime(target.id, src.id, 2)
        result = engine.run_sprint(target.id)
        assert len(result.trials) == 5
        assert [t.id for t in result.trials] == [0, 1, 2, 3, 4]
        executed = result.trials[2:]
        assert all(t.provenance.kind == "fresh" for t in executed)


class TestColdPriming:
    def test_scores_recomputed_under_target_fidelity(self, engine, bowl_thread):
        """Cold priming re-runs the point; data subsets differ across the
        fidelity change so the fresh score must not equal the source's."""
        src = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=6, n_random=3, seed=1)
        src_result = engine.run_sprint(src.id)
        target = engine.create_sprint(
            bowl_thread.id, sampler="tpe", fidelity=MID, n_calls=3, n_random=0, seed=2
        )
        assert engine.cold_prime(target.id, src.id, 3) == 3
        assert engine.sprint(target.id).n_imported == 0
        result = engine.run_sprint(target.id)
        best3 = sorted(src_result.trials, key=lambda t: (t.final_score, t.id))[:3]
        objective = engine.objective_for(bowl_thread.id)
        for got, want in zip(result.trials, best3):
            assert got.provenance.kind == "cold_primed"
            assert got.provenance.source_sprint == src.id
            assert got.provenance.source_trial == want.id
            assert got.point.values == want.point.values
            assert got.final_score != want.final_score
            expected = objective.evaluate(got.point, MID, got.seed)
            assert got.final_score == expected

    def test_source_points_outside_target_space_are_skipped(self, engine, bowl_thread):
        src = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=10, n_random=5, seed=3)
        src_result = engine.run_sprint(src.id)
        pruned = engine.prune_space(src.id, k=3)
        target = engine.create_sprint(
            bowl_thread.id, fidelity=MID, n_calls=3, n_random=0, space_version=pruned.version
        )
        n = engine.cold_prime(target.id, src.id, top_n=10)
        inside = [t for t in src_result.trials if contains(pruned, t.point)]
        assert n == len(inside)
        queued = engine.sprint(target.id).primed_queue
        assert all(contains(pruned, p) for p, _ in queued)


class TestReplay:
    def test_rebuilt_engine_matches_the_writer(self, engine, bowl_thread, tmp_path):
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=6, n_random=3, seed=0)
        engine.run_sprint(sp.id)
        engine.prune_space(sp.id, k=3)
        rebuilt = Engine(str(tmp_path / "store"))
        assert rebuilt.sprint_snapshot(sp.id) == engine.sprint_snapshot(sp.id)
        assert rebuilt.thread(bowl_thread.id).to_json() == engine.thread(bowl_thread.id).to_json()
        assert set(rebuilt.spaces) == set(engine.spaces)
        for key in engine.spaces:
            assert rebuilt.spaces[key].to_json() == engine.spaces[key].to_json()

    def test_crash_between_trial_finish_and_sprint_finish(self, engine, bowl_thread, tmp_path):
        """A log that stops after a trial-finished event replays to an
        interrupted sprint that still holds the finished trial."""
        sp = engine.create_sprint(bowl_thread.id, fidelity=LOW, n_calls=3, n_random=2, seed=0)
        point = HPoint({"x": 0.25, "y": 0.75})
        engine._emit(bowl_thread.id, "sprint-started", {"sprint_id": sp.id, "worker_limit": 1})
        engine._emit(
            bowl_thread.id,
            "trial-started",
            {
                "sprint_id": sp.id,
                "trial": {"id": 0, "point": point.to_json(), "provenance": {"kind": "fresh"}, "seed": 11},
            },
        )
        engine._emit(
            bowl_thread.id,
            "tick",
            {"sprint_id": sp.id, "trial_id": 0, "resource": 1, "score": 0.5, "prunable": False},
        )
        engine._emit(
            bowl_thread.id,
            "trial-finished",
            {
                "sprint_id": sp.id,
                "trial": {
                    "id": 0,
                    "point": point.to_json(),
                    "status": "complete",
                    "final_score": 0.5,
                    "intermediate": [{"resource": 1, "score": 0.5, "prunable": False}],
                    "provenance": {"kind": "fresh"},
                    "seed": 11,
                    "error": None,
                },
            },
        )
        rebuilt = Engine(str(tmp_path / "store"))
        sprint = rebuilt.sprint(sp.id)
        assert sprint.status == "interrupted"
        assert len(sprint.trials) == 1
        trial = sprint.trials[0]
        assert trial.status is TrialStatus.COMPLETE
        assert trial.final_score == 0.5

    def test_unknown_event_kind_rejected_on_apply(self, engine):
        with pytest.raises(EngineError, match="unknown event kind"):
            engine._apply({"kind": "mystery"})


class TestThreePhase:
    # shrunk budgets keep this a plumbing test; convergence is covered by
    # the acceptance suite at the full budgets
    MINI = ThreePhaseConfig(
        phase1_calls=8,
        phase1_random=4,
        prune_keep=4,
        phase2_calls=6,
        phase2_random=3,
        phase3_calls=3,
        phase3_primed=2,
        phase3_fidelity=FidelitySpec(max_epochs=25, calibration_epochs=2),
    )

    def test_runs_three_sprints_with_expected_wiring(self, engine):
        space = SearchSpace(
            name="g",
            dimensions=(
                Dimension("x", "uniform", 0.0, 1.0),
                Dimension("y", "uniform", 0.0, 1.0),
                Dimension("lr_warmup", "integer", 1, 10),
            ),
        )
        th = engine.create_thread("tp", objective="quadratic_bowl", space=space)
        report = engine.run_three_phase(th.id, seed=0, config=self.MINI)
        assert [p["phase"] for p in report.phases] == [1, 2, 3]
        assert all(p["status"] == "complete" for p in report.phases)
        assert [p["n_trials"] for p in report.phases] == [8, 6, 3]

        sp1 = engine.sprint(report.phases[0]["sprint_id"])
        sp2 = engine.sprint(report.phases[1]["sprint_id"])
        sp3 = engine.sprint(report.phases[2]["sprint_id"])
        assert (sp1.sampler, sp1.pruner) == ("gp", "none")
        assert (sp2.sampler, sp2.pruner) == ("gp", "none")
        assert (sp3.sampler, sp3.pruner) == ("tpe", "hyperband")
        assert sp3.tpe.n_startup == 2

        # phase 1 freezes warmup; the pruned phase-2 space re-opens it at [6, 8]
        space1 = engine.sprint_space(sp1)
        w1 = next(d for d in space1.dimensions if d.name == "lr_warmup")
        assert w1.is_frozen and w1.frozen_value == 7
        space2 = engine.sprint_space(sp2)
        w2 = next(d for d in space2.dimensions if d.name == "lr_warmup")
        assert not w2.is_frozen and (w2.low, w2.high) == (6, 8)
        assert sp2.space_version == sp3.space_version

        # phase 3 is cold-primed from phase 2's best
        primed = [t for t in sp3.trials if t.provenance.kind == "cold_primed"]
        assert len(primed) == 2
        assert all(t.provenance.source_sprint == sp2.id for t in primed)
        assert report.incumbent_of(3) is not None

    def test_report_serializes(self, engine):
        th = engine.create_thread("tp", objective="quadratic_bowl", space=UNIT)
        report = engine.run_three_phase(th.id, seed=1, config=self.MINI)
        js = report.to_json()
        assert js["thread_id"] == th.id
        assert js["seed"] == 1
        assert len(js["phases"]) == 3
