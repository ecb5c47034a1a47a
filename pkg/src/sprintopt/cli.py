"""Command-line entry points over the engine and the toy calibration loop."""

from __future__ import annotations

import json
import math
import sys
from typing import Any

import click

from .calibrate import CalibrationPolicy, fit_with_calibration
from .engine import Engine, EngineError, PrimingViolation
from .space import SearchSpace, SpaceError
from .testbed import ToyPipeline
from .trials import FidelitySpec, Trial, TrialStatus, incumbent

_SETTINGS = {"auto_envvar_prefix": "SPRINTOPT"}


@click.group(context_settings=_SETTINGS)
@click.option(
    "--store",
    "store_root",
    default="./sprintopt-store",
    show_default=True,
    help="Event store directory (logs and snapshots).",
)
@click.pass_context
def main(ctx: click.Context, store_root: str) -> None:
    """Sprint-scoped hyperparameter search."""
    ctx.obj = store_root


def _engine(ctx: click.Context) -> Engine:
    return Engine(ctx.obj)


def _echo_json(data: object) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


def _dimension_hulls(space: SearchSpace, trials: list[Trial], k: int = 10) -> dict[str, Any]:
    """Per-dimension bounds (or kept categories) over the top-k completed
    trials; None for dimensions the top trials never set."""
    done = [
        t
        for t in trials
        if t.status is TrialStatus.COMPLETE and t.final_score is not None and math.isfinite(t.final_score)
    ]
    done.sort(key=lambda t: (t.final_score, t.id))
    top = done[: min(k, len(done))]
    hulls: dict[str, Any] = {}
    for d in space.dimensions:
        vals = [t.point.values[d.name] for t in top if d.name in t.point.values]
        if not vals:
            hulls[d.name] = None
        elif d.kind == "categorical":
            kept = set(vals)
            hulls[d.name] = {"categories": [c for c in d.categories if c in kept]}
        else:
            hulls[d.name] = {"low": min(vals), "high": max(vals)}
    return hulls


def _parse_prime(raw: str) -> tuple[str, str, int]:
    """Split a mode:sprint[:topN] priming argument; topN defaults to 3."""
    parts = raw.split(":")
    if len(parts) not in (2, 3) or parts[0] not in ("warm", "cold") or not parts[1]:
        raise click.ClickException(
            f"--prime expects {{warm|cold}}:SPRINT[:TOPN], got {raw!r}"
        )
    top_n = 3
    if len(parts) == 3:
        try:
            top_n = int(parts[2])
        except ValueError:
            raise click.ClickException(f"--prime top count must be an integer, got {parts[2]!r}") from None
    return parts[0], parts[1], top_n


@main.command("init-thread")
@click.option("--name", required=True)
@click.option(
    "--grouping",
    default="GLOBAL",
    show_default=True,
    type=click.Choice(["GLOBAL", "LR0-L2", "LR0_L2"]),
    callback=lambda ctx, param, v: v.replace("-", "_"),
)
@click.option(
    "--objective",
    default="multitask_sim",
    show_default=True,
    type=click.Choice(["quadratic_bowl", "branin_like", "multitask_sim", "toy_pipeline"]),
)
@click.option("--model-type", default="Sim", show_default=True)
@click.option("--variant", default="Toy", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int, help="Objective landscape seed.")
@click.option("--noise-sd", default=0.0, show_default=True, type=float)
@click.option("--with-warmup/--no-warmup", default=False, show_default=True)
@click.pass_context
def init_thread(
    ctx: click.Context,
    name: str,
    grouping: str,
    objective: str,
    model_type: str,
    variant: str,
    seed: int,
    noise_sd: float,
    with_warmup: bool,
) -> None:
    """Create a thread with its version-0 search space."""
    engine = _engine(ctx)
    thread = engine.create_thread(
        name,
        grouping=grouping,
        model_type=model_type,
        variant=variant,
        objective=objective,
        objective_seed=seed,
        noise_sd=noise_sd,
        with_warmup=with_warmup,
    )
    _echo_json({"thread": thread.to_json(), "space": engine.space(thread.id).to_json()})


@main.command("run-sprint")
@click.option("--thread", "thread_id", required=True)
@click.option("--sampler", default="gp", show_default=True, type=click.Choice(["gp", "tpe"]))
@click.option("--pruner", default="none", show_default=True, type=click.Choice(["none", "hyperband"]))
@click.option("--fidelity", default="T1_V1_M25", show_default=True, help="Designation like T6_V3_M1.")
@click.option("--scheduler/--no-scheduler", default=True, show_default=True)
@click.option(
    "--early-stop", default="none", show_default=True, type=click.Choice(["none", "end_of_warmup"])
)
@click.option("--calibration-epochs", default=0, show_default=True, type=int)
@click.option("--calls", default=30, show_default=True, type=int, help="Total trial budget.")
@click.option("--random", "random_", default=10, show_default=True, type=int, help="Random warmup trials.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--workers", default=1, show_default=True, type=int)
@click.option("--suffix", default="v1", show_default=True)
@click.option(
    "--prime",
    default=None,
    metavar="{warm|cold}:SPRINT[:TOPN]",
    help="Prime from another sprint before running, e.g. warm:sp001:3.",
)
@click.option("--override-init-mismatch", is_flag=True, default=False)
@click.pass_context
def run_sprint(
    ctx: click.Context,
    thread_id: str,
    sampler: str,
    pruner: str,
    fidelity: str,
    scheduler: bool,
    early_stop: str,
    calibration_epochs: int,
    calls: int,
    random_: int,
    seed: int,
    workers: int,
    suffix: str,
    prime: str | None,
    override_init_mismatch: bool,
) -> None:
    """Create, optionally prime, and run one sprint. Exit code 2 when the
    sprint fails or priming is rejected."""
    engine = _engine(ctx)
    priming = None if prime is None else _parse_prime(prime)
    try:
        fid = FidelitySpec.parse_designation(
            fidelity,
            scheduler_enabled=scheduler,
            early_stop=early_stop,
            calibration_epochs=calibration_epochs,
        )
        sprint = engine.create_sprint(
            thread_id,
            sampler=sampler,
            pruner=pruner,
            fidelity=fid,
            n_calls=calls,
            n_random=random_,
            seed=seed,
            suffix=suffix,
        )
        if priming is not None:
            mode, source, top_n = priming
            fn = engine.warm_prime if mode == "warm" else engine.cold_prime
            n = fn(sprint.id, source, top_n, override_init_mismatch=override_init_mismatch)
            click.echo(f"primed {n} trial(s) from {source} ({mode})", err=True)
        result = engine.run_sprint(sprint.id, worker_limit=workers)
    except PrimingViolation as exc:
        click.echo(f"priming rejected ({exc.reason}): {exc}", err=True)
        ctx.exit(2)
    except (EngineError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None
    final = engine.sprint(sprint.id)
    best = result.best_trial
    _echo_json(
        {
            "sprint_id": sprint.id,
            "name": sprint.name,
            "status": final.status,
            "n_trials": len(result.trials),
            "best": None
            if best is None
            else {"trial_id": best.id, "score": best.final_score, "point": best.point.to_json()},
        }
    )
    if final.status != "complete":
        ctx.exit(2)


@main.command("prune")
@click.option("--sprint", "sprint_id", required=True)
@click.option("--k", default=10, show_default=True, type=int)
@click.option(
    "--freeze",
    "freezes",
    multiple=True,
    help="name=value (repeatable); value parsed as JSON, falling back to string.",
)
@click.pass_context
def prune(ctx: click.Context, sprint_id: str, k: int, freezes: tuple[str, ...]) -> None:
    """Shrink the sprint's space to the top-k hull plus audit margins."""
    engine = _engine(ctx)
    parsed = []
    for item in freezes:
        name, _, raw = item.partition("=")
        if not _:
            raise click.ClickException(f"--freeze needs name=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parsed.append((name, value))
    try:
        space = engine.prune_space(sprint_id, k, freezes=parsed)
    except (EngineError, SpaceError) as exc:
        click.echo(f"prune rejected: {exc}", err=True)
        ctx.exit(2)
    _echo_json(space.to_json())


@main.command("three-phase")
@click.option("--thread", "thread_id", required=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--workers", default=1, show_default=True, type=int)
@click.pass_context
def three_phase(ctx: click.Context, thread_id: str, seed: int, workers: int) -> None:
    """Run the full coarse/refine/polish flow on a thread."""
    engine = _engine(ctx)
    try:
        report = engine.run_three_phase(thread_id, seed=seed, worker_limit=workers)
    except EngineError as exc:
        raise click.ClickException(str(exc)) from None
    _echo_json(report.to_json())


@main.command("calibrate")
@click.option("--pipeline-seed", default=0, show_default=True, type=int)
@click.option("--epochs", default=25, show_default=True, type=int)
@click.option("--calib-iters", default=7, show_default=True, type=int)
@click.option("--n-classes", default=96, show_default=True, type=int)
@click.option("--n-docs", default=18, show_default=True, type=int)
@click.option("--beta", default=1.0, show_default=True, type=float)
def calibrate(
    pipeline_seed: int, epochs: int, calib_iters: int, n_classes: int, n_docs: int, beta: float
) -> None:
    """Train the toy multi-stage pipeline and fit decision thresholds."""
    pipeline = ToyPipeline(seed=pipeline_seed, n_docs=n_docs, n_classes=n_classes, beta=beta)
    policy = CalibrationPolicy(beta=beta, max_calib_iterations=calib_iters)
    report = fit_with_calibration(pipeline, epochs, policy)
    _echo_json(report.to_json())


@main.command("report")
@click.option("--sprint", "sprint_id", required=True)
@click.option("--format", "fmt", default="json", show_default=True, type=click.Choice(["json", "csv"]))
@click.pass_context
def report(ctx: click.Context, sprint_id: str, fmt: str) -> None:
    """Dump a sprint's trials (json) or a flat per-trial table (csv)."""
    engine = _engine(ctx)
    try:
        sprint = engine.sprint(sprint_id)
    except EngineError as exc:
        raise click.ClickException(str(exc)) from None
    space = engine.sprint_space(sprint)
    if fmt == "json":
        data = sprint.to_json()
        best = incumbent(sprint.trials)
        data["best_trial_id"] = None if best is None else best.id
        data["hulls"] = _dimension_hulls(space, sprint.trials)
        _echo_json(data)
        return
    import csv

    writer = csv.writer(sys.stdout)
    writer.writerow(["trial_id", "status", "score", *space.names])
    for t in sprint.trials:
        writer.writerow(
            [
                t.id,
                t.status.value,
                "" if t.final_score is None else t.final_score,
                *[t.point.values.get(n, "") for n in space.names],
            ]
        )


@main.command("serve")
@click.option("--addr", default="127.0.0.1:8361", show_default=True, metavar="HOST:PORT")
@click.option("--store", "store_root", default=None, help="Event store path (defaults to the global --store).")
@click.pass_context
def serve(ctx: click.Context, addr: str, store_root: str | None) -> None:
    """Serve the HTTP API over this store."""
    from .service import serve as _serve

    host, sep, port_raw = addr.rpartition(":")
    if not sep or not host:
        raise click.ClickException(f"--addr expects HOST:PORT, got {addr!r}")
    try:
        port = int(port_raw)
    except ValueError:
        raise click.ClickException(f"--addr port must be an integer, got {port_raw!r}") from None
    _serve(store_root or ctx.obj, host=host, port=port)


if __name__ == "__main__":
    main()
