"""Shared fixtures: tiny spaces, a minimal scored-trial stub, and a factory
for engines over throwaway stores."""

from __future__ import annotations

from dataclasses import dataclass, field

import pytest

from sprintopt.space import Dimension, HPoint, SearchSpace


@dataclass
class StubTrial:
    """The minimal shape pruning and TPE need from a trial record."""

    id: int
    point: HPoint
    final_score: float | None


def make_stub(i: int, values: dict, score: float | None) -> StubTrial:
    return StubTrial(id=i, point=HPoint(dict(values)), final_score=score)


@pytest.fixture
def mixed_space() -> SearchSpace:
    """One dimension of every kind."""
    return SearchSpace(
        name="mixed",
        dimensions=(
            Dimension("lr", "log_uniform", 1e-5, 1e-1),
            Dimension("momentum", "uniform", 0.0, 1.0),
            Dimension("layers", "integer", 1, 10),
            Dimension("head", "categorical", categories=("A", "B", "C")),
        ),
    )


@pytest.fixture
def unit_square() -> SearchSpace:
    return SearchSpace(
        name="unit-square",
        dimensions=(
            Dimension("x", "uniform", 0.0, 1.0),
            Dimension("y", "uniform", 0.0, 1.0),
        ),
    )
