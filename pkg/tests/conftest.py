from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from dmrkit import scenarios
from dmrkit.model import ExecDistribution, TaskSpec
from dmrkit.supply import SupplyCurve, SupplyModel

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).resolve().parents[1] / "data"

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def ex_task() -> TaskSpec:
    return scenarios.two_point_task()


@pytest.fixture
def fp_supply() -> SupplyModel:
    return scenarios.fp_three_phase()


@pytest.fixture
def fp_bounds() -> SupplyModel:
    return scenarios.fp_three_phase_bounds()


# ---------------------------------------------------------------------------
# strategies


def _increments(period: int):
    return st.lists(st.integers(0, 1), min_size=period, max_size=period)


def _curve(incs: list[int]) -> SupplyCurve:
    pts, acc = [(0, 0)], 0
    for t, d in enumerate(incs, start=1):
        acc += d
        pts.append((t, acc))
    return SupplyCurve.of(pts)


@st.composite
def exec_dists(draw, max_value: int = 8, max_points: int = 3) -> ExecDistribution:
    values = draw(st.lists(st.integers(0, max_value), min_size=1, max_size=max_points, unique=True))
    weights = draw(st.lists(st.integers(1, 6), min_size=len(values), max_size=len(values)))
    total = sum(weights)
    return ExecDistribution.of(sorted((v, Fraction(w, total)) for v, w in zip(values, weights)))


@st.composite
def tasks(draw, period: int | None = None) -> TaskSpec:
    T = period or draw(st.integers(2, 4))
    return TaskSpec(
        exec=draw(exec_dists(max_value=2 * T)),
        period=T,
        deadline=draw(st.integers(1, 2 * T)),
        dismiss_offset=draw(st.integers(0, T)),
    )


@st.composite
def exact_supplies(draw, period: int, max_q: int = 3) -> SupplyModel:
    q = draw(st.integers(1, max_q))
    return SupplyModel.exact([_curve(draw(_increments(period))) for _ in range(q)])


@st.composite
def bound_supplies(draw, period: int, max_q: int = 3) -> SupplyModel:
    q = draw(st.integers(1, max_q))
    upper, lower = [], []
    for _ in range(q):
        a, b = draw(_increments(period)), draw(_increments(period))
        ca, cb = _curve(a), _curve(b)
        ts = range(period + 1)
        upper.append(SupplyCurve.of([(t, max(ca(t), cb(t))) for t in ts]))
        lower.append(SupplyCurve.of([(t, min(ca(t), cb(t))) for t in ts]))
    return SupplyModel.bounds(upper, lower)


@st.composite
def scenarios_st(draw, modes=("exact", "bounds")):
    T = draw(st.integers(2, 4))
    task = draw(tasks(period=T))
    mode = draw(st.sampled_from(modes))
    supply = draw(exact_supplies(T) if mode == "exact" else bound_supplies(T))
    return task, supply
