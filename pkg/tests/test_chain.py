import json
from fractions import Fraction

import pytest
from hypothesis import given, settings

from dmrkit import scenarios
from dmrkit.chain import (
    ChainState,
    MarkovChain,
    ServiceOracle,
    StateBudgetExceeded,
    build_chain,
    expand_state,
    init_states,
    realization_path,
)
from dmrkit.model import ModelError, TaskSpec
from dmrkit.supply import SupplyCurve, SupplyModel

from . import golden
from .conftest import scenarios_st

F = Fraction


@pytest.fixture
def ex_chain(ex_task, fp_supply):
    return build_chain(ex_task, fp_supply)


def test_listed_matrix(ex_chain):
    chain = ex_chain.reorder(golden.listed_order(ex_chain))
    assert chain.matrix() == [[F(x) for x in row] for row in golden.LISTED_P]
    assert chain.initial == (F(1, 2), F(1, 2), 0, 0, 0, 0)


def test_initial_states(ex_task, fp_supply):
    got = dict(init_states(ex_task, fp_supply))
    assert got == {ChainState(0, False, F(0)): F(1, 2), ChainState(0, True, F(1)): F(1, 2)}


def test_expand_state(ex_task, fp_supply):
    got = dict(expand_state(ChainState(2, True, F(0)), ex_task, fp_supply))
    assert got == {ChainState(0, False, F(0)): F(1, 2), ChainState(0, True, F(1)): F(1, 2)}


def test_wide_deadline_chain():
    chain = build_chain(scenarios.two_point_task(deadline=6, dismiss_offset=0), scenarios.fp_three_phase())
    assert len(chain) == 8
    assert golden.edge_set(chain) == golden.WIDE_DEADLINE_EDGES


def test_bound_mode_chain(ex_task, fp_bounds):
    chain = build_chain(ex_task, fp_bounds)
    assert len(chain) == 6 and chain.mode == "bounds"
    s31, s11 = chain.find(2, True, 1), chain.find(0, True, 1)
    assert chain.prob(s31, s11) == 1


def test_oracle_step_rules(ex_task, fp_supply, fp_bounds):
    exact = ServiceOracle.for_model(ex_task, fp_supply)
    # phase 0: service before the deadline is 2, before dismissal 3, beta(T) = 2
    assert exact.step(0, F(0), F(2)) == (False, F(0))
    assert exact.step(0, F(0), F(3)) == (True, F(1))
    assert exact.step(0, F(2), F(3)) == (True, F(1))  # 5 capped at 3 before subtracting 2
    plain = ServiceOracle.for_model(ex_task, fp_bounds)
    safe = ServiceOracle.for_model(ex_task, fp_bounds, conservative_backlog=True)
    assert plain.hit_sub == (2, 3, 3) and plain.miss_sub == (2, 3, 3)
    assert safe.hit_sub == safe.miss_sub


def test_hit_backlog_subtracts_lower_total_when_conservative():
    bounds = SupplyModel.bounds(
        [SupplyCurve.of([(0, 0), (4, 4)])], [SupplyCurve.of([(0, 0), (2, 0), (4, 2)])]
    )
    task = TaskSpec(exec=[(1, "1/2"), (3, "1/2")], period=4, deadline=8)
    assert ServiceOracle.for_model(task, bounds).step(0, F(0), F(1)) == (False, F(0))
    assert ServiceOracle.for_model(task, bounds, True).step(0, F(2), F(1)) == (False, F(1))


def test_realization_path_matches_trace_example(ex_task, fp_supply):
    path = realization_path(ex_task, fp_supply, [3, 3, 3])
    assert [(s.missed, s.rem) for s in path] == [(True, 1), (True, 1), (True, 0)]


def test_canonical_order_and_labels(ex_chain):
    assert list(ex_chain.states) == sorted(ex_chain.states)
    assert ex_chain.states[1].label() == "(0, ↯, 1)"
    assert ex_chain.miss_states == (1, 3, 5)


def test_state_budget(ex_task, fp_supply, monkeypatch):
    with pytest.raises(StateBudgetExceeded):
        build_chain(ex_task, fp_supply, max_states=5)
    monkeypatch.setenv("DMRKIT_MAX_STATES", "4")
    with pytest.raises(StateBudgetExceeded):
        build_chain(ex_task, fp_supply)


def test_invalid_inputs_rejected(fp_supply):
    with pytest.raises(ModelError):
        build_chain(TaskSpec(exec=[(2, "1/3")], period=4, deadline=4), fp_supply)
    with pytest.raises(ModelError):
        build_chain(scenarios.two_point_task(period=5), fp_supply)


def test_exports(ex_chain):
    doc = json.loads(json.dumps(ex_chain.to_dict()))
    assert set(doc) >= {"states", "lambda", "transitions", "miss_states"}
    assert MarkovChain.from_dict(doc) == ex_chain
    dot = ex_chain.to_dot()
    assert dot.startswith("digraph") and '"(2, ↯, 0)"' in dot and 'label="1/2"' in dot


@settings(max_examples=60)
@given(scenarios_st())
def test_visit_order_does_not_matter(scenario):
    task, supply = scenario
    ref = build_chain(task, supply)
    for visit in ("fifo", "lifo"):
        assert build_chain(task, supply, visit=visit) == ref


@settings(max_examples=60)
@given(scenarios_st())
def test_backlog_within_cap_and_phase_discipline(scenario):
    task, supply = scenario
    chain = build_chain(task, supply)
    cap = chain.info["backlog_cap"]
    assert all(0 <= s.rem <= cap for s in chain.states)
    for s, r, _ in chain.edges():
        assert chain.states[r].phase == (chain.states[s].phase + 1) % chain.q
    assert sum(chain.initial) == 1
