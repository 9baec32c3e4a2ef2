from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmrkit import scenarios
from dmrkit.analysis import (
    SingularSystem,
    bareiss_stationary,
    check_irreducible,
    closed_classes,
    compute_dmr,
    gth_stationary,
    stationary_distribution,
    tarjan_scc,
)
from dmrkit.chain import build_chain

from . import golden
from .conftest import scenarios_st

F = Fraction


def closure(n, succ):
    reach = [set(s) | {i} for i, s in enumerate(succ)]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            new = set().union(*(reach[j] for j in reach[i]))
            if new != reach[i]:
                reach[i], changed = new, True
    return reach


graphs = st.integers(1, 9).flatmap(
    lambda n: st.tuples(
        st.just(n), st.lists(st.lists(st.integers(0, n - 1), max_size=3), min_size=n, max_size=n)
    )
)


@given(graphs)
def test_tarjan_matches_transitive_closure(graph):
    n, succ = graph
    reach = closure(n, succ)
    comps = tarjan_scc(n, succ)
    assert sorted(v for c in comps for v in c) == list(range(n))
    for comp in comps:
        for a in comp:
            assert {b for b in range(n) if a in reach[b] and b in reach[a]} == set(comp)


def test_tarjan_deep_path_is_iterative():
    n = 50_000
    succ = [[i + 1] for i in range(n - 1)] + [[0]]
    assert len(tarjan_scc(n, succ)) == 1


def test_example_distribution(ex_task, fp_supply):
    chain = build_chain(ex_task, fp_supply)
    result = compute_dmr(chain)
    order = golden.listed_order(chain)
    assert [result.pi[i] for i in order] == golden.LISTED_PI
    assert result.dmr == golden.DMR and result.exact and result.irreducible
    assert result.summary() == "DMR = 7/24 (~0.29167)"


def test_solvers_agree(ex_task, fp_supply):
    chain = build_chain(ex_task.replace(dismiss_offset=7), fp_supply)
    gth = stationary_distribution(chain, "gth")
    assert bareiss_stationary(chain.matrix()) == gth
    approx = compute_dmr(chain, method="power")
    assert not approx.exact
    assert approx.dmr == pytest.approx(float(compute_dmr(chain).dmr), abs=1e-9)


def test_auto_switches_to_float_above_limit(ex_task, fp_supply):
    chain = build_chain(ex_task, fp_supply)
    result = compute_dmr(chain, exact_limit=3)
    assert not result.exact and "approximate" in result.summary()


def test_bound_summary(ex_task, fp_bounds):
    result = compute_dmr(build_chain(ex_task, fp_bounds))
    assert result.dmr == F(1, 3) and result.is_upper_bound
    assert result.summary().startswith("DMR ≤ 1/3 (upper bound, supply-bound mode)")
    assert result.to_dict()["dmr"] == "1/3"


def test_reducible_scenario():
    chain = build_chain(scenarios.reducible_task(), scenarios.late_half_supply())
    assert check_irreducible(chain) == (False, 3)
    result = compute_dmr(chain)
    assert result.dmr is None and result.pi is None
    assert result.summary() == "DMR = None (not irreducible)"
    assert any("3 strongly connected" in d for d in result.diagnostics)
    assert len(closed_classes(chain)) == 1
    # the transient states carry no mass
    pi = stationary_distribution(chain)
    assert sum(pi) == 1 and sum(1 for x in pi if x) == 1


def test_two_closed_classes_is_singular():
    with pytest.raises(SingularSystem):
        bareiss_stationary([[F(1), F(0)], [F(0), F(1)]])


def test_gth_small_cycle():
    out = [{1: F(1)}, {0: F(1, 3), 2: F(2, 3)}, {0: F(1)}]
    pi = gth_stationary(3, out)
    assert pi == [F(3, 8), F(3, 8), F(1, 4)]


@settings(max_examples=80)
@given(scenarios_st())
def test_stationary_vector_is_exact(scenario):
    chain = build_chain(*scenario)
    result = compute_dmr(chain)
    if not result.irreducible:
        assert result.dmr is None
        return
    P, pi = chain.matrix(), result.pi
    n = len(chain)
    assert all(sum(P[r][s] for r in range(n)) == 1 for s in range(n))
    assert [sum(P[r][s] * pi[s] for s in range(n)) for r in range(n)] == pi
    assert sum(pi) == 1 and all(x > 0 for x in pi)
    assert 0 <= result.dmr <= 1
    if n <= 30:
        assert bareiss_stationary(P) == pi
