"""Reference scenarios used throughout the tests, scripts and docs.

Curves are written out breakpoint by breakpoint rather than produced by the
generators in :mod:`dmrkit.supply`, so the generators can be checked
against them.
"""

from __future__ import annotations

from fractions import Fraction

from .model import ExecDistribution, TaskSpec
from .supply import SupplyCurve, SupplyModel

F = Fraction


def tdma_3() -> SupplyModel:
    """TDMA, cycle 3, slot [1, 3), task period 3."""
    return SupplyModel.exact([SupplyCurve.of([(0, 0), (1, 0), (3, 2)])])


def fp_three_phase() -> SupplyModel:
    """Supply left by a higher-priority task (period 3, exec 1) for period 4; Q = 3."""
    return SupplyModel.exact(
        [
            SupplyCurve.of([(0, 0), (1, 0), (3, 2), (4, 2)]),
            SupplyCurve.of([(0, 0), (2, 2), (3, 2), (4, 3)]),
            SupplyCurve.of([(0, 0), (1, 1), (2, 1), (4, 3)]),
        ]
    )


def cbs_half() -> SupplyModel:
    """Hard CBS with budget 1/2 every 1 time unit, period 4."""
    upper, lower = [(F(0), F(0))], [(F(0), F(0))]
    for k in range(4):
        upper += [(k + F(1, 2), k * F(1, 2) + F(1, 2)), (F(k + 1), (k + 1) * F(1, 2))]
        lower += [(k + F(1, 2), k * F(1, 2)), (F(k + 1), (k + 1) * F(1, 2))]
    return SupplyModel.bounds([SupplyCurve.of(upper)], [SupplyCurve.of(lower)])


def fp_three_phase_bounds() -> SupplyModel:
    """Upper/lower bounds enclosing :func:`fp_three_phase`; Q = 3."""
    u1 = SupplyCurve.of([(0, 0), (2, 2), (4, 2)])
    l1 = SupplyCurve.of([(0, 0), (2, 0), (4, 2)])
    u23 = SupplyCurve.of([(0, 0), (3, 3), (4, 3)])
    l23 = SupplyCurve.of([(0, 0), (1, 0), (4, 3)])
    return SupplyModel.bounds([u1, u23, u23], [l1, l23, l23])


def two_point_task(
    p: Fraction | str = "1/2",
    deadline: Fraction | int = 4,
    dismiss_offset: Fraction | int = 1,
    period: Fraction | int = 4,
) -> TaskSpec:
    """Execution time 2 with probability ``p`` and 3 otherwise."""
    p = F(p)
    return TaskSpec(
        exec=ExecDistribution.of([(2, p), (3, 1 - p)]),
        period=period,
        deadline=deadline,
        dismiss_offset=dismiss_offset,
    )


def reducible_task() -> TaskSpec:
    """Deterministic task whose backlog ratchets up into an absorbing miss state."""
    return TaskSpec(exec=ExecDistribution.of([(3, 1)]), period=4, deadline=8, dismiss_offset=0)


def late_half_supply() -> SupplyModel:
    return SupplyModel.exact([SupplyCurve.of([(0, 0), (2, 0), (4, 2)])])
