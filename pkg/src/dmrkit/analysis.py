"""Irreducibility check, stationary distribution and deadline miss rate."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .chain import MarkovChain
from .model import SCHEMA, fmt_rat
from .supply import BOUNDS

EXACT_LIMIT = 10_000


class SingularSystem(ArithmeticError):
    """The stationary equations do not have a unique normalized solution."""


# ---------------------------------------------------------------------------
# strongly connected components


def tarjan_scc(n: int, succ: Sequence[Sequence[int]]) -> list[list[int]]:
    """Strongly connected components of the graph ``i -> succ[i]``.

    Iterative Tarjan; components come out in reverse topological order
    (sinks first).
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, k = work[-1]
            if k < len(succ[v]):
                work[-1] = (v, k + 1)
                w = succ[v][k]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def _succ_lists(chain: MarkovChain) -> list[list[int]]:
    return [[r for r, p in col if p > 0] for col in chain.transitions]


def check_irreducible(chain: MarkovChain) -> tuple[bool, int]:
    """``(irreducible, number of strongly connected components)``."""
    comps = tarjan_scc(len(chain), _succ_lists(chain))
    return len(comps) == 1, len(comps)


def closed_classes(chain: MarkovChain) -> list[list[int]]:
    """SCCs without edges leaving them (the recurrent classes of a finite chain)."""
    succ = _succ_lists(chain)
    comps = tarjan_scc(len(chain), succ)
    owner = {}
    for c, comp in enumerate(comps):
        for v in comp:
            owner[v] = c
    return [comp for c, comp in enumerate(comps) if all(owner[w] == c for v in comp for w in succ[v])]


# ---------------------------------------------------------------------------
# stationary distribution solvers


def gth_stationary(n: int, out: list[dict[int, Fraction]]) -> list[Fraction]:
    """Exact stationary vector of an irreducible chain by sparse state reduction.

    ``out[i]`` maps successors ``j`` to ``P(i -> j)``.  States are removed
    greedily by smallest ``in-degree * out-degree`` to keep fill-in low;
    every update only adds non-negative terms (no cancellation).
    """
    out = [{j: p for j, p in row.items() if j != i and p} for i, row in enumerate(out)]
    inn: list[set[int]] = [set() for _ in range(n)]
    for i, row in enumerate(out):
        for j in row:
            inn[j].add(i)
    alive = [True] * n
    heap = [(len(inn[i]) * len(out[i]), i) for i in range(n)]
    heapq.heapify(heap)
    eliminated: list[tuple[int, dict[int, Fraction], Fraction]] = []
    remaining = n
    while remaining > 1:
        cost, k = heapq.heappop(heap)
        if not alive[k] or cost != len(inn[k]) * len(out[k]):
            continue
        total = sum(out[k].values(), Fraction(0))
        if total == 0:
            raise SingularSystem(f"state {k} cannot reach the remaining states")
        flows = {i: out[i].pop(k) for i in inn[k]}
        for j, pkj in out[k].items():
            inn[j].discard(k)
            share = pkj / total
            for i, pik in flows.items():
                if i == j:
                    continue
                row = out[i]
                row[j] = row.get(j, 0) + pik * share
                inn[j].add(i)
        alive[k] = False
        remaining -= 1
        eliminated.append((k, flows, total))
        for v in set(flows) | set(out[k]):
            if alive[v]:
                heapq.heappush(heap, (len(inn[v]) * len(out[v]), v))
    last = next(i for i in range(n) if alive[i])
    pi = [Fraction(0)] * n
    pi[last] = Fraction(1)
    for k, flows, total in reversed(eliminated):
        pi[k] = sum((pi[i] * w for i, w in flows.items()), Fraction(0)) / total
    norm = sum(pi, Fraction(0))
    return [x / norm for x in pi]


def bareiss_stationary(P: list[list[Fraction]]) -> list[Fraction]:
    """Exact solution of ``(P - I) pi = 0, sum(pi) = 1`` by fraction-free elimination.

    The rational system is scaled to integers, one equation is replaced by
    the normalization row, and Bareiss elimination keeps every intermediate
    entry integral.  Dense; intended for small chains and cross-checks.
    """
    n = len(P)
    den = 1
    for row in P:
        for x in row:
            den = math.lcm(den, x.denominator)
    A = [[int(P[r][c] * den) - (den if r == c else 0) for c in range(n)] for r in range(n)]
    A[-1] = [1] * n
    b = [0] * (n - 1) + [1]
    M = [A[r] + [b[r]] for r in range(n)]
    prev = 1
    for k in range(n):
        piv = next((r for r in range(k, n) if M[r][k] != 0), None)
        if piv is None:
            raise SingularSystem("stationary equations are singular (nullspace dimension != 1)")
        if piv != k:
            M[k], M[piv] = M[piv], M[k]
        mk = M[k]
        akk = mk[k]
        for r in range(k + 1, n):
            mr = M[r]
            ark = mr[k]
            for c in range(k + 1, n + 1):
                mr[c] = (akk * mr[c] - ark * mk[c]) // prev
            mr[k] = 0
        prev = akk
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = Fraction(M[r][n]) - sum((M[r][c] * x[c] for c in range(r + 1, n)), Fraction(0))
        x[r] = acc / M[r][r]
    return x


def power_stationary(
    chain: MarkovChain, tol: float = 1e-12, max_iter: int = 1_000_000
) -> tuple[list[float], int, float]:
    """Floating-point fallback: power iteration on the lazy chain ``(P + I) / 2``.

    The lazy chain has the same stationary vector but is aperiodic, so the
    iteration converges despite the phase structure.  Returns
    ``(pi, iterations, l1_residual)``.
    """
    import numpy as np
    from scipy import sparse

    n = len(chain)
    rows, cols, vals = [], [], []
    for s, r, p in chain.edges():
        rows.append(r)
        cols.append(s)
        vals.append(float(p))
    P = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    x = np.full(n, 1.0 / n)
    resid = math.inf
    for it in range(1, max_iter + 1):
        y = 0.5 * (x + P @ x)
        y /= y.sum()
        resid = float(np.abs(y - x).sum())
        x = y
        if resid < tol:
            break
    final = float(np.abs(P @ x - x).sum())
    return x.tolist(), it, final


def stationary_distribution(chain: MarkovChain, method: str = "gth") -> list[Fraction]:
    """Exact stationary distribution, ``P pi = pi`` with ``sum(pi) = 1``.

    ``method`` is ``gth`` (sparse, default) or ``bareiss`` (dense).  Raises
    :class:`SingularSystem` unless exactly one closed class exists, i.e.
    unless the solution is unique.
    """
    n = len(chain)
    if n == 0:
        raise SingularSystem("empty chain")
    classes = closed_classes(chain)
    if len(classes) != 1:
        raise SingularSystem(f"{len(classes)} closed classes: stationary distribution not unique")
    if method == "bareiss":
        return bareiss_stationary(chain.matrix())
    if method != "gth":
        raise ValueError(f"unknown method {method!r}")
    members = classes[0]
    local = {v: k for k, v in enumerate(members)}
    out: list[dict[int, Fraction]] = []
    for v in members:
        row: dict[int, Fraction] = {}
        for r, p in chain.transitions[v]:
            row[local[r]] = row.get(local[r], Fraction(0)) + p
        out.append(row)
    sub = gth_stationary(len(members), out)
    pi = [Fraction(0)] * n
    for v, x in zip(members, sub):
        pi[v] = x
    return pi


# ---------------------------------------------------------------------------
# DMR


@dataclass
class AnalysisResult:
    irreducible: bool
    scc_count: int
    n_states: int
    mode: str
    pi: list[Any] | None = None
    dmr: Any = None
    exact: bool = True
    diagnostics: list[str] = field(default_factory=list)

    @property
    def is_upper_bound(self) -> bool:
        return self.mode == BOUNDS

    @property
    def dmr_float(self) -> float | None:
        return None if self.dmr is None else float(self.dmr)

    def summary(self) -> str:
        if self.dmr is None:
            return "DMR = None (not irreducible)"
        approx = f"~{float(self.dmr):.5f}"
        if not self.exact:
            value, note = approx, "(approximate)"
        else:
            value, note = fmt_rat(self.dmr), f"({approx})"
        if self.is_upper_bound:
            return f"DMR ≤ {value} (upper bound, supply-bound mode) {note}"
        return f"DMR = {value} {note}"

    def to_dict(self) -> dict[str, Any]:
        def enc(x: Any) -> Any:
            return fmt_rat(x) if isinstance(x, Fraction) else x

        return {
            "schema": SCHEMA,
            "irreducible": self.irreducible,
            "scc_count": self.scc_count,
            "n_states": self.n_states,
            "mode": self.mode,
            "upper_bound": self.is_upper_bound,
            "exact": self.exact,
            "dmr": enc(self.dmr),
            "dmr_float": self.dmr_float,
            "pi": None if self.pi is None else [enc(x) for x in self.pi],
            "diagnostics": list(self.diagnostics),
        }


def compute_dmr(chain: MarkovChain, method: str = "auto", exact_limit: int = EXACT_LIMIT) -> AnalysisResult:
    """Deadline miss rate of ``chain``, or ``dmr=None`` if it is not irreducible.

    ``method``: ``auto`` (exact up to ``exact_limit`` states, power iteration
    beyond), ``gth``, ``bareiss`` or ``power``.
    """
    irreducible, count = check_irreducible(chain)
    result = AnalysisResult(irreducible=irreducible, scc_count=count, n_states=len(chain), mode=chain.mode)
    if not irreducible:
        comps = tarjan_scc(len(chain), _succ_lists(chain))
        result.diagnostics.append(f"chain has {count} strongly connected components")
        for comp in comps:
            labels = ", ".join(chain.states[i].label() for i in comp[:8])
            more = f" … (+{len(comp) - 8})" if len(comp) > 8 else ""
            result.diagnostics.append(f"component: {labels}{more}")
        return result

    if method == "auto":
        method = "gth" if len(chain) <= exact_limit else "power"
    if method == "power":
        pi, iters, resid = power_stationary(chain)
        result.exact = False
        result.pi = pi
        result.dmr = sum(pi[i] for i in chain.miss_states)
        result.diagnostics.append(
            f"approximate: power iteration, {iters} iterations, L1 residual {resid:.3e}"
        )
        return result
    pi = stationary_distribution(chain, method)
    result.pi = pi
    result.dmr = sum((pi[i] for i in chain.miss_states), Fraction(0))
    if chain.mode == BOUNDS:
        result.diagnostics.append("supply-bound mode: value is an upper bound on the DMR")
    return result
