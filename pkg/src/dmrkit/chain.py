"""Construction of the finite Markov chain of job states.

A state ``(phase, missed, rem)`` describes one job: its position in the
``Q``-periodic supply pattern, whether it missed its deadline, and the
backlog that is still served after the end of its period (after discarding
whatever would be dismissed).  Exact and bounds mode share the builder; they
only differ in the service quantities fed to it (:class:`ServiceOracle`).
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator

from .model import SCHEMA, ModelError, TaskSpec, fmt_rat, parse_rat, validate_task
from .supply import BOUNDS, EXACT, SupplyModel, service, service_l, service_u

DEFAULT_MAX_STATES = 1_000_000
HIT, MISS = "✓", "↯"  # check mark, lightning


class StateBudgetExceeded(RuntimeError):
    pass


def default_max_states() -> int:
    env = os.environ.get("DMRKIT_MAX_STATES")
    return int(env) if env else DEFAULT_MAX_STATES


@dataclass(frozen=True, order=True)
class ChainState:
    phase: int
    missed: bool
    rem: Fraction

    def label(self) -> str:
        return f"({self.phase}, {MISS if self.missed else HIT}, {self.rem})"


@dataclass(frozen=True)
class ServiceOracle:
    """Per-phase service quantities driving state expansion.

    For the job at phase ``p`` (job index ``p + 1`` modulo Q):

    * ``deadline[p]``  -- service before the deadline, used for hit/miss
    * ``dismiss[p]``   -- service before the dismiss point, caps kept work
    * ``hit_sub[p]``   -- period supply subtracted from the backlog on a hit
    * ``miss_sub[p]``  -- period supply subtracted from the backlog on a miss
    """

    deadline: tuple[Fraction, ...]
    dismiss: tuple[Fraction, ...]
    hit_sub: tuple[Fraction, ...]
    miss_sub: tuple[Fraction, ...]

    @property
    def q(self) -> int:
        return len(self.deadline)

    @property
    def backlog_cap(self) -> Fraction:
        return max(self.dismiss)

    @classmethod
    def for_model(
        cls, task: TaskSpec, supply: SupplyModel, conservative_backlog: bool = False
    ) -> "ServiceOracle":
        D, H = task.deadline, task.horizon
        jobs = range(1, supply.q + 1)
        if supply.mode == EXACT:
            totals = tuple(supply.curve(j).total for j in jobs)
            return cls(
                deadline=tuple(service(supply, j, D) for j in jobs),
                dismiss=tuple(service(supply, j, H) for j in jobs),
                hit_sub=totals,
                miss_sub=totals,
            )
        upper = tuple(supply.curve(j, "upper").total for j in jobs)
        lower = tuple(supply.curve(j, "lower").total for j in jobs)
        return cls(
            deadline=tuple(service_l(supply, j, D) for j in jobs),
            dismiss=tuple(service_u(supply, j, H) for j in jobs),
            hit_sub=lower if conservative_backlog else upper,
            miss_sub=lower,
        )

    def step(self, phase: int, rem: Fraction, work: Fraction) -> tuple[bool, Fraction]:
        """Outcome ``(missed, new_rem)`` of a job at ``phase`` with ``work`` on top of ``rem``."""
        demand = rem + work
        if demand <= self.deadline[phase]:
            return False, max(demand - self.hit_sub[phase], Fraction(0))
        kept = min(demand, self.dismiss[phase])
        return True, max(kept - self.miss_sub[phase], Fraction(0))


def check_inputs(task: TaskSpec, supply: SupplyModel) -> None:
    report = validate_task(task)
    report.extend(supply.validate(task.period))
    if not report.ok:
        raise ModelError("; ".join(report.violations))


def _successors(
    oracle: ServiceOracle, task: TaskSpec, phase: int, rem: Fraction
) -> list[tuple[ChainState, Fraction]]:
    nxt = (phase + 1) % oracle.q
    merged: dict[ChainState, Fraction] = {}
    for e, p in task.exec.entries:
        missed, new_rem = oracle.step(nxt, rem, e)
        s = ChainState(nxt, missed, new_rem)
        merged[s] = merged.get(s, Fraction(0)) + p
    return list(merged.items())


def init_states(
    task: TaskSpec, supply: SupplyModel, conservative_backlog: bool = False
) -> list[tuple[ChainState, Fraction]]:
    """Phase-0 states of the first job with their initial probabilities."""
    oracle = ServiceOracle.for_model(task, supply, conservative_backlog)
    # the first job sees an empty queue, exactly like a successor of a zero-backlog state
    return _successors(oracle, task, oracle.q - 1, Fraction(0))


def expand_state(
    s: ChainState, task: TaskSpec, supply: SupplyModel, conservative_backlog: bool = False
) -> list[tuple[ChainState, Fraction]]:
    """Successor states of ``s`` (next job in the pattern) with transition probabilities."""
    oracle = ServiceOracle.for_model(task, supply, conservative_backlog)
    return _successors(oracle, task, s.phase, s.rem)


@dataclass(frozen=True)
class MarkovChain:
    """Finite chain with column-stochastic semantics.

    ``transitions[s]`` lists ``(r, P[r][s])`` pairs, i.e. the column of
    source state ``s``.
    """

    states: tuple[ChainState, ...]
    transitions: tuple[tuple[tuple[int, Fraction], ...], ...]
    initial: tuple[Fraction, ...]
    mode: str = EXACT
    q: int = 1
    info: dict[str, Any] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def miss_states(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.states) if s.missed)

    def index(self, state: ChainState) -> int:
        return self._index()[state]

    def _index(self) -> dict[ChainState, int]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {s: i for i, s in enumerate(self.states)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def find(self, phase: int, missed: bool, rem: Any) -> int:
        return self.index(ChainState(phase, missed, parse_rat(rem)))

    def prob(self, src: int, dst: int) -> Fraction:
        for r, p in self.transitions[src]:
            if r == dst:
                return p
        return Fraction(0)

    def edges(self) -> Iterator[tuple[int, int, Fraction]]:
        for s, col in enumerate(self.transitions):
            for r, p in col:
                yield s, r, p

    def matrix(self) -> list[list[Fraction]]:
        """Dense ``P`` with ``P[r][s]`` = probability of moving from ``s`` to ``r``."""
        n = len(self.states)
        P = [[Fraction(0)] * n for _ in range(n)]
        for s, r, p in self.edges():
            P[r][s] += p
        return P

    def reorder(self, order: list[int]) -> "MarkovChain":
        """Chain with state ``order[k]`` moved to position ``k``."""
        pos = {old: new for new, old in enumerate(order)}
        return MarkovChain(
            states=tuple(self.states[i] for i in order),
            transitions=tuple(
                tuple(sorted((pos[r], p) for r, p in self.transitions[i])) for i in order
            ),
            initial=tuple(self.initial[i] for i in order),
            mode=self.mode,
            q=self.q,
            info=dict(self.info),
        )

    # -- export ------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "mode": self.mode,
            "q": self.q,
            "states": [
                {"phase": s.phase, "missed": s.missed, "rem": fmt_rat(s.rem)} for s in self.states
            ],
            "lambda": [fmt_rat(x) for x in self.initial],
            "transitions": [
                {"from": s, "to": r, "prob": fmt_rat(p)} for s, r, p in self.edges()
            ],
            "miss_states": list(self.miss_states),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "MarkovChain":
        if doc.get("schema", SCHEMA) != SCHEMA:
            raise ModelError(f"unsupported schema {doc.get('schema')!r}")
        states = tuple(
            ChainState(int(s["phase"]), bool(s["missed"]), parse_rat(s["rem"]))
            for s in doc["states"]
        )
        cols: list[list[tuple[int, Fraction]]] = [[] for _ in states]
        for t in doc["transitions"]:
            cols[int(t["from"])].append((int(t["to"]), parse_rat(t["prob"])))
        return cls(
            states=states,
            transitions=tuple(tuple(c) for c in cols),
            initial=tuple(parse_rat(x) for x in doc["lambda"]),
            mode=doc.get("mode", EXACT),
            q=int(doc.get("q", 1)),
        )

    def to_dot(self) -> str:
        lines = ["digraph chain {", "  rankdir=LR;"]
        for i, s in enumerate(self.states):
            shape = "doubleoctagon" if s.missed else "ellipse"
            lines.append(f'  s{i} [label="{s.label()}", shape={shape}];')
        for s, r, p in self.edges():
            lines.append(f'  s{s} -> s{r} [label="{p}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_chain(
    task: TaskSpec,
    supply: SupplyModel,
    max_states: int | None = None,
    conservative_backlog: bool = False,
    visit: str = "round-robin",
) -> MarkovChain:
    """Build the chain by expanding states until every state has successors.

    ``visit`` picks the worklist discipline: ``round-robin`` sweeps the
    phases starting at ``Q-1``; ``fifo`` and ``lifo`` use a single global
    queue or stack.  All produce the same chain once states are put in
    canonical ``(phase, missed, rem)`` order.
    """
    check_inputs(task, supply)
    if max_states is None:
        max_states = default_max_states()
    if max_states <= 0:
        raise ValueError("max_states must be positive")

    oracle = ServiceOracle.for_model(task, supply, conservative_backlog)
    q = oracle.q
    cap = oracle.backlog_cap
    ids: dict[ChainState, int] = {}
    states: list[ChainState] = []
    columns: list[list[tuple[int, Fraction]] | None] = []

    def intern(s: ChainState) -> int:
        i = ids.get(s)
        if i is None:
            if s.rem > cap or s.rem < 0:
                raise AssertionError(f"backlog {s.rem} escapes [0, {cap}]")
            if len(states) >= max_states:
                raise StateBudgetExceeded(
                    f"chain exceeds {max_states} states (raise max_states or DMRKIT_MAX_STATES)"
                )
            i = ids[s] = len(states)
            states.append(s)
            columns.append(None)
            pending(i)
        return i

    def expand(i: int) -> None:
        s = states[i]
        columns[i] = [(intern(r), p) for r, p in _successors(oracle, task, s.phase, s.rem)]

    if visit == "round-robin":
        buckets: list[deque[int]] = [deque() for _ in range(q)]

        def pending(i: int) -> None:
            buckets[states[i].phase].append(i)

        initial = [(intern(s), p) for s, p in _successors(oracle, task, q - 1, Fraction(0))]
        phase, idle = q - 1, 0
        while idle < q:
            bucket = buckets[phase]
            idle = 0 if bucket else idle + 1
            while bucket:
                expand(bucket.popleft())
            phase = (phase + 1) % q
    elif visit in ("fifo", "lifo"):
        work: deque[int] = deque()

        def pending(i: int) -> None:
            work.append(i)

        initial = [(intern(s), p) for s, p in _successors(oracle, task, q - 1, Fraction(0))]
        while work:
            expand(work.popleft() if visit == "fifo" else work.pop())
    else:
        raise ValueError(f"unknown visit order {visit!r}")

    lam = [Fraction(0)] * len(states)
    for i, p in initial:
        lam[i] += p
    raw = MarkovChain(
        states=tuple(states),
        transitions=tuple(tuple(c) for c in columns),  # type: ignore[arg-type]
        initial=tuple(lam),
        mode=supply.mode,
        q=q,
    )
    order = sorted(range(len(states)), key=states.__getitem__)
    chain = raw.reorder(order)
    chain.info.update(
        {
            "conservative_backlog": conservative_backlog and supply.mode == BOUNDS,
            "backlog_cap": cap,
        }
    )
    return chain


def realization_path(
    task: TaskSpec,
    supply: SupplyModel,
    realization: list[Fraction] | tuple[Fraction, ...],
    conservative_backlog: bool = False,
) -> list[ChainState]:
    """Chain states visited when the jobs take the given execution times."""
    oracle = ServiceOracle.for_model(task, supply, conservative_backlog)
    path = []
    phase, rem = oracle.q - 1, Fraction(0)
    for e in realization:
        phase = (phase + 1) % oracle.q
        missed, rem = oracle.step(phase, rem, parse_rat(e))
        path.append(ChainState(phase, missed, rem))
    return path
