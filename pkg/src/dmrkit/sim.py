"""Validation oracles: a direct GPC trace, DMR_N enumeration, Monte Carlo.

The trace is written against the raw server semantics (FCFS service along
the supply curve, idle supply is lost, unfinished work is discarded at each
job's dismiss point).  It shares nothing with the chain's backlog formulas,
so comparing the two is a real check.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, NamedTuple, Sequence

import numpy as np

from .chain import MarkovChain, build_chain, check_inputs
from .model import SCHEMA, TaskSpec, fmt_rat, parse_rat
from .supply import BOUNDS, EXACT, SupplyError, SupplyModel, dominated_at

DEFAULT_BUDGET = 10**6
GENERATOR = "numpy PCG64 (SeedSequence)"


class EnumerationBudgetExceeded(RuntimeError):
    pass


class SandwichViolation(ValueError):
    pass


# ---------------------------------------------------------------------------
# one period of the greedy processing component


class PeriodOutcome(NamedTuple):
    finished: tuple[tuple[int, bool], ...]  # (age, missed) of jobs completed or dismissed
    served: tuple[Fraction, ...]  # work served per input queue entry
    carry: tuple[tuple[int, Fraction], ...]  # queue at the next period start, ages + 1


class GpcStepper:
    """Simulates single periods of FCFS service; results are memoized.

    A queue is a tuple of ``(age, remaining)`` pairs, oldest first, where
    ``age`` counts periods since release (the newly released job has age 0).
    """

    def __init__(self, task: TaskSpec, supply: SupplyModel):
        if supply.mode != EXACT:
            raise SupplyError("simulation needs concrete (exact-mode) supply")
        self.T = task.period
        self.D = task.deadline
        self.H = task.horizon
        self.q = supply.q
        self.curves = [supply.curve(j + 1).points for j in range(self.q)]
        self._memo: dict[tuple[int, tuple], PeriodOutcome] = {}

    def step(self, phase: int, queue: tuple[tuple[int, Fraction], ...]) -> PeriodOutcome:
        key = (phase, queue)
        out = self._memo.get(key)
        if out is None:
            out = self._memo[key] = self._run(self.curves[phase], queue)
        return out

    def _run(self, points, queue) -> PeriodOutcome:
        T, D, H = self.T, self.D, self.H
        jobs = [[age, rem, Fraction(0)] for age, rem in queue]  # age, remaining, served
        order = list(range(len(jobs)))
        finished: list[tuple[int, bool]] = []

        def settle(t: Fraction) -> None:
            # completed heads leave the queue; overdue work is dismissed.
            # Repeat: a dismissal can expose a zero-work job that is done at once.
            changed = True
            while changed:
                changed = False
                while order:
                    age, rem, _ = jobs[order[0]]
                    if rem != 0:
                        break
                    finished.append((age, t > -age * T + D))
                    order.pop(0)
                for k in list(order):
                    age = jobs[k][0]
                    if -age * T + H <= t:
                        finished.append((age, True))
                        order.remove(k)
                        changed = True

        t = Fraction(0)
        settle(t)
        for (t0, v0), (t1, v1) in zip(points, points[1:]):
            rate = (v1 - v0) / (t1 - t0)
            while t < t1:
                if not order:
                    t = t1
                    break
                head = jobs[order[0]]
                stop = min(t1, -head[0] * T + H)
                if rate > 0:
                    stop = min(stop, t + head[1] / rate)
                amount = min(rate * (stop - t), head[1])
                head[1] -= amount
                head[2] += amount
                t = stop
                settle(t)
        settle(T)
        carry = tuple((jobs[k][0] + 1, jobs[k][1]) for k in order)
        return PeriodOutcome(tuple(finished), tuple(j[2] for j in jobs), carry)


class JobOutcome(NamedTuple):
    missed: bool
    backlog: Fraction  # work of this and earlier jobs still served after the period end


def trace_jobs(
    task: TaskSpec, supply: SupplyModel, realization: Sequence, stepper: GpcStepper | None = None
) -> list[JobOutcome]:
    """Run jobs with the given execution times through the server, period by period."""
    stepper = stepper or GpcStepper(task, supply)
    n = len(realization)
    work = [parse_rat(e) for e in realization]
    missed: list[bool | None] = [None] * n
    after = [Fraction(0)] * (n + 1)  # after[k]: work of jobs < k served in periods >= k
    served_log: list[tuple[int, int, Fraction]] = []  # (period, job, amount)
    queue: tuple[tuple[int, Fraction], ...] = ()
    k = 0
    while k < n or queue:
        if k < n:
            queue = queue + ((0, work[k]),)
        out = stepper.step(k % stepper.q, queue)
        for (age, _), amount in zip(queue, out.served):
            if amount:
                served_log.append((k, k - age, amount))
        for age, miss in out.finished:
            missed[k - age] = miss
        queue = out.carry
        k += 1
    for period, job, amount in served_log:
        for j in range(job + 1, period + 1):
            if j <= n:
                after[j] += amount
    return [JobOutcome(bool(missed[i]), after[i + 1]) for i in range(n)]


# ---------------------------------------------------------------------------
# DMR_N distribution


@dataclass(frozen=True)
class DmrNDistribution:
    n: int
    points: tuple[tuple[Fraction, Fraction], ...]

    def as_dict(self) -> dict[Fraction, Fraction]:
        return dict(self.points)

    def mean(self) -> Fraction:
        return sum((v * p for v, p in self.points), Fraction(0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "prob", "value_float", "prob_float"])
        for v, p in self.points:
            w.writerow([fmt_rat(v), fmt_rat(p), f"{float(v):.12g}", f"{float(p):.12g}"])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "n": self.n,
            "points": [{"value": fmt_rat(v), "prob": fmt_rat(p)} for v, p in self.points],
        }


def _distribution(n: int, counts: dict[int, Fraction]) -> DmrNDistribution:
    pts = tuple(sorted((Fraction(m, n), p) for m, p in counts.items() if p))
    return DmrNDistribution(n, pts)


def _enumerate_direct(task: TaskSpec, supply: SupplyModel, n: int) -> DmrNDistribution:
    stepper = GpcStepper(task, supply)
    counts: dict[int, Fraction] = {}
    drained: dict[tuple[int, tuple], int] = {}

    def drain(phase: int, queue: tuple) -> int:
        key = (phase, queue)
        if key not in drained:
            misses = 0
            k = phase
            while queue:
                out = stepper.step(k % stepper.q, queue)
                misses += sum(m for _, m in out.finished)
                queue = out.carry
                k += 1
            drained[key] = misses
        return drained[key]

    def walk(k: int, queue: tuple, misses: int, prob: Fraction) -> None:
        if k == n:
            total = misses + drain(k % stepper.q, queue)
            counts[total] = counts.get(total, Fraction(0)) + prob
            return
        for e, p in task.exec.entries:
            out = stepper.step(k % stepper.q, queue + ((0, e),))
            walk(k + 1, out.carry, misses + sum(m for _, m in out.finished), prob * p)

    walk(0, (), 0, Fraction(1))
    return _distribution(n, counts)


def dmr_n_from_chain(chain: MarkovChain, n: int) -> DmrNDistribution:
    """Exact DMR_n distribution by propagating ``(state, misses)`` mass along the chain."""
    dist: dict[tuple[int, int], Fraction] = {}
    for i, p in enumerate(chain.initial):
        if p:
            dist[(i, int(chain.states[i].missed))] = p
    for _ in range(n - 1):
        nxt: dict[tuple[int, int], Fraction] = {}
        for (s, m), p in dist.items():
            for r, w in chain.transitions[s]:
                key = (r, m + chain.states[r].missed)
                nxt[key] = nxt.get(key, Fraction(0)) + p * w
        dist = nxt
    counts: dict[int, Fraction] = {}
    for (_, m), p in dist.items():
        counts[m] = counts.get(m, Fraction(0)) + p
    return _distribution(n, counts)


def enumerate_dmr_n(
    task: TaskSpec,
    supply: SupplyModel,
    n: int,
    mode: str = "auto",
    budget: int = DEFAULT_BUDGET,
    chain: MarkovChain | None = None,
    conservative_backlog: bool = False,
) -> DmrNDistribution:
    """Exact distribution of the miss rate of the first ``n`` jobs.

    ``mode``: ``direct`` enumerates all ``h**n`` realizations through the
    server trace (exact supply only); ``dp`` propagates mass along the
    Markov chain; ``auto`` uses ``direct`` within ``budget`` and ``dp``
    otherwise (and always for supply bounds).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    check_inputs(task, supply)
    h = len(task.exec)
    within = h**n <= budget
    if mode == "auto":
        mode = "direct" if within and supply.mode == EXACT else "dp"
    if mode == "direct":
        if not within:
            raise EnumerationBudgetExceeded(f"{h}**{n} realizations exceed the budget {budget}")
        return _enumerate_direct(task, supply, n)
    if mode != "dp":
        raise ValueError(f"unknown mode {mode!r}")
    chain = chain or build_chain(task, supply, conservative_backlog=conservative_backlog)
    return dmr_n_from_chain(chain, n)


def enumerate_paths(task: TaskSpec, n: int) -> list[tuple[tuple[Fraction, ...], Fraction]]:
    """All ``h**n`` realizations with their probabilities."""
    out = []
    for combo in product(task.exec.entries, repeat=n):
        prob = math.prod((p for _, p in combo), start=Fraction(1))
        out.append((tuple(e for e, _ in combo), prob))
    return out


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class SimReport:
    n_jobs: int
    misses: int
    empirical_dmr: float
    seed: int
    per_phase_misses: list[int] = field(default_factory=list)
    generator: str = GENERATOR

    def stderr(self) -> float:
        p = self.empirical_dmr
        return math.sqrt(max(p * (1 - p), 0.0) / self.n_jobs)

    def to_dict(self) -> dict[str, Any]:
        return {"schema": SCHEMA, **asdict(self)}


class _Sampler:
    """Exact sampling of execution-time indices from integer thresholds."""

    def __init__(self, task: TaskSpec):
        probs = task.exec.probs
        den = math.lcm(*(p.denominator for p in probs))
        if den >= 2**63:
            raise ValueError("probability denominators too large for exact sampling")
        self.den = den
        self.cum = np.cumsum([int(p * den) for p in probs])

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.integers(0, self.den, size=size, dtype=np.int64)
        return np.searchsorted(self.cum, u, side="right")


def monte_carlo(
    task: TaskSpec,
    supply: SupplyModel,
    n_jobs: int,
    seed: int,
    chunk: int = 1 << 16,
) -> SimReport:
    """Simulate ``n_jobs`` jobs with random execution times; reproducible per seed."""
    if n_jobs < 1:
        raise ValueError("n_jobs must be >= 1")
    check_inputs(task, supply)
    stepper = GpcStepper(task, supply)
    sampler = _Sampler(task)
    rng = np.random.default_rng(seed)
    q = stepper.q
    values = task.exec.values

    # queues and transitions interned to integers for the hot loop
    queue_ids: dict[tuple, int] = {(): 0}
    queues: list[tuple] = [()]
    table: dict[tuple[int, int, int], tuple[int, tuple[int, ...]]] = {}

    def transition(qid: int, phase: int, eidx: int) -> tuple[int, tuple[int, ...]]:
        queue = queues[qid] + ((0, values[eidx]),) if eidx >= 0 else queues[qid]
        out = stepper.step(phase, queue)
        nq = queue_ids.get(out.carry)
        if nq is None:
            nq = queue_ids[out.carry] = len(queues)
            queues.append(out.carry)
        # phase offsets (job age) of the misses finalized in this period
        return nq, tuple(age for age, m in out.finished if m)

    per_phase = [0] * q
    qid, k = 0, 0
    while k < n_jobs:
        idx = sampler.draw(rng, min(chunk, n_jobs - k))
        for eidx in idx.tolist():
            phase = k % q
            key = (qid, phase, eidx)
            hit = table.get(key)
            if hit is None:
                hit = table[key] = transition(qid, phase, eidx)
            qid, missed_ages = hit
            for age in missed_ages:
                per_phase[(k - age) % q] += 1
            k += 1
    while qid:
        phase = k % q
        qid, missed_ages = transition(qid, phase, -1)
        for age in missed_ages:
            per_phase[(k - age) % q] += 1
        k += 1
    misses = sum(per_phase)
    return SimReport(n_jobs, misses, misses / n_jobs, int(seed), per_phase)


def derive_seeds(seed: int, count: int) -> list[int]:
    """Independent 64-bit child seeds spawned from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _mc_job(args):
    return monte_carlo(*args)


def monte_carlo_replications(
    task: TaskSpec,
    supply: SupplyModel,
    n_jobs: int,
    seed: int,
    replications: int,
    workers: int = 1,
) -> list[SimReport]:
    """Independent replications with derived seeds, optionally in parallel."""
    seeds = derive_seeds(seed, replications)
    jobs = [(task, supply, n_jobs, s) for s in seeds]
    if workers <= 1:
        return [_mc_job(a) for a in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_mc_job, jobs))


# ---------------------------------------------------------------------------
# sandwich check


@dataclass
class SandwichResult:
    bound_dmr: Fraction
    empirical_dmr: float
    sigma: float
    ok: bool
    report: SimReport


def check_sandwich(bounds: SupplyModel, concrete: SupplyModel) -> None:
    """Raise :class:`SandwichViolation` unless ``lower <= concrete <= upper`` everywhere."""
    if bounds.mode != BOUNDS or concrete.mode != EXACT:
        raise SandwichViolation("need a bounds-mode model and an exact-mode model")
    span = math.lcm(bounds.q, concrete.q)
    for j in range(1, span + 1):
        c = concrete.curve(j)
        lo, up = bounds.curve(j, "lower"), bounds.curve(j, "upper")
        t = dominated_at(lo, c)
        if t is not None:
            raise SandwichViolation(f"job {j}: concrete supply below the lower bound at t={t}")
        t = dominated_at(c, up)
        if t is not None:
            raise SandwichViolation(f"job {j}: concrete supply above the upper bound at t={t}")


def sandwich_check(
    task: TaskSpec,
    bounds_supply: SupplyModel,
    concrete_supply: SupplyModel,
    n_jobs: int,
    seed: int,
    conservative_backlog: bool = False,
    slack_sigmas: float = 4.0,
) -> SandwichResult:
    """Compare the bound-mode DMR with a simulation of one concrete supply inside the bounds."""
    from .analysis import compute_dmr

    check_sandwich(bounds_supply, concrete_supply)
    chain = build_chain(task, bounds_supply, conservative_backlog=conservative_backlog)
    bound = compute_dmr(chain).dmr
    if bound is None:
        raise ValueError("bound-mode chain is not irreducible; no bound available")
    report = monte_carlo(task, concrete_supply, n_jobs, seed)
    sigma = report.stderr()
    ok = report.empirical_dmr <= float(bound) + slack_sigmas * sigma
    return SandwichResult(bound, report.empirical_dmr, sigma, ok, report)
