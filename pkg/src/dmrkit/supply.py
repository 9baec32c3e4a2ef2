"""Per-period supply curves and the accumulated service they provide.

A curve ``beta_j`` gives the service available to job ``j`` in
``[(j-1)T, (j-1)T + t)`` for ``0 <= t <= T``.  Curves are piecewise linear,
stored as breakpoints and evaluated by exact interpolation.  A model holds
``Q`` curves (or ``Q`` upper/lower pairs) that repeat every ``Q`` jobs.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

from .model import SCHEMA, ModelError, RatLike, ValidationReport, fmt_rat, parse_rat

EXACT = "exact"
BOUNDS = "bounds"


class SupplyError(ValueError):
    """Domain or mode error when evaluating supply."""


@dataclass(frozen=True)
class SupplyCurve:
    points: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self) -> None:
        pts = tuple((parse_rat(t), parse_rat(v)) for t, v in self.points)
        if len(pts) < 2:
            raise ModelError("a supply curve needs at least two breakpoints")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_ts", tuple(t for t, _ in pts))

    @classmethod
    def of(cls, points: Iterable[tuple[RatLike, RatLike]]) -> "SupplyCurve":
        return cls(tuple(points))

    @property
    def length(self) -> Fraction:
        return self.points[-1][0]

    @property
    def total(self) -> Fraction:
        """Service over the whole period, ``beta(T)``."""
        return self.points[-1][1]

    def __call__(self, t: RatLike) -> Fraction:
        return eval_curve(self, t)

    def validate(self, period: Fraction | None = None) -> ValidationReport:
        report = ValidationReport()
        pts = self.points
        if pts[0] != (0, 0):
            report.add(f"first breakpoint must be (0, 0), got ({pts[0][0]}, {pts[0][1]})")
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if t1 <= t0:
                report.add(f"breakpoint times not strictly increasing at t={t1}")
                continue
            if v1 < v0:
                report.add(f"supply decreases on [{t0}, {t1}]")
            if v1 - v0 > t1 - t0:
                report.add(f"supply grows faster than 1 on [{t0}, {t1}]")
        if period is not None and self.length != period:
            report.add(f"curve ends at t={self.length}, expected the period {period}")
        return report

    def to_list(self) -> list[list[str]]:
        return [[fmt_rat(t), fmt_rat(v)] for t, v in self.points]


def eval_curve(curve: SupplyCurve, t: RatLike) -> Fraction:
    """Value of ``curve`` at ``t`` by exact linear interpolation."""
    t = parse_rat(t)
    pts = curve.points
    if t < pts[0][0] or t > pts[-1][0]:
        raise SupplyError(f"t={t} outside [{pts[0][0]}, {pts[-1][0]}]")
    i = bisect.bisect_right(curve._ts, t)  # type: ignore[attr-defined]
    if i >= len(pts):
        return pts[-1][1]
    t0, v0 = pts[i - 1]
    t1, v1 = pts[i]
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


@dataclass(frozen=True)
class SupplyModel:
    """``Q`` repeating supply curves, either exact or as bound pairs.

    Exact mode sets ``curves``; bounds mode sets ``upper`` and ``lower``.
    Job ``j`` uses entry ``(j - 1) % Q``.
    """

    curves: tuple[SupplyCurve, ...] | None = None
    upper: tuple[SupplyCurve, ...] | None = None
    lower: tuple[SupplyCurve, ...] | None = None

    def __post_init__(self) -> None:
        for name in ("curves", "upper", "lower"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(val))
        if self.curves is not None:
            if self.upper is not None or self.lower is not None:
                raise ModelError("give either exact curves or upper/lower bounds, not both")
            if not self.curves:
                raise ModelError("supply model needs at least one curve")
        else:
            if self.upper is None or self.lower is None:
                raise ModelError("bounds mode needs both upper and lower curves")
            if len(self.upper) != len(self.lower) or not self.upper:
                raise ModelError("upper and lower curve lists must be non-empty and equally long")

    @classmethod
    def exact(cls, curves: Sequence[SupplyCurve]) -> "SupplyModel":
        return cls(curves=tuple(curves))

    @classmethod
    def bounds(cls, upper: Sequence[SupplyCurve], lower: Sequence[SupplyCurve]) -> "SupplyModel":
        return cls(upper=tuple(upper), lower=tuple(lower))

    @property
    def mode(self) -> str:
        return EXACT if self.curves is not None else BOUNDS

    @property
    def q(self) -> int:
        return len(self.curves if self.curves is not None else self.upper)  # type: ignore[arg-type]

    @property
    def period(self) -> Fraction:
        return self._all_curves()[0].length

    def _all_curves(self) -> tuple[SupplyCurve, ...]:
        if self.curves is not None:
            return self.curves
        return self.upper + self.lower  # type: ignore[operator]

    def curve(self, j: int, which: str = EXACT) -> SupplyCurve:
        """Curve for job ``j`` (1-based); ``which`` is ``exact``, ``upper`` or ``lower``."""
        seq = {EXACT: self.curves, "upper": self.upper, "lower": self.lower}[which]
        if seq is None:
            raise SupplyError(f"{which!r} curves not available in {self.mode} mode")
        return seq[(j - 1) % len(seq)]

    def validate(self, period: Fraction | None = None) -> ValidationReport:
        report = ValidationReport()
        period = self.period if period is None else period
        for name, seq in (("curve", self.curves), ("upper", self.upper), ("lower", self.lower)):
            for i, c in enumerate(seq or ()):
                for msg in c.validate(period).violations:
                    report.add(f"{name}[{i}]: {msg}")
        if self.mode == BOUNDS and report.ok:
            for i, (u, lo) in enumerate(zip(self.upper, self.lower)):  # type: ignore[arg-type]
                t = dominated_at(lo, u)
                if t is not None:
                    report.add(f"pair[{i}]: lower exceeds upper at t={t}")
        return report

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"schema": SCHEMA, "mode": self.mode, "q": self.q}
        if self.mode == EXACT:
            doc["curves"] = [c.to_list() for c in self.curves]  # type: ignore[union-attr]
        else:
            doc["curves"] = [
                {"upper": u.to_list(), "lower": lo.to_list()}
                for u, lo in zip(self.upper, self.lower)  # type: ignore[arg-type]
            ]
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SupplyModel":
        schema = doc.get("schema", SCHEMA)
        if schema != SCHEMA:
            raise ModelError(f"unsupported schema {schema!r}, expected {SCHEMA!r}")
        if "generator" in doc:
            return from_generator(doc["generator"])
        mode = doc.get("mode", EXACT)
        try:
            raw = doc["curves"]
            if mode == EXACT:
                model = cls.exact([SupplyCurve.of(c) for c in raw])
            elif mode == BOUNDS:
                model = cls.bounds(
                    [SupplyCurve.of(c["upper"]) for c in raw],
                    [SupplyCurve.of(c["lower"]) for c in raw],
                )
            else:
                raise ModelError(f"unknown supply mode {mode!r}")
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed supply document: {exc}") from exc
        if "q" in doc and int(doc["q"]) != model.q:
            raise ModelError(f"q={doc['q']} but {model.q} curve entries given")
        return model


def dominated_at(low: SupplyCurve, high: SupplyCurve) -> Fraction | None:
    """First breakpoint time where ``low > high``, or None if ``low <= high``.

    Both curves are linear between the union of their breakpoints, so
    checking those points is sufficient.
    """
    ts = sorted(set(low._ts) | set(high._ts))  # type: ignore[attr-defined]
    for t in ts:
        if t > low.length or t > high.length:
            break
        if eval_curve(low, t) > eval_curve(high, t):
            return t
    return None


def load_supply(path: str | Path) -> SupplyModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: invalid JSON: {exc}") from exc
    return SupplyModel.from_dict(doc)


def dump_supply(model: SupplyModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# accumulated service


def _accumulate(model: SupplyModel, which: str, j: int, t: RatLike) -> Fraction:
    t = parse_rat(t)
    if t < 0:
        raise SupplyError(f"service horizon must be >= 0, got {t}")
    if j < 1:
        raise SupplyError(f"job index must be >= 1, got {j}")
    T = model.period
    full = math.floor(t / T)
    q = model.q
    totals = [model.curve(i + 1, which).total for i in range(q)]
    start = (j - 1) % q
    cycles, extra = divmod(full, q)
    acc = cycles * sum(totals, Fraction(0))
    acc += sum((totals[(start + i) % q] for i in range(extra)), Fraction(0))
    return acc + eval_curve(model.curve(j + full, which), t - full * T)


def service(model: SupplyModel, j: int, t: RatLike) -> Fraction:
    """Service granted in ``[(j-1)T, (j-1)T + t)`` under exact supply."""
    if model.mode != EXACT:
        raise SupplyError("service() needs an exact-mode supply model")
    return _accumulate(model, EXACT, j, t)


def service_u(model: SupplyModel, j: int, t: RatLike) -> Fraction:
    """Upper accumulated service from the release of job ``j``."""
    if model.mode != BOUNDS:
        raise SupplyError("service_u() needs a bounds-mode supply model")
    return _accumulate(model, "upper", j, t)


def service_l(model: SupplyModel, j: int, t: RatLike) -> Fraction:
    """Lower accumulated service from the release of job ``j``."""
    if model.mode != BOUNDS:
        raise SupplyError("service_l() needs a bounds-mode supply model")
    return _accumulate(model, "lower", j, t)


# ---------------------------------------------------------------------------
# generators


def _simplify(points: list[tuple[Fraction, Fraction]]) -> SupplyCurve:
    """Drop duplicate and collinear interior breakpoints."""
    out: list[tuple[Fraction, Fraction]] = []
    for p in points:
        if out and out[-1][0] == p[0]:
            continue
        if len(out) >= 2:
            (t0, v0), (t1, v1) = out[-2], out[-1]
            if (v1 - v0) * (p[0] - t1) == (p[1] - v1) * (t1 - t0):
                out[-1] = p
                continue
        out.append(p)
    return SupplyCurve(tuple(out))


def _rat_lcm(a: Fraction, b: Fraction) -> Fraction:
    den = a.denominator * b.denominator
    return Fraction(math.lcm(a.numerator * b.denominator, b.numerator * a.denominator), den)


def _window_curves(period: Fraction, cycle: Fraction, busy: Sequence[tuple[Fraction, Fraction]]) -> list[SupplyCurve]:
    """Slice a ``cycle``-periodic availability pattern into per-job curves.

    ``busy`` lists the intervals inside ``[0, cycle)`` during which the
    resource is available to the task (rate 1); elsewhere the rate is 0.
    """
    q = int(_rat_lcm(period, cycle) / period)
    curves = []
    for k in range(q):
        start = k * period
        end = start + period
        # availability intervals intersecting the window, shifted to start
        first = math.floor(start / cycle)
        edges = {Fraction(0), period}
        intervals = []
        c = first
        while c * cycle < end:
            for a, b in busy:
                lo, hi = max(c * cycle + a, start), min(c * cycle + b, end)
                if lo < hi:
                    intervals.append((lo - start, hi - start))
                    edges.update((lo - start, hi - start))
            c += 1
        pts = []
        for t in sorted(edges):
            pts.append((t, sum((min(b, t) - a for a, b in intervals if a < t), Fraction(0))))
        curves.append(_simplify(pts))
    return curves


def tdma(period: RatLike, cycle: RatLike, slot_start: RatLike, slot_length: RatLike) -> SupplyModel:
    """Exact supply of a TDMA slot ``[slot_start, slot_start + slot_length)`` per cycle."""
    period, cycle = parse_rat(period), parse_rat(cycle)
    a, length = parse_rat(slot_start), parse_rat(slot_length)
    if not (0 <= a and length >= 0 and a + length <= cycle):
        raise ModelError("TDMA slot must lie inside the cycle")
    return SupplyModel.exact(_window_curves(period, cycle, [(a, a + length)]))


def periodic_interference(period: RatLike, hp_period: RatLike, hp_exec: RatLike) -> SupplyModel:
    """Exact supply left by one higher-priority periodic task released at 0."""
    period, hp_period, hp_exec = parse_rat(period), parse_rat(hp_period), parse_rat(hp_exec)
    if not 0 <= hp_exec <= hp_period:
        raise ModelError("interfering task must have 0 <= exec <= period")
    return SupplyModel.exact(_window_curves(period, hp_period, [(hp_exec, hp_period)]))


def cbs_bounds(period: RatLike, budget: RatLike, server_period: RatLike) -> SupplyModel:
    """Upper/lower supply of a hard CBS with ``budget`` per ``server_period``.

    Per job window: ``u(t) = Qs*floor(t/Ps) + min(t mod Ps, Qs)`` and
    ``l(t) = Qs*floor(t/Ps) + max(t mod Ps - (Ps - Qs), 0)``.
    """
    T, Qs, Ps = parse_rat(period), parse_rat(budget), parse_rat(server_period)
    if not 0 <= Qs <= Ps or Ps <= 0:
        raise ModelError("CBS needs 0 <= budget <= server_period")

    def build(offset: Fraction) -> SupplyCurve:
        edges = {Fraction(0), T}
        k = 0
        while k * Ps < T:
            for e in (k * Ps, k * Ps + offset, k * Ps + offset + Qs):
                if e <= T:
                    edges.add(e)
            k += 1
        pts = []
        for t in sorted(edges):
            n, r = divmod(t, Ps)
            pts.append((t, Qs * n + min(max(r - offset, Fraction(0)), Qs)))
        return _simplify(pts)

    return SupplyModel.bounds([build(Fraction(0))], [build(Ps - Qs)])


def from_generator(spec: dict[str, Any]) -> SupplyModel:
    kind = spec.get("kind")
    args = {k: v for k, v in spec.items() if k != "kind"}
    try:
        if kind == "tdma":
            return tdma(**args)
        if kind == "cbs":
            return cbs_bounds(**args)
        if kind == "interference":
            return periodic_interference(**args)
    except TypeError as exc:
        raise ModelError(f"bad arguments for generator {kind!r}: {exc}") from exc
    raise ModelError(f"unknown supply generator {kind!r}")
