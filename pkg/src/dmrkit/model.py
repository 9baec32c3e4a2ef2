"""Task model: execution-time distributions, task parameters, validation.

All time and work quantities are exact rationals (``fractions.Fraction``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Union

SCHEMA = "dmr-kit/1"

Rat = Fraction
RatLike = Union[Fraction, int, str]


class ModelError(ValueError):
    """Raised when an input document or value cannot be turned into a model."""


class UnboundedDismissError(ModelError):
    """A dismiss offset of infinity was given; the chain would be infinite."""


def parse_rat(value: Any) -> Fraction:
    """Parse ``"a/b"``, ``"a"``, an int or a Fraction into a Fraction.

    Floats are refused: they would silently carry binary rounding into
    state identities.
    """
    if isinstance(value, bool):
        raise ModelError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if text.lower() in {"inf", "+inf", "infinity", "∞"}:
            raise UnboundedDismissError("infinite values are not rationals")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelError(f"not a rational: {value!r}") from exc
    raise ModelError(f"not a rational: {value!r} (use a string such as '3/2')")


def fmt_rat(x: Fraction) -> str:
    return str(x)


@dataclass(frozen=True)
class ExecDistribution:
    """Discrete execution-time distribution as ``(value, prob)`` pairs.

    Construction does not enforce the invariants, so that malformed inputs
    can still be reported on by :func:`validate_task`.
    """

    entries: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "entries",
            tuple((parse_rat(v), parse_rat(p)) for v, p in self.entries),
        )

    @classmethod
    def of(cls, pairs: Iterable[tuple[RatLike, RatLike]]) -> "ExecDistribution":
        return cls(tuple(pairs))

    @property
    def values(self) -> tuple[Fraction, ...]:
        return tuple(v for v, _ in self.entries)

    @property
    def probs(self) -> tuple[Fraction, ...]:
        return tuple(p for _, p in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def mean(self) -> Fraction:
        return sum((v * p for v, p in self.entries), Fraction(0))


@dataclass(frozen=True)
class TaskSpec:
    """Periodic task ``(C, D, delta, T)``.

    Job ``j`` (1-based) is released at ``(j-1)*period``, has its deadline at
    ``(j-1)*period + deadline`` and is dismissed at
    ``(j-1)*period + deadline + dismiss_offset``.
    """

    exec: ExecDistribution
    period: Fraction
    deadline: Fraction
    dismiss_offset: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if not isinstance(self.exec, ExecDistribution):
            object.__setattr__(self, "exec", ExecDistribution.of(self.exec))
        for name in ("period", "deadline", "dismiss_offset"):
            object.__setattr__(self, name, parse_rat(getattr(self, name)))

    @property
    def horizon(self) -> Fraction:
        """Relative dismiss point ``D + delta``."""
        return self.deadline + self.dismiss_offset

    def release(self, j: int) -> Fraction:
        return (j - 1) * self.period

    def abs_deadline(self, j: int) -> Fraction:
        return (j - 1) * self.period + self.deadline

    def abs_dismiss(self, j: int) -> Fraction:
        return (j - 1) * self.period + self.horizon

    def replace(self, **changes: Any) -> "TaskSpec":
        data = {
            "exec": self.exec,
            "period": self.period,
            "deadline": self.deadline,
            "dismiss_offset": self.dismiss_offset,
        }
        data.update(changes)
        return TaskSpec(**data)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "period": fmt_rat(self.period),
            "deadline": fmt_rat(self.deadline),
            "dismiss_offset": fmt_rat(self.dismiss_offset),
            "execution": [
                {"value": fmt_rat(v), "prob": fmt_rat(p)} for v, p in self.exec.entries
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "TaskSpec":
        schema = doc.get("schema", SCHEMA)
        if schema != SCHEMA:
            raise ModelError(f"unsupported schema {schema!r}, expected {SCHEMA!r}")
        try:
            execution = doc["execution"]
            entries = tuple((e["value"], e["prob"]) for e in execution)
            return cls(
                exec=ExecDistribution(entries),
                period=doc["period"],
                deadline=doc["deadline"],
                dismiss_offset=doc.get("dismiss_offset", "0"),
            )
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed task document: {exc}") from exc


def load_task(path: str | Path) -> TaskSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: invalid JSON: {exc}") from exc
    return TaskSpec.from_dict(doc)


def dump_task(task: TaskSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(task.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def add(self, message: str) -> None:
        self.violations.append(message)

    def extend(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)

    def to_dict(self) -> dict[str, Any]:
        return {"schema": SCHEMA, "valid": self.ok, "violations": list(self.violations)}


def validate_task(spec: TaskSpec) -> ValidationReport:
    """Report every broken invariant of ``spec``; an empty report means valid."""
    report = ValidationReport()
    if spec.period <= 0:
        report.add(f"period must be > 0, got {spec.period}")
    if spec.deadline <= 0:
        report.add(f"deadline must be > 0, got {spec.deadline}")
    if spec.dismiss_offset < 0:
        report.add(f"dismiss_offset must be >= 0, got {spec.dismiss_offset}")

    entries = spec.exec.entries
    if not entries:
        report.add("execution distribution is empty")
        return report
    values = [v for v, _ in entries]
    if any(b <= a for a, b in zip(values, values[1:])):
        report.add("values not strictly increasing")
    for v, p in entries:
        if v < 0:
            report.add(f"execution value {v} is negative")
        if p <= 0:
            report.add(f"probability of value {v} must be > 0, got {p}")
    total = sum((p for _, p in entries), Fraction(0))
    if total != 1:
        report.add(f"probabilities sum to {total} ≠ 1")
    return report
