"""Parameter sweeps over the deadline, the dismiss offset or a two-point probability."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from .analysis import compute_dmr
from .chain import build_chain, default_max_states
from .model import SCHEMA, ExecDistribution, ModelError, TaskSpec, fmt_rat, parse_rat
from .supply import SupplyModel

AXES = ("deadline", "dismiss_offset", "p")
COLUMNS = ["axis_value", "dmr_rational", "dmr_float", "n_states", "build_ms", "solve_ms", "status"]


@dataclass(frozen=True)
class SweepSpec:
    task: TaskSpec
    supply: SupplyModel
    axis: str
    values: tuple[Fraction, ...]
    max_states: int | None = None
    conservative_backlog: bool = False

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise ModelError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ModelError("sweep needs at least one value")
        if self.axis == "p" and len(self.task.exec) != 2:
            raise ModelError("the p axis needs a two-point execution distribution")

    def scenario(self, value: Fraction) -> TaskSpec:
        if self.axis == "p":
            (e1, _), (e2, _) = self.task.exec.entries
            return self.task.replace(exec=ExecDistribution.of([(e1, value), (e2, 1 - value)]))
        return self.task.replace(**{self.axis: value})

    @classmethod
    def from_dict(cls, doc: dict[str, Any], base: Path | None = None) -> "SweepSpec":
        from .model import load_task
        from .supply import load_supply

        if doc.get("schema", SCHEMA) != SCHEMA:
            raise ModelError(f"unsupported schema {doc.get('schema')!r}")
        base = base or Path(".")

        def resolve(key, loader, parser):
            ref = doc.get(key)
            if isinstance(ref, dict):
                return parser(ref)
            if not isinstance(ref, str):
                raise ModelError(f"sweep document needs {key!r} (path or inline object)")
            return loader(base / ref)

        try:
            return cls(
                task=resolve("task", load_task, TaskSpec.from_dict),
                supply=resolve("supply", load_supply, SupplyModel.from_dict),
                axis=doc["axis"],
                values=tuple(parse_rat(v) for v in doc["values"]),
                max_states=doc.get("max_states"),
                conservative_backlog=bool(doc.get("conservative_backlog", False)),
            )
        except KeyError as exc:
            raise ModelError(f"sweep document misses {exc}") from exc


def load_sweep(path: str | Path) -> SweepSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON: {exc}") from exc
    return SweepSpec.from_dict(doc, path.parent)


def run_row(spec: SweepSpec, value: Fraction) -> dict[str, Any]:
    row: dict[str, Any] = {c: "" for c in COLUMNS}
    row["axis_value"] = fmt_rat(value)
    try:
        task = spec.scenario(value)
        t0 = time.perf_counter()
        chain = build_chain(
            task,
            spec.supply,
            max_states=spec.max_states or default_max_states(),
            conservative_backlog=spec.conservative_backlog,
        )
        t1 = time.perf_counter()
        result = compute_dmr(chain)
        t2 = time.perf_counter()
    except Exception as exc:  # per-row failure is data, not fatal
        row["status"] = f"error: {exc}"
        return row
    row["n_states"] = len(chain)
    row["build_ms"] = round((t1 - t0) * 1000, 3)
    row["solve_ms"] = round((t2 - t1) * 1000, 3)
    if result.dmr is None:
        row["status"] = "not irreducible"
    else:
        row["dmr_rational"] = fmt_rat(result.dmr) if result.exact else ""
        row["dmr_float"] = f"{float(result.dmr):.12g}"
        row["status"] = "ok" if result.exact else "ok (approximate)"
    return row


def _row_job(args):
    return run_row(*args)


def run_sweep(spec: SweepSpec, workers: int = 1, timing: bool = False) -> list[dict[str, Any]]:
    """One row per axis value, in input order."""
    jobs = [(spec, v) for v in spec.values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row_job, jobs))
    else:
        rows = [_row_job(j) for j in jobs]
    if not timing:
        for row in rows:
            row["build_ms"] = row["solve_ms"] = ""
    return rows


def rows_to_csv(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))
