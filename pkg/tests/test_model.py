import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmrkit.model import (
    ExecDistribution,
    ModelError,
    TaskSpec,
    UnboundedDismissError,
    dump_task,
    fmt_rat,
    load_task,
    parse_rat,
    validate_task,
)

from .conftest import tasks


@pytest.mark.parametrize(
    "text, expected",
    [("3/2", Fraction(3, 2)), ("4", Fraction(4)), (" 7/3 ", Fraction(7, 3)), (5, Fraction(5)), ("0", Fraction(0))],
)
def test_parse_rat(text, expected):
    assert parse_rat(text) == expected


@pytest.mark.parametrize("bad", [0.5, True, "x", "1/0", None, [1]])
def test_parse_rat_rejects(bad):
    with pytest.raises(ModelError):
        parse_rat(bad)


@pytest.mark.parametrize("inf", ["inf", "∞", "Infinity"])
def test_infinite_dismiss_rejected(inf):
    with pytest.raises(UnboundedDismissError):
        TaskSpec(exec=[(1, 1)], period=4, deadline=4, dismiss_offset=inf)


@given(st.fractions(min_value=-1000, max_value=1000, max_denominator=10**6))
def test_rat_round_trip(x):
    assert parse_rat(fmt_rat(x)) == x


def test_example_task_is_valid(ex_task):
    assert validate_task(ex_task).ok
    assert ex_task.horizon == 5
    assert ex_task.exec.mean() == Fraction(5, 2)
    assert (ex_task.release(3), ex_task.abs_deadline(3), ex_task.abs_dismiss(3)) == (8, 12, 13)


def test_malformed_distribution_reports_each_violation():
    task = TaskSpec(exec=[(3, "1/2"), (2, "1/3")], period=4, deadline=4)
    report = validate_task(task)
    assert not report.ok
    assert "values not strictly increasing" in report.violations
    assert "probabilities sum to 5/6 ≠ 1" in report.violations


@pytest.mark.parametrize(
    "kwargs, fragment",
    [
        (dict(period=0, deadline=4), "period"),
        (dict(period=4, deadline=0), "deadline"),
        (dict(period=4, deadline=4, dismiss_offset=-1), "dismiss_offset"),
    ],
)
def test_parameter_violations(kwargs, fragment):
    report = validate_task(TaskSpec(exec=[(1, 1)], **kwargs))
    assert any(fragment in v for v in report.violations)


def test_negative_value_and_zero_probability():
    report = validate_task(TaskSpec(exec=[(-1, 0), (2, 1)], period=4, deadline=4))
    assert len(report.violations) == 2


@given(tasks())
def test_json_round_trip(task):
    assert TaskSpec.from_dict(json.loads(json.dumps(task.to_dict()))) == task


def test_file_round_trip(tmp_path, ex_task):
    path = tmp_path / "task.json"
    dump_task(ex_task, path)
    assert load_task(path) == ex_task
    assert json.loads(path.read_text())["schema"] == "dmr-kit/1"


def test_example_document_parses(data_dir, ex_task):
    assert load_task(data_dir / "task_two_point.json") == ex_task


@pytest.mark.parametrize(
    "doc",
    [
        {"period": "4", "deadline": "4"},
        {"period": "4", "deadline": "4", "execution": [{"value": "1"}]},
        {"schema": "dmr-kit/0", "period": "4", "deadline": "4", "execution": []},
    ],
)
def test_malformed_documents(doc):
    with pytest.raises(ModelError):
        TaskSpec.from_dict(doc)


def test_replace_keeps_other_fields(ex_task):
    t = ex_task.replace(deadline=6)
    assert t.deadline == 6 and t.exec == ex_task.exec and t.dismiss_offset == 1


def test_exec_distribution_accessors():
    d = ExecDistribution.of([(2, "1/4"), (3, "3/4")])
    assert d.values == (2, 3) and d.probs == (Fraction(1, 4), Fraction(3, 4)) and len(d) == 2
