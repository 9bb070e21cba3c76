from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from src.lib.convergence import ConvergenceReport, RefinementSchedule, richardson, summarize
from src.lib.errors import NonConvergence, SchemaError
from src.lib.numbers import compile_function, format_summary, format_value, parse_number
from src.lib.surd import is_rational, rational, sigma, surd


def test_format_value():
    assert format_value(None) == "N/A"
    assert format_value(1.0 / 3.0, 6) == "0.333333"
    assert format_value([1.0, 2.5], 6) == "1 2.5"
    assert float(format_value(0.1)) == 0.1
    assert format_summary(2 * np.pi) == "6.28319"


@pytest.mark.parametrize("text, expected", [
    ("0.5", 0.5),
    ("1e-6", 1e-6),
    ("1/3", 1.0 / 3.0),
    ("pi", np.pi),
    ("2pi", 2 * np.pi),
    ("pi/2", np.pi / 2),
    ("-3*pi/4", -3 * np.pi / 4),
    (7, 7.0),
])
def test_parse_number(text, expected):
    assert parse_number(text) == pytest.approx(expected)


@pytest.mark.parametrize("text", ["", "abc", "1/0", None])
def test_parse_number_rejects(text):
    assert parse_number(text) is None


def test_compile_function():
    f = compile_function("x^2")
    assert f(np.array([1.0, 2.0, 3.0])).tolist() == [1.0, 4.0, 9.0]
    g = compile_function("x1*x2 + sin(0)", dim=2)
    assert g(np.array([[2.0, 3.0], [1.0, 0.5]])).tolist() == [6.0, 0.5]
    # constants broadcast to one value per row
    assert compile_function("1")(np.zeros((4, 1))).shape == (4,)
    assert f.expression == "x^2"


@pytest.mark.parametrize("expr", ["x +", "__import__('os')", "y * 2", "open('f')"])
def test_compile_function_rejects(expr):
    with pytest.raises(SchemaError):
        compile_function(expr)


def test_surd_sign_and_order():
    root2 = surd(0, 1)
    assert surd(1, -1) < 0
    assert surd(Fraction(3, 2), -1) > 0
    assert surd(Fraction(7, 5)) < root2 < surd(Fraction(3, 2))
    assert root2 * root2 == 2
    assert sp.simplify(1 + root2 - 1 - root2) == 0
    assert float(root2) == pytest.approx(np.sqrt(2))
    assert surd(Fraction(1, 2)) == sp.Rational(1, 2)
    assert rational(0.25) == sp.Rational(1, 4)
    with pytest.raises(TypeError):
        rational(root2)


FRACTIONS = st.fractions(min_value=-100, max_value=100, max_denominator=50)


@given(FRACTIONS, FRACTIONS, FRACTIONS, FRACTIONS)
@settings(max_examples=100, deadline=None)
def test_surd_order_matches_floats(q1, r1, q2, r2):
    a, b = surd(q1, r1), surd(q2, r2)
    gap = float(a) - float(b)
    if abs(gap) > 1e-9:
        assert bool(a < b) == (gap < 0)
    assert (sp.simplify(a - b) == 0) == (q1 == q2 and r1 == r2)


def test_sigma_and_rationality():
    assert sigma(Fraction(1, 2)) == Fraction(1, 2)
    assert sigma(0) == 1
    assert sigma(Fraction(3, 8)) == Fraction(1, 8)
    assert sigma(surd(Fraction(1, 3))) == Fraction(1, 3)
    assert sigma(surd(0, 1)) == 0
    assert is_rational(Fraction(1, 7)) and is_rational(surd(Fraction(2, 3)))
    assert not is_rational(surd(1, 1)) and not is_rational(0.5)
    with pytest.raises(TypeError):
        sigma(0.5)


def test_schedule(monkeypatch):
    monkeypatch.delenv("RECTIFY_SCHEDULE_MAX", raising=False)
    schedule = RefinementSchedule(2, 4)
    assert schedule.counts() == [4, 8, 16]
    assert schedule.mesh_targets() == [0.25, 0.125, 0.0625]
    monkeypatch.setenv("RECTIFY_SCHEDULE_MAX", "3")
    assert schedule.depths() == [2, 3]
    monkeypatch.setenv("RECTIFY_SCHEDULE_MAX", "oops")
    assert schedule.depths() == [2, 3, 4]
    with pytest.raises(ValueError):
        RefinementSchedule(5, 4)


def test_schedule_keeps_two_levels(monkeypatch):
    monkeypatch.delenv("RECTIFY_SCHEDULE_MAX", raising=False)
    assert RefinementSchedule(1, 1).depths() == [0, 1]
    assert RefinementSchedule(0, 0).depths() == [0, 1]
    monkeypatch.setenv("RECTIFY_SCHEDULE_MAX", "4")
    assert RefinementSchedule().depths() == [3, 4]
    monkeypatch.setenv("RECTIFY_SCHEDULE_MAX", "0")
    assert RefinementSchedule().depths() == [0, 1]


def test_summarize_keeps_equal_meshes():
    report = summarize([(0.5, 2.0), (0.5, 2.0 + 1e-9)], tol=1e-6, extrapolate=True)
    assert len(report.samples) == 2
    assert report.converged
    assert report.limit_estimate == pytest.approx(2.0 + 1e-9)


def test_summarize_orders_and_flags():
    report = summarize([(0.25, 1.1), (0.5, 1.0)], tol=0.2)
    assert report.meshes.tolist() == [0.5, 0.25]
    assert report.limit_estimate == pytest.approx(1.1)
    assert report.error_estimate == pytest.approx(0.1)
    assert report.converged
    assert report.require() == pytest.approx(1.1)

    single = summarize([(1.0, 3.0)], tol=1.0)
    assert single.error_estimate == float("inf") and not single.converged
    with pytest.raises(NonConvergence) as info:
        single.require()
    assert info.value.report is single

    decaying = summarize([(0.5, 1e-3), (0.25, 1e-7)], tol=1e-6, criterion="value")
    assert decaying.converged


def test_richardson_removes_quadratic_term():
    # f(h) = 2 + h^2
    assert richardson(2.25, 2.0625) == pytest.approx(2.0)
    report = summarize([(0.5, 2.25), (0.25, 2.0625)], tol=1.0, extrapolate=True)
    assert report.limit_estimate == pytest.approx(2.0)


def test_report_csv():
    report = summarize([(0.5, [1.0, 2.0]), (0.25, [1.0, 2.0])], tol=1e-9)
    frame = report.to_frame()
    assert list(frame.columns) == ["mesh", "value", "value_2", "error", "converged"]
    text = report.to_csv()
    assert text.splitlines()[0] == "mesh,value,value_2,error,converged"
    assert frame["converged"].tolist() == [False, True]
    assert isinstance(report, ConvergenceReport)
