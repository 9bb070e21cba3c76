import numpy as np
import pytest

from src.arclen import LIPSCHITZ_SLACK, check_chord_bound, check_unit_speed, reparametrize, unit_speed_integral
from src.curve_core import length
from src.frechet import Polyline, frechet_distance, sample_polyline
from src.integrand import get_integrand
from src.lib.catalog import TWO_PI, get_curve
from src.lib.convergence import RefinementSchedule
from src.lib.errors import ZeroLength


def test_double_circle_becomes_unit_speed(double_circle):
    usc = reparametrize(double_circle)
    assert usc.total_length == pytest.approx(TWO_PI, rel=1e-6)
    speed = check_unit_speed(usc)
    assert 0.999 <= speed["min_speed"] and speed["max_speed"] <= 1.001
    assert speed["checked"] > 0


def test_reparametrized_curve_stays_frechet_close(double_circle):
    usc = reparametrize(double_circle)
    n = 2 ** 12
    assert frechet_distance(sample_polyline(double_circle, n), sample_polyline(usc.as_curve(), n)) <= 1e-3


@pytest.mark.parametrize("name", ["circle", "sin2k", "cantor", "plateau", "helix"])
def test_chords_never_exceed_arc_length(name):
    usc = reparametrize(get_curve(name), RefinementSchedule(4, 12))
    assert check_chord_bound(usc) <= LIPSCHITZ_SLACK * usc.total_length


def test_constant_curve_has_no_arc_length_parameter():
    with pytest.raises(ZeroLength):
        reparametrize(get_curve("constant"))


def test_parameter_inverts_arc_length(segment):
    usc = reparametrize(segment, RefinementSchedule(4, 8))
    assert usc.total_length == pytest.approx(5.0)
    assert usc.parameter(2.5) == pytest.approx([0.5])
    assert usc.evaluate(2.5) == pytest.approx([1.5, 2.0])
    assert usc.evaluate(0.0) == pytest.approx(segment.evaluate(0.0))


def test_parameter_picks_the_left_end_of_a_plateau():
    usc = reparametrize(get_curve("plateau"), RefinementSchedule(4, 8))
    assert usc.total_length == pytest.approx(1.0)
    assert usc.parameter(usc.total_length) == pytest.approx([1.0])


def test_samples_follow_the_source_curve(circle):
    usc = reparametrize(circle, RefinementSchedule(4, 10))
    assert len(usc.s_grid) == len(usc.samples) == 2 ** 10 + 1
    assert usc.s_grid[-1] == usc.total_length
    radii = np.linalg.norm(usc.samples, axis=1)
    assert radii == pytest.approx(np.ones_like(radii), abs=1e-5)


def test_unit_speed_integral_matches_the_line_integral(circle):
    usc = reparametrize(circle)
    assert unit_speed_integral(usc, get_integrand("area2d")) == pytest.approx(TWO_PI, abs=1e-6)
    assert unit_speed_integral(usc, get_integrand("norm")) == pytest.approx(usc.total_length)


def test_directions_have_unit_length(circle):
    usc = reparametrize(circle, RefinementSchedule(4, 10))
    norms = np.linalg.norm(usc.directions(), axis=1)
    assert norms == pytest.approx(np.ones_like(norms))


def test_double_circle_matches_the_unit_circle(double_circle):
    usc = reparametrize(double_circle)
    exact = np.column_stack([np.cos(usc.s_grid), np.sin(usc.s_grid)])
    assert np.max(np.abs(usc.samples - exact)) <= 1e-4


def test_plateau_collapses():
    usc = reparametrize(get_curve("plateau"), RefinementSchedule(4, 10))
    assert usc.samples[:, 0] == pytest.approx(usc.s_grid)
    assert np.all(usc.samples[:, 1] == 0.0)


def test_reparametrized_curve_keeps_its_length(circle):
    usc = reparametrize(circle, RefinementSchedule(4, 12))
    assert length(usc.as_curve(), RefinementSchedule(4, 6)).limit_estimate == pytest.approx(usc.total_length,
                                                                                             rel=1e-4)


def test_composition_reproduces_the_source_on_its_grid(circle):
    usc = reparametrize(circle, RefinementSchedule(4, 10))
    source = Polyline(circle.evaluate(usc.source_grid))
    composed = Polyline(usc.evaluate(usc.source_s))
    assert frechet_distance(source, composed) <= 1e-6


def test_reparametrizing_twice_changes_nothing(circle):
    once = reparametrize(circle, RefinementSchedule(4, 10))
    twice = reparametrize(once.as_curve(), RefinementSchedule(4, 10))
    assert twice.total_length == pytest.approx(once.total_length, rel=1e-12)
    assert np.max(np.abs(twice.evaluate(once.s_grid) - once.samples)) <= 1e-6
