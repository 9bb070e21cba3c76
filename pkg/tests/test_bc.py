from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.bc import (BC_SCHEDULE, EMPTY, Box, Interval, IntervalFunctionPhi, JumpCurve, System, bc_integral,
                    check_system, compose_integrand, coverage_space, cube_integral, cube_space, endpoint_space,
                    example_catalog, example_from_uri, jordan_phi, jordan_space, jump_phi, jump_space, level_space,
                    parse_example_uri, phi_norm, phi_part, qa_certify, qa_deficits, step_curve, system_sum,
                    tau_point, variation, weierstrass_integral, zeta_oscillations)
from src.integrand import get_integrand
from src.lib.catalog import TWO_PI, constant, get_curve
from src.lib.convergence import RefinementSchedule
from src.lib.errors import (CertificationFailed, DomainError, HomogeneityError, UnknownExample,
                            ZetaConditionViolated)

HALF = Fraction(1, 2)
SHORT = RefinementSchedule(4, 10)


def length_phi():
    return IntervalFunctionPhi("|I|", lambda I: float(I.length))


def halves():
    return System((Interval(Fraction(0), HALF), Interval(HALF, Fraction(1))))


def test_system_sum_over_subsets():
    phi = length_phi()
    D = halves()
    assert system_sum(phi, None, D) == pytest.approx([1.0])
    assert system_sum(phi, EMPTY, D) == pytest.approx([0.0])
    assert system_sum(phi, Interval(Fraction(0), HALF), D) == pytest.approx([0.5])


def test_interval_validation():
    with pytest.raises(DomainError):
        Interval(1.0, 1.0)
    with pytest.raises(DomainError):
        Box((0.0, 0.0), (1.0, 0.0))
    with pytest.raises(DomainError):
        System(())
    box = Box((0.0, 0.0), (3.0, 4.0))
    assert box.volume == 12.0 and box.diameter == 5.0 and box.dim == 2


def test_overlapping_systems_are_detected():
    assert check_system(halves())
    assert not check_system(System((Interval(0.0, 0.6), Interval(0.5, 1.0))))
    assert not check_system(System((Box((0.0, 0.0), (0.6, 1.0)), Box((0.5, 0.0), (1.0, 1.0)))))
    assert check_system(System((Box((0.0, 0.0), (0.5, 1.0)), Box((0.5, 0.0), (1.0, 1.0)))))


@pytest.mark.parametrize("id, expected", [(1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0), (5, 1.0), (6, -1.0)])
def test_exact_carrier_examples(id, expected):
    entry = example_catalog(id)
    assert entry.expected == expected
    report = bc_integral(entry.space, entry.phi, entry.S, SHORT, 1e-8)
    assert report.converged
    assert report.limit_estimate == pytest.approx(expected, abs=1e-8)
    assert report.meta["quantity"] == "bc_integral"


def test_rational_penalty_mesh_grows_under_refinement():
    space = coverage_space(4)
    whole = space.mesh(System((Interval(Fraction(0), Fraction(1)),)))
    assert whole == 3
    assert space.mesh(halves()) == Fraction(7, 2)


def test_penalised_coverage_meshes():
    whole = System((Interval(Fraction(0), Fraction(1)),))
    late = System((Interval(Fraction(1, 4), Fraction(1)),))
    assert coverage_space(2).mesh(whole) == 2
    assert coverage_space(2).mesh(late) == HALF + HALF
    assert coverage_space(3).mesh(late) == Fraction(1, 4) + Fraction(3, 4) + 1
    assert endpoint_space(rational=False).mesh(whole) == 1


def measure_space():
    return level_space(example_catalog(10).extras["measure"])


@pytest.mark.parametrize("build", [
    lambda: coverage_space(1), lambda: coverage_space(2), lambda: coverage_space(3), lambda: coverage_space(4),
    lambda: endpoint_space(rational=True), lambda: endpoint_space(rational=False), jordan_space,
    lambda: jump_space(step_curve()), lambda: cube_space(1), lambda: cube_space(2), measure_space,
])
def test_every_space_reaches_small_meshes(build):
    assert build().achieves([2 ** -3, 2 ** -5])


@given(st.integers(0, 10_000), st.integers(2, 8))
@settings(max_examples=30, deadline=None)
def test_generated_systems_do_not_overlap(seed, depth):
    target = 2.0 ** -depth
    for space in (coverage_space(1), jordan_space()):
        D = space.generate(target, seed)
        assert check_system(D)
        assert 0 < space.mesh_value(D) < target


def test_qa_deficits_vanish_on_exact_refinement():
    space = coverage_space(1)
    quarters = System(tuple(Interval(Fraction(i, 4), Fraction(i + 1, 4)) for i in range(4)))
    report = qa_deficits(space, length_phi(), halves(), quarters)
    assert report.qa1_deficit == 0.0 and report.qa2_deficit == 0.0
    assert report.mesh_D == pytest.approx(0.25)


def test_qa_deficits_count_stray_intervals():
    space = coverage_space(1)
    D0 = System((Interval(Fraction(0), HALF),))
    D = System((Interval(HALF, Fraction(1)),))
    report = qa_deficits(space, length_phi(), D0, D)
    assert report.qa1_deficit == pytest.approx(0.5)
    assert report.qa2_deficit == pytest.approx(0.5)
    assert report.qsa_deficit == pytest.approx(0.5)
    assert set(report.to_record()) == {"mesh_D0", "mesh_D", "qa1", "qa2", "qsa"}


def test_curve_increments_are_additive(circle):
    space = jordan_space()
    phi = jordan_phi(circle)
    report = qa_deficits(space, phi, space.generate(0.1, 1), space.generate(0.001, 2))
    assert report.qa1_deficit + report.qa2_deficit <= 0.02
    assert report.qsa_deficit is None


def test_length_is_certified_quasi_additive():
    entry = example_catalog(1)
    report = qa_certify(entry.space, entry.phi, [(0.1, 0.05)])
    assert report.passed
    frame = report.to_frame()
    assert frame["certified"].tolist() == [True]
    assert frame["lambda"].iloc[0] <= 0.025


def test_irrational_endpoint_example_is_certified():
    entry = example_catalog(5)
    report = qa_certify(entry.space, entry.phi, [(0.1, 0.05)])
    assert report.passed
    assert report.rows[0]["certified"]


def test_quasi_subadditive_riemann_sums_are_quasi_additive():
    entry = example_catalog(9, f="x^2")
    # every split point of D0 lies on the dyadic grid of D
    D0 = entry.space.generate(2.0 ** -4, 0)
    D = entry.space.generate(2.0 ** -8, 1)
    report = qa_deficits(entry.space, entry.phi, D0, D)
    assert report.qa2_deficit == 0.0
    assert report.qsa_deficit == pytest.approx(0.0, abs=1e-12)
    assert report.qa1_deficit < 1e-3
    assert qa_certify(entry.space, entry.phi, [(0.01, 0.1)]).passed


def test_integral_over_a_subset():
    entry = example_catalog(1)
    half = Interval(Fraction(0), HALF)
    report = bc_integral(entry.space, entry.phi, half, SHORT, 1e-8)
    assert report.converged
    assert report.limit_estimate == pytest.approx(0.5, abs=1e-8)
    assert qa_certify(entry.space, entry.phi, [(0.1, 0.05)], S=half).passed


def test_squared_length_is_not_quasi_additive():
    entry = example_catalog(1)
    square = IntervalFunctionPhi("|I|^2", lambda I: float(I.length) ** 2)
    with pytest.raises(CertificationFailed) as info:
        qa_certify(entry.space, square, [(0.01, 0.5)])
    assert info.value.table[0]["certified"] is False
    D0, D = info.value.pair
    assert check_system(D0) and check_system(D)

    report = qa_certify(entry.space, square, [(0.01, 0.5)], raise_on_failure=False)
    assert not report.passed


def test_norm_of_increments_inherits_quasi_additivity(circle):
    space = jordan_space()
    phi = jordan_phi(circle)
    assert qa_certify(space, phi, [(0.05, 0.1)]).passed
    assert qa_certify(space, phi_norm(phi), [(0.05, 0.1)]).passed


def test_phi_parts_recombine(circle):
    phi = jordan_phi(circle)
    D = jordan_space().generate(0.05, 3)
    values = phi.values(D.intervals)
    for r in (1, 2):
        up = phi_part(phi, r, "+").values(D.intervals)[:, 0]
        down = phi_part(phi, r, "-").values(D.intervals)[:, 0]
        assert np.all(up >= 0) and np.all(down >= 0)
        assert up - down == pytest.approx(values[:, r - 1])
    with pytest.raises(DomainError):
        phi_part(phi, 3)


def test_jordan_length_of_the_circle():
    entry = example_catalog(7)
    assert entry.expected == pytest.approx(TWO_PI, abs=1e-6)
    report = bc_integral(entry.space, entry.phi, entry.S, SHORT, entry.tol)
    assert report.limit_estimate == pytest.approx(TWO_PI, abs=1e-3)


@pytest.mark.parametrize("id", [1, 5, 7, 8])
def test_integral_sandwich(id):
    schedule = RefinementSchedule(4, 8)
    entry = example_catalog(id)
    signed = float(np.linalg.norm(bc_integral(entry.space, entry.phi, entry.S, schedule, entry.tol).limit_estimate))
    absolute = float(bc_integral(entry.space, phi_norm(entry.phi), entry.S, schedule, entry.tol).limit_estimate)
    assert signed <= absolute + 1e-9
    assert absolute <= variation(entry.space, entry.phi, entry.S, schedule) + 1e-12


def test_variation_of_simple_interval_functions():
    assert variation(coverage_space(1), length_phi(), schedule=SHORT) == pytest.approx(1.0, abs=1e-8)
    assert variation(jordan_space(), jordan_phi(get_curve("sin2k", k=4)), schedule=SHORT) == pytest.approx(4.0, abs=1e-3)
    step = step_curve()
    assert variation(jump_space(step), jump_phi(step), schedule=SHORT) == pytest.approx(1.0)
    assert variation(coverage_space(1), length_phi(), S=EMPTY, schedule=SHORT) == 0.0


def test_jump_sizes():
    step = step_curve()
    assert step.evaluate([0.25, 0.5, 0.75])[:, 0].tolist() == [0.0, 1.0, 1.0]
    assert step.jump_size(0.5) == pytest.approx(1.0)
    assert step.total_jump() == pytest.approx(1.0)

    spike = JumpCurve((0.5,), (constant((0.0,)), constant((0.0,))), {0.25: (2.0,)})
    assert spike.jump_size(0.25) == pytest.approx(4.0)
    assert spike.jump_size(0.5) == 0.0
    assert spike.special_points() == [0.25, 0.5]
    with pytest.raises(DomainError):
        JumpCurve((0.5,), (constant((0.0,)),))


def test_jordan_length_with_jumps():
    spike = JumpCurve((0.5,), (constant((0.0,)), constant((0.0,))), {0.25: (2.0,)})
    entry = example_catalog(8, curve=spike)
    assert entry.expected == pytest.approx(4.0)
    assert entry.run().limit_estimate == pytest.approx(4.0)
    assert example_catalog(8).run().limit_estimate == pytest.approx(1.0)


def test_cauchy_integral_on_the_line():
    entry = example_catalog(9, f="x^2")
    assert entry.expected == pytest.approx(1 / 3, abs=1e-12)
    assert entry.run().limit_estimate == pytest.approx(1 / 3, abs=1e-4)


def test_cauchy_integral_on_the_square():
    entry = example_catalog(9, f="x1*x2", m=2)
    assert entry.expected == pytest.approx(0.25, abs=1e-12)
    assert entry.run().limit_estimate == pytest.approx(0.25, abs=1e-3)
    assert cube_integral(lambda p: p[:, 0] ** 2, 1) == pytest.approx(1 / 3, abs=1e-12)


def test_lebesgue_stieltjes_integral():
    entry = example_catalog(10)
    assert entry.expected == pytest.approx(0.5)
    assert entry.run().limit_estimate == pytest.approx(0.5, abs=1e-3)
    assert entry.space.mesh(System((Interval(0.0, np.inf),))) == 1.0


def test_weierstrass_example():
    entry = example_catalog(11)
    assert entry.expected == pytest.approx(TWO_PI, abs=1e-6)
    assert entry.run().limit_estimate == pytest.approx(TWO_PI, abs=1e-3)


def test_weierstrass_agrees_with_the_other_integrals(circle):
    report = weierstrass_integral(circle, get_integrand("area2d"), cross_check=True)
    value = report.limit_estimate
    assert value == pytest.approx(TWO_PI, abs=1e-3)
    assert value == pytest.approx(report.meta["line_integral"], abs=1e-3)
    assert value == pytest.approx(report.meta["unit_speed_integral"], abs=1e-3)


@pytest.mark.parametrize("tau", ["left", "right"])
def test_weierstrass_tag_does_not_matter(circle, tau):
    report = weierstrass_integral(circle, get_integrand("area2d"), SHORT, tau=tau)
    assert report.limit_estimate == pytest.approx(TWO_PI, abs=2e-3)
    assert report.meta["tau"] == tau


def test_weierstrass_degenerate_and_length_cases():
    report = weierstrass_integral(get_curve("constant"), get_integrand("norm"), SHORT, cross_check=True)
    assert report.limit_estimate == 0.0
    assert report.meta["unit_speed_integral"] == 0.0
    sin2k = weierstrass_integral(get_curve("sin2k", k=4), get_integrand("norm"), SHORT)
    assert sin2k.limit_estimate == pytest.approx(4.0, abs=1e-3)
    with pytest.raises(HomogeneityError):
        weierstrass_integral(get_curve("circle"), get_integrand("normsq"))
    with pytest.raises(DomainError):
        tau_point(get_curve("circle"), "centre")


def unit_segment():
    return get_curve("segment", start=(0.0,), end=(1.0,))


def test_composed_integrand_with_midpoint_tags():
    seg = unit_segment()
    space = jordan_space()
    Phi = compose_integrand(space, jordan_phi(seg), tau_point(seg, "mid"), get_integrand("xt"))
    assert bc_integral(space, Phi, schedule=SHORT).limit_estimate == pytest.approx(0.5, abs=1e-12)
    zero = compose_integrand(space, jordan_phi(seg), tau_point(seg, "mid"), get_integrand("zero"))
    assert bc_integral(space, zero, schedule=SHORT).limit_estimate == 0.0


def test_tag_oscillation_shrinks(circle):
    osc = zeta_oscillations(jordan_space(), tau_point(circle))
    assert len(osc) == len(RefinementSchedule(2, 6).depths())
    assert osc[-1] < 0.5 * osc[0]


def test_unshrinking_tags_are_refused():
    seg = unit_segment()
    log_length = IntervalFunctionPhi("log2|I|", lambda I: np.log2(float(I.length)))
    with pytest.raises(ZetaConditionViolated) as info:
        compose_integrand(jordan_space(), jordan_phi(seg), log_length, get_integrand("xt"))
    assert len(info.value.oscillations) > 1


@pytest.mark.parametrize("id", [0, 12, "abc"])
def test_unknown_example(id):
    with pytest.raises(UnknownExample):
        example_catalog(id)


def test_example_uri():
    assert parse_example_uri("bc://example/9?f=x^3&m=1") == (9, {"f": "x^3", "m": "1"})
    entry = example_from_uri("bc://example/9?f=x^3")
    assert entry.expected == pytest.approx(0.25, abs=1e-12)
    assert entry.schedule == BC_SCHEDULE
    for bad in ("http://example/9", "bc://example/nine", "bc://examples/9"):
        with pytest.raises(UnknownExample):
            parse_example_uri(bad)
