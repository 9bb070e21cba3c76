from fractions import Fraction
from multiprocessing import Pool, cpu_count

import numpy as np

from src.arclen import LIPSCHITZ_SLACK, check_chord_bound, check_unit_speed, reparametrize
from src.bc import (Interval, IntervalFunctionPhi, System, bc_integral, coverage_space, example_catalog, jordan_phi,
                    jordan_space, phi_norm, qa_certify, qa_deficits, variation, weierstrass_integral)
from src.curve_core import (Partition, check_derivative, coordinate_variation, derivative_quadrature, length,
                            polygonal_interpolant, variation_sum)
from src.frechet import Polyline, frechet_distance, frechet_distance_curves, insert_midpoints, premetric_check, \
    sample_polyline
from src.integrand import (BOUND_SLACK, check_homogeneity, continuity_of_integral, get_integrand,
                           invariance_under_reparam, line_integral, line_integral_ac, tangent_deviation_bound_check)
from src.lib.catalog import TWO_PI, cantor, get_curve, trigpoly
from src.lib.convergence import RefinementSchedule
from src.lib.errors import CertificationFailed, RectifyError

SUITES = ("core", "arclen", "frechet", "integrand", "bc")
DEVIATION_CURVES = 100
DEVIATION_DEPTHS = (4, 6, 8)


def _result(passed, **detail) -> dict:
    return {"passed": bool(passed), "detail": detail}


# core

def check_ac_length_identity(seed):
    gaps = {}
    for name in ("circle", "helix", "segment"):
        curve = get_curve(name)
        quad = derivative_quadrature(curve)
        gaps[name] = abs(float(length(curve).limit_estimate) - quad) / quad
    return _result(max(gaps.values()) <= 1e-6, relative_gaps=gaps)


def check_singular_strict_inequality(seed):
    curve = cantor(12)
    ell = float(length(curve).limit_estimate)
    quad = derivative_quadrature(curve)
    return _result(1.99 <= ell <= 2.01 and 0.99 <= quad <= 1.01 and ell - quad >= 0.9, length=ell, quadrature=quad)


def check_lower_semicontinuity(seed):
    circle = get_curve("circle")
    lengths = [variation_sum(circle, Partition.uniform(0.0, TWO_PI, 2 ** k)) for k in range(2, 15)]
    monotone = all(b >= a - 1e-12 for a, b in zip(lengths, lengths[1:]))
    bounded = max(lengths) <= TWO_PI + 1e-9
    return _result(monotone and bounded and lengths[-1] >= TWO_PI - 1e-3, last=lengths[-1])


def check_sandwich_and_refinement(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(20):
        curve = trigpoly(seed=seed + k, dim=3)
        P = Partition(np.sort(np.concatenate([[0.0, TWO_PI], rng.uniform(0.0, TWO_PI, size=30)])))
        v = variation_sum(curve, P)
        coords = [coordinate_variation(curve, m, P) for m in range(1, curve.dim + 1)]
        fine = P.refine(rng.uniform(0.0, TWO_PI, size=30))
        worst = max(worst, max(coords) - v, v - sum(coords), v - variation_sum(curve, fine))
    return _result(worst <= 1e-12, worst_excess=worst)


def check_derivative_selfcheck(seed):
    names = ("segment", "circle", "double_circle", "helix", "sin2k", "trigpoly")
    results = {n: check_derivative(get_curve(n), seed=seed)["passed"] for n in names}
    return _result(all(results.values()), curves=results)


# arclen

def check_unit_speed_representation(seed):
    curve = get_curve("double_circle")
    usc = reparametrize(curve)
    speed = check_unit_speed(usc)
    n = 2 ** 12
    gap = frechet_distance(sample_polyline(curve, n), sample_polyline(usc.as_curve(), n))
    ok = 0.999 <= speed["min_speed"] and speed["max_speed"] <= 1.001 and gap <= 1e-3
    return _result(ok, min_speed=speed["min_speed"], max_speed=speed["max_speed"], frechet=gap)


def check_lipschitz_chords(seed):
    excess = {}
    for name in ("circle", "sin2k", "cantor", "plateau"):
        usc = reparametrize(get_curve(name), RefinementSchedule(4, 12))
        excess[name] = check_chord_bound(usc, seed=seed) / usc.total_length
    return _result(max(excess.values()) <= LIPSCHITZ_SLACK, relative_excess=excess)


def check_length_preservation(seed):
    gaps = {}
    for name in ("circle", "double_circle", "cantor"):
        usc = reparametrize(get_curve(name), RefinementSchedule(4, 12))
        ell = float(length(usc.as_curve(), RefinementSchedule(4, 6)).limit_estimate)
        gaps[name] = abs(ell - usc.total_length) / usc.total_length
    return _result(max(gaps.values()) <= 1e-4, relative_gaps=gaps)


def check_idempotence(seed):
    once = reparametrize(get_curve("circle"), RefinementSchedule(4, 10))
    twice = reparametrize(once.as_curve(), RefinementSchedule(4, 10))
    gap = float(np.max(np.abs(twice.evaluate(once.s_grid) - once.samples)))
    return _result(gap <= 1e-6, max_gap=gap, once=once.total_length, twice=twice.total_length)


# frechet

def check_premetric(seed):
    rng = np.random.default_rng(seed)
    sample = [Polyline(rng.normal(size=(int(rng.integers(2, 12)), 2))) for _ in range(6)]
    report = premetric_check(sample)
    return _result(report.passed, violations=report.violations, worst_triangle=report.worst_triangle)


def check_offset_circle(seed):
    report = frechet_distance_curves(get_curve("circle"), get_curve("circle", radius=1.1), RefinementSchedule(4, 10))
    return _result(abs(report.limit_estimate - 0.1) <= 1e-3, distance=report.limit_estimate)


def check_midpoint_stability(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        P = Polyline(rng.normal(size=(int(rng.integers(2, 10)), 2)))
        Q = Polyline(rng.normal(size=(int(rng.integers(2, 10)), 2)))
        worst = max(worst, frechet_distance(insert_midpoints(P), insert_midpoints(Q)) - frechet_distance(P, Q))
    return _result(worst <= 1e-12, worst_increase=worst)


def check_endpoint_bound(seed):
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(20):
        P = Polyline(rng.normal(size=(int(rng.integers(1, 10)), 2)))
        Q = Polyline(rng.normal(size=(int(rng.integers(1, 10)), 2)))
        ends = max(np.linalg.norm(P.vertices[0] - Q.vertices[0]), np.linalg.norm(P.vertices[-1] - Q.vertices[-1]))
        worst = max(worst, float(ends - frechet_distance(P, Q)))
    return _result(worst <= 1e-12, worst_excess=worst)


def check_length_invariance(seed):
    curve = get_curve("double_circle")
    schedule = RefinementSchedule(4, 12)
    usc = reparametrize(curve, schedule)
    gap = frechet_distance(sample_polyline(curve, 2 ** 12), sample_polyline(usc.as_curve(), 2 ** 12))
    original = float(length(curve, schedule).limit_estimate)
    reparametrized = float(length(usc.as_curve(), schedule).limit_estimate)
    relative = abs(original - reparametrized) / original
    return _result(gap <= 1e-3 and relative <= 1e-6, frechet=gap, original=original, reparametrized=reparametrized)


# integrand

def check_deviation_bound(seed):
    violations, worst = 0, -np.inf
    for k in range(DEVIATION_CURVES):
        curve = trigpoly(seed=seed + k)
        for depth in DEVIATION_DEPTHS:
            lhs, rhs = tangent_deviation_bound_check(curve, Partition.uniform(0.0, TWO_PI, 2 ** depth))
            worst = max(worst, lhs - rhs)
            violations += int(lhs > rhs + BOUND_SLACK)
    return _result(violations == 0, violations=violations, worst_margin=float(worst))


def check_circle_area_integral(seed):
    circle = get_curve("circle")
    F = get_integrand("area2d")
    value = float(line_integral(circle, F).limit_estimate)
    I_C, I_D = invariance_under_reparam(circle, F, RefinementSchedule(4, 14))
    return _result(abs(value - TWO_PI) <= 1e-6 and abs(I_C - I_D) <= 1e-4, value=value, original=I_C,
                   reparametrized=I_D)


def check_continuity(seed):
    circle = get_curve("circle")
    family = [polygonal_interpolant(circle, 2 ** k) for k in range(3, 15)]
    report = continuity_of_integral(family, circle, get_integrand("area2d"), RefinementSchedule(4, 14))
    return _result(report.decreasing and abs(report.integrals[-1] - TWO_PI) <= 1e-3, last=report.integrals[-1])


def check_homogeneity_gate(seed):
    accepted = {n: check_homogeneity(get_integrand(n), seed=seed).passed for n in ("norm", "area2d", "zero", "xt")}
    rejected = not check_homogeneity(get_integrand("normsq"), seed=seed).passed
    return _result(all(accepted.values()) and rejected, accepted=accepted, normsq_rejected=rejected)


def check_xi_independence(seed):
    gaps, ok = {}, True
    for name, integrand in (("circle", "area2d"), ("double_circle", "area2d"), ("sin2k", "norm")):
        report = line_integral(get_curve(name), get_integrand(integrand), xi_rule="left", seed=seed)
        gaps[name] = report.meta["cross_gap"]
        ok = ok and gaps[name] <= 2 * report.tol
    return _result(ok, gaps=gaps)


def check_norm_is_length(seed):
    schedule = RefinementSchedule(4, 10)
    same = {}
    for name in ("circle", "helix", "plateau", "cantor"):
        curve = get_curve(name)
        same[name] = bool(np.array_equal(line_integral(curve, get_integrand("norm"), schedule).values,
                                         length(curve, schedule).values))
    return _result(all(same.values()), curves=same)


def check_ac_agreement(seed):
    gaps = {}
    for name, integrand in (("circle", "area2d"), ("helix", "coordinate:1"), ("double_circle", "area2d")):
        curve, F = get_curve(name), get_integrand(integrand)
        exact = line_integral_ac(curve, F)
        gaps[name] = abs(float(line_integral(curve, F).limit_estimate) - exact) / max(1.0, abs(exact))
    return _result(max(gaps.values()) <= 1e-5, relative_gaps=gaps)


# bc

def check_example_values(seed):
    values = {}
    for id in (1, 6):
        entry = example_catalog(id)
        values[id] = float(entry.run(seed).limit_estimate)
    ok = abs(values[1] - 1.0) <= 1e-9 and abs(values[6] + 1.0) <= 1e-9
    return _result(ok, integrals=values)


def check_mesh_anomaly(seed):
    space = coverage_space(4)
    whole = space.mesh(System((Interval(Fraction(0), Fraction(1)),)))
    halves = space.mesh(System((Interval(Fraction(0), Fraction(1, 2)), Interval(Fraction(1, 2), Fraction(1)))))
    return _result(whole == 3 and halves == Fraction(7, 2), whole=str(whole), halves=str(halves))


def check_cauchy_integral(seed):
    entry = example_catalog(9, f="x^2")
    value = float(entry.run(seed).limit_estimate)
    return _result(abs(value - 1.0 / 3.0) <= 1e-4, value=value)


def check_weierstrass_agreement(seed):
    report = weierstrass_integral(get_curve("circle"), get_integrand("area2d"), seed=seed, cross_check=True)
    value = float(report.limit_estimate)
    ok = abs(value - report.meta["line_integral"]) <= 1e-3 and abs(value - report.meta["unit_speed_integral"]) <= 1e-3
    return _result(ok, value=value, line_integral=report.meta["line_integral"],
                   unit_speed_integral=report.meta["unit_speed_integral"])


def check_negative_control(seed):
    entry = example_catalog(1)
    square = IntervalFunctionPhi("|I|^2", lambda I: float(I.length) ** 2, 1,
                                 lambda items: np.array([float(I.length) ** 2 for I in items]))
    try:
        qa_certify(entry.space, square, [(0.01, 0.5)], seed=seed)
    except CertificationFailed as e:
        return _result(True, table=e.table)
    return _result(False, reason="|I|^2 was certified")


def check_bc_sandwich(seed):
    schedule = RefinementSchedule(4, 8)
    gaps = {}
    for id in (1, 5, 7, 8):
        entry = example_catalog(id)
        report = bc_integral(entry.space, phi_norm(entry.phi), entry.S, schedule, entry.tol, seed)
        integral = float(report.limit_estimate)
        gaps[id] = integral - variation(entry.space, entry.phi, entry.S, schedule, seed)
    return _result(max(gaps.values()) <= 1e-9, gaps=gaps)


def check_norm_inheritance(seed):
    space, phi = jordan_space(), jordan_phi(get_curve("circle"))
    signed = qa_certify(space, phi, [(0.05, 0.1)], seed=seed, raise_on_failure=False)
    absolute = qa_certify(space, phi_norm(phi), [(0.05, 0.1)], seed=seed, raise_on_failure=False)
    return _result(signed.passed and absolute.passed, phi=signed.rows, norm=absolute.rows)


def check_subadditive_cauchy(seed):
    entry = example_catalog(9, f="x^2")
    # D refines D0: its dyadic grid contains every split point of D0
    D0 = entry.space.generate(2.0 ** -4, seed)
    D = entry.space.generate(2.0 ** -8, seed + 1)
    deficits = qa_deficits(entry.space, entry.phi, D0, D)
    certified = qa_certify(entry.space, entry.phi, [(0.01, 0.1)], seed=seed, raise_on_failure=False)
    ok = deficits.qsa_deficit <= 1e-12 and deficits.qa2_deficit == 0.0 and certified.passed
    return _result(ok, deficits=deficits.to_record(), certified=certified.passed)


def check_subset_stability(seed):
    entry = example_catalog(1)
    half = Interval(Fraction(0), Fraction(1, 2))
    value = float(bc_integral(entry.space, entry.phi, half, seed=seed).limit_estimate)
    certified = qa_certify(entry.space, entry.phi, [(0.1, 0.05)], seed=seed, S=half, raise_on_failure=False)
    return _result(abs(value - 0.5) <= 1e-9 and certified.passed, value=value, certified=certified.passed)


def check_tau_independence(seed):
    circle, F = get_curve("circle"), get_integrand("area2d")
    schedule = RefinementSchedule(4, 10)
    left = weierstrass_integral(circle, F, schedule, tau="left", seed=seed)
    right = weierstrass_integral(circle, F, schedule, tau="right", seed=seed)
    gap = abs(float(left.limit_estimate) - float(right.limit_estimate))
    return _result(gap <= 2 * left.tol, left=float(left.limit_estimate), right=float(right.limit_estimate))


checks = {
    "core": [
        ("ac_length_identity", check_ac_length_identity),
        ("singular_strict_inequality", check_singular_strict_inequality),
        ("lower_semicontinuity", check_lower_semicontinuity),
        ("sandwich_and_refinement", check_sandwich_and_refinement),
        ("derivative_selfcheck", check_derivative_selfcheck),
    ],
    "arclen": [
        ("unit_speed_representation", check_unit_speed_representation),
        ("lipschitz_chords", check_lipschitz_chords),
        ("length_preservation", check_length_preservation),
        ("idempotence", check_idempotence),
    ],
    "frechet": [
        ("premetric", check_premetric),
        ("offset_circle", check_offset_circle),
        ("midpoint_stability", check_midpoint_stability),
        ("endpoint_bound", check_endpoint_bound),
        ("length_invariance", check_length_invariance),
    ],
    "integrand": [
        ("deviation_bound", check_deviation_bound),
        ("circle_area_integral", check_circle_area_integral),
        ("continuity", check_continuity),
        ("homogeneity_gate", check_homogeneity_gate),
        ("xi_independence", check_xi_independence),
        ("norm_is_length", check_norm_is_length),
        ("ac_agreement", check_ac_agreement),
    ],
    "bc": [
        ("example_values", check_example_values),
        ("mesh_anomaly", check_mesh_anomaly),
        ("cauchy_integral", check_cauchy_integral),
        ("weierstrass_agreement", check_weierstrass_agreement),
        ("negative_control", check_negative_control),
        ("sandwich", check_bc_sandwich),
        ("norm_inheritance", check_norm_inheritance),
        ("subadditive_cauchy", check_subadditive_cauchy),
        ("subset_stability", check_subset_stability),
        ("tau_independence", check_tau_independence),
    ],
}


def suite_checks(suite: str) -> list[tuple[str, str]]:
    if suite == "all":
        return [(s, name) for s in SUITES for name, _ in checks[s]]
    if suite not in checks:
        raise RectifyError(f"Unknown suite {suite!r}; known: {', '.join(SUITES)}, all")
    return [(suite, name) for name, _ in checks[suite]]


def _run_check(args):
    """Run one property check - must be top-level for multiprocessing"""
    suite, name, seed = args
    fn = dict(checks[suite])[name]
    try:
        outcome = fn(seed)
    except RectifyError as e:
        outcome = _result(False, error=f"{type(e).__name__}: {e}")
    return {"suite": suite, "check": name, "seed": seed, **outcome}


def run_suite(suite: str, seed: int = 0, jobs: int = 1) -> list[dict]:
    """Results in registry order, whether run serially or in a pool."""
    tasks = [(s, name, seed) for s, name in suite_checks(suite)]
    if jobs <= 1:
        return [_run_check(t) for t in tasks]
    num_processes = min(cpu_count(), jobs, len(tasks))
    with Pool(processes=num_processes) as pool:
        return pool.map(_run_check, tasks)
