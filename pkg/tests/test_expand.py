import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpball import algebra as alg
from cpball import expand as ex
from cpball.catalog import lookup
from cpball.errors import DegreeCapError, DomainError, StructuralError
from cpball.functions import OperatorFunction, scalar_function
from cpball.positivity import PASS_STATISTICAL, cp_sampled_check
from cpball.semigroup import SemigroupTable


def _trace_series(m2r):
    return OperatorFunction(lambda a: np.trace(a.data) + np.trace(a.data) ** 2, m2r, 1)


def test_trace_series_components(m2r, rng):
    phi = _trace_series(m2r)
    samples = [alg.random_ball_element(m2r, rng) for _ in range(5)]
    e = ex.extract_components(phi, samples, 2)
    assert e.residuals.max() < 1e-10 and e.claim == "EXPANSION"
    for a, vals in zip(samples, e.values):
        tr = np.trace(a.data)
        assert np.allclose(vals[:, 0, 0], [0, tr, tr ** 2], atol=1e-10)
    assert e.homogeneity_residual() < 1e-9


def test_degree_cap_too_small(m2r, rng):
    phi = _trace_series(m2r)
    with pytest.raises(DegreeCapError) as info:
        ex.extract_components(phi, [alg.random_ball_element(m2r, rng, 0.8)], 1)
    assert len(info.value.residuals) >= 2


def test_non_unital_domain_carries_no_claim():
    d = alg.make_matrix_algebra(1, "R")
    phi = scalar_function(lambda t: t, d)
    assert ex.extract_components(phi, [alg.element(d, [[0.4]])], 1).claim == "EXPANSION"
    l1 = alg.make_semigroup_algebra(SemigroupTable([[0, 0], [0, 0]], [0, 1], ("0", "n")),
                                    [1.0, 1.0])
    f = OperatorFunction(lambda a: a.data.sum(), l1, 1)
    samp = alg.from_vector(l1, np.array([0.2, 0.3]))
    assert ex.extract_components(f, [samp], 1).claim == "NO-CLAIM"
    assert ex.extract_components(f, [samp], 1, dilatable=True).claim == "EXPANSION"


def test_polarization_recovers_trace_product(m2r, rng):
    phi = _trace_series(m2r)
    e = ex.extract_components(phi, [alg.random_ball_element(m2r, rng)], 2)
    a, b = alg.random_ball_element(m2r, rng), alg.random_ball_element(m2r, rng)
    beta = ex.polarize(e.components[2], [a, b])
    assert beta[0, 0] == pytest.approx(np.trace(a.data) * np.trace(b.data), abs=1e-9)
    assert np.allclose(ex.polarize(e.components[2], [b, a]), beta, atol=1e-9)
    assert np.allclose(ex.polarize(e.components[2], [a, a]), e.components[2](a), atol=1e-9)


def test_polarization_degree_three_is_symmetric(m1r, rng):
    phi = scalar_function(lambda t: t ** 3, m1r)
    e = ex.extract_components(phi, [alg.element(m1r, [[0.3]])], 3)
    xs = [alg.element(m1r, [[v]]) for v in (0.2, -0.5, 0.7)]
    ref = ex.polarize(e.components[3], xs)[0, 0]
    assert ref == pytest.approx(0.2 * -0.5 * 0.7, abs=1e-9)
    assert ex.polarize(e.components[3], xs[::-1])[0, 0] == pytest.approx(ref, abs=1e-9)


def test_polarize_arity_and_homogeneity(m1r):
    e = ex.extract_components(scalar_function(lambda t: t ** 2, m1r),
                              [alg.element(m1r, [[0.5]])], 2)
    with pytest.raises(DomainError):
        ex.polarize(e.components[2], [alg.element(m1r, [[0.5]])])
    fake = OperatorFunction(lambda a: a.data, m1r, 1, degree=2, extends_homogeneously=True)
    with pytest.raises(DomainError):
        ex.polarize(fake, [alg.element(m1r, [[0.5]])] * 2)


def test_component_bounds(m2r, rng):
    phi = OperatorFunction(lambda a: 0.2 + 0.3 * np.trace(a.data) / 2
                           + 0.25 * (np.trace(a.data) / 2) ** 2, m2r, 1)
    samples = [alg.random_ball_element(m2r, rng) for _ in range(6)]
    e = ex.extract_components(phi, samples, 2)
    rep = ex.component_bounds_check(e, phi, samples, component_trials=100)
    assert rep.all_hold
    assert rep.phi_sup == pytest.approx(0.75, rel=1e-6)
    assert all(v.verdict == PASS_STATISTICAL for v in rep.component_cp)


def test_component_bounds_skip_non_cp(m1r):
    phi = scalar_function(lambda t: t - 0.1, m1r)
    samples = [alg.element(m1r, [[r]]) for r in (-0.5, 0.2, 0.6)]
    rep = ex.component_bounds_check(ex.extract_components(phi, samples, 1), phi, samples)
    assert rep.skipped == ex.NOT_CP and not rep.all_hold


def test_series_pd_equivalence(m1r, rng):
    comps = [scalar_function(lambda t: 0.5 + 0 * t, m1r, degree=0),
             scalar_function(lambda t: 0.3 * t * t, m1r, degree=2)]
    samples = [alg.random_ball_element(m1r, rng) for _ in range(4)]
    rep = ex.series_pd_check(comps, samples)
    assert rep.all_components_pd and rep.sum_pd and rep.equivalent
    with pytest.raises(StructuralError):
        ex.series_pd_check(comps + [scalar_function(lambda t: t * t, m1r, degree=2)], samples)


def test_pd_violation_search_for_negative_constant(m1r):
    found = ex.find_pd_violation(scalar_function(lambda t: t - 0.1, m1r), draws=50)
    assert found is not None
    assert ex.find_pd_violation(scalar_function(lambda t: 1 + t * t, m1r), draws=50) is None


def test_interval_fit_example():
    fit = ex.interval_fit(ex.interval_samples(lambda t: 0.5 + 0.3 * t * t), 2)
    assert fit.verdict == ex.CP
    assert np.allclose(fit.series.scalars(), [0.5, 0.0, 0.3], atol=1e-10)


def test_interval_fit_rejects_negative_constant():
    fit = ex.interval_fit(ex.interval_samples(lambda t: t - 0.1), 3)
    assert fit.verdict == ex.NOT_CP and fit.residual > 1e-2


def test_interval_fit_matrix_case():
    a0, a1 = np.diag([1.0, 0.5]), np.array([[0.5, 0.5], [0.5, 0.5]])
    s = ex.CpSeries((a0, a1))
    fit = ex.interval_fit(ex.interval_samples(s), 1)
    assert fit.verdict == ex.CP and fit.residual < 1e-10
    bad = ex.interval_fit(ex.interval_samples(lambda t: np.diag([1.0, t - 0.1])), 2)
    assert bad.verdict == ex.NOT_CP


def test_interval_fit_needs_enough_points():
    with pytest.raises(ValueError):
        ex.interval_fit([(0.1, 1.0)], 2)
    with pytest.raises(DomainError):
        ex.interval_fit([(1.0, 1.0), (0.5, 1.0)], 1)


def test_cp_series_validation():
    with pytest.raises(StructuralError):
        ex.CpSeries.scalar([0.5, -0.1])
    s = ex.CpSeries.scalar([0.25, 0.5])
    assert s(0.5)[0, 0] == pytest.approx(0.5)
    assert s.total_mass == pytest.approx(0.75)


def test_extreme_characters():
    assert ex.extreme_character_check(ex.CpSeries.scalar([0, 0, 1])) == (ex.EXTREME, 2)
    assert ex.extreme_character_check(ex.CpSeries.scalar([0.5, 0, 0.5])).verdict == ex.NOT_EXTREME
    with pytest.raises(DomainError):
        ex.extreme_character_check(ex.CpSeries.scalar([1, 1]))


def test_homogeneity_verdicts(m1r, m1c):
    samples = [alg.element(m1r, [[v]]) for v in (0.3, 0.6, -0.5)]
    v = ex.homogeneity_degree_test(scalar_function(lambda t: t ** 2, m1r), samples)
    assert v.verdict == ex.HOMOGENEOUS and v.degree == 2
    v = ex.homogeneity_degree_test(scalar_function(lambda t: abs(t) ** 1.5, m1r), samples)
    assert v.verdict == ex.NOT_HOMOGENEOUS_INTEGRAL
    assert v.degree == pytest.approx(1.5, abs=1e-9)
    v = ex.homogeneity_degree_test(scalar_function(lambda t: 0.0, m1r), samples)
    assert v.verdict == ex.ZERO
    phi = lookup("diag-1-z-extreme").build()
    csamples = [alg.element(m1c, [[0.4 + 0.2j]]), alg.element(m1c, [[-0.3j]])]
    assert ex.homogeneity_degree_test(phi, csamples).verdict == ex.NOT_HOMOGENEOUS


def test_series_spectrum():
    spec = ex.series_gns_spectrum(ex.CpSeries.scalar([0.2, 0, 0.3, 0.4]))
    assert spec.degrees == (0, 2, 3)
    assert spec.deviation < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=5), st.sets(st.integers(0, 4)))
def test_interval_fit_round_trip(coefs, zeros):
    coefs = [0.0 if i in zeros else c for i, c in enumerate(coefs)]
    s = ex.CpSeries.scalar(coefs)
    fit = ex.interval_fit(ex.interval_samples(s), s.degree_cap)
    assert fit.verdict == ex.CP
    assert np.abs(fit.series.scalars() - coefs).max() <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_components_of_cp_series_are_cp(seed):
    rng = np.random.default_rng(seed)
    m2r = alg.make_matrix_algebra(2, "R")
    c = rng.uniform(0, 1, 3)
    c /= c.sum()
    phi = OperatorFunction(lambda a: sum(ck * (np.trace(a.data) / 2) ** k
                                         for k, ck in enumerate(c)), m2r, 1)
    samples = [alg.random_ball_element(m2r, rng) for _ in range(3)]
    e = ex.extract_components(phi, samples, 2)
    for comp in e.components:
        assert cp_sampled_check(comp, trials=20, seed=seed).verdict == PASS_STATISTICAL
    assert math.isclose(ex.sup_estimate(phi, samples), 1.0, rel_tol=1e-6)
