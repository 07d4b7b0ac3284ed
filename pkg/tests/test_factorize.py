import itertools
import math

import numpy as np
import pytest

from cpball import algebra as alg
from cpball import factorize as fz
from cpball.catalog import lookup
from cpball.envelope import envelope, gamma, permutation_operator, sym_space, symmetric_power
from cpball.errors import NotPositiveDefiniteError, NotRepresentationError, RankDeficientError
from cpball.expand import extract_components
from cpball.families import random_kraus_exp_map, restricted_component_error
from cpball.functions import OperatorFunction, constant_function


def _lift(phi, n, cap, seed=0):
    env = envelope(phi.domain)
    rng = np.random.default_rng(seed)
    dim = sym_space(symmetric_power(env.target, n)).dim
    train = fz.training_samples(phi.domain, 3 * dim, rng)
    hold = fz.training_samples(phi.domain, 5, rng)
    e = extract_components(phi, train + hold, cap)
    return fz.lift_component(e.components[n], env, n, train, hold), env


def test_lift_trace(m2r):
    phi = OperatorFunction(lambda a: np.trace(a.data), m2r, 1)
    lifted, env = _lift(phi, 1, 1)
    assert lifted.certificate.passed
    assert lifted.holdout_residual < 1e-8
    assert lifted.solve_residual < 1e-10
    a = alg.random_ball_element(m2r, np.random.default_rng(3))
    assert lifted.apply(env(a))[0, 0] == pytest.approx(np.trace(a.data), abs=1e-8)


def test_lift_trace_square(m2r):
    phi = OperatorFunction(lambda a: np.trace(a.data) ** 2, m2r, 1)
    lifted, env = _lift(phi, 2, 2)
    assert lifted.certificate.passed and lifted.holdout_residual < 1e-8
    a = alg.random_ball_element(m2r, np.random.default_rng(1))
    x = np.kron(env(a), env(a))
    assert lifted.apply(x)[0, 0] == pytest.approx(np.trace(a.data) ** 2, abs=1e-8)


def test_lift_representation_coefficient(m2r):
    v = np.array([1.0, 2.0]) / math.sqrt(5)
    phi = OperatorFunction(lambda a: v @ a.data @ v, m2r, 1)
    lifted, _ = _lift(phi, 1, 1)
    assert lifted.certificate.passed and lifted.holdout_residual < 1e-8


def test_lift_reports_rank_deficiency(m2r):
    phi = OperatorFunction(lambda a: np.trace(a.data), m2r, 1)
    env = envelope(m2r)
    few = fz.training_samples(m2r, 2, np.random.default_rng(0))
    e = extract_components(phi, few, 1)
    with pytest.raises(RankDeficientError) as info:
        fz.lift_component(e.components[1], env, 1, few)
    assert info.value.achieved == 2


def test_assemble_with_constant(m2r):
    phi = constant_function(0.7, m2r)
    lifted, env = _lift(phi, 0, 0)
    f = fz.assemble([lifted], phi, [alg.zero(m2r)])
    assert f.residual < 1e-12 and f.all_certified
    with pytest.raises(ValueError):
        fz.assemble([lifted, lifted])


def test_factorize_round_trip(m2r, rng):
    phi = lookup("trace+trace^2").build()
    f = fz.factorize(phi, 2, seed=0)
    assert f.all_certified and f.residual <= 1e-8
    a = alg.random_ball_element(m2r, rng)
    assert np.allclose(f(a), phi(a), atol=1e-8)


def test_factorize_rejects_non_positive_definite():
    with pytest.raises(NotPositiveDefiniteError) as info:
        fz.factorize(lookup("example-7.4").build(), 2)
    assert not info.value.certificate.passed


def test_factorize_is_deterministic():
    phi = lookup("trace+trace^2").build()
    a = fz.factorize(phi, 2, seed=5)
    b = fz.factorize(phi, 2, seed=5)
    assert all(np.array_equal(x.matrix, y.matrix) for x, y in zip(a.components, b.components))


def test_kraus_maps_are_recovered(m2r):
    rng = np.random.default_rng(7)
    env = envelope(m2r)
    m = random_kraus_exp_map(env.target, 2, 2, rng)
    f = fz.factorize(m.function(m2r), 2, seed=1)
    assert restricted_component_error(m, f, env.target) <= 1e-8
    assert f.all_certified


@pytest.mark.parametrize("pi, dim", [(lambda a: a.data, 2), (lambda a: np.kron(a.data, a.data), 4),
                                     (lambda a: np.eye(1), 1)])
def test_representation_correspondence(m2r, pi, dim):
    rep = OperatorFunction(pi, m2r, dim)
    cor = fz.representation_correspondence(rep, 2)
    assert cor.input_residual < 1e-12
    assert cor.gamma_residual < 1e-8 and cor.multiplicativity < 1e-8
    assert cor.commutant_residual < 1e-8


def test_correspondence_rejects_non_representation(m2r):
    rep = OperatorFunction(lambda a: 0.5 * a.data, m2r, 2)
    with pytest.raises(NotRepresentationError):
        fz.representation_correspondence(rep, 1)


def test_commutant_of_scalars_is_full():
    assert len(fz.commutant_basis([np.eye(2)])) == 4
    assert len(fz.commutant_basis([np.diag([1.0, 2.0])])) == 2


def _sym_isometry(k, n):
    sym = sum(permutation_operator(k, n, p) for p in itertools.permutations(range(n)))
    sym = sym / math.factorial(n)
    w, v = np.linalg.eigh((sym + sym.conj().T) / 2)
    return v[:, w > 0.5]


def test_universality(m2r):
    assert fz.sn_universality_check(lambda x: x, m2r, 1).factors
    iso = _sym_isometry(2, 2)
    assert fz.sn_universality_check(lambda x: iso.conj().T @ x @ iso, m2r, 2).factors
    bad = fz.sn_universality_check(lambda x: x.T, m2r, 2)
    assert not bad.factors and bad.hom_residual > 0.1


def test_gamma_multiplicativity_of_lift(m2r, rng):
    rep = OperatorFunction(lambda a: a.data, m2r, 2)
    f = fz.factorize(rep, 1)
    a, b = alg.random_ball_element(m2r, rng), alg.random_ball_element(m2r, rng)
    ga, gb = gamma(a, 1, f.env), gamma(b, 1, f.env)
    assert np.allclose(f.apply(ga * gb), f.apply(ga) @ f.apply(gb), atol=1e-8)
