import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpball import algebra as alg
from cpball import positivity as pos
from cpball.errors import DomainError, StructuralError
from cpball.functions import OperatorFunction, constant_function, scalar_function


def test_psd_check_examples():
    ident = pos.psd_check(np.eye(2))
    assert ident.passed and ident.min_eig == pytest.approx(1.0)
    bad = pos.psd_check([[1, 2], [2, 1]])
    assert bad.verdict == pos.FAIL and bad.min_eig == pytest.approx(-1.0)
    assert np.allclose(bad.witness, np.array([1, -1]) / np.sqrt(2))
    assert bad.quadratic_form().real < 0
    assert pos.psd_check([[0.5, 0.5], [0.5, 1.0]]).passed


def test_psd_check_rejects_non_hermitian():
    with pytest.raises(StructuralError):
        pos.psd_check([[1, 1], [0, 1]])


def test_gram_check_reports_non_hermitian_with_witness():
    cert = pos.gram_check([[1, 1j], [0, 1]])
    assert cert.verdict == pos.FAIL and cert.reason == "non-hermitian"
    assert abs(cert.quadratic_form().imag) > 0.1


def test_tolerance_is_relative_to_norm():
    assert pos.psd_check(np.diag([1e6, -1e-4])).passed
    assert pos.psd_check(np.diag([1e6, -1e-2])).verdict == pos.FAIL
    assert pos.psd_check(np.diag([1.0, -1e-4])).verdict == pos.FAIL


def test_pd_function_check_examples(m1r):
    one = constant_function(1.0, m1r)
    tup = [alg.element(m1r, [[0.5]]), alg.element(m1r, [[0.9]])]
    assert pos.pd_function_check(one, tup).passed
    ident = scalar_function(lambda t: t, m1r)
    cert = pos.pd_function_check(ident, tup)
    assert cert.passed and cert.rank == 1
    assert np.allclose(cert.matrix, [[0.25, 0.45], [0.45, 0.81]])


def test_pd_function_check_names_escaping_pair(m1r):
    ident = scalar_function(lambda t: t, m1r)
    with pytest.raises(DomainError, match="s_1"):
        pos.pd_function_check(ident, [alg.element(m1r, [[0.5]]), alg.element(m1r, [[1.2]])])


def test_choi_examples():
    ident = pos.choi(lambda x: x, 2)
    assert pos.psd_check(ident).passed
    assert np.allclose(ident, 2 * np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2)
    swap = pos.choi(lambda x: x.T, 2)
    assert np.allclose(np.linalg.eigvalsh(swap), [-1, 1, 1, 1])
    assert pos.choi_check(lambda x: x.T, 2).verdict == pos.FAIL
    assert np.allclose(pos.choi(lambda x: np.trace(x) * np.eye(2), 2), np.eye(4))


def test_choi_round_trip(rng):
    c = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    lmap = pos.linear_map_from_choi(c, 2)
    assert np.allclose(pos.choi(lmap, 2), c)


def test_homomorphism_passes_sampled_check(m2r):
    phi = OperatorFunction(lambda a: a.data, m2r, 2, "identity")
    assert pos.cp_sampled_check(phi, trials=200).verdict == pos.PASS_STATISTICAL


def test_trace_passes_sampled_check(m2r):
    phi = OperatorFunction(lambda a: np.trace(a.data), m2r, 1, "trace")
    assert pos.cp_sampled_check(phi, trials=200).passed


def test_example_function_values():
    phi, (a1, a2) = pos.build_counterexample_phi()
    d = phi.domain
    assert phi(alg.element(d, [[0.3]]))[0, 0] == pytest.approx(0.3)
    assert phi(alg.element(d, [[0.81j]]))[0, 0] == pytest.approx(1.06j)
    cert = pos.pd_function_check(phi, [a1, a2])
    assert cert.verdict == pos.FAIL and cert.reason == "non-hermitian"
    assert np.allclose(cert.matrix, [[0.81, -0.56j], [1.06j, 0.81]])


def test_example_function_is_not_cp_but_type_w():
    phi, _ = pos.build_counterexample_phi()
    sampled = pos.cp_sampled_check(phi, trials=1000, seed=0)
    assert sampled.verdict == pos.FAIL
    assert sampled.reverify(phi)
    assert pos.typeW_check(phi, trials=300, seed=0).verdict == pos.PASS_STATISTICAL


def test_type_w_constant_functions(m1r):
    assert pos.typeW_check(constant_function(1.0, m1r), trials=50).passed
    neg = pos.typeW_check(constant_function(-1.0, m1r), trials=50)
    assert neg.verdict == pos.FAIL and neg.trials == 1 and neg.reverify(constant_function(-1.0, m1r))


def test_sampled_check_is_reproducible():
    phi, _ = pos.build_counterexample_phi()
    a = pos.cp_sampled_check(phi, trials=1000, seed=3)
    b = pos.cp_sampled_check(phi, trials=1000, seed=3)
    assert a.to_dict() == b.to_dict()


def test_offdiag_bound_examples():
    e1, e2 = np.eye(2)
    assert pos.offdiag_bound_check(np.eye(2) / 2, e1, e2) == (True, 0.0)
    assert pos.offdiag_bound_check(np.diag([1.0, 0.0]), e1, e2).value == 0.0
    res = pos.offdiag_bound_check(np.full((2, 2), 0.5), e1, e2)
    assert res.holds and res.value == pytest.approx(0.5)


def test_offdiag_bound_preconditions():
    e1, e2 = np.eye(2)
    with pytest.raises(DomainError):
        pos.offdiag_bound_check(np.eye(2), e1, e1)
    with pytest.raises(DomainError):
        pos.offdiag_bound_check(2 * np.eye(2), e1, e2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_offdiag_bound_holds_for_contractions(seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    a = g @ g.conj().T
    a /= np.linalg.norm(a, 2)
    q, _ = np.linalg.qr(rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))
    assert pos.offdiag_bound_check(a, q[:, 0], q[:, 1]).holds


def test_hadamard_examples(rng):
    assert pos.hadamard_power_check(np.ones((2, 2)), 0.5).passed
    b = rng.uniform(0.1, 1.0, (3, 3))
    assert pos.hadamard_power_check(b.T @ b, 2).passed
    with pytest.raises(DomainError):
        pos.hadamard_power_check(np.eye(2), 0.5)


def test_hadamard_violation_for_square_root():
    found = pos.search_hadamard_violation(3, 0.5, draws=2000, seed=0)
    assert found is not None
    assert found.certificate.verdict == pos.FAIL
    assert not pos.hadamard_power_check(found.matrix, 0.5).passed


def test_hadamard_violation_at_three_halves_in_dimension_four():
    found = pos.search_hadamard_violation(4, 1.5, draws=2000, seed=0)
    assert found is not None and not pos.hadamard_power_check(found.matrix, 1.5).passed


def test_lifting_recomputes_from_factor(m2r, rng):
    lift = pos._draw_lifting(m2r, 3, "wishart", rng, "entrywise")
    again = lift.recompute()
    assert all(alg.allclose(a, b) for ra, rb in zip(again, lift.entries) for a, b in zip(ra, rb))
    assert pos.psd_check(lift.realization(), tol=1e-9).passed
    assert all(alg.seminorm(a) < 1 for row in lift.entries for a in row)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(pos.STRATEGIES), st.integers(1, 4))
def test_liftings_satisfy_preconditions(seed, strategy, n):
    d = alg.make_matrix_algebra(2, "C")
    rng = np.random.default_rng(seed)
    lift = pos._draw_lifting(d, n, strategy, rng, "entrywise")
    assert all(alg.seminorm(a) < 1 for row in lift.entries for a in row)
    assert pos.psd_check(lift.realization(), tol=1e-9).passed
    w = pos._draw_lifting(d, n, strategy, rng, "operator")
    assert np.linalg.norm(w.realization(), 2) < 1


def test_zero_subtraction_keeps_positive_definiteness(m1r, rng):
    phi = scalar_function(lambda t: 0.4 + 0.3 * t + 0.2 * t ** 2, m1r)
    shifted = scalar_function(lambda t: 0.3 * t + 0.2 * t ** 2, m1r)
    assert pos.cp_sampled_check(phi, trials=100).passed
    tuples = [[alg.random_ball_element(m1r, rng) for _ in range(3)] for _ in range(100)]
    assert pos.pd_function_check(phi, tuples).passed
    assert pos.pd_function_check(shifted, tuples).passed


def test_type_w_and_pd_give_cp_on_cstar_domain(m2c, rng):
    # a positive definite type-W function on a C*-algebra is CP
    phi = OperatorFunction(lambda a: np.trace(a.data) ** 2 + 0.5 * np.trace(a.data), m2c, 1)
    tuples = [[alg.random_ball_element(m2c, rng) for _ in range(3)] for _ in range(20)]
    assert pos.pd_function_check(phi, tuples).passed
    assert pos.typeW_check(phi, trials=100).passed
    assert pos.cp_sampled_check(phi, trials=100).passed
