import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpball import algebra as alg
from cpball import gns
from cpball.errors import DomainError, NotMinimalError, NotPositiveDefiniteError
from cpball.families import minimal_compression, random_table_dilation, table_families
from cpball.functions import scalar_function
from cpball.semigroup import AbsoluteValue, cyclic_group_table, zero_one_table


def test_gram_on_zero_one():
    k = gns.build_gram([0.5, 1.0], zero_one_table())
    assert np.allclose(k, [[0.5, 0.5], [0.5, 1.0]])


def test_construct_two_dimensional():
    res = gns.gns_construct([0.5, 1.0], zero_one_table())
    assert res.h == 2 and res.minimal
    assert res.max_residual < 1e-12
    assert res.hom_residual < 1e-12 and res.star_residual < 1e-12


def test_construct_constant_one_is_one_dimensional():
    res = gns.gns_construct([1.0, 1.0], zero_one_table())
    assert res.h == 1
    assert np.allclose(res.pi[0], 1.0) and np.allclose(res.pi[1], 1.0)


def test_construct_zero_function():
    res = gns.gns_construct([0.0, 0.0], zero_one_table())
    assert res.h == 0 and res.max_residual == 0.0


def test_construct_rejects_non_positive_definite():
    with pytest.raises(NotPositiveDefiniteError):
        gns.gns_construct([1.0, 0.5], zero_one_table())


def test_alpha_bound_examples():
    t = zero_one_table()
    ok = gns.alpha_bounded_check([0.5, 1.0], t, AbsoluteValue.constant(t))
    assert ok.holds
    bad = gns.alpha_bounded_check([0.5, 1.0], t, AbsoluteValue(t, [0.5, 0.5], validate=False))
    assert not bad.holds and bad.worst_pair == (1, 1)
    assert bad.worst_margin == pytest.approx(-0.75)
    with pytest.raises(DomainError):
        gns.gns_construct([0.5, 1.0], t, alpha=[0.5, 0.5])


def test_contraction_margin_for_unit_weights():
    t = cyclic_group_table(3)
    w = np.exp(2j * np.pi / 3)
    vals = [0.5 * (1 + w ** g) for g in range(3)]
    res = gns.gns_construct(vals, t, alpha=np.ones(3))
    assert res.contraction_margin <= 1e-8


def test_h_matches_independent_rank(rng):
    for fam in table_families():
        dil = random_table_dilation(fam, rng)
        res = gns.gns_construct(dil.values, fam.table)
        k = gns.build_gram(dil.values, fam.table)
        assert res.h == np.linalg.matrix_rank(k, tol=1e-8 * np.abs(k).max())
        assert res.h <= dil.generating_dim * fam.table.size


def test_pi_norms_bounded_by_one(rng):
    for fam in table_families():
        res = gns.gns_construct(random_table_dilation(fam, rng).values, fam.table)
        assert max(np.linalg.norm(p, 2) for p in res.pi) <= 1 + 1e-8


def test_intertwiner_identity(rng):
    fam = table_families()[4]
    res = gns.gns_construct(random_table_dilation(fam, rng).values, fam.table)
    inter = gns.uniqueness_intertwiner(res, res)
    assert inter.ok() and np.allclose(inter.unitary, np.eye(res.h))


def test_intertwiner_recovers_conjugation(rng):
    fam = table_families()[5]
    res = gns.gns_construct(random_table_dilation(fam, rng).values, fam.table)
    q, _ = np.linalg.qr(rng.standard_normal((res.h, res.h)) + 1j * rng.standard_normal((res.h, res.h)))
    other = gns.DilationResult(res.h, tuple(q @ p @ q.conj().T for p in res.pi), q @ res.iota,
                               None, None, True, 0.0, 0.0, 0.0, res.eigenvalues, res.labels)
    inter = gns.uniqueness_intertwiner(res, other)
    assert inter.ok()
    assert np.allclose(inter.unitary, q, atol=1e-8)


def test_intertwiner_detects_different_functions(rng):
    t = cyclic_group_table(2)
    a = gns.gns_construct([1.0, 0.0], t)
    b = gns.gns_construct([1.0, 0.5], t)
    inter = gns.uniqueness_intertwiner(a, b)
    assert not inter.ok()


def test_intertwiner_rejects_non_minimal(rng):
    res = gns.gns_construct([0.5, 1.0], zero_one_table())
    padded = gns.DilationResult(3, tuple(np.pad(p, ((0, 1), (0, 1))) for p in res.pi),
                                np.pad(res.iota, ((0, 1), (0, 0))), None, None, False,
                                0.0, 0.0, 0.0, res.eigenvalues, res.labels)
    with pytest.raises(NotMinimalError):
        gns.uniqueness_intertwiner(padded, res)


def test_families_round_trip_with_compression(rng):
    for fam in table_families():
        dil = random_table_dilation(fam, rng)
        res = gns.gns_construct(dil.values, fam.table)
        pis, iota = minimal_compression(dil)
        compressed = gns.DilationResult(len(iota), pis, iota, None, None, True, 0.0, 0.0, 0.0,
                                        res.eigenvalues, res.labels)
        assert res.h == iota.shape[0]
        assert gns.uniqueness_intertwiner(res, compressed).ok()


def test_subtracting_value_at_zero_stays_positive_definite():
    t = zero_one_table()
    vals = np.array([0.3, 1.0])
    shifted = vals - vals[0]
    assert gns.gns_construct(shifted, t).h == 1


def test_span_diagnostic_for_unital_table():
    t = zero_one_table()
    diag = gns.span_diagnostic([0.5, 1.0], t, [1.0])
    assert diag.residual < 1e-12
    assert diag.norm == pytest.approx(1.0)


@pytest.mark.parametrize("f, expect", [(lambda t: t ** 2, 1.0), (lambda t: 0.3 + 0.5 * t, 0.8),
                                       (np.exp, np.e)])
def test_scaling_dilation_examples(m1r, f, expect):
    phi = scalar_function(f, m1r)
    sd = gns.dilation_via_scaling(phi)
    assert sd.iota_norm_sq == pytest.approx(expect, rel=1e-6)
    assert sd.bound_holds()
    assert sd.cauchy_ok


def test_scaling_dilation_coarse_grid_warns(m1r):
    phi = scalar_function(lambda t: t ** 2, m1r)
    with pytest.warns(gns.NonDilatableWarning):
        sd = gns.dilation_via_scaling(phi, grid=(0.9, 0.99, 0.999))
    assert not sd.cauchy_ok


def test_scaling_dilation_zero(m1r):
    sd = gns.dilation_via_scaling(scalar_function(lambda t: 0.0, m1r))
    assert sd.iota_norm_sq == 0.0 and sd.dilation.h == 0


def test_scaling_on_matrix_algebra(m2r):
    from cpball.functions import OperatorFunction
    phi = OperatorFunction(lambda a: np.trace(a.data) / 2, m2r, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sd = gns.dilation_via_scaling(phi)
    assert sd.iota_norm_sq == pytest.approx(1.0, rel=1e-6)


def test_extrapolation_is_exact_for_quadratics():
    hs = [0.5, 0.25, 0.125]
    vals = [3 + 2 * h - h * h for h in hs]
    assert gns.extrapolate(hs, vals) == pytest.approx(3.0)


def test_nondilatable_table():
    out = gns.nondilatable_demo()
    assert out["strictly_increasing"]
    for row in out["rows"]:
        assert abs(row["norm"] - row["sqrt_n"]) <= 1e-10
        assert row["sup_phi"] <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 8))
def test_random_dilations_reconstruct(seed, which):
    rng = np.random.default_rng(seed)
    fam = table_families()[which % len(table_families())]
    dil = random_table_dilation(fam, rng)
    res = gns.gns_construct(dil.values, fam.table)
    assert res.max_residual <= 1e-8
    assert res.hom_residual <= 1e-8 and res.star_residual <= 1e-8
    assert res.h <= dil.generating_dim * len(fam.mats)


def test_sample_gns_representation(m1r, rng):
    phi = scalar_function(lambda t: 0.2 + 0.5 * t + 0.3 * t ** 2, m1r)
    samples = [alg.element(m1r, [[r]]) for r in (0.1, 0.3, 0.5, 0.7, -0.4)]
    g = gns.gns_on_samples(phi, samples)
    assert g.h == 3
    pi, res = g.representation(alg.element(m1r, [[0.6]]))
    assert res < 1e-8
