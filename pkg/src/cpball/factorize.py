"""Factorization phi = Phi o Gamma through the truncated exponential algebra.

Each homogeneous component phi_n is lifted to a linear map Phi_n on the
symmetric power S^n of the envelope target by solving
Phi_n(eta(a)^(x)n) = phi_n(a) on training samples. Phi_n is stored as a
matrix on the orthonormal coordinates of S^n; its Choi matrix is that of
Phi_n composed with the Frobenius projection onto S^n.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import null_space
from scipy.stats import ortho_group, unitary_group

from . import algebra as alg
from .algebra import Field, Kind
from .envelope import (ExpElement, envelope, gamma, random_exp_element, sym_space,
                       symmetric_power)
from .errors import NotPositiveDefiniteError, NotRepresentationError, RankDeficientError
from .expand import FIT_TOL, extract_components
from .positivity import choi, complex_list, gram_check, pd_function_check
from .settings import rng_for

LIFT_TOL = 1e-8


def _kron_power(b, n):
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, b)
    return out


def training_samples(domain, count, rng):
    """Scaled Haar-random orthogonal (unitary) matrices times random positive elements."""
    out = []
    for _ in range(count):
        if domain.kind is Kind.MATRIX and domain.field in (Field.REAL, Field.COMPLEX):
            n = domain.n
            if n == 1:
                u = np.array([[1.0 if domain.field is Field.REAL else np.exp(
                    2j * np.pi * rng.uniform())]])
                if domain.field is Field.REAL and rng.uniform() < 0.5:
                    u = -u
            elif domain.field is Field.REAL:
                u = ortho_group.rvs(n, random_state=rng)
            else:
                u = unitary_group.rvs(n, random_state=rng)
            g = rng.standard_normal((n, n))
            if domain.field is Field.COMPLEX:
                g = g + 1j * rng.standard_normal((n, n))
            pos = g @ g.conj().T + 0.1 * np.eye(n)
            a = alg.element(domain, u @ pos)
            out.append(alg.scale(a, float(rng.uniform(0.3, 0.95)) / alg.seminorm(a)))
        else:
            out.append(alg.random_ball_element(domain, rng, float(rng.uniform(0.3, 0.95))))
    return out


@dataclass(frozen=True, eq=False)
class LiftedComponent:
    """Phi_n as a (d^2 x dim S^n) matrix on symmetric-power coordinates."""

    degree: int
    matrix: np.ndarray
    space: object
    dim: int
    certificate: object
    solve_residual: float
    holdout_residual: float
    training_rank: int

    def apply(self, x):
        """Phi_n(x) for x in S^n (other matrices are first projected onto S^n)."""
        c = self.space.coords(np.asarray(x, dtype=complex))
        return (self.matrix @ c).reshape(self.dim, self.dim)

    def choi_matrix(self):
        return choi(self.apply, self.space.size)

    def to_dict(self):
        return {"degree": self.degree, "matrix": complex_list(self.matrix),
                "choi_spectrum": [float(x) for x in np.linalg.eigvalsh(self.choi_matrix())],
                "certificate": self.certificate.to_dict(),
                "solve_residual": self.solve_residual,
                "holdout_residual": self.holdout_residual,
                "training_rank": self.training_rank, "space_dim": int(self.space.dim)}


def _coords_for(env, space, n, samples):
    return np.array([space.coords(_kron_power(env(a), n)) for a in samples]).T


def lift_component(phi_n, env, n, training, holdout=(), tol=LIFT_TOL):
    """Solve the linear map Phi_n on S^n from samples of the degree-n component."""
    space = sym_space(symmetric_power(env.target, n))
    training = list(training)
    c = _coords_for(env, space, n, training)
    sv = np.linalg.svd(c, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank < space.dim:
        raise RankDeficientError(
            f"training span has dimension {rank} < dim S^{n} = {space.dim}; add samples",
            achieved=rank, required=space.dim)
    y = np.array([phi_n(a).ravel() for a in training]).T
    m_t, *_ = np.linalg.lstsq(c.T, y.T, rcond=None)
    m = m_t.T
    scale = max(1.0, float(np.abs(y).max()))
    solve_res = float(np.abs(m @ c - y).max()) / scale
    hold_res = 0.0
    for a in holdout:
        pred = (m @ space.coords(_kron_power(env(a), n))).reshape(phi_n.dim, phi_n.dim)
        hold_res = max(hold_res, float(np.abs(pred - phi_n(a)).max()) / scale)
    lifted = LiftedComponent(n, m, space, phi_n.dim, None, solve_res, hold_res, rank)
    cert = gram_check(lifted.choi_matrix(), tol)
    return LiftedComponent(n, m, space, phi_n.dim, cert, solve_res, hold_res, rank)


@dataclass(frozen=True, eq=False)
class Factorization:
    """Phi = sum_n Phi_n acting degreewise on ExpElements."""

    degree_cap: int
    components: tuple
    env: object
    residual: float = None

    @property
    def dim(self):
        return self.components[0].dim

    def apply(self, x):
        if x.degree_cap != self.degree_cap:
            raise ValueError(f"ExpElement has cap {x.degree_cap}, expected {self.degree_cap}")
        return sum(c.apply(x[c.degree]) for c in self.components)

    def __call__(self, a):
        """Phi(Gamma(a))."""
        return self.apply(gamma(a, self.degree_cap, self.env))

    @property
    def all_certified(self):
        return all(c.certificate.passed for c in self.components)

    def to_dict(self):
        return {"degree_cap": self.degree_cap, "residual": self.residual,
                "all_certified": self.all_certified,
                "components": [c.to_dict() for c in self.components]}


def assemble(components, phi=None, samples=(), env=None):
    """Factorization from lifted components of degrees 0..N.

    With ``phi`` and ``samples`` the residual sup ||Phi(Gamma(a)) - phi(a)||
    over the samples is recorded.
    """
    comps = tuple(sorted(components, key=lambda c: c.degree))
    degrees = [c.degree for c in comps]
    if degrees != list(range(len(comps))):
        raise ValueError(f"components must cover degrees 0..N exactly, got {degrees}")
    if env is None:
        if phi is None:
            raise ValueError("assemble needs phi or env to build Gamma")
        env = envelope(phi.domain)
    f = Factorization(len(comps) - 1, comps, env)
    if phi is not None and samples:
        res = max(float(np.abs(f(a) - phi(a)).max()) for a in samples)
        f = Factorization(f.degree_cap, comps, env, res)
    return f


def _sample_set(domain, count, seed, stream):
    rng = rng_for(seed, stream, 0)
    return training_samples(domain, count, rng)


def factorize(phi, degree_cap, seed=0, tol=LIFT_TOL, fit_tol=FIT_TOL, oversample=3,
              pd_tuples=20, tuple_size=3):
    """Full pipeline: PD gate, component extraction, lifting and assembly."""
    d = phi.domain
    env = envelope(d)
    rng = rng_for(seed, "factorize.gate", 0)
    tuples = [[alg.random_ball_element(d, rng, float(rng.uniform(0.2, 0.95)))
               for _ in range(tuple_size)] for _ in range(pd_tuples)]
    cert = pd_function_check(phi, tuples, tol)
    if not cert.passed:
        raise NotPositiveDefiniteError("phi fails the positive definiteness gate",
                                       certificate=cert)
    dims = [sym_space(symmetric_power(env.target, n)).dim for n in range(degree_cap + 1)]
    train = _sample_set(d, oversample * max(dims), seed, "factorize.train")
    hold = _sample_set(d, 10, seed, "factorize.holdout")
    fresh = _sample_set(d, 10, seed, "factorize.verify")
    exp = extract_components(phi, train + hold, degree_cap, tol=fit_tol)
    comps = []
    for n in range(degree_cap + 1):
        need = oversample * dims[n]
        comps.append(lift_component(exp.components[n], env, n, train[:need], hold, tol))
    return assemble(comps, phi, fresh, env)


class Correspondence(NamedTuple):
    factorization: Factorization
    input_residual: float
    gamma_residual: float
    multiplicativity: float
    commutant_dim: int
    commutant_residual: float

    def to_dict(self):
        return {"input_residual": self.input_residual,
                "gamma_residual": self.gamma_residual,
                "multiplicativity": self.multiplicativity,
                "commutant_dim": self.commutant_dim,
                "commutant_residual": self.commutant_residual,
                "factorization": self.factorization.to_dict()}


def representation_residual(pi, samples):
    """max of ||pi(ab) - pi(a) pi(b)|| and ||pi(a^*) - pi(a)^*|| over sample pairs."""
    worst = 0.0
    vals = [pi(a) for a in samples]
    for i, a in enumerate(samples):
        worst = max(worst, float(np.abs(pi(alg.adjoint(a)) - vals[i].conj().T).max()))
        for j, b in enumerate(samples):
            worst = max(worst, float(np.abs(pi(alg.multiply(a, b)) - vals[i] @ vals[j]).max()))
    return worst


def commutant_basis(mats):
    """Basis of {T : T m = m T for all m} via the null space of the commutator map."""
    d = mats[0].shape[0]
    eye = np.eye(d)
    rows = [np.kron(eye, m.T) - np.kron(m, eye) for m in mats]
    ns = null_space(np.vstack(rows), rcond=1e-10)
    return [ns[:, k].reshape(d, d) for k in range(ns.shape[1])]


def _split_tensor(env, parts, n):
    """Symmetrization of eta(a_1) (x) ... (x) eta(a_n)."""
    space = sym_space(symmetric_power(env.target, n))
    x = np.ones((1, 1), dtype=complex)
    for a in parts:
        x = np.kron(x, env(a))
    return space.project(x)


def representation_correspondence(pi, degree_cap, seed=0, tol=1e-8, pairs=10):
    """Lift a polynomial *-representation of the ball and test the lifted map.

    Phi is tested for multiplicativity on random elements of the truncated
    exponential algebra and on products of Gamma-images; operators in the
    commutant of pi(samples) are tested against Phi of split tensors.
    """
    d = pi.domain
    samples = _sample_set(d, 8, seed, "factorize.rep")
    res = representation_residual(pi, samples)
    if res > tol:
        raise NotRepresentationError(f"input is not a *-representation (residual {res:.3e})",
                                     residual=res)
    f = factorize(pi, degree_cap, seed=seed)
    rng = rng_for(seed, "factorize.mult", 0)
    gres = 0.0
    for a, b in zip(samples, samples[1:]):
        ga, gb = gamma(a, degree_cap, f.env), gamma(b, degree_cap, f.env)
        gres = max(gres, float(np.abs(f.apply(ga * gb) - f.apply(ga) @ f.apply(gb)).max()))
    mult = 0.0
    for _ in range(pairs):
        x = random_exp_element(f.env.target, degree_cap, rng)
        y = random_exp_element(f.env.target, degree_cap, rng)
        lhs = f.apply(x * y)
        rhs = f.apply(x) @ f.apply(y)
        mult = max(mult, float(np.abs(lhs - rhs).max()) / max(1.0, float(np.abs(lhs).max())))
    basis = commutant_basis([pi(a) for a in samples])
    cres = 0.0
    if basis:
        t = sum(rng.standard_normal() * b for b in basis)
        for n in range(degree_cap + 1):
            parts = [samples[(n + k) % len(samples)] for k in range(n)]
            x = np.ones((1, 1)) if n == 0 else _split_tensor(f.env, parts, n)
            comp = f.components[n].apply(x)
            cres = max(cres, float(np.abs(t @ comp - comp @ t).max()))
    return Correspondence(f, res, gres, mult, len(basis), cres)


class Universality(NamedTuple):
    residual: float
    hom_residual: float
    factors: bool
    matrix: np.ndarray

    def to_dict(self):
        return {"residual": self.residual, "hom_residual": self.hom_residual,
                "factors": self.factors}


def sn_universality_check(rep, d, n, seed=0, tol=1e-8, trials=10):
    """Extend a representation of S^n(A) to S^n of the envelope of A.

    ``rep`` maps matrices of the real symmetric power S^n(A) (realized
    through eta) to D x D matrices. The extension is solved on the
    complex span and tested for *-multiplicativity on random elements.
    """
    env = envelope(d)
    real_space = sym_space(symmetric_power(d, n))
    cplx = sym_space(symmetric_power(env.target, n))
    basis = real_space.basis_matrices()
    c = np.array([cplx.coords(b) for b in basis]).T
    sv = np.linalg.svd(c, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    if rank < cplx.dim:
        raise RankDeficientError(f"S^{n}(A) spans {rank} < {cplx.dim} complex dimensions",
                                 achieved=rank, required=cplx.dim)
    vals = [np.asarray(rep(b), dtype=complex) for b in basis]
    dim = vals[0].shape[0]
    y = np.array([v.ravel() for v in vals]).T
    m_t, *_ = np.linalg.lstsq(c.T, y.T, rcond=None)
    m = m_t.T
    residual = float(np.abs(m @ c - y).max())

    def ext(x):
        return (m @ cplx.coords(x)).reshape(dim, dim)
    rng = rng_for(seed, "factorize.universality", 0)
    hom = 0.0
    for _ in range(trials):
        x = cplx.from_coords(rng.standard_normal(cplx.dim) + 1j * rng.standard_normal(cplx.dim))
        y2 = cplx.from_coords(rng.standard_normal(cplx.dim) + 1j * rng.standard_normal(cplx.dim))
        scale = max(1.0, float(np.abs(ext(x) @ ext(y2)).max()))
        hom = max(hom, float(np.abs(ext(x @ y2) - ext(x) @ ext(y2)).max()) / scale,
                  float(np.abs(ext(x.conj().T) - ext(x).conj().T).max()) / scale)
    return Universality(residual, hom, residual <= tol and hom <= tol, m)
