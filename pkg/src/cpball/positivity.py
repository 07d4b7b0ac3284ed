"""Positivity certificates: PSD checks, positive definiteness, complete positivity.

Sampled complete-positivity checks are falsifiers. A FAIL carries a
replayable counterexample; a PASS only records how many liftings were
tried and with which seed.
"""

import cmath
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import algebra as alg
from .algebra import Element
from .errors import DomainError, StructuralError
from .functions import OperatorFunction
from .settings import RANK_RTOL, resolve_tol, rng_for

PASS = "PASS"
FAIL = "FAIL"
PASS_STATISTICAL = "PASS-statistical"

STRATEGIES = ("wishart", "rank-one", "perturbed-rank-one", "diagonal-boundary")


def _fix_phase(v):
    """Scale v so that its first entry of non-negligible size is real positive."""
    idx = int(np.argmax(np.abs(v) > 1e-12 * np.abs(v).max()))
    ph = v[idx] / abs(v[idx])
    return v / ph


@dataclass(frozen=True, eq=False)
class GramCertificate:
    """Outcome of a PSD test on a (block) Gram matrix.

    ``witness`` is present on FAIL: for Hermitian input <Hv, v> < 0; for a
    non-Hermitian Gram matrix <Hv, v> has a nonzero imaginary part.
    """

    dim: int
    min_eig: float
    rank: int
    verdict: str
    witness: np.ndarray = None
    norm: float = 0.0
    hermitian_defect: float = 0.0
    reason: str = ""
    matrix: np.ndarray = field(default=None, repr=False)

    @property
    def passed(self):
        return self.verdict == PASS

    def quadratic_form(self):
        v = self.witness
        return complex(v.conj() @ self.matrix @ v)

    def to_dict(self):
        out = {"dim": self.dim, "min_eig": self.min_eig, "rank": self.rank,
               "verdict": self.verdict, "norm": self.norm,
               "hermitian_defect": self.hermitian_defect}
        if self.reason:
            out["reason"] = self.reason
        if self.witness is not None:
            out["witness"] = complex_list(self.witness)
        if self.matrix is not None and self.verdict == FAIL:
            out["matrix"] = complex_list(self.matrix)
        return out


def complex_list(x):
    """Row-major [re, im] pairs, keeping the array shape."""
    x = np.asarray(x, dtype=complex)
    pairs = np.stack([x.real, x.imag], axis=-1)
    return pairs.tolist()


def _eig_summary(h, tol):
    hs = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(hs)
    norm = float(np.abs(w).max(initial=0.0))
    lam_max = float(w[-1]) if w.size else 0.0
    rank = int(np.sum(w >= RANK_RTOL * lam_max)) if lam_max > 0 else 0
    ok = w.size == 0 or w[0] >= -tol * max(1.0, norm)
    return w, v, norm, rank, ok


def _hermitian_defect(h):
    if not h.size:
        return 0.0, 1.0
    defect = float(np.linalg.norm(h - h.conj().T))
    return defect, max(1.0, float(np.linalg.norm(h)))


def psd_check(h, tol=None):
    """Certify that a Hermitian matrix is positive semidefinite.

    PASS iff the minimum eigenvalue is >= -tol * max(1, ||H||_2). Raises
    StructuralError when ||H - H^*|| exceeds tol * max(1, ||H||) (Frobenius).
    """
    tol = resolve_tol(tol)
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise StructuralError("psd_check needs a square matrix")
    defect, scale = _hermitian_defect(h)
    if defect > tol * scale:
        raise StructuralError(f"matrix is not Hermitian: ||H - H^*|| = {defect:.3e}",
                              witness=defect)
    w, v, norm, rank, ok = _eig_summary(h, tol)
    witness = None if ok else _fix_phase(v[:, 0])
    return GramCertificate(h.shape[0], float(w[0]) if w.size else 0.0, rank,
                           PASS if ok else FAIL, witness, norm, defect, "", h)


def gram_check(h, tol=None):
    """psd_check that reports non-Hermitian input as FAIL instead of raising."""
    tol = resolve_tol(tol)
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    defect, scale = _hermitian_defect(h)
    if defect <= tol * scale:
        return psd_check(h, tol)
    w, _, norm, rank, _ = _eig_summary(h, tol)
    skew = (h - h.conj().T) / 2j
    sw, sv = np.linalg.eigh(skew)
    j = int(np.argmax(np.abs(sw)))
    return GramCertificate(h.shape[0], float(w[0]), rank, FAIL, _fix_phase(sv[:, j]), norm,
                           defect, "non-hermitian", h)


def block_matrix(blocks):
    arr = np.array([[np.asarray(b, dtype=complex) for b in row] for row in blocks])
    n, m, p, q = arr.shape
    return arr.transpose(0, 2, 1, 3).reshape(n * p, m * q)


def pd_gram(phi, elements):
    """The block matrix (phi(s_j^* s_k))_{jk}."""
    stars = [alg.adjoint(s) for s in elements]
    rows = []
    for j, sj in enumerate(stars):
        row = []
        for k, sk in enumerate(elements):
            prod = alg.multiply(sj, sk)
            phi.check_domain(prod, label=f"s_{j}^* s_{k}")
            row.append(phi(prod))
        rows.append(row)
    return block_matrix(rows)


def pd_function_check(phi, tuples, tol=None):
    """Positive definiteness test of phi on one tuple or a list of tuples.

    With several tuples the first failing certificate is returned, or the
    one with the smallest minimum eigenvalue when all pass.
    """
    if tuples and isinstance(tuples[0], Element):
        tuples = [tuples]
    worst = None
    for tup in tuples:
        cert = gram_check(pd_gram(phi, list(tup)), tol)
        if not cert.passed:
            return cert
        if worst is None or cert.min_eig < worst.min_eig:
            worst = cert
    return worst


def choi(linear_map, d):
    """Choi matrix sum_ij E_ij (x) L(E_ij) of a linear map on M_d."""
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            row.append(np.asarray(linear_map(e), dtype=complex))
        rows.append(row)
    m = rows[0][0].shape[0]
    out = np.zeros((d * m, d * m), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d))
            e[i, j] = 1.0
            out += np.kron(e, rows[i][j])
    return out


def linear_map_from_choi(c, d):
    """Inverse of :func:`choi`: L(x) = sum_ij x_ij C_ij with C_ij the (i, j) block."""
    c = np.asarray(c, dtype=complex)
    m = c.shape[0] // d
    blocks = c.reshape(d, m, d, m).transpose(0, 2, 1, 3)

    def lmap(x):
        return np.tensordot(np.asarray(x), blocks, axes=([0, 1], [0, 1]))
    return lmap


# lifted matrices

@dataclass(frozen=True, eq=False)
class Lifting:
    """A = c * B^* B in M_n(A) with the factor B kept for re-verification."""

    factor: tuple          # rows of Elements, shape m x n
    scale: float
    entries: tuple         # n x n Elements

    @property
    def size(self):
        return len(self.entries)

    def recompute(self):
        return _lift_entries(self.factor, self.scale)

    def realization(self):
        return block_matrix([[alg.realize(a) for a in row] for row in self.entries])

    def to_dict(self):
        d = self.entries[0][0].algebra
        return {"algebra": d.name, "scale": self.scale,
                "factor": [[alg.vector(b).tolist() for b in row] for row in self.factor],
                "entries": [[alg.vector(a).tolist() for a in row] for row in self.entries]}


def _lift_entries(factor, c):
    d = factor[0][0].algebra
    if d.kind in alg.MATRIX_LIKE:
        b = np.array([[x.data for x in row] for row in factor])
        a = c * np.einsum("kica,kjcb->ijab", b.conj(), b)
        return tuple(tuple(alg.element(d, x, check=False) for x in row) for row in a)
    m, n = len(factor), len(factor[0])
    stars = [[alg.adjoint(x) for x in row] for row in factor]
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = alg.multiply(stars[0][i], factor[0][j])
            for k in range(1, m):
                acc = alg.add(acc, alg.multiply(stars[k][i], factor[k][j]))
            row.append(alg.scale(acc, c))
        out.append(tuple(row))
    return tuple(out)


def _max_seminorm(entries):
    d = entries[0][0].algebra
    if d.kind in alg.MATRIX_LIKE:
        stack = np.array([[x.data for x in row] for row in entries])
        return float(np.linalg.svd(stack, compute_uv=False).max())
    return max(alg.seminorm(x) for row in entries for x in row)


def _draw_factor(d, n, strategy, rng):
    if strategy == "rank-one":
        return [[alg.random_ball_element(d, rng) for _ in range(n)]]
    if strategy == "perturbed-rank-one":
        m = int(rng.integers(2, 4))
        eps = 10 ** rng.uniform(-1.5, -0.2)
        first = [alg.random_element(d, rng) for _ in range(n)]
        rest = [[alg.random_element(d, rng, eps) for _ in range(n)] for _ in range(m - 1)]
        return [first] + rest
    m = int(rng.integers(1, n + 2))
    rows = [[alg.random_element(d, rng) for _ in range(n)] for _ in range(m)]
    if strategy == "diagonal-boundary":
        for i in range(n):
            row = [alg.zero(d)] * n
            row[i] = alg.random_element(d, rng, float(rng.uniform(0.5, 2.0)))
            rows.append(row)
    return rows


def _draw_lifting(d, n, strategy, rng, norm_mode):
    factor = _draw_factor(d, n, strategy, rng)
    base = _lift_entries(factor, 1.0)
    if norm_mode == "entrywise":
        size = _max_seminorm(base)
    else:
        size = float(np.linalg.norm(
            block_matrix([[alg.realize(a) for a in row] for row in base]), 2))
    rho = 0.999 if strategy == "diagonal-boundary" else float(rng.uniform(0.5, 0.999))
    c = 1.0 if size == 0 else rho / size
    entries = tuple(tuple(alg.scale(a, c) for a in row) for row in base)
    return Lifting(tuple(tuple(r) for r in factor), c, entries)


def apply_entrywise(phi, lifting):
    return block_matrix([[phi(a) for a in row] for row in lifting.entries])


@dataclass(frozen=True, eq=False)
class Counterexample:
    trial: int
    strategy: str
    lifting: Lifting
    certificate: GramCertificate

    def to_dict(self):
        return {"trial": self.trial, "strategy": self.strategy,
                "lifting": self.lifting.to_dict(), "certificate": self.certificate.to_dict()}


@dataclass(frozen=True, eq=False)
class CpVerdict:
    """Verdict of a complete-positivity test.

    ``mode`` is LINEAR_CHOI, SAMPLED or TYPE_W; ``verdict`` is PASS (Choi),
    PASS-statistical (sampling found nothing) or FAIL.
    """

    mode: str
    verdict: str
    trials: int
    seed: int = None
    block_size: int = 0
    counterexample: Counterexample = None
    certificate: GramCertificate = None

    @property
    def passed(self):
        return self.verdict != FAIL

    def reverify(self, phi, tol=None):
        """Replay the counterexample: precondition holds and the Gram fails."""
        if self.counterexample is None:
            return False
        lift = self.counterexample.lifting
        again = lift.recompute()
        same = all(alg.allclose(a, b, 1e-12) for ra, rb in zip(again, lift.entries)
                   for a, b in zip(ra, rb))
        if self.mode == "TYPE_W":
            pre = float(np.linalg.norm(lift.realization(), 2)) < 1.0
        else:
            pre = all(alg.seminorm(a) < 1.0 for row in lift.entries for a in row)
        return same and pre and not gram_check(apply_entrywise(phi, lift), tol).passed

    def to_dict(self):
        out = {"mode": self.mode, "verdict": self.verdict, "trials": self.trials,
               "seed": self.seed, "block_size": self.block_size}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_dict()
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        return out


def _sampled(phi, n, trials, seed, tol, mode, strategies, stream):
    d = phi.domain
    norm_mode = "operator" if mode == "TYPE_W" else "entrywise"
    for t in range(trials):
        rng = rng_for(seed, stream, t)
        size = 1 + t % n
        strategy = strategies[(t // n) % len(strategies)]
        lift = _draw_lifting(d, size, strategy, rng, norm_mode)
        cert = gram_check(apply_entrywise(phi, lift), tol)
        if not cert.passed:
            return CpVerdict(mode, FAIL, t + 1, seed, n, Counterexample(t, strategy, lift, cert))
    return CpVerdict(mode, PASS_STATISTICAL, trials, seed, n)


def cp_sampled_check(phi, n=4, trials=1000, seed=0, tol=None):
    """Search for a lifting A >= 0 with entries in the ball and (phi(a_ij)) not PSD.

    Trial t uses block size 1 + t mod n and cycles through the lifting
    strategies; the stream of trial t depends only on (seed, t), so the
    first failing trial is the same however the work is scheduled.
    """
    return _sampled(phi, n, trials, seed, tol, "SAMPLED", STRATEGIES, "positivity.cp")


def typeW_check(phi, n=4, trials=1000, seed=0, tol=None):
    """Like cp_sampled_check, with the precondition ||A|| < 1 on the whole matrix."""
    return _sampled(phi, n, trials, seed, tol, "TYPE_W", STRATEGIES, "positivity.typeW")


def choi_check(linear_map, d, tol=None):
    cert = psd_check(choi(linear_map, d), tol)
    return CpVerdict("LINEAR_CHOI", PASS if cert.passed else FAIL, 0, certificate=cert)


class OffDiagonalBound(NamedTuple):
    holds: bool
    value: float


def offdiag_bound_check(a, u, v, tol=None):
    """|<Au, v>| for 0 <= A <= 1 and orthonormal u, v; the bound 1/2 always holds."""
    tol = resolve_tol(tol)
    a = np.asarray(a, dtype=complex)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    defect = float(np.linalg.norm(a - a.conj().T))
    if defect > tol:
        raise DomainError(f"A is not Hermitian: ||A - A^*|| = {defect:.3e}", witness=defect)
    w = np.linalg.eigvalsh((a + a.conj().T) / 2)
    if w[0] < -tol or w[-1] > 1 + tol:
        raise DomainError(f"A is not between 0 and 1: spectrum in [{w[0]:.6g}, {w[-1]:.6g}]",
                          witness=(float(w[0]), float(w[-1])))
    for name, x in (("u", u), ("v", v)):
        nx = float(np.linalg.norm(x))
        if abs(nx - 1) > tol:
            raise DomainError(f"{name} is not a unit vector: norm {nx:.6g}", witness=nx)
    ip = abs(complex(np.vdot(u, v)))
    if ip > tol:
        raise DomainError(f"u and v are not orthogonal: |<u, v>| = {ip:.3e}", witness=ip)
    value = abs(complex(np.vdot(v, a @ u)))
    return OffDiagonalBound(value <= 0.5 + tol, value)


def _disc_phi(z):
    if abs(z) <= 0.5 or (z.imag == 0 and 0 <= z.real < 1):
        return z
    return z + 0.25j


def build_counterexample_phi():
    """A function on the closed unit disc that is CP of type W but not positive definite.

    phi(z) = z when |z| <= 1/2 or z in [0, 1), and z + i/4 otherwise.
    Returns (phi, (a1, a2)) with a1 = 0.9 e^{i pi/4}, a2 = 0.9 e^{-i pi/4}.
    """
    disc = alg.make_matrix_algebra(1, alg.Field.COMPLEX)

    def fn(a):
        return _disc_phi(complex(a.data[0, 0]))
    phi = OperatorFunction(fn, disc, 1, "typeW-not-pd", None, closed=True)
    a1 = alg.element(disc, [[0.9 * cmath.exp(1j * cmath.pi / 4)]])
    a2 = alg.element(disc, [[0.9 * cmath.exp(-1j * cmath.pi / 4)]])
    return phi, (a1, a2)


def hadamard_power_check(a, alpha, tol=None):
    """PSD test of the entrywise power (a_ij^alpha) of a PSD matrix with positive entries."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        i, j = (int(x) for x in np.argwhere(a <= 0)[0])
        raise DomainError(f"entry ({i}, {j}) = {a[i, j]:g} is not positive", witness=(i, j))
    if np.linalg.eigvalsh((a + a.T) / 2)[0] < -resolve_tol(tol) * max(1.0, np.abs(a).max()):
        raise DomainError("input matrix is not positive semidefinite")
    return psd_check(a ** float(alpha), tol)


class HadamardViolation(NamedTuple):
    draw: int
    matrix: np.ndarray
    certificate: GramCertificate


def _draw_positive_psd(n, rng, kind):
    if kind == 0:
        # small perturbation of a positive rank-one matrix
        u = rng.uniform(0.5, 1.5, n)
        w = rng.uniform(-1.0, 1.0, n)
        eps = 10 ** rng.uniform(-2, 0)
        a = np.outer(u, u) + eps * np.outer(w, w)
    else:
        b = rng.uniform(0.0, 1.0, (int(rng.integers(1, n + 1)), n))
        a = b.T @ b
    return a / np.abs(a).max()


def search_hadamard_violation(n, alpha, draws=10000, seed=0, tol=None):
    """Seeded search for an n x n PSD matrix with positive entries whose alpha-power fails PSD.

    Returns the first violation found or None.
    """
    for t in range(draws):
        rng = rng_for(seed, "positivity.hadamard", t)
        a = _draw_positive_psd(n, rng, t % 2)
        if np.any(a <= 0):
            continue
        cert = hadamard_power_check(a, alpha, tol)
        if not cert.passed:
            return HadamardViolation(t, a, cert)
    return None
