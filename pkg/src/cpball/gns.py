"""GNS dilations of positive definite functions on *-semigroups.

For a finite table the kernel K(s, t) = phi(s t^*) is assembled as a block
Gram matrix. Its eigendecomposition K = V diag(lam) V^* gives coordinates
X = diag(lam)^{1/2} V^* in which the column block X_t is the operator
K_t^*. The representation is solved from K_t pi(s) = K_{ts}.
"""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import algebra as alg
from .errors import DomainError, IllConditionedError, NotMinimalError, NotPositiveDefiniteError
from .positivity import block_matrix, complex_list, gram_check
from .semigroup import AbsoluteValue
from .settings import RANK_RTOL

GNS_TOL = 1e-8


class NonDilatableWarning(RuntimeWarning):
    """The kernel vectors K_{gamma(r)}^* v do not converge along the grid."""


def _norm(m):
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def letter_values(phi, table, d=None):
    """phi as an array of shape (letters, d, d); accepts arrays or callables on letters."""
    if callable(phi):
        vals = [np.atleast_2d(np.asarray(phi(s), dtype=complex)) for s in range(table.size)]
    else:
        vals = [np.atleast_2d(np.asarray(v, dtype=complex)) for v in phi]
    out = np.array(vals)
    if out.ndim == 1:
        out = out.reshape(-1, 1, 1)
    if d is not None and out.shape[1:] != (d, d):
        raise DomainError(f"phi values must be {d} x {d} matrices")
    return out


def build_gram(phi, table, d=None):
    """Block matrix with (s, t) block phi(s t^*)."""
    vals = letter_values(phi, table, d)
    idx = table.table[:, table.involution]
    return block_matrix(vals[idx])


@dataclass(frozen=True, eq=False)
class DilationResult:
    """A dilation (pi, H, iota) with its self-consistency figures."""

    h: int
    pi: tuple
    iota: np.ndarray
    residuals: np.ndarray
    contraction_margin: float
    minimal: bool
    relation_residual: float
    hom_residual: float
    star_residual: float
    eigenvalues: np.ndarray
    labels: tuple = ()

    @property
    def max_residual(self):
        return float(np.max(self.residuals)) if self.residuals is not None else 0.0

    def to_dict(self):
        out = {"h": self.h, "minimal": self.minimal,
               "relation_residual": self.relation_residual,
               "hom_residual": self.hom_residual, "star_residual": self.star_residual,
               "contraction_margin": self.contraction_margin,
               "pi": {str(lab): complex_list(p) for lab, p in zip(self.labels, self.pi)},
               "eigenvalues": [float(x) for x in self.eigenvalues]}
        if self.iota is not None:
            out["iota"] = complex_list(self.iota)
        if self.residuals is not None:
            out["residuals"] = [float(x) for x in self.residuals]
        return out


class _Coordinates(NamedTuple):
    x: np.ndarray          # h x (m d)
    lam: np.ndarray        # kept eigenvalues
    v: np.ndarray          # kept eigenvectors (m d) x h
    all_eigs: np.ndarray


def _coordinates(k, tol):
    cert = gram_check(k, tol)
    if not cert.passed:
        raise NotPositiveDefiniteError("kernel Gram matrix is not positive semidefinite",
                                       certificate=cert)
    w, v = np.linalg.eigh((k + k.conj().T) / 2)
    lam_max = float(w[-1]) if w.size else 0.0
    keep = w >= RANK_RTOL * lam_max if lam_max > 0 else np.zeros(w.shape, bool)
    lam, vk = w[keep][::-1], v[:, keep][:, ::-1]
    x = np.sqrt(lam)[:, None] * vk.conj().T
    return _Coordinates(x, lam, vk, w)


def _block(x, t, d):
    return x[:, t * d:(t + 1) * d]


def _solve_pi(coords, targets):
    """pi with pi^* X = Z in least squares, Z the stacked K_{ts}^* coordinates."""
    x, lam = coords.x, coords.lam
    pi = (targets @ x.conj().T / lam[None, :]).conj().T
    res = _norm(pi.conj().T @ x - targets)
    return pi, res


def _minimal(pi, iota):
    if iota is None:
        return True
    h = iota.shape[0]
    if h == 0:
        return True
    span = np.hstack([p @ iota for p in pi])
    s = np.linalg.svd(span, compute_uv=False)
    return int(np.sum(s > 1e-8 * s[0])) == h if s.size and s[0] > 0 else h == 0


def gns_construct(phi, table, d=None, alpha=None, tol=GNS_TOL):
    """Minimal dilation of a positive definite function on a finite table.

    ``phi`` is an array of d x d values per letter or a callable on letter
    indices. Without a unit the result carries no iota.
    """
    vals = letter_values(phi, table, d)
    d = vals.shape[1]
    m = table.size
    if alpha is not None:
        check = alpha_bounded_check(vals, table, alpha)
        if not check.holds:
            raise DomainError(f"phi is not alpha-bounded (margin {check.worst_margin:.3e} "
                              f"at {check.worst_pair})", witness=check.worst_pair)
    k = build_gram(vals, table)
    coords = _coordinates(k, tol)
    h = coords.x.shape[0]
    pis, rel = [], 0.0
    for s in range(m):
        targets = np.hstack([_block(coords.x, table.product(t, s), d) for t in range(m)])
        pi, res = _solve_pi(coords, targets)
        pis.append(pi)
        rel = max(rel, res)
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    if rel > tol * scale:
        raise IllConditionedError(
            f"right-translation relation residual {rel:.3e} exceeds tolerance",
            report={"residual": rel, "kept_eigenvalues": coords.lam.tolist(),
                    "condition": float(coords.lam[0] / coords.lam[-1]) if h else 0.0})
    hom = max((_norm(pis[table.product(s, t)] - pis[s] @ pis[t])
               for s in range(m) for t in range(m)), default=0.0)
    star = max((_norm(pis[table.star(s)] - pis[s].conj().T) for s in range(m)), default=0.0)
    iota = None
    residuals = None
    if table.unit is not None:
        iota = _block(coords.x, table.unit, d).copy()
        residuals = np.array([_norm(vals[s] - iota.conj().T @ pis[s] @ iota)
                              for s in range(m)])
    margin = None
    if alpha is not None:
        w = alpha.weights if isinstance(alpha, AbsoluteValue) else np.asarray(alpha, float)
        margin = max(_norm(pis[s]) - w[s] for s in range(m))
    return DilationResult(h, tuple(pis), iota, residuals, margin, _minimal(pis, iota), rel,
                          hom, star, coords.all_eigs, table.labels)


class AlphaBound(NamedTuple):
    holds: bool
    worst_margin: float
    worst_pair: tuple


def alpha_bounded_check(phi, table, alpha, tol=1e-9):
    """Check alpha(t)^2 phi(s^*s) - phi(s^* t^* t s) >= 0 for all letters s, t."""
    vals = letter_values(phi, table)
    w = alpha.weights if isinstance(alpha, AbsoluteValue) else np.asarray(alpha, float)
    worst, pair = math.inf, None
    star = table.star
    for s in range(table.size):
        ss = table.product(star(s), s)
        for t in range(table.size):
            tt = table.product(star(t), t)
            stts = table.product(table.product(star(s), tt), s)
            diff = w[t] ** 2 * vals[ss] - vals[stts]
            e = float(np.linalg.eigvalsh((diff + diff.conj().T) / 2)[0])
            if e < worst:
                worst, pair = e, (s, t)
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)) * max(1.0, float(w.max()) ** 2))
    return AlphaBound(worst >= -tol * scale, worst, pair)


# sample-based dilations

@dataclass(frozen=True, eq=False)
class SampleGNS:
    """GNS data of phi restricted to a finite sample of the ball."""

    phi: object
    samples: tuple
    coords: _Coordinates

    @property
    def h(self):
        return self.coords.x.shape[0]

    @property
    def d(self):
        return self.phi.dim

    def kernel_vector(self, x):
        """Coordinates of the projection of K_x^* onto the span of the sample kernels."""
        col = np.vstack([self.phi(alg.multiply(u, alg.adjoint(x))) for u in self.samples])
        c = self.coords
        return (c.v.conj().T @ col) / np.sqrt(c.lam)[:, None]

    def sample_vector(self, i):
        return _block(self.coords.x, i, self.d)

    def representation(self, s):
        """pi(s) from K_t pi(s) = K_{ts} over the samples t, with its residual."""
        targets = np.hstack([self.kernel_vector(alg.multiply(t, s)) for t in self.samples])
        return _solve_pi(self.coords, targets)


def gns_on_samples(phi, samples, tol=GNS_TOL):
    """Kernel coordinates for phi on a finite ball sample (not closed under products)."""
    samples = tuple(samples)
    rows = []
    for s in samples:
        row = []
        for t in samples:
            prod = alg.multiply(s, alg.adjoint(t))
            phi.check_domain(prod)
            row.append(phi(prod))
        rows.append(row)
    return SampleGNS(phi, samples, _coordinates(block_matrix(rows), tol))


def default_grid(levels=12):
    return tuple(1.0 - 2.0 ** -k for k in range(1, levels + 1))


def extrapolate(hs, values, order=2):
    """Neville extrapolation to h = 0 through the last order + 1 points."""
    hs = list(hs)[-(order + 1):]
    vals = [np.asarray(v, dtype=complex) for v in list(values)[-(order + 1):]]
    p = list(vals)
    n = len(hs)
    for level in range(1, n):
        for i in range(n - level):
            hi, hj = hs[i], hs[i + level]
            p[i] = (hj * p[i] - hi * p[i + 1]) / (hj - hi)
    return p[0]


@dataclass(frozen=True, eq=False)
class ScalingDilation:
    """Dilation obtained as iota = lim K_{gamma(r)}^* along a grid r -> 1."""

    dilation: DilationResult
    grid: tuple
    iota_norm_sq: float
    grid_max: float
    limit_estimate: float
    cauchy: tuple
    cauchy_ok: bool

    @property
    def bound(self):
        """Supremum estimate of ||phi(gamma(r))|| over the grid and its limit r -> 1."""
        return max(self.grid_max, self.limit_estimate)

    def bound_holds(self, slack=1e-6):
        return self.iota_norm_sq <= self.bound + slack

    def to_dict(self):
        return {"grid": list(self.grid), "iota_norm_sq": self.iota_norm_sq,
                "grid_max": self.grid_max, "limit_estimate": self.limit_estimate,
                "cauchy": list(self.cauchy), "cauchy_ok": self.cauchy_ok,
                "bound_holds": self.bound_holds(), "dilation": self.dilation.to_dict()}


def dilation_via_scaling(phi, grid=None, tol=1e-6, extra_samples=()):
    """Dilation of phi on the ball of a unital algebra with gamma(r) = r 1.

    iota(v) is the order-2 extrapolation of K_{gamma(r)}^* v to r = 1. The
    Cauchy differences ||K_r^* - K_s^*||^2 = ||phi(r^2) + phi(s^2) - phi(rs)
    - phi(rs)^*|| are reported for consecutive grid points.
    """
    grid = default_grid() if grid is None else tuple(sorted(float(r) for r in grid))
    one = alg.unit(phi.domain)

    def gam(r):
        return alg.scale(one, r)

    samples = [gam(r) for r in grid] + list(extra_samples)
    g = gns_on_samples(phi, samples, tol=GNS_TOL)
    hs = [1.0 - r for r in grid]
    vecs = [g.sample_vector(i) for i in range(len(grid))]
    iota = extrapolate(hs, vecs) if g.h else np.zeros((0, phi.dim), dtype=complex)
    cauchy = []
    for r, s in zip(grid, grid[1:]):
        rs = phi(gam(r * s))
        diff = phi(gam(r * r)) + phi(gam(s * s)) - rs - rs.conj().T
        cauchy.append(_norm(diff))
    norms = [_norm(phi(gam(r))) for r in grid]
    cauchy_ok = not cauchy or cauchy[-1] <= tol * max(1.0, max(norms))
    if not cauchy_ok:
        warnings.warn(f"Cauchy criterion fails at resolution: {cauchy[-1]:.3e} > {tol:.1e}",
                      NonDilatableWarning, stacklevel=2)
    limit = float(np.real(extrapolate(hs, norms)))
    pis, rel = [], 0.0
    for s in samples:
        pi, res = g.representation(s)
        pis.append(pi)
        rel = max(rel, res)
    residuals = np.array([_norm(phi(s) - iota.conj().T @ p @ iota) for s, p in zip(samples, pis)])
    hom = max((_norm(g.representation(alg.multiply(samples[i], samples[j]))[0]
                     - pis[i] @ pis[j]) for i in range(len(grid)) for j in range(len(grid))
               if grid[i] * grid[j] >= grid[0]), default=0.0)
    star = max((_norm(p - p.conj().T) for p in pis[:len(grid)]), default=0.0)
    labels = tuple(f"gamma({r:.12g})" for r in grid) + tuple(
        f"sample{i}" for i in range(len(extra_samples)))
    dil = DilationResult(g.h, tuple(pis), iota, residuals, None, _minimal(pis, iota), rel,
                         hom, star, g.coords.all_eigs, labels)
    iota_sq = _norm(iota.conj().T @ iota) if g.h else 0.0
    return ScalingDilation(dil, grid, iota_sq, max(norms), limit, tuple(cauchy), cauchy_ok)


class SpanDiagnostic(NamedTuple):
    norm: float
    residual: float


def span_diagnostic(phi, table, v):
    """Best approximation of s -> phi(s) v by functions in the kernel space.

    Returns the kernel-space norm of the approximation and the relative
    distance of the sampled function from it. A small residual is evidence,
    not proof, that phi v lies in the space.
    """
    vals = letter_values(phi, table)
    d = vals.shape[1]
    v = np.asarray(v, dtype=complex).reshape(d)
    k = build_gram(vals, table)
    coords = _coordinates(k, GNS_TOL)
    y = (vals @ v).reshape(-1)
    proj = coords.v.conj().T @ y
    approx = coords.v @ proj
    norm = math.sqrt(float(np.sum(np.abs(proj) ** 2 / coords.lam)))
    scale = max(float(np.linalg.norm(y)), 1e-300)
    return SpanDiagnostic(norm, float(np.linalg.norm(y - approx)) / scale)


class Intertwiner(NamedTuple):
    unitary: np.ndarray
    residual: float
    unitarity_defect: float

    def ok(self, tol=1e-8):
        return self.residual <= tol and self.unitarity_defect <= tol


def uniqueness_intertwiner(d1, d2):
    """Unitary U with U pi_1(s) iota_1 = pi_2(s) iota_2 for all letters."""
    for name, dd in (("first", d1), ("second", d2)):
        if dd.iota is None:
            raise NotMinimalError(f"{name} dilation has no iota; use a unital table")
        if not _minimal(dd.pi, dd.iota):
            raise NotMinimalError(f"{name} dilation is not minimal; rerun gns_construct")
    m1 = np.hstack([p @ d1.iota for p in d1.pi])
    m2 = np.hstack([p @ d2.iota for p in d2.pi])
    ut, *_ = np.linalg.lstsq(m1.conj().T, m2.conj().T, rcond=None)
    u = ut.conj().T
    residual = _norm(u @ m1 - m2)
    defect = _norm(u.conj().T @ u - np.eye(u.shape[1])) if u.shape[0] >= u.shape[1] else math.inf
    if u.shape[0] != u.shape[1]:
        defect = max(defect, _norm(u @ u.conj().T - np.eye(u.shape[0])))
    return Intertwiner(u, residual, defect)


class NondilatableRow(NamedTuple):
    n: int
    norm: float
    sqrt_n: float
    sup_phi: float


def _l1_truncation_norm(n, rng, extra):
    """RKHS norm of phi(a) = sum a_k on a sample of the l1(1..n) ball."""
    pts = [0.5 * np.eye(n)[k] for k in range(n)]
    for _ in range(extra):
        v = rng.standard_normal(n)
        pts.append(rng.uniform(0.1, 0.95) * v / np.abs(v).sum())
    t = np.array(pts)
    kern = t @ t.T                        # phi(a b^*) = sum a_k b_k
    y = t.sum(axis=1)                     # phi on the samples
    w, v = np.linalg.eigh(kern)
    keep = w >= RANK_RTOL * w[-1]
    proj = v[:, keep].T @ y
    norm = math.sqrt(float(np.sum(proj ** 2 / w[keep])))
    return norm, float(np.abs(y).max())


def nondilatable_demo(ns=(1, 4, 25, 100), seed=0, extra=8):
    """Norm of phi(a) = sum a_k in the GNS space of truncated l1 balls.

    The norm grows like sqrt(N), so phi itself escapes the Hilbert space
    although it is bounded by 1 on the ball.
    """
    if isinstance(ns, int):
        ns = (ns,)
    rows = []
    for n in sorted(int(x) for x in ns):
        if n < 1:
            raise ValueError("truncation size must be positive")
        rng = np.random.default_rng([seed, n])
        norm, sup = _l1_truncation_norm(n, rng, extra)
        rows.append(NondilatableRow(n, norm, math.sqrt(n), sup))
    increasing = all(a.norm < b.norm for a, b in zip(rows, rows[1:]))
    return {"rows": [r._asdict() for r in rows], "strictly_increasing": increasing}
