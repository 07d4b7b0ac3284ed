"""Homogeneous components, polarization and the interval case.

Components are read off by fitting t -> phi(t a) with a polynomial on
Chebyshev nodes inside (-1, 1); the coefficient of t^n is phi_n(a). This
stays in the real ball where phi is defined.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import nnls

from . import algebra as alg
from .errors import DegreeCapError, DomainError, StructuralError
from .functions import OperatorFunction, add_functions
from .gns import default_grid, extrapolate, gns_on_samples
from .positivity import (FAIL, complex_list, cp_sampled_check, gram_check, pd_function_check,
                         psd_check)
from .settings import resolve_tol, rng_for

FIT_TOL = 1e-8
HOMOGENEOUS = "HOMOGENEOUS"
NOT_HOMOGENEOUS = "NOT-HOMOGENEOUS"
NOT_HOMOGENEOUS_INTEGRAL = "NOT-HOMOGENEOUS-INTEGRAL"
ZERO = "ZERO"
EXTREME = "EXTREME"
NOT_EXTREME = "NOT-EXTREME"
CP = "CP"
NOT_CP = "NOT-CP"


def chebyshev_grid(degree_cap, count=None, radius=0.95):
    """Chebyshev nodes scaled to (-radius, radius); at least 2 (N + 1) of them."""
    m = max(2 * (degree_cap + 1), 8) if count is None else int(count)
    if m < degree_cap + 1:
        raise ValueError(f"need at least {degree_cap + 1} nodes for degree {degree_cap}")
    j = np.arange(m)
    return radius * np.cos((2 * j + 1) * np.pi / (2 * m))


def _vandermonde(t, n_cap):
    return np.vander(np.asarray(t, float), n_cap + 1, increasing=True)


def _fit(phi, a, grid, n_cap):
    """Coefficient matrices of t -> phi(t a) and the max residual at each cap."""
    ys = np.array([phi(alg.scale(a, float(t))).ravel() for t in grid])
    v = _vandermonde(grid, n_cap)
    coef, *_ = np.linalg.lstsq(v, ys, rcond=None)
    scale = max(1.0, float(np.abs(ys).max(initial=0.0)))
    res = float(np.abs(v @ coef - ys).max(initial=0.0)) / scale
    d = phi.dim
    return coef.reshape(n_cap + 1, d, d), res


def _residual_curve(phi, a, grid, n_cap):
    ys = np.array([phi(alg.scale(a, float(t))).ravel() for t in grid])
    scale = max(1.0, float(np.abs(ys).max(initial=0.0)))
    curve = []
    for k in range(n_cap + 1):
        v = _vandermonde(grid, k)
        coef, *_ = np.linalg.lstsq(v, ys, rcond=None)
        curve.append(float(np.abs(v @ coef - ys).max(initial=0.0)) / scale)
    return curve


def _component_values(phi, a, grid, n_cap):
    """All phi_n(a), rescaling a into the closed ball first when needed."""
    p = alg.seminorm(a)
    if p == 0.0:
        out = np.zeros((n_cap + 1, phi.dim, phi.dim), dtype=complex)
        out[0] = phi(a)
        return out
    c = max(1.0, p)
    coef, _ = _fit(phi, alg.scale(a, 1.0 / c), grid, n_cap)
    return coef * (c ** np.arange(n_cap + 1))[:, None, None]


@dataclass(frozen=True, eq=False)
class Expansion:
    """phi = phi_0 + ... + phi_N on the fitted samples."""

    phi: OperatorFunction
    degree_cap: int
    components: tuple
    samples: tuple
    values: np.ndarray       # samples x (N + 1) x d x d
    residuals: np.ndarray
    sup_norms: np.ndarray
    t_grid: np.ndarray
    claim: str

    def evaluate_all(self, a):
        return _component_values(self.phi, a, self.t_grid, self.degree_cap)

    def homogeneity_residual(self, t=0.37):
        """max ||phi_n(t a) - t^n phi_n(a)|| using fits not shared with the stored values."""
        worst = 0.0
        for a, vals in zip(self.samples, self.values):
            direct, _ = _fit(self.phi, alg.scale(a, t), self.t_grid, self.degree_cap)
            powers = t ** np.arange(self.degree_cap + 1)
            worst = max(worst, float(np.abs(direct - powers[:, None, None] * vals).max()))
        return worst

    def to_dict(self):
        return {"degree_cap": self.degree_cap, "claim": self.claim,
                "residuals": [float(r) for r in self.residuals],
                "sup_norms": {str(n): float(s) for n, s in enumerate(self.sup_norms)},
                "t_grid": [float(t) for t in self.t_grid]}


def _component_function(phi, n, grid, n_cap):
    def fn(a):
        return _component_values(phi, a, grid, n_cap)[n]
    return OperatorFunction(fn, phi.domain, phi.dim, f"{phi.name or 'phi'}_{n}", n,
                            phi.closed, extends_homogeneously=True)


def extract_components(phi, samples, degree_cap, t_grid=None, tol=FIT_TOL, dilatable=None):
    """Fit the homogeneous components of phi on each sample.

    Raises DegreeCapError with the residual curve of the worst sample when
    degree ``degree_cap`` does not reproduce phi along the grid. Inputs on
    non-unital domains are tagged ``NO-CLAIM`` unless ``dilatable`` is set,
    since a series expansion is only guaranteed for dilatable functions.
    """
    n_cap = int(degree_cap)
    grid = chebyshev_grid(n_cap) if t_grid is None else np.asarray(t_grid, float)
    if len(set(np.round(grid, 15))) < n_cap + 1 or np.any(np.abs(grid) >= 1):
        raise ValueError(f"t_grid needs {n_cap + 1} distinct points in (-1, 1)")
    samples = tuple(samples)
    vals, res = [], []
    for a in samples:
        phi.check_domain(a)
        coef, r = _fit(phi, a, grid, n_cap)
        vals.append(coef)
        res.append(r)
    res = np.array(res)
    if res.size and res.max() > tol:
        worst = int(np.argmax(res))
        raise DegreeCapError(
            f"degree cap {n_cap} leaves fit residual {res.max():.3e} > {tol:.1e}",
            residuals=_residual_curve(phi, samples[worst], grid, n_cap))
    values = np.array(vals) if vals else np.zeros((0, n_cap + 1, phi.dim, phi.dim))
    sups = np.array([max((float(np.linalg.norm(v[n], 2)) for v in values), default=0.0)
                     for n in range(n_cap + 1)])
    comps = tuple(_component_function(phi, n, grid, n_cap) for n in range(n_cap + 1))
    if dilatable is None:
        dilatable = phi.domain.is_unital
    claim = "EXPANSION" if dilatable else "NO-CLAIM"
    return Expansion(phi, n_cap, comps, samples, values, res, sups, grid, claim)


class BoundsReport(NamedTuple):
    phi_sup: float
    component_sups: tuple
    holds: tuple
    skipped: str
    component_cp: tuple

    @property
    def all_hold(self):
        return self.skipped is None and all(self.holds)

    def to_dict(self):
        return {"phi_sup": self.phi_sup, "component_sups": list(self.component_sups),
                "holds": list(self.holds), "skipped": self.skipped,
                "component_cp": [v.to_dict() for v in self.component_cp]}


def sup_estimate(phi, samples):
    """max ||phi|| over samples, plus the boundary limit along r 1 for unital domains."""
    best = max((float(np.linalg.norm(phi(a), 2)) for a in samples), default=0.0)
    d = phi.domain
    if d.is_unital:
        one = alg.unit(d)
        grid = default_grid()
        norms = [float(np.linalg.norm(phi(alg.scale(one, r)), 2)) for r in grid]
        best = max(best, max(norms), float(np.real(extrapolate([1 - r for r in grid], norms))))
    return best


def component_bounds_check(e, phi, ball_samples, cp_certified=None, tol=1e-6,
                           component_trials=0, seed=0):
    """Compare sup ||phi_n|| with sup ||phi|| over ``ball_samples``.

    Component sups include phi_n(1) on unital domains (the closure of the
    ball). Unless ``cp_certified`` is given, a 100-trial sampled CP check
    decides whether the bound applies; NOT-CP inputs are skipped.
    """
    if cp_certified is None:
        cp_certified = cp_sampled_check(phi, trials=100, seed=seed).verdict != FAIL
    ball_samples = list(ball_samples)
    phi_sup = sup_estimate(phi, ball_samples)
    extra = [alg.unit(phi.domain)] if phi.domain.is_unital else []
    sups = []
    for comp in e.components:
        pts = ball_samples + extra
        sups.append(max((float(np.linalg.norm(comp(a), 2)) for a in pts), default=0.0))
    if not cp_certified:
        return BoundsReport(phi_sup, tuple(sups), tuple(), NOT_CP, tuple())
    holds = tuple(s <= phi_sup + tol for s in sups)
    verdicts = tuple(cp_sampled_check(c, trials=component_trials, seed=seed)
                     for c in e.components) if component_trials else tuple()
    return BoundsReport(phi_sup, tuple(sups), holds, None, verdicts)


def _homogeneous_eval(phi_n, x, n):
    p = alg.seminorm(x)
    if p < 0.9 or phi_n.extends_homogeneously:
        return phi_n(x)
    c = p / 0.9
    return phi_n(alg.scale(x, 1.0 / c)) * c ** n


def polarize(phi_n, args, check=True, tol=1e-8):
    """Symmetric multilinear form beta with beta(a, ..., a) = phi_n(a).

    Uses the sign-sum formula with the arguments scaled by 1/n; homogeneity
    compensates the scale, and sums leaving the ball are rescaled the same way.
    """
    n = phi_n.degree
    if n is None:
        raise DomainError("polarize needs a degree-tagged component")
    args = list(args)
    if len(args) != n:
        raise DomainError(f"degree {n} component takes {n} arguments, got {len(args)}")
    if n == 0:
        return phi_n(alg.zero(phi_n.domain))
    if check:
        a = args[0]
        p = alg.seminorm(a)
        if p > 0:
            base = alg.scale(a, 0.5 / p)
            lhs = phi_n(alg.scale(base, 0.5))
            rhs = 0.5 ** n * phi_n(base)
            if np.abs(lhs - rhs).max() > tol * max(1.0, float(np.abs(phi_n(base)).max())):
                raise DomainError(f"component is not homogeneous of degree {n}")
    total = np.zeros((phi_n.dim, phi_n.dim), dtype=complex)
    for eps in np.ndindex(*(2,) * n):
        signs = 1 - 2 * np.array(eps)
        x = alg.scale(args[0], signs[0] / n)
        for s, a in zip(signs[1:], args[1:]):
            x = alg.add(x, alg.scale(a, s / n))
        total = total + np.prod(signs) * _homogeneous_eval(phi_n, x, n)
    return total * n ** n / (2 ** n * math.factorial(n))


class SeriesPdReport(NamedTuple):
    per_degree: dict
    sum_certificate: object

    @property
    def all_components_pd(self):
        return all(c.passed for c in self.per_degree.values())

    @property
    def sum_pd(self):
        return self.sum_certificate.passed

    @property
    def equivalent(self):
        """True when the sum and the components agree on positive definiteness."""
        return self.all_components_pd == self.sum_pd

    def to_dict(self):
        return {"per_degree": {str(k): v.to_dict() for k, v in self.per_degree.items()},
                "sum": self.sum_certificate.to_dict(), "equivalent": self.equivalent}


def _sum_function(components):
    total = components[0]
    for c in components[1:]:
        total = add_functions(total, c)
    return total


def series_pd_check(components, samples, tol=None):
    """Positive definiteness of each component and of their sum on the sample tuple."""
    components = list(components)
    degrees = [c.degree if c.degree is not None else i for i, c in enumerate(components)]
    if len(set(degrees)) != len(degrees):
        raise StructuralError(f"components need distinct degrees, got {degrees}")
    samples = list(samples)
    per = {deg: pd_function_check(c, samples, tol) for deg, c in zip(degrees, components)}
    return SeriesPdReport(per, pd_function_check(_sum_function(components), samples, tol))


def find_pd_violation(phi, size=3, draws=200, seed=0, tol=None):
    """Seeded search over random ball tuples for a failing Gram matrix."""
    for k in range(draws):
        rng = rng_for(seed, "expand.pd_search", k)
        tup = [alg.random_ball_element(phi.domain, rng, float(rng.uniform(0.1, 0.95)))
               for _ in range(size)]
        cert = pd_function_check(phi, tup, tol)
        if not cert.passed:
            return tup, cert
    return None


# the interval case A = R

@dataclass(frozen=True, eq=False)
class CpSeries:
    """phi(t) = sum_n t^n a_n with positive semidefinite coefficients."""

    coefficients: tuple

    def __post_init__(self):
        coefs = []
        for c in self.coefficients:
            c = np.atleast_2d(np.asarray(c, dtype=complex)).copy()
            c.setflags(write=False)
            coefs.append(c)
        if not coefs:
            raise StructuralError("a series needs at least one coefficient")
        if len({c.shape for c in coefs}) != 1:
            raise StructuralError("coefficients of different shapes")
        for n, c in enumerate(coefs):
            cert = psd_check((c + c.conj().T) / 2) if np.allclose(c, c.conj().T) else None
            if cert is None or not cert.passed:
                raise StructuralError(f"coefficient {n} is not positive semidefinite")
        object.__setattr__(self, "coefficients", tuple(coefs))

    @classmethod
    def scalar(cls, coefs):
        return cls(tuple(np.array([[c]]) for c in coefs))

    @property
    def degree_cap(self):
        return len(self.coefficients) - 1

    @property
    def dim(self):
        return self.coefficients[0].shape[0]

    @property
    def total_mass(self):
        return float(sum(np.linalg.norm(c, 2) for c in self.coefficients))

    def scalars(self):
        return np.array([c[0, 0].real for c in self.coefficients])

    def __call__(self, t):
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c in reversed(self.coefficients):
            out = out * t + c
        return out

    def as_function(self, domain=None, name="series"):
        domain = alg.make_matrix_algebra(1, "R") if domain is None else domain
        return OperatorFunction(lambda a: self(complex(a.data[0, 0])), domain, self.dim, name)

    def to_dict(self):
        return {"degree_cap": self.degree_cap, "total_mass": self.total_mass,
                "coefficients": [complex_list(c) for c in self.coefficients]}


class IntervalFit(NamedTuple):
    series: CpSeries
    residual: float
    verdict: str
    converged: bool
    iterations: int

    def to_dict(self):
        return {"series": self.series.to_dict(), "residual": self.residual,
                "verdict": self.verdict, "converged": self.converged,
                "iterations": self.iterations}


def _psd_project(m):
    h = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(h)
    return (v * np.clip(w, 0, None)) @ v.conj().T


def _matrix_fit(v, ys, max_iter):
    """Block-coordinate least squares with each coefficient projected onto the PSD cone."""
    coef, *_ = np.linalg.lstsq(v, ys.reshape(len(ys), -1), rcond=None)
    d = ys.shape[1]
    coef = coef.reshape(-1, d, d)
    if all(psd_check((c + c.conj().T) / 2).passed and np.allclose(c, c.conj().T, atol=1e-12)
           for c in coef):
        return coef, True, 0
    coef = np.array([_psd_project(c) for c in coef])
    norms = (v ** 2).sum(axis=0)
    for it in range(1, max_iter + 1):
        prev = coef.copy()
        for n in range(coef.shape[0]):
            if norms[n] == 0:
                continue
            rest = np.einsum("tk,kij->tij", v, coef) - v[:, n, None, None] * coef[n]
            target = np.einsum("t,tij->ij", v[:, n], ys - rest) / norms[n]
            coef[n] = _psd_project(target)
        if np.abs(coef - prev).max() <= 1e-15 * max(1.0, np.abs(coef).max()):
            return coef, True, it
    return coef, False, max_iter


def interval_fit(samples, degree_cap, tol=FIT_TOL, max_iter=200):
    """Nonnegative (PSD) series fit of sampled values of a function on (-1, 1)."""
    samples = list(samples)
    n_cap = int(degree_cap)
    if len(samples) < n_cap + 1:
        raise ValueError(f"need at least {n_cap + 1} samples")
    ts = np.array([float(t) for t, _ in samples])
    if np.any(np.abs(ts) >= 1):
        raise DomainError("sample points must lie in (-1, 1)")
    ys = np.array([np.atleast_2d(np.asarray(y, dtype=complex)) for _, y in samples])
    v = _vandermonde(ts, n_cap)
    scalar = ys.shape[1] == 1 and np.all(ys.imag == 0)
    if scalar:
        coef, _ = nnls(v, ys[:, 0, 0].real)
        coefs = coef.reshape(-1, 1, 1).astype(complex)
        converged, iters = True, 0
    else:
        coefs, converged, iters = _matrix_fit(v, ys, max_iter)
    fitted = np.einsum("tk,kij->tij", v, coefs)
    scale = max(1.0, float(np.abs(ys).max()))
    residual = float(np.abs(fitted - ys).max()) / scale
    verdict = CP if residual <= tol and converged else NOT_CP
    series = CpSeries(tuple(_psd_project(c) for c in coefs))
    return IntervalFit(series, residual, verdict, converged, iters)


def interval_samples(f, count=40, radius=0.95):
    """(t, f(t)) on Chebyshev nodes, for feeding interval_fit."""
    return [(float(t), f(float(t))) for t in chebyshev_grid(0, count, radius)]


class CharacterVerdict(NamedTuple):
    verdict: str
    degree: int


def extreme_character_check(s, tol=1e-9):
    """EXTREME exactly when the series is a single character t^n."""
    if s.dim != 1:
        raise StructuralError("extreme_character_check takes scalar series")
    a = s.scalars()
    if s.total_mass > 1 + tol:
        raise DomainError(f"total mass {s.total_mass:.6g} exceeds 1")
    support = np.flatnonzero(np.abs(a) > tol)
    if len(support) == 1 and abs(a[support[0]] - 1) <= tol:
        return CharacterVerdict(EXTREME, int(support[0]))
    return CharacterVerdict(NOT_EXTREME, -1)


class HomogeneityVerdict(NamedTuple):
    verdict: str
    degree: float
    fit_residual: float

    def to_dict(self):
        return {"verdict": self.verdict, "degree": self.degree,
                "fit_residual": self.fit_residual}


def homogeneity_degree_test(phi, samples, t_grid=None, tol=1e-6):
    """Estimate alpha with phi(t a) = t^alpha phi(a) for t > 0.

    The exponent is the slope of log ||phi(t a)|| against log t; the matrix
    identity is then checked directly so that e.g. diag(1, t z) is not
    mistaken for a degree-0 function.
    """
    grid = np.geomspace(0.05, 0.95, 12) if t_grid is None else np.asarray(t_grid, float)
    if np.any(grid <= 0):
        raise ValueError("homogeneity grid must be positive")
    slopes, worst = [], 0.0
    for a in samples:
        vals = [phi(alg.scale(a, float(t))) for t in grid]
        norms = np.array([np.linalg.norm(v, 2) for v in vals])
        scale = max(float(norms.max()), 1e-300)
        if norms.max() <= 1e-14:
            continue
        if norms.min() <= 1e-14 * scale:
            return HomogeneityVerdict(NOT_HOMOGENEOUS, math.nan, math.inf)
        slope, icpt = np.polyfit(np.log(grid), np.log(norms), 1)
        ref = vals[-1] / grid[-1] ** slope
        mismatch = max(float(np.abs(v - t ** slope * ref).max()) for t, v in zip(grid, vals))
        worst = max(worst, mismatch / scale)
        slopes.append(slope)
    if not slopes:
        return HomogeneityVerdict(ZERO, math.nan, 0.0)
    if worst > tol or np.ptp(slopes) > tol:
        return HomogeneityVerdict(NOT_HOMOGENEOUS, float(np.mean(slopes)), worst)
    alpha = float(np.mean(slopes))
    if abs(alpha - round(alpha)) <= tol:
        return HomogeneityVerdict(HOMOGENEOUS, float(round(alpha)), worst)
    return HomogeneityVerdict(NOT_HOMOGENEOUS_INTEGRAL, alpha, worst)


class SeriesSpectrum(NamedTuple):
    degrees: tuple
    deviation: float
    offdiagonal: float


def series_gns_spectrum(series, grid=(0.5, 0.6, 0.7, 0.8, 0.9, 0.95)):
    """Simultaneously diagonalize the GNS operators pi(r) of a series on a grid.

    Each eigenvalue family r -> lambda(r) is matched with the character
    r -> r^n closest to it; returns the matched degrees and the worst deviation.
    """
    phi = series.as_function()
    d = phi.domain
    samples = [alg.element(d, [[r]]) for r in grid]
    g = gns_on_samples(phi, samples)
    pis = [g.representation(s)[0] for s in samples]
    rng = np.random.default_rng(0)
    combo = sum(c * (p + p.conj().T) / 2 for c, p in zip(rng.uniform(0.5, 1.5, len(pis)), pis))
    _, u = np.linalg.eigh(combo)
    diag = np.array([np.diag(u.conj().T @ p @ u).real for p in pis])
    off = max(float(np.abs(u.conj().T @ p @ u - np.diag(np.diag(u.conj().T @ p @ u))).max())
              for p in pis)
    rs = np.array(grid)
    degrees, dev = [], 0.0
    for j in range(diag.shape[1]):
        errs = [np.abs(diag[:, j] - rs ** n).max() for n in range(series.degree_cap + 1)]
        n = int(np.argmin(errs))
        degrees.append(n)
        dev = max(dev, float(errs[n]))
    return SeriesSpectrum(tuple(sorted(degrees)), dev, off)
