"""Enveloping C*-algebras, tensor and symmetric powers, and the Gamma map.

Every C*-target is realized as an algebra of block-diagonal complex
matrices (a ``CSTAR`` descriptor). Symmetric powers are linear subspaces
of the full Kronecker algebra with a cached orthonormal basis for the
Frobenius inner product.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache, reduce

import numpy as np

from . import algebra as alg
from .algebra import AlgebraDescriptor, Element, Field, Kind
from .errors import DomainError, StructuralError, UnsupportedOperationError

MAX_CHARACTER_LETTERS = 12
MAX_BASIS_ENTRIES = 1 << 23


def _kron_all(mats):
    return reduce(np.kron, mats, np.ones((1, 1), dtype=complex))


# commutative semigroups

def _period(table, s):
    """Index and period of the cyclic subsemigroup generated by s."""
    seen = {}
    power, k = s, 1
    while power not in seen:
        seen[power] = k
        power = table.product(power, s)
        k += 1
    return seen[power], k - seen[power]


def _roots_of_unity(p):
    exact = {1: [1.0 + 0j], 2: [1.0 + 0j, -1.0 + 0j], 4: [1.0 + 0j, 1j, -1.0 + 0j, -1j]}
    if p in exact:
        return exact[p]
    return [complex(np.exp(2j * np.pi * k / p)) for k in range(p)]


@lru_cache(maxsize=None)
def characters(d):
    """All nonzero characters chi of a commutative semigroup algebra with |chi| <= alpha.

    A character is a multiplicative map S -> C with chi(s*) = conj(chi(s)).
    Values are 0 or roots of unity (periods of cyclic subsemigroups), so the
    enumeration is exact. Returns an array of shape (count, letters).
    """
    if d.kind is not Kind.SEMIGROUP:
        raise StructuralError(f"{d.name} is not a semigroup algebra")
    table = d.table
    m = table.size
    if m > MAX_CHARACTER_LETTERS:
        raise UnsupportedOperationError(
            f"character enumeration supports at most {MAX_CHARACTER_LETTERS} letters")
    if not table.is_commutative:
        raise UnsupportedOperationError("envelope of a non-commutative semigroup algebra")
    alpha = d.alpha.weights
    cands = []
    for s in range(m):
        _, p = _period(table, s)
        vals = [0j] + [z for z in _roots_of_unity(p) if alpha[s] >= 1 - 1e-12]
        cands.append(vals)
    found = []
    chi = [None] * m

    def consistent(j):
        for s in range(j + 1):
            for t in range(j + 1):
                st = table.product(s, t)
                if st <= j and j in (s, t, st):
                    if abs(chi[s] * chi[t] - chi[st]) > 1e-9:
                        return False
        sj = table.star(j)
        if sj <= j and abs(chi[sj] - np.conj(chi[j])) > 1e-9:
            return False
        return True

    def search(j):
        if j == m:
            if any(abs(v) > 0 for v in chi):
                found.append(list(chi))
            return
        for v in cands[j]:
            chi[j] = v
            if consistent(j):
                search(j + 1)
        chi[j] = None

    search(0)
    out = np.array(found, dtype=complex).reshape(len(found), m)
    out.setflags(write=False)
    return out


# C*-targets

def cstar_basis(d):
    """Complex basis of a CSTAR descriptor: Kronecker products of block matrix units."""
    per_factor = []
    for blocks in d.blocks:
        k = sum(blocks)
        units = []
        start = 0
        for b in blocks:
            for i in range(b):
                for j in range(b):
                    e = np.zeros((k, k), dtype=complex)
                    e[start + i, start + j] = 1.0
                    units.append(e)
            start += b
        per_factor.append(units)
    return [_kron_all(combo) for combo in itertools.product(*per_factor)]


def cstar_mask(d):
    """0/1 mask of the entries allowed in the CSTAR algebra ``d``."""
    masks = []
    for blocks in d.blocks:
        labels = np.repeat(np.arange(len(blocks)), blocks)
        masks.append((labels[:, None] == labels[None, :]).astype(float))
    return reduce(np.kron, masks, np.ones((1, 1)))


def pinch(d, x):
    """Conditional expectation of M_K(C) onto the CSTAR algebra ``d``."""
    return np.asarray(x) * cstar_mask(d)


@dataclass(frozen=True, eq=False)
class EnvelopingMap:
    """Canonical map eta from ``source`` into the C*-algebra ``target``."""

    source: AlgebraDescriptor
    target: AlgebraDescriptor
    _eta: object = field(repr=False)

    def __call__(self, a):
        """eta(a) as a complex matrix of the target realization."""
        if a.algebra != self.source:
            raise StructuralError(f"mixed algebras: {a.algebra.name} vs {self.source.name}")
        return np.asarray(self._eta(a), dtype=complex)

    def element(self, a):
        return alg.element(self.target, self(a))

    @property
    def matrix(self):
        """eta as a real matrix from basis coordinates to [Re vec; Im vec] of the target."""
        cols = [alg.vector(self.element(b)) for b in alg.basis(self.source)]
        return np.array(cols).T

    def homomorphism_residual(self, a, b):
        ab = self(alg.multiply(a, b))
        prod = self(a) @ self(b)
        star = self(alg.adjoint(a)) - self(a).conj().T
        return max(float(np.abs(ab - prod).max(initial=0)),
                   float(np.abs(star).max(initial=0)))


def _matrix_eta(d):
    if d.field is Field.COMPLEX:
        n = d.n

        def eta(a):
            out = np.zeros((2 * n, 2 * n), dtype=complex)
            out[:n, :n] = a.data
            out[n:, n:] = a.data.conj()
            return out
        return alg.cstar_algebra(((n, n),)), eta
    return alg.cstar_algebra(((d.realization_dim,),)), lambda a: a.data


def envelope(d):
    """Enveloping C*-algebra of ``d`` with its canonical map."""
    return _envelope(d)


@lru_cache(maxsize=None)
def _envelope(d):
    kind = d.kind
    if kind is Kind.MATRIX:
        target, eta = _matrix_eta(d)
    elif kind is Kind.CSTAR:
        target, eta = d, (lambda a: a.data)
    elif kind is Kind.SEMIGROUP:
        chars = characters(d)

        def eta(a, chars=chars):
            return np.diag(chars @ a.data)
        target = alg.cstar_algebra(((1,) * len(chars),))
    elif kind is Kind.UNITIZATION:
        inner = envelope(d.inner)
        if len(inner.target.blocks) != 1:
            raise UnsupportedOperationError("unitization of a tensor-product envelope")
        target = alg.cstar_algebra((inner.target.blocks[0] + (1,),))
        k = inner.target.realization_dim

        def eta(a, inner=inner, k=k):
            x, lam = a.data
            out = np.zeros((k + 1, k + 1), dtype=complex)
            out[:k, :k] = inner(x) + lam * np.eye(k)
            out[k, k] = lam
            return out
    elif kind is Kind.COMPLEXIFICATION:
        inner = envelope(d.inner)
        target = inner.target

        def eta(a, inner=inner):
            x, y = a.data
            return inner(x) + 1j * inner(y)
    elif kind is Kind.TENSOR:
        blocks = tuple(b for f in d.factors for b in envelope(f).target.blocks)
        target = alg.cstar_algebra(blocks)
        eta = lambda a: a.data  # noqa: E731
    else:
        raise UnsupportedOperationError(
            f"envelope of {d.name}: use symmetric_power on the envelope target")
    return EnvelopingMap(d, target, eta)


def unitize_envelope(env):
    """C*-unitization of the target of ``env``, composed with the unitized map.

    The adjoined one-dimensional block is placed first, so comparing with
    envelope(unitize(d)) requires the permutation returned alongside.
    """
    inner = env
    k = inner.target.realization_dim
    target = alg.cstar_algebra(((1,) + inner.target.blocks[0],))
    source = alg.unitize(env.source)

    def eta(a):
        x, lam = a.data
        out = np.zeros((k + 1, k + 1), dtype=complex)
        out[0, 0] = lam
        out[1:, 1:] = inner(x) + lam * np.eye(k)
        return out
    perm = np.roll(np.eye(k + 1), 1, axis=0)
    return EnvelopingMap(source, target, eta), perm


def eta_choi(env):
    """Choi matrix of the complex-linear extension of eta.

    The complexified source is realized as diag(rho(x) + i rho(y),
    conj(rho(x)) + i conj(rho(y))); the extension is composed with the
    Frobenius projection onto that *-subalgebra, which is a conditional
    expectation, so the Choi matrix is PSD exactly when eta is CP.
    """
    from .positivity import choi
    src = env.source
    cd = alg.complexify(src)
    z0 = alg.zero(src)
    b = alg.basis(src)
    reals = [alg.realize(Element(cd, (x, z0))) for x in b]
    kk = reals[0].shape[0]
    rmat = np.array([r.ravel() for r in reals]).T
    images = np.array([env(x) for x in b])

    def lift(x):
        c, *_ = np.linalg.lstsq(rmat, np.asarray(x).ravel(), rcond=None)
        return np.tensordot(c, images, axes=1)
    return choi(lift, kk)


# tensor products

def tensor_product(ds):
    """Real tensor product realized by Kronecker products of envelope realizations."""
    ds = tuple(ds)
    if not ds:
        raise ValueError("tensor_product needs at least one factor")
    dim = int(np.prod([alg.envelope_dim(x) for x in ds]))
    name = "(x)".join(x.name for x in ds)
    return AlgebraDescriptor(Kind.TENSOR, dim, "operator", name, factors=ds)


def tensor_element(d, parts):
    """a_1 (x) ... (x) a_n realized as the Kronecker product of eta(a_i)."""
    if d.kind is not Kind.TENSOR or len(parts) != len(d.factors):
        raise StructuralError(f"{d.name} needs {len(d.factors)} tensor factors")
    mats = [envelope(f)(p) for f, p in zip(d.factors, parts)]
    return alg.element(d, _kron_all(mats))


def real_basis_matrices(d):
    """Matrices spanning ``d`` over the reals (TENSOR and SYMMETRIC_POWER kinds)."""
    if d.kind is Kind.TENSOR:
        per = [[envelope(f)(b) for b in alg.basis(f)] for f in d.factors]
        return [_kron_all(c) for c in itertools.product(*per)]
    space = sym_space(d)
    vecs = space.basis_matrices()
    if space.is_complex:
        return vecs + [1j * v for v in vecs]
    return vecs


def random_matrix_in(d, rng):
    """Random element of a matrix-realized algebra, as a matrix."""
    k = d.realization_dim
    if d.kind is Kind.CSTAR:
        return pinch(d, rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)))
    if d.kind is Kind.TENSOR:
        out = np.zeros((k, k), dtype=complex)
        for _ in range(4):
            parts = [alg.random_element(f, rng) for f in d.factors]
            out += tensor_element(d, parts).data
        return out
    if d.kind is Kind.SYMMETRIC_POWER:
        space = sym_space(d)
        if space.is_complex:
            c = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
        else:
            c = rng.standard_normal(space.dim)
        return space.from_coords(c)
    raise UnsupportedOperationError(f"random matrix in {d.name}")


# symmetric powers

def permutation_conjugate(x, k, n, perm):
    """sigma x sigma^{-1} for the permutation of tensor legs ``perm``."""
    t = np.asarray(x).reshape([k] * (2 * n))
    axes = list(perm) + [n + p for p in perm]
    return t.transpose(axes).reshape(k ** n, k ** n)


def permutation_operator(k, n, perm):
    """Unitary P_sigma with P_sigma x P_sigma^T = permutation_conjugate(x, ...)."""
    eye = np.eye(k ** n).reshape([k] * n + [k ** n])
    return eye.transpose(list(perm) + [n]).reshape(k ** n, k ** n)


def symmetrize_matrix(x, k, n):
    """q(x) = (1/n!) sum over sigma of sigma x sigma^{-1}."""
    if n <= 1:
        return np.array(x, dtype=complex)
    acc = np.zeros((k ** n, k ** n), dtype=complex)
    for perm in itertools.permutations(range(n)):
        acc += permutation_conjugate(x, k, n, perm)
    return acc / math.factorial(n)


def _equal_factor_degree(d):
    if d.kind is not Kind.TENSOR:
        raise StructuralError("symmetrize needs an element of a tensor power")
    first = d.factors[0]
    if any(f != first for f in d.factors):
        raise StructuralError("symmetrize needs all tensor factors equal")
    return alg.envelope_dim(first), len(d.factors)


def symmetrize(x):
    """Fixed-point projection q on A^{(x)n}; returns an element of the same tensor power."""
    k, n = _equal_factor_degree(x.algebra)
    return alg.element(x.algebra, symmetrize_matrix(x.data, k, n))


def symmetric_power(d, n):
    """S^n(d): fixed points of the symmetric group in the n-fold Kronecker realization.

    S^0 is the complex scalars. The orthonormal coordinate basis is
    computed on first use and cached.
    """
    n = int(n)
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if n == 0:
        return AlgebraDescriptor(Kind.SYMMETRIC_POWER, 1, "operator", "S^0=C", n=0)
    k = alg.envelope_dim(d)
    return AlgebraDescriptor(Kind.SYMMETRIC_POWER, k ** n, "operator",
                             f"S^{n}({d.name})", n=n, inner=d)


@dataclass(frozen=True, eq=False)
class SymmetricPowerSpace:
    """Orthonormal (Frobenius) basis of S^n as columns of ``q``.

    For complex spaces the columns are complex vectors of length K^2; for
    real spans they are real vectors [Re vec; Im vec] of length 2K^2.
    """

    descriptor: AlgebraDescriptor
    k: int
    n: int
    is_complex: bool
    q: np.ndarray

    @property
    def size(self):
        return self.k ** self.n

    @property
    def dim(self):
        return self.q.shape[1]

    def _to_vec(self, x):
        x = np.asarray(x, dtype=complex).ravel()
        return x if self.is_complex else np.concatenate([x.real, x.imag])

    def _from_vec(self, v):
        kk = self.size * self.size
        if not self.is_complex:
            v = v[:kk] + 1j * v[kk:]
        return np.asarray(v).reshape(self.size, self.size)

    def coords(self, x):
        if self.is_complex:
            return self.q.conj().T @ self._to_vec(x)
        return self.q.T @ self._to_vec(x)

    def from_coords(self, c):
        return self._from_vec(self.q @ c)

    def project(self, x):
        return self.from_coords(self.coords(x))

    def membership_residual(self, x):
        x = np.asarray(x, dtype=complex)
        return float(np.linalg.norm(x - self.project(x)))

    def basis_matrices(self):
        return [self._from_vec(self.q[:, j]) for j in range(self.dim)]


def _generators(d):
    """Matrices whose span (real or complex) generates S^1 for the inner algebra."""
    if d.kind is Kind.CSTAR:
        return cstar_basis(d), True
    env = envelope(d)
    return [env(b) for b in alg.basis(d)], False


def sym_space(d):
    """Cached orthonormal basis for the SYMMETRIC_POWER descriptor ``d``."""
    return _sym_space(d)


@lru_cache(maxsize=None)
def _sym_space(d):
    if d.kind is not Kind.SYMMETRIC_POWER:
        raise StructuralError(f"{d.name} is not a symmetric power")
    n = d.n
    if n == 0:
        return SymmetricPowerSpace(d, 1, 0, True, np.ones((1, 1), dtype=complex))
    gens, is_complex = _generators(d.inner)
    k = gens[0].shape[0]
    count = math.comb(len(gens) + n - 1, n)
    if count * (k ** n) ** 2 > MAX_BASIS_ENTRIES:
        raise DomainError(
            f"S^{n} of {d.inner.name} needs a {count} x {(k ** n) ** 2} basis; "
            "lower the degree cap or the matrix size")
    rows = []
    for combo in itertools.combinations_with_replacement(range(len(gens)), n):
        t = symmetrize_matrix(_kron_all([gens[i] for i in combo]), k, n).ravel()
        rows.append(t if is_complex else np.concatenate([t.real, t.imag]))
    g = np.array(rows)
    _, s, vh = np.linalg.svd(g, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    q = vh[:rank].conj().T if is_complex else vh[:rank].T
    q.setflags(write=False)
    return SymmetricPowerSpace(d, k, n, is_complex, q)


def sym_expectation(d, x):
    """Frobenius projection of M_{K}(C) onto the symmetric power ``d``."""
    return sym_space(d).project(x)


# truncated exponential algebra

@dataclass(frozen=True, eq=False)
class ExpElement:
    """(b_0, ..., b_N) with b_k in S^k of the target; b_0 is a 1x1 matrix."""

    components: tuple

    def __post_init__(self):
        comps = []
        for c in self.components:
            c = np.array(c, dtype=complex)
            if c.ndim == 0:
                c = c.reshape(1, 1)
            c.setflags(write=False)
            comps.append(c)
        object.__setattr__(self, "components", tuple(comps))

    @property
    def degree_cap(self):
        return len(self.components) - 1

    def __getitem__(self, k):
        return self.components[k]

    def __mul__(self, other):
        if isinstance(other, ExpElement):
            _same_cap(self, other)
            return ExpElement(tuple(a @ b for a, b in zip(self.components, other.components)))
        return ExpElement(tuple(other * a for a in self.components))

    __rmul__ = __mul__

    def __add__(self, other):
        _same_cap(self, other)
        return ExpElement(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other):
        return self + (-1.0) * other

    def adjoint(self):
        return ExpElement(tuple(a.conj().T for a in self.components))

    def to_list(self):
        return [[[float(z.real), float(z.imag)] for z in c.ravel()] for c in self.components]


def _same_cap(x, y):
    if x.degree_cap != y.degree_cap:
        raise StructuralError("ExpElements with different degree caps")


def exp_norm(x):
    """max_k ||b_k||, the norm of the truncated c0 direct sum."""
    return max((alg._operator_norm(c) for c in x.components), default=0.0)


def gamma_matrix(b, n_cap):
    """(1, b, b^(x)2, ..., b^(x)N) for a target matrix b."""
    b = np.asarray(b, dtype=complex)
    comps = [np.ones((1, 1), dtype=complex)]
    for _ in range(n_cap):
        comps.append(np.kron(comps[-1], b) if len(comps) > 1 else b.copy())
    return ExpElement(tuple(comps))


def gamma(a, n_cap=4, env=None):
    """Gamma(a) = (1, eta(a), eta(a)^(x)2, ..., eta(a)^(x)N)."""
    if alg.seminorm(a) >= 1.0:
        warnings.warn("gamma evaluated outside the open unit ball", RuntimeWarning,
                      stacklevel=2)
    env = envelope(a.algebra) if env is None else env
    return gamma_matrix(env(a), n_cap)


def exp_spaces(target, n_cap):
    """Symmetric power spaces S^0..S^N of a C*-target."""
    return [sym_space(symmetric_power(target, k)) for k in range(n_cap + 1)]


def symmetrizer_residual(x, target):
    """max_k ||q(b_k) - b_k|| for an ExpElement over ``target``."""
    k = target.realization_dim
    res = 0.0
    for n, c in enumerate(x.components):
        if n >= 2:
            res = max(res, float(np.abs(symmetrize_matrix(c, k, n) - c).max()))
    return res


def random_exp_element(target, n_cap, rng):
    """Random element of the truncated exponential algebra over ``target``."""
    comps = []
    for space in exp_spaces(target, n_cap):
        c = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
        comps.append(space.from_coords(c))
    return ExpElement(tuple(comps))
