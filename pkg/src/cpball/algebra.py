"""Concrete real seminormed involutive algebras and their arithmetic.

Matrix-like algebras are stored through a complex matrix realization.
Semigroup algebras are stored as coefficient vectors over the letters,
unitizations as pairs (a, lam) and complexifications as pairs (x, y)
standing for x + iy.
"""

import enum
import dataclasses
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DomainError, StructuralError, UnsupportedOperationError
from .semigroup import AbsoluteValue, SemigroupTable
from .settings import resolve_tol


class Field(enum.Enum):
    REAL = "R"
    COMPLEX = "C"
    QUATERNION = "H"


class Kind(enum.Enum):
    MATRIX = "matrix"
    SEMIGROUP = "semigroup"
    UNITIZATION = "unitization"
    COMPLEXIFICATION = "complexification"
    TENSOR = "tensor"
    SYMMETRIC_POWER = "symmetric_power"
    TRUNC_EXP = "trunc_exp"
    CSTAR = "cstar"


MATRIX_LIKE = _MATRIX_LIKE = (Kind.MATRIX, Kind.TENSOR, Kind.SYMMETRIC_POWER, Kind.CSTAR)


@dataclass(frozen=True, eq=False, repr=False)
class AlgebraDescriptor:
    """Recipe for one concrete algebra.

    ``realization_dim`` is the size of the complex matrix realization and
    ``seminorm_rule`` selects how p is computed. Two descriptors are equal
    when they describe the same algebra.
    """

    kind: Kind
    realization_dim: int
    seminorm_rule: str
    name: str
    n: int = 0
    field: Field = None
    table: SemigroupTable = None
    alpha: AbsoluteValue = None
    inner: "AlgebraDescriptor" = None
    factors: tuple = ()
    blocks: tuple = ()
    key: tuple = dataclasses.field(init=False, default=())

    def __post_init__(self):
        extra = ()
        if self.kind is Kind.SEMIGROUP:
            extra = (self.table.table.tobytes(), self.table.involution.tobytes(),
                     self.alpha.weights.tobytes())
        inner_key = self.inner.key if self.inner is not None else ()
        factor_keys = tuple(f.key for f in self.factors)
        object.__setattr__(self, "key", (self.kind.value, self.name, extra, inner_key,
                                         factor_keys))

    def __eq__(self, other):
        return isinstance(other, AlgebraDescriptor) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"AlgebraDescriptor({self.name})"

    @property
    def is_complex(self):
        """True when complex scalars act inside the algebra."""
        if self.kind is Kind.MATRIX:
            return self.field is Field.COMPLEX
        if self.kind in (Kind.CSTAR, Kind.COMPLEXIFICATION):
            return True
        # tensor constructions are taken over the reals unless every factor is a C*-target
        if self.kind in (Kind.SYMMETRIC_POWER, Kind.TRUNC_EXP):
            return self.inner is None or self.inner.kind is Kind.CSTAR
        if self.kind is Kind.TENSOR:
            return all(f.kind is Kind.CSTAR for f in self.factors)
        return False

    @property
    def is_unital(self):
        if self.kind in (Kind.MATRIX, Kind.CSTAR, Kind.UNITIZATION):
            return True
        if self.kind is Kind.SEMIGROUP:
            return self.table.unit is not None
        if self.kind in (Kind.COMPLEXIFICATION, Kind.SYMMETRIC_POWER):
            return self.inner is None or self.inner.is_unital
        if self.kind is Kind.TENSOR:
            return all(f.is_unital for f in self.factors)
        return False


# quaternions

def quaternion_structure(n):
    """The antiunitary structure matrix J with J conj(M) J^{-1} = M on M_n(H)."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def quaternion_embed(a, b, c, d):
    """Embed the quaternion matrix a + bi + cj + dk into M_2n(C).

    Each scalar entry becomes the block [[a+bi, c+di], [-c+di, a-bi]].
    """
    a, b, c, d = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (a, b, c, d))
    n = a.shape[0]
    z = a + 1j * b
    w = c + 1j * d
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[0::2, 0::2] = z
    out[0::2, 1::2] = w
    out[1::2, 0::2] = -w.conj()
    out[1::2, 1::2] = z.conj()
    return out


def quaternion_parts(m):
    """Inverse of quaternion_embed: return the real parts (a, b, c, d)."""
    z = m[0::2, 0::2]
    w = m[0::2, 1::2]
    return z.real.copy(), z.imag.copy(), w.real.copy(), w.imag.copy()


def quaternion_defect(m):
    """Norm of J conj(M) J^{-1} - M."""
    n = m.shape[0] // 2
    j = quaternion_structure(n)
    return float(np.linalg.norm(j @ m.conj() @ j.T - m))


# descriptor constructors

def make_matrix_algebra(n, field):
    """M_n(K) for K in {R, C, H} with the operator norm of its complex realization."""
    if int(n) != n or n < 1:
        raise ValueError(f"matrix size must be a positive integer, got {n}")
    field = Field(field)
    dim = 2 * n if field is Field.QUATERNION else n
    return AlgebraDescriptor(Kind.MATRIX, dim, "operator", f"M{n}({field.value})",
                             n=int(n), field=field)


def make_semigroup_algebra(table, alpha):
    """Real semigroup algebra R[S] with p(sum c_s d_s) = sum |c_s| alpha(s)."""
    if not isinstance(table, SemigroupTable):
        table = SemigroupTable(*table)
    if not isinstance(alpha, AbsoluteValue):
        alpha = AbsoluteValue(table, alpha)
    if alpha.table is not table:
        alpha = AbsoluteValue(table, alpha.weights)
    name = f"R[S{table.size}]"
    return AlgebraDescriptor(Kind.SEMIGROUP, table.size, "weighted_l1", name,
                             n=table.size, table=table, alpha=alpha)


def unitize(d):
    """A^1 = A x R with (a,l)(b,m) = (ab + lb + ma, lm) and p^1(a,l) = p(a) + |l|."""
    return AlgebraDescriptor(Kind.UNITIZATION, d.realization_dim + 1, "unitization",
                             f"unit({d.name})", inner=d)


def complexify(d):
    """A_C = A + iA with (x+iy)* = x* - iy* and p_C(x+iy) = p(x) + p(y)."""
    return AlgebraDescriptor(Kind.COMPLEXIFICATION, 2 * d.realization_dim,
                             "complexification", f"cplx({d.name})", inner=d)


def cstar_algebra(blocks):
    """Complex C*-algebra of block-diagonal matrices.

    ``blocks`` is a tuple with one entry per tensor factor, each entry a
    tuple of block sizes; the realization is the Kronecker product of the
    block-diagonal factors.
    """
    blocks = tuple(tuple(int(b) for b in f) for f in blocks)
    dim = int(np.prod([sum(f) for f in blocks]))
    label = "(x)".join("+".join(f"M{b}" for b in f) for f in blocks)
    return AlgebraDescriptor(Kind.CSTAR, dim, "operator", f"C*[{label}]", blocks=blocks)


def envelope_dim(d):
    """Dimension of the C*-envelope realization of ``d``."""
    if d.kind is Kind.MATRIX:
        return d.realization_dim * (2 if d.field is Field.COMPLEX else 1)
    if d.kind in (Kind.CSTAR, Kind.TENSOR, Kind.SYMMETRIC_POWER):
        return d.realization_dim
    if d.kind is Kind.UNITIZATION:
        return envelope_dim(d.inner) + 1
    if d.kind is Kind.COMPLEXIFICATION:
        return envelope_dim(d.inner)
    if d.kind is Kind.SEMIGROUP:
        from .envelope import characters
        return len(characters(d))
    raise UnsupportedOperationError(f"no envelope realization for {d.name}")


# elements

@dataclass(frozen=True, eq=False, repr=False)
class Element:
    """An immutable element of the algebra ``algebra``."""

    algebra: AlgebraDescriptor
    data: object

    def __repr__(self):
        return f"Element({self.algebra.name}, {self.data!r})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, Element):
            return multiply(self, other)
        return scale(self, other)

    def __rmul__(self, other):
        return scale(self, other)

    def __truediv__(self, c):
        return scale(self, 1.0 / c)

    @property
    def star(self):
        return adjoint(self)

    def matrix(self):
        return realize(self)


def _readonly(arr, dtype):
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


def element(d, data, check=True, tol=None):
    """Build an element of ``d`` from raw data, validating membership."""
    kind = d.kind
    if kind in _MATRIX_LIKE:
        m = _readonly(data, complex)
        k = d.realization_dim
        if m.shape != (k, k):
            m = _readonly(np.reshape(m, (k, k)), complex)
        if check and kind is Kind.MATRIX:
            tol = resolve_tol(tol)
            scale_ = max(1.0, float(np.abs(m).max(initial=0.0)))
            if d.field is Field.REAL and np.abs(m.imag).max(initial=0.0) > tol * scale_:
                raise DomainError(f"{d.name} element has a nonzero imaginary part")
            if d.field is Field.QUATERNION and quaternion_defect(m) > tol * scale_ * k:
                raise DomainError(f"{d.name} element is not quaternionic")
        return Element(d, m)
    if kind is Kind.SEMIGROUP:
        c = _readonly(data, float)
        if c.shape != (d.table.size,):
            raise StructuralError(f"{d.name} needs {d.table.size} coefficients")
        return Element(d, c)
    if kind is Kind.UNITIZATION:
        a, lam = data
        if not isinstance(a, Element):
            a = element(d.inner, a, check, tol)
        _same(a.algebra, d.inner)
        return Element(d, (a, float(np.real(lam))))
    if kind is Kind.COMPLEXIFICATION:
        x, y = data
        x = x if isinstance(x, Element) else element(d.inner, x, check, tol)
        y = y if isinstance(y, Element) else element(d.inner, y, check, tol)
        _same(x.algebra, d.inner)
        _same(y.algebra, d.inner)
        return Element(d, (x, y))
    raise UnsupportedOperationError(f"elements of kind {kind.value} live in the envelope module")


def quaternion_element(d, a, b, c, dd):
    if d.field is not Field.QUATERNION:
        raise StructuralError(f"{d.name} is not a quaternion matrix algebra")
    return Element(d, _readonly(quaternion_embed(a, b, c, dd), complex))


def zero(d):
    kind = d.kind
    if kind in _MATRIX_LIKE:
        return Element(d, _readonly(np.zeros((d.realization_dim,) * 2), complex))
    if kind is Kind.SEMIGROUP:
        return Element(d, _readonly(np.zeros(d.table.size), float))
    if kind is Kind.UNITIZATION:
        return Element(d, (zero(d.inner), 0.0))
    if kind is Kind.COMPLEXIFICATION:
        return Element(d, (zero(d.inner), zero(d.inner)))
    raise UnsupportedOperationError(f"no zero for {d.name}")


def unit(d):
    """Unit element; unsupported for non-unital algebras."""
    if not d.is_unital:
        raise UnsupportedOperationError(f"{d.name} has no unit")
    kind = d.kind
    if kind in _MATRIX_LIKE:
        return Element(d, _readonly(np.eye(d.realization_dim), complex))
    if kind is Kind.SEMIGROUP:
        c = np.zeros(d.table.size)
        c[d.table.unit] = 1.0
        return Element(d, _readonly(c, float))
    if kind is Kind.UNITIZATION:
        return Element(d, (zero(d.inner), 1.0))
    return Element(d, (unit(d.inner), zero(d.inner)))


def _same(d1, d2):
    if d1 != d2:
        raise StructuralError(f"mixed algebras: {d1.name} vs {d2.name}")


def _check_pair(a, b):
    if not (isinstance(a, Element) and isinstance(b, Element)):
        raise StructuralError("operands must be Elements")
    _same(a.algebra, b.algebra)


def multiply(a, b):
    _check_pair(a, b)
    d = a.algebra
    kind = d.kind
    if kind in _MATRIX_LIKE:
        return Element(d, _readonly(a.data @ b.data, complex))
    if kind is Kind.SEMIGROUP:
        m = d.table.size
        out = np.bincount(d.table.table.ravel(), weights=np.outer(a.data, b.data).ravel(),
                          minlength=m)
        return Element(d, _readonly(out, float))
    if kind is Kind.UNITIZATION:
        (x, lam), (y, mu) = a.data, b.data
        inner = add(add(multiply(x, y), scale(y, lam)), scale(x, mu))
        return Element(d, (inner, lam * mu))
    if kind is Kind.COMPLEXIFICATION:
        (x1, y1), (x2, y2) = a.data, b.data
        re = add(multiply(x1, x2), scale(multiply(y1, y2), -1.0))
        im = add(multiply(x1, y2), multiply(y1, x2))
        return Element(d, (re, im))
    raise UnsupportedOperationError(f"multiply on {d.name}")


def add(a, b):
    _check_pair(a, b)
    d = a.algebra
    kind = d.kind
    if kind in _MATRIX_LIKE or kind is Kind.SEMIGROUP:
        dtype = float if kind is Kind.SEMIGROUP else complex
        return Element(d, _readonly(a.data + b.data, dtype))
    if kind is Kind.UNITIZATION:
        return Element(d, (add(a.data[0], b.data[0]), a.data[1] + b.data[1]))
    if kind is Kind.COMPLEXIFICATION:
        return Element(d, (add(a.data[0], b.data[0]), add(a.data[1], b.data[1])))
    raise UnsupportedOperationError(f"add on {d.name}")


def scale(a, c):
    """Multiply by a scalar; complex scalars only where the algebra is complex."""
    d = a.algebra
    c = complex(c)
    if c.imag != 0 and not d.is_complex:
        raise DomainError(f"{d.name} is a real algebra; scalar {c} is not real")
    kind = d.kind
    if kind in _MATRIX_LIKE:
        return Element(d, _readonly(a.data * (c if c.imag else c.real), complex))
    if kind is Kind.SEMIGROUP:
        return Element(d, _readonly(a.data * c.real, float))
    if kind is Kind.UNITIZATION:
        return Element(d, (scale(a.data[0], c.real), a.data[1] * c.real))
    if kind is Kind.COMPLEXIFICATION:
        x, y = a.data
        re = add(scale(x, c.real), scale(y, -c.imag))
        im = add(scale(x, c.imag), scale(y, c.real))
        return Element(d, (re, im))
    raise UnsupportedOperationError(f"scale on {d.name}")


def adjoint(a):
    d = a.algebra
    kind = d.kind
    if kind in _MATRIX_LIKE:
        return Element(d, _readonly(a.data.conj().T, complex))
    if kind is Kind.SEMIGROUP:
        out = np.zeros_like(a.data)
        out[d.table.involution] = a.data
        return Element(d, _readonly(out, float))
    if kind is Kind.UNITIZATION:
        return Element(d, (adjoint(a.data[0]), a.data[1]))
    if kind is Kind.COMPLEXIFICATION:
        x, y = a.data
        return Element(d, (adjoint(x), scale(adjoint(y), -1.0)))
    raise UnsupportedOperationError(f"adjoint on {d.name}")


def _operator_norm(m):
    if m.size == 0:
        return 0.0
    if m.shape == (1, 1):
        return float(abs(m[0, 0]))
    return float(np.linalg.norm(m, 2))


def seminorm(a):
    """p(a) according to the descriptor's rule."""
    d = a.algebra
    rule = d.seminorm_rule
    if rule == "operator":
        return _operator_norm(a.data)
    if rule == "weighted_l1":
        return float(np.abs(a.data) @ d.alpha.weights)
    if rule == "unitization":
        return seminorm(a.data[0]) + abs(a.data[1])
    if rule == "complexification":
        return seminorm(a.data[0]) + seminorm(a.data[1])
    raise UnsupportedOperationError(f"unknown seminorm rule {rule}")


def in_ball(a):
    """Ball membership: p(a) < 1."""
    return seminorm(a) < 1.0


def vector(a):
    """Real coordinate vector of the stored data, used for comparisons."""
    kind = a.algebra.kind
    if kind in _MATRIX_LIKE:
        return np.concatenate([a.data.real.ravel(), a.data.imag.ravel()])
    if kind is Kind.SEMIGROUP:
        return np.asarray(a.data, dtype=float)
    if kind is Kind.UNITIZATION:
        return np.concatenate([vector(a.data[0]), [a.data[1]]])
    return np.concatenate([vector(a.data[0]), vector(a.data[1])])


def from_vector(d, vec):
    """Inverse of :func:`vector`."""
    vec = np.asarray(vec, dtype=float)
    kind = d.kind
    if kind in _MATRIX_LIKE:
        k = d.realization_dim
        return Element(d, _readonly((vec[:k * k] + 1j * vec[k * k:]).reshape(k, k), complex))
    if kind is Kind.SEMIGROUP:
        return Element(d, _readonly(vec, float))
    size = vector(zero(d.inner)).size
    if kind is Kind.UNITIZATION:
        return Element(d, (from_vector(d.inner, vec[:size]), float(vec[size])))
    return Element(d, (from_vector(d.inner, vec[:size]), from_vector(d.inner, vec[size:])))


def distance(a, b):
    """Largest coordinate difference relative to max(1, magnitudes)."""
    _check_pair(a, b)
    va, vb = vector(a), vector(b)
    return float(np.abs(va - vb).max(initial=0.0))


def allclose(a, b, tol=None):
    tol = resolve_tol(tol)
    va, vb = vector(a), vector(b)
    mag = max(1.0, float(np.abs(va).max(initial=0.0)), float(np.abs(vb).max(initial=0.0)))
    return float(np.abs(va - vb).max(initial=0.0)) <= tol * mag


def is_unitary(a, tol=None):
    """a*a = aa* = 1 within tolerance; raises for non-unital algebras."""
    d = a.algebra
    if not d.is_unital:
        raise UnsupportedOperationError(f"is_unitary needs a unital algebra, {d.name} is not")
    one = unit(d)
    s = adjoint(a)
    return allclose(multiply(s, a), one, tol) and allclose(multiply(a, s), one, tol)


def realize(a):
    """Complex matrix realization; faithful *-representation of the algebra."""
    d = a.algebra
    kind = d.kind
    if kind in _MATRIX_LIKE:
        return np.array(a.data)
    if kind is Kind.UNITIZATION:
        x = realize(a.data[0])
        lam = a.data[1]
        k = x.shape[0]
        out = np.zeros((k + 1, k + 1), dtype=complex)
        out[:k, :k] = x + lam * np.eye(k)
        out[k, k] = lam
        return out
    if kind is Kind.COMPLEXIFICATION:
        x, y = realize(a.data[0]), realize(a.data[1])
        k = x.shape[0]
        out = np.zeros((2 * k, 2 * k), dtype=complex)
        out[:k, :k] = x + 1j * y
        out[k:, k:] = x.conj() + 1j * y.conj()
        return out
    raise UnsupportedOperationError(f"{d.name} has no matrix realization")


def _matrix_units(k):
    for i in range(k):
        for j in range(k):
            e = np.zeros((k, k), dtype=complex)
            e[i, j] = 1.0
            yield e


def basis(d):
    """A basis of ``d`` as a real vector space."""
    kind = d.kind
    if kind is Kind.MATRIX:
        n = d.n
        if d.field is Field.REAL:
            return [Element(d, _readonly(e, complex)) for e in _matrix_units(n)]
        if d.field is Field.COMPLEX:
            units = list(_matrix_units(n))
            return [Element(d, _readonly(c * e, complex)) for c in (1.0, 1j) for e in units]
        out = []
        z = np.zeros((n, n))
        for e in _matrix_units(n):
            e = e.real
            for part in range(4):
                args = [z, z, z, z]
                args[part] = e
                out.append(quaternion_element(d, *args))
        return out
    if kind is Kind.CSTAR:
        from .envelope import cstar_basis
        return [Element(d, _readonly(c * m, complex))
                for c in (1.0, 1j) for m in cstar_basis(d)]
    if kind is Kind.SEMIGROUP:
        return [Element(d, _readonly(np.eye(d.table.size)[s], float))
                for s in range(d.table.size)]
    if kind is Kind.UNITIZATION:
        return ([Element(d, (b, 0.0)) for b in basis(d.inner)]
                + [Element(d, (zero(d.inner), 1.0))])
    if kind is Kind.COMPLEXIFICATION:
        z0 = zero(d.inner)
        inner = basis(d.inner)
        return [Element(d, (b, z0)) for b in inner] + [Element(d, (z0, b)) for b in inner]
    if kind in (Kind.TENSOR, Kind.SYMMETRIC_POWER):
        from .envelope import real_basis_matrices
        return [Element(d, _readonly(m, complex)) for m in real_basis_matrices(d)]
    raise UnsupportedOperationError(f"basis on {d.name}")


def real_dim(d):
    return len(basis(d))


def random_element(d, rng, scale_=1.0):
    """Gaussian random element (not normalized)."""
    kind = d.kind
    if kind is Kind.MATRIX:
        n = d.n
        if d.field is Field.REAL:
            return Element(d, _readonly(scale_ * rng.standard_normal((n, n)), complex))
        if d.field is Field.COMPLEX:
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            return Element(d, _readonly(scale_ * m, complex))
        parts = [scale_ * rng.standard_normal((n, n)) for _ in range(4)]
        return quaternion_element(d, *parts)
    if kind is Kind.SEMIGROUP:
        return Element(d, _readonly(scale_ * rng.standard_normal(d.table.size), float))
    if kind is Kind.UNITIZATION:
        return Element(d, (random_element(d.inner, rng, scale_),
                           float(scale_ * rng.standard_normal())))
    if kind is Kind.COMPLEXIFICATION:
        return Element(d, (random_element(d.inner, rng, scale_),
                           random_element(d.inner, rng, scale_)))
    from .envelope import random_matrix_in
    return Element(d, _readonly(scale_ * random_matrix_in(d, rng), complex))


def random_ball_element(d, rng, radius=None):
    """Random element with p(a) = radius (default uniform in (0, 1))."""
    if radius is None:
        radius = float(rng.uniform(0.05, 0.98))
    a = random_element(d, rng)
    p = seminorm(a)
    if p == 0:
        return a
    return scale(a, radius / p)


def product_all(elements):
    return reduce(multiply, elements)
