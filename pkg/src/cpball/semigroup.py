"""Finite *-semigroups given by multiplication tables, and absolute values on them."""

from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SemigroupTable:
    """Multiplication table ``table[s, t] = st`` with involution ``s -> involution[s]``.

    ``scaling`` optionally lists pairs ``(r, letter)`` realizing a scaling
    homomorphism gamma on a grid of r-values in (0, 1].
    """

    table: np.ndarray
    involution: np.ndarray
    labels: tuple = ()
    scaling: tuple = ()
    zero: int = field(init=False, default=None)
    unit: int = field(init=False, default=None)

    def __post_init__(self):
        table = _frozen(self.table, np.int64)
        inv = _frozen(self.involution, np.int64)
        m = table.shape[0] if table.ndim == 2 else -1
        if table.ndim != 2 or table.shape != (m, m) or m < 1:
            raise StructuralError("multiplication table must be a nonempty square matrix")
        if inv.shape != (m,):
            raise StructuralError("involution must be a permutation of the letters")
        if table.min() < 0 or table.max() >= m or inv.min() < 0 or inv.max() >= m:
            raise StructuralError("table entries must be letter indices")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "involution", inv)
        labels = tuple(self.labels) if self.labels else tuple(str(i) for i in range(m))
        if len(labels) != m:
            raise StructuralError("one label per letter required")
        object.__setattr__(self, "labels", labels)
        self._check_associative()
        self._check_involution()
        object.__setattr__(self, "zero", self._find_zero())
        object.__setattr__(self, "unit", self._find_unit())
        scaling = tuple((float(r), int(s)) for r, s in self.scaling)
        object.__setattr__(self, "scaling", scaling)
        self._check_scaling()

    @property
    def size(self):
        return self.table.shape[0]

    def product(self, s, t):
        return int(self.table[s, t])

    def star(self, s):
        return int(self.involution[s])

    @property
    def is_commutative(self):
        return bool(np.array_equal(self.table, self.table.T))

    def _check_associative(self):
        t = self.table
        left = t[t, :]          # (st)u indexed [s, t, u]
        right = t[:, t]         # s(tu) indexed [s, t, u]
        bad = np.argwhere(left != right)
        if bad.size:
            s, u, v = (int(x) for x in bad[0])
            raise StructuralError(
                f"table is not associative at ({self.labels[s]}, {self.labels[u]}, "
                f"{self.labels[v]})", witness=(s, u, v))

    def _check_involution(self):
        inv = self.involution
        if not np.array_equal(inv[inv], np.arange(self.size)):
            s = int(np.argmax(inv[inv] != np.arange(self.size)))
            raise StructuralError(f"involution is not of order two at {self.labels[s]}",
                                  witness=(s,))
        lhs = inv[self.table]                # (st)*
        rhs = self.table[inv][:, inv].T      # t* s*
        bad = np.argwhere(lhs != rhs)
        if bad.size:
            s, t = (int(x) for x in bad[0])
            raise StructuralError(
                f"involution is not an antiautomorphism at ({self.labels[s]}, "
                f"{self.labels[t]})", witness=(s, t))

    def _find_zero(self):
        m = self.size
        for z in range(m):
            if np.all(self.table[z, :] == z) and np.all(self.table[:, z] == z):
                return z
        return None

    def _find_unit(self):
        ids = np.arange(self.size)
        for e in range(self.size):
            if np.array_equal(self.table[e, :], ids) and np.array_equal(self.table[:, e], ids):
                return e
        return None

    def _check_scaling(self):
        grid = dict(self.scaling)
        for r, s in self.scaling:
            if not 0 < r <= 1:
                raise StructuralError(f"scaling parameter {r} outside (0, 1]")
            if self.star(s) != s:
                raise StructuralError("scaling letters must be self-adjoint")
        for r1, s1 in self.scaling:
            for r2, s2 in self.scaling:
                for r, s in grid.items():
                    if abs(r - r1 * r2) <= 1e-12 and self.product(s1, s2) != s:
                        raise StructuralError(
                            f"gamma({r1})gamma({r2}) != gamma({r})", witness=(s1, s2))

    def to_dict(self):
        out = {"table": self.table.tolist(), "involution": self.involution.tolist(),
               "labels": list(self.labels)}
        if self.scaling:
            out["scaling"] = [list(x) for x in self.scaling]
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(data["table"], data["involution"], tuple(data.get("labels", ())),
                   tuple(tuple(x) for x in data.get("scaling", ())))


@dataclass(frozen=True, eq=False)
class AbsoluteValue:
    """Weights alpha on the letters of a table, involution invariant and submultiplicative."""

    table: SemigroupTable
    weights: np.ndarray
    validate: bool = True

    def __post_init__(self):
        w = _frozen(self.weights, float)
        if w.shape != (self.table.size,):
            raise StructuralError("one weight per letter required")
        object.__setattr__(self, "weights", w)
        if not self.validate:
            return
        if np.any(w < 0):
            raise StructuralError("weights must be nonnegative")
        inv = self.table.involution
        if not np.allclose(w[inv], w, rtol=1e-12, atol=0):
            s = int(np.argmax(np.abs(w[inv] - w)))
            raise StructuralError(f"alpha(s*) != alpha(s) at {self.table.labels[s]}",
                                  witness=(s,))
        prod = w[self.table.table]
        bound = np.outer(w, w)
        bad = np.argwhere(prod > bound * (1 + 1e-12) + 1e-300)
        if bad.size:
            s, t = (int(x) for x in bad[0])
            lab = self.table.labels
            raise StructuralError(
                f"alpha is not submultiplicative at ({lab[s]}, {lab[t]}): "
                f"alpha({lab[self.table.product(s, t)]}) = {prod[s, t]:g} > "
                f"{bound[s, t]:g}", witness=(s, t))

    def __call__(self, s):
        return float(self.weights[s])

    @classmethod
    def constant(cls, table, value=1.0, validate=True):
        return cls(table, np.full(table.size, float(value)), validate)


# builders

def trivial_table():
    """The one-letter semigroup {e}."""
    return SemigroupTable([[0]], [0], ("e",))


def zero_one_table():
    """{0, 1} under multiplication with trivial involution."""
    return SemigroupTable([[0, 0], [0, 1]], [0, 1], ("0", "1"))


def cyclic_group_table(m):
    """Z_m with s* = s^{-1}."""
    idx = np.arange(m)
    table = (idx[:, None] + idx[None, :]) % m
    return SemigroupTable(table, (-idx) % m, tuple(f"g{k}" for k in range(m)))


def table_from_matrices(generators, max_letters=12, decimals=9):
    """Close a set of complex matrices under products and adjoints.

    Returns the table together with the list of matrices, so that the
    matrices give a faithful *-representation of the table.
    """
    def key(mat):
        r = np.round(mat, decimals) + 0.0
        return r.real.tobytes() + r.imag.tobytes()

    mats = []
    index = {}

    def add(mat):
        k = key(mat)
        if k not in index:
            if len(mats) >= max_letters:
                raise StructuralError(f"closure exceeds {max_letters} letters")
            index[k] = len(mats)
            mats.append(np.array(mat, dtype=complex))
        return index[k]

    for g in generators:
        add(np.asarray(g, dtype=complex))
        add(np.asarray(g, dtype=complex).conj().T)
    changed = True
    while changed:
        changed = False
        n = len(mats)
        for i in range(n):
            for j in range(n):
                before = len(mats)
                add(mats[i] @ mats[j])
                changed |= len(mats) > before
            before = len(mats)
            add(mats[i].conj().T)
            changed |= len(mats) > before
    m = len(mats)
    table = np.array([[index[key(mats[i] @ mats[j])] for j in range(m)] for i in range(m)])
    inv = np.array([index[key(mats[i].conj().T)] for i in range(m)])
    return SemigroupTable(table, inv), mats
