"""Seeded random test families: CP maps, table representations, linear maps."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from .envelope import envelope, gamma, sym_space, symmetric_power
from .functions import OperatorFunction
from .positivity import linear_map_from_choi
from .semigroup import cyclic_group_table, table_from_matrices, trivial_table, zero_one_table


@dataclass(frozen=True, eq=False)
class KrausExpMap:
    """Phi = sum_n Phi_n on the truncated exponential algebra, Phi_n(x) = sum_j K_j^* x K_j."""

    kraus: tuple   # per degree: array (r, K^n, d)
    dim: int

    @property
    def degree_cap(self):
        return len(self.kraus) - 1

    def component(self, n, x):
        k = self.kraus[n]
        return np.einsum("jai,ab,jbk->ik", k.conj(), np.asarray(x, dtype=complex), k)

    def apply(self, x):
        return sum(self.component(n, x[n]) for n in range(self.degree_cap + 1))

    def function(self, domain, name="kraus-exp"):
        env = envelope(domain)
        return OperatorFunction(lambda a: self.apply(gamma(a, self.degree_cap, env)),
                                domain, self.dim, name)


def random_kraus_exp_map(target, degree_cap, dim, rng, rank=2):
    """Random CP map on the truncated exponential algebra over a C*-target.

    Degree n uses ``rank`` Kraus operators of norm about 1/(N + 1).
    """
    k = target.realization_dim
    kraus = []
    for n in range(degree_cap + 1):
        size = k ** n
        g = rng.standard_normal((rank, size, dim)) + 1j * rng.standard_normal((rank, size, dim))
        g *= 1.0 / ((degree_cap + 1) * np.sqrt(rank * size * dim))
        kraus.append(g)
    return KrausExpMap(tuple(kraus), dim)


def restricted_component_error(m, lifted, target):
    """max over an orthonormal basis of S^n of ||Phi_n(b) - lifted(b)||."""
    worst = 0.0
    for c in lifted.components:
        space = sym_space(symmetric_power(target, c.degree))
        for b in space.basis_matrices():
            worst = max(worst, float(np.abs(m.component(c.degree, b) - c.apply(b)).max()))
    return worst


def random_linear_map(d, rng, shift=None):
    """Linear map on M_d(C) with Choi matrix W - shift I, W a complex Wishart matrix.

    The default shift is drawn so that roughly half of the maps are CP.
    """
    n = d * d
    g = (rng.standard_normal((n, n + 1)) + 1j * rng.standard_normal((n, n + 1))) / np.sqrt(2)
    w = g @ g.conj().T / n
    lam_min = float(np.linalg.eigvalsh(w)[0])
    if shift is None:
        shift = lam_min + rng.uniform(-0.5, 0.5) * max(lam_min, 0.05)
    c = w - shift * np.eye(n)
    return linear_map_from_choi(c, d), c


@dataclass(frozen=True, eq=False)
class TableFamily:
    """A finite unital *-semigroup with a faithful contraction *-representation."""

    name: str
    table: object
    mats: tuple


def _diag_rep(table, values):
    return tuple(np.diag(v) for v in values)


def table_families():
    """Unital tables with at most 8 letters and defining representations."""
    fams = [TableFamily("trivial", trivial_table(), (np.eye(1),)),
            TableFamily("zero-one", zero_one_table(),
                        (np.diag([1.0, 0.0]).astype(complex), np.eye(2, dtype=complex)))]
    for m in (2, 3, 5, 8):
        w = np.exp(2j * np.pi / m)
        vals = [np.array([w ** g, w ** (2 * g)]) for g in range(m)]
        fams.append(TableFamily(f"cyclic-{m}", cyclic_group_table(m), _diag_rep(None, vals)))
    swap = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex)
    cyc = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=complex)
    t, mats = table_from_matrices([np.eye(3), swap, cyc])
    fams.append(TableFamily("symmetric-3", t, tuple(mats)))
    e11 = np.array([[1, 0], [0, 0]], dtype=complex)
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    t, mats = table_from_matrices([np.eye(2), e11, e12])
    fams.append(TableFamily("matrix-units", t, tuple(mats)))
    t, mats = table_from_matrices([np.eye(2), np.diag([1.0, 0.0]), np.diag([1.0, -1.0])])
    fams.append(TableFamily("signed-projections", t, tuple(mats)))
    return fams


@dataclass(frozen=True, eq=False)
class TableDilation:
    """phi(s) = iota^* pi(s) iota for a random representation of a table."""

    family: TableFamily
    pi: tuple
    iota: np.ndarray

    @property
    def values(self):
        return np.array([self.iota.conj().T @ p @ self.iota for p in self.pi])

    @property
    def generating_dim(self):
        return self.iota.shape[0]


def random_table_dilation(family, rng, d=None, copies=None):
    """Conjugate a direct sum of defining copies and trivial characters by a Haar unitary."""
    d = int(rng.integers(1, 4)) if d is None else d
    copies = int(rng.integers(1, 3)) if copies is None else copies
    trivial = int(rng.integers(0, 2))
    blocks = []
    for s in range(family.table.size):
        parts = [family.mats[s]] * copies + [np.eye(1)] * trivial
        blocks.append(parts)
    h = sum(p.shape[0] for p in blocks[0])
    u = unitary_group.rvs(h, random_state=rng) if h > 1 else np.eye(1)
    pis = []
    for parts in blocks:
        m = np.zeros((h, h), dtype=complex)
        o = 0
        for p in parts:
            k = p.shape[0]
            m[o:o + k, o:o + k] = p
            o += k
        pis.append(u @ m @ u.conj().T)
    iota = rng.standard_normal((h, d)) + 1j * rng.standard_normal((h, d))
    iota /= max(1.0, float(np.linalg.norm(iota, 2)))
    return TableDilation(family, tuple(pis), iota)


def minimal_compression(dil):
    """Restrict a dilation to the cyclic subspace spanned by pi(S) iota."""
    span = np.hstack([p @ dil.iota for p in dil.pi])
    u, s, _ = np.linalg.svd(span)
    rank = int(np.sum(s > 1e-10 * s[0])) if s.size and s[0] > 0 else 0
    q = u[:, :rank]
    return tuple(q.conj().T @ p @ q for p in dil.pi), q.conj().T @ dil.iota
