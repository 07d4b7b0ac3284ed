"""Operator-valued functions on balls of concrete algebras."""

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraDescriptor, Element, seminorm
from .errors import DomainError, StructuralError


@dataclass(frozen=True, eq=False)
class OperatorFunction:
    """A map phi from ball(A, p) to d x d complex matrices.

    ``fn`` receives an Element of ``domain`` and returns something that
    reshapes to (dim, dim). ``degree`` tags homogeneous components.
    When ``closed`` is true the function is also defined on the boundary
    p(a) = 1 (as for the closed unit disc).
    """

    fn: object
    domain: AlgebraDescriptor
    dim: int = 1
    name: str = ""
    degree: int = None
    closed: bool = False
    extends_homogeneously: bool = False

    def __call__(self, a):
        if not isinstance(a, Element):
            raise StructuralError("OperatorFunction expects an Element")
        if a.algebra != self.domain:
            raise StructuralError(f"mixed algebras: {a.algebra.name} vs {self.domain.name}")
        out = np.asarray(self.fn(a), dtype=complex)
        return out.reshape(self.dim, self.dim)

    def check_domain(self, a, label=""):
        """Raise a DomainError when ``a`` is outside the ball of definition."""
        if self.extends_homogeneously:
            return
        p = seminorm(a)
        limit_ok = p <= 1.0 + 1e-12 if self.closed else p < 1.0
        if not limit_ok:
            raise DomainError(f"argument {label} has p = {p:.6g}, outside the ball",
                              witness=label)

    def with_fn(self, fn, name=None, degree=None, extends_homogeneously=None):
        ext = self.extends_homogeneously if extends_homogeneously is None else extends_homogeneously
        return OperatorFunction(fn, self.domain, self.dim, name or self.name, degree,
                                self.closed, ext)


def scalar_value(a):
    """The complex number stored in a 1 x 1 matrix element."""
    return complex(a.data[0, 0])


def scalar_function(f, domain, name="", degree=None, closed=False):
    """OperatorFunction from a complex function of the single matrix entry."""
    if domain.realization_dim != 1:
        raise StructuralError(f"{domain.name} is not one-dimensional")
    return OperatorFunction(lambda a: f(scalar_value(a)), domain, 1, name, degree, closed)


def add_functions(f, g, name=""):
    if f.domain != g.domain or f.dim != g.dim:
        raise StructuralError("functions with different domains or ranges")
    return OperatorFunction(lambda a: f(a) + g(a), f.domain, f.dim, name, None,
                            f.closed and g.closed)


def constant_function(c, domain, name="const"):
    c = np.atleast_2d(np.asarray(c, dtype=complex))
    return OperatorFunction(lambda a: c, domain, c.shape[0], name, 0,
                            extends_homogeneously=True)
