"""Builtin algebras, functions, linear maps and demonstrations, addressable by name."""

import re
from dataclasses import dataclass

import numpy as np

from . import algebra as alg
from .functions import OperatorFunction, scalar_function
from .semigroup import zero_one_table

FUNCTION = "function"
LINEAR_MAP = "linear-map"
ALGEBRA = "algebra"
DEMO = "demo"


@dataclass(frozen=True)
class Builtin:
    name: str
    kind: str
    description: str
    algebra: str
    build: object

    def to_dict(self):
        return {"name": self.name, "kind": self.kind, "description": self.description,
                "algebra": self.algebra}


_MATRIX_NAME = re.compile(r"^M(\d+)\((R|C|H)\)$")


def parse_algebra(name):
    """Descriptor for 'M<n>(R|C|H)' or a named builtin algebra."""
    m = _MATRIX_NAME.match(name)
    if m:
        return alg.make_matrix_algebra(int(m.group(1)), m.group(2))
    if name == "l1-zero-one":
        return alg.make_semigroup_algebra(zero_one_table(), [1.0, 1.0])
    raise KeyError(f"unknown algebra {name!r}")


def _scalar(f, name, closed=False):
    return lambda: scalar_function(f, alg.make_matrix_algebra(1, "R"), name, closed=closed)


def _trace_square():
    d = alg.make_matrix_algebra(2, "R")
    return OperatorFunction(lambda a: np.trace(a.data) + np.trace(a.data) ** 2, d, 1,
                            "trace+trace^2")


def _diag_one_z():
    d = alg.make_matrix_algebra(1, "C")
    return OperatorFunction(lambda a: np.diag([1.0, a.data[0, 0]]), d, 2, "diag-1-z-extreme")


def _example_74():
    from .positivity import build_counterexample_phi
    return build_counterexample_phi()[0]


def _nondilatable():
    from .gns import nondilatable_demo
    return nondilatable_demo


def _transpose(x):
    return np.asarray(x).T


def _trace_map(x):
    return np.trace(x) * np.eye(2) / 2


def _identity(x):
    return np.asarray(x)


_ENTRIES = [
    Builtin("M1(R)", ALGEBRA, "real numbers with the absolute value", "M1(R)",
            lambda: parse_algebra("M1(R)")),
    Builtin("M1(C)", ALGEBRA, "complex numbers as a real algebra; the ball is the open disc",
            "M1(C)", lambda: parse_algebra("M1(C)")),
    Builtin("M1(H)", ALGEBRA, "quaternions with the 2x2 complex embedding", "M1(H)",
            lambda: parse_algebra("M1(H)")),
    Builtin("M2(R)", ALGEBRA, "real 2x2 matrices with the operator norm", "M2(R)",
            lambda: parse_algebra("M2(R)")),
    Builtin("M2(C)", ALGEBRA, "complex 2x2 matrices; the envelope has two blocks", "M2(C)",
            lambda: parse_algebra("M2(C)")),
    Builtin("l1-zero-one", ALGEBRA, "semigroup algebra of {0, 1} with weights 1",
            "l1-zero-one", lambda: parse_algebra("l1-zero-one")),
    Builtin("0.5+0.3t^2", FUNCTION, "CP series with coefficients (0.5, 0, 0.3)", "M1(R)",
            _scalar(lambda t: 0.5 + 0.3 * t * t, "0.5+0.3t^2")),
    Builtin("0.3+0.5t", FUNCTION, "affine CP series, sup 0.8 at the boundary", "M1(R)",
            _scalar(lambda t: 0.3 + 0.5 * t, "0.3+0.5t")),
    Builtin("t^2", FUNCTION, "the degree-2 character", "M1(R)",
            _scalar(lambda t: t * t, "t^2")),
    Builtin("exp-t", FUNCTION, "exp(t), a CP series with infinitely many terms", "M1(R)",
            _scalar(np.exp, "exp-t")),
    Builtin("t-0.1", FUNCTION, "not CP: the constant term is negative", "M1(R)",
            _scalar(lambda t: t - 0.1, "t-0.1")),
    Builtin("t-t^2", FUNCTION, "polynomial with a negative coefficient, not CP", "M1(R)",
            _scalar(lambda t: t - t * t, "t-t^2")),
    Builtin("abs-t-1.5", FUNCTION, "|t|^1.5, homogeneous of a non-integral degree", "M1(R)",
            _scalar(lambda t: abs(t) ** 1.5, "abs-t-1.5")),
    Builtin("trace+trace^2", FUNCTION, "tr(a) + tr(a)^2 on real 2x2 matrices", "M2(R)",
            _trace_square),
    Builtin("example-7.4", FUNCTION,
            "disc function z (|z| <= 1/2 or z in [0, 1)), z + i/4 otherwise: CP of type W "
            "but not positive definite", "M1(C)", _example_74),
    Builtin("diag-1-z-extreme", FUNCTION,
            "diag(1, z) on the disc: extreme, two-dimensional GNS space, not homogeneous",
            "M1(C)", _diag_one_z),
    Builtin("nondilatable-l1", DEMO,
            "sum of coordinates on the l1 ball with pointwise product: bounded, not dilatable",
            "l1", _nondilatable),
    Builtin("transpose-map", LINEAR_MAP, "transpose on M2(C): positive, not CP", "M2(C)",
            lambda: _transpose),
    Builtin("trace-map", LINEAR_MAP, "x -> tr(x) I / 2 on M2(C), CP", "M2(C)",
            lambda: _trace_map),
    Builtin("identity-map", LINEAR_MAP, "identity on M2(C), CP", "M2(C)",
            lambda: _identity),
]

_ALIASES = {"0.5+0.3t²": "0.5+0.3t^2", "t²": "t^2", "chi-2": "t^2",
            "typeW-not-pd": "example-7.4"}


def catalog():
    """All builtins in a fixed order."""
    return list(_ENTRIES)


def lookup(name):
    name = _ALIASES.get(name, name)
    for entry in _ENTRIES:
        if entry.name == name:
            return entry
    raise KeyError(f"unknown builtin {name!r}; run the catalog subcommand for the list")
