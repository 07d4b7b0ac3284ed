"""Global tolerance and seed fan-out."""

import contextlib
import zlib

import numpy as np

DEFAULT_TOL = 1e-9
RANK_RTOL = 1e-8

_state = {"tol": DEFAULT_TOL}


def get_tol():
    return _state["tol"]


def set_tol(tol):
    if not 0 < tol < 1:
        raise ValueError(f"tolerance must lie in (0, 1), got {tol}")
    _state["tol"] = float(tol)


@contextlib.contextmanager
def tolerance(tol):
    """Temporarily override the global relative tolerance."""
    old = _state["tol"]
    set_tol(tol)
    try:
        yield
    finally:
        _state["tol"] = old


def resolve_tol(tol):
    return get_tol() if tol is None else float(tol)


def module_key(name):
    return zlib.crc32(name.encode("utf-8"))


def rng_for(seed, module="", trial=0):
    """Generator for the stream (seed, module, trial).

    Streams for different modules or trial indices are independent, so
    trials can run in any order without changing results.
    """
    return np.random.default_rng([int(seed), module_key(module), int(trial)])


def as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
