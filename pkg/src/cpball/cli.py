"""Batch driver: one subcommand per pipeline, JSON config in, JSON report out.

Reports are written with sorted keys and contain no wall-clock data unless
--timing is given, so equal configs give byte-identical reports.
"""

import argparse
import json
import math
import os
import sys
import time

from .errors import ConfigError

SUBCOMMANDS = ("gns", "dilate", "decompose", "factorize", "cpcheck", "interval-fit",
               "counterexamples", "universality", "catalog")
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

_NUMBER = {"type": "number"}
_ENTRY = {"oneOf": [_NUMBER, {"type": "array", "items": _NUMBER, "minItems": 2,
                                "maxItems": 2}]}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _ENTRY}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "subcommand": {"enum": list(SUBCOMMANDS)},
        "algebra": {"type": "string"},
        "function": {"oneOf": [
            {"type": "string"},
            {"type": "object", "additionalProperties": False, "required": ["samples"],
             "properties": {"samples": {"type": "array", "minItems": 1, "items": {
                 "type": "array", "minItems": 2, "maxItems": 2,
                 "items": [{"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
                           {"oneOf": [_ENTRY, _MATRIX]}]}}}}]},
        "table": {"oneOf": [
            {"type": "string"},
            {"type": "object", "additionalProperties": False,
             "required": ["table", "involution"],
             "properties": {"table": {"type": "array", "minItems": 1, "items": {
                 "type": "array", "items": {"type": "integer", "minimum": 0}}},
                 "involution": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                 "labels": {"type": "array", "items": {"type": "string"}}}}]},
        "values": {"type": "array", "items": _MATRIX},
        "alpha": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "degree_cap": {"type": "integer", "minimum": 0, "maximum": 8},
        "tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.01},
        "seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1, "maximum": 100000},
        "block_size": {"type": "integer", "minimum": 1, "maximum": 6},
        "samples": {"type": "integer", "minimum": 1, "maximum": 1000},
        "grid": {"type": "array", "minItems": 1, "items": {
            "type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        "draws": {"type": "integer", "minimum": 1, "maximum": 100000},
        "output": {"type": "string"},
    },
}

DEFAULTS = {
    "gns": {"table": "zero-one"},
    "dilate": {"function": "t^2"},
    "decompose": {"function": "trace+trace^2", "degree_cap": 4, "samples": 8},
    "factorize": {"function": "trace+trace^2", "degree_cap": 3},
    "cpcheck": {"function": "transpose-map"},
    "interval-fit": {"function": "0.5+0.3t^2", "degree_cap": 4, "samples": 40},
    "counterexamples": {"draws": 10000},
    "universality": {"algebra": "M2(R)", "degree_cap": 2},
    "catalog": {},
}
COMMON = {"seed": 0, "trials": 1000, "block_size": 4}


def _apply_threads():
    n = os.environ.get("CPBALL_THREADS")
    if n and "numpy" not in sys.modules:
        for var in THREAD_VARS:
            os.environ.setdefault(var, n)


def jsonable(x):
    """Plain JSON types; complex numbers become [re, im], non-finite floats strings."""
    import numpy as np
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if hasattr(x, "to_dict"):
        return jsonable(x.to_dict())
    if hasattr(x, "_asdict"):
        return jsonable(x._asdict())
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [jsonable(float(x.real)), jsonable(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if x is None or isinstance(x, str):
        return x
    raise TypeError(f"cannot serialize {type(x).__name__}")


def validate_config(cfg):
    from jsonschema import Draft7Validator
    errors = sorted(Draft7Validator(CONFIG_SCHEMA).iter_errors(cfg),
                    key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}"
                             for p in e.absolute_path)
        raise ConfigError(e.message, path)


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def resolve(sub, cfg, overrides):
    """Merge defaults, config and command-line overrides; validate the result."""
    merged = dict(COMMON)
    merged.update(DEFAULTS[sub])
    merged.update(cfg)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    merged["subcommand"] = sub
    validate_config(merged)
    if "tol" not in merged:
        merged["tol"] = 1e-8
    return merged


def _matrix(rows):
    import numpy as np
    return np.array([[complex(v[0], v[1]) if isinstance(v, list) else v for v in r]
                     for r in rows], dtype=complex)


def _builtin(name, kinds):
    from .catalog import lookup
    try:
        entry = lookup(name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0]), "$.function") from exc
    if entry.kind not in kinds:
        raise ConfigError(f"{name!r} is a {entry.kind}; expected one of {list(kinds)}",
                          "$.function")
    return entry


# subcommands; each returns (verdict, results)

def run_gns(cfg):
    import numpy as np
    from . import families, gns
    from .errors import NotPositiveDefiniteError
    from .semigroup import AbsoluteValue, SemigroupTable
    from .settings import rng_for
    spec = cfg["table"]
    fams = {f.name: f for f in families.table_families()}
    if isinstance(spec, str):
        if spec not in fams:
            raise ConfigError(f"unknown table {spec!r}; known: {sorted(fams)}", "$.table")
        table = fams[spec].table
    else:
        try:
            table = SemigroupTable(spec["table"], spec["involution"], spec.get("labels", ()))
        except Exception as exc:
            raise ConfigError(str(exc), "$.table") from exc
    if "values" in cfg:
        values = np.array([_matrix(v) for v in cfg["values"]])
        if len(values) != table.size:
            raise ConfigError(f"need {table.size} letter values", "$.values")
    else:
        if isinstance(spec, str):
            dil = families.random_table_dilation(fams[spec], rng_for(cfg["seed"], "cli.gns", 0))
            values = dil.values
        else:
            raise ConfigError("explicit tables need explicit values", "$.values")
    out = {"table": table.to_dict(), "values": values}
    alpha = None
    if "alpha" in cfg:
        try:
            alpha = AbsoluteValue(table, cfg["alpha"])
        except Exception as exc:
            raise ConfigError(str(exc), "$.alpha") from exc
        check = gns.alpha_bounded_check(values, table, alpha)
        out["alpha_bounded"] = check._asdict()
        if not check.holds:
            return "FAIL", out
    try:
        res = gns.gns_construct(values, table, alpha=alpha, tol=max(cfg["tol"], 1e-8))
    except NotPositiveDefiniteError as exc:
        out["certificate"] = exc.certificate
        return "FAIL", out
    out["dilation"] = res
    scale = max(1.0, float(np.abs(values).max()))
    ok = res.hom_residual <= 1e-8 and res.star_residual <= 1e-8
    if res.residuals is not None:
        ok = ok and res.max_residual <= cfg["tol"] * scale
    return ("PASS" if ok else "FAIL"), out


def run_dilate(cfg):
    from . import gns
    entry = _builtin(cfg["function"], ("function",))
    phi = entry.build()
    if not phi.domain.is_unital:
        raise ConfigError("scaling dilations need a unital algebra", "$.function")
    grid = cfg.get("grid")
    import warnings
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = gns.dilation_via_scaling(phi, grid=grid)
    out = {"function": entry.name, "scaling": res, "bound": res.bound,
           "warnings": [str(w.message) for w in caught]}
    return ("PASS" if res.bound_holds() else "FAIL"), out


def _ball_samples(domain, count, seed, stream):
    from . import algebra as alg
    from .settings import rng_for
    rng = rng_for(seed, stream, 0)
    return [alg.random_ball_element(domain, rng) for _ in range(count)]


def run_decompose(cfg):
    import numpy as np
    from . import expand
    from .errors import DegreeCapError
    entry = _builtin(cfg["function"], ("function",))
    phi = entry.build()
    samples = _ball_samples(phi.domain, cfg["samples"], cfg["seed"], "cli.decompose")
    out = {"function": entry.name, "degree_cap": cfg["degree_cap"]}
    try:
        e = expand.extract_components(phi, samples, cfg["degree_cap"])
    except DegreeCapError as exc:
        out["residual_curve"] = exc.residuals
        return "FAIL", out
    bounds = expand.component_bounds_check(e, phi, samples, seed=cfg["seed"])
    out["expansion"] = e
    out["bounds"] = bounds
    out["homogeneity"] = expand.homogeneity_degree_test(phi, samples[:3])
    diag = []
    for comp in e.components[1:]:
        a = samples[0]
        diag.append(float(np.abs(expand.polarize(comp, [a] * comp.degree) - comp(a)).max()))
    out["polarization_diagonal"] = diag
    ok = bounds.skipped is not None or all(bounds.holds)
    return ("PASS" if ok else "FAIL"), out


def run_factorize(cfg):
    from . import factorize as fz
    from .errors import NotPositiveDefiniteError
    entry = _builtin(cfg["function"], ("function",))
    phi = entry.build()
    out = {"function": entry.name, "degree_cap": cfg["degree_cap"]}
    try:
        f = fz.factorize(phi, cfg["degree_cap"], seed=cfg["seed"])
    except NotPositiveDefiniteError as exc:
        out["stage"] = "positive-definiteness gate"
        out["certificate"] = exc.certificate
        return "FAIL", out
    out["factorization"] = f
    ok = f.all_certified and f.residual <= max(cfg["tol"], 1e-8)
    return ("PASS" if ok else "FAIL"), out


def run_cpcheck(cfg):
    import numpy as np
    from . import algebra as alg
    from . import positivity as pos
    from .functions import OperatorFunction
    entry = _builtin(cfg["function"], ("function", "linear-map"))
    n, trials, seed = cfg["block_size"], cfg["trials"], cfg["seed"]
    out = {"function": entry.name}
    if entry.kind == "linear-map":
        lmap = entry.build()
        c = pos.choi(lmap, 2)
        verdict = pos.choi_check(lmap, 2)
        out["choi"] = verdict
        out["choi_spectrum"] = np.linalg.eigvalsh((c + c.conj().T) / 2)
        d = alg.make_matrix_algebra(2, "C")
        phi = OperatorFunction(lambda a: lmap(a.data), d, 2, entry.name)
        sampled = pos.cp_sampled_check(phi, n, trials, seed)
        out["sampled"] = sampled
        out["agree"] = (verdict.verdict == pos.FAIL) == (sampled.verdict == pos.FAIL)
        return verdict.verdict, out
    phi = entry.build()
    sampled = pos.cp_sampled_check(phi, n, trials, seed)
    out["sampled"] = sampled
    out["typeW"] = pos.typeW_check(phi, n, trials, seed)
    tuples = [_ball_samples(phi.domain, 3, seed, f"cli.cpcheck.{k}") for k in range(20)]
    out["positive_definite"] = pos.pd_function_check(phi, tuples)
    return ("FAIL" if sampled.verdict == pos.FAIL else sampled.verdict), out


def run_interval_fit(cfg):
    from . import expand
    spec = cfg["function"]
    if isinstance(spec, dict):
        samples = [(t, _sample_value(v)) for t, v in spec["samples"]]
        name = "samples"
    else:
        entry = _builtin(spec, ("function",))
        phi = entry.build()
        if phi.domain.name != "M1(R)":
            raise ConfigError("interval-fit needs a function on the real interval", "$.function")
        from . import algebra as alg
        samples = [(t, phi(alg.element(phi.domain, [[t]])))
                   for t, _ in expand.interval_samples(lambda t: 0.0, cfg["samples"])]
        name = entry.name
    fit = expand.interval_fit(samples, cfg["degree_cap"], tol=cfg["tol"])
    out = {"function": name, "fit": fit}
    s = fit.series
    if fit.verdict == expand.CP and s.dim == 1 and s.total_mass <= 1 + 1e-9:
        out["character"] = expand.extreme_character_check(s)._asdict()
    return ("PASS" if fit.verdict == expand.CP else "FAIL"), out


def _sample_value(v):
    if not isinstance(v, list):
        return v
    if isinstance(v[0], list):
        return _matrix(v)
    return complex(v[0], v[1])


def run_counterexamples(cfg):
    from . import gns
    from . import positivity as pos
    phi, (a1, a2) = pos.build_counterexample_phi()
    tw = pos.typeW_check(phi, cfg["block_size"], cfg["trials"], cfg["seed"])
    pd = pos.pd_function_check(phi, [a1, a2])
    demo = gns.nondilatable_demo()
    had3 = pos.search_hadamard_violation(3, 1.5, cfg["draws"], cfg["seed"])
    had4 = pos.search_hadamard_violation(4, 1.5, cfg["draws"], cfg["seed"])
    out = {"typeW-not-pd": {"typeW": tw, "positive_definite": pd,
                           "points": [a1.data[0, 0], a2.data[0, 0]]},
           "nondilatable-l1": demo,
           "hadamard-1.5": {"3x3": had3._asdict() if had3 else None,
                            "4x4": had4._asdict() if had4 else None}}
    ok = tw.verdict != pos.FAIL and not pd.passed and demo["strictly_increasing"]
    return ("PASS" if ok else "FAIL"), out


def run_universality(cfg):
    import numpy as np
    from . import factorize as fz
    from .catalog import parse_algebra
    from .envelope import permutation_operator
    try:
        d = parse_algebra(cfg["algebra"])
    except KeyError as exc:
        raise ConfigError(str(exc.args[0]), "$.algebra") from exc
    n = cfg["degree_cap"]
    if n < 1:
        raise ConfigError("universality needs degree at least 1", "$.degree_cap")
    k = d.realization_dim
    sym = sum(permutation_operator(k, n, p) for p in _perms(n)) / math.factorial(n)
    w, v = np.linalg.eigh((sym + sym.conj().T) / 2)
    iso = v[:, w > 0.5]
    checks = {"defining": fz.sn_universality_check(lambda x: x, d, n, cfg["seed"]),
              "symmetric-compression": fz.sn_universality_check(
                  lambda x: iso.conj().T @ x @ iso, d, n, cfg["seed"]),
              "transpose-control": fz.sn_universality_check(lambda x: x.T, d, n, cfg["seed"])}
    ok = (checks["defining"].factors and checks["symmetric-compression"].factors
          and not checks["transpose-control"].factors)
    return ("PASS" if ok else "FAIL"), {"algebra": d.name, "degree": n, "checks": checks}


def _perms(n):
    import itertools
    return list(itertools.permutations(range(n)))


def run_catalog(cfg):
    from .catalog import catalog
    return "PASS", {"builtins": [e.to_dict() for e in catalog()]}


RUNNERS = {"gns": run_gns, "dilate": run_dilate, "decompose": run_decompose,
           "factorize": run_factorize, "cpcheck": run_cpcheck,
           "interval-fit": run_interval_fit, "counterexamples": run_counterexamples,
           "universality": run_universality, "catalog": run_catalog}


def run(cfg, timing=False):
    """Execute a resolved config and return the report dictionary."""
    start = time.perf_counter()
    verdict, results = RUNNERS[cfg["subcommand"]](cfg)
    report = {"config": cfg, "verdict": verdict, "results": results}
    if timing:
        report["wall_clock_seconds"] = time.perf_counter() - start
    return jsonable(report)


def render(report):
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def build_parser():
    parser = argparse.ArgumentParser(prog="cpball", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--tol", type=float, help="verification tolerance")
        p.add_argument("--degree-cap", type=int, dest="degree_cap", help="degree cap N")
        p.add_argument("--out", dest="output", help="report path (default: stdout)")
        p.add_argument("--function", help="builtin function name")
        p.add_argument("--algebra", help="algebra name, e.g. M2(R)")
        p.add_argument("--trials", type=int, help="sampled trials")
        p.add_argument("--timing", action="store_true", help="include wall-clock time")
    return parser


def main(argv=None):
    _apply_threads()
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in
                 ("seed", "tol", "degree_cap", "output", "function", "algebra", "trials")}
    try:
        cfg = load_config(args.config) if args.config else {}
        if cfg.get("subcommand", args.subcommand) != args.subcommand:
            raise ConfigError(f"config is for {cfg['subcommand']!r}", "$.subcommand")
        cfg = resolve(args.subcommand, cfg, overrides)
        report = run(cfg, timing=args.timing)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    text = render(report)
    if cfg.get("output"):
        with open(cfg["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if report["verdict"] == "FAIL" else 0


if __name__ == "__main__":
    sys.exit(main())
