"""Command-line front end.

Every subcommand writes to ``--out`` (stdout when omitted or ``-``).  Grids are
CSV and reports are JSON; both carry ``schema_version`` and a provenance
record.  Failures print a JSON error record on stderr and exit nonzero:

    1  a requested check failed
    2  invalid arguments or configuration
    3  a computation raised (domain, solver or budget error)
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np
from scipy import integrate

from . import acceptance as ac
from . import combinatorics as cb
from . import equilibrium as eq
from . import mbprocess as mp
from . import sampler as sp
from .errors import MBShapeError
from .io import dumps_json, format_csv, provenance, read_config_file, to_jsonable

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2, 3

DEFAULTS = {
    "eta": 1.0,
    "theta": 2.0,
    "gamma_sq": 0.5,
    "beta": 1.0,
    "xi": 0.25,
    "xi_min": -0.45,
    "xi_max": 1.0,
    "xi_steps": 41,
    "grid": 512,
    "m": 2,
    "n": 2,
    "q": 0.5,
    "a": 1.0,
    "cap": 12,
    "burn_in": 100,
    "thin": 10,
    "seed": 0,
    "n_samples": 100,
    "suite": "fast",
    "only": "",
    "perturb_c1": 1.0,
}

FLOATS = {"eta", "theta", "gamma_sq", "beta", "xi", "xi_min", "xi_max", "q", "a", "perturb_c1"}
INTS = {"xi_steps", "grid", "m", "n", "cap", "burn_in", "thin", "seed", "n_samples"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _error_record(kind: str, message: str, code: int) -> None:
    rec = {"schema_version": 1, "error": {"type": kind, "message": message, "exit_code": code}}
    sys.stderr.write(json.dumps(rec, sort_keys=True) + "\n")


def _add(p, *names):
    for name in names:
        flag = "--" + name.replace("_", "-")
        kind = float if name in FLOATS else int if name in INTS else str
        p.add_argument(flag, dest=name, type=kind, default=None)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mbshape", description="Equilibrium measures and limit shapes of two-exponent plane-partition slices.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    phys = ("eta", "theta", "gamma_sq", "beta", "xi")
    common = ("out", "format", "config")
    s = sub.add_parser("density", help="equilibrium density of one slice")
    _add(s, *phys, "grid", *common)
    s = sub.add_parser("arctic", help="band edge across slices")
    _add(s, "eta", "theta", "gamma_sq", "beta", "xi_min", "xi_max", "xi_steps", *common)
    s = sub.add_parser("shape", help="limit shape of one slice")
    _add(s, *phys, "grid", *common)
    s = sub.add_parser("verify", help="run the acceptance suite")
    _add(s, "suite", "only", "perturb_c1", *common)
    s.add_argument("--timings", action="store_true", help="include wall-clock times (breaks byte-identical output)")
    s = sub.add_parser("sample", help="Metropolis samples of weighted plane partitions")
    _add(s, "m", "n", "q", "a", "eta", "theta", "cap", "burn_in", "thin", "seed", "n_samples", *common)
    s = sub.add_parser("partition_fn", help="truncated sum against the product formula")
    _add(s, "m", "n", "q", "a", "eta", "theta", "cap", *common)
    return p


def resolve(args) -> dict:
    """Merge defaults, the optional config file and flags (flags win)."""
    vals = {k: v for k, v in vars(args).items()}
    cfg = read_config_file(vals["config"]) if vals.get("config") else {}
    out = {}
    for k, v in vals.items():
        if v is None and k in cfg:
            raw = cfg[k]
            try:
                v = float(raw) if k in FLOATS else int(raw) if k in INTS else raw
            except ValueError as exc:
                raise UsageError(f"config key {k}: {exc}") from None
        if v is None:
            v = DEFAULTS.get(k)
        out[k] = v
    unknown = set(cfg) - set(vals)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    fmt = out.get("format")
    if fmt is not None and fmt not in ("csv", "json"):
        raise UsageError(f"--format must be csv or json, got {fmt}")
    return out


def _emit(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _params(o) -> mp.EnsembleParams:
    return mp.EnsembleParams(o["eta"], o["theta"], o["gamma_sq"], o["beta"], o["xi"])


def _phys_keys(o):
    return {k: o[k] for k in ("eta", "theta", "gamma_sq", "beta", "xi")}


def _solution_meta(prof) -> dict:
    ident = prof.meta["identified"]
    sol = prof.meta["solution"]
    spec = ident.spec
    return {
        "branch": ident.branch_label,
        "pushforward_exponent": ident.pushforward_exponent,
        "model_problem": {
            "problem_id": spec.problem_id.value,
            "nu": spec.nu,
            "kappa": spec.kappa,
            "m1": spec.m1,
            "n1": spec.n1,
            "n2": spec.n2,
            "alpha": spec.alpha,
            "beta": spec.beta,
            "rho": spec.rho,
        },
        "regime": sol.regime.value,
        "constants": {
            "A": sol.A,
            "B": sol.B,
            "s1": sol.s1,
            "s2": sol.s2,
            "K1": sol.K1,
            "K2": sol.K2,
            "c0": sol.c0,
            "c1": sol.c1,
            "q1": sol.q1,
            "s_a": sol.crit.s_a,
            "s_b": sol.crit.s_b,
        },
        "segments": [{"kind": s.kind.value, "lo": s.lo, "hi": s.hi} for s in prof.support_segments],
        "cap": prof.cap,
        "total_mass": prof.total_mass,
    }


def density_grid(prof, n: int) -> np.ndarray:
    band = prof.band
    k = np.arange(n)
    x = band.lo + (band.hi - band.lo) * 0.5 * (1 - np.cos(np.pi * k / max(n - 1, 1)))
    if band.lo == 0:
        # hard edge: skip x = 0 and resolve the power law on a geometric grid
        x = np.concatenate([band.hi * np.geomspace(1e-8, 1e-3, 16), x[1:]])
    sat = prof.saturated
    if sat is not None:
        x = np.concatenate([x, np.geomspace(sat.lo, sat.hi, max(n // 4, 2))[1:]])
    return np.unique(x)


def cmd_density(o) -> int:
    p = _params(o)
    prof = mp.mu_density(p)
    x = density_grid(prof, o["grid"])
    mu = prof.evaluator(x)
    sat = prof.saturated
    seg = np.where((sat is not None) & (x > (sat.lo if sat else np.inf)), "saturated", "band")
    ratio = mu * p.beta * p.kappa * x
    meta = _solution_meta(prof)
    prov = provenance("density", _phys_keys(o) | {"grid": o["grid"]})
    if o["format"] == "json":
        body = {"provenance": prov, "metadata": meta, "columns": ["x", "mu", "segment", "constraint_ratio"]}
        body["rows"] = [[float(a), float(b), str(c), float(d)] for a, b, c, d in zip(x, mu, seg, ratio)]
        _emit(dumps_json(body), o["out"])
    else:
        rows = zip(x.tolist(), mu.tolist(), seg.tolist(), ratio.tolist())
        _emit(format_csv(["x", "mu", "segment", "constraint_ratio"], rows, meta, prov), o["out"])
    return EXIT_OK


def cmd_arctic(o) -> int:
    tmpl = mp.EnsembleParams(o["eta"], o["theta"], o["gamma_sq"], o["beta"], min(max(o["xi_min"], -o["gamma_sq"] + 1e-12), 1.0))
    xs = np.linspace(o["xi_min"], o["xi_max"], o["xi_steps"])
    pts = mp.arctic_curve(tmpl, xs)
    prov = provenance(
        "arctic", {k: o[k] for k in ("eta", "theta", "gamma_sq", "beta", "xi_min", "xi_max", "xi_steps")}
    )
    cols = ["xi", "x_model", "x_physical", "active", "error"]
    rows = [(pt.xi, pt.x_model, pt.x_physical, pt.active, pt.error or "") for pt in pts]
    meta = {"flagged": sum(1 for pt in pts if pt.error)}
    if o["format"] == "json":
        _emit(dumps_json({"provenance": prov, "metadata": meta, "columns": cols, "rows": rows}), o["out"])
    else:
        _emit(format_csv(cols, rows, meta, prov), o["out"])
    return EXIT_OK


def shape_mass(prof, beta: float) -> float:
    """``int nu(lambda) d lambda`` evaluated in the lambda variable."""
    total = 0.0
    for seg in prof.support_segments:
        lo_l = -math.log(seg.hi) / beta
        hi_l = math.inf if seg.lo == 0 else -math.log(seg.lo) / beta
        f = lambda lam: beta * float(prof.evaluator(math.exp(-beta * lam))) * math.exp(-beta * lam)  # noqa: E731
        val, _ = integrate.quad(f, lo_l, hi_l, epsabs=1e-12, epsrel=1e-11, limit=400)
        total += val
    return total


def cmd_shape(o) -> int:
    p = _params(o)
    prof = mp.mu_density(p)
    lo_x = prof.support_segments[0].lo
    hi_x = prof.support_segments[-1].hi
    lam_lo = max(0.0, -math.log(hi_x) / p.beta)
    lam_hi = -math.log(lo_x if lo_x > 0 else 1e-6 * hi_x) / p.beta
    lam = np.linspace(lam_lo, lam_hi, o["grid"])
    pairs = mp.limit_shape(p, lam, prof)
    meta = _solution_meta(prof) | {"plateau": 1.0 / p.kappa, "lambda_support": [lam_lo, lam_hi if lo_x > 0 else math.inf]}
    footer = {"mass": shape_mass(prof, p.beta)}
    prov = provenance("shape", _phys_keys(o) | {"grid": o["grid"]})
    if o["format"] == "json":
        _emit(dumps_json({"provenance": prov, "metadata": meta, "columns": ["lambda", "nu"], "rows": pairs, "footer": footer}), o["out"])
    else:
        _emit(format_csv(["lambda", "nu"], pairs, meta, prov, footer), o["out"])
    return EXIT_OK


def cmd_verify(o) -> int:
    only = tuple(int(v) for v in str(o["only"]).split(",") if v.strip()) or None
    if o["suite"] not in ("fast", "full"):
        raise UsageError("--suite must be fast or full")
    results = ac.run_suite(o["suite"], only=only, c1_scale=o["perturb_c1"])
    report = []
    for r in results:
        sys.stderr.write(r.line() + "\n")
        item = {"id": r.id, "name": r.name, "passed": r.passed, "measured": r.measured}
        if o.get("timings"):
            item["seconds"] = r.seconds
        report.append(item)
    passed = all(r.passed for r in results)
    prov = provenance("verify", {"suite": o["suite"], "only": list(only or []), "perturb_c1": o["perturb_c1"]})
    body = {"provenance": prov, "passed": passed, "criteria": report}
    if o["format"] == "csv":
        rows = [(r.id, r.name, r.passed) for r in results]
        _emit(format_csv(["id", "name", "passed"], rows, {"passed": passed}, prov), o["out"])
    else:
        _emit(dumps_json(body), o["out"])
    return EXIT_OK if passed else EXIT_CHECK


def cmd_sample(o) -> int:
    cfg = sp.ChainConfig(o["m"], o["n"], o["q"], o["a"], o["eta"], o["theta"], o["cap"], o["burn_in"], o["thin"], o["seed"])
    res = sp.mcmc_sample(cfg, o["n_samples"])
    prov = provenance("sample", cfg.to_dict() | {"n_samples": o["n_samples"]}, {"seed": cfg.seed})
    if o["format"] == "json":
        body = {
            "provenance": prov,
            "config": cfg.to_dict(),
            "acceptance_rate": res.acceptance_rate,
            "backend": res.backend,
            "samples": [list(pp.flat) for pp in res.samples],
        }
        _emit(dumps_json(body), o["out"])
    elif o["out"] in (None, "-"):
        import tempfile, os

        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "dump.txt")
            sp.write_samples(path, res, prov)
            with open(path) as fh:
                sys.stdout.write(fh.read())
    else:
        sp.write_samples(o["out"], res, prov)
    return EXIT_OK


def cmd_partition_fn(o) -> int:
    args = (o["m"], o["n"], o["q"], o["a"], o["eta"], o["theta"])
    r = cb.partition_function(*args, o["cap"])
    body = {
        "truncated_sum": r.truncated_sum,
        "product_formula": r.product_formula,
        "tail_bound": r.tail_bound,
        "abs_difference": abs(r.truncated_sum - r.product_formula),
        "passed": r.within_bound,
    }
    prov = provenance("partition_fn", dict(zip(("m", "n", "q", "a", "eta", "theta"), args)) | {"cap": o["cap"]})
    if o["format"] == "csv":
        _emit(format_csv(["key", "value"], body.items(), {}, prov), o["out"])
    else:
        _emit(dumps_json({"provenance": prov} | body), o["out"])
    return EXIT_OK if r.within_bound else EXIT_CHECK


COMMANDS = {
    "density": cmd_density,
    "arctic": cmd_arctic,
    "shape": cmd_shape,
    "verify": cmd_verify,
    "sample": cmd_sample,
    "partition_fn": cmd_partition_fn,
}

DEFAULT_FORMAT = {"density": "csv", "arctic": "csv", "shape": "csv", "verify": "json", "sample": "csv", "partition_fn": "json"}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        o = resolve(args)
        if o.get("format") is None:
            o["format"] = DEFAULT_FORMAT[o["command"]]
        return COMMANDS[o["command"]](o)
    except UsageError as exc:
        _error_record("UsageError", str(exc), EXIT_USAGE)
        return EXIT_USAGE
    except (MBShapeError, ValueError, ArithmeticError) as exc:
        _error_record(type(exc).__name__, str(exc), EXIT_COMPUTE)
        return EXIT_COMPUTE
    except OSError as exc:
        _error_record(type(exc).__name__, str(exc), EXIT_USAGE)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
