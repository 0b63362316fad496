"""Batch command-line front end.

Subcommands: ``kernel``, ``poisson``, ``heat``, ``op``, ``converge`` and
``verify``. Tables go to CSV (17 significant digits) or JSON (with
diagnostics). Exit codes: 0 success, 1 usage error, 2 numerical failure,
3 verification failure. ``HYPFRACP_THREADS`` sets the worker count of
``converge``.
"""

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .geometry import origin, polar_point
from .heat import heat_kernel
from .kernels import Params, log_kernel_K, poisson_kernel
from .limits import SweepRecord, extrapolate_s, moment_integral, moment_limit, sweep_limit, tail_integral
from .operator import classical_plap, frac_plap, result_record, u1, u2
from .quadrature import QuadratureSpec

__all__ = ["main", "build_parser", "parse_grid", "read_config", "UsageError"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
THREADS_ENV = "HYPFRACP_THREADS"
_TEST_FUNCTIONS = {"u1": u1, "u2": u2}
_REPRESENTATIONS = ("singular", "semigroup", "extension")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_grid(text):
    """``"a:b:N"`` (N points, geometric when ``a > 0``) or a comma list."""
    text = str(text).strip()
    try:
        if ":" in text:
            a, b, k = text.split(":")
            a, b, k = float(a), float(b), int(k)
            if k < 1 or not b >= a:
                raise ValueError
            if k == 1:
                return [a]
            return (np.geomspace(a, b, k) if a > 0 else np.linspace(a, b, k)).tolist()
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use a:b:N or a comma list") from None
    if not vals:
        raise UsageError("grid is empty")
    return vals


def read_config(path):
    """Plain ``key = value`` lines; ``#`` starts a comment. Keys use flag names."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key = value")
        key, val = (v.strip() for v in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


_QUAD_FIELDS = {f.name: f.type for f in dataclasses.fields(QuadratureSpec)}


def _common(p):
    p.add_argument("--config", help="key = value file; explicit flags take precedence")
    p.add_argument("--output", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--quad", action="append", default=[], metavar="KEY=VALUE",
                   help="override a quadrature setting, e.g. rho_max=60")


def _params_flags(p, s=True, p_flag=True):
    p.add_argument("--n", type=int)
    if s:
        p.add_argument("--s", type=float)
    if p_flag:
        p.add_argument("--p", type=float)


def build_parser():
    parser = _Parser(prog="hypfracp", description="Fractional p-Laplacian on hyperbolic space")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    k = sub.add_parser("kernel", help="tabulate the singular kernel")
    _params_flags(k)
    k.add_argument("--rho", type=float)
    k.add_argument("--rho-grid")
    _common(k)

    pk = sub.add_parser("poisson", help="tabulate the Poisson kernel")
    _params_flags(pk)
    pk.add_argument("--y", type=float)
    pk.add_argument("--rho", type=float)
    pk.add_argument("--rho-grid")
    _common(pk)

    h = sub.add_parser("heat", help="tabulate the heat kernel")
    h.add_argument("--n", type=int)
    h.add_argument("--t", type=float)
    h.add_argument("--rho", type=float)
    h.add_argument("--rho-grid")
    _common(h)

    o = sub.add_parser("op", help="evaluate the fractional operator at one point")
    _params_flags(o)
    o.add_argument("--u", choices=sorted(_TEST_FUNCTIONS))
    o.add_argument("--r0", type=float, help="distance of x from the pole (default 1)")
    o.add_argument("--representation", choices=(*_REPRESENTATIONS, "all"))
    _common(o)

    c = sub.add_parser("converge", help="sweep s toward 1")
    _params_flags(c, s=False)
    c.add_argument("--u", choices=sorted(_TEST_FUNCTIONS))
    c.add_argument("--r0", type=float)
    c.add_argument("--s-grid", help="s values (default 1 - 2^-k, k = 2..7)")
    c.add_argument("--quantity", choices=("operator", "moment", "tail"))
    c.add_argument("--R", type=float, dest="R")
    c.add_argument("--beta", type=float)
    c.add_argument("--representation", choices=_REPRESENTATIONS)
    _common(c)

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--quick", action="store_true")
    v.add_argument("--only", help="comma list of check numbers")
    _common(v)
    return parser


def _merge(args):
    """Fill unset flags from the config file, then from defaults."""
    opts = vars(args).copy()
    if opts.get("config"):
        for key, val in read_config(opts["config"]).items():
            if key in _QUAD_FIELDS:
                opts["quad"] = [f"{key}={val}", *opts["quad"]]
            elif key not in opts:
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            elif opts[key] is None or opts[key] is False:
                opts[key] = val
    return opts


def _quad_spec(items):
    kw = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"bad quadrature override {item!r}")
        key, val = (v.strip() for v in item.split("=", 1))
        if key not in _QUAD_FIELDS:
            raise UsageError(f"unknown quadrature setting {key!r}")
        if key in kw:
            continue  # first occurrence wins: flags are listed before config entries
        typ = _QUAD_FIELDS[key]
        try:
            kw[key] = int(val) if typ in (int, "int") else float(val)
        except ValueError:
            raise UsageError(f"bad value for {key}: {val!r}") from None
    try:
        return QuadratureSpec(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _get(opts, key, cast, default=None, required=False):
    val = opts.get(key)
    if val is None:
        if required:
            raise UsageError(f"--{key.replace('_', '-')} is required")
        return default
    try:
        return cast(val)
    except (TypeError, ValueError):
        raise UsageError(f"bad value for --{key.replace('_', '-')}: {val!r}") from None


def _params(opts, s=None):
    try:
        return Params(_get(opts, "n", int, required=True),
                      s if s is not None else _get(opts, "s", float, required=True),
                      _get(opts, "p", float, required=True))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _rho_values(opts, default="0.01:10:200"):
    if opts.get("rho") is not None:
        return [_get(opts, "rho", float)]
    return parse_grid(opts.get("rho_grid") or default)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(opts, columns, rows, meta):
    fmt = opts.get("format") or "csv"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
        text = buf.getvalue()
    else:
        text = json.dumps(_jsonable({**meta, "rows": rows}), indent=2, sort_keys=True) + "\n"
    if opts.get("output"):
        with open(opts["output"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check_finite(rows, columns):
    for r in rows:
        for c in columns:
            v = r[c]
            if isinstance(v, float) and not math.isfinite(v):
                raise ArithmeticError(f"non-finite {c} in output")


def _cmd_kernel(opts):
    P = _params(opts)
    rho = np.asarray(_rho_values(opts))
    if np.any(rho <= 0):
        raise UsageError("rho values must be positive")
    h = 1e-4
    lk = log_kernel_K(P, rho)
    slope = (np.atleast_1d(log_kernel_K(P, rho * math.exp(h))) - np.atleast_1d(log_kernel_K(P, rho * math.exp(-h)))) / (2 * h)
    K = np.exp(np.atleast_1d(lk))
    rows = [{"rho": float(r), "K": float(k), "log_slope": float(sl)} for r, k, sl in zip(rho, K, slope)]
    cols = ["rho", "K", "log_slope"]
    _check_finite(rows, cols)
    _emit(opts, cols, rows, {"command": "kernel", "params": P.to_dict()})


def _cmd_poisson(opts):
    P = _params(opts)
    y = _get(opts, "y", float, required=True)
    if not y > 0:
        raise UsageError("--y must be positive")
    rho = np.asarray(_rho_values(opts))
    if np.any(rho <= 0):
        raise UsageError("rho values must be positive")
    vals = np.atleast_1d(poisson_kernel(P, rho, y))
    rows = [{"rho": float(r), "P": float(v)} for r, v in zip(rho, vals)]
    _check_finite(rows, ["rho", "P"])
    _emit(opts, ["rho", "P"], rows, {"command": "poisson", "params": P.to_dict(), "y": y})


def _cmd_heat(opts):
    n = _get(opts, "n", int, required=True)
    t = _get(opts, "t", float, required=True)
    if n < 1 or not t > 0:
        raise UsageError("heat needs n >= 1 and t > 0")
    rho = np.asarray(_rho_values(opts))
    if np.any(rho < 0):
        raise UsageError("rho values must be nonnegative")
    vals = np.atleast_1d(heat_kernel(n, t, rho))
    rows = [{"rho": float(r), "p": float(v)} for r, v in zip(rho, vals)]
    _check_finite(rows, ["rho", "p"])
    _emit(opts, ["rho", "p"], rows, {"command": "heat", "n": n, "t": t})


def _test_function(opts, n):
    return _TEST_FUNCTIONS[_get(opts, "u", str, default="u2")](n)


def _basepoint(opts, n):
    r0 = _get(opts, "r0", float, default=1.0)
    if r0 < 0:
        raise UsageError("--r0 must be nonnegative")
    return polar_point(r0, np.eye(n)[0]) if r0 > 0 else origin(n)


def _cmd_op(opts):
    P = _params(opts)
    quad = _quad_spec(opts["quad"])
    u = _test_function(opts, P.n)
    x = _basepoint(opts, P.n)
    rep = _get(opts, "representation", str, default="all")
    reps = _REPRESENTATIONS if rep == "all" else (rep,)
    rows, records = [], []
    for r in reps:
        res = frac_plap(u, x, P, r, quad)
        rows.append({"representation": r, "value": res.value, "err": res.err_estimate})
        records.append(result_record(P, r, res))
    cols = ["representation", "value", "err"]
    _check_finite(rows, ["value"])
    _emit(opts, cols, rows, {"command": "op", "params": P.to_dict(), "u": u.descriptor,
                             "x": x.to_list(), "records": records})


def _workers():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _cmd_converge(opts):
    n = _get(opts, "n", int, required=True)
    p = _get(opts, "p", float, required=True)
    quad = _quad_spec(opts["quad"])
    grid = opts.get("s_grid")
    ss = sorted(parse_grid(grid)) if grid else [1.0 - 2.0 ** -k for k in range(2, 8)]
    try:
        for s in ss:
            Params(n, s, p)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    quantity = _get(opts, "quantity", str, default="operator")
    if quantity == "operator":
        u = _test_function(opts, n)
        x = _basepoint(opts, n)
        rep = _get(opts, "representation", str, default="singular")
        classical = classical_plap(u, x, p)

        def one(s):
            try:
                res = frac_plap(u, x, Params(n, s, p), rep, quad)
                return SweepRecord(s, res.value, classical, res.value - classical, res.err_estimate)
            except (ArithmeticError, ValueError):
                return SweepRecord(s, float("nan"), classical, float("nan"), float("inf"))
    else:
        R = _get(opts, "R", float, default=1.0)
        beta = _get(opts, "beta", float, default=0.0)
        if R <= 0 or beta < 0:
            raise UsageError("--R must be positive and --beta nonnegative")
        # the s -> 1 limit: the closed form for beta = 0 moments, otherwise 0
        target = moment_limit(n, p) if quantity == "moment" and beta == 0 else 0.0

        def one(s):
            P = Params(n, s, p)
            v = tail_integral(P, R, quad) if quantity == "tail" else moment_integral(P, R, beta, quad)
            return SweepRecord(s, v, target, v - target, 0.0)

    with ThreadPoolExecutor(max_workers=_workers()) as ex:
        records = list(ex.map(one, ss))  # map preserves the order of ss
    rows = [r.to_dict() for r in records]
    cols = ["s", "value_fractional", "value_classical", "gap", "err"]
    good = [r for r in records if math.isfinite(r.value_fractional)]
    if len(good) < 3:
        raise ArithmeticError("fewer than three sweep points succeeded")
    if quantity == "operator":
        summary = sweep_limit(good)
    else:
        L, err = extrapolate_s([r.s for r in good], [r.value_fractional for r in good])
        summary = {"limit": L, "err": err, "target": target}
    _emit(opts, cols, rows, {"command": "converge", "quantity": quantity, "n": n, "p": p,
                             "limit": summary})


def _cmd_verify(opts):
    from .acceptance import run_all

    only = None
    if opts.get("only"):
        try:
            only = {int(v) for v in str(opts["only"]).split(",") if v.strip()}
        except ValueError:
            raise UsageError("--only takes a comma list of check numbers") from None
    quick = opts.get("quick") in (True, "true", "True", "1", "yes")
    results = run_all(quick=quick, seed=_get(opts, "seed", int), only=only)
    # the table goes to stderr when stdout carries the data
    table = sys.stderr if opts.get("format") and not opts.get("output") else sys.stdout
    for r in results:
        print(r.line(), file=table)
    if opts.get("output") or opts.get("format"):
        rows = [{"number": r.number, "name": r.name, "passed": r.passed, "measured": r.measured,
                 "tolerance": r.tolerance, "seconds": r.seconds, "detail": r.detail} for r in results]
        _emit(opts, ["number", "name", "passed", "measured", "tolerance", "seconds"], rows,
              {"command": "verify", "quick": quick})
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=table)
    return EXIT_VERIFY if failed else EXIT_OK


_COMMANDS = {
    "kernel": _cmd_kernel,
    "poisson": _cmd_poisson,
    "heat": _cmd_heat,
    "op": _cmd_op,
    "converge": _cmd_converge,
    "verify": _cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        opts = _merge(args)
        return _COMMANDS[args.command](opts) or EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # domain errors raised by the library, e.g. a vanishing gradient
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
