"""Command-line interface.

Subcommands: ``estimate``, ``simulate``, ``crossval``, ``oracle`` and
``generate``.  Every option can also be given in a ``--config`` file of
``key = value`` lines (``#`` starts a comment); keys are option names with
dashes or underscores, and command-line flags take precedence.

Exit status: 0 on success, 2 on input errors, 3 on estimation errors.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import oracle, simulation
from .charfn import DEFAULT_EPS_DENOM, DEFAULT_M, Sample
from .density import DEFAULT_TAU, BandwidthSet, EstimationContext
from .errors import (AllPointsTrimmed, DeconvIVError, EmptyCandidateGrid, EmptySample,
                     EstimationError, InputError, MalformedCsv, MissingColumn, TooManyFailures)
from .estimators import WeightSpec, structural_derivative, structural_derivative_averaged, wlar

COLUMNS = ("y", "x", "w1", "w2")
EXIT_OK, EXIT_INPUT, EXIT_ESTIMATION = 0, 2, 3


# ---------------------------------------------------------------------------
# data files
# ---------------------------------------------------------------------------

def fmt(v):
    """Shortest round-trip repr (at most 17 significant digits) for floats."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def read_sample(path):
    """Read a ``y,x,w1,w2`` CSV file (UTF-8, LF or CRLF)."""
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise MalformedCsv(f"not UTF-8: {exc}") from exc
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None:
        raise MalformedCsv("empty file", 1)
    header = [h.strip() for h in header]
    for name in COLUMNS:
        if name not in header:
            raise MissingColumn(name)
    extra = [h for h in header if h not in COLUMNS]
    if extra or len(header) != len(set(header)):
        raise MalformedCsv(f"unexpected header {','.join(header)}; expected y,x,w1,w2", 1)
    idx = [header.index(c) for c in COLUMNS]
    data = []
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise MalformedCsv(f"expected {len(header)} fields, found {len(row)}", lineno)
        try:
            vals = [float(row[i]) for i in idx]
        except ValueError:
            raise MalformedCsv(f"non-numeric field in {row!r}", lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise MalformedCsv("non-finite value", lineno)
        data.append(vals)
    if not data:
        raise EmptySample("no data rows")
    arr = np.array(data)
    return Sample(*arr.T)


def write_sample(sample, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in zip(sample.y, sample.x, sample.w1, sample.w2):
            w.writerow([fmt(v) for v in row])


def write_rows(rows, columns, path, fmt_name):
    """Write dict rows to ``path`` (``-`` for stdout) as CSV or JSON."""
    if fmt_name == "json":
        def clean(v):
            if isinstance(v, (float, np.floating)):
                return float(v) if math.isfinite(v) else None
            return v
        text = json.dumps([{c: clean(r.get(c)) for c in columns} for r in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])
        text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _floats(text):
    try:
        return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _point(text):
    vals = _floats(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"a point is y,x,wstar; got {text!r}")
    return tuple(vals)


def _grid(text):
    """``a,b,c`` or ``start:stop:step`` (inclusive)."""
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        parts = [float(v) for v in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = parts
        k = int(math.floor((stop - start) / step + 1e-9))
        return [round(start + i * step, 12) for i in range(k + 1)]
    return _floats(text)


def _positive(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return v


def _bandwidth(text):
    return "cv" if str(text).strip().lower() == "cv" else _positive(text)


def _add_common(p):
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--output", "-o", default="-", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_numerics(p):
    p.add_argument("--m", type=int, default=DEFAULT_M, help="half-grid size of the frequency grid")
    p.add_argument("--tau", type=_positive, default=DEFAULT_TAU, help="trimming threshold")
    p.add_argument("--eps-denom", type=_positive, default=DEFAULT_EPS_DENOM,
                   help="lower bound on |phi_W2| over the frequency grid")


def _add_cv_grid(p):
    p.add_argument("--h21-grid", type=_grid, default=None, help="candidate h21 values (a,b,c or start:stop:step)")
    p.add_argument("--h22-grid", type=_grid, default=None, help="candidate h22 values")


def build_parser():
    parser = argparse.ArgumentParser(prog="deconviv", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="structural derivative / WLAR on a data file")
    _add_common(p)
    _add_numerics(p)
    _add_cv_grid(p)
    p.add_argument("--input", "-i", required=False)
    p.add_argument("--h1", type=_positive)
    p.add_argument("--h21", type=_bandwidth)
    p.add_argument("--h22", type=_bandwidth)
    p.add_argument("--point", type=_point, action="append", default=None,
                   help="y,x,wstar for the structural derivative (repeatable)")
    p.add_argument("--average-wstar", type=_floats, default=None,
                   help="average the structural derivative over these wstar values at each point's (y, x)")
    p.add_argument("--wlar-x", type=_floats, default=None, help="x values at which to estimate the WLAR")
    p.add_argument("--tau-l", type=float, default=0.25)
    p.add_argument("--tau-u", type=float, default=0.35)
    p.add_argument("--w-lo", type=float)
    p.add_argument("--w-hi", type=float)
    p.add_argument("--n-delta", type=int, default=11)
    p.add_argument("--n-w", type=int, default=11)
    p.add_argument("--naive", action="store_true", help="treat w2 as the instrument (plug-in comparison)")

    p = sub.add_parser("simulate", help="Monte Carlo replication of the published designs")
    _add_common(p)
    _add_numerics(p)
    p.add_argument("--design", default="design1")
    p.add_argument("--estimator", type=lambda s: [t.strip() for t in s.split(",") if t.strip()],
                   default=["deconv_rho"], help=f"comma list of {', '.join(simulation.ESTIMATOR_TAGS)}")
    p.add_argument("--h1", type=_grid, default=[1.0], help="h1 value or scan list")
    p.add_argument("--h21", type=_positive, default=1.05)
    p.add_argument("--h22", type=_positive, default=2.92)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--full", action="store_true", help="500 replications as in the published tables")
    p.add_argument("--seed", type=int, default=20240501)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--point", type=_point, default=None, help="y,x,wstar (defaults to the published point)")

    p = sub.add_parser("crossval", help="LSCV bandwidths for the (Y, X) density")
    _add_common(p)
    _add_cv_grid(p)
    p.add_argument("--input", "-i")
    p.add_argument("--design", default=None, help="draw the sample from a design instead of --input")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=20240501)

    p = sub.add_parser("oracle", help="analytic identification checks")
    _add_common(p)
    p.add_argument("--design2-truth", type=float, default=None, metavar="Y",
                   help="print the nonlinear-design structural derivative at outcome Y")

    p = sub.add_parser("generate", help="write a simulated sample as CSV")
    _add_common(p)
    p.add_argument("--design", default="design1")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=20240501)
    p.add_argument("--rep", type=int, default=0, help="replication index of the substream")
    return parser


def read_config(path):
    """Parse a ``key = value`` file into a dict of strings."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    given = _explicit_dests(sub, argv[1:] if argv else [])
    for key, raw in cfg.items():
        if key in ("config", "help") or key not in actions:
            raise InputError(f"unknown config key {key!r} for {args.command}")
        if key in given:
            continue
        act = actions[key]
        try:
            if isinstance(act, argparse._StoreTrueAction):
                value = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(act, argparse._AppendAction):
                # several values separated by "|"
                value = [act.type(v) if act.type else v for v in raw.split("|")]
            elif act.type is not None:
                value = act.type(raw)
            else:
                value = raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise InputError(f"config key {key}: {exc}") from None
        if act.choices is not None and value not in act.choices:
            raise InputError(f"config key {key}: {raw!r} not in {list(act.choices)}")
        setattr(args, key, value)
    return args


def _explicit_dests(sub, argv):
    opts = {}
    for a in sub._actions:
        for s in a.option_strings:
            opts[s] = a.dest
    found = set()
    for tok in argv:
        name = tok.split("=", 1)[0]
        if name in opts:
            found.add(opts[name])
    return found


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

ESTIMATE_COLUMNS = ("kind", "y", "x", "wstar", "value", "dF_dx", "dF_dy", "dF_dw",
                    "mdF_dx", "mdF_dw", "trimmed", "message")


def _resolve_bandwidths(args, sample):
    h21, h22 = args.h21, args.h22
    if args.h1 is None or h21 is None or h22 is None:
        raise InputError("bandwidths h1, h21 and h22 are required")
    if h21 == "cv" or h22 == "cv":
        cands = _candidates(args)
        c21, c22 = simulation.crossval_bandwidths(sample, cands)
        h21 = c21 if h21 == "cv" else h21
        h22 = c22 if h22 == "cv" else h22
    return BandwidthSet(args.h1, h21, h22)


def _candidates(args):
    g21 = args.h21_grid if args.h21_grid is not None else [round(v, 2) for v in np.arange(0.5, 2.01, 0.1)]
    g22 = args.h22_grid if args.h22_grid is not None else [round(v, 2) for v in np.arange(1.0, 5.01, 0.2)]
    cands = [(a, b) for a in g21 for b in g22]
    if not cands:
        raise EmptyCandidateGrid("candidate bandwidth grid is empty")
    return cands


def cmd_estimate(args):
    if not args.input:
        raise InputError("--input is required")
    sample = read_sample(args.input)
    bw = _resolve_bandwidths(args, sample)
    if not args.point and not args.wlar_x:
        raise InputError("give at least one --point or --wlar-x")
    ctx = EstimationContext(sample, bw, m=args.m, eps_denom=args.eps_denom, tau=args.tau,
                            naive=args.naive)
    rows, ok = [], 0
    for y, x, w in args.point or []:
        row = {"kind": "rho", "y": y, "x": x, "wstar": w}
        try:
            if args.average_wstar:
                avg = structural_derivative_averaged(y, x, args.average_wstar, ctx)
                row.update(value=avg.value, wstar=";".join(fmt(v) for v in avg.used),
                           trimmed=avg.dropped)
            else:
                est = structural_derivative(y, x, w, ctx)
                row.update(value=est.value, trimmed=0, **est.components)
            ok += 1
        except EstimationError as exc:
            row.update(trimmed=1, message=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    for x in args.wlar_x or []:
        if args.w_lo is None or args.w_hi is None:
            raise InputError("--wlar-x needs --w-lo and --w-hi")
        spec = WeightSpec(args.tau_l, args.tau_u, args.w_lo, args.w_hi, args.n_delta, args.n_w)
        row = {"kind": "wlar", "x": x, "wstar": f"{fmt(args.w_lo)}:{fmt(args.w_hi)}"}
        try:
            row.update(value=wlar(x, spec, ctx), trimmed=0)
            ok += 1
        except EstimationError as exc:
            row.update(trimmed=1, message=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    write_rows(rows, ESTIMATE_COLUMNS, args.output, args.format)
    if ok == 0:
        raise AllPointsTrimmed("every query failed; " + "; ".join(r["message"] for r in rows))
    return EXIT_OK


def cmd_simulate(args):
    design = simulation.MCDesign.from_name(args.design)
    reps = 500 if args.full else args.reps
    rows = []
    for tag in args.estimator:
        if tag not in simulation.ESTIMATOR_TAGS:
            raise InputError(f"unknown estimator {tag!r}")
        scan = [None] if tag == "tsls" else args.h1
        for h1 in scan:
            bw = None if h1 is None else BandwidthSet(h1, args.h21, args.h22)
            point = None
            if args.point is not None and tag != "deconv_wlar":
                point = args.point
            try:
                rep = simulation.run_mc(design, tag, args.n, reps, bw, point, seed=args.seed,
                                        n_jobs=args.n_jobs, m=args.m, tau=args.tau,
                                        eps_denom=args.eps_denom) if tag != "tsls" else \
                    simulation.run_mc(design, tag, args.n, reps, seed=args.seed, n_jobs=args.n_jobs)
                rows.append(rep.row())
            except TooManyFailures as exc:
                rows.append({"design": design.id, "estimator": tag,
                             "h1": "" if bw is None else bw.h1,
                             "h21": "" if bw is None else bw.h21,
                             "h22": "" if bw is None else bw.h22,
                             "n": args.n, "reps": reps, "truth": math.nan, "mse": math.nan,
                             "var": math.nan, "abs_bias": math.nan, "failures": exc.failures,
                             "seed": args.seed})
                print(f"warning: {design.id} {tag} h1={h1}: {exc}", file=sys.stderr)
    write_rows(rows, simulation.MCReport.COLUMNS, args.output, args.format)
    return EXIT_OK


def cmd_crossval(args):
    if args.input:
        sample = read_sample(args.input)
    elif args.design:
        design = simulation.MCDesign.from_name(args.design)
        sample, _ = simulation.generate(design, args.n, simulation.substream(args.seed, 0))
    else:
        raise InputError("give --input or --design")
    h21, h22 = simulation.crossval_bandwidths(sample, _candidates(args))
    result = {"h21": h21, "h22": h22}
    print(json.dumps(result))
    if args.output not in (None, "-"):
        write_rows([result], ("h21", "h22"), args.output, args.format)
    return EXIT_OK


def cmd_oracle(args):
    if args.design2_truth is not None:
        value = simulation.truth(simulation.MCDesign.design2(), "rho", (args.design2_truth, None, None))
        print(f"{value:.6f}")
        return EXIT_OK
    worst_rho, worst_q = oracle.identification_check()
    print(f"identification check: max |rho - 0.25| = {worst_rho:.3e}")
    print(f"quantile representation: max |integrand - 0.25| = {worst_q:.3e}")
    passed = worst_rho < 1e-10 and worst_q < 1e-10
    print("PASS" if passed else "FAIL")
    if args.output not in (None, "-"):
        write_rows([{"check": "rho", "max_error": worst_rho}, {"check": "quantile", "max_error": worst_q}],
                   ("check", "max_error"), args.output, args.format)
    return EXIT_OK if passed else 1


def cmd_generate(args):
    design = simulation.MCDesign.from_name(args.design)
    sample, _ = simulation.generate(design, args.n, simulation.substream(args.seed, args.rep))
    if args.output in (None, "-"):
        raise InputError("generate needs --output")
    write_sample(sample, args.output)
    return EXIT_OK


COMMANDS = {"estimate": cmd_estimate, "simulate": cmd_simulate, "crossval": cmd_crossval,
            "oracle": cmd_oracle, "generate": cmd_generate}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (ValueError, DeconvIVError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
