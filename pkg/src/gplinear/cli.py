"""Command-line interface: ``gplinear {test,onesided,simulate,draws}``.

Exit codes: 0 success, 2 usage error, 3 data validation error, 4 numerical
failure.
"""

import argparse
import csv
import io
import logging
import math
import os
import sys
import warnings

import numpy as np
from threadpoolctl import threadpool_limits

from . import simulation
from .dataio import RunReport, dataset_summary, read_dataset
from .draws import (
    default_grid,
    draw_functions_posterior,
    draw_functions_prior_marginal,
    one_sided_bayes_factors,
)
from .inference import log_bf01, sample_posterior
from .model import (
    SCALES,
    NumericalFailure,
    OrthogonalityWarning,
    TestConfig,
    ValidationError,
    residualize_x,
    validate_dataset,
)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

DEFAULT_SEED = 20190101
SEED_ENV = "GPLINEAR_SEED"
THREADS_ENV = "GPLINEAR_THREADS"


class UsageError(Exception):
    """Invalid combination of command-line options."""


def _env_int(name, default):
    value = os.environ.get(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise SystemExit(f"environment variable {name} must be an integer, got {value!r}")


def parse_range(text):
    """``"0:0.5:0.1"`` (inclusive) or ``"0,0.1,0.3"`` into a list of floats."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise ValueError
            start, stop, step = parts
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        values = [float(p) for p in text.split(",") if p.strip()]
        if not values:
            raise ValueError
        return values
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected start:stop:step or a comma list, got {text!r}"
        ) from None


def parse_int_list(text):
    try:
        values = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def parse_scales(text):
    if text == "all":
        return list(SCALES)
    names = [p.strip() for p in text.split(",") if p.strip()]
    bad = [p for p in names if p not in SCALES]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"scales must be 'all' or a comma list of {', '.join(SCALES)}"
        )
    return names


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return value


def _add_common(p):
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--threads", type=positive_int, default=None,
                   help=f"cap on worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--g", type=positive_float, default=None, help="g-prior constant (default n)")
    p.add_argument("--n-quad", type=positive_int, default=201, help="quadrature nodes")
    p.add_argument("--n-is", type=positive_int, default=5000, help="importance draws")
    p.add_argument("--json", metavar="PATH", help="write the full report as JSON")


def _add_data(p):
    p.add_argument("csv", help="headered CSV file")
    p.add_argument("--y", default="y", help="outcome column")
    p.add_argument("--x", default="x", help="key predictor column")
    p.add_argument("--z", default="", help="comma-separated covariate columns")
    p.add_argument("--intercept", action="store_true", help="add a column of ones")
    p.add_argument("--center", action="store_true",
                   help="residualize the predictor on the covariates")


def _add_single_scale(p):
    p.add_argument("--scale", choices=list(SCALES), default="medium")
    p.add_argument("--s-xi", type=positive_float, default=None,
                   help="explicit prior scale for xi (overrides --scale)")
    p.add_argument("--grid-density", type=positive_int, default=None,
                   help="evaluate functions on this many equally spaced points "
                        "instead of the observed predictor values")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gplinear",
        description="Bayes factors for linear versus nonlinear effects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="log Bayes factor of linear vs nonlinear")
    _add_data(p)
    _add_common(p)
    p.add_argument("--scale", type=parse_scales, default=None,
                   help="'all' or comma list of small,medium,large (default all)")
    p.add_argument("--s-xi", type=positive_float, action="append", default=None,
                   help="explicit prior scale for xi; may be repeated")
    p.add_argument("--method", choices=["quadrature", "importance"], default="quadrature")

    p = sub.add_parser("onesided", help="consistently positive/negative slope test")
    _add_data(p)
    _add_common(p)
    _add_single_scale(p)
    p.add_argument("--draws", type=int, default=5000, help="prior and posterior draws")

    p = sub.add_parser("simulate", help="simulation grid of log Bayes factors")
    _add_common(p)
    p.add_argument("--h", type=parse_range, default=parse_range("0:0.5:0.1"))
    p.add_argument("--n", type=parse_int_list, default=[20, 50, 200])
    p.add_argument("--scales", type=parse_scales, default=list(SCALES))
    p.add_argument("--reps", type=positive_int, default=20)
    p.add_argument("--kinds", default="bump", help="comma list of bump,step")
    p.add_argument("--sigma", type=positive_float, default=0.1)
    p.add_argument("--method", choices=["quadrature", "importance"], default="quadrature")
    p.add_argument("--out", metavar="PATH", help="grid CSV path (default stdout)")

    p = sub.add_parser("draws", help="posterior mean/slope function draws as CSV")
    _add_data(p)
    _add_common(p)
    _add_single_scale(p)
    p.add_argument("--draws", type=int, default=50)
    p.add_argument("--out", metavar="PATH", help="long-format CSV path (default stdout)")
    return parser


def _config(args, **overrides):
    try:
        return TestConfig(g=args.g, seed=args.seed, n_quad=args.n_quad,
                          n_is=args.n_is, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args):
    z = [c.strip() for c in args.z.split(",") if c.strip()]
    data = read_dataset(args.csv, y=args.y, x=args.x, z=z, intercept=args.intercept)
    if args.center:
        data = residualize_x(data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", OrthogonalityWarning)
        diagnostics = validate_dataset(data)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return data, diagnostics


def _config_echo(args):
    return dict(sorted(vars(args).items()))


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _finish(args, report, out):
    if args.json:
        _write(args.json, report.to_json())
        print(f"report: {args.json}", file=out)


def cmd_test(args, out):
    data, diagnostics = _load(args)
    runs = []
    if args.s_xi:
        runs += [(f"s_xi={s:g}", {"s_xi": s}) for s in args.s_xi]
    scales = args.scale if args.scale is not None else ([] if args.s_xi else list(SCALES))
    runs = [(name, {"e": SCALES[name]}) for name in scales] + runs

    print(f"n={data.n} k={data.k} range(x)={data.x_range:.6g} seed={args.seed}", file=out)
    results = []
    for label, overrides in runs:
        cfg = _config(args, **overrides)
        res = log_bf01(data, cfg, method=args.method)
        d = res.to_dict()
        d["label"] = label
        d["e"] = cfg.e if "e" in overrides else None
        results.append(d)
        line = (f"{label:>12}  s_xi={res.s_xi:.6g}  log B01={res.log_bf01:.4f}  "
                f"B01={res.bf01:.4g}  P(M0|y)={res.posterior_prob_linear:.3f}  "
                f"P(M1|y)={1 - res.posterior_prob_linear:.3f}")
        if res.method == "importance":
            line += f"  mc_se={res.mc_se:.3g}"
        print(line, file=out)
    report = RunReport(command="test", config=_config_echo(args),
                       dataset=dataset_summary(data, diagnostics), results=results,
                       artifacts=[args.json] if args.json else [])
    _finish(args, report, out)
    return report


def _single_cfg(args):
    if args.s_xi is not None:
        return _config(args, s_xi=args.s_xi)
    return _config(args, e=SCALES[args.scale])


def cmd_onesided(args, out):
    if args.draws < 1:
        raise UsageError("--draws must be at least 1")
    data, diagnostics = _load(args)
    cfg = _single_cfg(args)
    rng = np.random.default_rng(cfg.seed)
    grid = default_grid(data.x, args.grid_density)
    samples = sample_posterior(data, cfg, args.draws, rng=rng)
    post = draw_functions_posterior(data, cfg, samples, grid=grid, seed=rng)
    prior = draw_functions_prior_marginal(grid, cfg.resolve_s_xi(data), args.draws, seed=rng)
    res = one_sided_bayes_factors(prior, post)

    print(f"n={data.n} k={data.k} grid={grid.size} draws={args.draws} "
          f"s_xi={cfg.resolve_s_xi(data):.6g} seed={cfg.seed}", file=out)
    pr, po = res.prior, res.posterior
    for h in ("pos", "neg", "comp"):
        print(f"{h:>5}: prior={pr[h]:.4f}  posterior={po[h]:.4f}  B({h})u={res.bf_u[h]:.4g}",
              file=out)
    for (a, b), v in res.bf.items():
        print(f"B({a})({b}) = {v:.4g}", file=out)
    for flag in res.flags:
        print(f"flag: {flag}", file=out)
    report = RunReport(command="onesided", config=_config_echo(args),
                       dataset=dataset_summary(data, diagnostics),
                       one_sided=res.to_dict(),
                       artifacts=[args.json] if args.json else [])
    _finish(args, report, out)
    return report


def cmd_simulate(args, out):
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    bad = [k for k in kinds if k not in simulation.KINDS]
    if bad or not kinds:
        raise UsageError(f"--kinds must be a comma list of {', '.join(simulation.KINDS)}")
    if any(n < 10 for n in args.n):
        raise UsageError("--n values must be at least 10")
    if any(h < 0 for h in args.h):
        raise UsageError("--h values must be non-negative")
    cfg = _config(args)
    rows = simulation.run_grid(args.h, args.n, args.scales, args.reps, seed=args.seed,
                               kinds=kinds, sigma=args.sigma, cfg=cfg,
                               method=args.method, n_jobs=args.threads)
    text = simulation.rows_to_csv(rows)
    summary = simulation.summarize(rows)
    summary_out = out
    if args.out:
        _write(args.out, text)
    else:
        out.write(text)
        summary_out = sys.stderr
    print(f"{len(rows)} rows, seed={args.seed}", file=summary_out)
    for s in summary:
        print(f"{s['kind']:>5} h={s['h']:<5g} n={s['n']:<4d} {s['scale']:>6}: "
              f"mean log B01={s['mean_log_bf01']:.4f} (se {s['se']:.3g})", file=summary_out)
    report = RunReport(command="simulate", config=_config_echo(args), results=summary,
                       artifacts=[p for p in (args.out, args.json) if p])
    if args.json:
        _write(args.json, report.to_json())
    return report


def draws_to_csv(data, draws):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["series", "draw", "x", "value"])
    for xi, yi in zip(data.x, data.y):
        writer.writerow(["observed", "", repr(float(xi)), repr(float(yi))])
    for series, values in (("mean", draws.mean_fn), ("slope", draws.slope)):
        for t in range(values.shape[0]):
            for g, v in zip(draws.grid, values[t]):
                writer.writerow([series, t, repr(float(g)), repr(float(v))])
    return buf.getvalue()


def cmd_draws(args, out):
    if args.draws < 1:
        raise UsageError("--draws must be at least 1")
    data, diagnostics = _load(args)
    cfg = _single_cfg(args)
    rng = np.random.default_rng(cfg.seed)
    grid = default_grid(data.x, args.grid_density)
    samples = sample_posterior(data, cfg, args.draws, rng=rng)
    draws = draw_functions_posterior(data, cfg, samples, grid=grid, seed=rng)
    text = draws_to_csv(data, draws)
    if args.out:
        _write(args.out, text)
        print(f"{data.n} observations, {args.draws} draws on {grid.size} points -> {args.out}",
              file=out)
    else:
        out.write(text)
    report = RunReport(command="draws", config=_config_echo(args),
                       dataset=dataset_summary(data, diagnostics),
                       artifacts=[p for p in (args.out, args.json) if p])
    if args.json:
        _write(args.json, report.to_json())
    return report


COMMANDS = {
    "test": cmd_test,
    "onesided": cmd_onesided,
    "simulate": cmd_simulate,
    "draws": cmd_draws,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    if args.seed is None:
        args.seed = _env_int(SEED_ENV, DEFAULT_SEED)
    if args.threads is None:
        args.threads = _env_int(THREADS_ENV, 1)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        with threadpool_limits(limits=args.threads):
            COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gplinear {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalFailure as exc:
        print(f"numerical failure (xi={exc.xi}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
