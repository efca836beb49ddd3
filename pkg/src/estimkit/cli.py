"""Command-line interface: ``estimkit <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import io as eio
from .errors import BadGrid, EstimkitError, ParseError, UsageError
from .npdensity import joint_density_np, marginal_density_np, normalize
from .paramdensity import (
    conditional_density,
    cumulative,
    fit_polynomial_density,
    marginal_by_integration,
    normalize_poly,
    term_labels,
)
from .series import build_empirical_cdf, make_grid
from .synthlab import (
    TRUTHS,
    GbmParams,
    HestonParams,
    error_report,
    gen_bivariate_gaussian,
    gen_gbm,
    gen_heston,
    kde_density,
)
from .volatility import MODES, rolling_mean, vol_series, volvol_series

DEFAULT_GRID_STEPS = 50


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def default_seed() -> int:
    raw = os.environ.get("ESTIMKIT_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"ESTIMKIT_SEED must be an integer, got {raw!r}") from None


def _emit(text: str, output: str | None) -> None:
    if output:
        eio.atomic_write(output, text)
    else:
        sys.stdout.write(text)


def _add_output(p, formats=("csv", "json")):
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, default=formats[0])


def _add_grid(p):
    p.add_argument("--x-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--dx", type=float)
    p.add_argument("--y-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--dy", type=float)


def resolve_grid(args, samples):
    """Grid from flags; unset ranges default to the sample span, steps to span/50."""
    def axis(rng, step, data, label):
        lo, hi = (float(data.min()), float(data.max())) if rng is None else rng
        if step is None:
            if not hi > lo:
                raise BadGrid(f"cannot derive a default {label} grid from a constant sample")
            step = (hi - lo) / DEFAULT_GRID_STEPS
        return (lo, hi), step

    xr, dx = axis(args.x_range, args.dx, samples.xs, "x")
    yr, dy = axis(args.y_range, args.dy, samples.ys, "y")
    return make_grid(xr, dx, yr, dy)


def cmd_vol(args):
    series = eio.ingest_prices(args.input, dt=args.dt)
    vols = vol_series(series)
    scale = math.sqrt(1.0 / vols.dt) if args.annualize else None
    if args.format == "json":
        payload = {"start_index": vols.start_index, "dt": vols.dt, "t": vols.index, "v": vols.values}
        if scale is not None:
            payload["v_annualized_display"] = vols.values * scale
        _emit(eio.dumps_json(payload), args.output)
        return
    if scale is None:
        text = eio.write_rows(["t", "v"], ((int(t), eio.fmt(v)) for t, v in zip(vols.index, vols.values)))
    else:
        text = eio.write_rows(["t", "v", "v_annualized_display"],
                              ((int(t), eio.fmt(v), eio.fmt(v * scale)) for t, v in zip(vols.index, vols.values)))
    _emit(text, args.output)


def cmd_volvol(args):
    header = eio.read_header(args.input)
    if header in eio.VOL_HEADERS:
        vols = eio.ingest_vols(args.input)
    else:
        vols = vol_series(eio.ingest_prices(args.input, dt=args.dt))
    gam = volvol_series(vols, mode=args.mode)
    if args.window:
        gam = rolling_mean(gam, args.window)
    if args.format == "json":
        _emit(eio.dumps_json({"mode": gam.mode, "window": gam.window, "dropped_count": gam.dropped_count,
                              "t": gam.index, "gamma": gam.values}), args.output)
        return
    rows = ((int(t), eio.fmt(g), gam.mode) for t, g in zip(gam.index, gam.values))
    _emit(eio.write_rows(["t", "gamma", "mode"], rows), args.output)


def cmd_density_np(args):
    samples = eio.ingest_pairs(args.input)
    grid = resolve_grid(args, samples)
    ecdf = build_empirical_cdf(samples)
    if args.marginal:
        density = marginal_density_np(ecdf, args.marginal, grid.axis(args.marginal))
    else:
        density = joint_density_np(ecdf, grid)
    if args.normalize:
        density = normalize(density)
    if args.format == "json":
        _emit(eio.dumps_json(eio.density_dict(density)), args.output)
    else:
        _emit(eio.density_csv(density), args.output)


def _parse_conditional(text: str):
    try:
        axis, value = text.split("=", 1)
        axis = axis.strip().lower()
        if axis not in ("x", "y"):
            raise ValueError
        return axis, float(value)
    except ValueError:
        raise UsageError(f"--conditional expects x=VALUE or y=VALUE, got {text!r}") from None


def _parse_point(text: str):
    try:
        x, y = (float(v) for v in text.split(","))
        return x, y
    except ValueError:
        raise UsageError(f"--cdf expects X,Y, got {text!r}") from None


def cmd_density_fit(args):
    header = eio.read_header(args.input)
    if header == ["x", "y", "density"]:
        pts, vals = eio.ingest_targets(args.input)
        poly = fit_polynomial_density(pts, args.order, values=vals)
    else:
        samples = eio.ingest_pairs(args.input)
        grid = resolve_grid(args, samples)
        surface = joint_density_np(build_empirical_cdf(samples), grid)
        poly = fit_polynomial_density(surface, args.order)
    if args.normalize:
        poly = normalize_poly(poly)

    result = {"density": poly.to_dict(), "terms": term_labels(poly.order), "formula": poly.formula()}
    if args.marginal:
        other = "y" if args.marginal == "x" else "x"
        result["marginal"] = marginal_by_integration(poly, other).to_dict()
    if args.conditional:
        axis, value = _parse_conditional(args.conditional)
        result["conditional"] = {"given": axis, "value": value,
                                 **conditional_density(poly, axis, value).to_dict()}
    if args.cdf:
        point = _parse_point(args.cdf)
        result["cdf"] = {"upper": list(point), "probability": cumulative(poly, point)}

    print(poly.formula(), file=sys.stderr if not args.output else sys.stdout)
    if args.format == "json":
        _emit(eio.dumps_json(result), args.output)
    else:
        rows = ((lbl, eio.fmt(c)) for lbl, c in zip(result["terms"], poly.coefficients))
        _emit(eio.write_rows(["term", "coefficient"], rows), args.output)


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc.strerror}", location=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", location=f"{path}:{exc.lineno}") from exc
    if not isinstance(cfg, dict):
        raise ParseError("config must be a JSON object", location=str(path))
    return cfg


def _params(cls, cfg: dict, args):
    known = set(cls.__dataclass_fields__)
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown {cls.__name__} fields: {', '.join(sorted(unknown))}")
    cfg = dict(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", default_seed())
    if args.n is not None:
        cfg["n_steps"] = args.n
    return cls(**cfg)


def cmd_simulate(args):
    cfg = _load_config(args.config)
    if args.model == "gbm":
        series = gen_gbm(_params(GbmParams, cfg, args))
        _emit(eio.emit_prices(series), args.output)
    elif args.model == "heston":
        series, variance = gen_heston(_params(HestonParams, cfg, args))
        if args.variance_output:
            rows = ((t, eio.fmt(v)) for t, v in enumerate(variance))
            eio.atomic_write(args.variance_output, eio.write_rows(["t", "variance"], rows))
        _emit(eio.emit_prices(series), args.output)
    else:
        unknown = set(cfg) - {"mean", "cov", "n", "seed"}
        if unknown:
            raise UsageError(f"unknown gaussian fields: {', '.join(sorted(unknown))}")
        seed = args.seed if args.seed is not None else cfg.get("seed", default_seed())
        n = args.n if args.n is not None else cfg.get("n", 1000)
        samples = gen_bivariate_gaussian(cfg.get("mean", [0.0, 0.0]), cfg.get("cov", [[1.0, 0.0], [0.0, 1.0]]),
                                         n, seed)
        _emit(eio.emit_pairs(samples), args.output)


def cmd_compare(args):
    if args.input:
        samples = eio.ingest_pairs(args.input)
    else:
        if args.truth != "std-normal-2d":
            raise UsageError("without --input only the std-normal-2d benchmark can be generated")
        seed = args.seed if args.seed is not None else default_seed()
        samples = gen_bivariate_gaussian([0.0, 0.0], np.eye(2), args.n, seed)
    truth = TRUTHS[args.truth]
    grid = resolve_grid(args, samples)
    np_est = joint_density_np(build_empirical_cdf(samples), grid)
    if args.normalize:
        np_est = normalize(np_est)
    bandwidth = args.bandwidth if args.bandwidth == "silverman" else float(args.bandwidth)
    kde_est = kde_density(samples, grid, bandwidth=bandwidth)
    reports = [error_report(np_est, truth, grid), error_report(kde_est, truth, grid)]
    ratio = reports[0].mise / reports[1].mise if reports[1].mise > 0 else math.inf

    fields = ["estimator", "mae", "rmse", "mise", "sup_error"]
    table_rows = [[r.estimator] + [eio.fmt(getattr(r, f)) for f in fields[1:]] for r in reports]
    if args.format == "json":
        text = eio.dumps_json({"truth": args.truth, "n": samples.n, "grid": grid.to_dict(),
                               "reports": [r.to_dict() for r in reports], "mise_ratio_np_over_kde": ratio})
    else:
        text = eio.write_rows(fields, table_rows)
    _emit(text, args.output)
    if args.output:
        width = max(len(r[0]) for r in table_rows)
        print("  ".join([f"{'estimator':<{width}}"] + [f"{f:>14}" for f in fields[1:]]))
        for row in table_rows:
            print("  ".join([f"{row[0]:<{width}}"] + [f"{v:>14}" for v in row[1:]]))
        print(f"mise ratio np/kde: {eio.fmt(ratio)}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="estimkit", description="Density, volatility and vol-of-vol estimators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("vol", help="per-step volatility |dS|/S")
    p.add_argument("--input", "-i", required=True, help="timestamp,price CSV")
    p.add_argument("--dt", type=float, help="sampling interval (default: median timestamp spacing)")
    p.add_argument("--annualize", action="store_true", help="add a sqrt(1/dt)-scaled display column")
    _add_output(p)
    p.set_defaults(func=cmd_vol)

    p = sub.add_parser("volvol", help="volatility of volatility")
    p.add_argument("--input", "-i", required=True, help="timestamp,price CSV or t,v CSV from `vol`")
    p.add_argument("--mode", choices=MODES, default="literal")
    p.add_argument("--window", type=int, help="rolling-mean window")
    p.add_argument("--dt", type=float)
    _add_output(p)
    p.set_defaults(func=cmd_volvol)

    p = sub.add_parser("density-np", help="non-parametric density from empirical CDF differences")
    p.add_argument("--input", "-i", required=True, help="x,y CSV")
    _add_grid(p)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--marginal", choices=("x", "y"), help="emit the marginal curve instead of the joint surface")
    _add_output(p)
    p.set_defaults(func=cmd_density_np)

    p = sub.add_parser("density-fit", help="Taylor-polynomial density fitted by least squares")
    p.add_argument("--input", "-i", required=True, help="x,y sample CSV or x,y,density target CSV")
    p.add_argument("--order", type=int, default=2)
    _add_grid(p)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--marginal", choices=("x", "y"), help="also emit the marginal over this variable")
    p.add_argument("--conditional", metavar="AXIS=VAL", help="also emit f(.|AXIS=VAL)")
    p.add_argument("--cdf", metavar="X,Y", help="also emit the cumulative probability up to (X, Y)")
    _add_output(p, formats=("json", "csv"))
    p.set_defaults(func=cmd_density_fit)

    p = sub.add_parser("simulate", help="seeded synthetic data")
    p.add_argument("model", choices=("gbm", "heston", "gaussian"))
    p.add_argument("--config", help="JSON parameter file")
    p.add_argument("--seed", type=int, help="overrides config; default $ESTIMKIT_SEED or 0")
    p.add_argument("--n", type=int, help="steps (gbm/heston) or samples (gaussian)")
    p.add_argument("--variance-output", help="heston only: write the latent variance path here")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="np density vs KDE against an analytic truth")
    p.add_argument("--input", "-i", help="x,y CSV (default: generate std-normal-2d samples)")
    p.add_argument("--truth", choices=sorted(TRUTHS), default="std-normal-2d")
    p.add_argument("--n", type=int, default=100_000, help="sample size when generating")
    p.add_argument("--seed", type=int)
    p.add_argument("--bandwidth", default="silverman", help="'silverman' or a positive number")
    p.add_argument("--normalize", action="store_true", help="normalize the np estimate first")
    _add_grid(p)
    _add_output(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except EstimkitError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return exc.exit_code
    except ValueError as exc:
        sys.stderr.write(json.dumps({"code": "invalid_input", "message": str(exc)}) + "\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
