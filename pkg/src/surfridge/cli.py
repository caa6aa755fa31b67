"""Command-line front end: ``surfridge <subcommand> [options]``.

Exit status is 0 on success, 1 for usage errors and 2 for runtime or data
errors (malformed input files report the offending line).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .density import (DensityUnderflowError, GaussianKDE, density_from_dict,
                      silverman_bandwidth)
from .experiments import bandwidth_sweep, bias_experiment, rate_experiment
from .geometry import Circle, Segments, hausdorff
from .io import (DataFormatError, dumps, format_float, parse_points_csv,
                 read_points, write_json, write_points_csv)
from .ridge import SurfConfig, surf
from .synth import DEFAULT_WEB, HiddenManifoldModel, sample


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _add_surf_flags(p):
    g = p.add_argument_group("ridge search")
    g.add_argument("--d", type=int, default=1, help="ridge dimension")
    g.add_argument("--bandwidth", type=float, default=None,
                   help="kernel bandwidth (default: Silverman's rule)")
    g.add_argument("--threshold", type=float, default=0.05,
                   help="denoising threshold as a fraction of the maximum density")
    g.add_argument("--log", dest="use_log", action="store_true", default=True,
                   help="use the log-density Hessian (default)")
    g.add_argument("--no-log", dest="use_log", action="store_false")
    g.add_argument("--step-tol", type=float, default=1e-7)
    g.add_argument("--grad-tol", type=float, default=1e-6)
    g.add_argument("--max-iter", type=int, default=500)


def _add_threads(p):
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap; results do not depend on it")


def _add_manifold_flags(p):
    p.add_argument("--model", choices=("circle", "web"), default="circle",
                   help="ground-truth manifold: circle or the default segment web")
    p.add_argument("--r", type=float, default=3.0, help="circle radius")
    p.add_argument("--center", type=float, nargs=2, default=(0.0, 0.0),
                   metavar=("X", "Y"), help="circle center")


def _manifold(args):
    if args.model == "circle":
        return Circle(tuple(args.center), args.r)
    return Segments(DEFAULT_WEB)


def _config(args):
    return SurfConfig(d=args.d, bandwidth=args.bandwidth, threshold_frac=args.threshold,
                      use_log=args.use_log, step_tol=args.step_tol,
                      grad_tol=args.grad_tol, max_iter=args.max_iter)


def _hidden_model(args):
    M = _manifold(args)
    box = None if args.model == "circle" else ((0.0, 10.0), (0.0, 10.0))
    return HiddenManifoldModel(manifold=M, sigma=args.sigma, eta=args.eta, box=box,
                               seed=args.seed, weight_a=args.weight_a)


def _sidecar_path(out):
    return Path(out).with_suffix(".json")


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_generate(args):
    model = _hidden_model(args)
    X = sample(model, args.n)
    write_points_csv(args.out, X, header=args.header)
    manifest = {"command": "generate", "version": __version__, "n": args.n,
                "points_file": Path(args.out).name, "model": model.to_dict()}
    write_json(Path(args.out).with_suffix(".manifest.json"), manifest)


def cmd_surf(args):
    X = read_points(args.input)
    est = surf(X, _config(args), n_jobs=args.threads)
    write_points_csv(args.out, est.ridge_points, header=args.header)
    side = est.sidecar()
    side.update(command="surf", version=__version__, input=Path(args.input).name,
                ridge_file=Path(args.out).name)
    write_json(_sidecar_path(args.out), side)


def cmd_eval_density(args):
    if args.model_json is not None:
        desc = json.loads(Path(args.model_json).read_text())
        data = read_points(args.data) if args.data else None
        model = density_from_dict(desc, data)
    elif args.data is not None:
        model = GaussianKDE(bandwidth=args.bandwidth).fit(read_points(args.data))
    else:
        raise UsageError("eval-density needs --data or --model-json")
    if args.points is not None:
        Q = read_points(args.points)
    elif args.at:
        Q = parse_points_csv("\n".join(args.at) + "\n")
    else:
        raise UsageError("eval-density needs --at or --points")
    records = []
    for x in Q:
        info = model.log_eval(x) if args.use_log else model.eval(x)
        records.append({"x": x, "log": info.log, "value": info.value,
                        "gradient": info.gradient, "hessian": info.hessian})
    out = {"command": "eval-density", "version": __version__,
           "model": model.to_dict(), "results": records}
    _emit(dumps(out), args.out)


def cmd_hausdorff(args):
    A = read_points(args.a)
    B = read_points(args.b)
    _emit(format_float(hausdorff(A, B)) + "\n", args.out)


def _write_report(report, args):
    write_json(args.out, report.to_dict(include_timing=args.timing))
    if args.csv:
        header, rows = report.csv_rows()
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(format_float(v) if isinstance(v, (float, np.floating))
                                  else str(v) for v in row))
        Path(args.csv).write_text("\n".join(lines) + "\n")


def cmd_rate(args):
    model = _hidden_model(args)
    report = rate_experiment(args.n_grid, args.replications, model, _config(args),
                             reference=args.reference, delta_restrict=args.delta,
                             probe_count=args.probes, n_jobs=args.threads)
    _write_report(report, args)


def cmd_bias(args):
    M = _manifold(args)
    report = bias_experiment(sorted(args.sigma_grid, reverse=True), M,
                             m_quadrature=args.m_quadrature, d=args.d,
                             use_log=args.use_log, probe_count=args.probes,
                             n_jobs=args.threads)
    _write_report(report, args)


def cmd_sweep(args):
    X = read_points(args.input)
    if args.h_grid:
        grid = args.h_grid
    else:
        h0 = silverman_bandwidth(X)
        grid = [h0 * f for f in args.h_factors]
    M = _manifold(args) if args.with_truth else None
    report = bandwidth_sweep(grid, X, _config(args), args.eps_connect, manifold=M,
                             probe_count=args.probes, n_jobs=args.threads)
    _write_report(report, args)


def _add_report_flags(p, default):
    p.add_argument("--out", default=default, help="report JSON path")
    p.add_argument("--csv", default=None, help="optional one-row-per-cell CSV")
    p.add_argument("--timing", action="store_true",
                   help="include wall-clock runtimes in the JSON")
    p.add_argument("--probes", type=int, default=1000,
                   help="manifold probe count for distances")


def build_parser():
    parser = _Parser(prog="surfridge",
                     description="Density ridge estimation by subspace-constrained mean shift.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command",
                                parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("generate", help="sample the hidden-manifold model")
    _add_manifold_flags(p)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=1.0, help="signal fraction")
    p.add_argument("--weight-a", type=float, default=0.0,
                   help="circle weight 1 + a cos(theta)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="points.csv")
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("surf", help="estimate the ridge of a point cloud")
    p.add_argument("input", nargs="?", default="points.csv")
    _add_surf_flags(p)
    _add_threads(p)
    p.add_argument("--out", default="ridge.csv",
                   help="ridge CSV; diagnostics go to the same name with .json")
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_surf)

    p = sub.add_parser("eval-density", help="density, gradient and Hessian at points")
    p.add_argument("--data", default=None, help="sample for a Gaussian KDE")
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--model-json", default=None, help="serialized density model")
    p.add_argument("--at", action="append", default=[], metavar="X0,X1,...")
    p.add_argument("--points", default=None, help="CSV of query points")
    p.add_argument("--log", dest="use_log", action="store_true", default=False)
    p.add_argument("--no-log", dest="use_log", action="store_false")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval_density)

    p = sub.add_parser("hausdorff", help="Hausdorff distance between two point files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_hausdorff)

    p = sub.add_parser("rate", help="error against sample size")
    _add_manifold_flags(p)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--weight-a", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True, help="seed of replication 0")
    p.add_argument("--n-grid", type=int, nargs="+", default=[500, 2000, 8000])
    p.add_argument("--replications", type=int, default=5)
    p.add_argument("--reference", choices=("oracle_ridge", "manifold"),
                   default="oracle_ridge")
    p.add_argument("--delta", type=float, default=None,
                   help="restriction radius around the reference")
    _add_surf_flags(p)
    _add_threads(p)
    _add_report_flags(p, "rate.json")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("bias", help="manifold-to-ridge distance against noise level")
    _add_manifold_flags(p)
    p.add_argument("--sigma-grid", type=float, nargs="+", default=[0.4, 0.2, 0.1])
    p.add_argument("--m-quadrature", type=int, default=2048)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--log", dest="use_log", action="store_true", default=True)
    p.add_argument("--no-log", dest="use_log", action="store_false")
    _add_threads(p)
    _add_report_flags(p, "bias.json")
    p.set_defaults(func=cmd_bias, probes=512)

    p = sub.add_parser("sweep", help="ridge connectivity across bandwidths")
    p.add_argument("input", nargs="?", default="points.csv")
    p.add_argument("--h-grid", type=float, nargs="+", default=None)
    p.add_argument("--h-factors", type=float, nargs="+",
                   default=[1 / 8, 1 / 4, 1 / 2, 1.0],
                   help="multiples of the Silverman bandwidth (when --h-grid is absent)")
    p.add_argument("--eps-connect", type=float, default=0.15)
    p.add_argument("--with-truth", action="store_true",
                   help="also report the distance to the --model manifold")
    _add_manifold_flags(p)
    _add_surf_flags(p)
    _add_threads(p)
    _add_report_flags(p, "sweep.json")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip("\n") + "\n")
        return 1
    except (DataFormatError, DensityUnderflowError, ValueError, OSError) as exc:
        sys.stderr.write(f"surfridge: error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
