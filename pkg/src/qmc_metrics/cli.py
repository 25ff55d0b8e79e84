"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 data, numerical or
I/O error. Every run logs its resolved configuration (seeds included) to
stderr as one JSON line. ``--json FILE`` writes the result as JSON with
``"schema": 1``; identical flags give byte-identical JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from .errors import ConfigurationError, QMCMetricsError
from .extrapolate import InfinityConfig, score_infinity
from .frechet import fid_at_n, frechet_distance, gaussian_stats
from .gaussianize import normal_points
from .inception import inception_score, is_at_n, is_with_splits
from .io import load_matrix, load_posteriors, load_stats, save_features, save_stats
from .lds import SamplerSpec, unit_points
from .oracles import TwoClassPosteriorOracle, bias_study, crossing_demo, make_generator

log = logging.getLogger("qmc_metrics")

SCHEMA = 1
_SCHEMES = {"n": "regular_in_n", "inv-n": "regular_in_inv_n"}
_KINDS = {"uniform": "iid_uniform", "sobol": "sobol"}
_TRANSFORMS = {"icdf": "icdf", "bm": "box_muller"}

GAUSSIAN_STUDY = {
    "feature_dim": 16, "latent_dim": 8, "scale": 1.0, "offset": 0.0, "generator_seed": 0,
    "samplers": ["normal", "sobol_inv"],
    "n_grid": [500, 1000, 2000, 3000, 5000, 7500, 10000, 15000, 20000],
    "replicates": 50, "seed": 0, "nested": False,
}
POSTERIOR_STUDY = {
    "alpha": 2.0, "beta": 5.0,
    "samplers": ["normal", "sobol_inv"],
    "n_grid": [50, 100, 200, 500],
    "replicates": 2000, "seed": 0, "nested": True,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write_json(path, obj) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(_dump({"schema": SCHEMA, **obj}))


def _infinity_config(args) -> InfinityConfig:
    return InfinityConfig(pool_size=args.pool_size, num_points=args.points, min_batch=args.min_batch,
                          scheme=_SCHEMES[args.scheme], replicates=args.replicates,
                          weighted=args.weighted, resample=args.resample)


def cmd_sample(args) -> None:
    spec = SamplerSpec(_KINDS[args.kind], args.dim, args.seed, not args.no_scramble)
    if args.transform:
        pts = normal_points(spec, _TRANSFORMS[args.transform], args.start_index, args.n)
    else:
        pts = unit_points(spec, args.start_index, args.n)
    save_features(args.out, pts.points, args.dtype)
    _write_json(args.json, {"command": "sample", "rows": args.n, "cols": args.dim,
                            "start_index": int(pts.start_index), "out": args.out})


def cmd_stats(args) -> None:
    stats = gaussian_stats(load_matrix(args.features))
    save_stats(args.out, stats)
    _write_json(args.json, {"command": "stats", "dim": stats.dim, "n_source": stats.n_source,
                            "out": args.out})


def cmd_fid(args) -> None:
    feats = load_matrix(args.gen)
    ref = load_stats(args.ref_stats)
    if args.n is None:
        value = frechet_distance(gaussian_stats(feats), ref, args.jitter)
    else:
        value = fid_at_n(feats, ref, args.n, args.seed, args.jitter)
    print(repr(value))
    _write_json(args.json, {"command": "fid", "fid": value, "n": args.n, "seed": args.seed,
                            "jitter": args.jitter})


def cmd_is(args) -> None:
    post = load_posteriors(args.posteriors)
    if args.n is not None:
        value, std = is_at_n(post, args.n, args.seed), 0.0
    elif args.splits > 1:
        value, std = is_with_splits(post, args.splits, args.seed)
    else:
        value, std = inception_score(post), 0.0
    print(repr(value) if args.splits <= 1 else f"{value!r} {std!r}")
    _write_json(args.json, {"command": "is", "is": value, "std": std, "n": args.n,
                            "splits": args.splits, "seed": args.seed})


def _report_infinity(args, result) -> None:
    for w in result.warnings:
        log.warning(w)
    print(repr(result.replicate_mean))
    _write_json(args.json, result.to_dict())


def cmd_fid_infinity(args) -> None:
    result = score_infinity(load_matrix(args.gen), load_stats(args.ref_stats), _infinity_config(args),
                            args.seed, args.jitter)
    _report_infinity(args, result)


def cmd_is_infinity(args) -> None:
    result = score_infinity(load_posteriors(args.posteriors), None, _infinity_config(args), args.seed)
    _report_infinity(args, result)


def _study_config(args) -> dict:
    config = dict(GAUSSIAN_STUDY if args.oracle == "gaussian" else POSTERIOR_STUDY)
    if args.config:
        with open(args.config) as fh:
            user = json.load(fh)
        unknown = sorted(set(user) - set(config))
        if unknown:
            raise ConfigurationError(f"unknown bias-study config keys: {unknown}")
        config.update(user)
    return config


def cmd_bias_study(args) -> None:
    cfg = args.resolved
    if args.oracle == "gaussian":
        target = make_generator(cfg["feature_dim"], cfg["latent_dim"], cfg["scale"], cfg["offset"],
                                cfg["generator_seed"])
    else:
        target = TwoClassPosteriorOracle(cfg["alpha"], cfg["beta"])
    report = bias_study(target, cfg["samplers"], cfg["n_grid"], cfg["replicates"], cfg["seed"],
                        nested=cfg["nested"])
    if args.out_csv:
        with open(args.out_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sampler", "n", "replicate", "score"])
            for s, n, r, v in report.rows():
                w.writerow([s, n, r, repr(v)])
    out = {"command": "bias-study", "oracle": args.oracle, "config": cfg, **report.to_dict()}
    for path in {args.out_json, args.json} - {None}:
        _write_json(path, out)
    for s in report.samplers:
        fit = report.fits[s]
        print(f"{s}: slope {fit.slope!r} +/- {fit.slope_se!r}, r2 {fit.r_squared!r}")


def cmd_crossing_demo(args) -> None:
    report = crossing_demo(replicates=args.replicates, seed=args.seed, n_cross=args.n_cross,
                           feature_dim=args.dim, shuffles=args.shuffles,
                           paired=not args.unpaired)
    if args.out_csv:
        with open(args.out_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["generator", "n", "replicate", "score"])
            for g, n, r, v in report.rows():
                w.writerow([g, n, r, repr(v)])
    _write_json(args.json, {"command": "crossing-demo", **report.to_dict()})
    print(f"flipped {report.flipped}, crossing_n {report.crossing_n!r}, "
          f"intercept agreement {report.intercept_agreement!r}")


def _add_infinity_flags(p) -> None:
    p.add_argument("--pool-size", type=int, default=50_000)
    p.add_argument("--points", type=int, default=15)
    p.add_argument("--min-batch", type=int, default=5_000)
    p.add_argument("--scheme", choices=sorted(_SCHEMES), default="n")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--resample", choices=["without-replacement", "with-replacement"],
                   default="without-replacement")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qmc-metrics", description="Quasi-Monte Carlo sampling and N-corrected FID/IS.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        p.add_argument("--json", metavar="FILE", help="also write the result as JSON")
        return p

    p = add("sample", cmd_sample, "write uniform or normal points to FMAT")
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-scramble", action="store_true")
    p.add_argument("--transform", choices=sorted(_TRANSFORMS))
    p.add_argument("--start-index", type=int)
    p.add_argument("--dtype", choices=["f64", "f32"], default="f64")
    p.add_argument("--out", required=True)

    p = add("stats", cmd_stats, "persist mean and covariance of a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)

    p = add("fid", cmd_fid, "FID of a feature file against reference stats")
    p.add_argument("--gen", required=True)
    p.add_argument("--ref-stats", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jitter", type=float, default=0.0)

    p = add("is", cmd_is, "Inception Score of a posterior matrix")
    p.add_argument("--posteriors", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--splits", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)

    p = add("fid-infinity", cmd_fid_infinity, "FID extrapolated to infinitely many samples")
    p.add_argument("--gen", required=True)
    p.add_argument("--ref-stats", required=True)
    p.add_argument("--jitter", type=float, default=0.0)
    _add_infinity_flags(p)

    p = add("is-infinity", cmd_is_infinity, "IS extrapolated to infinitely many samples")
    p.add_argument("--posteriors", required=True)
    _add_infinity_flags(p)

    p = add("bias-study", cmd_bias_study, "score-versus-n study on a synthetic oracle")
    p.add_argument("--oracle", choices=["gaussian", "posterior"], required=True)
    p.add_argument("--config", metavar="FILE", help="JSON object overriding study defaults")
    p.add_argument("--out-csv")
    p.add_argument("--out-json")

    p = add("crossing-demo", cmd_crossing_demo, "two generators whose FID_n ranking flips with n")
    p.add_argument("--out-csv")
    p.add_argument("--replicates", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-cross", type=float, default=700.0)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--shuffles", type=int, default=4)
    p.add_argument("--unpaired", action="store_true", help="independent latent draws per generator")
    return parser


def _resolved(args) -> dict:
    skip = {"func", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
        log.setLevel(logging.DEBUG if args.verbose else logging.INFO)
        if args.command == "bias-study":
            args.resolved = _study_config(args)
        log.info("config %s", json.dumps(_resolved(args), sort_keys=True))
        args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except ConfigurationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (QMCMetricsError, OSError, ValueError, ArithmeticError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
