"""Command-line front end: generate or ingest data, fit tails, build
spliced posteriors, sample paths, and run the validation suites.

Reruns with identical configuration and seed produce byte-identical
output files; every CSV starts with a comment line recording a hash of
the resolved configuration and the seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .betastacy import (
    make_spliced_prior,
    posterior_mean,
    posterior_update,
    posterior_variance,
    spliced_survival,
)
from .classical import kaplan_meier, nelson_aalen
from .data import gen_pareto_sample, gen_weibull_sample, load_csv, save_csv
from .diagnostics import run_suite
from .montecarlo import credible_band, ensemble
from .sampler import ThinningRatioError
from .tails import TailFit, default_k, hill_censored, qq_data, weibull_ls

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


_UNHASHED = {"func", "output", "input", "fit", "save_config"}  # I/O, not parameters


def _config_hash(args: argparse.Namespace) -> str:
    payload = {k: repr(v) for k, v in sorted(vars(args).items()) if k not in _UNHASHED}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _save_config(args: argparse.Namespace) -> None:
    """Serialise the fully resolved run so `run --config` reproduces it."""
    if not getattr(args, "save_config", None):
        return
    payload = {
        k: v
        for k, v in vars(args).items()
        if k not in ("func", "save_config") and v is not None
    }
    payload["command"] = args.command
    with open(args.save_config, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _argv_from_config(path) -> list[str]:
    with open(path) as fh:
        cfg = json.load(fh)
    if "command" not in cfg:
        raise UsageError(f"{path}: config file needs a 'command' key")
    argv = [str(cfg.pop("command"))]
    for key, value in sorted(cfg.items()):
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    return argv


def _comment(args) -> str:
    return f"config_hash={_config_hash(args)} seed={getattr(args, 'seed', 'none')}"


def _write_csv(path, header: list[str], columns: list[np.ndarray], comment: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _parse_grid_spec(spec: str) -> tuple[int, float]:
    parts = spec.split(":")
    try:
        points = int(parts[0])
        factor = float(parts[1]) if len(parts) > 1 else 1.5
    except (ValueError, IndexError):
        raise UsageError(f"bad grid spec {spec!r}; expected POINTS[:MAXFACTOR]") from None
    if points < 2 or factor <= 0:
        raise UsageError(f"bad grid spec {spec!r}")
    return points, factor


def _build_grid(sample, spec: str) -> np.ndarray:
    """Equally spaced points from 0 to factor * largest observation,
    merged with all event times."""
    points, factor = _parse_grid_spec(spec)
    top = factor * float(np.max(sample.times))
    base = np.linspace(0.0, top, points)
    ev = np.unique(sample.times[sample.events == 1])
    return np.unique(np.concatenate((base, ev[ev <= top])))


def _load_fit(path) -> tuple[TailFit, int]:
    with open(path) as fh:
        payload = json.load(fh)
    fit = TailFit(
        kind=payload["kind"],
        alpha_hat=payload["alpha_hat"],
        k=payload["k"],
        threshold=payload["threshold"],
        p_hat=payload.get("p_hat"),
        l_hat=payload.get("l_hat"),
    )
    return fit, int(payload["n"])


def _prior_from_args(args, fit: TailFit, n: int):
    a_n = math.inf if args.exact_splice or args.an_rule == "infinity" else (
        math.log(n) if args.an_rule == "log_n" else args.an_value
    )
    return make_spliced_prior(
        fit, q=args.q, t0=fit.threshold, a_n=a_n, n=n, tail_from=args.tail_from
    )


# -- subcommands -------------------------------------------------------------


def _cmd_simulate(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    if args.kind == "pareto":
        sample = gen_pareto_sample(args.n, args.alpha, args.seed)
    else:
        sample = gen_weibull_sample(args.n, args.alpha, args.p, args.seed)
    os.makedirs(os.path.dirname(os.path.abspath(args.output)), exist_ok=True)
    save_csv(sample, args.output, header_comment=_comment(args))
    print(f"wrote {args.output}: n={sample.n}, events={sample.n_events}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    sample = load_csv(args.input)
    k = args.k if args.k is not None else default_k(sample.n)
    if not 1 <= k < sample.n:
        raise UsageError(f"--k must satisfy 1 <= k < n = {sample.n}")
    if args.tail == "pareto":
        fit = hill_censored(sample, k)
    else:
        fit = weibull_ls(sample, k)
    os.makedirs(args.output, exist_ok=True)
    report = {
        "kind": fit.kind,
        "alpha_hat": fit.alpha_hat,
        "p_hat": fit.p_hat,
        "l_hat": fit.l_hat,
        "k": fit.k,
        "threshold": fit.threshold,
        "n": sample.n,
        "config_hash": _config_hash(args),
    }
    fit_path = os.path.join(args.output, "fit.json")
    with open(fit_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    qq = qq_data(sample, args.tail)
    qq_path = os.path.join(args.output, "qq.csv")
    _write_csv(qq_path, ["x", "y"], [qq.x, qq.y], _comment(args))
    print(f"wrote {fit_path} and {qq_path}")
    print(json.dumps({k: v for k, v in report.items() if k != "config_hash"}))
    return EXIT_OK


def _cmd_splice(args) -> int:
    sample = load_csv(args.input)
    fit, n = _load_fit(args.fit)
    prior = _prior_from_args(args, fit, n)
    post = posterior_update(prior, sample)
    grid = _build_grid(sample, args.grid)
    mean = posterior_mean(post, grid)
    var = posterior_variance(post, grid)
    surv = spliced_survival(post, grid)
    km = kaplan_meier(sample)(grid)
    na = nelson_aalen(sample)(grid)
    os.makedirs(args.output, exist_ok=True)
    out = os.path.join(args.output, "splice.csv")
    _write_csv(
        out,
        ["t", "posterior_mean", "posterior_variance", "spliced_survival", "kaplan_meier", "nelson_aalen"],
        [grid, mean, var, surv, km, na],
        _comment(args),
    )
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    sample = load_csv(args.input)
    fit, n = _load_fit(args.fit)
    prior = _prior_from_args(args, fit, n)
    post = posterior_update(prior, sample)
    grid = _build_grid(sample, args.grid)
    kind = {"hazard": "hazard", "logsurvival": "log_survival", "survival": "survival"}[
        args.process
    ]
    ens = ensemble(post, grid, args.paths, kind=kind, seed=args.seed)
    band = credible_band(ens, args.level) if args.paths >= 20 else None
    os.makedirs(args.output, exist_ok=True)
    out = os.path.join(args.output, "ensemble.csv")
    cols = [ens.grid, ens.mean()]
    header = ["t", "mean"]
    if band is not None:
        header += ["lower", "upper"]
        cols += [band.lower, band.upper]
    _write_csv(out, header, cols, _comment(args))
    print(f"wrote {out}")
    if args.dump_paths:
        paths_out = os.path.join(args.output, "paths.csv")
        _write_csv(
            paths_out,
            [f"t={t!r}" for t in ens.grid],
            [ens.paths[:, j] for j in range(ens.grid.size)],
            _comment(args),
        )
        print(f"wrote {paths_out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    results = run_suite(args.suite, seed=args.seed)
    for res in results:
        print(res.line())
    if all(r.passed for r in results):
        print(f"suite {args.suite}: all {len(results)} checks passed")
        return EXIT_OK
    print(f"suite {args.suite}: FAILED")
    return EXIT_NUMERIC


# -- parser ------------------------------------------------------------------


def _add_prior_flags(p: _Parser) -> None:
    p.add_argument("--fit", required=True, help="fit.json from the fit command")
    p.add_argument("--q", type=float, default=1.0, help="flat baseline density below the threshold")
    p.add_argument(
        "--an-rule",
        choices=("log_n", "const", "infinity"),
        default="log_n",
        help="tail tuning sequence a_n",
    )
    p.add_argument("--an-value", type=float, default=1.0, help="a_n when --an-rule const")
    p.add_argument(
        "--exact-splice",
        action="store_true",
        help="freeze the posterior to the fitted tail above the threshold (a_n = inf)",
    )
    p.add_argument(
        "--tail-from",
        type=float,
        default=None,
        help="lower limit of the fitted tail piece (default: the threshold)",
    )
    p.add_argument("--grid", default="512:1.5", help="grid spec POINTS[:MAXFACTOR]")


def build_parser() -> _Parser:
    parser = _Parser(prog="bnpsurv", description=__doc__)
    parser.add_argument("--version", action="version", version=f"bnpsurv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[], help="generate a synthetic censored sample")
    p.add_argument("--kind", choices=("pareto", "weibull"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=float, default=0.5, help="Weibull shape (weibull kind only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit a tail model and emit QQ data")
    p.add_argument("--input", required=True, help="CSV with time,event columns")
    p.add_argument("--tail", choices=("pareto", "weibull"), required=True)
    p.add_argument("--k", type=int, default=None, help="upper order statistics (default ceil(2 sqrt n))")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("splice", help="closed-form posterior summary on a grid")
    p.add_argument("--input", required=True)
    _add_prior_flags(p)
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_splice)

    p = sub.add_parser("sample", help="sample posterior paths and a credible band")
    p.add_argument("--input", required=True)
    _add_prior_flags(p)
    p.add_argument("--paths", type=int, default=200)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--process",
        choices=("hazard", "logsurvival", "survival"),
        default="hazard",
    )
    p.add_argument("--dump-paths", action="store_true", help="also write the raw paths")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("validate", help="run a named oracle suite")
    p.add_argument("--suite", choices=("moments", "laplace", "thinning", "bvm"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="replay a command from a saved config file")
    p.add_argument("--config", required=True, help="JSON written by --save-config")
    p.set_defaults(func=None)

    for name, sp in sub.choices.items():
        if name != "run":
            sp.add_argument(
                "--save-config",
                default=None,
                help="write the resolved configuration to this JSON file",
            )

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return main(_argv_from_config(args.config))
        _save_config(args)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ThinningRatioError, RuntimeError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
