"""Command-line interface: ``mar-kit <command> ...``.

Exit codes: 0 success, 1 numeric/data error, 2 usage error.  Indices on the
command line are 1-based (``--shock 2,1``; ``--start`` uses the CSV ``t``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, kernels
from .errors import MarError
from .estimators import FitOptions, fit_lse, fit_mle, fit_proj, fit_var1
from .experiments import (
    coverage_study,
    efficiency_study,
    estimator_comparison,
    spec_test_study,
    write_rows,
)
from .forecast import FORECAST_METHODS, rolling_forecast
from .inference import asymp_cov, confidence_intervals, specification_test
from .io import format_series, load_series, parse_steps, preprocess, read_config, save_series
from .model import CovarianceSpec, MarModel, irf_s1, random_covariance, random_model, simulate

logger = logging.getLogger("mar_kit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _shock(text: str) -> tuple[int, int]:
    vals = _int_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("shock must be 'i,j'")
    return vals[0], vals[1]


def _level(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return v


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--manifest", help="write a JSON run manifest to this path")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", help="long-format CSV (t,row,col,value)")
    p.add_argument("--preprocess", default=None, help="steps, e.g. 'logdiff[GDP],seasonaldemean:4,rownormalize'")


def _add_fit_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--rel-tol", type=float, default=1e-8)
    p.add_argument("--init", choices=("proj", "identity"), default="proj")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mar-kit", description="Matrix autoregression MAR(1) toolkit")
    parser.add_argument("--version", action="version", version=f"mar-kit {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a MAR(1) series to CSV")
    _add_common(p)
    p.add_argument("--setting", choices=("I", "II", "III"), default="I")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--T", type=int, default=400)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", help="JSON with A, B and optionally sigma or sigma_c/sigma_r (row-major lists)")
    p.add_argument("--out", help="output CSV (default stdout)")

    p = sub.add_parser("fit", help="fit a model and report coefficients")
    _add_common(p)
    _add_input(p)
    p.add_argument("--method", choices=("proj", "lse", "mle", "var1"), default="lse")
    p.add_argument("--level", type=_level, default=0.95)
    _add_fit_opts(p)
    p.add_argument("--out", help="coefficient CSV (entry,estimate,stderr,lower,upper,mark)")

    p = sub.add_parser("test", help="Kronecker specification test")
    _add_common(p)
    _add_input(p)
    p.add_argument("--out", help="CSV with stat,value rows")

    p = sub.add_parser("irf", help="shock-first orthogonal impulse responses")
    _add_common(p)
    _add_input(p)
    p.add_argument("--method", choices=("proj", "lse", "mle"), default="mle")
    p.add_argument("--shock", type=_shock, default=(1, 1), help="1-based 'row,col' of the shocked entry")
    p.add_argument("--horizon", type=int, default=20)
    _add_fit_opts(p)
    p.add_argument("--out", help="response CSV (lag,row,col,response,accumulated)")
    p.add_argument("--factored-out", help="factored responses CSV (lag,side,index,value)")

    p = sub.add_parser("forecast", help="rolling one-step forecast evaluation")
    _add_common(p)
    _add_input(p)
    p.add_argument("--method", default="LSE", help=f"one of {', '.join(FORECAST_METHODS)}")
    p.add_argument("--start", type=int, required=False, help="CSV t of the first forecast target")
    p.add_argument("--refit", type=_bool, default=True, help="refit before every forecast (default true)")
    p.add_argument("--intercept", type=_bool, default=True, help="intercept in iAR baselines")
    _add_fit_opts(p)
    p.add_argument("--out", help="per-step CSV (t,sq_error)")

    p = sub.add_parser("experiment", help="Monte Carlo studies")
    _add_common(p)
    p.add_argument("--study", choices=("compare", "coverage", "spec", "efficiency"), default="compare")
    p.add_argument("--setting", choices=("I", "II", "III"), default="I")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--T", type=_int_list, default=[400])
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eta", type=_float_list, default=[0.0, 0.5])
    p.add_argument("--level", type=_level, default=0.95, help="CI level; the specification-test study rejects at 1 - level")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", help="summary CSV (setting,method,T,stat,value); default stdout")
    return parser


# -- helpers -----------------------------------------------------------------


def _load(args):
    if not args.input:
        raise UsageError("an input CSV is required")
    series = load_series(args.input)
    if args.preprocess:
        try:
            steps = parse_steps(args.preprocess)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        series = preprocess(series, steps)
    return series


def _opts(args) -> FitOptions:
    return FitOptions(max_iter=args.max_iter, rel_tol=args.rel_tol, init=args.init)


def _fit(series, method: str, opts: FitOptions):
    if method == "proj":
        return fit_proj(series)
    if method == "lse":
        return fit_lse(series, opts)
    return fit_mle(series, opts)


def _write(path, text: str, stdout) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="")
    else:
        stdout.write(text)


def _table(header: Sequence[str], rows: list[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[k]) for r in rows)) if rows else len(h) for k, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"


def _model_from_json(path) -> MarModel:
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
        A = np.array(spec["A"], dtype=float)
        B = np.array(spec["B"], dtype=float)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise MarError(f"cannot read model file {path}: {exc}") from exc
    if "sigma_c" in spec and "sigma_r" in spec:
        cov = CovarianceSpec.kronecker(np.array(spec["sigma_c"], float), np.array(spec["sigma_r"], float))
    elif "sigma" in spec:
        cov = CovarianceSpec.full(np.array(spec["sigma"], float))
    else:
        cov = CovarianceSpec.identity()
    return MarModel.from_pair(A, B, cov)


# -- commands ----------------------------------------------------------------


def cmd_simulate(args, stdout) -> dict:
    if args.model:
        model = _model_from_json(args.model)
    else:
        base = random_model(args.m, args.n, rho_target=args.rho, seed=args.seed)
        cov = random_covariance(args.setting, args.m, args.n, seed=args.seed + 1)
        model = MarModel(base.A, base.B, cov)
    series = simulate(model, args.T, burn_in=args.burn_in, seed=args.seed)
    if args.out:
        save_series(series, args.out)
    else:
        stdout.write(format_series(series))
    return {"outputs": [args.out] if args.out else []}


def _var1_table(series, level):
    from scipy import special

    v = fit_var1(series)
    d = v.phi.shape[0]
    cov = np.kron(np.linalg.inv(v.gamma0), v.sigma) / v.t_eff
    est = v.phi.T.reshape(-1)  # vec(Phi)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    z = float(special.ndtri(0.5 * (1 + level)))
    names = [f"Phi[{i + 1},{j + 1}]" for j in range(d) for i in range(d)]
    lower, upper = est - z * se, est + z * se
    marks = ["+" if lo > 0 else "-" if hi < 0 else "0" for lo, hi in zip(lower, upper)]
    return names, est, se, lower, upper, marks, {"method": "VAR1", "t_eff": v.t_eff}


def cmd_fit(args, stdout) -> dict:
    series = _load(args)
    if args.method == "var1":
        names, est, se, lower, upper, marks, info = _var1_table(series, args.level)
    else:
        fit = _fit(series, args.method, _opts(args))
        acov = asymp_cov(fit, series)
        ci = confidence_intervals(acov, args.level)
        names = acov.stacked_labels()
        est, se, lower, upper, marks = ci.estimate, ci.stderr, ci.lower, ci.upper, ci.marks()
        info = {
            "method": fit.method,
            "iterations": fit.iterations,
            "converged": fit.converged,
            "stationary": fit.stationary,
            "rss": fit.rss,
        }
        if not fit.converged:
            logger.warning("%s did not converge in %d iterations", fit.method, fit.iterations)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")  # entry labels contain commas
    w.writerow(("entry", "estimate", "stderr", "lower", "upper", "mark"))
    human = []
    for k, name in enumerate(names):
        w.writerow((name, _fmt(est[k]), _fmt(se[k]), _fmt(lower[k]), _fmt(upper[k]), marks[k]))
        human.append((name, f"{est[k]:.3f}", f"{se[k]:.3f}", f"{lower[k]:.3f}", f"{upper[k]:.3f}", marks[k]))
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8", newline="")
    summary = " ".join(f"{k}={v}" for k, v in info.items())
    stdout.write(f"# {summary} level={args.level:g}\n")
    stdout.write(_table(("entry", "estimate", "stderr", "lower", "upper", "mark"), human))
    return {"outputs": [args.out] if args.out else [], **info}


def cmd_test(args, stdout) -> dict:
    series = _load(args)
    res = specification_test(series)
    for w in res.warnings:
        logger.warning(w)
    text = (
        "stat,value\n"
        f"statistic,{_fmt(res.statistic)}\n"
        f"df,{res.df}\n"
        f"p_value,{_fmt(res.p_value)}\n"
    )
    _write(args.out, text, stdout)
    if args.out:
        stdout.write(f"statistic={res.statistic:.3f} df={res.df} p_value={res.p_value:.4g}\n")
    return {"outputs": [args.out] if args.out else []}


def cmd_irf(args, stdout) -> dict:
    series = _load(args)
    fit = _fit(series, args.method, _opts(args))
    i, j = args.shock
    if not (1 <= i <= series.m and 1 <= j <= series.n):
        raise UsageError(f"--shock {i},{j} outside 1..{series.m} x 1..{series.n}")
    if args.horizon < 0:
        raise UsageError("--horizon must be nonnegative")
    res = irf_s1(fit.model, i - 1, j - 1, args.horizon)
    rows, cols = series.labels()
    lines = ["lag,row,col,response,accumulated"]
    for k in range(args.horizon + 1):
        for a in range(series.m):
            for b in range(series.n):
                lines.append(
                    f"{k},{rows[a]},{cols[b]},{_fmt(res.responses[k, a, b])},{_fmt(res.accumulated[k, a, b])}"
                )
    _write(args.out, "\n".join(lines) + "\n", stdout)
    outputs = [args.out] if args.out else []
    if args.factored_out:
        if not res.factored:
            raise MarError("factored responses need a Kronecker covariance (use --method mle)")
        fl = ["lag,side,index,value"]
        for k in range(args.horizon + 1):
            fl += [f"{k},row,{rows[a]},{_fmt(res.row_resp[k, a])}" for a in range(series.m)]
            fl += [f"{k},col,{cols[b]},{_fmt(res.col_resp[k, b])}" for b in range(series.n)]
        Path(args.factored_out).write_text("\n".join(fl) + "\n", encoding="utf-8", newline="")
        outputs.append(args.factored_out)
    return {"outputs": outputs}


def cmd_forecast(args, stdout) -> dict:
    series = _load(args)
    aliases = {m.lower(): m for m in FORECAST_METHODS}
    aliases["mle"] = "MLEs"
    method = aliases.get(args.method.lower())
    if method is None:
        raise UsageError(f"--method must be one of {', '.join(FORECAST_METHODS)}")
    if args.start is None:
        raise UsageError("--start is required")
    rep = rolling_forecast(
        series,
        args.start - 1,
        method,
        refit_each_step=args.refit,
        opts=_opts(args),
        intercept=args.intercept,
    )
    lines = ["t,sq_error"]
    lines += [f"{rep.t0 + k + 1},{_fmt(e)}" for k, e in enumerate(rep.sq_errors)]
    lines.append(f"total,{_fmt(rep.total)}")
    _write(args.out, "\n".join(lines) + "\n", stdout)
    if args.out:
        stdout.write(f"method={method} steps={rep.steps} total={rep.total:.6g}\n")
    return {"outputs": [args.out] if args.out else [], "total": rep.total}


def cmd_experiment(args, stdout) -> dict:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    rows = []
    if args.study == "compare":
        rows, _ = estimator_comparison(args.setting, args.m, args.n, args.T, args.reps, args.seed, threads=args.threads)
    elif args.study == "coverage":
        for T in args.T:
            r, _ = coverage_study(args.setting, args.m, args.n, T, args.reps, args.seed, level=args.level, threads=args.threads)
            rows += r
    elif args.study == "spec":
        for T in args.T:
            r, _ = spec_test_study(
                args.m, args.n, T, args.reps, etas=args.eta, setting=args.setting, seed=args.seed,
                level=1 - args.level, threads=args.threads,
            )
            rows += r
    else:
        for T in args.T:
            r, _ = efficiency_study(args.setting, args.m, args.n, T, args.reps, args.seed, threads=args.threads)
            rows += r
    if args.out:
        write_rows(rows, args.out)
    else:
        stdout.write("setting,method,T,stat,value\n")
        for r in rows:
            stdout.write(f"{r.setting},{r.method},{r.T},{r.stat},{_fmt(r.value)}\n")
    return {"outputs": [args.out] if args.out else []}


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "test": cmd_test,
    "irf": cmd_irf,
    "forecast": cmd_forecast,
    "experiment": cmd_experiment,
}


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Turn ``--config FILE`` entries into defaults of the chosen subcommand."""
    if not argv or argv[0] not in COMMANDS or "--config" not in argv and not any(
        a.startswith("--config=") for a in argv
    ):
        return argv
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    cfg = read_config(known.config)
    subparser = parser._subparsers._group_actions[0].choices[argv[0]]  # type: ignore[union-attr]
    dests = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in dests or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r} for {argv[0]}")
        action = dests[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = _bool(value)
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}") from None
        else:
            defaults[key] = value
        if action.choices is not None and defaults[key] not in action.choices:
            raise UsageError(f"config key {key}: {value!r} not in {sorted(action.choices)}")
        if action.required:
            action.required = False
    subparser.set_defaults(**defaults)
    return argv


def _manifest(args, info: dict) -> dict:
    import scipy

    flags = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items()) if k not in ("manifest",)}
    return {
        "command": args.command,
        "seed": getattr(args, "seed", None),
        "flags": flags,
        "versions": {
            "mar_kit": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
            "kernel_backend": kernels.BACKEND,
        },
        "result": {k: v for k, v in info.items() if k != "outputs"},
        "outputs": info.get("outputs", []),
    }


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(parser.format_usage().strip() + "\nmar-kit: error: a command is required")
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return 2
    except MarError as exc:
        stderr.write(f"mar-kit: error: {exc}\n")
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    handler = logging.StreamHandler(stderr)
    handler.setFormatter(logging.Formatter("mar-kit: %(levelname)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        info = COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        stderr.write(f"mar-kit {args.command}: error: {exc}\n")
        return 2
    except (MarError, np.linalg.LinAlgError, ValueError, IndexError) as exc:
        stderr.write(f"mar-kit {args.command}: error: {exc}\n")
        return 1
    finally:
        logger.removeHandler(handler)
    if args.manifest:
        Path(args.manifest).write_text(
            json.dumps(_manifest(args, info), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
