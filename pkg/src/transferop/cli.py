"""Command-line front end: ``transferop <command> [options]``.

Commands
--------
simulate   sample (x, x') pairs from the logistic map
estimate   histogram or KDE density of the sample inputs on a grid
operator   transfer matrix plus its stationary vector
sweep      error and bound curves over bin counts or bandwidths
compare    pointwise error of both estimators at their optimal parameters

Options can also come from a ``key = value`` file (``--config FILE``) or a
packaged recipe (``--recipe NAME``); explicit flags win.  Keys are the long
option names, with ``-`` or ``_``.  A ``command`` key selects the command
when none is given on the command line.  Seeds fall back to the
``TRANSFEROP_SEED`` environment variable, then to 0.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
runtime or numerical failures.  Error lines start with ``error:``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, histdens, kde, operator, spectral
from ._backend import BACKEND
from .dynamics import MapSpec, SampleMode, SampleSet
from .dynamics import generate_ensemble, generate_evolved_ensemble, generate_orbit
from .errors import DomainError, NumericalError

CONFIG_VERSION = 1
COMMANDS = ("simulate", "estimate", "operator", "sweep", "compare")
SEED_ENV = "TRANSFEROP_SEED"


class UsageError(Exception):
    pass


class RunError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not (np.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _unit_float(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {text}")
    return v


def _int_list(text):
    try:
        out = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _float_list(text):
    try:
        out = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _range_spec(text):
    """``lo:hi:count`` or ``lo:hi:count:log``."""
    parts = str(text).split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("lin", "log")):
        raise argparse.ArgumentTypeError(f"expected lo:hi:count[:log], got {text}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:count[:log], got {text}")
    if n < 1 or not hi >= lo:
        raise argparse.ArgumentTypeError(f"empty range {text}")
    if len(parts) == 4 and parts[3] == "log":
        if lo <= 0:
            raise argparse.ArgumentTypeError("log range needs lo > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text}")


def _add_map_args(p):
    p.add_argument("--map", default="logistic", choices=["logistic"])
    p.add_argument("--r", type=_positive_float, default=4.0, help="logistic parameter in (0, 4]")
    p.add_argument("--noise-sigma", type=_positive_float, default=None,
                   help="standard deviation of the truncated-normal kick")


def _add_sample_args(p, n_default=1000, mode_default="orbit"):
    p.add_argument("--samples", type=Path, default=None, help="existing sample CSV")
    p.add_argument("--n", type=_positive_int, default=n_default, help="number of pairs to draw")
    p.add_argument("--mode", default=mode_default, choices=[m.value for m in SampleMode])
    p.add_argument("--seed", type=_nonneg_int, default=None)
    p.add_argument("--x0", type=_unit_float, default=None, help="orbit start (orbit mode)")
    p.add_argument("--burn-in", type=_nonneg_int, default=None,
                   help="discarded orbit steps, or evolution steps for evolved_ensemble")


def _add_plot_arg(p):
    p.add_argument("--plot-script", type=Path, default=None,
                   help="also write a gnuplot script for the emitted data")
    # also accepted after the command name
    p.add_argument("--threads", type=_positive_int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)


def build_parser():
    parser = _Parser(prog="transferop", description="Transfer-operator estimation from map samples.")
    parser.add_argument("--config", type=Path, default=None, help="key = value option file")
    parser.add_argument("--recipe", default=None, help="packaged option file by name (see --list-recipes)")
    parser.add_argument("--list-recipes", action="store_true")
    parser.add_argument("--threads", type=_positive_int, default=1, help="cap on worker threads")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw (x, x') pairs")
    _add_map_args(p)
    _add_sample_args(p)
    p.add_argument("--out", type=Path, default=Path("samples.csv"))
    _add_plot_arg(p)

    p = sub.add_parser("estimate", help="density of the sample inputs on a grid")
    _add_map_args(p)
    _add_sample_args(p, n_default=1_000_000, mode_default="evolved_ensemble")
    p.add_argument("--method", required=False, default=None, choices=["hist", "kde"])
    p.add_argument("--k", type=_positive_int, default=None, help="histogram bin count")
    p.add_argument("--delta", type=_positive_float, default=None, help="KDE bandwidth")
    p.add_argument("--kernel", default="gaussian", choices=["gaussian", "epanechnikov"])
    p.add_argument("--grid-points", type=_positive_int, default=100)
    p.add_argument("--grid-lo", type=float, default=0.01)
    p.add_argument("--grid-hi", type=float, default=0.99)
    p.add_argument("--out", type=Path, default=Path("density.csv"))
    _add_plot_arg(p)

    p = sub.add_parser("operator", help="transfer matrix and stationary vector")
    _add_map_args(p)
    _add_sample_args(p, n_default=1_000_000, mode_default="evolved_ensemble")
    p.add_argument("--method", default="ulam", choices=["ulam", "kde", "exact", "noisy-exact"])
    p.add_argument("--k", type=_positive_int, default=100)
    p.add_argument("--delta-marginal", type=_positive_float, default=None,
                   help="KDE marginal bandwidth (default: bound-optimal for N)")
    p.add_argument("--delta-joint", type=_positive_float, default=None,
                   help="KDE joint bandwidth (default: bound-optimal 2-D rate for N)")
    p.add_argument("--kernel", default="gaussian", choices=["gaussian", "epanechnikov"])
    p.add_argument("--rule", default="cell_mass", choices=["cell_mass", "center"])
    p.add_argument("--quad-points", type=_positive_int, default=None,
                   help="sub-points per cell for the exact oracles")
    p.add_argument("--tol", type=_positive_float, default=spectral.DEFAULT_TOL)
    p.add_argument("--max-iter", type=_positive_int, default=spectral.DEFAULT_MAX_ITER)
    p.add_argument("--allow-nonconverged", action="store_true")
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--prefix", default=None, help="file name stem (default: method)")
    _add_plot_arg(p)

    p = sub.add_parser("sweep", help="error and bound curves over a parameter range")
    p.add_argument("--method", default="hist", choices=["hist", "kde"])
    p.add_argument("--n", type=_positive_int, default=1_000_000)
    p.add_argument("--values", type=_float_list, default=None, help="comma-separated K or delta values")
    p.add_argument("--range", type=_range_spec, default=None, help="lo:hi:count[:log]")
    p.add_argument("--seeds", type=_int_list, default=None, help="comma-separated seeds")
    p.add_argument("--seed", type=_nonneg_int, default=None, help="first seed when --seeds is absent")
    p.add_argument("--n-seeds", type=_positive_int, default=5)
    p.add_argument("--kernel", default="gaussian", choices=["gaussian", "epanechnikov"])
    p.add_argument("--ub-point", type=_unit_float, default=analysis.UB_POINT)
    p.add_argument("--regenerate", action="store_true", help="fresh samples for every parameter")
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--prefix", default=None)
    _add_plot_arg(p)

    p = sub.add_parser("compare", help="histogram vs KDE error at their optimal parameters")
    p.add_argument("--n", type=_positive_int, default=1_000_000)
    p.add_argument("--seeds", type=_int_list, default=None)
    p.add_argument("--seed", type=_nonneg_int, default=None)
    p.add_argument("--n-seeds", type=_positive_int, default=5)
    p.add_argument("--kernel", default="gaussian", choices=["gaussian", "epanechnikov"])
    p.add_argument("--ub-point", type=_unit_float, default=analysis.UB_POINT)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--prefix", default="compare")
    _add_plot_arg(p)
    return parser


# -- configuration files -----------------------------------------------------

def list_recipes():
    root = resources.files("transferop") / "recipes"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def recipe_text(name):
    res = resources.files("transferop") / "recipes" / f"{name}.cfg"
    if not res.is_file():
        raise UsageError(f"unknown recipe {name!r}; available: {', '.join(list_recipes())}")
    return res.read_text()


def read_config(text, source="<config>"):
    """Parse ``key = value`` lines into ``{key: (value, lineno)}``.

    Blank lines and ``#`` comments are skipped.  Keys are normalised to
    underscores.  Duplicate keys and lines without ``=`` are errors.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if not key:
            raise UsageError(f"{source}:{lineno}: missing key")
        if key in out:
            raise UsageError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = (value, lineno)
    version = out.pop("version", None)
    if version is not None and version[0] != str(CONFIG_VERSION):
        raise UsageError(f"{source}:{version[1]}: unsupported config version {version[0]!r}")
    return out


def _config_defaults(subparser, cfg, source):
    """Convert config entries with the subparser's own types and choices."""
    actions = {a.dest: a for a in subparser._actions if a.dest != "help"}
    defaults = {}
    for key, (value, lineno) in cfg.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"{source}:{lineno}: unknown key {key!r} for this command")
        try:
            if isinstance(action, argparse._StoreTrueAction):
                conv = _bool(value)
            elif action.type is not None:
                conv = action.type(value)
            else:
                conv = value
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"{source}:{lineno}: bad value for {key!r}: {exc}")
        if action.choices is not None and conv not in action.choices:
            raise UsageError(f"{source}:{lineno}: {key!r} must be one of {', '.join(map(str, action.choices))}")
        defaults[key] = conv
    return defaults


def _split_globals(argv):
    """Separate the global options from everything else."""
    glob = _Parser(add_help=False)
    glob.add_argument("--config", type=Path)
    glob.add_argument("--recipe")
    glob.add_argument("--threads")
    glob.add_argument("--list-recipes", action="store_true")
    return glob.parse_known_args(argv)


def parse_args(argv):
    parser = build_parser()
    ns, rest = _split_globals(argv)
    if ns.list_recipes:
        return parser.parse_args(argv)
    if ns.config is not None and ns.recipe is not None:
        raise UsageError("--config and --recipe are mutually exclusive")
    cfg, source = {}, None
    if ns.recipe is not None:
        source = f"recipe:{ns.recipe}"
        cfg = read_config(recipe_text(ns.recipe), source)
    elif ns.config is not None:
        source = str(ns.config)
        try:
            text = ns.config.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc.strerror}")
        cfg = read_config(text, source)
    cfg_command = cfg.pop("command", None)
    if cfg_command is not None and cfg_command[0] not in COMMANDS:
        raise UsageError(f"{source}:{cfg_command[1]}: unknown command {cfg_command[0]!r}")
    if not (rest and rest[0] in COMMANDS) and cfg_command is not None and "-h" not in rest \
            and "--help" not in rest:
        # command taken from the file; flags after the globals belong to it
        head = []
        for flag in ("config", "recipe", "threads"):
            if getattr(ns, flag) is not None:
                head += [f"--{flag}", str(getattr(ns, flag))]
        argv = head + [cfg_command[0]] + rest
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError(f"a command is required: {' | '.join(COMMANDS)}")
    if cfg:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**_config_defaults(sub, cfg, source))
        args = parser.parse_args(argv)
    return args


# -- helpers ------------------------------------------------------------------

def _seed(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            v = int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be a non-negative integer, got {env!r}")
        if v < 0:
            raise UsageError(f"{SEED_ENV} must be a non-negative integer, got {env!r}")
        return v
    return 0


def _seed_list(args):
    if args.seeds is not None:
        return args.seeds
    base = _seed(args)
    return [base + i for i in range(args.n_seeds)]


def _map_spec(args):
    try:
        return MapSpec.logistic(args.r, args.noise_sigma)
    except ValueError as exc:
        raise UsageError(str(exc))


def _samples(args):
    if args.samples is not None:
        if not args.samples.is_file():
            raise RunError(f"sample file not found: {args.samples}")
        try:
            return SampleSet.from_csv(args.samples)
        except ValueError as exc:
            raise RunError(f"cannot read samples {args.samples}: {exc}")
    spec = _map_spec(args)
    seed = _seed(args)
    mode = SampleMode(args.mode)
    if mode is SampleMode.ORBIT:
        kw = {}
        if args.x0 is not None:
            kw["x0"] = args.x0
        if args.burn_in is not None:
            kw["burn_in"] = args.burn_in
        return generate_orbit(spec, n=args.n, seed=seed, **kw)
    if mode is SampleMode.IID_UNIFORM:
        return generate_ensemble(spec, args.n, seed=seed)
    kw = {} if args.burn_in is None else {"steps": args.burn_in}
    return generate_evolved_ensemble(spec, args.n, seed=seed, **kw)


def _mkdir(path):
    try:
        Path(path).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RunError(f"cannot create output directory {path}: {exc.strerror}")


def _parent(path):
    _mkdir(Path(path).parent if str(Path(path).parent) else Path("."))


def _write_csv(path, header, columns):
    _parent(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, np.column_stack(columns), fmt="%.17g", delimiter=",")


def _write_json(path, obj):
    _parent(path)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def emit_gnuplot(path, data_csv, x_col, y_cols, xlabel, ylabel, logx=False, logy=False, style="lines",
                 matrix=False):
    """Write a gnuplot script that plots columns of ``data_csv``.

    Columns are 1-based.  With ``matrix`` the file is drawn as a heat map of
    a ``K x K`` matrix CSV whose first line is a comment.
    """
    lines = ["set datafile separator ','", f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
    if logx:
        lines.append("set logscale x")
    if logy:
        lines.append("set logscale y")
    name = Path(data_csv).name
    if matrix:
        lines += ["set view map", f"plot '{name}' matrix with image notitle"]
    else:
        lines.append("set key autotitle columnhead")
        parts = [f"'{name}' using {x_col}:{c} with {style}" for c in y_cols]
        lines.append("plot " + ", \\\n     ".join(parts))
    _parent(path)
    Path(path).write_text("\n".join(lines) + "\n")


def _say(**fields):
    print(" ".join(f"{k}={v}" for k, v in fields.items()))


# -- commands -----------------------------------------------------------------

def cmd_simulate(args):
    s = _samples(args)
    _parent(args.out)
    try:
        s.to_csv(args.out)
    except OSError as exc:
        raise RunError(f"cannot write {args.out}: {exc.strerror}")
    if args.plot_script:
        emit_gnuplot(args.plot_script, args.out, 1, [2], "x_n", "x_{n+1}", style="dots")
    _say(command="simulate", N=len(s), mode=s.mode.value, seed=s.seed, out=args.out)


def cmd_estimate(args):
    if args.method is None:
        raise UsageError("estimate needs --method hist or --method kde")
    if not args.grid_hi >= args.grid_lo:
        raise UsageError("grid-hi must be at least grid-lo")
    s = _samples(args)
    grid = np.linspace(args.grid_lo, args.grid_hi, args.grid_points)
    N = len(s)
    c = analysis.ub_constants()
    if args.method == "hist":
        K = args.k if args.k is not None else histdens.hist_optimal_K(N, c.C1, c.p)[1]
        if not (grid.min() >= 0.0 and grid.max() <= 1.0):
            raise UsageError("histogram grid must lie in [0, 1]")
        est = histdens.hist_fit(s.x, K)
        param = {"K": int(K)}
    else:
        delta = args.delta if args.delta is not None else kde.kde_optimal_delta(N, c.p, c.p_second, args.kernel).delta
        est = kde.kde_fit(s.x, delta, args.kernel)
        param = {"delta": float(delta), "kernel": args.kernel}
    dens = est(grid)
    _write_csv(args.out, ["x", "density"], [grid, dens])
    _write_json(Path(args.out).with_suffix(".json"), {"method": args.method, "N": N, **param,
                                                       "samples": s.metadata()})
    if args.plot_script:
        emit_gnuplot(args.plot_script, args.out, 1, [2], "x", "density")
    _say(command="estimate", method=args.method, N=N, **param, points=grid.shape[0], out=args.out)


def _auto_bandwidths(N, kernel):
    c = analysis.ub_constants()
    d1 = kde.kde_optimal_delta(N, c.p, c.p_second, kernel).delta
    d2 = kde.kde_optimal_delta(N, c.p, c.p_second, kernel, dim=2).delta
    return d1, d2


def cmd_operator(args):
    method = args.method
    if method in ("exact", "noisy-exact"):
        spec = _map_spec(args)
        if method == "exact":
            M = args.quad_points or operator.DEFAULT_QUAD_POINTS
            P = operator.ulam_matrix_exact(spec.without_noise(), args.k, M)
        else:
            if spec.noise is None:
                raise UsageError("noisy-exact needs --noise-sigma")
            P = operator.noisy_kernel_matrix_exact(spec, args.k, args.quad_points or 1)
    else:
        s = _samples(args)
        if method == "ulam":
            P = operator.ulam_matrix_from_pairs(s, args.k)
        else:
            d1, d2 = _auto_bandwidths(len(s), args.kernel)
            dm = args.delta_marginal if args.delta_marginal is not None else d1
            dj = args.delta_joint if args.delta_joint is not None else d2
            P = operator.kde_transfer_matrix(s, args.k, dm, dj, args.kernel, rule=args.rule)
    prefix = args.prefix or method.replace("-", "_")
    _mkdir(args.out_dir)
    mat_csv = args.out_dir / f"{prefix}_matrix.csv"
    P.save(mat_csv, mat_csv.with_suffix(".json"))
    res = spectral.leading_left_eigenvector(P, args.tol, args.max_iter)
    st_csv = args.out_dir / f"{prefix}_stationary.csv"
    res.save(st_csv, st_csv.with_suffix(".json"))
    if args.plot_script:
        emit_gnuplot(args.plot_script, st_csv, 1, [3], "x", "stationary density", style="steps")
    fields = {"command": "operator", "method": method, "K": P.K, "residual": f"{res.residual:.3e}",
              "iterations": res.iterations, "converged": res.converged, "unique": res.unique}
    if args.map == "logistic" and args.r == 4.0 and args.noise_sigma is None:
        ref = analysis.logistic_arcsine().cell_masses(P.K)
        fields["l1_to_arcsine"] = f"{np.abs(res.vector - ref).sum():.6f}"
    _say(**fields, out=args.out_dir)
    if not res.converged and not args.allow_nonconverged:
        raise RunError(f"power iteration did not converge in {res.iterations} iterations "
                       f"(residual {res.residual:.3e}); rerun with --allow-nonconverged to accept")


def _default_values(method, N):
    if method == "hist":
        return np.unique(np.round(np.geomspace(10, 20000, 40)).astype(np.int64))
    return np.geomspace(1e-5, 1e-1, 41)


def cmd_sweep(args):
    if args.values is not None and args.range is not None:
        raise UsageError("--values and --range are mutually exclusive")
    values = args.values if args.values is not None else args.range
    if values is None:
        values = _default_values(args.method, args.n)
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise UsageError("empty parameter range")
    seeds = _seed_list(args)
    if args.method == "hist":
        K = np.round(values).astype(np.int64)
        if (K < 1).any():
            raise UsageError("bin counts must be positive")
        rep = analysis.sweep_histogram(args.n, np.unique(K), seeds, ub_point=args.ub_point,
                                       regenerate=args.regenerate, threads=args.threads)
    else:
        if not (values > 0).all():
            raise UsageError("bandwidths must be positive")
        rep = analysis.sweep_kde(args.n, values, seeds, args.kernel, ub_point=args.ub_point,
                                 regenerate=args.regenerate, threads=args.threads)
    prefix = args.prefix or f"sweep_{args.method}"
    _mkdir(args.out_dir)
    csv_path = args.out_dir / f"{prefix}.csv"
    rep.write(csv_path, args.out_dir / f"{prefix}.json")
    curve = args.out_dir / f"{prefix}_curve.csv"
    _write_csv(curve, ["parameter", "median_mse", "ub"], [rep.parameters, rep.median_mse(), rep.ub])
    if args.plot_script:
        emit_gnuplot(args.plot_script, curve, 1, [2, 3], "K" if args.method == "hist" else "delta",
                     "squared error", logx=True, logy=True, style="linespoints")
    _say(command="sweep", method=args.method, N=args.n, points=rep.parameters.shape[0],
         seeds=len(seeds), ub_argmin=f"{rep.ub_argmin:.6g}", swept_optimum=f"{rep.optimum[0]:.6g}",
         runtime=f"{rep.runtime:.2f}s", out=csv_path)


def cmd_compare(args):
    seeds = _seed_list(args)
    grid, h, k, K_opt, d_opt = analysis.compare_at_optimum(args.n, seeds, args.kernel,
                                                          ub_point=args.ub_point, threads=args.threads)
    _mkdir(args.out_dir)
    csv_path = args.out_dir / f"{args.prefix}.csv"
    _write_csv(csv_path, ["x", "mse_hist", "mse_kde", "sq_err_hist_first_seed", "sq_err_kde_first_seed"],
               [grid, h.mean(axis=0), k.mean(axis=0), h[0], k[0]])
    hm, km = h.mean(axis=1), k.mean(axis=1)
    _write_json(args.out_dir / f"{args.prefix}.json", {
        "N": args.n, "seeds": seeds, "K_opt": int(K_opt), "delta_opt": float(d_opt), "kernel": args.kernel,
        "grid_mean_mse_hist": hm.tolist(), "grid_mean_mse_kde": km.tolist(),
        "median_hist": float(np.median(hm)), "median_kde": float(np.median(km)),
    })
    if args.plot_script:
        emit_gnuplot(args.plot_script, csv_path, 1, [2, 3], "x", "squared error", logy=True)
    _say(command="compare", N=args.n, K_opt=K_opt, delta_opt=f"{d_opt:.6g}",
         median_hist=f"{np.median(hm):.4e}", median_kde=f"{np.median(km):.4e}", out=csv_path)


HANDLERS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "operator": cmd_operator,
            "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        if args.list_recipes:
            print("\n".join(list_recipes()))
            return 0
        t0 = time.perf_counter()
        HANDLERS[args.command](args)
        print(f"# backend={BACKEND} elapsed={time.perf_counter() - t0:.2f}s", file=sys.stderr)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RunError, NumericalError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
