"""Command-line interface.

Subcommands:

* ``test``         -- per-row t statistics, p-values and selection flags for
                      an N x n CSV matrix (optional leading id column).
* ``simulate``     -- the level-accuracy experiment grid; aligned table to
                      stdout, CSV via --out.
* ``validate-ld``  -- Monte-Carlo check of the skewness tail-ratio
                      correction for the t statistic.
* ``forecast``     -- closed-form level forecasts (beta, FWER limit,
                      generalized-FWER bounds) from skewness inputs.

Every output starts with comment lines recording the package version, the
result-determining configuration and the seed; re-running with the same
configuration reproduces the bytes exactly (thread count changes never
alter output).  Probabilities are printed in scientific notation with six
significant digits.

Option precedence: command-line flags override the key=value --config file,
which overrides --preset values, which override built-in defaults.

Exit codes: 0 success, 2 usage, 3 input parse/shape error, 4 configuration
error, 5 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import __version__, kernels
from .aggregate import _pooled_p_values
from .calibrate import (
    BootstrapConfig,
    bootstrap_p_values,
    bootstrap_tstats_matrix,
    p_values_battery,
    per_test_level,
)
from .errors import ConfigError, ParseError, ShapeError, TcalibError
from .rowstats import summarize_matrix
from .select import bh_select, bonferroni_select, classical_select, level_forecast
from .simulate import (
    DISTRIBUTIONS,
    ExperimentGrid,
    MeanMixtureConfig,
    ld_ratio_validate,
    run_accuracy_experiment,
)

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_CONFIG = 4
EXIT_RUNTIME = 5

_METHOD_BY_FLAG = {
    "normal": "normal",
    "t": "student_t",
    "bootstrap": "bootstrap",
    "agg-bootstrap": "agg_bootstrap",
    "oracle": "oracle",
}
_RULES = ("bonferroni", "bh", "classical")

#: built-in presets, overridable by --config and flags
_PRESETS = {
    "simulate": {
        "paper": {
            "n-tests": "600,1800,6000",
            "n-reps": "6,20,50",
            "method": "normal,t,bootstrap,agg-bootstrap",
            "case": "I",
            "c": "1.0",
        }
    },
    "validate-ld": {
        "paper": {
            "dist": "upow4",
            "n-reps": "50",
            "xs": "0.5,1.0,1.5,1.9",
            "mc-samples": "10000000",
        }
    },
    "forecast": {
        "paper": {"skew": "1.1547005383792515", "gamma": "0.0", "alpha": "0.05"}
    },
    "test": {"paper": {}},
}


def _prob(x: float) -> str:
    return f"{x:.5e}"


def _num(x: float) -> str:
    return f"{x:.9g}"


def _read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = line.split("=", 1)
                out[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return out


class _Options:
    """Layered option lookup: CLI flag, then config file, then preset."""

    def __init__(self, args: argparse.Namespace, subcommand: str):
        self.args = args
        self.file = _read_config_file(args.config) if getattr(args, "config", None) else {}
        preset_name = getattr(args, "preset", None)
        presets = _PRESETS.get(subcommand, {})
        if preset_name is not None and preset_name not in presets:
            raise ConfigError(
                f"unknown preset {preset_name!r} for {subcommand}; available: {sorted(presets)}"
            )
        self.preset = presets.get(preset_name, {}) if preset_name else {}

    def get(self, key: str, conv, default=None):
        cli_value = getattr(self.args, key.replace("-", "_"), None)
        if cli_value is not None:
            return conv(cli_value) if isinstance(cli_value, str) else cli_value
        if key in self.file:
            return conv(self.file[key])
        if key in self.preset:
            return conv(self.preset[key])
        return default


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).split(",") if v != "")

def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v != "")

def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _header_lines(subcommand: str, config: list[tuple[str, str]], seed: int | None) -> list[str]:
    lines = [f"# tcalib {__version__}", f"# subcommand: {subcommand}"]
    lines.append("# config: " + " ".join(f"{k}={v}" for k, v in config))
    if seed is not None:
        lines.append(f"# seed: {seed}")
    return lines


def _emit(path: str | None, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _read_matrix_csv(path: str):
    """Strict numeric CSV reader; optional non-numeric first column of ids."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            raw_rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    raw_rows = [r for r in raw_rows if r]
    if not raw_rows:
        raise ParseError(f"{path}: empty input")
    first = raw_rows[0][0].strip() if raw_rows[0] else ""
    try:
        float(first)
        has_ids = False
    except ValueError:
        has_ids = True
    width = len(raw_rows[0])
    ids: list[str] = []
    values: list[list[float]] = []
    for i, row in enumerate(raw_rows, start=1):
        if len(row) != width:
            raise ParseError(
                f"{path}: row {i}: expected {width} columns, found {len(row)}"
            )
        cells = row[1:] if has_ids else row
        if has_ids:
            ids.append(row[0].strip())
        parsed = []
        for j, cell in enumerate(cells, start=(2 if has_ids else 1)):
            text = cell.strip()
            try:
                value = float(text)
            except ValueError:
                raise ParseError(
                    f"{path}: row {i}, column {j}: cannot parse {cell!r} as a number"
                ) from None
            if not math.isfinite(value):
                raise ParseError(
                    f"{path}: row {i}, column {j}: non-finite value {cell!r}"
                )
            parsed.append(value)
        values.append(parsed)
    data = np.asarray(values, dtype=np.float64)
    if data.shape[1] < 2:
        raise ShapeError(f"{path}: need at least 2 numeric columns, found {data.shape[1]}")
    return data, (ids if has_ids else None)


def _cmd_test(args: argparse.Namespace) -> int:
    opts = _Options(args, "test")
    alpha = opts.get("alpha", float, 0.05)
    method_flags = opts.get("method", _str_list, ("t",))
    rules = opts.get("rule", _str_list, ("classical",))
    boot_reps = opts.get("boot-reps", int, 2000)
    seed = opts.get("seed", int, 0)
    threads = opts.get("threads", int, 1)
    out = opts.get("out", str, None)

    for m in method_flags:
        if m not in _METHOD_BY_FLAG:
            raise ConfigError(f"unknown method {m!r}; choose from {sorted(_METHOD_BY_FLAG)}")
    for rule in rules:
        if rule not in _RULES:
            raise ConfigError(f"unknown rule {rule!r}; choose from {_RULES}")

    data, ids = _read_matrix_csv(args.input)
    n_tests, n_reps = data.shape
    alpha_n = opts.get("alpha-n", float, per_test_level(alpha, n_tests).level)
    kernels.set_threads(threads)

    battery = summarize_matrix(data)
    tstats = battery.t
    pvals: dict[str, np.ndarray] = {}
    need_boot = {"bootstrap", "agg-bootstrap"} & set(method_flags)
    tmat = None
    if need_boot:
        tmat = bootstrap_tstats_matrix(data, BootstrapConfig(boot_reps, seed))
    for m in method_flags:
        if m == "normal":
            pvals[m] = p_values_battery(tstats, "normal")
        elif m == "t":
            pvals[m] = p_values_battery(tstats, "student_t", df=n_reps - 1)
        elif m == "bootstrap":
            pvals[m] = bootstrap_p_values(tstats, tmat)
        elif m == "agg-bootstrap":
            valid = ~np.isnan(tmat[:, 0])
            pooled = np.sort(tmat[valid].ravel())
            pvals[m] = _pooled_p_values(tstats, pooled)
        elif m == "oracle":
            raise ConfigError("the oracle method applies to `simulate` only")

    flags: dict[tuple[str, str], np.ndarray] = {}
    for m in method_flags:
        for rule in rules:
            if rule == "bonferroni":
                sel = bonferroni_select(pvals[m], alpha)
            elif rule == "bh":
                sel = bh_select(pvals[m], alpha)
            else:
                sel = classical_select(pvals[m], alpha_n)
            mask = np.zeros(n_tests, dtype=bool)
            mask[sel.rejected] = True
            flags[(m, rule)] = mask

    config = [
        ("input", args.input),
        ("alpha", _prob(alpha)),
        ("alpha-n", _prob(alpha_n)),
        ("method", ",".join(method_flags)),
        ("rule", ",".join(rules)),
        ("boot-reps", str(boot_reps)),
    ]
    lines = _header_lines("test", config, seed)
    columns = ["row"] + (["id"] if ids is not None else []) + ["n_obs", "t", "degenerate"]
    columns += [f"p_{m.replace('-', '_')}" for m in method_flags]
    columns += [f"reject_{m.replace('-', '_')}_{rule}" for m in method_flags for rule in rules]
    lines.append(",".join(columns))
    for i in range(n_tests):
        cells = [str(i + 1)]
        if ids is not None:
            cells.append(ids[i])
        cells += [str(n_reps), _num(float(tstats[i])), str(int(battery.degenerate[i]))]
        cells += [_prob(float(pvals[m][i])) for m in method_flags]
        cells += [str(int(flags[(m, rule)][i])) for m in method_flags for rule in rules]
        lines.append(",".join(cells))
    _emit(out, lines)
    return EXIT_OK


def _simulate_config_items(grid: ExperimentGrid, c: float) -> list[tuple[str, str]]:
    return [
        ("n-tests", ",".join(str(v) for v in grid.n_tests)),
        ("n-reps", ",".join(str(v) for v in grid.n_reps)),
        ("method", ",".join(grid.methods)),
        ("replication-budget", str(grid.replication_budget)),
        ("replications", str(grid.replications) if grid.replications else "auto"),
        ("boot-reps", str(grid.bootstrap_reps) if grid.bootstrap_reps else "auto"),
        ("desk-scale", _num(grid.desk_scale)),
        ("case", grid.case),
        ("c", _num(c)),
    ]


def _cmd_simulate(args: argparse.Namespace) -> int:
    opts = _Options(args, "simulate")
    method_flags = opts.get("method", _str_list, ("normal", "t", "bootstrap"))
    methods = []
    for m in method_flags:
        if m not in _METHOD_BY_FLAG:
            raise ConfigError(f"unknown method {m!r}; choose from {sorted(_METHOD_BY_FLAG)}")
        methods.append(_METHOD_BY_FLAG[m])
    grid = ExperimentGrid(
        n_tests=opts.get("n-tests", _int_list, (600,)),
        n_reps=opts.get("n-reps", _int_list, (6,)),
        methods=tuple(methods),
        replication_budget=opts.get("replication-budget", int, 600_000),
        replications=opts.get("replications", int, None),
        bootstrap_reps=opts.get("boot-reps", int, None),
        desk_scale=opts.get("desk-scale", float, 1.0),
        case=opts.get("case", str, "I"),
        seed=opts.get("seed", int, 0),
    )
    mean_cfg = MeanMixtureConfig(c=opts.get("c", float, 1.0), seed=grid.seed)
    threads = opts.get("threads", int, 1)
    out = opts.get("out", str, None)
    kernels.set_threads(threads)

    report = run_accuracy_experiment(grid, mean_cfg)

    lines = _header_lines("simulate", _simulate_config_items(grid, mean_cfg.c), grid.seed)
    lines.append(
        "n_tests,n_reps,method,alpha_n,boot_reps,replications,"
        "mean_rejected_fraction,mean_accuracy,rmse_accuracy"
    )
    for cell in report.cells:
        lines.append(
            ",".join(
                [
                    str(cell.n_tests),
                    str(cell.n_reps),
                    cell.method,
                    _prob(cell.alpha_n),
                    str(cell.boot_reps),
                    str(cell.replications),
                    _prob(cell.mean_rejected_fraction),
                    _num(cell.mean_accuracy),
                    _num(cell.rmse_accuracy),
                ]
            )
        )
    if out is not None:
        _emit(out, lines)

    table = [
        f"{'N':>6} {'n':>4} {'method':<14} {'alpha_N':>12} {'B':>6} {'reps':>6} "
        f"{'rej.frac':>12} {'mean acc':>12} {'RMSE':>12}"
    ]
    for cell in report.cells:
        table.append(
            f"{cell.n_tests:>6} {cell.n_reps:>4} {cell.method:<14} "
            f"{_prob(cell.alpha_n):>12} {cell.boot_reps:>6} {cell.replications:>6} "
            f"{_prob(cell.mean_rejected_fraction):>12} {cell.mean_accuracy:>12.4f} "
            f"{cell.rmse_accuracy:>12.4f}"
        )
    sys.stdout.write("\n".join(table) + "\n")
    return EXIT_OK


def _cmd_validate_ld(args: argparse.Namespace) -> int:
    opts = _Options(args, "validate-ld")
    dist = opts.get("dist", str, "upow4")
    if dist not in DISTRIBUTIONS:
        raise ConfigError(f"unknown dist {dist!r}; choose from {sorted(DISTRIBUTIONS)}")
    n_reps = opts.get("n-reps", int, 50)
    n_mc = opts.get("mc-samples", int, 1_000_000)
    xs = opts.get("xs", _float_list, (0.5, 1.0, 1.5, 1.9))
    seed = opts.get("seed", int, 0)
    threads = opts.get("threads", int, 1)
    out = opts.get("out", str, None)
    kernels.set_threads(threads)

    cells = ld_ratio_validate(dist, n_reps, xs, n_mc, seed)

    config = [
        ("dist", dist),
        ("n-reps", str(n_reps)),
        ("mc-samples", str(n_mc)),
        ("xs", ",".join(_num(x) for x in xs)),
    ]
    lines = _header_lines("validate-ld", config, seed)
    lines.append(
        "x,n_hits,measured_ratio,predicted_ratio,mc_se,residual,scaled_residual,"
        "expected_count,flagged"
    )
    for cell in cells:
        lines.append(
            ",".join(
                [
                    _num(cell.x),
                    str(cell.n_hits),
                    _num(cell.measured_ratio),
                    _num(cell.predicted_ratio),
                    _num(cell.mc_se),
                    _num(cell.residual),
                    _num(cell.scaled_residual),
                    _num(cell.expected_count),
                    str(int(cell.flagged)),
                ]
            )
        )
    _emit(out, lines)
    if out is not None:
        flagged = sum(c.flagged for c in cells)
        sys.stdout.write(
            f"validate-ld: {len(cells)} grid points, {flagged} flagged; wrote {out}\n"
        )
    return EXIT_OK


def _cmd_forecast(args: argparse.Namespace) -> int:
    opts = _Options(args, "forecast")
    alpha = opts.get("alpha", float, 0.05)
    gamma = opts.get("gamma", float, 0.0)
    ks = opts.get("k", _int_list, (1, 2, 3, 4, 5))
    out = opts.get("out", str, None)
    skew_file = opts.get("skew-file", str, None)
    if skew_file is not None:
        try:
            with open(skew_file, encoding="utf-8") as fh:
                skews = tuple(
                    float(line.strip()) for line in fh if line.strip() and not line.startswith("#")
                )
        except OSError as exc:
            raise ParseError(f"cannot read skewness file {skew_file}: {exc}") from exc
        except ValueError as exc:
            raise ParseError(f"{skew_file}: {exc}") from exc
    else:
        skews = opts.get("skew", _float_list, (0.0,))
    if not skews:
        raise ConfigError("no skewness values supplied")

    forecast = level_forecast(skews, gamma, alpha, ks)
    config = [
        ("alpha", _prob(alpha)),
        ("gamma", _num(gamma)),
        ("n-skews", str(len(skews))),
        ("k", ",".join(str(k) for k in ks)),
    ]
    lines = _header_lines("forecast", config, None)
    lines.append(f"# beta: {_prob(forecast.beta)}")
    lines.append(f"# fwer_limit: {_prob(forecast.fwer_limit)}")
    lines.append("k,gfwer_bound,gfwer_poisson_limit")
    for k, levels in zip(forecast.ks, forecast.gfwer):
        lines.append(f"{k},{_prob(levels.bound)},{_prob(levels.poisson_limit)}")
    _emit(out, lines)
    if out is not None:
        sys.stdout.write(
            f"beta = {_prob(forecast.beta)}\nfwer_limit = {_prob(forecast.fwer_limit)}\n"
        )
        for k, levels in zip(forecast.ks, forecast.gfwer):
            sys.stdout.write(
                f"k={k}: bound {_prob(levels.bound)}, poisson {_prob(levels.poisson_limit)}\n"
            )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcalib",
        description="Calibrate and evaluate large batteries of simultaneous t-tests.",
    )
    parser.add_argument("--version", action="version", version=f"tcalib {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, with_threads=True):
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--preset", help="named preset, e.g. 'paper'")
        if with_threads:
            p.add_argument("--threads", type=int, help="kernel thread count (default 1)")

    p_test = sub.add_parser("test", help="calibrate and select on a CSV data matrix")
    p_test.add_argument("input", help="CSV matrix, one row per test (optional id column)")
    p_test.add_argument("--alpha", type=float, help="overall level (default 0.05)")
    p_test.add_argument("--alpha-n", type=float, help="classical per-test threshold")
    p_test.add_argument(
        "--method", help="comma list from normal,t,bootstrap,agg-bootstrap (default t)"
    )
    p_test.add_argument(
        "--rule", help="comma list from bonferroni,bh,classical (default classical)"
    )
    p_test.add_argument("--boot-reps", type=int, help="bootstrap resamples (default 2000)")
    common(p_test)
    p_test.set_defaults(func=_cmd_test)

    p_sim = sub.add_parser("simulate", help="run the level-accuracy experiment grid")
    p_sim.add_argument("--n-tests", help="comma list of battery sizes (multiples of 3)")
    p_sim.add_argument("--n-reps", help="comma list of replicate counts")
    p_sim.add_argument(
        "--method", help="comma list from normal,t,bootstrap,agg-bootstrap,oracle"
    )
    p_sim.add_argument("--replications", type=int, help="per-cell replications override")
    p_sim.add_argument("--replication-budget", type=int, help="total draws budget (default 600000)")
    p_sim.add_argument("--boot-reps", type=int, help="bootstrap resamples override")
    p_sim.add_argument("--desk-scale", type=float, help="scale replications and resamples")
    p_sim.add_argument("--case", help="factor loading case, I or II")
    p_sim.add_argument("--c", type=float, help="zero-mean mixture weight (default 1)")
    common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_ld = sub.add_parser("validate-ld", help="tail-ratio validation of t statistics")
    p_ld.add_argument("--dist", help="uniform (symmetric) or upow4 (right-skewed)")
    p_ld.add_argument("--n-reps", type=int, help="sample size n (default 50)")
    p_ld.add_argument("--mc-samples", type=int, help="Monte-Carlo samples (default 1e6)")
    p_ld.add_argument("--xs", help="comma list of tail points (default 0.5,1.0,1.5,1.9)")
    common(p_ld)
    p_ld.set_defaults(func=_cmd_validate_ld)

    p_fc = sub.add_parser("forecast", help="closed-form level forecasts from skewness")
    p_fc.add_argument("--alpha", type=float, help="overall level (default 0.05)")
    p_fc.add_argument("--gamma", type=float, help="log(N)/n^(1/3) growth limit (default 0)")
    p_fc.add_argument("--skew", help="comma list of skewness values")
    p_fc.add_argument("--skew-file", help="file with one skewness per line")
    p_fc.add_argument("--k", help="comma list of generalized-FWER orders (default 1..5)")
    common(p_fc, with_threads=False)
    p_fc.set_defaults(func=_cmd_forecast)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ShapeError) as exc:
        print(f"tcalib: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, ValueError) as exc:
        print(f"tcalib: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TcalibError as exc:
        print(f"tcalib: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
