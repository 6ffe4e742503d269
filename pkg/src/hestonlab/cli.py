"""Command-line driver.

Commands: ``closed-form``, ``xcov``, ``verify``, ``convergence``,
``dump-paths``. Settings come from ``--config FILE`` (``key = value`` lines)
and are overridden by flags. Exit codes: 0 pass, 1 a statistical check
failed, 2 configuration error.

Reports are CSV (``NA`` marks unavailable values) or aligned text, preceded
by ``#`` comment lines echoing every setting and the package version.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from hestonlab import __version__
from hestonlab.analytics import a_delta, cross_cov_closed_form, decay_factor
from hestonlab.config import ExperimentConfig, read_config_file
from hestonlab.errors import ConfigError, HestonLabError
from hestonlab.estimators import xcov_profile
from hestonlab.pathsim import simulate_paths
from hestonlab.verification import (
    CONSISTENT_Z,
    NONZERO_Z,
    ResidualReport,
    common_noise_resolution,
    ito_residual_correct,
    ito_residual_incorrect,
    martingale_check,
    squared_logprice_residual,
    strictly_decreasing,
    summarize,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

RESIDUAL_COLUMNS = ("check_name", "substeps", "mean", "rms", "std_error", "n_observations", "z")


@dataclass
class Report:
    columns: tuple[str, ...]
    rows: list[tuple]
    exit_code: int = EXIT_OK
    notes: list[str] = field(default_factory=list)


def _validate_zero_drift(cfg: ExperimentConfig) -> None:
    cfg.validate()
    if cfg.mu != 0 or cfg.c != 0:
        raise ConfigError("this command assumes mu = c = 0")


def run_closed_form(cfg: ExperimentConfig, workers=None) -> Report:
    _validate_zero_drift(cfg)
    params = cfg.heston_params(cfg.closed_form_theta_scale)
    a = a_delta(cfg.kappa, cfg.delta)
    decay = decay_factor(cfg.kappa, cfg.delta)
    rows = [(n, cross_cov_closed_form(params, cfg.delta, n).value) for n in range(1, cfg.n_max + 1)]
    return Report(("lag", "closed_form"), rows, notes=[f"a_delta = {a!r}", f"decay = {decay!r}"])


def run_xcov(cfg: ExperimentConfig, workers=None) -> Report:
    _validate_zero_drift(cfg)
    anchor, _ = cfg.anchor_and_horizon()
    ens = simulate_paths(cfg.heston_params(), cfg.sim_config(), workers=workers)
    profile = xcov_profile(ens, cfg.n_max, anchor, params=cfg.heston_params(cfg.closed_form_theta_scale))
    rows = [(e.lag_n, e.estimate, e.std_error, e.closed_form, e.z_score, e.n_samples) for e in profile]
    ok = all(abs(e.z_score) < CONSISTENT_Z for e in profile)
    return Report(
        ("lag", "estimate", "std_error", "closed_form", "z_score", "n_samples"),
        rows,
        EXIT_OK if ok else EXIT_FAIL,
        notes=[f"anchor interval = {anchor}", "estimator normalization = 1/M"],
    )


def _residual_row(r: ResidualReport) -> tuple:
    return (r.check_name, r.substeps, r.mean_residual, r.rms_residual,
            r.std_error_of_mean, r.n_observations, r.z)


def run_verify(cfg: ExperimentConfig, workers=None) -> Report:
    _validate_zero_drift(cfg)
    anchor, _ = cfg.anchor_and_horizon()
    params = cfg.heston_params()
    ens = simulate_paths(params, cfg.sim_config(track_level_integral=True), workers=workers)
    correct = ito_residual_correct(ens)
    wrong = ito_residual_incorrect(ens)
    level = squared_logprice_residual(ens)
    mart = martingale_check(ens, 1, anchor)

    reports = [correct, wrong, level, mart, *mart.buckets]
    ok = (
        abs(correct.z) < CONSISTENT_Z
        and abs(level.z) < CONSISTENT_Z
        and abs(mart.z) < CONSISTENT_Z
        and mart.buckets_outside(CONSISTENT_Z) <= 1
        and abs(wrong.z) > NONZERO_Z
    )
    if params.sigma == 0:
        # constant variance: the look-ahead residual has mean -2 theta delta
        oracle = -2.0 * params.theta * cfg.delta
        res = ens.returns[:, :-1] ** 2 - ens.lookahead_integral[:, :-1] - ens.integrated_variance[:, :-1]
        gap = summarize("lookahead_gap_to_constant_variance_oracle", cfg.substeps, res - oracle)
        reports.append(gap)
        ok = ok and abs(gap.z) < CONSISTENT_Z
    return Report(RESIDUAL_COLUMNS, [_residual_row(r) for r in reports], EXIT_OK if ok else EXIT_FAIL,
                  notes=[f"martingale interval = {anchor + 1}"])


def run_convergence(cfg: ExperimentConfig, workers=None) -> Report:
    _validate_zero_drift(cfg)
    params = cfg.heston_params()
    fine = common_noise_resolution(cfg.substep_list)
    correct, rows = [], []
    for m in cfg.substep_list:
        ens = simulate_paths(params, cfg.sim_config(substeps=m, noise_substeps=fine), workers=workers)
        c = ito_residual_correct(ens)
        correct.append(c)
        rows += [_residual_row(c), _residual_row(ito_residual_incorrect(ens))]
    ok = strictly_decreasing(r.rms_residual for r in correct)
    notes = [f"noise resolution = {fine if fine is not None else 'per run'}"]
    for a, b in zip(correct, correct[1:]):
        notes.append(f"rms ratio m={a.substeps}->{b.substeps} = {a.rms_residual / b.rms_residual!r}")
    return Report(RESIDUAL_COLUMNS, rows, EXIT_OK if ok else EXIT_FAIL, notes=notes)


def run_dump_paths(cfg: ExperimentConfig, workers=None) -> Report:
    cfg.validate(lags=False)
    ens = simulate_paths(cfg.heston_params(), cfg.sim_config(), workers=workers)
    m, n = ens.returns.shape
    path = np.repeat(np.arange(m), n)
    interval = np.tile(np.arange(1, n + 1), m)
    cols = [ens.returns, ens.integrated_variance, ens.adapted_integral, ens.lookahead_integral]
    flat = [c.ravel().tolist() for c in cols]
    rows = list(zip(path.tolist(), interval.tolist(), *flat))
    return Report(("path", "interval", "R", "IV", "Scorr", "Swrong"), rows)


COMMANDS = {
    "closed-form": run_closed_form,
    "xcov": run_xcov,
    "verify": run_verify,
    "convergence": run_convergence,
    "dump-paths": run_dump_paths,
}


def _cell(value, pretty: bool) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "NA"
    if isinstance(value, float):
        return f"{value:.6g}" if pretty else repr(value)
    return str(value)


def render(command: str, cfg: ExperimentConfig, report: Report) -> str:
    buf = io.StringIO()
    buf.write(f"# hestonlab {__version__} {command}\n")
    for key, value in cfg.to_mapping().items():
        if key != "out":
            buf.write(f"# {key} = {value}\n")
    for note in report.notes:
        buf.write(f"# {note}\n")
    pretty = cfg.format == "pretty"
    cells = [[_cell(v, pretty) for v in row] for row in report.rows]
    if pretty:
        widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(report.columns)]
        buf.write("  ".join(c.rjust(w) for c, w in zip(report.columns, widths)).rstrip() + "\n")
        for r in cells:
            buf.write("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() + "\n")
    else:
        buf.write(",".join(report.columns) + "\n")
        for r in cells:
            buf.write(",".join(r) + "\n")
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    for name, help_ in [
        ("kappa", "mean reversion rate (per year)"),
        ("theta", "long-run variance"),
        ("sigma", "volatility of variance"),
        ("rho", "price/variance shock correlation"),
        ("mu", "drift"),
        ("c", "variance-in-mean coefficient"),
        ("delta", "return interval in years, fractions allowed (1/12)"),
        ("substeps", "Euler sub-steps per interval"),
        ("horizon", "intervals per path, or auto"),
        ("paths", "number of paths"),
        ("scheme", "euler or milstein"),
        ("seed", "64-bit seed"),
        ("v0", "stationary, theta or a positive number"),
        ("n-max", "largest lag"),
        ("anchor", "anchor interval, or auto"),
        ("substep-list", "comma-separated sub-step counts for convergence"),
        ("out", "output file (default stdout)"),
        ("format", "csv or pretty"),
        ("antithetic", "true or false"),
    ]:
        common.add_argument(f"--{name}", help=help_)
    common.add_argument("--closed-form-theta-scale", help=argparse.SUPPRESS)
    common.add_argument("--workers", type=int, help="worker threads (default $HESTONLAB_WORKERS or CPU count)")

    parser = argparse.ArgumentParser(prog="hestonlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hestonlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    mapping = read_config_file(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in ("command", "config", "workers") or value is None:
            continue
        mapping[key] = value
    return ExperimentConfig.from_mapping(mapping)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        report = COMMANDS[args.command](cfg, workers=args.workers)
    except HestonLabError as exc:
        print(f"hestonlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render(args.command, cfg, report)
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write(text)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
