"""Command-line surface: rate queries, power diagnostics, partition
accounting, figure sweeps and the self-test.

Exit codes: 0 success, 1 self-test failure, 2 usage error, 3 IO error.
All randomness flows from --seed (default 0); reruns with the same flags
produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import experiments
from .combinatorics import (
    count_combinations,
    count_subfunction_sets,
    expected_subcarrier_share,
)
from .core import SimParams, snr_db_to_linear
from .experiments import SweepSpec, run_selftest, run_sweep
from .power import build_assignment, sponge_squeeze
from .rates import DEFAULT_GAMMA_TRIALS

DEFAULT_SEED = 0

RATE_FIELDS = ("family", "K", "M", "N", "P_dB", "rate", "stderr", "trials")

CONFIG_KEYS = {
    "k", "m", "n", "snr_db", "power", "trials", "seed", "family", "out",
    "gamma_trials", "figure", "opa_trials", "workers",
}


class UsageError(ValueError):
    pass


def _fmt(value):
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ValueError("refusing to serialize a non-finite value")
        return f"{value:.12g}"
    return str(value)


def write_csv(rows, path_or_file, fieldnames=None):
    """Write dict rows with a header line; floats get 12 significant digits."""
    rows = list(rows)
    if fieldnames is None:
        if not rows:
            raise ValueError("fieldnames are required for an empty row set")
        fieldnames = list(rows[0].keys())

    def emit(fh):
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[name]) for name in fieldnames) + "\n")

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


def _parse_cell(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path):
    """Read a header+rows CSV back into a list of dicts."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file, expected a header line")
    fieldnames = lines[0].split(",")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(fieldnames):
            raise ValueError(
                f"{path}: line {lineno}: expected {len(fieldnames)} cells, got {len(cells)}"
            )
        rows.append({name: _parse_cell(cell) for name, cell in zip(fieldnames, cells)})
    return rows


def read_config(path):
    """Plain key = value lines; # starts a comment; unknown keys rejected."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}: line {lineno}: unknown key {key!r}")
            values[key] = _parse_cell(value.strip())
    return values


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="comac-ofdm",
        description="Computation-rate laboratory for wide-band over-the-air computation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)

    p_rates = sub.add_parser("rates", help="evaluate one rate family at one grid point")
    common(p_rates)
    p_rates.add_argument("--family", choices=sorted(experiments.AVERAGE_POWER_FAMILIES) + ["sfa-opa"],
                         default=None)
    p_rates.add_argument("--k", type=int, default=None)
    p_rates.add_argument("--m", type=int, default=None)
    p_rates.add_argument("--n", type=int, default=None)
    p_rates.add_argument("--snr-db", type=float, default=None)
    p_rates.add_argument("--power", type=float, default=None,
                         help="linear power budget; alternative to --snr-db")
    p_rates.add_argument("--trials", type=int, default=None)
    p_rates.add_argument("--gamma-trials", type=int, default=None)

    p_power = sub.add_parser("power", help="sponge-squeezing diagnostics for one realization")
    common(p_power)
    p_power.add_argument("--k", type=int, default=None)
    p_power.add_argument("--m", type=int, default=None)
    p_power.add_argument("--n", type=int, default=None)
    p_power.add_argument("--snr-db", type=float, default=None)
    p_power.add_argument("--power", type=float, default=None)
    p_power.add_argument("--symbols", type=int, default=1)

    p_part = sub.add_parser("partition", help="sub-function set and combination accounting")
    common(p_part)
    p_part.add_argument("--k", type=int, default=None)
    p_part.add_argument("--m", type=int, default=None)
    p_part.add_argument("--slots", type=int, default=None,
                        help="total sub-carrier slots to split (optional)")

    p_exp = sub.add_parser("experiment", help="run a named figure sweep to CSV")
    p_exp.add_argument("figure", choices=["fig4", "fig5", "fig6", "fig7"])
    common(p_exp)
    p_exp.add_argument("--trials", type=int, default=None)
    p_exp.add_argument("--opa-trials", type=int, default=None)
    p_exp.add_argument("--gamma-trials", type=int, default=None)

    p_self = sub.add_parser("selftest", help="run the invariant suite")
    common(p_self)

    return parser


def _merge(args, key, default=None):
    """Flag value if given, else config value, else default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return getattr(args, "_config", {}).get(key, default)


def _require(args, key):
    value = _merge(args, key)
    if value is None:
        raise UsageError(f"missing required option --{key.replace('_', '-')}")
    return value


def _power_budget(args):
    power = _merge(args, "power")
    snr_db = _merge(args, "snr_db")
    if power is None and snr_db is None:
        raise UsageError("one of --power or --snr-db is required")
    if power is not None and snr_db is not None:
        raise UsageError("--power and --snr-db are mutually exclusive")
    return float(power) if power is not None else snr_db_to_linear(snr_db)


def _cmd_rates(args):
    family = _require(args, "family")
    k = int(_require(args, "k"))
    m = int(_merge(args, "m", k))
    n = int(_merge(args, "n", 1))
    power = _power_budget(args)
    trials = int(_merge(args, "trials", 10_000))
    seed = int(_merge(args, "seed", DEFAULT_SEED))
    gamma_trials = int(_merge(args, "gamma_trials", DEFAULT_GAMMA_TRIALS))
    try:
        params = SimParams(k, m, n, power, trials, seed)
        if family == "sfa-opa":
            est = experiments.rate_sfa_opa(params)
        else:
            est = experiments.AVERAGE_POWER_FAMILIES[family](params, gamma_trials)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    row = experiments._row(est, 10.0 * math.log10(power), 0.0).csv_dict()
    out = _merge(args, "out")
    if out:
        write_csv([row], out, RATE_FIELDS)
    else:
        write_csv([row], sys.stdout, RATE_FIELDS)
    return 0


def _cmd_power(args):
    k = int(_require(args, "k"))
    m = int(_merge(args, "m", k))
    n = int(_merge(args, "n", 1))
    power = _power_budget(args)
    seed = int(_merge(args, "seed", DEFAULT_SEED))
    symbols = int(_merge(args, "symbols", 1))
    try:
        params = SimParams(k, m, n, power, trials=1, seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = []
    for symbol in range(symbols):
        rng = np.random.default_rng([seed, experiments.STREAM_OPA, symbol])
        gains = rng.exponential(size=(k, n))
        omega = build_assignment(gains, m)
        sol = sponge_squeeze(gains, omega, params)
        rep = sol.residuals
        for g in range(n):
            rows.append({
                "symbol": symbol,
                "subcarrier": g + 1,
                "eta": float(sol.eta[g]),
                "objective": sol.objective,
                "feasibility": rep.feasibility,
                "slackness": rep.slackness,
                "stationarity": rep.stationarity,
                "power_gap": rep.power_gap,
            })
    fields = ["symbol", "subcarrier", "eta", "objective", "feasibility",
              "slackness", "stationarity", "power_gap"]
    out = _merge(args, "out")
    write_csv(rows, out if out else sys.stdout, fields)
    return 0


def _cmd_partition(args):
    k = int(_require(args, "k"))
    m = int(_require(args, "m"))
    try:
        n_sets = count_subfunction_sets(k, m)
        n_combos = count_combinations(k, m)
        print(f"K={k} M={m} B={k // m}")
        print(f"subfunction sets |S| = {n_sets}")
        print(f"reconstruction combinations |Q| = {n_combos}")
        slots = _merge(args, "slots")
        if slots is not None:
            shares = expected_subcarrier_share(int(slots), k, m)
            print(f"slots per sub-function = {shares.per_subfunction}")
            print(f"slots per combination = {shares.per_combination}")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return 0


def _cmd_experiment(args):
    figure = args.figure
    seed = int(_merge(args, "seed", DEFAULT_SEED))
    trials = int(_merge(args, "trials", 10_000))
    opa_trials = int(_merge(args, "opa_trials", 200))
    gamma_trials = int(_merge(args, "gamma_trials", DEFAULT_GAMMA_TRIALS))
    grids = {
        "fig4": dict(k_grid=(128,), n_grid=(1, 4, 16)),
        "fig5": dict(k_grid=(8, 32, 128, 512), n_grid=(4, 16)),
        "fig6": dict(k_grid=(8, 32, 128), n_grid=(16,)),
        "fig7": dict(k_grid=(8, 32, 128), n_grid=(16,)),
    }[figure]
    spec = SweepSpec(figure=figure, trials=trials, opa_trials=opa_trials,
                     seed=seed, gamma_trials=gamma_trials, **grids)
    result = run_sweep(spec)
    for err in result.errors:
        print(f"skipped: {err}", file=sys.stderr)
    if figure == "fig5":
        rows = [{
            "K": r.k, "N": r.n, "B_opt": r.k // r.m,
            "rate": r.rate, "stderr": r.stderr,
        } for r in result.rows]
        fields = ["K", "N", "B_opt", "rate", "stderr"]
    else:
        rows = [r.csv_dict() for r in result.rows]
        fields = RATE_FIELDS
    out = _merge(args, "out")
    write_csv(rows, out if out else sys.stdout, fields)
    return 0


def _cmd_selftest(args):
    seed = int(_merge(args, "seed", DEFAULT_SEED))
    report = run_selftest(seed=seed)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.detail}")
    return 0 if report.passed else 1


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args._config = read_config(args.config) if getattr(args, "config", None) else {}
        handler = {
            "rates": _cmd_rates,
            "power": _cmd_power,
            "partition": _cmd_partition,
            "experiment": _cmd_experiment,
            "selftest": _cmd_selftest,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
