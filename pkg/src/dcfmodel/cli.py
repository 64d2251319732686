"""Command-line front end; every subcommand writes CSV.

    dcfmodel solve    [--config F] [--set k=v ...]
    dcfmodel sweep    --axis lambda --grid 0.1,1,10,100 [--validate]
    dcfmodel simulate [--seed S] [--slots N | --horizon-us T] [--trace [F]]
    dcfmodel validate --axis lambda --grid 1,10,100 [--seed S]
    dcfmodel ber      --grid 0:40:9

Exit status: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import phy, sim, solver
from .config import ConfigError, Scenario, load_scenario

SOLVE_COLUMNS = ["lambda_pkt_s", "n", "snr_db", "z0_db", "p_e", "tau", "p_col", "p_cap",
                 "p_eq", "q", "e_slot_us", "throughput", "iterations", "residual"]
SIM_COLUMNS = ["throughput_sim", "ci95", "seed"]
VALIDATE_COLUMNS = ["lambda_pkt_s", "n", "snr_db", "z0_db", "p_e", "throughput_analytic",
                    "throughput_sim", "ci95", "rel_err", "slots", "seed"]
SIM_REPORT_COLUMNS = ["lambda_pkt_s", "n", "snr_db", "z0_db", "p_e", "sim_time_us",
                      "payload_bits_delivered", "slots_idle", "slots_success",
                      "slots_collision", "slots_error", "slots_capture", "tau_hat",
                      "throughput", "ci95_halfwidth", "batches", "seed"]
AXES = {"lambda": "lambda_pkt_s", "n": "n_stations", "snr": "snr_db", "z0": "z0_db"}
DEFAULT_HORIZON_US = 2e9

EXIT_USAGE, EXIT_NUMERIC = 1, 2


class UsageError(Exception):
    pass


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".10g")
    return str(value)


def parse_grid(text: str) -> list[float]:
    """``a:b:steps`` (inclusive linear grid) or ``v1,v2,...``."""
    try:
        if ":" in text:
            a, b, steps = text.split(":")
            steps = int(steps)
            if steps < 1:
                raise ValueError
            grid = [float(v) for v in np.linspace(float(a), float(b), steps)]
        else:
            grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use a:b:steps or v1,v2,...") from None
    if not grid:
        raise UsageError("grid is empty")
    diffs = np.diff(grid)
    if len(grid) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise UsageError("grid must be strictly monotone")
    return grid


def scenario_from_args(args) -> Scenario:
    scenario = load_scenario(args.config) if args.config else Scenario()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        overrides[key] = value
    return scenario.replace(**overrides) if overrides else scenario


def at_point(scenario: Scenario, axis: str, value: float) -> Scenario:
    key = AXES[axis]
    if key == "n_stations":
        if not float(value).is_integer():
            raise UsageError(f"n must be an integer, got {value}")
        value = int(value)
    return scenario.replace(**{key: value})


def _head(scenario: Scenario, p_e: float) -> list:
    mac, ch, tr, _ = scenario
    return [tr.lambda_pkt_s, tr.n_stations, ch.snr_db, ch.z0_db, p_e]


def solve_row(scenario: Scenario) -> list:
    mac, ch, tr, cfg = scenario
    s = solver.solve_fixed_point(mac, ch, tr, cfg)
    return _head(scenario, s.p_e) + [s.tau, s.p_col, s.p_cap, s.p_eq, s.q, s.e_slot_us,
                                     s.throughput, s.iterations, s.residual]


def _simulate(scenario: Scenario, seed: int, horizon_us, slots, batches,
              trace=None) -> sim.SimReport:
    mac, ch, tr, _ = scenario
    if slots is None and horizon_us is None:
        horizon_us = DEFAULT_HORIZON_US
    return sim.run(mac, ch, tr, seed=seed, horizon_us=horizon_us, n_slots=slots,
                   batches=batches, trace=trace)


def rel_err(sim_value: float, model_value: float) -> float:
    if model_value == 0.0:
        return 0.0 if sim_value == 0.0 else math.inf
    return abs(sim_value - model_value) / model_value


def _sweep_point(job):
    scenario, validate, seed, horizon_us, slots, batches = job
    try:
        row = solve_row(scenario)
        if validate:
            rep = _simulate(scenario, seed, horizon_us, slots, batches)
            row += [rep.throughput, rep.ci95_halfwidth, seed]
        return row, None
    except (solver.SolverError, ArithmeticError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _validate_point(job):
    scenario, seed, horizon_us, slots, batches = job
    try:
        mac, ch, tr, cfg = scenario
        model = solver.solve_fixed_point(mac, ch, tr, cfg)
        rep = _simulate(scenario, seed, horizon_us, slots, batches)
        row = _head(scenario, model.p_e) + [
            model.throughput, rep.throughput, rep.ci95_halfwidth,
            rel_err(rep.throughput, model.throughput), rep.total_slots, seed]
        return row, None
    except (solver.SolverError, ArithmeticError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _table_with_errors(columns, results, points):
    """Rows in grid order; failed points keep only axis values and an error."""
    failed = any(err for _, err in results)
    rows = []
    for (row, err), scenario in zip(results, points):
        if err is None:
            rows.append(row + ([""] if failed else []))
        else:
            mac, ch, tr, _ = scenario
            head = [tr.lambda_pkt_s, tr.n_stations, ch.snr_db, ch.z0_db]
            rows.append(head + [""] * (len(columns) - len(head)) + [err])
    return columns + (["error"] if failed else []), rows


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    scenario = scenario_from_args(args)
    row = solve_row(scenario)
    _emit(_csv_text(SOLVE_COLUMNS, [row]), args.out)
    values = dict(zip(SOLVE_COLUMNS, row))
    print(f"S = {values['throughput']:.6f}  tau = {values['tau']:.6g}  "
          f"P_col = {values['p_col']:.6g}  P_cap = {values['p_cap']:.6g}  "
          f"P_e = {values['p_e']:.6g}  q = {values['q']:.6g}  "
          f"({values['iterations']} iterations)", file=sys.stderr)
    return 0


def _points(args):
    scenario = scenario_from_args(args)
    return [at_point(scenario, args.axis, v) for v in parse_grid(args.grid)]


def cmd_sweep(args) -> int:
    points = _points(args)
    jobs = [(p, args.validate, args.seed, args.horizon_us, args.slots, args.batches)
            for p in points]
    results = _map(_sweep_point, jobs, args.jobs)
    columns = SOLVE_COLUMNS + (SIM_COLUMNS if args.validate else [])
    columns, rows = _table_with_errors(columns, results, points)
    _emit(_csv_text(columns, rows), args.out)
    return 0


def cmd_validate(args) -> int:
    points = _points(args)
    jobs = [(p, args.seed, args.horizon_us, args.slots, args.batches) for p in points]
    results = _map(_validate_point, jobs, args.jobs)
    columns, rows = _table_with_errors(VALIDATE_COLUMNS, results, points)
    _emit(_csv_text(columns, rows), args.out)
    errs = [row[VALIDATE_COLUMNS.index("rel_err")] for row, err in results if err is None]
    if errs:
        print(f"max rel_err = {max(errs):.6g} over {len(errs)} points", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    scenario = scenario_from_args(args)
    trace = [] if args.trace else None
    rep = _simulate(scenario, args.seed, args.horizon_us, args.slots, args.batches, trace)
    row = _head(scenario, phy.fer(scenario.mac, scenario.channel)) + [
        rep.sim_time_us, rep.payload_bits_delivered, rep.slots_idle, rep.slots_success,
        rep.slots_collision, rep.slots_error, rep.slots_capture, rep.tau_hat,
        rep.throughput, rep.ci95_halfwidth, rep.batches, rep.seed]
    _emit(_csv_text(SIM_REPORT_COLUMNS, [row]), args.out)
    if trace is not None:
        lines = [(i, sim.OUTCOME_NAMES[c], "" if s < 0 else s, d) for i, c, s, d in trace]
        text = _csv_text(["slot_index", "outcome", "station", "duration_us"], lines)
        if args.trace == "-":
            sys.stderr.write(text)
        else:
            with open(args.trace, "w", newline="") as fh:
                fh.write(text)
    if rep.degenerate:
        print("warning: short run, confidence interval unreliable", file=sys.stderr)
    return 0


def cmd_ber(args) -> int:
    scenario = scenario_from_args(args)
    rows = phy.ber_table(scenario.mac, scenario.channel, parse_grid(args.grid))
    _emit(_csv_text(["snr_db", "ber", "fer"], rows), args.out)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (key = value lines)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one scenario key; repeatable")
    common.add_argument("--out", help="write CSV here instead of stdout")

    simopts = argparse.ArgumentParser(add_help=False)
    simopts.add_argument("--seed", type=int, default=1)
    length = simopts.add_mutually_exclusive_group()
    length.add_argument("--horizon-us", type=float, default=None,
                        help=f"simulated time per point (default {DEFAULT_HORIZON_US:g})")
    length.add_argument("--slots", type=int, default=None, help="simulated slots per point")
    simopts.add_argument("--batches", type=int, default=10)

    gridopts = argparse.ArgumentParser(add_help=False)
    gridopts.add_argument("--axis", choices=sorted(AXES), required=True)
    gridopts.add_argument("--grid", required=True, help="a:b:steps or v1,v2,...")
    gridopts.add_argument("--jobs", type=int, default=1, help="worker processes")

    parser = _Parser(prog="dcfmodel", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("solve", parents=[common], help="solve one scenario")
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("sweep", parents=[common, gridopts, simopts], help="solve over a grid")
    p.add_argument("--validate", action="store_true", help="add simulated columns")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("simulate", parents=[common, simopts], help="Monte-Carlo run")
    p.add_argument("--trace", nargs="?", const="-", default=None, metavar="FILE",
                   help="per-slot event log (stderr when FILE is omitted)")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("validate", parents=[common, gridopts, simopts],
                       help="model vs simulation over a grid")
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("ber", parents=[common], help="BER/FER table over SNR (dB)")
    p.add_argument("--grid", required=True, help="SNR grid in dB")
    p.set_defaults(func=cmd_ber)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, OSError, phy.UnsupportedModulation) as exc:
        print(f"dcfmodel: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (solver.SolverError, ArithmeticError) as exc:
        print(f"dcfmodel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
