"""Command line entry point: ``qbe run``, ``qbe scenario`` and ``qbe bench``.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import apply_pairs, parse_config
from .errors import ConfigError, NumericalError
from .integrator import run
from .scenarios import SCENARIOS, Outputs, run_scenario, write_run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
DEFAULT_SNAPSHOTS = 5

log = logging.getLogger("qbe")


def _pairs(items):
    pairs = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected key=value after --set")
        pairs[key.strip()] = value.strip()
    return pairs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbe", description="Energy-space boson Boltzmann solver")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation from a config file")
    p_run.add_argument("--config", required=True, type=Path)
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")

    p_sc = sub.add_parser("scenario", help="run a predefined experiment")
    p_sc.add_argument("name", choices=sorted(SCENARIOS))
    p_sc.add_argument("--set", action="append", metavar="KEY=VALUE")

    p_bench = sub.add_parser("bench", help="time the collision evaluators")
    p_bench.add_argument("--set", action="append", metavar="KEY=VALUE")
    return parser


def cmd_run(args) -> int:
    try:
        text = args.config.read_text()
    except OSError as exc:
        raise ConfigError("config", str(exc)) from None
    config = parse_config(text, _pairs(args.set))
    if not config.snapshot_times:
        # evenly spaced snapshots unless the config lists its own
        times = tuple(float(t) for t in np.linspace(0.0, config.t_final, DEFAULT_SNAPSHOTS))
        config = apply_pairs(config, {"snapshot_times": ",".join(repr(t) for t in times)})
    out = Outputs(config.output_dir)
    try:
        result = run(config, _progress(args))
    except NumericalError as exc:
        if exc.last_state is not None:
            dump = io.write_snapshot(out.path("last_valid_state.csv"), exc.last_state.grid, exc.last_state.f)
            print(f"last valid state written to {dump}", file=sys.stderr)
        raise
    write_run(out, config.scheme, result)
    io.write_metadata(out.path("metadata.json"), {
        **result.metadata, "critical_time": result.critical_time,
        "snapshot_times": config.snapshot_times, "config": vars(config),
    })
    print(f"wrote {out.root}/ ({len(result.records)} records, t_c={result.critical_time})")
    return EXIT_OK


def cmd_scenario(name, sets, args) -> int:
    report = run_scenario(name, _pairs(sets), _progress(args))
    width = max((len(k) for k in report.values), default=0)
    for key, value in report.values.items():
        print(f"{key:<{width}}  {io.fmt(value)}")
    print(f"{len(report.files)} files written")
    return EXIT_OK


def _progress(args):
    if not args.verbose:
        return None
    return lambda rec: log.info("t=%.4g M=%.6g E=%.6g S=%.6g C_F=%.4g", rec.t, rec.mass, rec.energy,
                                rec.entropy, rec.c_f)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "bench":
            return cmd_scenario("bench", args.set, args)
        return cmd_scenario(args.name, args.set, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
