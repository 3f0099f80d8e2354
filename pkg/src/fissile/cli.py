"""Command line front end.

Three subcommands:

* ``bench``   -- the mutex benchmark: duration-bounded acquire/release
                 loops with a tunable critical and non-critical section.
* ``atomic``  -- the hashed-lock-array workload: threads hash ids onto a
                 small array of locks and check multi-field records for
                 torn reads.
* ``verify``  -- the protocol verification suite (mutual exclusion, head
                 waiter uniqueness, bounded bypass, FIFO order, element
                 lifetime).

Settings resolve in three layers: built-in defaults, then a ``--config``
file of ``key = value`` lines, then explicit flags. Exit codes: 0 on
success, 1 when verification fails, 2 for usage errors, 3 for I/O errors.
"""

from __future__ import annotations

import argparse
import sys

from . import bench
from .verify import run_verification

__all__ = ["main"]

_DEFAULTS = {
    "lock": "fissile",
    "threads": 4,
    "duration": 10.0,
    "cs_steps": 2,
    "ncs_max": None,  # resolved per workload: bench 0, atomic 200
    "fifo_threads": 0,
    "fifo_ncs_max": 2000,
    "grace": 50,
    "flush_denominator": 256,
    "nodes": None,
    "synthetic_topology": False,
    "seed": 0,
    "runs": 7,
    "mode": "threads",
    "model_target": 20_000,
    "out": None,
}

_ATOMIC_NCS_DEFAULT = 200


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: %r" % (text,))


_CONFIG_SCHEMA = {
    "lock": str,
    "threads": int,
    "duration": float,
    "cs_steps": int,
    "ncs_max": int,
    "fifo_threads": int,
    "fifo_ncs_max": int,
    "grace": int,
    "flush_denominator": int,
    "nodes": int,
    "synthetic_topology": _parse_bool,
    "seed": int,
    "runs": int,
    "mode": str,
    "model_target": int,
    "out": str,
}


def load_config_file(path):
    """Parse ``key = value`` lines; '#' comments and blank lines skipped."""
    overrides = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("%s:%d: expected key = value" % (path, lineno))
            key, _, value = line.partition("=")
            dest = key.strip().replace("-", "_")
            if dest not in _CONFIG_SCHEMA:
                raise ValueError("%s:%d: unknown key %r"
                                 % (path, lineno, key.strip()))
            try:
                overrides[dest] = _CONFIG_SCHEMA[dest](value.strip())
            except ValueError as exc:
                raise ValueError("%s:%d: %s" % (path, lineno, exc)) from None
    return overrides


def _add_common_flags(parser):
    # Defaults are all None sentinels; the real defaults live in _DEFAULTS
    # so a --config file can slot in between them and explicit flags.
    add = parser.add_argument
    add("--lock", choices=bench.LOCK_KINDS,
        help="lock under test (default fissile)")
    add("--threads", type=int, help="worker thread count (default 4)")
    add("--duration", type=float,
        help="seconds per run (default 10)")
    add("--cs-steps", dest="cs_steps", type=int,
        help="PRNG steps inside the critical section (default 2)")
    add("--ncs-max", dest="ncs_max", type=int,
        help="max PRNG steps between acquisitions "
             "(default: bench 0, atomic %d)" % _ATOMIC_NCS_DEFAULT)
    add("--fifo-threads", dest="fifo_threads", type=int,
        help="threads that request FIFO service (default 0)")
    add("--fifo-ncs-max", dest="fifo_ncs_max", type=int,
        help="max PRNG steps between FIFO acquisitions (default 2000)")
    add("--grace", type=int,
        help="fast-path grace period in swap attempts (default 50)")
    add("--flush-denominator", dest="flush_denominator", type=int,
        help="secondary-queue flush is a 1/N coin (default 256)")
    add("--nodes", type=int,
        help="node count for the synthetic topology")
    add("--synthetic-topology", dest="synthetic_topology",
        action="store_const", const=True,
        help="map threads to nodes round-robin instead of querying the OS")
    add("--seed", type=int, help="base PRNG seed (default 0)")
    add("--runs", type=int,
        help="runs per report, odd, median reported (default 7)")
    add("--mode", choices=("threads", "model"),
        help="'threads' for real threads, 'model' for the deterministic "
             "scheduler replay (default threads)")
    add("--model-target", dest="model_target", type=int,
        help="total acquisitions per model-mode run (default 20000)")
    add("--out", help="write results (CSV, or verify trace) to this file")
    add("--config", help="file of key = value defaults")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fissile-bench",
        description="Benchmarks and verification for the fissile lock "
                    "and its baselines.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
            ("bench", "duration-bounded mutex benchmark"),
            ("atomic", "hashed-lock-array torn-read workload"),
            ("verify", "protocol verification suite")):
        _add_common_flags(sub.add_parser(name, help=blurb,
                                         description=blurb))
    return parser


def _resolve(args, overrides):
    settings = dict(_DEFAULTS)
    settings.update(overrides)
    for dest in _DEFAULTS:
        given = getattr(args, dest, None)
        if given is not None:
            settings[dest] = given
    return settings


def _build_config(settings, workload):
    ncs = settings["ncs_max"]
    if ncs is None:
        ncs = _ATOMIC_NCS_DEFAULT if workload == "atomic" else 0
    return bench.BenchConfig(
        lock_kind=settings["lock"],
        threads=settings["threads"],
        duration_seconds=settings["duration"],
        cs_prng_steps=settings["cs_steps"],
        ncs_max_steps=ncs,
        fifo_threads=settings["fifo_threads"],
        fifo_ncs_max_steps=settings["fifo_ncs_max"],
        grace_period=settings["grace"],
        flush_denominator=settings["flush_denominator"],
        synthetic_topology=settings["synthetic_topology"],
        node_count=settings["nodes"],
        seed=settings["seed"],
        runs=settings["runs"],
        mode=settings["mode"],
        model_target=settings["model_target"],
    ).validate()


_TABLE_COLUMNS = ("run", "lock", "threads", "elapsed", "acquisitions",
                  "throughput", "spread", "migration_reciprocal", "rstddev",
                  "theil_t")
_FIFO_COLUMNS = ("fifo_acquisitions", "fifo_throughput", "fifo_wait_worst",
                 "fifo_wait_median")


def _print_report(report, show_fifo, show_violations):
    columns = list(_TABLE_COLUMNS)
    if show_fifo:
        columns += _FIFO_COLUMNS
    if show_violations:
        columns.append("consistency_violations")
    index = [bench.CSV_COLUMNS.index(c) for c in columns]
    rows = [[row[i] for i in index] for row in bench.report_rows(report)]
    widths = [max(len(name), *(len(r[i]) for r in rows))
              for i, name in enumerate(columns)]
    for warning in report.warnings:
        print("warning: %s" % warning, file=sys.stderr)
    print("  ".join(name.ljust(w) for name, w in zip(columns, widths)))
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {}
    if args.config:
        try:
            overrides = load_config_file(args.config)
        except OSError as exc:
            print("fissile-bench: %s" % exc, file=sys.stderr)
            return 3
        except ValueError as exc:
            parser.error(str(exc))
    settings = _resolve(args, overrides)
    try:
        config = _build_config(settings, args.command)
    except ValueError as exc:
        parser.error(str(exc))

    if args.command == "verify":
        result = run_verification(config)
        lines = result.summary_lines()
        if not result.passed:
            lines += [""] + result.failure_trace_lines()
        for line in lines:
            print(line)
        if settings["out"]:
            try:
                with open(settings["out"], "w") as fh:
                    fh.write("\n".join(lines) + "\n")
            except OSError as exc:
                print("fissile-bench: %s" % exc, file=sys.stderr)
                return 3
        return 0 if result.passed else 1

    if args.command == "atomic":
        if config.mode == "model":
            parser.error("the atomic workload has no model mode")
        report = bench.run_atomic_workload(config)
    else:
        report = bench.run_mutexbench(config)
    _print_report(report, show_fifo=config.fifo_threads > 0,
                  show_violations=args.command == "atomic")
    if settings["out"]:
        try:
            bench.write_report_csv(report, settings["out"])
        except OSError as exc:
            print("fissile-bench: %s" % exc, file=sys.stderr)
            return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
