"""Contention benchmark harness and report plumbing.

The central workload is a classic spin-lock stress loop. Every thread
repeats: read the lock clock, acquire, run a short critical section
(advance a shared PRNG, record the wait sample and the migration tally),
release, then idle through a non-critical section of thread-locally
drawn random length. The run lasts a fixed wall-clock duration, and a
configuration is measured ``runs`` times (odd, so the median is a real
run); the report carries one row per run plus the per-column median row.

Wait times are recorded in lock-clock units (acquisitions serviced while
waiting), so the fairness columns are insensitive to how long the
bookkeeping inside the critical section takes.

A second workload reads a five-int record under a lock picked by hashing
the record's identity into an array of locks; readers verify the record
is internally consistent and writers republish it periodically, so lost
updates or torn reads show up as counted violations.

``mode="model"`` runs the same loop shape on the explicit-state model
under a seeded scheduler instead of OS threads. Those runs are exactly
reproducible: re-running the same config and seed yields identical
metrics except for wall-clock throughput.
"""

from __future__ import annotations

import functools
import random
import statistics
import threading
import time
from dataclasses import dataclass, field, replace

from . import model as _model
from .cna import CnaLock, DEFAULT_FLUSH_DENOMINATOR
from .core import ThreadContext, TtsLock
from .fissile import DEFAULT_GRACE_PERIOD, FissileLock
from .mcs import McsLock
from .metrics import (LockClock, MigrationTally, WaitSample,
                      migration_reciprocal, rstddev, spread, theil_t)
from .topology import TopologyMap

__all__ = [
    "LOCK_KINDS",
    "BenchConfig",
    "RunMetrics",
    "BenchReport",
    "make_lock",
    "run_mutexbench",
    "run_atomic_workload",
    "run_verification",
    "aggregate_runs",
    "write_report_csv",
    "measure_uncontended_latency",
    "CSV_COLUMNS",
]

LOCK_KINDS = ("tts", "mcs", "cna", "fissile", "fissile-fifo")

DEFAULT_LOCK_ARRAY_SIZE = 16
WRITE_EVERY = 64  # atomic workload: publish a fresh record every N reads


@dataclass
class BenchConfig:
    lock_kind: str = "fissile"
    threads: int = 4
    duration_seconds: float = 10.0
    cs_prng_steps: int = 2
    ncs_max_steps: int = 0
    fifo_threads: int = 0
    fifo_ncs_max_steps: int = 2000
    grace_period: int = DEFAULT_GRACE_PERIOD
    flush_denominator: int = DEFAULT_FLUSH_DENOMINATOR
    synthetic_topology: bool = False
    node_count: int | None = None
    seed: int = 0
    runs: int = 7
    mode: str = "threads"  # "threads" or "model"
    model_target: int = 20_000  # global acquisitions per model-mode run

    def validate(self):
        if self.lock_kind not in LOCK_KINDS:
            raise ValueError("unknown lock kind %r" % (self.lock_kind,))
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not 0 <= self.fifo_threads <= self.threads:
            raise ValueError("fifo_threads must lie in [0, threads]")
        if self.runs < 1 or self.runs % 2 == 0:
            raise ValueError("runs must be odd so the median is a real run")
        if self.duration_seconds <= 0:
            raise ValueError("duration_seconds must be positive")
        if self.grace_period < 0:
            raise ValueError("grace_period must be >= 0")
        if self.flush_denominator < 1:
            raise ValueError("flush_denominator must be >= 1")
        if self.mode not in ("threads", "model"):
            raise ValueError("mode must be 'threads' or 'model'")
        return self

    def topology(self):
        return TopologyMap.from_config(self.synthetic_topology,
                                       self.node_count)


@dataclass
class RunMetrics:
    run_index: int
    acquisitions: int
    elapsed_seconds: float
    throughput: float
    spread: float
    migration_reciprocal: float
    rstddev: float
    theil_t: float
    fifo_acquisitions: int
    fifo_throughput: float
    normal_throughput: float
    fifo_wait_worst: float
    fifo_wait_avg: float
    fifo_wait_median: float
    fifo_wait_rstddev: float
    consistency_violations: int = 0


@dataclass
class BenchReport:
    workload: str
    config: BenchConfig
    runs: list[RunMetrics]
    median: RunMetrics
    warnings: list[str] = field(default_factory=list)


def make_lock(config, trace=None, poison=False, inner_events=None):
    """Build the lock named by ``config.lock_kind``."""
    kind = config.lock_kind
    if kind == "tts":
        return TtsLock()
    if kind == "mcs":
        return McsLock()
    if kind == "cna":
        return CnaLock(1, config.flush_denominator, events=inner_events,
                       poison=poison)
    return FissileLock(config.grace_period, 1, config.flush_denominator,
                       trace=trace, poison=poison, inner_events=inner_events)


def _run_seed(config, run_index):
    return config.seed * 1_000_003 + run_index * 8_191


class _SharedState:
    __slots__ = ("clock", "tally", "waits", "counts", "cs_rng", "stop",
                 "errors", "violations")

    def __init__(self, threads, seed):
        self.clock = LockClock()
        self.tally = MigrationTally()
        self.waits = []
        self.counts = [0] * threads
        self.cs_rng = random.Random(seed)
        self.stop = False
        self.errors = []
        self.violations = [0] * threads


def _make_contexts(config, topology, run_index):
    base = _run_seed(config, run_index)
    return [
        ThreadContext(i, topology, seed=base + i + 1,
                      fifo=i < config.fifo_threads)
        for i in range(config.threads)
    ]


def _mutex_worker(lock, ctx, config, state, barrier):
    use_fifo = ctx.fifo and config.lock_kind == "fissile-fifo"
    acquire = lock.acquire_fifo if use_fifo else lock.acquire
    release = lock.release
    clock = state.clock
    observe = clock.observe_then_advance
    tally = state.tally
    waits = state.waits
    cs_step = state.cs_rng.random
    cs_steps = config.cs_prng_steps
    ncs_max = config.fifo_ncs_max_steps if ctx.fifo else config.ncs_max_steps
    ncs_step = ctx.rng.random
    randrange = ctx.rng.randrange
    index = ctx.thread_index
    count = 0
    try:
        barrier.wait()
        while not state.stop:
            pre = clock.value
            acquire(ctx)
            waits.append(observe(pre, index, ctx.fifo))
            tally.record(ctx.node())
            for _ in range(cs_steps):
                cs_step()
            release(ctx)
            count += 1
            if ncs_max:
                for _ in range(randrange(ncs_max)):
                    ncs_step()
    except BaseException as exc:  # propagate to the driver
        state.errors.append(exc)
    finally:
        state.counts[index] = count


def _atomic_worker(locks, records, ctx, config, state, barrier, ncs_max):
    release_by = [lk.release for lk in locks]
    acquire_by = [lk.acquire for lk in locks]
    clock = state.clock
    observe = clock.observe_then_advance
    tally = state.tally
    waits = state.waits
    ncs_step = ctx.rng.random
    randrange = ctx.rng.randrange
    index = ctx.thread_index
    count = 0
    bad = 0
    n_records = len(records)
    try:
        barrier.wait()
        while not state.stop:
            ident = count % n_records
            slot = hash(ident) % len(locks)
            pre = clock.value
            acquire_by[slot](ctx)
            waits.append(observe(pre, index, ctx.fifo))
            tally.record(ctx.node())
            record = records[ident]
            base = record[0]
            if (record[1] != base + 1 or record[2] != base + 2
                    or record[3] != base + 3 or record[4] != base + 4):
                bad += 1
            if count % WRITE_EVERY == 0:
                # Mutate field by field: if exclusion ever broke, readers
                # would catch the record mid-write.
                fresh = base + 5
                record[0] = fresh
                record[1] = fresh + 1
                record[2] = fresh + 2
                record[3] = fresh + 3
                record[4] = fresh + 4
            release_by[slot](ctx)
            count += 1
            if ncs_max:
                for _ in range(randrange(ncs_max)):
                    ncs_step()
    except BaseException as exc:
        state.errors.append(exc)
    finally:
        state.counts[index] = count
        state.violations[index] = bad


def _drive(workers, state, duration):
    barrier = threading.Barrier(len(workers) + 1)
    threads = [threading.Thread(target=fn, args=(barrier,), daemon=True)
               for fn in workers]
    for t in threads:
        t.start()
    try:
        barrier.wait(timeout=120)
    except threading.BrokenBarrierError:
        state.stop = True
        for t in threads:
            t.join()
        if state.errors:
            raise state.errors[0]
        raise
    start = time.perf_counter()
    time.sleep(duration)
    state.stop = True
    for t in threads:
        t.join()
    elapsed = time.perf_counter() - start
    if state.errors:
        raise state.errors[0]
    return elapsed


def _finish_run(config, run_index, counts, samples, tally, elapsed,
                violations=0):
    total = sum(counts)
    fifo_indices = set(range(config.fifo_threads))
    fifo_total = sum(counts[i] for i in fifo_indices)
    fifo_waits = [s.wait for s in samples if s.fifo]
    if fifo_waits:
        fifo_worst = float(max(fifo_waits))
        fifo_avg = sum(fifo_waits) / len(fifo_waits)
        fifo_median = float(statistics.median(fifo_waits))
        fifo_rsd = rstddev(fifo_waits)
    else:
        fifo_worst = fifo_avg = fifo_median = fifo_rsd = 0.0
    return RunMetrics(
        run_index=run_index,
        acquisitions=total,
        elapsed_seconds=elapsed,
        throughput=total / elapsed,
        spread=spread(counts),
        migration_reciprocal=migration_reciprocal(tally.acquisitions,
                                                  tally.migrations),
        rstddev=rstddev(counts),
        theil_t=theil_t(counts),
        fifo_acquisitions=fifo_total,
        fifo_throughput=fifo_total / elapsed,
        normal_throughput=(total - fifo_total) / elapsed,
        fifo_wait_worst=fifo_worst,
        fifo_wait_avg=fifo_avg,
        fifo_wait_median=fifo_median,
        fifo_wait_rstddev=fifo_rsd,
        consistency_violations=violations,
    )


def _run_mutexbench_once(config, topology, run_index):
    state = _SharedState(config.threads, _run_seed(config, run_index))
    lock = make_lock(config)
    contexts = _make_contexts(config, topology, run_index)
    workers = [functools.partial(_mutex_worker, lock, ctx, config, state)
               for ctx in contexts]
    elapsed = _drive(workers, state, config.duration_seconds)
    return _finish_run(config, run_index, state.counts, state.waits,
                       state.tally, elapsed)


def _run_model_once(config, run_index):
    seed = _run_seed(config, run_index)
    world = _model.make_world(
        config.lock_kind, config.threads,
        cs_steps=config.cs_prng_steps, grace=config.grace_period,
        flush_numerator=1, flush_denominator=config.flush_denominator,
        total_target=config.model_target,
        fifo_threads=config.fifo_threads,
        ncs_max=config.ncs_max_steps,
        fifo_ncs_max=config.fifo_ncs_max_steps,
        node_count=config.node_count or 1,
        seed=seed)
    start = time.perf_counter()
    _model.run_random(world, seed=seed)
    elapsed = time.perf_counter() - start
    samples = [WaitSample(w, tid, fifo) for (w, tid, fifo) in world.waits]
    counts = [t.done for t in world.threads]
    tally = MigrationTally()
    tally.acquisitions = world.total_done
    tally.migrations = world.migrations
    return _finish_run(config, run_index, counts, samples, tally, elapsed)


def run_mutexbench(config):
    """Measure the central-lock workload; returns a BenchReport."""
    config.validate()
    topology = config.topology()
    rows = []
    for r in range(config.runs):
        if config.mode == "model":
            rows.append(_run_model_once(config, r))
        else:
            rows.append(_run_mutexbench_once(config, topology, r))
    return BenchReport("mutexbench", config, rows, aggregate_runs(rows),
                       warnings=list(topology.warnings))


def run_atomic_workload(config, lock_array_size=DEFAULT_LOCK_ARRAY_SIZE,
                        record_count=1):
    """Measure the hashed-guard record-read workload."""
    config.validate()
    if config.mode == "model":
        raise ValueError("the model mode drives the central-lock workload "
                         "only")
    topology = config.topology()
    ncs_max = config.ncs_max_steps
    rows = []
    for r in range(config.runs):
        state = _SharedState(config.threads, _run_seed(config, r))
        locks = [make_lock(config) for _ in range(lock_array_size)]
        records = [[i, i + 1, i + 2, i + 3, i + 4]
                   for i in range(record_count)]
        contexts = _make_contexts(config, topology, r)
        workers = [functools.partial(_atomic_worker, locks, records, ctx,
                                     config, state, ncs_max=ncs_max)
                   for ctx in contexts]
        elapsed = _drive(workers, state, config.duration_seconds)
        rows.append(_finish_run(config, r, state.counts, state.waits,
                                state.tally, elapsed,
                                violations=sum(state.violations)))
    return BenchReport("atomic", config, rows, aggregate_runs(rows),
                       warnings=list(topology.warnings))


def aggregate_runs(rows):
    """Per-column median across runs; run_index is -1 in the result."""
    if not rows:
        raise ValueError("no runs to aggregate")

    def med(name):
        return statistics.median(getattr(r, name) for r in rows)

    return RunMetrics(
        run_index=-1,
        acquisitions=med("acquisitions"),
        elapsed_seconds=med("elapsed_seconds"),
        throughput=med("throughput"),
        spread=med("spread"),
        migration_reciprocal=med("migration_reciprocal"),
        rstddev=med("rstddev"),
        theil_t=med("theil_t"),
        fifo_acquisitions=med("fifo_acquisitions"),
        fifo_throughput=med("fifo_throughput"),
        normal_throughput=med("normal_throughput"),
        fifo_wait_worst=med("fifo_wait_worst"),
        fifo_wait_avg=med("fifo_wait_avg"),
        fifo_wait_median=med("fifo_wait_median"),
        fifo_wait_rstddev=med("fifo_wait_rstddev"),
        consistency_violations=int(med("consistency_violations")),
    )


# Columns whose values depend on wall-clock time; everything else in a
# model-mode report is reproducible bit for bit.
WALL_CLOCK_COLUMNS = ("elapsed", "throughput", "fifo_throughput",
                      "normal_throughput")

CSV_COLUMNS = (
    "run", "workload", "lock", "threads", "duration", "elapsed",
    "acquisitions", "throughput", "spread", "migration_reciprocal",
    "rstddev", "theil_t", "fifo_acquisitions", "fifo_throughput",
    "normal_throughput", "fifo_wait_worst", "fifo_wait_avg",
    "fifo_wait_median", "fifo_wait_rstddev", "consistency_violations",
)


def _fmt(value, column):
    if value != value:  # NaN guard; should not happen
        return "nan"
    if value == float("inf"):
        if column == "spread":
            return "unbounded"
        if column == "migration_reciprocal":
            return "no-migration"
        return "inf"
    if isinstance(value, float):
        return "%.6g" % value
    return str(value)


def report_rows(report):
    """Report as a list of CSV cell-string rows, one per run plus median."""
    config = report.config
    out = []
    for metrics in list(report.runs) + [report.median]:
        label = "median" if metrics.run_index < 0 else str(metrics.run_index)
        row = {
            "run": label,
            "workload": report.workload,
            "lock": config.lock_kind,
            "threads": str(config.threads),
            "duration": _fmt(config.duration_seconds, "duration"),
            "elapsed": _fmt(metrics.elapsed_seconds, "elapsed"),
            "acquisitions": _fmt(metrics.acquisitions, "acquisitions"),
            "throughput": _fmt(metrics.throughput, "throughput"),
            "spread": _fmt(metrics.spread, "spread"),
            "migration_reciprocal": _fmt(metrics.migration_reciprocal,
                                         "migration_reciprocal"),
            "rstddev": _fmt(metrics.rstddev, "rstddev"),
            "theil_t": _fmt(metrics.theil_t, "theil_t"),
            "fifo_acquisitions": _fmt(metrics.fifo_acquisitions,
                                      "fifo_acquisitions"),
            "fifo_throughput": _fmt(metrics.fifo_throughput,
                                    "fifo_throughput"),
            "normal_throughput": _fmt(metrics.normal_throughput,
                                      "normal_throughput"),
            "fifo_wait_worst": _fmt(metrics.fifo_wait_worst,
                                    "fifo_wait_worst"),
            "fifo_wait_avg": _fmt(metrics.fifo_wait_avg, "fifo_wait_avg"),
            "fifo_wait_median": _fmt(metrics.fifo_wait_median,
                                     "fifo_wait_median"),
            "fifo_wait_rstddev": _fmt(metrics.fifo_wait_rstddev,
                                      "fifo_wait_rstddev"),
            "consistency_violations": str(metrics.consistency_violations),
        }
        out.append([row[c] for c in CSV_COLUMNS])
    return out


def write_report_csv(report, path):
    """One CSV row per run plus one median row."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(report_rows(report))


def measure_uncontended_latency(config, cycles=1_000_000, chunk=2_000):
    """Single-thread acquire+release latency, in seconds per cycle.

    Individual cycles are too short for the timer, so cycles run in
    chunks and the median of the per-chunk means is returned along with
    the chunk means themselves.
    """
    config.validate()
    lock = make_lock(config)
    ctx = ThreadContext(0, config.topology(), seed=config.seed)
    acquire = (lock.acquire_fifo
               if config.lock_kind == "fissile-fifo" else lock.acquire)
    release = lock.release
    timer = time.perf_counter
    means = []
    remaining = cycles
    while remaining > 0:
        n = min(chunk, remaining)
        t0 = timer()
        for _ in range(n):
            acquire(ctx)
            release(ctx)
        means.append((timer() - t0) / n)
        remaining -= n
    return {"median_per_cycle": statistics.median(means), "chunks": means}


def run_verification(config, **kwargs):
    """Protocol verification suite; see fissile.verify for the checks."""
    from .verify import run_verification as _run

    return _run(config, **kwargs)


def config_with(config, **kwargs):
    """Convenience: a validated copy of ``config`` with fields replaced."""
    return replace(config, **kwargs).validate()
