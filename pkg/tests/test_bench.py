"""Benchmark harness: config handling, metrics plumbing, reports, CSV."""

import csv
import dataclasses
import math

import pytest

from fissile.bench import (
    BenchConfig,
    CSV_COLUMNS,
    RunMetrics,
    WALL_CLOCK_COLUMNS,
    aggregate_runs,
    config_with,
    make_lock,
    measure_uncontended_latency,
    report_rows,
    run_atomic_workload,
    run_mutexbench,
    write_report_csv,
)
from fissile.cna import CnaLock
from fissile.core import ThreadContext, TtsLock
from fissile.fissile import FissileLock
from fissile.mcs import McsLock


def model_config(**overrides):
    base = dict(lock_kind="fissile", threads=4, mode="model",
                model_target=1500, runs=1, seed=3)
    base.update(overrides)
    return BenchConfig(**base).validate()


class TestConfig:
    def test_validate_returns_self(self):
        cfg = BenchConfig()
        assert cfg.validate() is cfg

    @pytest.mark.parametrize("overrides", [
        {"lock_kind": "spinny"},
        {"threads": 0},
        {"fifo_threads": 9, "threads": 4},
        {"runs": 4},
        {"runs": 0},
        {"duration_seconds": 0.0},
        {"grace_period": -1},
        {"flush_denominator": 0},
        {"mode": "simulated"},
    ])
    def test_validate_rejects(self, overrides):
        with pytest.raises(ValueError):
            BenchConfig(**overrides).validate()

    def test_config_with_copies(self):
        cfg = BenchConfig(threads=4).validate()
        other = config_with(cfg, threads=8, lock_kind="mcs")
        assert other.threads == 8 and other.lock_kind == "mcs"
        assert cfg.threads == 4 and cfg.lock_kind == "fissile"
        with pytest.raises(ValueError):
            config_with(cfg, runs=2)

    def test_make_lock_kinds(self):
        kinds = {"tts": TtsLock, "mcs": McsLock, "cna": CnaLock,
                 "fissile": FissileLock, "fissile-fifo": FissileLock}
        for kind, cls in kinds.items():
            lock = make_lock(BenchConfig(lock_kind=kind).validate())
            assert type(lock) is cls
        with pytest.raises(ValueError):
            BenchConfig(lock_kind="ts").validate()

    def test_make_lock_plumbs_trace(self):
        events = []
        lock = make_lock(model_config(), trace=lambda *a: events.append(a))
        ctx = ThreadContext(0)
        lock.acquire(ctx)
        lock.release(ctx)
        assert [e[1] for e in events] == ["fastpath-win", "release"]


class TestModelMode:
    def test_single_thread_runs_unopposed(self):
        rep = run_mutexbench(model_config(threads=1, model_target=300))
        m = rep.median
        assert m.acquisitions >= 300
        assert m.spread == 1.0
        assert m.rstddev == 0.0
        assert m.theil_t == 0.0
        assert m.fifo_acquisitions == 0

    def test_throughput_splits_add_up(self):
        rep = run_mutexbench(model_config(
            lock_kind="fissile-fifo", fifo_threads=1, fifo_ncs_max_steps=4,
            ncs_max_steps=2))
        m = rep.median
        assert m.fifo_acquisitions > 0
        assert m.fifo_throughput + m.normal_throughput == pytest.approx(
            m.throughput)

    def test_deterministic_apart_from_wall_clock(self):
        cfg = model_config(lock_kind="cna", node_count=2, model_target=2500,
                           runs=3)
        rows_a = report_rows(run_mutexbench(cfg))
        rows_b = report_rows(run_mutexbench(cfg))
        wall = {CSV_COLUMNS.index(c) for c in WALL_CLOCK_COLUMNS}
        assert len(rows_a) == len(rows_b)
        for row_a, row_b in zip(rows_a, rows_b):
            for i, (a, b) in enumerate(zip(row_a, row_b)):
                if i not in wall:
                    assert a == b


class TestThreadsMode:
    def test_mcs_lockstep_wait_oracle(self):
        # With no non-critical section every thread re-enqueues straight
        # away, so each FIFO grant waits behind exactly threads-1 others.
        cfg = BenchConfig(lock_kind="mcs", threads=4, fifo_threads=4,
                          cs_prng_steps=1, ncs_max_steps=0,
                          fifo_ncs_max_steps=0, duration_seconds=0.25,
                          runs=3, seed=3).validate()
        m = run_mutexbench(cfg).median
        assert m.fifo_wait_median == 3.0
        assert m.fifo_wait_worst == 3.0

    def test_short_contended_run(self):
        cfg = BenchConfig(lock_kind="fissile", threads=4,
                          duration_seconds=0.15, runs=1, seed=1).validate()
        rep = run_mutexbench(cfg)
        m = rep.median
        assert m.acquisitions > 0
        assert 0.05 < m.elapsed_seconds < 1.5
        assert m.throughput == pytest.approx(
            m.acquisitions / m.elapsed_seconds)

    def test_atomic_workload_is_consistent(self):
        cfg = BenchConfig(lock_kind="fissile", threads=4,
                          duration_seconds=0.15, ncs_max_steps=50,
                          runs=1, seed=2).validate()
        rep = run_atomic_workload(cfg)
        assert rep.workload == "atomic"
        assert rep.median.acquisitions > 0
        assert rep.median.consistency_violations == 0

    def test_atomic_workload_refuses_model_mode(self):
        with pytest.raises(ValueError):
            run_atomic_workload(model_config())


class TestAggregation:
    def test_median_is_per_column(self):
        rows = []
        for i, scale in enumerate((1.0, 2.0, 9.0)):
            rows.append(RunMetrics(
                run_index=i, acquisitions=int(100 * scale),
                elapsed_seconds=scale, throughput=10 * scale,
                spread=scale, migration_reciprocal=scale, rstddev=scale,
                theil_t=scale / 10, fifo_acquisitions=i,
                fifo_throughput=scale, normal_throughput=scale,
                fifo_wait_worst=scale, fifo_wait_avg=scale,
                fifo_wait_median=scale, fifo_wait_rstddev=scale,
                consistency_violations=0))
        med = aggregate_runs(rows)
        assert med.run_index == -1
        assert med.acquisitions == 200
        assert med.spread == 2.0
        assert med.theil_t == 0.2
        assert med.fifo_acquisitions == 1

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            aggregate_runs([])


class TestReports:
    def test_rows_shape(self):
        rep = run_mutexbench(model_config(runs=3))
        rows = report_rows(rep)
        assert len(rows) == 4
        assert [r[0] for r in rows] == ["0", "1", "2", "median"]
        assert all(len(r) == len(CSV_COLUMNS) for r in rows)

    def test_csv_round_trip(self, tmp_path):
        rep = run_mutexbench(model_config(runs=3))
        path = tmp_path / "out.csv"
        write_report_csv(rep, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == list(CSV_COLUMNS)
        assert len(rows) == 1 + 3 + 1
        assert rows[-1][0] == "median"
        lock_col = CSV_COLUMNS.index("lock")
        assert {r[lock_col] for r in rows[1:]} == {"fissile"}

    def test_unbounded_markers(self):
        row = dataclasses.replace(
            run_mutexbench(model_config()).median,
            spread=math.inf, migration_reciprocal=math.inf)
        rep = run_mutexbench(model_config())
        rep.runs = [dataclasses.replace(row, run_index=0)]
        rep.median = row
        cells = report_rows(rep)[-1]
        assert cells[CSV_COLUMNS.index("spread")] == "unbounded"
        assert cells[CSV_COLUMNS.index("migration_reciprocal")] == \
            "no-migration"


class TestLatencyProbe:
    def test_uncontended_probe(self):
        cfg = BenchConfig(lock_kind="fissile", runs=1).validate()
        out = measure_uncontended_latency(cfg, cycles=20_000, chunk=1_000)
        assert out["median_per_cycle"] > 0
        assert len(out["chunks"]) == 20
        assert min(out["chunks"]) > 0
