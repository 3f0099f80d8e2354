"""Lock clock and the long-term fairness statistics.

Wait times are measured in lock-clock units rather than nanoseconds: the
clock is a counter advanced once per acquisition, inside the critical
section. A thread reads the clock before it starts acquiring and again
once inside; the difference is the number of full acquisitions that got
serviced while it waited. That unit is immune to frequency scaling and to
how long individual critical sections run.

The distribution statistics all take per-thread totals or wait samples
from one run:

* ``spread``: max/min of per-thread acquisition counts; infinity when a
  thread got nothing (reported as "unbounded").
* ``migration_reciprocal``: acquisitions per lock migration between NUMA
  nodes, so bigger means fewer migrations; infinity when the lock never
  migrated ("no-migration").
* ``rstddev``: sample (n-1) standard deviation over the mean.
* ``theil_t``: Theil's T entropy index normalized by log(n) to [0, 1];
  0 is perfect equality, 1 is one thread holding everything. Zero samples
  contribute zero (the 0*log(0) limit).
"""

from __future__ import annotations

import csv
import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "LockClock",
    "WaitSample",
    "MigrationTally",
    "spread",
    "migration_reciprocal",
    "rstddev",
    "theil_t",
    "dump_waits_csv",
]


class WaitSample(NamedTuple):
    wait: int
    thread_index: int
    fifo: bool


class LockClock:
    """Counter of completed acquisitions, advanced inside the CS."""

    __slots__ = ("value",)

    def __init__(self):
        self.value = 0

    def read(self):
        """Pre-acquisition read; safe (and meant to be) outside the lock."""
        return self.value

    def observe_then_advance(self, pre_value, thread_index=0, fifo=False):
        """Record this acquisition. Call while holding the lock.

        Reads the clock, forms the wait sample against ``pre_value``, then
        advances the clock by one.
        """
        entry = self.value
        self.value = entry + 1
        return WaitSample(entry - pre_value, thread_index, fifo)


class MigrationTally:
    """Counts lock migrations: consecutive acquisitions on distinct nodes."""

    __slots__ = ("acquisitions", "migrations", "last_node")

    def __init__(self):
        self.acquisitions = 0
        self.migrations = 0
        self.last_node = None

    def record(self, node):
        """Record one acquisition on ``node``. Call while holding the lock."""
        self.acquisitions += 1
        last = self.last_node
        if last is not None and last != node:
            self.migrations += 1
        self.last_node = node


def spread(counts):
    """max/min of per-thread counts; inf if any thread scored zero."""
    counts = list(counts)
    if not counts:
        return 0.0
    lo = min(counts)
    hi = max(counts)
    if lo <= 0:
        return math.inf
    return hi / lo


def migration_reciprocal(acquisitions, migrations):
    """Acquisitions per migration; inf when there were no migrations."""
    if migrations == 0:
        return math.inf
    return acquisitions / migrations


def rstddev(samples):
    """Sample standard deviation over the mean; 0 for degenerate input."""
    x = np.asarray(list(samples), dtype=float)
    if x.size < 2:
        return 0.0
    mu = x.mean()
    if mu == 0:
        return 0.0
    return float(x.std(ddof=1) / mu)


def theil_t(samples):
    """Theil's T index normalized by log(n); see the module docstring."""
    x = np.asarray(list(samples), dtype=float)
    n = x.size
    if n < 2:
        return 0.0
    if np.any(x < 0):
        raise ValueError("theil_t is defined for nonnegative samples")
    mu = x.mean()
    if mu == 0:
        return 0.0
    ratio = x / mu
    positive = ratio[ratio > 0]
    total = float(np.sum(positive * np.log(positive)))
    return (total / n) / math.log(n)


def dump_waits_csv(samples, path):
    """Write wait samples as CSV rows of (threadIndex, fifoFlag, wait)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threadIndex", "fifoFlag", "wait"])
        for sample in samples:
            writer.writerow([sample.thread_index, int(sample.fifo), sample.wait])
