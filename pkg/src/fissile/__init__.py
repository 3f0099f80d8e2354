"""Fissile compound lock, its baselines, and the tooling around them.

The lock family:

* TsLock / TtsLock: test-and-set spin locks, impolite and polite, the
  polite one with truncated randomized exponential backoff.
* McsLock: queue lock with per-waiter local spinning.
* CnaLock: the MCS variant that keeps waiters from the owner's NUMA node
  at the front of the queue, parking remote waiters on a secondary chain.
* FissileLock: a test-and-set fast path fused with a CNA slow path; the
  inner lock elects a single head waiter, a grace period of impolite swap
  attempts precedes impatience, and an impatient head waiter is handed
  the lock directly by the next release. ``acquire_fifo`` requests
  strict arrival-order service for one acquisition.

Around the locks: NUMA topology mapping (``topology``), lock-clock
fairness metrics (``metrics``), a benchmark harness plus a hashed-lock
atomic workload (``bench``), a runtime verification suite (``verify``),
an explicit-state scheduler model of the protocols (``model``), and a
command line front end (``cli``).
"""

from .atomics import AtomicInt, AtomicRef, spin_hint
from .bench import (
    BenchConfig,
    BenchReport,
    RunMetrics,
    config_with,
    make_lock,
    measure_uncontended_latency,
    run_atomic_workload,
    run_mutexbench,
    write_report_csv,
)
from .cna import CnaLock
from .core import (
    BackoffState,
    LockContract,
    ThreadContext,
    TriStateWord,
    TsLock,
    TtsLock,
)
from .fissile import FissileLock
from .mcs import McsLock, QueueElement
from .metrics import (
    LockClock,
    MigrationTally,
    WaitSample,
    migration_reciprocal,
    rstddev,
    spread,
    theil_t,
)
from .topology import TopologyMap
from .verify import VerificationResult, run_verification

__version__ = "0.1.0"

__all__ = [
    "AtomicInt",
    "AtomicRef",
    "BackoffState",
    "BenchConfig",
    "BenchReport",
    "CnaLock",
    "FissileLock",
    "LockClock",
    "LockContract",
    "McsLock",
    "MigrationTally",
    "QueueElement",
    "RunMetrics",
    "ThreadContext",
    "TopologyMap",
    "TriStateWord",
    "TsLock",
    "TtsLock",
    "VerificationResult",
    "WaitSample",
    "config_with",
    "make_lock",
    "measure_uncontended_latency",
    "migration_reciprocal",
    "rstddev",
    "run_atomic_workload",
    "run_mutexbench",
    "run_verification",
    "spin_hint",
    "spread",
    "theil_t",
    "write_report_csv",
    "__version__",
]
