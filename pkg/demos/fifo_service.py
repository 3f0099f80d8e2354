# Strict arrival-order service for threads that ask for it.
#
# Two of eight threads acquire through acquire_fifo and pause between
# acquisitions; the other six hammer the lock through the normal path.
# A fifo acquisition can never be overtaken inside the queue, so its
# wait, measured in lock-clock ticks (acquisitions by other threads
# while this one waited), stays bounded near the thread count. The same
# shape on a plain MCS lock is the reference: MCS is strict FIFO for
# everyone, so matching its worst fifo wait means the compound lock's
# barging fast path is not taxing the polite threads.

from fissile import BenchConfig, run_mutexbench


def probe(kind):
    config = BenchConfig(lock_kind=kind, threads=8, fifo_threads=2,
                         fifo_ncs_max_steps=2000, duration_seconds=0.5,
                         runs=3, seed=1, synthetic_topology=True,
                         node_count=2)
    return run_mutexbench(config).median


def main():
    print("%-14s %12s %11s %11s %11s" % ("lock", "fifo acq", "wait worst",
                                         "wait median", "wait avg"))
    for kind in ("fissile-fifo", "mcs"):
        m = probe(kind)
        print("%-14s %12d %11.0f %11.1f %11.2f"
              % (kind, m.fifo_acquisitions, m.fifo_wait_worst,
                 m.fifo_wait_median, m.fifo_wait_avg))


if __name__ == "__main__":
    main()
