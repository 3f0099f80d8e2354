# Long-run fairness under maximal contention: ten threads fight over one
# lock with no pause between acquisitions, measured by the benchmark
# harness for a few short runs per lock.
#
# A TTS lock with backoff lets the thread that just released barge back
# in while everyone else sleeps out a backoff delay, so a few threads
# hoard the lock and the per-thread acquisition counts grow lopsided.
# The fissile lock barges on its fast path too, but its inner queue
# makes the head waiter impatient after a bounded grace period and the
# next release then hands the lock over directly, so counts stay close.
#
# Summary numbers, all over the per-thread counts of one run: spread is
# max/min (1.0 is perfectly even; watch it explode for tts), rstddev is
# the stddev/mean, theil is an entropy-based inequality index in [0, 1]
# where 0 is even and 1 is one thread taking everything.
#
# Individual tts runs are bimodal: some stay roughly even, most collapse
# into hoarding with spreads in the tens of thousands. That is why seven
# runs are taken per lock and the median run shown; the per-run spreads
# are printed too so the variance is visible.

from fissile import BenchConfig, run_mutexbench


def main():
    print("%-8s %14s %12s %10s %10s   %s"
          % ("lock", "acquisitions", "spread", "rstddev", "theil",
             "per-run spreads"))
    for kind in ("tts", "fissile"):
        config = BenchConfig(lock_kind=kind, threads=10, duration_seconds=0.5,
                             runs=7, seed=1, synthetic_topology=True,
                             node_count=1)
        report = run_mutexbench(config)
        median = report.median
        print("%-8s %14d %12.1f %10.3f %10.4f   %s"
              % (kind, median.acquisitions, median.spread, median.rstddev,
                 median.theil_t,
                 " ".join("%.0f" % r.spread for r in report.runs)))


if __name__ == "__main__":
    main()
