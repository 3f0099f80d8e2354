# Tour of the lock family: every kind guards the same shared counter
# under moderate contention, so the output is one row per lock with its
# throughput. The counter check at the end is the point of the exercise;
# throughput here is incidental (CPython threads serialize on the GIL,
# so differences are mostly about how politely a lock spins).
#
# Usage: python demos/locks_tour.py [THREADS] [PER_THREAD]

import sys
import threading
import time

from fissile import CnaLock, FissileLock, McsLock, ThreadContext, TtsLock

THREADS = 4
PER_THREAD = 20_000


def hammer(lock, fifo=False):
    box = [0]
    barrier = threading.Barrier(THREADS + 1)

    def work(tid):
        ctx = ThreadContext(tid, fifo=fifo)
        acquire = lock.acquire_fifo if fifo else lock.acquire
        barrier.wait()
        for _ in range(PER_THREAD):
            acquire(ctx)
            box[0] += 1
            lock.release(ctx)

    pool = [threading.Thread(target=work, args=(t,)) for t in range(THREADS)]
    for t in pool:
        t.start()
    barrier.wait()
    start = time.perf_counter()
    for t in pool:
        t.join()
    return box[0], time.perf_counter() - start


def main():
    expected = THREADS * PER_THREAD
    rows = [
        ("tts", TtsLock(), False),
        ("mcs", McsLock(), False),
        ("cna", CnaLock(), False),
        ("fissile", FissileLock(), False),
        ("fissile-fifo", FissileLock(), True),
    ]
    print("%-14s %10s %9s %12s" % ("lock", "count", "seconds", "acq/sec"))
    for name, lock, fifo in rows:
        count, elapsed = hammer(lock, fifo=fifo)
        verdict = "" if count == expected else "  COUNT MISMATCH"
        print("%-14s %10d %9.2f %12.0f%s"
              % (name, count, elapsed, count / elapsed, verdict))


if __name__ == "__main__":
    if len(sys.argv) > 1:
        THREADS = int(sys.argv[1])
    if len(sys.argv) > 2:
        PER_THREAD = int(sys.argv[2])
    main()
