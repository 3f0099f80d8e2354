# The scheduler model: the lock protocols reimplemented as explicit
# state machines driven by a seeded random scheduler. No threads, no
# wall clock, so a run is exactly reproducible and every safety check
# (mutual exclusion, single grant per element, fifo elements never
# culled, the tail never culled) is asserted on every step.
#
# Part one replays the same fissile-fifo world twice and shows the
# counter snapshots agree. Part two explores the full state space of a
# two-thread fifo world and prints what impatience can reach: each fifo
# acquire bumps the impatience word by 2 before enqueueing, so with two
# such threads it peaks at 4 while both episodes overlap, and a release
# observes at most one live waiter, so it hands off 0 or 2.

from fissile.model import explore, make_world, run_random


def snapshot(world):
    return {
        "acquisitions": world.total_done,
        "enqueued": world.enq_count,
        "granted": world.grant_count,
        "culled": world.cull_count,
        "flushed": world.flush_count,
        "reprovisioned": world.reprovision_count,
        "impatient_max": world.impatient_max,
    }


def replay(seed):
    world = make_world("fissile-fifo", threads=4, fifo_threads=2,
                       total_target=2000, grace=2, node_count=2, ncs_max=3,
                       seed=seed)
    run_random(world, seed=seed)
    return snapshot(world)


def main():
    first, second = replay(7), replay(7)
    print("replay with seed 7, twice:")
    for key in first:
        mark = "==" if first[key] == second[key] else "!!"
        print("  %-14s %6d %s %d" % (key, first[key], mark, second[key]))
    assert first == second

    world = make_world("fissile-fifo", threads=2, fifo_threads=2,
                       total_target=2, quota=1, grace=1)
    found = explore(world)
    print()
    print("exhaustive 2-thread fifo world: %d states, %d terminal"
          % (found["states"], found["terminals"]))
    print("  impatience high-water mark: %d" % found["impatient_max"])
    print("  release values seen: %s" % sorted(found["release_values"]))


if __name__ == "__main__":
    main()
