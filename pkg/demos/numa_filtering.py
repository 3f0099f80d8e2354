# How often does the lock migrate between NUMA nodes?
#
# A migration is two consecutive acquisitions on different nodes; each
# one drags the lock word and the protected data across the interconnect.
# The table reports the reciprocal rate, acquisitions per migration, so
# bigger is better. MCS serves waiters in arrival order and migrates
# almost every handoff. CNA parks remote waiters on a secondary chain and
# keeps the lock on one node for long runs. The fissile lock inherits
# that filtering from its inner CNA and adds barging on top.
#
# Threads are pinned round-robin onto a synthetic two-node topology, so
# the numbers are about the protocols, not about the host machine.

from fissile import BenchConfig, run_mutexbench

KINDS = ("mcs", "cna", "fissile")


def main():
    print("%-9s %13s %12s %11s" % ("lock", "acquisitions", "migrations",
                                   "acq/migr"))
    for kind in KINDS:
        config = BenchConfig(lock_kind=kind, threads=8, ncs_max_steps=50,
                             duration_seconds=0.5, runs=3, seed=1,
                             synthetic_topology=True, node_count=2)
        median = run_mutexbench(config).median
        reciprocal = median.migration_reciprocal
        migrations = (0 if reciprocal == float("inf")
                      else round(median.acquisitions / reciprocal))
        print("%-9s %13d %12d %11.1f"
              % (kind, median.acquisitions, migrations, reciprocal))


if __name__ == "__main__":
    main()
