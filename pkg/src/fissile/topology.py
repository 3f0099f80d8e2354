"""Mapping from running threads to NUMA node ids.

Two modes. ``synthetic`` assigns node ids round-robin by thread index
(``thread_index % node_count``), fixed for the thread's lifetime; it needs
no OS support and is how single-socket machines fake a multi-node box for
the NUMA-aware locks. ``os-query`` asks the OS which node the calling
thread is on right now, sampled once per acquisition episode.

The environment variable ``FISSILE_SYNTHETIC_TOPOLOGY`` forces synthetic
mode; if its value parses as a positive integer it also sets the node
count.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import glob
import os
import re

__all__ = ["TopologyMap", "FORCE_SYNTHETIC_ENV"]

FORCE_SYNTHETIC_ENV = "FISSILE_SYNTHETIC_TOPOLOGY"

_NODE_GLOB = "/sys/devices/system/node/node*"


def _parse_cpulist(text):
    """Parse a sysfs cpulist like ``0-3,8,10-11`` into a set of cpu ids."""
    cpus = set()
    for part in text.strip().split(","):
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-")
            cpus.update(range(int(lo), int(hi) + 1))
        else:
            cpus.add(int(part))
    return cpus


def _read_cpu_to_node():
    mapping = {}
    for path in glob.glob(_NODE_GLOB):
        m = re.search(r"node(\d+)$", path)
        if not m:
            continue
        node = int(m.group(1))
        try:
            with open(os.path.join(path, "cpulist")) as fh:
                cpus = _parse_cpulist(fh.read())
        except OSError:
            continue
        for cpu in cpus:
            mapping[cpu] = node
    return mapping


def _load_sched_getcpu():
    try:
        name = ctypes.util.find_library("c") or "libc.so.6"
        libc = ctypes.CDLL(name, use_errno=True)
        fn = libc.sched_getcpu
        fn.restype = ctypes.c_int
    except (OSError, AttributeError):
        return None
    if fn() < 0:  # probe once; some libcs stub it out
        return None
    return fn


class TopologyMap:
    """Resolves a ThreadContext to a NUMA node id."""

    __slots__ = ("mode", "node_count", "warnings", "_getcpu", "_cpu_to_node")

    def __init__(self, mode, node_count, getcpu=None, cpu_to_node=None, warnings=()):
        self.mode = mode
        self.node_count = node_count
        self.warnings = list(warnings)
        self._getcpu = getcpu
        self._cpu_to_node = cpu_to_node or {}

    @classmethod
    def synthetic(cls, node_count=1):
        if node_count < 1:
            raise ValueError("node_count must be >= 1")
        return cls("synthetic", node_count)

    @classmethod
    def os_query(cls):
        """Build an os-query map, degrading to synthetic(1) with a warning."""
        getcpu = _load_sched_getcpu()
        cpu_to_node = _read_cpu_to_node()
        if getcpu is None or not cpu_to_node:
            why = "no sched_getcpu" if getcpu is None else "no sysfs node listing"
            warn = "NUMA query unavailable (%s); using a single synthetic node" % why
            return cls("synthetic", 1, warnings=[warn])
        nodes = sorted(set(cpu_to_node.values()))
        return cls("os-query", len(nodes), getcpu, cpu_to_node)

    @classmethod
    def from_config(cls, synthetic=False, node_count=None, env=os.environ):
        """Apply the env-var override, then the explicit flags.

        ``synthetic=True`` or a set FISSILE_SYNTHETIC_TOPOLOGY forces
        synthetic mode; ``node_count`` (or the env var's integer value)
        sets the synthetic node count, defaulting to 1.
        """
        forced = env.get(FORCE_SYNTHETIC_ENV, "")
        if forced:
            count = node_count or 1
            if forced.isdigit() and int(forced) > 0:
                count = int(forced)
            return cls.synthetic(count)
        if synthetic or node_count is not None:
            return cls.synthetic(node_count or 1)
        return cls.os_query()

    def resolve(self, ctx):
        """Node id for ``ctx``'s current acquisition episode."""
        if self.mode == "synthetic":
            return ctx.thread_index % self.node_count
        cpu = self._getcpu()
        return self._cpu_to_node.get(cpu, 0)

    def __repr__(self):
        return "TopologyMap(mode=%r, node_count=%d)" % (self.mode, self.node_count)
