"""MCS queue lock.

Arriving threads append themselves to an implicit queue by swapping the
lock's tail pointer, then spin locally on their own element's ``granted``
flag. Release either detaches the queue (no successor) or grants the next
element. Each thread busy-waits on a flag nobody else spins on, which is
the property the NUMA-aware variants build on.

The acquire/release interface carries no element, so the lock records the
holder's element in a slot next to the tail; only the current holder
touches it.
"""

from __future__ import annotations

from .atomics import AtomicRef, spin_hint
from .core import LockContract

__all__ = ["QueueElement", "McsLock"]


class QueueElement:
    """One node of the waiter queue.

    ``next`` and ``granted`` are the protocol fields. ``numa_id`` and
    ``fifo`` are stamped at enqueue time and read by the NUMA-aware
    reorganization. ``sec_head``/``sec_tail`` ride along with the lock
    holder and carry the chain of passed-over remote waiters.
    ``enqueue_seq`` is the element's arrival stamp (exact swap order);
    ``retired`` flips once the element's episode is over and exists so
    verification can detect use of a dead element.
    """

    __slots__ = (
        "next",
        "granted",
        "numa_id",
        "fifo",
        "sec_head",
        "sec_tail",
        "enqueue_seq",
        "retired",
    )

    def __init__(self, numa_id=0, fifo=False):
        self.next = None
        self.granted = False
        self.numa_id = numa_id
        self.fifo = fifo
        self.sec_head = None
        self.sec_tail = None
        self.enqueue_seq = -1
        self.retired = False


class McsLock(LockContract):
    __slots__ = ("_tail", "_holder")

    def __init__(self):
        self._tail = AtomicRef(None)
        self._holder = None

    def acquire(self, ctx=None):
        elem = QueueElement()
        prev = self._tail.swap(elem)
        if prev is not None:
            prev.next = elem
            while not elem.granted:
                spin_hint()
        self._holder = elem

    def release(self, ctx=None):
        elem = self._holder
        self._holder = None
        if elem.next is None:
            self._race_window()
            if self._tail.compare_exchange(elem, None):
                elem.retired = True
                return
            # An arrival swapped the tail between the check and the
            # compare-exchange; its link write is imminent.
            while elem.next is None:
                spin_hint()
        elem.retired = True
        elem.next.granted = True

    def _race_window(self):
        """Hook between the successor check and the detach attempt.

        A no-op here; tests override it to hold the releaser in the race
        window while an arrival swaps the tail.
        """
