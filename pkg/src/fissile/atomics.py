"""Word-sized atomic cells and the processor spin hint.

CPython does not expose hardware atomics, so each cell serializes its
mutating operations (store, swap, compare_exchange, fetch_add) through a
private ``threading.Lock``. That mutex is an implementation detail of the
cell, the moral equivalent of a one-word LOCK-prefixed instruction; it is
never the thing that provides mutual exclusion for callers. Plain loads
read the attribute directly: under the GIL an attribute read observes some
value that was actually stored, which is all a relaxed load promises.

Every operation is sequentially consistent with respect to its own cell
(the mutex acts as a full fence), so no additional barrier calls appear in
the lock algorithms built on top.
"""

from __future__ import annotations

import os
import threading
import time

__all__ = ["AtomicInt", "AtomicRef", "spin_hint"]


if hasattr(os, "sched_yield"):
    _yield = os.sched_yield
else:  # pragma: no cover - non-POSIX fallback
    _yield = lambda: time.sleep(0)


def spin_hint():
    """One iteration of polite busy-waiting.

    On hardware this would be a PAUSE-style instruction. In CPython a
    no-op loop would hold the GIL for a full switch interval and starve
    the very thread being waited on, so the faithful analog is to yield
    the processor (which also releases the GIL).
    """
    _yield()


class AtomicInt:
    """Mutable integer cell with atomic read-modify-write operations."""

    __slots__ = ("_mutex", "_value")

    def __init__(self, value=0):
        self._mutex = threading.Lock()
        self._value = value

    def load(self):
        return self._value

    def store(self, value):
        with self._mutex:
            self._value = value

    def swap(self, value):
        """Store ``value`` and return the previous value."""
        with self._mutex:
            old = self._value
            self._value = value
            return old

    def compare_exchange(self, expected, value):
        """Store ``value`` iff the cell holds ``expected``. True on success."""
        with self._mutex:
            if self._value != expected:
                return False
            self._value = value
            return True

    def fetch_add(self, delta):
        """Add ``delta`` and return the previous value."""
        with self._mutex:
            old = self._value
            self._value = old + delta
            return old

    def __repr__(self):
        return "%s(%r)" % (type(self).__name__, self._value)


class AtomicRef:
    """Mutable reference cell; compare_exchange compares by identity."""

    __slots__ = ("_mutex", "_value")

    def __init__(self, value=None):
        self._mutex = threading.Lock()
        self._value = value

    def load(self):
        return self._value

    def store(self, value):
        with self._mutex:
            self._value = value

    def swap(self, value):
        with self._mutex:
            old = self._value
            self._value = value
            return old

    def swap_stamped(self, value, counter):
        """Swap and draw the next stamp from ``counter`` in one atomic step.

        Drawing inside the cell's mutex makes the stamp order identical to
        the swap order, which lets instrumentation reconstruct the exact
        arrival order of queue elements.
        """
        with self._mutex:
            old = self._value
            self._value = value
            return old, next(counter)

    def compare_exchange(self, expected, value):
        with self._mutex:
            if self._value is not expected:
                return False
            self._value = value
            return True

    def __repr__(self):
        return "%s(%r)" % (type(self).__name__, self._value)
