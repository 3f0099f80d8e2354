"""The Fissile compound lock: a TS fast path over a CNA slow path.

The outer lock is a single tri-state word that arriving threads try to win
with one compare-exchange. A thread that observes any nonzero value
diverts to the slow path: it enqueues on the inner CNA lock, and the inner
owner alone busy-waits on the outer word. That head waiter is the only
thread spinning on the word at any time, so the fast path stays a plain
uncontended TS lock while the queue absorbs the fan-in.

The head waiter first spends a grace period of impolite swap attempts. If
the word stays held, it registers impatience by adding 2 to the
``impatient`` counter. Release always loads that counter and stores the
loaded value into the outer word: 0 reopens the fast path, while an even
value >= 2 both blocks fast-path arrivals and hands the word directly to
the head waiter, which rewrites it to 1 and owns the lock. The handoff is
racy by design: a release can load 0 just before impatience lands, letting
at most one more fast-path cycle slip in before the next release observes
the counter.

FIFO service is a per-acquisition choice. A FIFO request skips the fast
path, adds 2 to ``impatient`` before enqueueing (subtracting it after the
outer word is won), and its queue element is never culled by the inner
lock, so its wait is bounded by the queue ahead of it plus that one racy
cycle.

The holder releases the inner lock before entering its critical section,
so the queue can reorganize underneath a long critical section.

Trace events, when a sink is installed, are emitted while the emitter
still holds the lock that serializes them, so logical timestamps order
ownership transitions exactly. With no sink each site costs one branch.
"""

from __future__ import annotations

import itertools

from .atomics import AtomicInt, spin_hint
from .cna import CnaLock, DEFAULT_FLUSH_DENOMINATOR
from .core import LockContract, TriStateWord
from .mcs import QueueElement

__all__ = ["FissileLock", "DEFAULT_GRACE_PERIOD", "TRACE_EVENTS"]

DEFAULT_GRACE_PERIOD = 50

# Event vocabulary seen by a trace sink, in no particular order.
TRACE_EVENTS = (
    "fastpath-win",   # won the outer word 0 -> 1 on the fast path
    "divert",         # observed a held word, entering the slow path
    "inner-granted",  # became the inner-lock owner (the head waiter)
    "impatient-set",  # added 2 to the impatience counter
    "handoff-taken",  # consumed a pending handoff (word >= 2, rewrote to 1)
    "outer-win",      # head waiter won the word 0 -> 1 itself
    "release",        # about to store the loaded counter into the word
)


class FissileLock(LockContract):
    """Compound TS-over-CNA lock.

    ``trace`` is an optional sink called as
    ``sink(thread_index, event, logical_timestamp)``; the emitting thread
    also mirrors protocol values into its ThreadContext
    (``last_release_value``, ``last_enqueue_seq``) for sinks that want
    them. ``poison=True`` enables the inner lock's use-after-retirement
    checks.
    """

    __slots__ = ("outer", "impatient", "inner", "grace_period", "_trace", "_ts")

    def __init__(self, grace_period=DEFAULT_GRACE_PERIOD, flush_numerator=1,
                 flush_denominator=DEFAULT_FLUSH_DENOMINATOR, trace=None,
                 poison=False, inner_events=None):
        if grace_period < 0:
            raise ValueError("grace_period must be >= 0")
        self.outer = TriStateWord(0)
        self.impatient = AtomicInt(0)
        self.inner = CnaLock(flush_numerator, flush_denominator,
                             events=inner_events, poison=poison)
        self.grace_period = grace_period
        self._trace = trace
        self._ts = itertools.count()

    def _emit(self, ctx, event):
        self._trace(ctx.thread_index, event, next(self._ts))

    # -- acquisition -------------------------------------------------------

    def acquire(self, ctx):
        if self.outer.try_acquire():
            if self._trace is not None:
                self._emit(ctx, "fastpath-win")
            return
        self._acquire_slow(ctx, fifo=False)

    def acquire_fifo(self, ctx):
        """Acquire with the FIFO guarantee; never touches the fast path."""
        self.impatient.fetch_add(2)
        if self._trace is not None:
            self._emit(ctx, "impatient-set")
        self._acquire_slow(ctx, fifo=True)

    def _acquire_slow(self, ctx, fifo):
        trace = self._trace
        if trace is not None:
            self._emit(ctx, "divert")
        elem = QueueElement(ctx.node(), fifo=fifo)
        self.inner.acquire_with(elem, ctx)
        if trace is not None:
            ctx.last_enqueue_seq = elem.enqueue_seq
            self._emit(ctx, "inner-granted")
        won = self._wait_outer(ctx, pre_entered=fifo)
        if trace is not None:
            self._emit(ctx, "outer-win" if won == 0 else "handoff-taken")
        # Inner lock goes back before the critical section begins.
        self.inner.release_with(elem, ctx)

    def _wait_outer(self, ctx, pre_entered):
        """Head waiter's wait for the outer word.

        Returns the word value whose observation granted ownership: 0 for
        a win against the open word, >= 2 for a consumed handoff.
        ``pre_entered`` says the caller already added 2 to the impatience
        counter (the FIFO path); either way the count is released here.
        """
        outer = self.outer
        impatient = self.impatient
        # Grace period: impolite swaps. Writing 1 over 1 is harmless, a
        # swap returning 0 is a win, and >= 2 is a handoff already
        # rewritten to 1 by this very swap.
        for _ in range(self.grace_period):
            old = outer.swap(1)
            if old != 1:
                if pre_entered:
                    impatient.fetch_add(-2)
                return old
            spin_hint()
        if not pre_entered:
            impatient.fetch_add(2)
            if self._trace is not None:
                self._emit(ctx, "impatient-set")
        while True:
            value = outer.load()
            if value == 0:
                if outer.compare_exchange(0, 1):
                    won = 0
                    break
            elif value != 1:
                outer.store(1)
                won = value
                break
            spin_hint()
        impatient.fetch_add(-2)
        return won

    # -- release -----------------------------------------------------------

    def release(self, ctx):
        value = self.impatient.load()
        if self._trace is not None:
            ctx.last_release_value = value
            self._emit(ctx, "release")
        self.outer.release(value)
