"""Lock word primitives: the tri-state word, backoff, and the TS/TTS locks.

The tri-state word is the outer word of the compound lock. Its legal
values are 0 (unlocked), 1 (locked), and even values >= 2 (locked, with a
direct handoff to the head waiter pending). Plain spin locks only ever use
the 0/1 subset.
"""

from __future__ import annotations

import random

from .atomics import AtomicInt, spin_hint
from .topology import TopologyMap

__all__ = [
    "TriStateWord",
    "BackoffState",
    "ThreadContext",
    "LockContract",
    "TsLock",
    "TtsLock",
    "BACKOFF_CEILING_CAP",
]

# Ceiling for the randomized exponential backoff, in spin hints.
BACKOFF_CEILING_CAP = 100_000


def _legal(value):
    return value == 1 or (value >= 0 and value % 2 == 0)


class TriStateWord(AtomicInt):
    """AtomicInt whose value is checked against the tri-state domain.

    The checks are ``assert`` statements so that production runs under
    ``-O`` pay nothing for them.
    """

    __slots__ = ()

    def __init__(self, value=0):
        assert _legal(value), value
        AtomicInt.__init__(self, value)

    def load(self):
        value = self._value
        assert _legal(value), value
        return value

    def store(self, value):
        assert _legal(value), value
        with self._mutex:
            self._value = value

    def swap(self, value):
        assert _legal(value), value
        with self._mutex:
            old = self._value
            self._value = value
            return old

    def try_acquire(self):
        """Single attempt to win the word 0 -> 1. Never loops, never spins.

        Compare-exchange semantics, so observing a pending-handoff value
        (>= 2) fails without disturbing it. Inlined rather than delegated:
        this is the compound lock's whole fast path and call frames are
        the dominant cost at this level.
        """
        with self._mutex:
            if self._value != 0:
                return False
            self._value = 1
            return True

    def release(self, value=0):
        """Store ``value`` into the word, surrendering ownership.

        ``value`` is 0 for a plain release, or an even value >= 2 to hand
        the word directly to the head waiter. Inlined like try_acquire;
        the pair bounds the uncontended acquire-release cycle.
        """
        assert _legal(value), value
        with self._mutex:
            self._value = value


class BackoffState:
    """Truncated randomized binary exponential backoff.

    Each failed atomic attempt sleeps a uniform number of spin hints in
    ``[0, ceiling)`` and then doubles the ceiling, up to
    ``BACKOFF_CEILING_CAP``. ``reset`` starts a new acquisition episode;
    the ceiling never decreases within one episode.
    """

    __slots__ = ("ceiling", "initial", "rng")

    def __init__(self, rng, initial=1):
        self.rng = rng
        self.initial = initial
        self.ceiling = initial

    def reset(self):
        self.ceiling = self.initial

    def next_delay(self):
        """Draw the delay for one failed attempt and advance the ceiling."""
        delay = self.rng.randrange(self.ceiling) if self.ceiling > 1 else 0
        if self.ceiling < BACKOFF_CEILING_CAP:
            self.ceiling = min(self.ceiling * 2, BACKOFF_CEILING_CAP)
        return delay

    def pause(self):
        for _ in range(self.next_delay()):
            spin_hint()


class ThreadContext:
    """Per-thread state threaded through every acquire and release.

    Holds the thread's index, its private PRNG (seeded from the index by
    default, for reproducibility), its backoff state, its topology handle,
    and scratch slots that verification sinks read from.
    """

    __slots__ = (
        "thread_index",
        "fifo",
        "rng",
        "topology",
        "backoff",
        "last_enqueue_seq",
        "last_release_value",
    )

    def __init__(self, thread_index, topology=None, seed=None, fifo=False):
        self.thread_index = thread_index
        self.fifo = fifo
        self.rng = random.Random(thread_index if seed is None else seed)
        self.topology = topology if topology is not None else TopologyMap.synthetic(1)
        self.backoff = BackoffState(self.rng)
        self.last_enqueue_seq = -1
        self.last_release_value = 0

    def node(self):
        """NUMA node id for the current acquisition episode."""
        return self.topology.resolve(self)


class LockContract:
    """Behavioral interface shared by every lock in this package.

    ``acquire(ctx)`` returns only once the caller holds the lock;
    ``release(ctx)`` may only be called by the current holder. Between the
    two calls the holder's critical section is exclusive, and everything
    the previous holder wrote is visible. ``ctx`` is the caller's own
    ThreadContext; sharing one context between threads is not supported.
    """

    __slots__ = ()

    def acquire(self, ctx):
        raise NotImplementedError

    def release(self, ctx):
        raise NotImplementedError


class TsLock(LockContract):
    """Impolite test-and-set lock: retry the atomic in a tight loop.

    Appropriate where at most one waiter can be present; with real fan-in
    use TtsLock, which is polite and backs off.
    """

    __slots__ = ("_word",)

    def __init__(self):
        self._word = TriStateWord(0)

    def acquire(self, ctx=None):
        word = self._word
        while not word.try_acquire():
            spin_hint()

    def release(self, ctx=None):
        self._word.release(0)


class TtsLock(LockContract):
    """Polite test-and-test-and-set lock with randomized backoff.

    Waiters spin on plain loads until the word reads 0, then attempt the
    atomic; each failed attempt backs off with BackoffState.
    """

    __slots__ = ("_word",)

    def __init__(self):
        self._word = TriStateWord(0)

    def acquire(self, ctx):
        word = self._word
        if word.load() == 0 and word.try_acquire():
            return
        backoff = ctx.backoff
        backoff.reset()
        while True:
            while word.load() != 0:
                spin_hint()
            if word.try_acquire():
                return
            backoff.pause()

    def release(self, ctx=None):
        self._word.release(0)
