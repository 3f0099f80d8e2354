"""Compact NUMA-aware queue lock, specialized for constant-time handover.

Same queue discipline as MCS, plus a reorganization step that runs when a
thread becomes the queue owner, before its critical section. The owner
looks ahead exactly one element: if its immediate successor sits on a
different NUMA node (and a node-local element waits behind it), the
successor is unlinked onto a secondary chain that rides along with lock
ownership. Handing the lock to a node-local successor keeps the hot cache
lines on one socket.

Two mechanisms bound the unfairness this filtering introduces. Each
reorganization first flips a Bernoulli coin (default probability 1/256);
on success the whole secondary chain is spliced back in right behind the
owner, ahead of the node-local waiters that arrived after its members. And
when the primary queue runs dry the secondary chain becomes the new
primary, so passed-over waiters are never stranded.

Elements flagged ``fifo`` are never culled, and a fifo-serviced owner
skips reorganization entirely so that being drafted into FIFO service
cannot shift the queue's preferred node.

The look-ahead-one rule never detaches the element the tail pointer rests
on: an element with a non-null ``next`` cannot be the tail, because the
tail only ever moves forward.
"""

from __future__ import annotations

import itertools

from .atomics import AtomicRef, spin_hint
from .core import LockContract
from .mcs import QueueElement

__all__ = ["CnaLock", "bernoulli_trial", "DEFAULT_FLUSH_DENOMINATOR"]

DEFAULT_FLUSH_DENOMINATOR = 256


def bernoulli_trial(rng, p):
    """One biased coin flip with the caller's own PRNG."""
    return rng.random() < p


class CnaLock(LockContract):
    """The specialized CNA lock.

    ``events``, when set, is a list that receives instrumentation tuples
    (used by the verification suite); ``poison=True`` adds use-after-
    retirement checks at the two sites that touch another thread's
    element. Both default off and then cost one branch.
    """

    __slots__ = ("_tail", "_holder", "flush_p", "_enq_counter", "_events", "_poison")

    def __init__(self, flush_numerator=1, flush_denominator=DEFAULT_FLUSH_DENOMINATOR,
                 events=None, poison=False):
        if flush_denominator < 1 or not 0 <= flush_numerator <= flush_denominator:
            raise ValueError("flush probability must lie in [0, 1]")
        self._tail = AtomicRef(None)
        self._holder = None
        self.flush_p = flush_numerator / flush_denominator
        self._enq_counter = itertools.count()
        self._events = events
        self._poison = poison

    # -- LockContract ----------------------------------------------------

    def acquire(self, ctx):
        elem = QueueElement(ctx.node(), fifo=False)
        self.acquire_with(elem, ctx)
        self._holder = elem

    def release(self, ctx=None):
        elem = self._holder
        self._holder = None
        self.release_with(elem, ctx)

    # -- element-passing interface (used by the compound lock) ------------

    def acquire_with(self, elem, ctx):
        """Enqueue ``elem``, wait for ownership, then reorganize."""
        prev, seq = self._tail.swap_stamped(elem, self._enq_counter)
        elem.enqueue_seq = seq
        events = self._events
        if events is not None:
            events.append(("enqueue", seq, elem.numa_id, elem.fifo))
        if prev is not None:
            self._check_live(prev)
            prev.next = elem
            while not elem.granted:
                spin_hint()
        if events is not None:
            events.append(("grant", seq))
        if not elem.fifo:
            self._reorganize(elem, ctx)

    def release_with(self, elem, ctx=None):
        succ = elem.next
        if succ is None:
            sec_head = elem.sec_head
            if sec_head is not None:
                # Primary ran dry: the secondary chain becomes the queue.
                sec_tail = elem.sec_tail
                if not self._tail.compare_exchange(elem, sec_tail):
                    while elem.next is None:
                        spin_hint()
                    sec_tail.next = elem.next  # late arrival queues behind
                if self._events is not None:
                    self._events.append(("reprovision", sec_head.enqueue_seq))
                elem.retired = True
                sec_head.granted = True
                return
            if self._tail.compare_exchange(elem, None):
                elem.retired = True
                return
            while elem.next is None:
                spin_hint()
            succ = elem.next
        self._check_live(succ)
        # Carriage moves before the grant so the successor owns it on wake.
        succ.sec_head = elem.sec_head
        succ.sec_tail = elem.sec_tail
        elem.retired = True
        succ.granted = True

    # -- reorganization ----------------------------------------------------

    def _reorganize(self, owner, ctx):
        """Run once per non-fifo ownership grant; constant time."""
        if bernoulli_trial(ctx.rng, self.flush_p) and owner.sec_head is not None:
            self._flush(owner)
            return
        nxt = owner.next
        if nxt is None:
            return
        if nxt.numa_id == owner.numa_id or nxt.fifo:
            return
        follower = nxt.next
        if follower is None:
            return  # nxt may be the tail; leaving it keeps the tail sound
        owner.next = follower
        nxt.next = None
        if owner.sec_head is None:
            owner.sec_head = nxt
        else:
            owner.sec_tail.next = nxt
        owner.sec_tail = nxt
        if self._events is not None:
            self._events.append(("cull", nxt.enqueue_seq, nxt.fifo))

    def _flush(self, owner):
        """Splice the whole secondary chain in right behind the owner."""
        head = owner.sec_head
        tail = owner.sec_tail
        owner.sec_head = None
        owner.sec_tail = None
        nxt = owner.next
        if nxt is None:
            if self._tail.compare_exchange(owner, tail):
                owner.next = head
                if self._events is not None:
                    self._events.append(("flush", head.enqueue_seq))
                return
            while owner.next is None:
                spin_hint()
            nxt = owner.next
        tail.next = nxt
        owner.next = head
        if self._events is not None:
            self._events.append(("flush", head.enqueue_seq))

    def _check_live(self, elem):
        if self._poison and elem.retired:
            raise RuntimeError("queue element touched after retirement")
