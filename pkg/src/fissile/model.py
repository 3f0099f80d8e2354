"""Explicit-state model of the lock protocols, one shared access per step.

The real locks run on OS threads and cannot be steered or snapshotted, so
correctness arguments about interleavings run here instead. Each model
thread is a little state machine whose transitions touch at most one
contended shared location, mirroring the real algorithms line by line
(the same queue discipline, reorganization, grace period, impatience
protocol, and release). A scheduler picks which thread steps next:

* ``run_random`` drives a seeded random walk, good for long instrumented
  runs (queue conservation over tens of thousands of acquisitions) and
  for the deterministic benchmark mode, which is this walk plus the
  regular metrics pipeline.
* ``explore`` enumerates every reachable interleaving of a small scenario
  by exhaustive search over cloned worlds, deduplicating states. It is
  meant for FIFO scenarios, which never consult a PRNG; reaching a
  Bernoulli draw while exploring raises.

Safety checks run inline on every transition: at most one thread in the
critical section, no element granted twice or touched after retirement,
no fifo element culled, the culled element never the queue tail, and no
fifo element overtaken in grant order by a later arrival. A violation
raises ModelViolation with the offending state rendered into the message.
"""

from __future__ import annotations

import random

__all__ = ["ModelViolation", "World", "make_world", "run_random", "explore"]

KINDS = ("tts", "mcs", "cna", "fissile", "fissile-fifo")

BACKOFF_CAP = 100_000

# Thread program counters. One transition per constant; the comment names
# the single contended access it performs.
START = 0        # cycle bookkeeping (reads bench counters only)
T_LOAD = 1       # tts: load word
T_CAS = 2        # tts: compare-exchange word
T_BACK = 3       # tts: local backoff tick
FAST = 4         # fissile: fast-path compare-exchange
FF_BUMP = 5      # fissile-fifo: impatient += 2
ENQ = 6          # swap queue tail
LINK = 7         # write predecessor's next
SPIN = 8         # load own granted flag
OWNER = 9        # inner lock granted (bookkeeping)
R_TRIAL = 10     # bernoulli draw (thread-local)
C_READ1 = 11     # cull: load owner's next
C_READ2 = 12     # cull: load successor's next, then unlink
F_NEXT = 13      # flush: load owner's next
F_CAS = 14       # flush: compare-exchange tail
F_WAIT = 15      # flush: reload owner's next
F_SPLICE = 16    # flush: link chain in
A_SWAP = 17      # grace period: swap outer
A_ENTER = 18     # impatient += 2
A_LOAD = 19      # load outer
A_CAS = 20       # compare-exchange outer
A_TAKE = 21      # store 1 into outer (handoff)
A_DEC = 22       # impatient -= 2
IR_START = 23    # inner release: load own next
IR_HAND = 24     # grant successor (carriage moves with it)
IR_RCAS = 25     # reprovision: compare-exchange tail to secondary tail
IR_RWAIT = 26    # reprovision: reload own next
IR_RGRANT = 27   # reprovision: grant secondary head
IR_DCAS = 28     # detach: compare-exchange tail to None
IR_DWAIT = 29    # detach: reload own next
CS_ENTER = 30    # clock and tallies (under the lock)
CS_BODY = 31     # local critical-section tick
REL_LOAD = 32    # load impatient
REL_STORE = 33   # store into outer
CYCLE_END = 34   # bench counters
NCS_DRAW = 35    # thread-local draw
NCS_BODY = 36    # local non-critical tick
DONE = 37

PC_NAMES = {v: k for k, v in list(globals().items()) if isinstance(v, int)}


class ModelViolation(AssertionError):
    pass


class ModelElem:
    __slots__ = ("next", "granted", "serviced", "retired", "numa", "fifo",
                 "seq", "sec_head", "sec_tail")

    def __init__(self, numa, fifo, seq):
        self.next = None          # element index or None
        self.granted = False
        self.serviced = False
        self.retired = False
        self.numa = numa
        self.fifo = fifo
        self.seq = seq
        self.sec_head = None
        self.sec_tail = None

    def clone(self):
        other = ModelElem(self.numa, self.fifo, self.seq)
        other.next = self.next
        other.granted = self.granted
        other.serviced = self.serviced
        other.retired = self.retired
        other.sec_head = self.sec_head
        other.sec_tail = self.sec_tail
        return other

    def key(self):
        return (self.next, self.granted, self.serviced, self.retired,
                self.numa, self.fifo, self.seq, self.sec_head, self.sec_tail)


class ModelThread:
    __slots__ = ("tid", "numa", "fifo", "quota", "done", "rng", "ncs_max",
                 "pc", "elem", "prev", "v", "won", "grace_left", "cs_left",
                 "ncs_left", "delay", "ceil", "pre_clock", "after_reorg",
                 "after_ir", "flush_want")

    def __init__(self, tid, numa, fifo, quota, rng, ncs_max):
        self.tid = tid
        self.numa = numa
        self.fifo = fifo
        self.quota = quota
        self.done = 0
        self.rng = rng
        self.ncs_max = ncs_max
        self.pc = START
        self.elem = None
        self.prev = None
        self.v = 0
        self.won = 0
        self.grace_left = 0
        self.cs_left = 0
        self.ncs_left = 0
        self.delay = 0
        self.ceil = 1
        self.pre_clock = 0
        self.after_reorg = CS_ENTER
        self.after_ir = CS_ENTER
        self.flush_want = False

    def clone(self):
        # The rng is shared by reference; exploration never draws from it
        # (the draw sites assert), and the random walk never clones.
        other = ModelThread(self.tid, self.numa, self.fifo, self.quota,
                            self.rng, self.ncs_max)
        for name in ("done", "pc", "elem", "prev", "v", "won", "grace_left",
                     "cs_left", "ncs_left", "delay", "ceil", "pre_clock",
                     "after_reorg", "after_ir", "flush_want"):
            setattr(other, name, getattr(self, name))
        return other

    def key(self):
        return (self.pc, self.done, self.elem, self.prev, self.v, self.won,
                self.grace_left, self.cs_left, self.ncs_left, self.delay,
                self.ceil, self.pre_clock, self.after_reorg, self.after_ir,
                self.flush_want)


class World:
    """Shared state plus all thread machines; one lock instance."""

    __slots__ = ("kind", "outer", "impatient", "tail", "elems", "threads",
                 "clock", "total_done", "total_target", "cs_steps", "grace",
                 "flush_p", "exploring", "enq_count", "grant_count",
                 "cull_count", "flush_count", "reprovision_count",
                 "in_cs", "waits", "migrations", "last_node",
                 "impatient_max", "release_values", "waiting_fifo")

    def __init__(self, kind, cs_steps, grace, flush_p, total_target):
        if kind not in KINDS:
            raise ValueError("unknown lock kind %r" % (kind,))
        self.kind = kind
        self.outer = 0
        self.impatient = 0
        self.tail = None
        self.elems = []
        self.threads = []
        self.clock = 0
        self.total_done = 0
        self.total_target = total_target
        self.cs_steps = cs_steps
        self.grace = grace
        self.flush_p = flush_p
        self.exploring = False
        self.enq_count = 0
        self.grant_count = 0
        self.cull_count = 0
        self.flush_count = 0
        self.reprovision_count = 0
        self.in_cs = 0
        self.waits = []
        self.migrations = 0
        self.last_node = None
        self.impatient_max = 0
        self.release_values = set()
        self.waiting_fifo = set()

    # -- state plumbing ----------------------------------------------------

    def clone(self):
        other = World(self.kind, self.cs_steps, self.grace, self.flush_p,
                      self.total_target)
        other.outer = self.outer
        other.impatient = self.impatient
        other.tail = self.tail
        other.elems = [e.clone() for e in self.elems]
        other.threads = [t.clone() for t in self.threads]
        other.clock = self.clock
        other.total_done = self.total_done
        other.exploring = self.exploring
        other.enq_count = self.enq_count
        other.grant_count = self.grant_count
        other.cull_count = self.cull_count
        other.flush_count = self.flush_count
        other.reprovision_count = self.reprovision_count
        other.in_cs = self.in_cs
        other.waits = list(self.waits)
        other.migrations = self.migrations
        other.last_node = self.last_node
        other.impatient_max = self.impatient_max
        other.release_values = set(self.release_values)
        other.waiting_fifo = set(self.waiting_fifo)
        return other

    def key(self):
        return (self.outer, self.impatient, self.tail, self.clock,
                self.total_done, self.in_cs,
                tuple(e.key() for e in self.elems),
                tuple(t.key() for t in self.threads))

    def runnable(self):
        return [t for t in self.threads if t.pc != DONE]

    def _fail(self, th, why):
        raise ModelViolation("%s (thread %d at %s, outer=%d impatient=%d "
                             "tail=%r)" % (why, th.tid, PC_NAMES.get(th.pc),
                                           self.outer, self.impatient,
                                           self.tail))

    # -- one transition ------------------------------------------------------

    def step(self, th):  # noqa: C901 - the protocol listing reads top-down
        pc = th.pc
        elems = self.elems

        if pc == SPIN:
            if elems[th.elem].granted:
                th.pc = OWNER
            return
        if pc == A_LOAD:
            v = self.outer
            if v == 0:
                th.pc = A_CAS
            elif v != 1:
                th.v = v
                th.pc = A_TAKE
            return
        if pc == CS_BODY:
            if th.cs_left > 0:
                th.cs_left -= 1
                return
            if self.kind in ("tts", "fissile", "fissile-fifo"):
                th.pc = REL_LOAD
            else:
                self.in_cs -= 1
                th.after_ir = CYCLE_END
                th.pc = IR_START
            return
        if pc == NCS_BODY:
            th.ncs_left -= 1
            if th.ncs_left <= 0:
                th.pc = START
            return
        if pc == T_LOAD:
            if self.outer == 0:
                th.pc = T_CAS
            return

        if pc == START:
            if self.total_done >= self.total_target or th.done >= th.quota:
                th.pc = DONE
                return
            th.pre_clock = self.clock
            th.ceil = 1
            kind = self.kind
            if kind == "tts":
                th.pc = T_LOAD
            elif kind in ("mcs", "cna"):
                th.pc = ENQ
            elif kind == "fissile" or not th.fifo:
                th.pc = FAST
            else:
                th.pc = FF_BUMP
            return

        if pc == T_CAS:
            if self.outer == 0:
                self.outer = 1
                self._enter_cs(th)
                return
            th.delay = th.rng.randrange(th.ceil) if th.ceil > 1 else 0
            if th.ceil < BACKOFF_CAP:
                th.ceil = min(th.ceil * 2, BACKOFF_CAP)
            th.pc = T_BACK if th.delay > 0 else T_LOAD
            return
        if pc == T_BACK:
            th.delay -= 1
            if th.delay <= 0:
                th.pc = T_LOAD
            return

        if pc == FAST:
            if self.outer == 0:
                self.outer = 1
                self._enter_cs(th)
            else:
                th.pc = ENQ
            return
        if pc == FF_BUMP:
            self.impatient += 2
            if self.impatient > self.impatient_max:
                self.impatient_max = self.impatient
            th.pc = ENQ
            return

        if pc == ENQ:
            fifo_elem = th.fifo and self.kind == "fissile-fifo"
            elem = ModelElem(th.numa, fifo_elem, self.enq_count)
            self.enq_count += 1
            eid = len(elems)
            elems.append(elem)
            th.elem = eid
            if fifo_elem:
                self.waiting_fifo.add(eid)
            prev = self.tail
            self.tail = eid
            if prev is None:
                th.pc = OWNER
            else:
                th.prev = prev
                th.pc = LINK
            return
        if pc == LINK:
            prev = elems[th.prev]
            if prev.retired:
                self._fail(th, "linked into a retired element")
            prev.next = th.elem
            th.pc = SPIN
            return

        if pc == OWNER:
            elem = elems[th.elem]
            if elem.serviced:
                self._fail(th, "element granted twice")
            elem.serviced = True
            self.grant_count += 1
            if elem.fifo:
                self.waiting_fifo.discard(th.elem)
            for other in self.waiting_fifo:
                if elems[other].seq < elem.seq:
                    self._fail(th, "fifo element %d overtaken by %d"
                               % (elems[other].seq, elem.seq))
            kind = self.kind
            if kind in ("fissile", "fissile-fifo"):
                th.after_reorg = A_SWAP if self.grace > 0 else A_ENTER
                th.grace_left = self.grace
                th.after_ir = CS_ENTER
            else:
                th.after_reorg = CS_ENTER
                th.after_ir = CYCLE_END
            if kind == "mcs" or elem.fifo:
                th.pc = th.after_reorg
            else:
                th.pc = R_TRIAL
            return

        if pc == R_TRIAL:
            if self.exploring:
                self._fail(th, "bernoulli draw reached while exploring")
            th.flush_want = th.rng.random() < self.flush_p
            if th.flush_want and elems[th.elem].sec_head is not None:
                th.pc = F_NEXT
            else:
                th.pc = C_READ1
            return
        if pc == C_READ1:
            owner = elems[th.elem]
            nxt = owner.next
            if nxt is None or elems[nxt].numa == owner.numa or elems[nxt].fifo:
                th.pc = th.after_reorg
            else:
                th.v = nxt
                th.pc = C_READ2
            return
        if pc == C_READ2:
            owner = elems[th.elem]
            nxt = elems[th.v]
            follower = nxt.next
            if follower is None:
                th.pc = th.after_reorg
                return
            if self.tail == th.v:
                self._fail(th, "culled the tail element")
            if nxt.fifo:
                self._fail(th, "culled a fifo element")
            owner.next = follower
            nxt.next = None
            if owner.sec_head is None:
                owner.sec_head = th.v
            else:
                elems[owner.sec_tail].next = th.v
            owner.sec_tail = th.v
            self.cull_count += 1
            th.pc = th.after_reorg
            return

        if pc == F_NEXT:
            if elems[th.elem].next is None:
                th.pc = F_CAS
            else:
                th.pc = F_SPLICE
            return
        if pc == F_CAS:
            owner = elems[th.elem]
            if self.tail == th.elem:
                self.tail = owner.sec_tail
                owner.next = owner.sec_head
                owner.sec_head = None
                owner.sec_tail = None
                self.flush_count += 1
                th.pc = th.after_reorg
            else:
                th.pc = F_WAIT
            return
        if pc == F_WAIT:
            if elems[th.elem].next is not None:
                th.pc = F_SPLICE
            return
        if pc == F_SPLICE:
            owner = elems[th.elem]
            elems[owner.sec_tail].next = owner.next
            owner.next = owner.sec_head
            owner.sec_head = None
            owner.sec_tail = None
            self.flush_count += 1
            th.pc = th.after_reorg
            return

        if pc == A_SWAP:
            old = self.outer
            self.outer = 1
            if old != 1:
                th.won = old
                if th.fifo and self.kind == "fissile-fifo":
                    th.pc = A_DEC
                else:
                    th.pc = IR_START
                return
            th.grace_left -= 1
            if th.grace_left <= 0:
                th.pc = A_ENTER
            return
        if pc == A_ENTER:
            if th.fifo and self.kind == "fissile-fifo":
                th.pc = A_LOAD  # already counted before enqueueing
                return
            self.impatient += 2
            if self.impatient > self.impatient_max:
                self.impatient_max = self.impatient
            th.pc = A_LOAD
            return
        if pc == A_CAS:
            if self.outer == 0:
                self.outer = 1
                th.won = 0
                th.pc = A_DEC
            else:
                th.pc = A_LOAD
            return
        if pc == A_TAKE:
            self.outer = 1
            th.won = th.v
            th.pc = A_DEC
            return
        if pc == A_DEC:
            self.impatient -= 2
            if self.impatient < 0:
                self._fail(th, "impatient went negative")
            th.pc = IR_START
            return

        if pc == IR_START:
            elem = elems[th.elem]
            if elem.next is not None:
                th.pc = IR_HAND
            elif elem.sec_head is not None:
                th.pc = IR_RCAS
            else:
                th.pc = IR_DCAS
            return
        if pc == IR_HAND:
            elem = elems[th.elem]
            succ = elems[elem.next]
            if succ.retired:
                self._fail(th, "granted a retired element")
            succ.sec_head = elem.sec_head
            succ.sec_tail = elem.sec_tail
            elem.retired = True
            succ.granted = True
            th.pc = th.after_ir
            return
        if pc == IR_RCAS:
            elem = elems[th.elem]
            if self.tail == th.elem:
                self.tail = elem.sec_tail
                elem.retired = True
                elems[elem.sec_head].granted = True
                self.reprovision_count += 1
                th.pc = th.after_ir
            else:
                th.pc = IR_RWAIT
            return
        if pc == IR_RWAIT:
            elem = elems[th.elem]
            if elem.next is None:
                return
            elems[elem.sec_tail].next = elem.next
            th.pc = IR_RGRANT
            return
        if pc == IR_RGRANT:
            elem = elems[th.elem]
            elem.retired = True
            elems[elem.sec_head].granted = True
            self.reprovision_count += 1
            th.pc = th.after_ir
            return
        if pc == IR_DCAS:
            elem = elems[th.elem]
            if self.tail == th.elem:
                self.tail = None
                elem.retired = True
                th.pc = th.after_ir
            else:
                th.pc = IR_DWAIT
            return
        if pc == IR_DWAIT:
            if elems[th.elem].next is not None:
                th.pc = IR_HAND
            return

        if pc == CS_ENTER:
            self._enter_cs(th)
            return
        if pc == REL_LOAD:
            th.v = self.impatient if self.kind != "tts" else 0
            th.pc = REL_STORE
            return
        if pc == REL_STORE:
            self.in_cs -= 1
            self.outer = th.v
            self.release_values.add(th.v)
            th.pc = CYCLE_END
            return
        if pc == CYCLE_END:
            self.total_done += 1
            th.done += 1
            th.pc = NCS_DRAW
            return
        if pc == NCS_DRAW:
            if th.ncs_max > 0:
                if self.exploring:
                    self._fail(th, "ncs draw reached while exploring")
                th.ncs_left = th.rng.randrange(th.ncs_max)
            else:
                th.ncs_left = 0
            th.pc = NCS_BODY if th.ncs_left > 0 else START
            return

        raise AssertionError("unhandled pc %r" % (pc,))

    def _enter_cs(self, th):
        self.in_cs += 1
        if self.in_cs > 1:
            self._fail(th, "two threads inside the critical section")
        entry = self.clock
        self.clock = entry + 1
        # The sample's fifo flag marks the thread's designation (its
        # workload profile), not whether the FIFO acquire path ran.
        self.waits.append((entry - th.pre_clock, th.tid, th.fifo))
        node = th.numa
        if self.last_node is not None and self.last_node != node:
            self.migrations += 1
        self.last_node = node
        th.cs_left = self.cs_steps
        th.pc = CS_BODY

    # -- end-of-run checks --------------------------------------------------

    def check_quiescent(self):
        """Assert the lock is idle and the queue fully drained."""
        if self.in_cs != 0:
            raise ModelViolation("a thread is still inside the CS")
        if self.outer not in (0,):
            raise ModelViolation("outer word left at %d" % self.outer)
        if self.impatient != 0:
            raise ModelViolation("impatient left at %d" % self.impatient)
        if self.tail is not None:
            raise ModelViolation("queue tail still set")
        for eid, elem in enumerate(self.elems):
            if not elem.serviced:
                raise ModelViolation("element %d enqueued but never granted"
                                     % eid)
        if self.grant_count != self.enq_count:
            raise ModelViolation("grants %d != enqueues %d"
                                 % (self.grant_count, self.enq_count))


def make_world(kind, threads, cs_steps=1, grace=2, flush_numerator=1,
               flush_denominator=8, total_target=100, quota=None,
               fifo_threads=0, ncs_max=0, fifo_ncs_max=0, node_count=1,
               seed=0):
    """Build a world with ``threads`` machines in the bench loop shape.

    Threads ``0 .. fifo_threads-1`` are the FIFO-designated ones. Node ids
    are synthetic (``tid % node_count``). ``quota`` bounds per-thread
    cycles (default unbounded; the global ``total_target`` stops the run).
    """
    world = World(kind, cs_steps, grace, flush_numerator / flush_denominator,
                  total_target)
    for tid in range(threads):
        fifo = tid < fifo_threads
        rng = random.Random(seed * 1_000_003 + tid + 1)
        world.threads.append(ModelThread(
            tid, tid % node_count, fifo,
            quota if quota is not None else total_target,
            rng, fifo_ncs_max if fifo else ncs_max))
    return world


def run_random(world, seed=0, max_steps=50_000_000):
    """Drive ``world`` to completion under a seeded random scheduler."""
    rng = random.Random(seed)
    choice = rng.choice
    steps = 0
    while True:
        runnable = world.runnable()
        if not runnable:
            break
        world.step(choice(runnable))
        steps += 1
        if steps > max_steps:
            raise ModelViolation("no progress after %d steps" % max_steps)
    world.check_quiescent()
    return steps


def explore(world, max_states=2_000_000):
    """Exhaustively search every interleaving of ``world``.

    Returns a summary dict: states explored, terminal states seen, the
    maximum impatient value on any path, and the set of values ever
    stored into the outer word by a release. Safety violations raise.
    """
    world.exploring = True
    seen = {world.key()}
    frontier = [world]
    terminals = 0
    impatient_max = 0
    release_values = set()
    while frontier:
        state = frontier.pop()
        runnable = state.runnable()
        if not runnable:
            state.check_quiescent()
            terminals += 1
            continue
        for th in runnable:
            succ = state.clone()
            succ.step(succ.threads[th.tid])
            if succ.impatient_max > impatient_max:
                impatient_max = succ.impatient_max
            release_values |= succ.release_values
            key = succ.key()
            if key not in seen:
                seen.add(key)
                frontier.append(succ)
        if len(seen) > max_states:
            raise ModelViolation("state space exceeded %d states" % max_states)
    return {
        "states": len(seen),
        "terminals": terminals,
        "impatient_max": impatient_max,
        "release_values": release_values,
    }
