"""CNA reorganization checked structurally against explicit list models."""

import random
import threading

import pytest

from fissile.cna import CnaLock, bernoulli_trial
from fissile.core import ThreadContext
from fissile.mcs import QueueElement


def build_queue(lock, specs):
    """Craft a linked queue; specs are (numa, fifo), head is the owner."""
    elems = [QueueElement(numa, fifo=fifo) for numa, fifo in specs]
    for i, elem in enumerate(elems):
        elem.enqueue_seq = i
    for a, b in zip(elems, elems[1:]):
        a.next = b
    lock._tail.store(elems[-1])
    elems[0].granted = True
    return elems


def primary_chain(owner):
    out = []
    node = owner.next
    while node is not None:
        out.append(node)
        node = node.next
    return out


def secondary_chain(owner):
    out = []
    node = owner.sec_head
    while node is not None:
        out.append(node)
        node = node.next
    return out


def never_flush():
    return CnaLock(0, 1)  # P = 0


def always_flush():
    return CnaLock(1, 1)  # P = 1


class TestCull:
    def test_remote_successor_moves_to_secondary(self):
        lock = never_flush()
        owner, remote, local = build_queue(
            lock, [(0, False), (1, False), (0, False)])
        lock._reorganize(owner, ThreadContext(0, seed=1))
        assert primary_chain(owner) == [local]
        assert secondary_chain(owner) == [remote]
        assert owner.sec_tail is remote

    def test_local_successor_untouched(self):
        lock = never_flush()
        owner, a, b = build_queue(lock, [(0, False), (0, False), (1, False)])
        lock._reorganize(owner, ThreadContext(0, seed=1))
        assert primary_chain(owner) == [a, b]
        assert secondary_chain(owner) == []

    def test_tail_is_never_culled(self):
        lock = never_flush()
        owner, remote = build_queue(lock, [(0, False), (1, False)])
        lock._reorganize(owner, ThreadContext(0, seed=1))
        assert primary_chain(owner) == [remote]
        assert secondary_chain(owner) == []
        assert lock._tail.load() is remote

    def test_fifo_element_never_culled(self):
        lock = never_flush()
        owner, fifo_remote, local = build_queue(
            lock, [(0, False), (1, True), (0, False)])
        lock._reorganize(owner, ThreadContext(0, seed=1))
        assert primary_chain(owner) == [fifo_remote, local]
        assert secondary_chain(owner) == []

    def test_at_most_one_cull_per_reorganize(self):
        lock = never_flush()
        owner, r1, r2, local = build_queue(
            lock, [(0, False), (1, False), (1, False), (0, False)])
        lock._reorganize(owner, ThreadContext(0, seed=1))
        # One look-ahead only: r1 culled, r2 becomes the successor.
        assert primary_chain(owner) == [r2, local]
        assert secondary_chain(owner) == [r1]

    def test_culls_accumulate_on_secondary(self):
        lock = never_flush()
        owner, r1, l1 = build_queue(lock, [(0, False), (1, False), (0, False)])
        ctx = ThreadContext(0, seed=1)
        lock._reorganize(owner, ctx)
        r2 = QueueElement(1)
        l2 = QueueElement(0)
        l1.next = r2
        r2.next = l2
        lock._tail.store(l2)
        # Simulate the next owner inheriting the carriage.
        l1.sec_head, l1.sec_tail = owner.sec_head, owner.sec_tail
        lock._reorganize(l1, ctx)
        assert secondary_chain(l1) == [r1, r2]
        assert primary_chain(l1) == [l2]


class TestFlush:
    def test_flush_splices_whole_secondary_after_owner(self):
        lock = always_flush()
        owner, a = build_queue(lock, [(0, False), (0, False)])
        x, y = QueueElement(1), QueueElement(1)
        x.next = y
        owner.sec_head, owner.sec_tail = x, y
        lock._reorganize(owner, ThreadContext(0, seed=1))
        assert primary_chain(owner) == [x, y, a]
        assert owner.sec_head is None and owner.sec_tail is None

    def test_flush_matches_list_model(self):
        # Oracle: primary [owner] + P, secondary S -> [owner] + S + P.
        for p_len in range(3):
            for s_len in range(1, 4):
                lock = always_flush()
                specs = [(0, False)] + [(0, False)] * p_len
                elems = build_queue(lock, specs)
                owner, primary = elems[0], elems[1:]
                secondary = [QueueElement(1) for _ in range(s_len)]
                for a, b in zip(secondary, secondary[1:]):
                    a.next = b
                owner.sec_head, owner.sec_tail = secondary[0], secondary[-1]
                lock._reorganize(owner, ThreadContext(0, seed=1))
                assert primary_chain(owner) == secondary + primary

    def test_flush_when_owner_is_tail_moves_tail(self):
        lock = always_flush()
        (owner,) = build_queue(lock, [(0, False)])
        x = QueueElement(1)
        owner.sec_head = owner.sec_tail = x
        lock._reorganize(owner, ThreadContext(0, seed=1))
        assert primary_chain(owner) == [x]
        assert lock._tail.load() is x

    def test_trial_with_empty_secondary_falls_back_to_cull(self):
        lock = always_flush()
        owner, remote, local = build_queue(
            lock, [(0, False), (1, False), (0, False)])
        lock._reorganize(owner, ThreadContext(0, seed=1))
        assert secondary_chain(owner) == [remote]
        assert primary_chain(owner) == [local]


class TestRelease:
    def test_carriage_transfers_to_successor(self):
        lock = never_flush()
        owner, succ = build_queue(lock, [(0, False), (0, False)])
        x = QueueElement(1)
        owner.sec_head = owner.sec_tail = x
        lock.release_with(owner)
        assert succ.granted
        assert succ.sec_head is x and succ.sec_tail is x
        assert owner.retired

    def test_reprovision_grants_secondary_head(self):
        lock = never_flush()
        (owner,) = build_queue(lock, [(0, False)])
        s1, s2 = QueueElement(1), QueueElement(1)
        s1.next = s2
        owner.sec_head, owner.sec_tail = s1, s2
        lock.release_with(owner)
        assert s1.granted
        assert lock._tail.load() is s2
        assert primary_chain(s1) == [s2]
        assert owner.retired

    def test_reprovision_races_with_late_arrival(self):
        lock = never_flush()
        (owner,) = build_queue(lock, [(0, False)])
        s1 = QueueElement(1)
        owner.sec_head = owner.sec_tail = s1
        late = QueueElement(0)
        late.enqueue_seq = 99
        lock._tail.store(late)  # arrival swapped the tail, link still pending
        released = threading.Event()

        def do_release():
            lock.release_with(owner)
            released.set()

        t = threading.Thread(target=do_release)
        t.start()
        assert not released.wait(timeout=0.2)  # blocked on the missing link
        owner.next = late  # the arrival completes its link write
        t.join(timeout=30)
        assert released.is_set()
        assert s1.granted
        assert primary_chain(s1) == [late]

    def test_plain_detach_when_alone(self):
        lock = never_flush()
        (owner,) = build_queue(lock, [(0, False)])
        lock.release_with(owner)
        assert lock._tail.load() is None
        assert owner.retired


class TestBernoulli:
    def test_extremes(self):
        rng = random.Random(5)
        assert all(bernoulli_trial(rng, 1.0) for _ in range(100))
        assert not any(bernoulli_trial(rng, 0.0) for _ in range(100))

    def test_seed_determinism(self):
        a = [bernoulli_trial(random.Random(7), 0.3) for _ in range(50)]
        b = [bernoulli_trial(random.Random(7), 0.3) for _ in range(50)]
        assert a == b  # same seed, same draw sequence

    def test_rate_roughly_matches_p(self):
        rng = random.Random(11)
        hits = sum(bernoulli_trial(rng, 1 / 16) for _ in range(64_000))
        assert 3200 <= hits <= 4800  # 4000 expected


class TestLifetimeAndValidation:
    def test_poison_catches_link_after_retirement(self):
        lock = CnaLock(0, 1, poison=True)
        dead = QueueElement(0)
        dead.retired = True
        lock._tail.store(dead)
        with pytest.raises(RuntimeError):
            lock.acquire_with(QueueElement(0), ThreadContext(0, seed=1))

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            CnaLock(2, 1)
        with pytest.raises(ValueError):
            CnaLock(1, 0)

    def test_event_stream_for_uncontended_cycle(self):
        events = []
        lock = CnaLock(0, 1, events=events)
        ctx = ThreadContext(3, seed=4)
        lock.acquire(ctx)
        lock.release(ctx)
        assert events == [("enqueue", 0, 0, False), ("grant", 0)]


def test_guarded_counter_two_nodes():
    from fissile.topology import TopologyMap

    lock = CnaLock()
    topo = TopologyMap.synthetic(2)
    contexts = [ThreadContext(i, topo) for i in range(6)]
    box = [0]
    barrier = threading.Barrier(7)

    def work(ctx):
        barrier.wait()
        for _ in range(10_000):
            lock.acquire(ctx)
            box[0] += 1
            lock.release(ctx)

    threads = [threading.Thread(target=work, args=(c,)) for c in contexts]
    for t in threads:
        t.start()
    barrier.wait()
    for t in threads:
        t.join()
    assert box[0] == 60_000
