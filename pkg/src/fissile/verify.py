"""Runtime verification suite for the lock protocols.

Five checks, each returning a CheckResult:

* ``mutual-exclusion``: N threads each do M lock-protected increments of a
  plain counter; the total must be exactly N*M.
* ``head-waiter-uniqueness``: from a trace of a contended run, the
  intervals from ``inner-granted`` to ``outer-win``/``handoff-taken``
  never overlap and always close on the thread that opened them; in other
  words at most one thread ever busy-waits on the outer word.
* ``bounded-bypass``: with the grace period forced low and long critical
  sections, every release whose impatience load returned >= 2 hands the
  word directly to the head waiter with zero fast-path wins in between,
  and an impatience episode whose release raced to 0 admits at most one
  intervening ownership cycle.
* ``fifo-order``: in a mixed normal/FIFO run, no element is granted the
  inner lock before an earlier-enqueued FIFO element (checked against
  exact enqueue-swap stamps).
* ``element-lifetime``: contended runs with use-after-retirement poisoning
  enabled must never touch a retired queue element.

Trace events arrive as (threadIndex, event, logicalTimestamp) tuples,
the shape every lock's trace hook emits; protocol values that
ordering-checks need (the value a release loaded, an element's enqueue
stamp) are read from the emitting thread's own ThreadContext, which the
lock fills in right before emitting.
"""

from __future__ import annotations

import bisect
import threading
from dataclasses import dataclass, field

from .atomics import spin_hint
from .bench import config_with, make_lock
from .core import ThreadContext

__all__ = ["CheckResult", "VerificationResult", "run_verification",
           "guarded_counter"]

_OWNERSHIP_GAINS = ("fastpath-win", "outer-win", "handoff-taken")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    trace: list[str] = field(default_factory=list)


@dataclass
class VerificationResult:
    passed: bool
    checks: list[CheckResult]

    def summary_lines(self):
        lines = []
        for check in self.checks:
            status = "pass" if check.passed else "FAIL"
            lines.append("%-24s %s  %s" % (check.name, status, check.detail))
        return lines

    def failure_trace_lines(self):
        lines = []
        for check in self.checks:
            if check.passed:
                continue
            lines.append("== %s: %s" % (check.name, check.detail))
            lines.extend(check.trace)
        return lines


class _TraceRecorder:
    """Trace sink that enriches raw events from the context registry."""

    def __init__(self):
        self.contexts = {}
        self.events = []  # (ts, tid, event, payload)

    def register(self, contexts):
        for ctx in contexts:
            self.contexts[ctx.thread_index] = ctx

    def sink(self, tid, event, ts):
        ctx = self.contexts[tid]
        if event == "release":
            payload = ctx.last_release_value
        elif event == "inner-granted":
            payload = ctx.last_enqueue_seq
        else:
            payload = None
        self.events.append((ts, tid, event, payload))

    def ordered(self):
        return sorted(self.events)

    def window(self, center_ts, radius=8):
        ordered = self.ordered()
        idx = next((i for i, e in enumerate(ordered) if e[0] == center_ts), 0)
        lo = max(0, idx - radius)
        return ["ts=%d tid=%d %s payload=%r" % e
                for e in ordered[lo:idx + radius + 1]]


def _contexts_for(config, count=None):
    topology = config.topology()
    n = config.threads if count is None else count
    return [ThreadContext(i, topology, seed=config.seed * 7_919 + i + 1,
                          fifo=i < config.fifo_threads)
            for i in range(n)]


def _contended_run(lock, contexts, iterations, fifo_tids=(), cs_hints=0):
    """Fixed-iteration hammer; re-raises the first worker error."""
    errors = []
    barrier = threading.Barrier(len(contexts) + 1)

    def work(ctx):
        try:
            acquire = (lock.acquire_fifo
                       if ctx.thread_index in fifo_tids else lock.acquire)
            release = lock.release
            barrier.wait(timeout=300)
            for _ in range(iterations):
                acquire(ctx)
                for _ in range(cs_hints):
                    spin_hint()
                release(ctx)
        except BaseException as exc:
            errors.append(exc)

    workers = [threading.Thread(target=work, args=(ctx,), daemon=True)
               for ctx in contexts]
    for t in workers:
        t.start()
    barrier.wait(timeout=300)
    for t in workers:
        t.join()
    if errors:
        raise errors[0]


def guarded_counter(config, increments):
    """Total of N threads x M guarded increments; exact under exclusion."""
    lock = make_lock(config)
    contexts = _contexts_for(config)
    all_fifo = config.lock_kind == "fissile-fifo"
    box = [0]
    errors = []
    barrier = threading.Barrier(len(contexts) + 1)

    def work(ctx):
        try:
            acquire = lock.acquire_fifo if all_fifo else lock.acquire
            release = lock.release
            barrier.wait(timeout=300)
            for _ in range(increments):
                acquire(ctx)
                box[0] += 1
                release(ctx)
        except BaseException as exc:
            errors.append(exc)

    workers = [threading.Thread(target=work, args=(ctx,), daemon=True)
               for ctx in contexts]
    for t in workers:
        t.start()
    barrier.wait(timeout=300)
    for t in workers:
        t.join()
    if errors:
        raise errors[0]
    return box[0]


# -- the five checks ---------------------------------------------------------


def check_exclusion(config, increments=100_000):
    expected = config.threads * increments
    got = guarded_counter(config, increments)
    return CheckResult(
        "mutual-exclusion", got == expected,
        "%s: %d threads x %d increments -> %d (expected %d)"
        % (config.lock_kind, config.threads, increments, got, expected))


def check_head_waiter_unique(config, iterations=1500):
    recorder = _TraceRecorder()
    fissile_config = config_with(config, lock_kind="fissile")
    lock = make_lock(fissile_config, trace=recorder.sink)
    contexts = _contexts_for(fissile_config)
    recorder.register(contexts)
    _contended_run(lock, contexts, iterations, cs_hints=1)
    open_interval = None
    grants = 0
    for ts, tid, event, _ in recorder.ordered():
        if event == "inner-granted":
            grants += 1
            if open_interval is not None:
                return CheckResult(
                    "head-waiter-uniqueness", False,
                    "second head waiter appeared at ts=%d (tid %d)"
                    % (ts, tid), recorder.window(ts))
            open_interval = (ts, tid)
        elif event in ("outer-win", "handoff-taken"):
            if open_interval is None or open_interval[1] != tid:
                return CheckResult(
                    "head-waiter-uniqueness", False,
                    "outer ownership at ts=%d (tid %d) without matching "
                    "inner grant" % (ts, tid), recorder.window(ts))
            open_interval = None
    if grants == 0:
        return CheckResult("head-waiter-uniqueness", False,
                           "run produced no slow-path acquisitions")
    return CheckResult(
        "head-waiter-uniqueness", True,
        "%d head-waiter intervals, none concurrent" % grants)


def check_bounded_bypass(config, episodes=1000, grace=5):
    recorder = _TraceRecorder()
    fissile_config = config_with(config, lock_kind="fissile",
                                 grace_period=grace)
    lock = make_lock(fissile_config, trace=recorder.sink)
    threads = max(3, min(4, config.threads))
    contexts = _contexts_for(fissile_config, count=threads)
    recorder.register(contexts)
    # Critical sections several times the grace period force the head
    # waiter into impatience on nearly every handover.
    iterations = max(200, (episodes // threads) + episodes // 2)
    _contended_run(lock, contexts, iterations, cs_hints=4 * grace)

    ordered = recorder.ordered()
    gains = [(ts, tid, ev) for ts, tid, ev, _ in ordered
             if ev in _OWNERSHIP_GAINS]
    impatient_sets = [(ts, tid) for ts, tid, ev, _ in ordered
                      if ev == "impatient-set"]
    if len(impatient_sets) < episodes:
        return CheckResult(
            "bounded-bypass", False,
            "only %d impatience episodes (wanted >= %d)"
            % (len(impatient_sets), episodes))

    gain_ts = [g[0] for g in gains]
    for ts, tid, event, value in ordered:
        if event != "release" or value < 2:
            continue
        nxt = bisect.bisect_right(gain_ts, ts)
        if nxt >= len(gains):
            continue  # run ended with the handoff pending
        if gains[nxt][2] != "handoff-taken":
            return CheckResult(
                "bounded-bypass", False,
                "release of %d at ts=%d followed by %s instead of a "
                "handoff" % (value, ts, gains[nxt][2]),
                recorder.window(gains[nxt][0]))
    own_ts = {}
    own_index = {}
    for i, (ts, tid, ev) in enumerate(gains):
        own_ts.setdefault(tid, []).append(ts)
        own_index.setdefault(tid, []).append(i)
    for ts0, tid in impatient_sets:
        mine = own_ts.get(tid, [])
        pos = bisect.bisect_right(mine, ts0)
        if pos >= len(mine):
            continue  # impatience still pending at run end
        ts1 = mine[pos]
        gain_index = own_index[tid][pos]
        lo = bisect.bisect_right(gain_ts, ts0)
        intervening = [g for g in gains[lo:gain_index] if g[1] != tid]
        if len(intervening) > 1:
            return CheckResult(
                "bounded-bypass", False,
                "%d ownership cycles slipped between impatience at ts=%d "
                "and the head waiter's turn at ts=%d"
                % (len(intervening), ts0, ts1), recorder.window(ts1))
    return CheckResult(
        "bounded-bypass", True,
        "%d impatience episodes, handoffs immediate, bypass bounded at one"
        % len(impatient_sets))


def check_fifo_order(config, acquisitions=100_000):
    recorder = _TraceRecorder()
    fifo_threads = config.fifo_threads or max(1, config.threads // 4)
    run_config = config_with(config, lock_kind="fissile-fifo",
                             fifo_threads=fifo_threads)
    lock = make_lock(run_config, trace=recorder.sink)
    contexts = _contexts_for(run_config)
    recorder.register(contexts)
    fifo_tids = frozenset(range(fifo_threads))
    iterations = max(1, acquisitions // run_config.threads)
    _contended_run(lock, contexts, iterations, fifo_tids=fifo_tids)
    grants = [(ts, tid, payload) for ts, tid, ev, payload in recorder.ordered()
              if ev == "inner-granted"]
    running_max = -1
    checked = 0
    for ts, tid, seq in grants:
        if tid in fifo_tids:
            checked += 1
            if running_max > seq:
                return CheckResult(
                    "fifo-order", False,
                    "fifo element with stamp %d granted after stamp %d"
                    % (seq, running_max), recorder.window(ts))
        if seq > running_max:
            running_max = seq
    total = iterations * run_config.threads
    if checked == 0:
        return CheckResult("fifo-order", False,
                           "no fifo inner grants observed")
    return CheckResult(
        "fifo-order", True,
        "%d acquisitions, %d fifo grants, zero inner-lock bypasses"
        % (total, checked))


def check_lifetime(config, iterations=3000):
    run_config = config_with(config, lock_kind="fissile-fifo",
                             fifo_threads=max(1, config.threads // 2))
    lock = make_lock(run_config, poison=True)
    contexts = _contexts_for(run_config)
    fifo_tids = frozenset(range(run_config.fifo_threads))
    try:
        _contended_run(lock, contexts, iterations, fifo_tids=fifo_tids)
    except RuntimeError as exc:
        return CheckResult("element-lifetime", False, str(exc))
    return CheckResult(
        "element-lifetime", True,
        "%d poisoned acquisitions, no element touched after retirement"
        % (iterations * run_config.threads))


def run_verification(config, increments=100_000, head_iterations=1500,
                     episodes=1000, fifo_acquisitions=100_000,
                     lifetime_iterations=3000):
    """Run the whole suite against ``config``; see the module docstring."""
    config.validate()
    checks = [
        check_exclusion(config, increments),
        check_head_waiter_unique(config, head_iterations),
        check_bounded_bypass(config, episodes),
        check_fifo_order(config, fifo_acquisitions),
        check_lifetime(config, lifetime_iterations),
    ]
    return VerificationResult(all(c.passed for c in checks), checks)
