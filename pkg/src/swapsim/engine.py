"""Deterministic discrete-event loop for a single-GPU, swap-on-demand server.

Virtual time advances through arrival, timer, load-done, batch-done, and
unload-done events against one GPU that holds at most one model. Durations
come from a pluggable backend; the shipped backend samples the cost model.
The whole run is a pure function of its inputs: repeated runs are
bit-identical.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from heapq import heapify, heappop, heappush
from typing import Optional

from .domain import ConfigError, ExecMode, Request, SlaPolicy, TimePoint, TimeSpan
from .profiles import CostModel, processing_time, sample_load, sample_unload
from .scheduler import (
    Dispatch,
    QueueState,
    RateEstimator,
    Strategy,
    Wait,
    decide,
    model_params,
)

# Event kinds, in no particular priority: ties are broken by insertion order.
_ARRIVAL, _TIMER, _UNLOAD_DONE, _LOAD_DONE, _BATCH_DONE = range(5)

# GPU phases.
_IDLE, _UNLOADING, _LOADING, _READY, _INFERRING = range(5)


def derive_seed(*parts) -> int:
    """Stable sub-seed from a base seed and a stream name / cell key."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


class SimulatedBackend:
    """Realizes durations from the cost model under one seeded random stream."""

    def __init__(self, cost_model: CostModel, mode: ExecMode, rng: random.Random):
        self.cost_model = cost_model
        self.mode = mode
        self.rng = rng

    def load(self, model: str, mode: Optional[ExecMode] = None) -> TimeSpan:
        profile = self.cost_model.costs(model).load[mode or self.mode]
        return sample_load(profile, self.rng)

    def unload(self, model: str) -> TimeSpan:
        profile = self.cost_model.costs(model).load[self.mode]
        return sample_unload(profile, self.rng)

    def infer(self, model: str, batch_size: int) -> TimeSpan:
        return processing_time(self.cost_model.costs(model).curve, batch_size)


def simulated_backend(cost_model: CostModel, mode: ExecMode, rng: random.Random) -> SimulatedBackend:
    return SimulatedBackend(cost_model, mode, rng)


@dataclass(slots=True)
class BatchRec:
    """One dispatched batch: identity, swap cost incurred, and infer interval."""

    batch_id: int
    model: str
    size: int
    swap_incurred: bool
    load: TimeSpan
    start: TimePoint
    end: TimePoint
    proc: TimeSpan


@dataclass
class RunResult:
    requests: list[Request]
    batches: list[BatchRec]
    timeline: list[tuple[int, int, str, str]]
    swap_count: int
    run_end: TimePoint


def run(
    trace,
    cost_model: CostModel,
    strategy: Strategy,
    sla: SlaPolicy,
    mode: ExecMode,
    seed: int = 0,
    run_length: Optional[TimeSpan] = None,
    backend=None,
) -> RunResult:
    """Simulate one run over the trace and return its complete artifacts.

    Requests that are still queued when the run drains stay unfulfilled
    (no dispatch/completion stamps). In-flight work at `run_length`
    completes and is recorded; new dispatches stop there unless the
    strategy drains at end.
    """
    if run_length is None:
        run_length = trace.duration
    known = cost_model.models.keys()
    for _, model in trace.arrivals:
        if model not in known:
            raise ConfigError(
                f"trace references model {model!r} absent from the cost model"
                + ("; assign models to the trace first" if model == "" else "")
            )
    params = model_params(cost_model, mode, sla, strategy.timer_margin)
    if backend is None:
        backend = SimulatedBackend(cost_model, mode, random.Random(derive_seed(seed, "load")))
    requests = [
        Request(i, model, arrival) for i, (arrival, model) in enumerate(trace.arrivals)
    ]
    state = QueueState(known, RateEstimator(strategy.rate_window, strategy.default_rate_rps))
    heap: list = [(req.arrival, i, _ARRIVAL, req) for i, req in enumerate(requests)]
    heapify(heap)
    seq = len(requests)
    use_timer = strategy.kind.uses_timer
    drain = strategy.drain_at_end

    phase = _IDLE
    pending: Optional[tuple[str, list[Request], TimeSpan]] = None
    busy: list[tuple[int, int, str, str]] = []
    batches: list[BatchRec] = []
    swap_count = 0
    next_batch_id = 0

    def start_infer(model: str, members: list[Request], now: int, swapped: bool, load_dur: int):
        nonlocal phase, seq
        proc = backend.infer(model, len(members))
        end = now + proc
        for r in members:
            r.dispatch = now
            r.completion = end
        busy.append((now, end, "infer", model))
        batches.append(
            BatchRec(members[0].batch_id, model, len(members), swapped, load_dur, now, end, proc)
        )
        heappush(heap, (end, seq, _BATCH_DONE, None))
        seq += 1
        phase = _INFERRING

    def begin_load(now: int):
        nonlocal phase, seq, pending
        model, members, _ = pending
        dur = backend.load(model, mode)
        pending = (model, members, dur)
        busy.append((now, now + dur, "load", model))
        heappush(heap, (now + dur, seq, _LOAD_DONE, None))
        seq += 1
        phase = _LOADING

    def maybe_dispatch(now: int):
        nonlocal phase, seq, pending, swap_count, next_batch_id
        if now > run_length and not drain:
            return
        decision = decide(state, strategy, now, cost_model, mode, sla, params)
        if isinstance(decision, Wait):
            return
        queue = state.queues[decision.model]
        assert decision.count <= len(queue), "decision exceeds queue length"
        members = []
        for _ in range(decision.count):
            req = queue.popleft()
            req.batch_id = next_batch_id
            members.append(req)
        next_batch_id += 1
        if isinstance(decision, Dispatch):
            start_infer(decision.model, members, now, False, 0)
            return
        # Swap: unload the resident model if any, then load, then infer.
        swap_count += 1
        pending = (decision.model, members, 0)
        if state.loaded is not None:
            old = state.loaded
            dur = backend.unload(old)
            busy.append((now, now + dur, "unload", old))
            state.loaded = None
            heappush(heap, (now + dur, seq, _UNLOAD_DONE, None))
            seq += 1
            phase = _UNLOADING
        else:
            begin_load(now)

    while heap:
        now, _, kind, payload = heappop(heap)
        if kind == _ARRIVAL:
            state.enqueue(payload)
            if use_timer:
                fire_at = payload.arrival + params[payload.model].deadline_offset
                heappush(heap, (fire_at, seq, _TIMER, payload))
                seq += 1
            if phase in (_IDLE, _READY):
                maybe_dispatch(now)
        elif kind == _TIMER:
            # Stale timers (request already dispatched) are ignored.
            if payload.batch_id is None and phase in (_IDLE, _READY):
                maybe_dispatch(now)
        elif kind == _UNLOAD_DONE:
            begin_load(now)
        elif kind == _LOAD_DONE:
            model, members, load_dur = pending
            state.loaded = model
            pending = None
            start_infer(model, members, now, True, load_dur)
        else:  # _BATCH_DONE
            phase = _READY
            maybe_dispatch(now)

    run_end = max(run_length, busy[-1][1] if busy else 0)
    return RunResult(requests, batches, _with_idle(busy, run_end), swap_count, run_end)


def _with_idle(
    busy: list[tuple[int, int, str, str]], run_end: int
) -> list[tuple[int, int, str, str]]:
    """Fill gaps between busy intervals so the timeline partitions [0, run_end]."""
    timeline = []
    cursor = 0
    for start, end, kind, model in busy:
        assert start >= cursor, "overlapping busy intervals"
        if start > cursor:
            timeline.append((cursor, start, "idle", ""))
        timeline.append((start, end, kind, model))
        cursor = end
    if cursor < run_end:
        timeline.append((cursor, run_end, "idle", ""))
    return timeline
