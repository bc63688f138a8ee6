"""Per-model FIFO queues and the batching plans that pick the next GPU action.

Four strategies compose the basic plans:

  - best_batch: dispatch only when a queue reaches the model's optimal batch
    size (OBS); the baseline.
  - best_batch_timer: as best_batch, plus a per-request timeout derived from
    the SLA that forces partial batches out before they go stale.
  - select_batch_timer: timeout plus a dynamic batch size of
    arrival_rate x (SLA minus estimated load/processing time).
  - best_batch_partial_timer: best_batch_timer, but drains a partial batch of
    the currently loaded model before swapping to another model.
"""

from __future__ import annotations

import enum
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .domain import (
    US_PER_S,
    ConfigError,
    ParameterError,
    Request,
    SlaPolicy,
    TimePoint,
    TimeSpan,
    seconds,
)
from .profiles import CostModel, ExecMode, obs, processing_time

logger = logging.getLogger(__name__)


class StrategyKind(enum.Enum):
    BEST_BATCH = "best_batch"
    BEST_BATCH_TIMER = "best_batch_timer"
    SELECT_BATCH_TIMER = "select_batch_timer"
    BEST_BATCH_PARTIAL_TIMER = "best_batch_partial_timer"

    @classmethod
    def parse(cls, text: str) -> "StrategyKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = "/".join(k.value for k in cls)
            raise ConfigError(f"strategy: expected one of {names}, got {text!r}") from None

    @property
    def uses_timer(self) -> bool:
        return self is not StrategyKind.BEST_BATCH


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    timer_margin: TimeSpan = seconds(1.0)
    rate_window: TimeSpan = seconds(60.0)
    default_rate_rps: float = 1.0
    drain_at_end: bool = False

    def __post_init__(self) -> None:
        if self.timer_margin < 0:
            raise ParameterError(f"timer_margin must be >= 0, got {self.timer_margin}")
        if self.rate_window <= 0:
            raise ParameterError(f"rate_window must be > 0, got {self.rate_window}")
        if self.default_rate_rps < 0:
            raise ParameterError(f"default_rate_rps must be >= 0, got {self.default_rate_rps}")


@dataclass(frozen=True)
class Dispatch:
    model: str
    count: int


@dataclass(frozen=True)
class SwapThenDispatch:
    model: str
    count: int


@dataclass(frozen=True)
class Wait:
    until: Optional[TimePoint] = None


Decision = Union[Dispatch, SwapThenDispatch, Wait]


class RateEstimator:
    """Arrival-rate estimate from timestamps inside a sliding window."""

    def __init__(self, window: TimeSpan, default_rate_rps: float):
        self.window = window
        self.default_rate_rps = default_rate_rps
        self._arrivals: dict[str, deque[int]] = {}

    def observe(self, model: str, at: TimePoint) -> None:
        self._arrivals.setdefault(model, deque()).append(at)

    def estimate(self, model: str, now: TimePoint) -> float:
        """Rate over (now - window, now]; falls back to the default below 2 samples."""
        times = self._arrivals.get(model)
        if not times:
            return self.default_rate_rps
        cutoff = now - self.window
        while times and times[0] <= cutoff:
            times.popleft()
        if len(times) < 2:
            return self.default_rate_rps
        span = times[-1] - times[0]
        if span == 0:
            return self.default_rate_rps
        return (len(times) - 1) * US_PER_S / span


class QueueState:
    """One FIFO queue per model plus the identity of the loaded model."""

    def __init__(self, models: Iterable[str], rates: RateEstimator):
        self.queues: dict[str, deque[Request]] = {name: deque() for name in models}
        self.loaded: Optional[str] = None
        self.rates = rates

    def enqueue(self, request: Request) -> None:
        queue = self.queues.get(request.model)
        if queue is None:
            raise ConfigError(f"request {request.id} targets unknown model {request.model!r}")
        queue.append(request)
        self.rates.observe(request.model, request.arrival)

    def pending(self) -> int:
        return sum(len(q) for q in self.queues.values())


def timer_deadline(
    request: Request,
    sla: SlaPolicy,
    est_load: TimeSpan,
    est_proc: TimeSpan,
    margin: TimeSpan = 0,
) -> TimePoint:
    """Latest safe dispatch instant: arrival + SLA - estimated load/proc - margin.

    When the estimates already exceed the SLA the deadline clamps to the
    arrival itself (fire immediately).
    """
    return request.arrival + deadline_offset(sla, est_load, est_proc, margin)


def deadline_offset(
    sla: SlaPolicy, est_load: TimeSpan, est_proc: TimeSpan, margin: TimeSpan
) -> TimeSpan:
    slack = sla.limit - est_load - est_proc - margin
    if slack < 0:
        logger.warning(
            "SLA %s too small for estimates (load %s + proc %s + margin %s); "
            "timers fire at arrival",
            sla.limit,
            est_load,
            est_proc,
            margin,
        )
        return 0
    return slack


def select_batch_size(
    rate: float,
    sla: SlaPolicy,
    est_load: TimeSpan,
    est_proc: TimeSpan,
    max_batch: int,
) -> int:
    """Largest batch fillable within the SLA at the estimated arrival rate."""
    if rate < 0:
        raise ParameterError(f"rate must be >= 0, got {rate}")
    desired = max(0, sla.limit - est_load - est_proc)
    size = math.floor(rate * desired / US_PER_S)
    return max(1, min(size, max_batch))


@dataclass(frozen=True)
class ModelParams:
    """Per-model constants the decision rules reuse at every decision point."""

    obs: int
    max_batch: int
    est_load: TimeSpan
    est_proc: TimeSpan
    deadline_offset: TimeSpan


def model_params(
    cost_model: CostModel, mode: ExecMode, sla: SlaPolicy, margin: TimeSpan
) -> dict[str, ModelParams]:
    """Precompute OBS, estimates, and timer offsets for every model."""
    params = {}
    for name, costs in cost_model.models.items():
        best = obs(costs.curve)
        est_load = costs.load[mode].load_mean
        est_proc = processing_time(costs.curve, best)
        params[name] = ModelParams(
            obs=best,
            max_batch=costs.curve.max_batch,
            est_load=est_load,
            est_proc=est_proc,
            deadline_offset=deadline_offset(sla, est_load, est_proc, margin),
        )
    return params


def pick_next_model(state: QueueState, eligible: Iterable[str]) -> str:
    """Oldest head request first; ties to the longer queue, then the smaller name."""
    names = list(eligible)
    if not names:
        raise ParameterError("pick_next_model: empty eligible set")
    return min(names, key=lambda m: (state.queues[m][0].arrival, -len(state.queues[m]), m))


def decide(
    state: QueueState,
    strategy: Strategy,
    now: TimePoint,
    cost_model: CostModel,
    mode: ExecMode,
    sla: SlaPolicy,
    params: Optional[dict[str, ModelParams]] = None,
) -> Decision:
    """Choose the next GPU action while it is idle or just became ready.

    Pure: the same (queues, strategy, now, cost model, mode, sla) give the
    same decision; the caller applies the decision to the state.
    """
    if params is None:
        params = model_params(cost_model, mode, sla, strategy.timer_margin)
    eligible: dict[str, int] = {}
    urgent: set[str] = set()
    for name, queue in state.queues.items():
        if not queue:
            continue
        p = params[name]
        if strategy.kind is StrategyKind.SELECT_BATCH_TIMER:
            rate = state.rates.estimate(name, now)
            want = select_batch_size(rate, sla, p.est_load, p.est_proc, p.max_batch)
        else:
            want = p.obs
        if strategy.kind.uses_timer and queue[0].arrival + p.deadline_offset <= now:
            urgent.add(name)
            eligible[name] = min(len(queue), want)
        elif len(queue) >= want:
            eligible[name] = want

    if not eligible:
        if not strategy.kind.uses_timer:
            return Wait()
        next_deadline: Optional[int] = None
        for name, queue in state.queues.items():
            if not queue:
                continue
            deadline = queue[0].arrival + params[name].deadline_offset
            if next_deadline is None or deadline < next_deadline:
                next_deadline = deadline
        return Wait(next_deadline)

    choice = pick_next_model(state, eligible)
    count = eligible[choice]
    if (
        strategy.kind is StrategyKind.BEST_BATCH_PARTIAL_TIMER
        and state.loaded is not None
        and choice != state.loaded
        and choice not in urgent
        and state.queues.get(state.loaded)
    ):
        # Drain one partial batch of the loaded model before swapping away.
        # Deadline-forced swaps proceed immediately; draining only delays
        # swaps triggered by a filled batch, else a busy loaded queue would
        # starve every other model.
        choice = state.loaded
        count = min(len(state.queues[choice]), params[choice].obs)

    assert 1 <= count <= len(state.queues[choice])
    if choice != state.loaded:
        return SwapThenDispatch(choice, count)
    return Dispatch(choice, count)
