"""Arrival-trace synthesis for the gamma, bursty, and ramp traffic shapes.

The three generators are mean-matched: each targets the same long-run
requests-per-second so patterns can be compared at equal load.

  - gamma: i.i.d. gamma inter-arrival gaps with shape k and scale 1/(rate*k),
    so the mean gap is 1/rate. Shapes below 1 give the irregular
    rapid-burst-then-quiet texture typical of human-driven traffic.
  - bursty: windows of length `period`; the first `duty` fraction of each
    window carries a Poisson stream at rate/duty, the rest is silent.
  - ramp: inhomogeneous Poisson with a triangular rate profile peaking at
    2*rate (so the triangle area integrates to rate*duration), sampled by
    thinning against the peak.

Every trace is a pure function of (spec, seed).
"""

from __future__ import annotations

import csv
import enum
import random
from bisect import bisect_right
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .domain import US_PER_S, ParameterError, TimeSpan, fmt_seconds, seconds


class Pattern(enum.Enum):
    GAMMA = "gamma"
    BURSTY = "bursty"
    RAMP = "ramp"

    @classmethod
    def parse(cls, text: str) -> "Pattern":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ParameterError(
                f"pattern: expected one of gamma/bursty/ramp, got {text!r}"
            ) from None


DEFAULT_DURATION = seconds(1200)
DEFAULT_GAMMA_SHAPE = 0.5
DEFAULT_BURST_PERIOD = seconds(120)
DEFAULT_BURST_DUTY = 0.25
DEFAULT_RAMP_PEAK_FRACTION = 0.5


@dataclass(frozen=True)
class TrafficSpec:
    pattern: Pattern
    mean_rps: float
    duration: TimeSpan = DEFAULT_DURATION
    gamma_shape: float = DEFAULT_GAMMA_SHAPE
    burst_period: TimeSpan = DEFAULT_BURST_PERIOD
    burst_duty: float = DEFAULT_BURST_DUTY
    ramp_peak_fraction: float = DEFAULT_RAMP_PEAK_FRACTION
    model_mix: tuple[tuple[str, float], ...] = ()

    def validate(self) -> None:
        if self.mean_rps <= 0:
            raise ParameterError(f"mean_rps must be positive, got {self.mean_rps}")
        if self.duration <= 0:
            raise ParameterError(f"duration must be positive, got {self.duration}")
        if self.pattern is Pattern.GAMMA and self.gamma_shape <= 0:
            raise ParameterError(f"gamma_shape must be positive, got {self.gamma_shape}")
        if self.pattern is Pattern.BURSTY:
            if not 0 < self.burst_duty <= 1:
                raise ParameterError(f"burst_duty must be in (0, 1], got {self.burst_duty}")
            if not 0 < self.burst_period <= self.duration:
                raise ParameterError(
                    f"burst_period must be in (0, duration], got {self.burst_period}"
                )
        if self.pattern is Pattern.RAMP and not 0 < self.ramp_peak_fraction < 1:
            raise ParameterError(
                f"ramp_peak_fraction must be in (0, 1), got {self.ramp_peak_fraction}"
            )
        if self.model_mix:
            validate_mix(self.model_mix)


def validate_mix(model_mix: Sequence[tuple[str, float]]) -> None:
    if not model_mix:
        raise ParameterError("model_mix must not be empty")
    total = 0.0
    for name, weight in model_mix:
        if weight < 0:
            raise ParameterError(f"model_mix weight for {name!r} is negative")
        total += weight
    if abs(total - 1.0) > 1e-9:
        raise ParameterError(f"model_mix weights must sum to 1, got {total}")


@dataclass(frozen=True)
class ArrivalTrace:
    """Sorted (arrival_tick, model_name) pairs over [0, duration)."""

    arrivals: tuple[tuple[int, str], ...]
    duration: TimeSpan
    seed: Optional[int] = None
    spec: Optional[TrafficSpec] = None

    def __len__(self) -> int:
        return len(self.arrivals)


def realized_mean(trace: ArrivalTrace) -> float:
    """Observed requests per second: count / duration."""
    if not trace.arrivals:
        return 0.0
    return len(trace.arrivals) * US_PER_S / trace.duration


def gen_gamma(
    mean_rps: float,
    duration: TimeSpan = DEFAULT_DURATION,
    shape: float = DEFAULT_GAMMA_SHAPE,
    seed: int = 0,
) -> ArrivalTrace:
    spec = TrafficSpec(Pattern.GAMMA, mean_rps, duration, gamma_shape=shape)
    spec.validate()
    rng = random.Random(seed)
    scale_s = 1.0 / (mean_rps * shape)
    arrivals = []
    t = 0
    while True:
        t += max(0, round(rng.gammavariate(shape, scale_s) * US_PER_S))
        if t >= duration:
            break
        arrivals.append((t, ""))
    return ArrivalTrace(tuple(arrivals), duration, seed, spec)


def gen_bursty(
    mean_rps: float,
    duration: TimeSpan = DEFAULT_DURATION,
    period: TimeSpan = DEFAULT_BURST_PERIOD,
    duty: float = DEFAULT_BURST_DUTY,
    seed: int = 0,
) -> ArrivalTrace:
    spec = TrafficSpec(Pattern.BURSTY, mean_rps, duration, burst_period=period, burst_duty=duty)
    spec.validate()
    rng = random.Random(seed)
    rate_in_burst = mean_rps / duty
    burst_len = duty * period
    arrivals = []
    window_start = 0
    while window_start < duration:
        # Poisson stream confined to [window_start, window_start + duty*period).
        offset_s = 0.0
        while True:
            offset_s += rng.expovariate(rate_in_burst)
            offset = round(offset_s * US_PER_S)
            if offset >= burst_len:
                break
            t = window_start + offset
            if t >= duration:
                break
            arrivals.append((t, ""))
        window_start += period
    arrivals.sort(key=lambda a: a[0])
    return ArrivalTrace(tuple(arrivals), duration, seed, spec)


def gen_ramp(
    mean_rps: float,
    duration: TimeSpan = DEFAULT_DURATION,
    peak_fraction: float = DEFAULT_RAMP_PEAK_FRACTION,
    seed: int = 0,
) -> ArrivalTrace:
    spec = TrafficSpec(Pattern.RAMP, mean_rps, duration, ramp_peak_fraction=peak_fraction)
    spec.validate()
    rng = random.Random(seed)
    lam_peak = 2.0 * mean_rps
    total_s = duration / US_PER_S
    peak_s = peak_fraction * total_s
    arrivals = []
    t_s = 0.0
    while True:
        t_s += rng.expovariate(lam_peak)
        if t_s >= total_s:
            break
        if t_s <= peak_s:
            lam_t = lam_peak * t_s / peak_s
        else:
            lam_t = lam_peak * (total_s - t_s) / (total_s - peak_s)
        if rng.random() < lam_t / lam_peak:
            t = round(t_s * US_PER_S)
            if t < duration:
                arrivals.append((t, ""))
    return ArrivalTrace(tuple(arrivals), duration, seed, spec)


def generate(spec: TrafficSpec, seed: int) -> ArrivalTrace:
    """Generate arrivals for `spec`; model assignment is a separate pass."""
    spec.validate()
    if spec.pattern is Pattern.GAMMA:
        trace = gen_gamma(spec.mean_rps, spec.duration, spec.gamma_shape, seed)
    elif spec.pattern is Pattern.BURSTY:
        trace = gen_bursty(spec.mean_rps, spec.duration, spec.burst_period, spec.burst_duty, seed)
    else:
        trace = gen_ramp(spec.mean_rps, spec.duration, spec.ramp_peak_fraction, seed)
    return replace(trace, spec=spec)


def assign_models(
    trace: ArrivalTrace, model_mix: Sequence[tuple[str, float]], seed: int
) -> ArrivalTrace:
    """Assign each arrival a model drawn independently from the weighted mix."""
    validate_mix(model_mix)
    names = [name for name, _ in model_mix]
    cumulative = []
    acc = 0.0
    for _, weight in model_mix:
        acc += weight
        cumulative.append(acc)
    cumulative[-1] = 1.0
    rng = random.Random(seed)
    assigned = tuple(
        (arrival, names[bisect_right(cumulative, rng.random())])
        for arrival, _ in trace.arrivals
    )
    return replace(trace, arrivals=assigned)


def write_trace(trace: ArrivalTrace, path: Path | str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["arrival_s", "model"])
        for arrival, model in trace.arrivals:
            writer.writerow([fmt_seconds(arrival), model])


def load_trace(path: Path | str, duration: Optional[TimeSpan] = None) -> ArrivalTrace:
    arrivals = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "arrival_s" not in reader.fieldnames:
            raise ParameterError(f"{path}: missing 'arrival_s' column")
        for row in reader:
            arrivals.append((seconds(float(row["arrival_s"])), row.get("model") or ""))
    if any(b < a for (a, _), (b, _) in zip(arrivals, arrivals[1:])):
        raise ParameterError(f"{path}: arrivals are not sorted")
    if duration is None:
        last = arrivals[-1][0] if arrivals else 0
        duration = (last // US_PER_S + 1) * US_PER_S
    return ArrivalTrace(tuple(arrivals), duration)
