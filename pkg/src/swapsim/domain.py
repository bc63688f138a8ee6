"""Core vocabulary: microsecond clocks, execution modes, requests, and SLAs.

All times are integer microseconds so repeated runs replay bit-identically on
any platform; conversion to seconds happens only at the CSV boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

US_PER_S = 1_000_000

# Integer microseconds since run start (TimePoint) or a non-negative
# integer duration (TimeSpan).
TimePoint = int
TimeSpan = int


class ParameterError(ValueError):
    """A generator or operation was given an out-of-range parameter."""


class ConfigError(ValueError):
    """A run configuration references something that does not exist."""


class SchemaError(ValueError):
    """A calibration or config file failed validation; message carries the field path."""


class OomBoundaryError(RuntimeError):
    """A batch size beyond the profiled out-of-memory boundary was requested."""


def seconds(value: float) -> TimeSpan:
    """Convert seconds to integer microseconds (nearest tick)."""
    return round(value * US_PER_S)


def to_seconds(ticks: int) -> float:
    return ticks / US_PER_S


def fmt_seconds(ticks: int) -> str:
    """Render a tick count as seconds with exactly 6 decimals, without float noise."""
    sign = "-" if ticks < 0 else ""
    ticks = abs(ticks)
    return f"{sign}{ticks // US_PER_S}.{ticks % US_PER_S:06d}"


class ExecMode(enum.Enum):
    CC = "cc"
    NOCC = "nocc"

    @classmethod
    def parse(cls, text: str) -> "ExecMode":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ConfigError(f"mode: expected 'cc' or 'nocc', got {text!r}") from None


@dataclass(frozen=True)
class ModelId:
    """A served model: unique name plus informational weight size."""

    name: str
    size_gb: float = 0.0


@dataclass(slots=True)
class Request:
    """One inference demand against a named model.

    ``dispatch`` is stamped when the request's batch starts inference,
    ``completion`` when that batch finishes. ``batch_id`` ties the request to
    its batch; unfulfilled requests keep all three unset.
    """

    id: int
    model: str
    arrival: TimePoint
    dispatch: Optional[TimePoint] = None
    completion: Optional[TimePoint] = None
    batch_id: Optional[int] = None


@dataclass(frozen=True)
class SlaPolicy:
    limit: TimeSpan

    def __post_init__(self) -> None:
        if self.limit <= 0:
            raise ParameterError(f"sla limit must be positive, got {self.limit}")


def latency_of(request: Request) -> Optional[TimeSpan]:
    """End-to-end latency of a completed request; None while unfulfilled."""
    if request.completion is None:
        return None
    return request.completion - request.arrival


def meets_sla(request: Request, sla: SlaPolicy) -> bool:
    """True iff the request completed within the SLA limit (inclusive)."""
    latency = latency_of(request)
    return latency is not None and latency <= sla.limit
