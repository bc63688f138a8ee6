"""Single-GPU multi-model batch inference simulator with model swapping.

Compares CC and No-CC execution modes, whose cost profiles differ chiefly in
model load time, across traffic patterns, scheduling strategies, and SLAs.
"""

from .domain import (
    ExecMode,
    ModelId,
    Request,
    SlaPolicy,
    latency_of,
    meets_sla,
    seconds,
    to_seconds,
)
from .engine import RunResult, run, simulated_backend
from .profiles import (
    BatchCurve,
    CostModel,
    LoadProfile,
    load_cost_model,
    obs,
    processing_time,
    sample_load,
    sample_unload,
)
from .scheduler import Strategy, StrategyKind, decide, select_batch_size, timer_deadline
from .traffic import (
    ArrivalTrace,
    Pattern,
    TrafficSpec,
    assign_models,
    gen_bursty,
    gen_gamma,
    gen_ramp,
    realized_mean,
)

__all__ = [
    "ArrivalTrace",
    "BatchCurve",
    "CostModel",
    "ExecMode",
    "LoadProfile",
    "ModelId",
    "Pattern",
    "Request",
    "RunResult",
    "SlaPolicy",
    "Strategy",
    "StrategyKind",
    "TrafficSpec",
    "assign_models",
    "decide",
    "gen_bursty",
    "gen_gamma",
    "gen_ramp",
    "latency_of",
    "load_cost_model",
    "meets_sla",
    "obs",
    "processing_time",
    "realized_mean",
    "run",
    "sample_load",
    "sample_unload",
    "seconds",
    "select_batch_size",
    "simulated_backend",
    "timer_deadline",
    "to_seconds",
]

__version__ = "0.1.0"
