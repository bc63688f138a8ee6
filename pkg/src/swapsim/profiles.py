"""Calibration data: load/unload time distributions and batch timing curves.

A cost model file carries, per served model, the mean/std of load and unload
durations in each execution mode plus a profiled batch-size -> processing-time
curve ending at the out-of-memory boundary. The simulator treats this file as
ground truth; the shipped default approximates published measurements and is
documented as an approximation, not as measured data.
"""

from __future__ import annotations

import json
import random
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .domain import (
    ExecMode,
    ModelId,
    OomBoundaryError,
    ParameterError,
    SchemaError,
    TimeSpan,
    seconds,
)


@dataclass(frozen=True)
class LoadProfile:
    model: str
    mode: ExecMode
    load_mean: TimeSpan
    load_std: TimeSpan
    unload_mean: TimeSpan
    unload_std: TimeSpan

    def __post_init__(self) -> None:
        if self.load_mean <= 0 or self.unload_mean <= 0:
            raise SchemaError(f"{self.model}/{self.mode.value}: load/unload means must be > 0")
        if self.load_std < 0 or self.unload_std < 0:
            raise SchemaError(f"{self.model}/{self.mode.value}: stds must be >= 0")


@dataclass(frozen=True)
class BatchCurve:
    """Profiled (batch_size, processing_time) points, strictly increasing in both."""

    model: str
    points: tuple[tuple[int, TimeSpan], ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise SchemaError(f"{self.model}.curve: empty")
        if self.points[0][0] != 1:
            raise SchemaError(f"{self.model}.curve: must contain batch_size 1")
        for (s0, t0), (s1, t1) in zip(self.points, self.points[1:]):
            if s1 <= s0:
                raise SchemaError(f"{self.model}.curve: batch sizes must strictly increase")
            if t1 <= t0:
                raise SchemaError(
                    f"{self.model}.curve: processing_time must strictly increase with batch size"
                )
        if any(t <= 0 for _, t in self.points):
            raise SchemaError(f"{self.model}.curve: processing times must be > 0")

    @property
    def max_batch(self) -> int:
        return self.points[-1][0]


@dataclass(frozen=True)
class ModelCosts:
    info: ModelId
    curve: BatchCurve
    load: Mapping[ExecMode, LoadProfile]


@dataclass(frozen=True)
class CostModel:
    models: Mapping[str, ModelCosts]
    token_len: int = 50

    def costs(self, model: str) -> ModelCosts:
        try:
            return self.models[model]
        except KeyError:
            raise ParameterError(f"unknown model {model!r} in cost model") from None


def obs(curve: BatchCurve) -> int:
    """Profiled batch size maximizing size/time; ties go to the smaller size."""
    best_size, best_time = curve.points[0]
    for size, time in curve.points[1:]:
        # size/time > best_size/best_time, compared exactly in integers
        if size * best_time > best_size * time:
            best_size, best_time = size, time
    return best_size


def peak_throughput(curve: BatchCurve) -> float:
    """Requests/second at the optimal batch size."""
    best = obs(curve)
    return best / (processing_time(curve, best) / 1e6)


def processing_time(curve: BatchCurve, size: int) -> TimeSpan:
    """Processing time for a batch: exact at profiled sizes, linear between them."""
    if size < 1:
        raise ParameterError(f"batch size must be >= 1, got {size}")
    if size > curve.max_batch:
        raise OomBoundaryError(
            f"{curve.model}: batch size {size} exceeds profiled boundary {curve.max_batch}"
        )
    sizes = [s for s, _ in curve.points]
    idx = bisect_left(sizes, size)
    s1, t1 = curve.points[idx]
    if s1 == size:
        return t1
    s0, t0 = curve.points[idx - 1]
    return t0 + round((t1 - t0) * (size - s0) / (s1 - s0))


def _sample_truncated(mean: TimeSpan, std: TimeSpan, rng: random.Random) -> TimeSpan:
    if std == 0:
        return mean
    floor = max(1, round(mean / 10))
    draw = round(rng.normalvariate(mean, std))
    return max(floor, draw)


def sample_load(profile: LoadProfile, rng: random.Random) -> TimeSpan:
    """Draw a load duration: Normal(mean, std) truncated below at mean/10."""
    return _sample_truncated(profile.load_mean, profile.load_std, rng)


def sample_unload(profile: LoadProfile, rng: random.Random) -> TimeSpan:
    return _sample_truncated(profile.unload_mean, profile.unload_std, rng)


def _require(entry: dict, key: str, where: str):
    if key not in entry:
        raise SchemaError(f"{where}: missing {key!r}")
    return entry[key]


def _load_profile(entry: dict, model: str, mode: ExecMode, where: str) -> LoadProfile:
    values = {}
    for key in ("load_mean_s", "load_std_s", "unload_mean_s", "unload_std_s"):
        raw = _require(entry, key, where)
        if not isinstance(raw, (int, float)) or raw < 0:
            raise SchemaError(f"{where}.{key}: expected a non-negative number, got {raw!r}")
        values[key] = seconds(raw)
    return LoadProfile(
        model,
        mode,
        values["load_mean_s"],
        values["load_std_s"],
        values["unload_mean_s"],
        values["unload_std_s"],
    )


def parse_cost_model(doc: dict) -> CostModel:
    if not isinstance(doc, dict):
        raise SchemaError("cost model: top level must be an object")
    entries = _require(doc, "models", "cost model")
    if not isinstance(entries, list) or not entries:
        raise SchemaError("models: expected a non-empty array")
    token_len = doc.get("token_len", 50)
    if not isinstance(token_len, int) or token_len <= 0:
        raise SchemaError(f"token_len: expected a positive integer, got {token_len!r}")
    models: dict[str, ModelCosts] = {}
    for i, entry in enumerate(entries):
        where = f"models[{i}]"
        name = _require(entry, "name", where)
        if not isinstance(name, str) or not name:
            raise SchemaError(f"{where}.name: expected a non-empty string")
        if any(ch in name for ch in ',"\r\n'):
            raise SchemaError(f"{where}.name: {name!r} contains CSV-hostile characters")
        if name in models:
            raise SchemaError(f"{where}.name: duplicate model {name!r}")
        where = f"models[{i}] ({name})"
        size_gb = entry.get("size_gb", 0.0)
        raw_curve = _require(entry, "curve", where)
        if not isinstance(raw_curve, list):
            raise SchemaError(f"{where}.curve: expected an array of [size, seconds] pairs")
        points = []
        for pair in raw_curve:
            if not isinstance(pair, list) or len(pair) != 2:
                raise SchemaError(f"{where}.curve: expected [size, seconds] pairs")
            size, proc_s = pair
            if not isinstance(size, int) or size < 1:
                raise SchemaError(f"{where}.curve: batch sizes must be positive integers")
            if not isinstance(proc_s, (int, float)) or proc_s <= 0:
                raise SchemaError(f"{where}.curve: processing seconds must be positive")
            points.append((size, seconds(proc_s)))
        curve = BatchCurve(name, tuple(points))
        load = {}
        for mode, key in ((ExecMode.CC, "cc"), (ExecMode.NOCC, "nocc")):
            raw = entry.get(key)
            if raw is None:
                raise SchemaError(f"{where}: missing {key!r} profile")
            load[mode] = _load_profile(raw, name, mode, f"{where}.{key}")
        models[name] = ModelCosts(ModelId(name, float(size_gb)), curve, MappingProxyType(load))
    return CostModel(MappingProxyType(models), token_len)


class ConfigFileMissing(SchemaError):
    """Raised when a referenced calibration/config file does not exist."""


def load_cost_model(path: Path | str) -> CostModel:
    path = Path(path)
    if not path.exists():
        raise ConfigFileMissing(f"cost model file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return parse_cost_model(doc)
