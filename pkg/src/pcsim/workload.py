"""Trace-driven synthetic workloads.

A trace maps time to a weighted mix of instruction classes; each class carries
an effective-capacitance multiplier (power density) and an IPC. Four synthetic
generators cover the control corner cases: sustained maximum power, idle,
slowly-varying random blends, and fast high/low switching that stresses the
power limiter below the control period.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfTrace

SEGMENT_EPS_S = 1e-12


@dataclass(frozen=True)
class InstructionClass:
    name: str
    ceff_multiplier: float  # scales the core's baseline effective capacitance
    ipc: float  # instructions per cycle

    def __post_init__(self):
        if self.ceff_multiplier <= 0 or self.ipc <= 0:
            raise ValueError(f"class {self.name}: ceff_multiplier and ipc must be > 0")


DEFAULT_CLASSES: dict[str, InstructionClass] = {
    c.name: c
    for c in (
        InstructionClass("idle", 0.1, 0.2),
        InstructionClass("scalar", 0.5, 1.0),
        InstructionClass("mixed-mem", 0.7, 0.8),
        InstructionClass("vecmax", 1.0, 2.0),
    )
}

WSYNTH_KINDS = ("max", "idle", "mix", "fast")


@dataclass(frozen=True)
class WorkloadSample:
    """Per-instant reduction of a trace segment: mix-weighted coefficients."""

    ceff_mult: float
    ipc: float


@dataclass
class Segment:
    duration_s: float
    mix: dict[str, float]  # class name -> weight, weights sum to 1

    def validate(self, classes: dict[str, InstructionClass]):
        if self.duration_s <= 0:
            raise ValueError("segment durations must be > 0")
        if not self.mix or any(w < 0 for w in self.mix.values()):
            raise ValueError("mix weights must be >= 0 and non-empty")
        if abs(sum(self.mix.values()) - 1.0) > 1e-9:
            raise ValueError("mix weights must sum to 1")
        for name in self.mix:
            if name not in classes:
                raise ValueError(f"unknown instruction class {name!r}")


class WorkloadTrace:
    """Ordered segments; immutable after construction, freely shareable."""

    def __init__(
        self,
        segments: list[Segment],
        looping: bool = False,
        classes: dict[str, InstructionClass] | None = None,
    ):
        self.classes = dict(classes or DEFAULT_CLASSES)
        if not segments:
            raise ValueError("a trace needs at least one segment")
        for seg in segments:
            seg.validate(self.classes)
        self.segments = list(segments)
        self.looping = looping
        durations = np.array([s.duration_s for s in segments])
        self._ends = np.cumsum(durations)
        self.total_duration_s = float(self._ends[-1])
        self._ceff = np.array([self._weighted(s, "ceff_multiplier") for s in segments])
        self._ipc = np.array([self._weighted(s, "ipc") for s in segments])

    def _weighted(self, seg: Segment, attr: str) -> float:
        return sum(w * getattr(self.classes[name], attr) for name, w in seg.mix.items())

    def segment_boundaries_s(self) -> np.ndarray:
        """Cumulative segment end times, last equals total_duration_s."""
        return self._ends.copy()

    def mean_ceff_mult(self) -> float:
        """Duration-weighted average power-density multiplier."""
        durations = np.diff(self._ends, prepend=0.0)
        return float(np.dot(durations, self._ceff) / self.total_duration_s)


def sample_at(trace: WorkloadTrace, t_s: float) -> WorkloadSample:
    """Mix-weighted sample of the segment containing t (left-closed intervals)."""
    if t_s < 0:
        raise OutOfTrace(f"t={t_s} is before the trace start")
    if trace.looping:
        t_s = t_s % trace.total_duration_s
    elif t_s >= trace.total_duration_s:
        raise OutOfTrace(f"t={t_s}s beyond non-looping trace of {trace.total_duration_s}s")
    idx = int(np.searchsorted(trace._ends, t_s + SEGMENT_EPS_S, side="right"))
    idx = min(idx, len(trace.segments) - 1)
    return WorkloadSample(float(trace._ceff[idx]), float(trace._ipc[idx]))


def gen_wsynth(
    kind: str,
    duration_s: float,
    seed: int,
    mix_period_s: float = 0.010,
    fast_period_s: float = 200e-6,
) -> WorkloadTrace:
    """Generate one of the four synthetic workload kinds.

    max/idle are single full-weight segments of the extreme classes; mix
    alternates randomized blends on a slow period; fast alternates between the
    power-density extremes on a short period (starting phase drawn from the
    seed).
    """
    kind = kind.lower()
    if kind not in WSYNTH_KINDS:
        raise ValueError(f"unknown wsynth kind {kind!r}; expected one of {WSYNTH_KINDS}")
    if duration_s <= 0:
        raise ValueError("duration must be > 0")
    rng = np.random.default_rng(seed)

    if kind == "max":
        return WorkloadTrace([Segment(duration_s, {"vecmax": 1.0})], looping=True)
    if kind == "idle":
        return WorkloadTrace([Segment(duration_s, {"idle": 1.0})], looping=True)

    if kind == "mix":
        names = list(DEFAULT_CLASSES)
        segments = []
        t = 0.0
        while t < duration_s - SEGMENT_EPS_S:
            d = min(mix_period_s, duration_s - t)
            weights = rng.dirichlet(np.ones(len(names)))
            segments.append(Segment(d, dict(zip(names, weights.tolist()))))
            t += d
        return WorkloadTrace(segments, looping=True)

    # fast: strict alternation between the ceff extremes
    high_first = bool(rng.integers(0, 2))
    segments = []
    t = 0.0
    i = 0
    while t < duration_s - SEGMENT_EPS_S:
        d = min(fast_period_s, duration_s - t)
        name = "vecmax" if (i % 2 == 0) == high_first else "idle"
        segments.append(Segment(d, {name: 1.0}))
        t += d
        i += 1
    return WorkloadTrace(segments, looping=True)


def trace_to_json(trace: WorkloadTrace) -> str:
    doc = {
        "looping": trace.looping,
        "classes": [
            {"name": c.name, "ceff_multiplier": c.ceff_multiplier, "ipc": c.ipc}
            for c in trace.classes.values()
        ],
        "segments": [{"duration_s": s.duration_s, "mix": s.mix} for s in trace.segments],
    }
    return json.dumps(doc, indent=2)


def trace_from_json(text: str) -> WorkloadTrace:
    doc = json.loads(text)
    classes = {
        c["name"]: InstructionClass(c["name"], c["ceff_multiplier"], c["ipc"])
        for c in doc.get("classes", [])
    } or None
    segments = [Segment(s["duration_s"], dict(s["mix"])) for s in doc["segments"]]
    return WorkloadTrace(segments, looping=bool(doc.get("looping", False)), classes=classes)
