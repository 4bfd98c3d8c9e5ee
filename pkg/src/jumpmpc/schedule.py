"""Contact schedules: phase sequencing and adaptive sampling grids.

A jump is a fixed sequence of phases (all-leg contact, rear-leg contact,
flight, and optionally landing) with per-phase sampling intervals: the
fine contact interval for any phase with feet on the ground and the
coarse flight interval mid-air. Sample instants mark the start of one
model transition; the grid of a segment runs [start, start+dt, ...,
end-dt] so phase boundaries land exactly on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

DT_CONTACT = 0.025
DT_FLIGHT = 0.100

_TIME_EPS = 1e-9


class Phase(Enum):
    ALL_CONTACT = "AC"
    REAR_CONTACT = "RC"
    FLIGHT = "F"
    LANDING = "L"

    @property
    def in_contact(self) -> bool:
        return self is not Phase.FLIGHT

    @property
    def stance_legs(self) -> tuple[int, ...]:
        # leg 0 = front, leg 1 = rear
        if self is Phase.FLIGHT:
            return ()
        if self is Phase.REAR_CONTACT:
            return (1,)
        return (0, 1)


@dataclass(frozen=True)
class PhaseSegment:
    phase: Phase
    duration: float
    dt: float

    def __post_init__(self):
        if self.duration <= 0.0 or self.dt <= 0.0:
            raise ValueError("segment duration and dt must be positive")
        steps = self.duration / self.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ValueError(
                f"{self.phase.name} duration {self.duration} not divisible by dt {self.dt}")
        expected = DT_FLIGHT if self.phase is Phase.FLIGHT else DT_CONTACT
        if not np.isclose(self.dt, expected):
            raise ValueError(f"{self.phase.name} must use dt {expected}, got {self.dt}")

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass
class PhaseSchedule:
    segments: list[PhaseSegment]

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def segment_starts(self) -> list[float]:
        starts, t = [], 0.0
        for s in self.segments:
            starts.append(t)
            t += s.duration
        return starts

    def phase_at(self, t: float) -> Phase:
        """Phase owning time t (segments are right-open; the final instant
        belongs to the last segment)."""
        acc = 0.0
        for s in self.segments:
            acc += s.duration
            if t < acc - _TIME_EPS:
                return s.phase
        return self.segments[-1].phase

    def dt_at(self, t: float) -> float:
        return DT_FLIGHT if self.phase_at(t) is Phase.FLIGHT else DT_CONTACT

    def sample_grid(self):
        """All transition-start instants and their phases, plus the
        terminal instant appended with the final phase."""
        times, phases = [], []
        t = 0.0
        for s in self.segments:
            for k in range(s.steps):
                times.append(t + k * s.dt)
                phases.append(s.phase)
            t += s.duration
        times.append(t)
        phases.append(self.segments[-1].phase)
        return np.array(times), phases

    def swing_fraction(self, leg: int) -> float:
        swing = sum(s.duration for s in self.segments
                    if leg not in s.phase.stance_legs)
        return swing / self.total_duration

    def time_of_phase(self, phase: Phase) -> float:
        """Start time of the first segment with the given phase."""
        t = 0.0
        for s in self.segments:
            if s.phase is phase:
                return t
            t += s.duration
        raise ValueError(f"schedule has no {phase.name} segment")


def make_schedule(t_all_contact: float = 0.5, t_rear_contact: float = 0.3,
                  t_flight: float = 0.4) -> PhaseSchedule:
    """Single-jump schedule; defaults are 500/300/400 ms."""
    segments = []
    if t_all_contact > 0:
        segments.append(PhaseSegment(Phase.ALL_CONTACT, t_all_contact, DT_CONTACT))
    if t_rear_contact > 0:
        segments.append(PhaseSegment(Phase.REAR_CONTACT, t_rear_contact, DT_CONTACT))
    if t_flight > 0:
        segments.append(PhaseSegment(Phase.FLIGHT, t_flight, DT_FLIGHT))
    if not segments:
        raise ValueError("empty schedule")
    return PhaseSchedule(segments)
