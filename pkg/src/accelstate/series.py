"""Core data types: accelerometer streams, ethogram, annotations, segments."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

DEFAULT_RATE_HZ = 25.0
DEFAULT_SENSITIVITY_G = 8.0


class Behaviour(enum.Enum):
    LYING = "lying"
    EATING = "eating"
    MOVING = "moving"
    GROOMING = "grooming"
    WALKING = "walking"
    DRINKING = "drinking"


class StateLabel(enum.Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"

    @property
    def is_positive(self) -> bool:
        # Inactive is the positive class throughout evaluation.
        return self is StateLabel.INACTIVE


_STATE_OF = {
    Behaviour.LYING: StateLabel.INACTIVE,
    Behaviour.EATING: StateLabel.INACTIVE,
    Behaviour.DRINKING: StateLabel.INACTIVE,
    Behaviour.MOVING: StateLabel.ACTIVE,
    Behaviour.GROOMING: StateLabel.ACTIVE,
    Behaviour.WALKING: StateLabel.ACTIVE,
}


def map_behaviour_to_state(b: Behaviour) -> StateLabel:
    return _STATE_OF[b]


class AccelSample(NamedTuple):
    t: float
    ax: float
    ay: float
    az: float


@dataclass(frozen=True, eq=False)
class TriaxialSeries:
    """One animal's accelerometer stream, in g.

    Timestamps are held as the values read from the device plus an
    accumulated clock correction, so shifting by ``+d`` then ``-d`` restores
    the original timestamps bit for bit.
    """

    animal_id: str
    t_device: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    sample_rate_hz: float = DEFAULT_RATE_HZ
    sensitivity_g: float = DEFAULT_SENSITIVITY_G
    clock_offset_s: float = 0.0

    def __post_init__(self) -> None:
        for name in ("t_device", "ax", "ay", "az"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.t_device)
        if not (len(self.ax) == len(self.ay) == len(self.az) == n):
            raise ValueError("time and axis arrays must have equal length")

    @property
    def t(self) -> np.ndarray:
        if self.clock_offset_s == 0.0:
            return self.t_device
        return self.t_device + self.clock_offset_s

    @property
    def xyz(self) -> np.ndarray:
        return np.column_stack([self.ax, self.ay, self.az])

    def __len__(self) -> int:
        return len(self.t_device)

    def sample(self, i: int) -> AccelSample:
        return AccelSample(float(self.t[i]), float(self.ax[i]), float(self.ay[i]), float(self.az[i]))

    def same_samples(self, other: TriaxialSeries) -> bool:
        """Bitwise equality of timestamps and axes plus metadata."""
        return (
            self.animal_id == other.animal_id
            and self.sample_rate_hz == other.sample_rate_hz
            and self.sensitivity_g == other.sensitivity_g
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.ax, other.ax)
            and np.array_equal(self.ay, other.ay)
            and np.array_equal(self.az, other.az)
        )

    @classmethod
    def from_arrays(
        cls,
        t,
        xyz,
        animal_id: str = "",
        sample_rate_hz: float = DEFAULT_RATE_HZ,
        sensitivity_g: float = DEFAULT_SENSITIVITY_G,
    ) -> TriaxialSeries:
        xyz = np.asarray(xyz, dtype=np.float64)
        return cls(animal_id, np.asarray(t, dtype=np.float64), xyz[:, 0], xyz[:, 1], xyz[:, 2], sample_rate_hz, sensitivity_g)


@dataclass(frozen=True)
class AnnotationEvent:
    animal_id: str
    sequence_id: str
    start_t: float
    end_t: float
    behaviour: Behaviour

    @property
    def state(self) -> StateLabel:
        return map_behaviour_to_state(self.behaviour)


@dataclass(frozen=True)
class LabeledSegment:
    """Half-open sample index range ``[start, stop)`` sharing one state."""

    animal_id: str
    sequence_id: str
    start: int
    stop: int
    state: StateLabel

    def __len__(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class LabeledWindow:
    animal_id: str
    sequence_id: str
    window_size_s: int
    start: int
    n_samples: int
    state: StateLabel
    start_t: float = field(default=float("nan"), compare=False)

    @property
    def stop(self) -> int:
        return self.start + self.n_samples
