"""Experiment parameters for the two-interferometer gravitational entanglement set-up."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

GRAVITATIONAL_CONSTANT = 6.674e-11  # m^3 kg^-1 s^-2
REDUCED_PLANCK = 1.054571817e-34  # J s

PARALLEL_ANGLES = (3 * math.pi / 2, math.pi / 2)
LINEAR_ANGLES = (0.0, 0.0)
SETUPS = {"parallel": PARALLEL_ANGLES, "linear": LINEAR_ANGLES}

TWO_PI = 2 * math.pi


class ConfigError(ValueError):
    """Invalid experiment parameter. ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    """All physical and geometric parameters of one run, in SI units.

    ``theta_1`` and ``theta_2`` rotate each interferometer arm about its
    innermost superposition instance; ``(3pi/2, pi/2)`` is the parallel
    set-up and ``(0, 0)`` the linear one.
    """

    dimension: int = 2
    superposition_width: float = 250e-6
    min_distance: float = 200e-6
    mass_1: float = 1e-14
    mass_2: float = 1e-14
    hold_time: float = 2.5
    decoherence_rate: float = 0.0
    theta_1: float = PARALLEL_ANGLES[0]
    theta_2: float = PARALLEL_ANGLES[1]
    gravitational_constant: float = GRAVITATIONAL_CONSTANT
    reduced_planck: float = REDUCED_PLANCK

    def __post_init__(self):
        if isinstance(self.dimension, bool) or int(self.dimension) != self.dimension:
            raise ConfigError("dimension", f"must be an integer, got {self.dimension!r}")
        object.__setattr__(self, "dimension", int(self.dimension))
        for f in dataclasses.fields(self):
            if f.name == "dimension":
                continue
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f.name, f"must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(f.name, "must be finite")
            object.__setattr__(self, f.name, float(value))

        if self.dimension < 2:
            raise ConfigError("dimension", "must be >= 2")
        # zero width is allowed: it is the degenerate no-splitting limit
        if self.superposition_width < 0:
            raise ConfigError("superposition_width", "must be >= 0")
        positive = ("min_distance", "mass_1", "mass_2", "gravitational_constant", "reduced_planck")
        for key in positive:
            if getattr(self, key) <= 0:
                raise ConfigError(key, "must be > 0")
        for key in ("hold_time", "decoherence_rate"):
            if getattr(self, key) < 0:
                raise ConfigError(key, "must be >= 0")
        for key in ("theta_1", "theta_2"):
            if not 0.0 <= getattr(self, key) < TWO_PI:
                raise ConfigError(key, "must lie in [0, 2pi)")

    @classmethod
    def parallel(cls, **overrides) -> "ExperimentConfig":
        return cls(theta_1=PARALLEL_ANGLES[0], theta_2=PARALLEL_ANGLES[1], **overrides)

    @classmethod
    def linear(cls, **overrides) -> "ExperimentConfig":
        return cls(theta_1=LINEAR_ANGLES[0], theta_2=LINEAR_ANGLES[1], **overrides)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
        return cls(**data)

    @property
    def spacing(self) -> float:
        """Distance between neighbouring instances of one qudit."""
        return self.superposition_width / (self.dimension - 1)


def wrap_angle(theta: float) -> float:
    """Map an angle into [0, 2pi)."""
    wrapped = math.fmod(theta, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    # fmod of values just below 2pi can round up to exactly 2pi
    return 0.0 if wrapped >= TWO_PI else wrapped
