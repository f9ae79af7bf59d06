"""Physical world description: reflectors, the attacker's antennas and the victim array.

Coordinates are in the victim's horizontal plane: x along the victim
boresight, y to the side. Azimuth is ``atan2(y, x)``. Receive antenna
``m`` sits at ``y = m * spacing``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigurationError, ScenarioError
from .waveforms import C0


@dataclass(frozen=True)
class Reflector:
    """Point scatterer moving radially at constant speed (positive = receding)."""

    range: float
    radial_velocity: float = 0.0
    azimuth: float = 0.0
    reflectivity: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not self.range > 0:
            raise ConfigurationError(f"reflector range must be positive, got {self.range}")
        if not abs(self.azimuth) < math.pi / 2:
            raise ConfigurationError(f"reflector azimuth must be inside (-pi/2, pi/2), got {self.azimuth}")
        if self.reflectivity < 0:
            raise ConfigurationError("reflectivity must be non-negative")

    def range_at(self, t: float) -> float:
        d = self.range + self.radial_velocity * t
        if not d > 0:
            raise ScenarioError(f"reflector {self.name or self.range!r} passed through the radar at t={t:g} s")
        return d


@dataclass(frozen=True)
class AttackerPlacement:
    """Where the attacker sits and where its TX antennas are.

    ``distance`` and ``azimuth`` locate the reference antenna as seen from
    the victim. Offsets are ``(l_x, l_y)`` in the attacker's frame: ``l_x``
    points from the attacker toward the victim, ``l_y`` is lateral.
    """

    distance: float = 4.0
    azimuth: float = 0.0
    tx_antenna_offsets: tuple = ((0.0, 0.0),)

    def __post_init__(self):
        offsets = tuple((float(lx), float(ly)) for lx, ly in self.tx_antenna_offsets)
        object.__setattr__(self, "tx_antenna_offsets", offsets)
        if not self.distance > 0:
            raise ConfigurationError(f"attacker distance must be positive, got {self.distance}")
        if not offsets:
            raise ConfigurationError("attacker needs at least one TX antenna")
        for lx, ly in offsets:
            if math.hypot(lx, ly) > 0.1 * self.distance:
                raise ConfigurationError(
                    f"TX antenna offset ({lx}, {ly}) exceeds 10% of the attacker distance {self.distance}"
                )

    @property
    def n_tx(self) -> int:
        return len(self.tx_antenna_offsets)

    def antenna_position(self, index: int) -> tuple[float, float]:
        if not 0 <= index < self.n_tx:
            raise ConfigurationError(f"TX antenna index {index} out of range for {self.n_tx} antennas")
        lx, ly = self.tx_antenna_offsets[index]
        ca, sa = math.cos(self.azimuth), math.sin(self.azimuth)
        x = self.distance * ca - lx * ca - ly * sa
        y = self.distance * sa - lx * sa + ly * ca
        return x, y

    def antenna_azimuth(self, index: int) -> float:
        x, y = self.antenna_position(index)
        return math.atan2(y, x)


@dataclass(frozen=True)
class RxArray:
    n_rx: int = 16
    spacing: float = C0 / 77e9 / 2.0

    def __post_init__(self):
        if int(self.n_rx) != self.n_rx or self.n_rx < 1:
            raise ConfigurationError(f"n_rx must be a positive integer, got {self.n_rx}")
        if not self.spacing > 0:
            raise ConfigurationError(f"rx spacing must be positive, got {self.spacing}")


@dataclass(frozen=True)
class Scene:
    reflectors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "reflectors", tuple(self.reflectors))


def reflection_delay(r: Reflector, t: float) -> float:
    """Round-trip delay of a reflection leaving the victim at time ``t``."""
    return 2.0 * r.range_at(t) / C0


def reflection_amplitude(r: Reflector, t: float) -> float:
    """Received amplitude; power falls as 1/d^4 so amplitude as 1/d^2."""
    d = r.range_at(t)
    return r.reflectivity / (d * d)


def attacker_path(placement: AttackerPlacement, antenna_index: int) -> tuple[float, float]:
    """One-way ``(delay, amplitude scale)`` from a TX antenna to victim antenna 0."""
    x, y = placement.antenna_position(antenna_index)
    d_eff = math.hypot(x, y)
    return d_eff / C0, 1.0 / d_eff


def rx_phase_shift(azimuth: float, antenna: int, spacing: float, wavelength: float) -> float:
    """Phase lead of receive antenna ``antenna`` over antenna 0 for a plane wave from ``azimuth``."""
    return 2.0 * math.pi * antenna * spacing * math.sin(azimuth) / wavelength
