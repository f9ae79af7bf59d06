"""Chirp and frame parameterisations, derived quantities and window functions.

All derivations are pure functions of their inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

C0 = 299_792_458.0  # speed of light, m/s


def derive_slope(b: float, t_c: float) -> float:
    """Chirp ramp rate in Hz/s for bandwidth ``b`` swept in ``t_c`` seconds."""
    if not b > 0 or not t_c > 0:
        raise ConfigurationError(f"bandwidth and chirp duration must be positive (b={b}, t_c={t_c})")
    return b / t_c


def range_resolution(b: float) -> float:
    """Smallest separable range difference, ``c0 / 2b``."""
    if not b > 0:
        raise ConfigurationError(f"bandwidth must be positive, got {b}")
    return C0 / (2.0 * b)


@dataclass(frozen=True)
class ChirpConfig:
    """A single saw-tooth chirp as seen by the ADC.

    Sampling spans exactly the ramp-up, so ``f_adc * t_c == n_samples``.
    """

    f_s: float = 77e9
    b: float = 1e9
    t_c: float = 512e-6
    n_samples: int = 2048

    def __post_init__(self):
        derive_slope(self.b, self.t_c)
        if not self.f_s > 0:
            raise ConfigurationError(f"start frequency must be positive, got {self.f_s}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ConfigurationError(f"n_samples must be a positive integer, got {self.n_samples}")

    @property
    def slope(self) -> float:
        return derive_slope(self.b, self.t_c)

    @property
    def f_adc(self) -> float:
        return self.n_samples / self.t_c

    @property
    def wavelength(self) -> float:
        return C0 / self.f_s

    def sample_times(self) -> np.ndarray:
        """ADC sample instants relative to the chirp start."""
        return np.arange(self.n_samples) / self.f_adc


@dataclass(frozen=True)
class FrameConfig:
    n_chirps: int = 50
    t_frame: float = 0.2

    def __post_init__(self):
        if int(self.n_chirps) != self.n_chirps or self.n_chirps < 1:
            raise ConfigurationError(f"n_chirps must be a positive integer, got {self.n_chirps}")
        if not self.t_frame > 0:
            raise ConfigurationError(f"frame duration must be positive, got {self.t_frame}")

    @property
    def chirp_period(self) -> float:
        return self.t_frame / self.n_chirps

    def check_fits(self, chirp: ChirpConfig) -> None:
        """Raise unless every ramp fits inside its chirp slot."""
        if self.chirp_period < chirp.t_c:
            raise ConfigurationError(
                f"chirp period {self.chirp_period:g} s is shorter than the ramp t_c={chirp.t_c:g} s"
            )


class WindowKind(str, enum.Enum):
    RECTANGULAR = "rectangular"
    HANN = "hann"


def hann_window(n: int) -> np.ndarray:
    """Symmetric Hann window ``0.5 * (1 - cos(2*pi*i/(n-1)))``; ``[1.0]`` for n == 1."""
    if n < 1:
        raise ConfigurationError(f"window length must be >= 1, got {n}")
    if n == 1:
        return np.ones(1)
    i = np.arange(n)
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * i / (n - 1)))
    # mirror so the result is exactly symmetric
    half = (n + 1) // 2
    w[n - half:] = w[:half][::-1]
    return w


@dataclass(frozen=True)
class WindowSpec:
    kind: WindowKind = WindowKind.HANN
    length: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", WindowKind(self.kind))
        if self.length < 1:
            raise ConfigurationError(f"window length must be >= 1, got {self.length}")

    def weights(self) -> np.ndarray:
        if self.kind is WindowKind.HANN:
            return hann_window(self.length)
        return np.ones(self.length)


def bin_axes(chirp: ChirpConfig, frame: FrameConfig, wavelength: float | None = None):
    """Physical labels for range-FFT and (shifted) Doppler-FFT bins.

    Returns ``(range_axis, velocity_axis)``. Range bin ``k`` sits at
    ``k * c0 * f_adc / (2 * S * n_samples)``. Velocity bins follow the
    fft-shifted ordering, so the zero-velocity bin is at index ``N // 2``.
    """
    lam = chirp.wavelength if wavelength is None else wavelength
    if not lam > 0:
        raise ConfigurationError(f"wavelength must be positive, got {lam}")
    width = C0 * chirp.f_adc / (2.0 * chirp.slope * chirp.n_samples)
    range_axis = np.arange(chirp.n_samples) * width
    n = frame.n_chirps
    m = np.arange(n) - n // 2
    # phase step 2*pi*m/N per chirp -> v = lam * step / (4*pi*T_c)
    velocity_axis = lam * (2.0 * np.pi * m / n) / (4.0 * np.pi * frame.chirp_period)
    return range_axis, velocity_axis


def range_bin_width(chirp: ChirpConfig) -> float:
    return C0 * chirp.f_adc / (2.0 * chirp.slope * chirp.n_samples)


def velocity_bin_width(chirp: ChirpConfig, frame: FrameConfig, wavelength: float | None = None) -> float:
    lam = chirp.wavelength if wavelength is None else wavelength
    return lam / (2.0 * frame.n_chirps * frame.chirp_period)
