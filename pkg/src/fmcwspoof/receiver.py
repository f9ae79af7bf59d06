"""Victim signal chain: dechirped IF synthesis, range/Doppler FFTs and measurement helpers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousAngleError, ConfigurationError
from .scene import RxArray
from .waveforms import C0, ChirpConfig, FrameConfig, WindowKind, WindowSpec, bin_axes


class EmitterKind(str, enum.Enum):
    REFLECTION = "reflection"
    ATTACKER = "attacker"


@dataclass(frozen=True)
class EmissionEvent:
    """One chirp arriving at victim antenna 0.

    The arrival time is ``t_ref + delay``. Keeping the two parts separate lets
    a reflection reference its victim chirp start exactly, so the sub-femtosecond
    delay changes that carry Doppler phase are not lost to rounding of absolute
    frame times. The signal's phase is ``phase`` at the arrival instant.
    """

    kind: EmitterKind
    t_ref: float
    delay: float
    f_start: float
    slope: float
    duration: float
    amplitude: float
    phase: float = 0.0
    azimuth: float = 0.0
    source: str = ""

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigurationError(f"event duration must be positive, got {self.duration}")
        if self.amplitude < 0:
            raise ConfigurationError("event amplitude must be non-negative")

    @property
    def start(self) -> float:
        return self.t_ref + self.delay


@dataclass(frozen=True)
class ReceiverConfig:
    """Receiver front-end and processing knobs.

    ``if_bandwidth`` is the brick-wall IF low-pass cutoff (Hz); ``None`` means
    Nyquist of the complex ADC, ``f_adc / 2``. With ``band_gate`` set, input
    whose RF frequency lies outside the victim's own sweep ``[f_s, f_s + b]``
    is rejected sample by sample.
    """

    if_bandwidth: float | None = None
    band_gate: bool = True
    noise_std: float = 0.0
    range_window: WindowKind = WindowKind.HANN
    doppler_window: WindowKind = WindowKind.RECTANGULAR
    n_angle_bins: int = 64
    clock_drift_ppm: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "range_window", WindowKind(self.range_window))
        object.__setattr__(self, "doppler_window", WindowKind(self.doppler_window))
        if self.if_bandwidth is not None and not self.if_bandwidth > 0:
            raise ConfigurationError(f"if_bandwidth must be positive, got {self.if_bandwidth}")
        if self.noise_std < 0:
            raise ConfigurationError("noise_std must be non-negative")
        if self.n_angle_bins < 1:
            raise ConfigurationError("n_angle_bins must be >= 1")

    def cutoff(self, chirp: ChirpConfig) -> float:
        return chirp.f_adc / 2.0 if self.if_bandwidth is None else self.if_bandwidth


@dataclass
class IFDataCube:
    """Complex IF samples indexed ``[chirp][rx][sample]``."""

    samples: np.ndarray
    chirp: ChirpConfig
    frame: FrameConfig
    rx: RxArray

    def __post_init__(self):
        expected = (self.frame.n_chirps, self.rx.n_rx, self.chirp.n_samples)
        if self.samples.shape != expected:
            raise ConfigurationError(f"cube shape {self.samples.shape} does not match configs {expected}")
        if not np.all(np.isfinite(self.samples)):
            raise ConfigurationError("cube contains non-finite samples")


@dataclass
class RangeDopplerMap:
    """Complex spectra indexed ``[range bin][velocity bin][rx]``; velocity is fft-shifted."""

    spectrum: np.ndarray
    range_axis: np.ndarray
    velocity_axis: np.ndarray

    @property
    def power(self) -> np.ndarray:
        """Square-law power averaged over receive channels, ``[range][velocity]``."""
        return np.mean(np.abs(self.spectrum) ** 2, axis=2)

    @property
    def zero_velocity_bin(self) -> int:
        return self.spectrum.shape[1] // 2


def _frac(x: float) -> float:
    return x - math.floor(x)


def synthesize_if(
    chirp_start: float,
    events,
    chirp: ChirpConfig,
    rx: RxArray,
    receiver: ReceiverConfig | None = None,
) -> np.ndarray:
    """Dechirped IF of one victim chirp, shape ``(n_rx, n_samples)``.

    Each event contributes ``A * exp(j * (phi_v(t) - phi_e(t)))`` at the samples
    where it is present, its beat ``|f_v - f_e|`` is within the IF cutoff and
    (optionally) its RF frequency is inside the victim's sweep. Receive antenna
    ``m`` adds the plane-wave phase lead for the event's azimuth.
    """
    receiver = receiver or ReceiverConfig()
    u = chirp.sample_times()
    out = np.zeros((rx.n_rx, chirp.n_samples), dtype=np.complex128)
    cutoff = receiver.cutoff(chirp)
    f_v, s_v = chirp.f_s, chirp.slope
    lam = chirp.wavelength
    m = np.arange(rx.n_rx)

    for ev in events:
        delta = (ev.t_ref - chirp_start) + ev.delay
        if delta >= chirp.t_c or delta + ev.duration <= 0.0:
            continue
        s_e = ev.slope
        dk = s_v - s_e
        beat0 = (f_v - ev.f_start) + s_e * delta
        beat = beat0 + dk * u
        mask = (u >= delta) & (u < delta + ev.duration) & (np.abs(beat) <= cutoff)
        if receiver.band_gate:
            rf = (ev.f_start - f_v) + s_e * (u - delta)
            mask &= (rf >= 0.0) & (rf <= chirp.b)
        if not mask.any():
            continue
        c0 = _frac(math.fmod(ev.f_start * delta, 1.0) - _frac(0.5 * s_e * delta * delta))
        phase = 2.0 * np.pi * (c0 + beat0 * u + 0.5 * dk * u * u) - ev.phase
        tone = np.where(mask, ev.amplitude * np.exp(1j * phase), 0.0)
        steer = np.exp(1j * 2.0 * np.pi * m * rx.spacing * math.sin(ev.azimuth) / lam)
        out += steer[:, None] * tone[None, :]
    return out


def range_fft(cube: IFDataCube, window: WindowSpec | None = None) -> np.ndarray:
    """Windowed DFT along fast time; returns ``[chirp][rx][range bin]``."""
    n = cube.chirp.n_samples
    window = window or WindowSpec(WindowKind.HANN, n)
    if window.length != n:
        raise ConfigurationError(f"window length {window.length} != n_samples {n}")
    return np.fft.fft(cube.samples * window.weights(), axis=-1)


def doppler_fft(
    range_spectra: np.ndarray,
    chirp: ChirpConfig,
    frame: FrameConfig,
    window: WindowSpec | None = None,
) -> RangeDopplerMap:
    """DFT across chirps per range bin and rx, fft-shifted so zero velocity is centred."""
    n_chirps = range_spectra.shape[0]
    if n_chirps != frame.n_chirps:
        raise ConfigurationError(f"{n_chirps} chirps supplied, frame declares {frame.n_chirps}")
    window = window or WindowSpec(WindowKind.RECTANGULAR, n_chirps)
    if window.length != n_chirps:
        raise ConfigurationError(f"window length {window.length} != n_chirps {n_chirps}")
    w = window.weights()[:, None, None]
    spec = np.fft.fftshift(np.fft.fft(range_spectra * w, axis=0), axes=0)
    range_axis, velocity_axis = bin_axes(chirp, frame)
    return RangeDopplerMap(np.transpose(spec, (2, 0, 1)), range_axis, velocity_axis)


def process_cube(cube: IFDataCube, receiver: ReceiverConfig | None = None) -> RangeDopplerMap:
    receiver = receiver or ReceiverConfig()
    spectra = range_fft(cube, WindowSpec(receiver.range_window, cube.chirp.n_samples))
    return doppler_fft(spectra, cube.chirp, cube.frame, WindowSpec(receiver.doppler_window, cube.frame.n_chirps))


def estimate_velocity(dphi: float, wavelength: float, chirp_period: float) -> float:
    """Radial velocity from the chirp-to-chirp phase step."""
    return wavelength * dphi / (4.0 * math.pi * chirp_period)


def estimate_aoa(phases, spacing: float, wavelength: float) -> float:
    """Azimuth from the phase progression across receive antennas.

    ``phases`` is either the phase step between neighbouring antennas or the
    per-antenna phases; for the latter the step is the least-squares slope of
    the unwrapped phases against antenna index.
    """
    arr = np.atleast_1d(np.asarray(phases, dtype=float))
    if arr.size == 1:
        dphi = float(arr[0])
    else:
        unwrapped = np.unwrap(arr)
        dphi = float(np.polyfit(np.arange(arr.size), unwrapped, 1)[0])
    arg = wavelength * dphi / (2.0 * math.pi * spacing)
    if abs(arg) > 1.0:
        if abs(arg) - 1.0 > 1e-12:
            raise AmbiguousAngleError(f"phase step {dphi:g} rad has no real angle (sin = {arg:g})")
        arg = math.copysign(1.0, arg)
    return math.asin(arg)


def range_from_beat(s_tau: float, slope: float) -> float:
    return C0 * s_tau / (2.0 * slope)


def beat_to_bin(beat: float, chirp: ChirpConfig) -> int:
    """Range-FFT bin where a tone of frequency ``beat`` peaks (negative beats wrap)."""
    return int(round(beat * chirp.n_samples / chirp.f_adc)) % chirp.n_samples


def angle_spectrum(snapshot: np.ndarray, n_bins: int) -> np.ndarray:
    """Zero-padded spatial DFT across receive antennas, shifted so broadside is centred.

    Bin ``k`` (after the shift, index ``k + n_bins // 2``) corresponds to an
    inter-antenna phase step of ``2*pi*k/n_bins``.
    """
    n_rx = snapshot.shape[-1]
    size = max(n_bins, n_rx)
    return np.fft.fftshift(np.fft.fft(snapshot, n=size, axis=-1), axes=-1)


def angle_axis(n_bins: int, spacing: float, wavelength: float) -> tuple[np.ndarray, np.ndarray]:
    """Phase step and azimuth for each shifted angle bin (NaN outside the visible region)."""
    k = np.arange(n_bins) - n_bins // 2
    dphi = 2.0 * np.pi * k / n_bins
    s = wavelength * dphi / (2.0 * np.pi * spacing)
    with np.errstate(invalid="ignore"):
        theta = np.where(np.abs(s) <= 1.0, np.arcsin(np.clip(s, -1.0, 1.0)), np.nan)
    return dphi, theta
