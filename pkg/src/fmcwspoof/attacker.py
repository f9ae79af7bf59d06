"""Attacker emission schedules and the ghost predictions used as test oracles.

Non-synchronized and noise planners only ever see a :class:`VictimPublic`,
the victim parameters an attacker can learn from datasheets. Synchronized
planners are privileged and receive the victim's chirp start times
explicitly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, PlanError, PredictionError
from .receiver import EmissionEvent, EmitterKind
from .scene import AttackerPlacement, attacker_path
from .waveforms import C0, ChirpConfig, FrameConfig


class AttackMode(str, enum.Enum):
    SYNCHRONIZED = "synchronized"
    FREQ_OFFSET = "freq_offset"
    NON_SYNCHRONIZED = "non_synchronized"
    NOISE = "noise"


PRIVILEGED_MODES = frozenset({AttackMode.SYNCHRONIZED, AttackMode.FREQ_OFFSET})


@dataclass(frozen=True)
class VictimPublic:
    """What an attacker knows about the victim: chirp and frame parameters only."""

    f_s: float
    b: float
    t_c: float
    n_chirps: int
    t_frame: float

    @classmethod
    def from_configs(cls, chirp: ChirpConfig, frame: FrameConfig) -> "VictimPublic":
        return cls(chirp.f_s, chirp.b, chirp.t_c, frame.n_chirps, frame.t_frame)

    @property
    def slope(self) -> float:
        return self.b / self.t_c

    @property
    def chirp_period(self) -> float:
        return self.t_frame / self.n_chirps


@dataclass(frozen=True)
class AttackPlan:
    """One attacker emission stream.

    ``tau_a`` is the intended delay (synchronized and frequency-offset modes;
    ``delta_f_a`` may be given instead for the latter). ``T_a`` is the
    attacker's own chirp period (non-synchronized mode). ``start_offset`` is
    when the attacker's first chirp leaves its antenna, relative to the
    victim frame start; the attacker itself does not know this value.
    ``time_jitter`` bounds the uniform per-chirp emission jitter in noise mode
    and ``frequency_offset`` shifts the centre of its start-frequency jitter.
    """

    mode: AttackMode
    gain: float = 1.0
    tau_a: float = 0.0
    delta_f_a: float | None = None
    T_a: float | None = None
    start_offset: float = 0.0
    drift_ppm: float = 0.0
    jitter_bound: float = 0.0
    time_jitter: float = 0.0
    frequency_offset: float = 0.0
    seed: int = 0
    random_phase: bool = False
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "mode", AttackMode(self.mode))
        if self.gain < 0:
            raise ConfigurationError(f"attack gain must be non-negative, got {self.gain}")
        if self.jitter_bound < 0 or self.time_jitter < 0:
            raise ConfigurationError("jitter bounds must be non-negative")
        if self.mode is AttackMode.NON_SYNCHRONIZED and not (self.T_a is not None and self.T_a > 0):
            raise ConfigurationError("non-synchronized plans need a positive T_a")

    @property
    def privileged(self) -> bool:
        return self.mode in PRIVILEGED_MODES

    @property
    def name(self) -> str:
        return self.label or self.mode.value


@dataclass
class GhostPrediction:
    """Where a plan's virtual object should appear.

    ``delays`` holds the effective delay of the nearest attacker chirp for
    every victim chirp (reference antenna); ``visible`` marks chirps whose
    beat passes the victim's IF filter.
    """

    expected_range: float
    expected_velocity: float
    azimuths: tuple
    delays: np.ndarray
    visible: np.ndarray
    doppler_velocity: float
    beat: float
    label: str = ""
    extra: dict = field(default_factory=dict)


def _tx_paths(placement: AttackerPlacement):
    return [attacker_path(placement, i) for i in range(placement.n_tx)]


def _phases(plan_seed: int, count: int, random_phase: bool) -> np.ndarray:
    if not random_phase:
        return np.zeros(count)
    rng = np.random.default_rng([plan_seed, 0x5EED])
    return rng.uniform(0.0, 2.0 * np.pi, count)


def _check_tau(tau_a: float, victim: VictimPublic) -> None:
    if not 0.0 <= tau_a < victim.t_c:
        raise PlanError(f"tau_a={tau_a:g} s lies outside the victim listening window [0, {victim.t_c:g})")


def plan_synchronized(
    tau_a: float,
    victim: VictimPublic,
    chirp_starts,
    placement: AttackerPlacement,
    gain: float = 1.0,
    random_phase: bool = False,
    seed: int = 0,
    label: str = "synchronized",
) -> list[EmissionEvent]:
    """Victim-identical chirps arriving ``tau_a`` after each victim chirp start.

    Emission is back-computed from the reference antenna's propagation delay;
    other TX antennas inherit their small path differences.
    """
    _check_tau(tau_a, victim)
    ref_delay = placement.distance / C0
    paths = _tx_paths(placement)
    phases = _phases(seed, len(chirp_starts), random_phase)
    events = []
    for n, t_n in enumerate(chirp_starts):
        for i, (delay, scale) in enumerate(paths):
            events.append(EmissionEvent(
                kind=EmitterKind.ATTACKER,
                t_ref=float(t_n),
                delay=tau_a + (delay - ref_delay),
                f_start=victim.f_s,
                slope=victim.slope,
                duration=victim.t_c,
                amplitude=gain * scale,
                phase=float(phases[n]),
                azimuth=placement.antenna_azimuth(i),
                source=f"{label}:tx{i}",
            ))
    return events


def freq_offset_start(tau_a: float, victim: VictimPublic) -> float:
    """Start frequency ``f_a`` such that ``f_s = f_a + S * tau_a``."""
    return victim.f_s - victim.slope * tau_a


def plan_freq_offset(
    tau_a: float,
    victim: VictimPublic,
    chirp_starts,
    placement: AttackerPlacement,
    gain: float = 1.0,
    random_phase: bool = False,
    seed: int = 0,
    label: str = "freq_offset",
) -> list[EmissionEvent]:
    """Chirps arriving together with the victim's but starting ``S * tau_a`` lower in frequency."""
    _check_tau(tau_a, victim)
    f_a = freq_offset_start(tau_a, victim)
    ref_delay = placement.distance / C0
    paths = _tx_paths(placement)
    phases = _phases(seed, len(chirp_starts), random_phase)
    events = []
    for n, t_n in enumerate(chirp_starts):
        for i, (delay, scale) in enumerate(paths):
            events.append(EmissionEvent(
                kind=EmitterKind.ATTACKER,
                t_ref=float(t_n),
                delay=delay - ref_delay,
                f_start=f_a,
                slope=victim.slope,
                duration=victim.t_c,
                amplitude=gain * scale,
                phase=float(phases[n]),
                azimuth=placement.antenna_azimuth(i),
                source=f"{label}:tx{i}",
            ))
    return events


def attacker_emission_times(
    period: float, start_offset: float, drift_ppm: float, until: float, earliest: float = 0.0
) -> np.ndarray:
    """Emission instants of a free-running attacker clock covering ``[earliest, until)``."""
    step = period * (1.0 + drift_ppm * 1e-6)
    if not step > 0:
        raise ConfigurationError(f"effective attacker period must be positive, got {step}")
    first = max(0, math.floor((earliest - start_offset) / step))
    last = max(first, math.ceil((until - start_offset) / step))
    i = np.arange(first, last + 1)
    return start_offset + i * step


def plan_non_synchronized(
    T_a: float,
    start_offset: float,
    victim: VictimPublic,
    placement: AttackerPlacement,
    gain: float = 1.0,
    drift_ppm: float = 0.0,
    random_phase: bool = False,
    seed: int = 0,
    label: str = "non_synchronized",
) -> list[EmissionEvent]:
    """Free-running chirps every ``T_a`` for the whole frame; the victim's gating decides what lands."""
    if not T_a > 0:
        raise PlanError(f"T_a must be positive, got {T_a}")
    times = attacker_emission_times(T_a, start_offset, drift_ppm, victim.t_frame, earliest=-victim.t_c)
    paths = _tx_paths(placement)
    phases = _phases(seed, times.size, random_phase)
    events = []
    for j, t_e in enumerate(times):
        for i, (delay, scale) in enumerate(paths):
            events.append(EmissionEvent(
                kind=EmitterKind.ATTACKER,
                t_ref=float(t_e),
                delay=delay,
                f_start=victim.f_s,
                slope=victim.slope,
                duration=victim.t_c,
                amplitude=gain * scale,
                phase=float(phases[j]),
                azimuth=placement.antenna_azimuth(i),
                source=f"{label}:tx{i}",
            ))
    return events


def plan_noise(
    jitter_bound: float,
    seed: int,
    victim: VictimPublic,
    placement: AttackerPlacement,
    gain: float = 1.0,
    start_offset: float = 0.0,
    drift_ppm: float = 0.0,
    time_jitter: float = 0.0,
    frequency_offset: float = 0.0,
    label: str = "noise",
) -> list[EmissionEvent]:
    """One chirp per victim chirp slot with a random start frequency ``f_s + u``.

    ``u`` is uniform in ``[-jitter_bound, +jitter_bound]`` around
    ``frequency_offset``. The slot period is the public ``t_frame / N``; the
    emission of chirp ``i`` is additionally delayed by a uniform draw from
    ``[0, time_jitter)``.
    """
    rng = np.random.default_rng(seed)
    n = victim.n_chirps
    step = victim.chirp_period * (1.0 + drift_ppm * 1e-6)
    u = rng.uniform(-jitter_bound, jitter_bound, n) if jitter_bound > 0 else np.zeros(n)
    jitter = rng.uniform(0.0, time_jitter, n) if time_jitter > 0 else np.zeros(n)
    paths = _tx_paths(placement)
    events = []
    for k in range(n):
        t_e = start_offset + k * step + jitter[k]
        for i, (delay, scale) in enumerate(paths):
            events.append(EmissionEvent(
                kind=EmitterKind.ATTACKER,
                t_ref=float(t_e),
                delay=delay,
                f_start=victim.f_s + frequency_offset + float(u[k]),
                slope=victim.slope,
                duration=victim.t_c,
                amplitude=gain * scale,
                azimuth=placement.antenna_azimuth(i),
                source=f"{label}:tx{i}",
            ))
    return events


def effective_tau(plan: AttackPlan, victim: VictimPublic) -> float:
    """Intended delay of a privileged plan (``delta_f_a`` wins for frequency offset)."""
    if plan.mode is AttackMode.FREQ_OFFSET and plan.delta_f_a is not None:
        return plan.delta_f_a / victim.slope
    return plan.tau_a


def build_events(plan: AttackPlan, victim: VictimPublic, placement: AttackerPlacement, chirp_starts=None):
    """Dispatch a plan to its planner. Only privileged modes receive ``chirp_starts``."""
    if plan.privileged:
        if chirp_starts is None:
            raise PlanError(f"{plan.mode.value} plans need the victim chirp start times")
        fn = plan_synchronized if plan.mode is AttackMode.SYNCHRONIZED else plan_freq_offset
        return fn(effective_tau(plan, victim), victim, chirp_starts, placement, plan.gain,
                  plan.random_phase, plan.seed, plan.name)
    if plan.mode is AttackMode.NON_SYNCHRONIZED:
        return plan_non_synchronized(plan.T_a, plan.start_offset, victim, placement, plan.gain,
                                     plan.drift_ppm, plan.random_phase, plan.seed, plan.name)
    return plan_noise(plan.jitter_bound, plan.seed, victim, placement, plan.gain, plan.start_offset,
                      plan.drift_ppm, plan.time_jitter, plan.frequency_offset, plan.name)


def delay_step(chirp_period: float, attacker_period: float) -> float:
    """Per-victim-chirp change of the nearest attacker chirp's delay (clock drift excluded)."""
    r = math.fmod(chirp_period, attacker_period)
    return -r if r < attacker_period / 2.0 else attacker_period - r


def schedule_delays(chirp_starts, arrivals) -> np.ndarray:
    """Offset of the nearest arrival to every victim chirp start."""
    starts = np.asarray(chirp_starts, dtype=float)
    arrivals = np.sort(np.asarray(arrivals, dtype=float))
    idx = np.searchsorted(arrivals, starts)
    lo = np.clip(idx - 1, 0, arrivals.size - 1)
    hi = np.clip(idx, 0, arrivals.size - 1)
    d_lo = arrivals[lo] - starts
    d_hi = arrivals[hi] - starts
    return np.where(np.abs(d_lo) <= np.abs(d_hi), d_lo, d_hi)


def predict_ghosts(
    plan: AttackPlan,
    placement: AttackerPlacement,
    chirp: ChirpConfig,
    frame: FrameConfig,
    chirp_starts,
    if_cutoff: float | None = None,
) -> GhostPrediction:
    """Expected range, velocity and per-antenna azimuths of the plan's ghost.

    Range follows from the mean visible delay (``c0 * tau / 2``), velocity from
    the per-chirp delay slope (``c0 * d_tau / (2 * T_c)``).
    """
    if plan.mode is AttackMode.NOISE:
        raise PredictionError("noise plans do not create a predictable ghost")
    victim = VictimPublic.from_configs(chirp, frame)
    starts = np.asarray(chirp_starts, dtype=float)
    cutoff = chirp.f_adc / 2.0 if if_cutoff is None else if_cutoff
    ref_delay = placement.distance / C0

    if plan.privileged:
        tau = effective_tau(plan, victim)
        _check_tau(tau, victim)
        delays = np.full(starts.size, tau)
    else:
        times = attacker_emission_times(plan.T_a, plan.start_offset, plan.drift_ppm, frame.t_frame,
                                        earliest=-chirp.t_c)
        delays = schedule_delays(starts, times + ref_delay)

    visible = (np.abs(chirp.slope * delays) <= cutoff) & (delays > -chirp.t_c) & (delays < chirp.t_c)
    if not visible.any():
        raise PredictionError(f"ghost of plan {plan.name!r} is not visible in any victim chirp")
    n = np.arange(starts.size)
    tau_mean = float(np.mean(delays[visible]))
    if visible.sum() >= 2 and np.ptp(delays[visible]) > 0:
        slope = float(np.polyfit(n[visible], delays[visible], 1)[0])
    else:
        slope = 0.0
    period = frame.chirp_period
    velocity = C0 * slope / (2.0 * period)
    # what the Doppler FFT sees: the carrier phase step wrapped into (-pi, pi]
    dphi = 2.0 * math.pi * math.fmod(chirp.f_s * slope, 1.0)
    dphi = (dphi + math.pi) % (2.0 * math.pi) - math.pi
    doppler_velocity = chirp.wavelength * dphi / (4.0 * math.pi * period)
    azimuths = tuple(placement.antenna_azimuth(i) for i in range(placement.n_tx))
    return GhostPrediction(
        expected_range=C0 * tau_mean / 2.0,
        expected_velocity=velocity,
        azimuths=azimuths,
        delays=np.where(visible, delays, np.nan),
        visible=visible,
        doppler_velocity=doppler_velocity,
        beat=chirp.slope * tau_mean,
        label=plan.name,
    )
