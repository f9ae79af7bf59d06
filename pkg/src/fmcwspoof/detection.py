"""CFAR detection (cell-averaging and ordered-statistic) and grouping into objects.

The detectors operate on square-law (linear power) cells along the last
axis. ``nc`` counts reference cells only; ``guard`` guard cells sit on each
side of the cell under test and are excluded from the noise estimate.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage, optimize
from scipy.special import gammaln

from .errors import ConfigurationError, NumericError
from .receiver import RangeDopplerMap, angle_spectrum, estimate_aoa
from .scene import RxArray
from .waveforms import ChirpConfig


class CfarAlgorithm(str, enum.Enum):
    CA = "CA"
    OS = "OS"


def ca_scale(nc: int, pfa: float) -> float:
    """Threshold multiplier on the reference-cell mean for a target false-alarm rate."""
    if nc < 1:
        raise ConfigurationError(f"nc must be >= 1, got {nc}")
    if not 0.0 < pfa < 1.0:
        raise ConfigurationError(f"P_FA must lie in (0, 1), got {pfa}")
    return nc * (pfa ** (-1.0 / nc) - 1.0)


def _check_os(nc: int, k: int) -> None:
    if nc < 1 or not 1 <= k <= nc:
        raise ConfigurationError(f"OS order k must satisfy 1 <= k <= nc (k={k}, nc={nc})")


def os_pfa(nc: int, k: int, sc: float) -> float:
    """False-alarm probability of OS-CFAR with threshold ``sc * X_(k)`` on exponential noise.

    ``k * C(nc, k) * (k-1)! * (sc+nc-k)! / (sc+nc)!`` with factorials of
    non-integer arguments taken through the gamma function. Whole-number
    scales are evaluated in exact rational arithmetic.
    """
    _check_os(nc, k)
    if sc < 0:
        raise ConfigurationError(f"scale must be non-negative, got {sc}")
    if float(sc).is_integer() and sc + nc <= 1000:
        s = int(sc)
        num = k * math.comb(nc, k) * math.factorial(k - 1) * math.factorial(s + nc - k)
        return float(Fraction(num, math.factorial(s + nc)))
    log_binom = gammaln(nc + 1) - gammaln(k + 1) - gammaln(nc - k + 1)
    log_p = math.log(k) + log_binom + gammaln(k) + gammaln(sc + nc - k + 1) - gammaln(sc + nc + 1)
    return float(math.exp(log_p))


def os_solve_scale(nc: int, k: int, pfa: float, tol: float = 1e-10) -> float:
    """Scale factor giving ``os_pfa(nc, k, sc) == pfa``."""
    _check_os(nc, k)
    if not 0.0 < pfa < 1.0:
        raise ConfigurationError(f"P_FA must lie in (0, 1), got {pfa}")

    def excess(sc):
        return os_pfa(nc, k, sc) - pfa

    hi = 1.0
    for _ in range(200):
        if excess(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NumericError(f"could not bracket OS scale for P_FA={pfa}")
    try:
        sc = optimize.brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    except RuntimeError as exc:
        raise NumericError(f"OS scale search did not converge: {exc}") from exc
    if abs(excess(sc)) > tol:
        raise NumericError(f"OS scale residual {excess(sc):.3e} exceeds {tol:g}")
    return sc


@dataclass(frozen=True)
class CfarConfig:
    """One CFAR detector.

    ``sc`` overrides the scale derived from ``pfa``. ``k`` defaults to
    ``round(0.75 * nc)`` for OS.
    """

    algorithm: CfarAlgorithm = CfarAlgorithm.CA
    nc: int = 80
    guard: int = 1
    pfa: float = 0.39
    sc: float | None = None
    k: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", CfarAlgorithm(self.algorithm))
        if self.nc < 2 or self.nc % 2:
            raise ConfigurationError(f"nc must be even and >= 2, got {self.nc}")
        if self.guard < 1:
            raise ConfigurationError(f"guard must be >= 1, got {self.guard}")
        if not 0.0 < self.pfa < 1.0:
            raise ConfigurationError(f"P_FA must lie in (0, 1), got {self.pfa}")
        if self.sc is not None and not self.sc > 0:
            raise ConfigurationError(f"explicit scale must be positive, got {self.sc}")
        if self.algorithm is CfarAlgorithm.OS:
            _check_os(self.nc, self.order)

    @property
    def order(self) -> int:
        return int(round(0.75 * self.nc)) if self.k is None else int(self.k)

    @property
    def scale(self) -> float:
        if self.sc is not None:
            return float(self.sc)
        if self.algorithm is CfarAlgorithm.CA:
            return ca_scale(self.nc, self.pfa)
        return os_solve_scale(self.nc, self.order, self.pfa)

    @property
    def min_index(self) -> int:
        """First cell with a full reference window."""
        return self.nc // 2 + self.guard

    def with_algorithm(self, algorithm) -> "CfarConfig":
        return replace(self, algorithm=CfarAlgorithm(algorithm))


def _reference_cells(cells: np.ndarray, cfg: CfarConfig) -> np.ndarray:
    half = cfg.nc // 2
    span = cfg.nc + 2 * cfg.guard + 1
    win = sliding_window_view(cells, span, axis=-1)
    return np.concatenate([win[..., :half], win[..., span - half:]], axis=-1)


def noise_estimate(cells: np.ndarray, cfg: CfarConfig) -> np.ndarray:
    """Per-cell noise estimate; NaN where the reference window does not fit."""
    cells = np.asarray(cells, dtype=float)
    n = cells.shape[-1]
    if n <= cfg.nc + 2 * cfg.guard:
        raise ConfigurationError(f"{n} cells is too short for nc={cfg.nc}, guard={cfg.guard}")
    if np.any(cells < 0):
        raise ConfigurationError("CFAR cells must be non-negative square-law values")
    out = np.full(cells.shape, np.nan)
    lo, hi = cfg.min_index, n - cfg.min_index
    # chunk along the cell axis to bound the (cells x nc) working set
    step = max(1, 4_000_000 // max(1, cfg.nc * int(np.prod(cells.shape[:-1]))))
    for start in range(0, hi - lo, step):
        stop = min(hi - lo, start + step)
        seg = cells[..., start: stop + 2 * cfg.min_index]
        ref = _reference_cells(seg, cfg)
        if cfg.algorithm is CfarAlgorithm.CA:
            est = ref.sum(axis=-1) / cfg.nc
        else:
            k = cfg.order
            est = np.partition(ref, k - 1, axis=-1)[..., k - 1]
        out[..., lo + start: lo + stop] = est
    return out


def cfar_threshold(cells: np.ndarray, cfg: CfarConfig) -> np.ndarray:
    return cfg.scale * noise_estimate(cells, cfg)


def cfar_detect(cells: np.ndarray, cfg: CfarConfig) -> np.ndarray:
    """Boolean flags: cell exceeds ``sc`` times its noise estimate. Edge cells are never flagged."""
    thr = cfar_threshold(cells, cfg)
    with np.errstate(invalid="ignore"):
        return np.asarray(cells) > thr


def cfar_map(power: np.ndarray, cfg: CfarConfig) -> np.ndarray:
    """Run CFAR along range (axis 0) for every velocity bin of a ``[range][velocity]`` map."""
    return cfar_detect(power.T, cfg).T


@dataclass
class Detection:
    algo: str
    range_bin: int
    velocity_bin: int
    range_m: float
    velocity_mps: float
    azimuth: float
    power_db: float
    n_cells: int = 1
    kind: str = "unattributed"
    source: str = ""

    @property
    def azimuth_deg(self) -> float:
        return math.degrees(self.azimuth)


def _angle_peaks(snapshot: np.ndarray, n_bins: int, peak_db: float) -> list[float]:
    """Fractional phase steps of the significant peaks in the spatial spectrum."""
    spec = np.abs(angle_spectrum(snapshot, n_bins)) ** 2
    size = spec.size
    left, right = np.roll(spec, 1), np.roll(spec, -1)
    floor = spec.max() * 10.0 ** (-peak_db / 10.0)
    idx = np.flatnonzero((spec >= left) & (spec > right) & (spec >= floor))
    steps = []
    for i in idx[np.argsort(-spec[idx], kind="stable")]:
        a, b, c = left[i], spec[i], right[i]
        den = a - 2.0 * b + c
        off = 0.5 * (a - c) / den if den < 0 else 0.0
        steps.append(2.0 * np.pi * ((i - size // 2) + off) / size)
    return steps


def group_detections(
    rd_map: RangeDopplerMap,
    flags: np.ndarray,
    algo: str,
    chirp: ChirpConfig,
    rx: RxArray,
    n_angle_bins: int = 64,
    angle_peak_db: float = 10.0,
) -> list[Detection]:
    """Merge 8-connected flagged cells into objects and resolve angles at each peak.

    Range and velocity come from the power-weighted centroid of the region.
    Sources sharing one range-velocity cell are separated in the spatial
    spectrum of the peak cell: every angle peak within ``angle_peak_db`` of the
    strongest yields its own detection.
    """
    power = rd_map.power
    if flags.shape != power.shape:
        raise ConfigurationError(f"flags shape {flags.shape} does not match map {power.shape}")
    labels, count = ndimage.label(flags, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return []
    r_width = rd_map.range_axis[1] - rd_map.range_axis[0] if rd_map.range_axis.size > 1 else 0.0
    v_axis = rd_map.velocity_axis
    v_width = v_axis[1] - v_axis[0] if v_axis.size > 1 else 0.0
    v_zero = v_axis.size // 2
    lam = chirp.wavelength

    found = []
    for region in ndimage.find_objects(labels):
        sub = labels[region]
        lab = sub.max()
        rr, vv = np.nonzero(sub == lab)
        rr = rr + region[0].start
        vv = vv + region[1].start
        p = power[rr, vv]
        total = p.sum()
        weights = p / total if total > 0 else np.full(p.size, 1.0 / p.size)
        r_c = float(np.dot(weights, rr))
        v_c = float(np.dot(weights, vv))
        peak = int(np.argmax(p))
        pr, pv = int(rr[peak]), int(vv[peak])
        power_db = 10.0 * math.log10(p[peak]) if p[peak] > 0 else -math.inf
        snapshot = rd_map.spectrum[pr, pv, :]
        if rx.n_rx < 2 or not np.any(snapshot):
            angles = [0.0]
        else:
            angles = []
            for step in _angle_peaks(snapshot, n_angle_bins, angle_peak_db):
                try:
                    angles.append(estimate_aoa(step, rx.spacing, lam))
                except ValueError:
                    continue
            angles = angles or [0.0]
        for theta in angles:
            found.append(Detection(
                algo=algo,
                range_bin=pr,
                velocity_bin=pv,
                range_m=r_c * r_width,
                velocity_mps=(v_c - v_zero) * v_width,
                azimuth=theta,
                power_db=power_db,
                n_cells=int(p.size),
            ))
    found.sort(key=lambda d: (d.range_bin, d.velocity_bin, d.azimuth))
    return found
