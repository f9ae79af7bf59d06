"""Scenario orchestration: timeline, synthesis, processing, detection and artifacts."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rdmx
from .attacker import AttackMode, GhostPrediction, VictimPublic, build_events, predict_ghosts
from .detection import CfarAlgorithm, CfarConfig, Detection, cfar_map, group_detections, noise_estimate
from .errors import ConfigurationError, PredictionError, SimulationError
from .receiver import (
    EmissionEvent,
    EmitterKind,
    IFDataCube,
    RangeDopplerMap,
    angle_axis,
    angle_spectrum,
    process_cube,
    synthesize_if,
)
from .scenario import Scenario, scenario_from_dict, scenario_to_dict, set_path
from .scene import reflection_amplitude, reflection_delay
from .waveforms import FrameConfig, range_bin_width, velocity_bin_width

CSV_HEADER = ["algo", "range_m", "velocity_mps", "azimuth_deg", "power_db", "kind"]
KINDS = ("real", "ghost", "false_alarm")


def victim_timeline(frame: FrameConfig, drift_ppm: float = 0.0) -> np.ndarray:
    """Chirp start times ``n * T_c * (1 + drift_ppm * 1e-6)`` from the frame start."""
    return np.arange(frame.n_chirps) * (frame.chirp_period * (1.0 + drift_ppm * 1e-6))


@dataclass
class Analysis:
    rd_map: RangeDopplerMap
    detections: dict
    predictions: list
    noise_floor_db: float
    valid_bins: int


@dataclass
class RunResult:
    scenario: Scenario
    chirp_starts: np.ndarray
    cube: IFDataCube
    rd_map: RangeDopplerMap
    detections: dict
    predictions: list
    summary: dict = field(default_factory=dict)

    @property
    def all_detections(self) -> list[Detection]:
        return [d for algo in ("CA", "OS") for d in self.detections[algo]]


def _with_context(sc: Scenario, exc: SimulationError) -> SimulationError:
    label = sc.name or "unnamed"
    try:
        wrapped = type(exc)(f"scenario {label!r}: {exc}")
    except TypeError:
        return exc
    wrapped.__cause__ = exc
    return wrapped


def reflection_events(sc: Scenario, chirp_starts) -> list[list[EmissionEvent]]:
    """Per victim chirp, one event per reflector, frozen at the chirp start."""
    per_chirp = []
    for t_n in chirp_starts:
        events = []
        for r in sc.scene.reflectors:
            events.append(EmissionEvent(
                kind=EmitterKind.REFLECTION,
                t_ref=float(t_n),
                delay=reflection_delay(r, float(t_n)),
                f_start=sc.chirp.f_s,
                slope=sc.chirp.slope,
                duration=sc.chirp.t_c,
                amplitude=reflection_amplitude(r, float(t_n)),
                azimuth=r.azimuth,
                source=r.name or f"reflector@{r.range:g}",
            ))
        per_chirp.append(events)
    return per_chirp


def attacker_events(sc: Scenario, chirp_starts) -> list[EmissionEvent]:
    if not sc.attacks:
        return []
    victim = VictimPublic.from_configs(sc.chirp, sc.frame)
    events = []
    for plan in sc.attacks:
        # only privileged plans ever see the victim timeline
        starts = chirp_starts if plan.privileged else None
        events.extend(build_events(plan, victim, sc.placement, starts))
    return events


def _events_by_chirp(events, chirp_starts, t_c: float) -> list[list[EmissionEvent]]:
    if not events:
        return [[] for _ in chirp_starts]
    starts = np.array([e.start for e in events])
    order = np.argsort(starts, kind="stable")
    starts = starts[order]
    longest = max(e.duration for e in events)
    out = []
    for t_n in chirp_starts:
        lo = np.searchsorted(starts, t_n - longest, side="right")
        hi = np.searchsorted(starts, t_n + t_c, side="left")
        out.append([events[i] for i in order[lo:hi]])
    return out


def synthesize_cube(sc: Scenario, chirp_starts, jobs: int = 1) -> IFDataCube:
    """Noise-free IF cube of the scenario plus AWGN of ``receiver.noise_std`` drawn from ``sc.seed``."""
    refl = reflection_events(sc, chirp_starts)
    attack = _events_by_chirp(attacker_events(sc, chirp_starts), chirp_starts, sc.chirp.t_c)
    samples = np.zeros((sc.frame.n_chirps, sc.rx.n_rx, sc.chirp.n_samples), dtype=np.complex128)

    def one(n: int) -> None:
        samples[n] = synthesize_if(float(chirp_starts[n]), refl[n] + attack[n], sc.chirp, sc.rx, sc.receiver)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(one, range(sc.frame.n_chirps)))
    else:
        for n in range(sc.frame.n_chirps):
            one(n)

    sigma = sc.receiver.noise_std
    if sigma > 0:
        rng = np.random.default_rng(sc.seed)
        noise = rng.standard_normal(samples.shape) + 1j * rng.standard_normal(samples.shape)
        samples += (sigma / math.sqrt(2.0)) * noise
    return IFDataCube(samples, sc.chirp, sc.frame, sc.rx)


def valid_range_bins(sc: Scenario) -> int:
    """Number of leading range bins whose beat frequency passes the IF filter."""
    cutoff = sc.receiver.cutoff(sc.chirp)
    return min(sc.chirp.n_samples, int(math.floor(cutoff * sc.chirp.n_samples / sc.chirp.f_adc)) + 1)


def ghost_predictions(sc: Scenario, chirp_starts) -> list[GhostPrediction]:
    out = []
    for plan in sc.attacks:
        if plan.mode is AttackMode.NOISE:
            continue
        try:
            out.append(predict_ghosts(plan, sc.placement, sc.chirp, sc.frame, chirp_starts,
                                      sc.receiver.cutoff(sc.chirp)))
        except PredictionError:
            continue
    return out


def _circular(delta: float, size: int) -> float:
    return (delta + size / 2.0) % size - size / 2.0


def attribute(detections, sc: Scenario, predictions) -> None:
    """Label each detection ``real``, ``ghost`` or ``false_alarm`` in place.

    A detection matches a source when its range is within one bin (plus the
    reflector's migration over the frame), its velocity within one bin with
    Doppler wrap, and, for arrays, the sine of its azimuth within one native
    angle bin ``wavelength / (n_rx * spacing)``. Reflectors win ties.
    """
    r_w = range_bin_width(sc.chirp)
    v_w = velocity_bin_width(sc.chirp, sc.frame)
    n_v = sc.frame.n_chirps
    s_w = sc.chirp.wavelength / (sc.rx.n_rx * sc.rx.spacing) if sc.rx.n_rx > 1 else math.inf
    t_mid = 0.5 * sc.frame.n_chirps * sc.frame.chirp_period
    sources = []
    for i, r in enumerate(sc.scene.reflectors):
        migration = abs(r.radial_velocity) * sc.frame.t_frame / (2.0 * r_w)
        sources.append(("real", r.name or f"reflector{i}", r.range + r.radial_velocity * t_mid,
                        r.radial_velocity, 1.0 + migration, (r.azimuth,)))
    for i, p in enumerate(predictions):
        sources.append(("ghost", p.label or f"ghost{i}", p.expected_range, p.doppler_velocity, 1.0, p.azimuths))
    for d in detections:
        d.kind, d.source = "false_alarm", ""
        s_d = math.sin(d.azimuth)
        for kind, name, rng_m, vel, r_tol, azimuths in sources:
            if abs(d.range_m - rng_m) / r_w > r_tol:
                continue
            if abs(_circular((d.velocity_mps - vel) / v_w, n_v)) > 1.0:
                continue
            hits = [j for j, a in enumerate(azimuths) if abs(s_d - math.sin(a)) <= s_w]
            if not hits:
                continue
            d.kind = kind
            d.source = name if len(azimuths) == 1 else f"{name}:tx{hits[0]}"
            break


def analyze(
    cube: IFDataCube,
    sc: Scenario,
    chirp_starts=None,
    algorithms=("CA", "OS"),
    ca: CfarConfig | None = None,
    os_cfg: CfarConfig | None = None,
) -> Analysis:
    """Range/Doppler processing, CFAR per algorithm, grouping and provenance."""
    if chirp_starts is None:
        chirp_starts = victim_timeline(sc.frame, sc.receiver.clock_drift_ppm)
    configs = {"CA": ca or sc.detection.ca, "OS": os_cfg or sc.detection.os}
    rd_map = process_cube(cube, sc.receiver)
    power = rd_map.power
    n_valid = valid_range_bins(sc)
    predictions = ghost_predictions(sc, chirp_starts)
    detections = {}
    for algo in algorithms:
        flags = cfar_map(power, configs[algo])
        flags[n_valid:, :] = False
        found = group_detections(rd_map, flags, algo, sc.chirp, sc.rx,
                                 sc.receiver.n_angle_bins, sc.detection.angle_peak_db)
        attribute(found, sc, predictions)
        detections[algo] = found
    est = noise_estimate(power.T, configs["CA"].with_algorithm(CfarAlgorithm.CA)).T[:n_valid]
    est = est[np.isfinite(est)]
    floor = float(np.median(est)) if est.size else math.nan
    floor_db = 10.0 * math.log10(floor) if floor > 0 else -math.inf
    return Analysis(rd_map, detections, predictions, floor_db, n_valid)


def _finite(x: float):
    return x if math.isfinite(x) else None


def summarize(sc: Scenario, analysis: Analysis, cube_shape) -> dict:
    counts = {}
    for algo, dets in analysis.detections.items():
        c = {k: 0 for k in KINDS}
        for d in dets:
            c[d.kind] += 1
        c["total"] = len(dets)
        c["real_objects"] = len({d.source for d in dets if d.kind == "real"})
        c["ghost_objects"] = len({d.source for d in dets if d.kind == "ghost"})
        counts[algo] = c
    return {
        "name": sc.name,
        "seed": sc.seed,
        "cube_shape": list(cube_shape),
        "valid_range_bins": analysis.valid_bins,
        "noise_floor_db": _finite(round(analysis.noise_floor_db, 9)),
        "counts": counts,
        "predictions": [
            {
                "label": p.label,
                "range_m": round(p.expected_range, 9),
                "velocity_mps": round(p.expected_velocity, 12),
                "doppler_velocity_mps": round(p.doppler_velocity, 12),
                "azimuths_deg": [round(math.degrees(a), 9) for a in p.azimuths],
                "visible_chirps": int(p.visible.sum()),
            }
            for p in analysis.predictions
        ],
        "scenario": scenario_to_dict(sc),
    }


def run(sc: Scenario, jobs: int = 1) -> RunResult:
    """Simulate one frame of the scenario end to end."""
    try:
        starts = victim_timeline(sc.frame, sc.receiver.clock_drift_ppm)
        cube = synthesize_cube(sc, starts, jobs)
        analysis = analyze(cube, sc, starts)
    except SimulationError as exc:
        raise _with_context(sc, exc) from exc
    summary = summarize(sc, analysis, cube.samples.shape)
    return RunResult(sc, starts, cube, analysis.rd_map, analysis.detections, analysis.predictions, summary)


def detections_csv(detections) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for d in detections:
        # adding 0.0 folds negative zero so equal values print identically
        w.writerow([d.algo, f"{d.range_m + 0.0:.6f}", f"{d.velocity_mps + 0.0:.6f}",
                    f"{d.azimuth_deg + 0.0:.4f}", f"{d.power_db + 0.0:.3f}", d.kind])
    return buf.getvalue()


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def write_atomic(files: dict, out_dir) -> list[str]:
    """Write ``{name: bytes}`` into ``out_dir``; every file is staged before any is renamed in."""
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, payload in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            staged.append((tmp, os.path.join(out_dir, name)))
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.chmod(tmp, 0o644)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


def run_artifacts(result: RunResult, with_cube: bool = True) -> dict:
    files = {}
    if with_cube:
        files["cube.rdmx"] = rdmx.encode(result.cube.samples)
    files["map.rdmx"] = rdmx.encode(result.rd_map.power)
    files["detections.csv"] = detections_csv(result.all_detections).encode()
    files["summary.json"] = summary_json(result.summary).encode()
    return files


def resolve_template(data: dict) -> dict:
    """Fully expanded scenario dictionary, so every field is addressable by path."""
    return scenario_to_dict(scenario_from_dict(data))


SWEEP_COUNTS = KINDS + ("real_objects", "ghost_objects")
SWEEP_COLUMNS = ["value", "noise_floor_db"] + [f"{a.lower()}_{k}" for a in ("CA", "OS") for k in SWEEP_COUNTS]


def sweep(template: dict, path: str, values, jobs: int = 1) -> list[dict]:
    """One run per value of the field at ``path``; seeds stay as in the template."""
    base = resolve_template(template)
    scenarios = [scenario_from_dict(set_path(base, path, v)) for v in values]

    def one(sc):
        return run(sc).summary

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, scenarios))
    return [one(sc) for sc in scenarios]


def sweep_csv(values, summaries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for v, s in zip(values, summaries):
        row = [repr(v), s["noise_floor_db"]]
        row += [s["counts"][a][k] for a in ("CA", "OS") for k in SWEEP_COUNTS]
        w.writerow(row)
    return buf.getvalue()


FIGURES = ("cfar_range", "aoa_heatmap", "range_doppler")


def _db(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 10.0 * np.log10(x)


def _fmt(x: float) -> str:
    return "nan" if not np.isfinite(x) else f"{x:.6g}"


def figdata(result: RunResult, fig: str, velocity_bin: int | None = None) -> str:
    """CSV text for external plotting of one figure."""
    sc = result.scenario
    rd = result.rd_map
    power = rd.power
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if fig == "cfar_range":
        v = rd.zero_velocity_bin if velocity_bin is None else velocity_bin
        if not 0 <= v < power.shape[1]:
            raise ConfigurationError(f"velocity bin {v} outside 0..{power.shape[1] - 1}")
        cells = power[:, v]
        ca_thr = sc.detection.ca.scale * noise_estimate(cells, sc.detection.ca)
        os_thr = sc.detection.os.scale * noise_estimate(cells, sc.detection.os)
        w.writerow(["range_m", "power_db", "ca_threshold_db", "os_threshold_db", "ca_flag", "os_flag"])
        with np.errstate(invalid="ignore"):
            ca_flag = cells > ca_thr
            os_flag = cells > os_thr
        p_db, ca_db, os_db = _db(cells), _db(ca_thr), _db(os_thr)
        for i in range(cells.size):
            w.writerow([_fmt(rd.range_axis[i]), _fmt(p_db[i]), _fmt(ca_db[i]), _fmt(os_db[i]),
                        int(ca_flag[i]), int(os_flag[i])])
    elif fig == "aoa_heatmap":
        _, theta = angle_axis(max(sc.receiver.n_angle_bins, sc.rx.n_rx), sc.rx.spacing, sc.chirp.wavelength)
        grid = np.sum(np.abs(angle_spectrum(rd.spectrum, sc.receiver.n_angle_bins)) ** 2, axis=1)
        w.writerow(["range_m"] + [_fmt(np.degrees(t)) for t in theta])
        for i in range(grid.shape[0]):
            w.writerow([_fmt(rd.range_axis[i])] + [_fmt(x) for x in np.sqrt(grid[i])])
    elif fig == "range_doppler":
        p_db = _db(power)
        w.writerow(["range_m"] + [_fmt(v) for v in rd.velocity_axis])
        for i in range(power.shape[0]):
            w.writerow([_fmt(rd.range_axis[i])] + [_fmt(x) for x in p_db[i]])
    else:
        raise ConfigurationError(f"unknown figure id {fig!r}; choose from {', '.join(FIGURES)}")
    return buf.getvalue()
