"""Command-line front end.

Exit codes: 0 success, 1 scenario or configuration error, 2 numeric error,
3 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import engine, rdmx, scenario
from .errors import ConfigurationError, FormatError, NumericError, PlanError, PredictionError, ScenarioError
from .receiver import IFDataCube
from .scene import RxArray
from .waveforms import ChirpConfig, FrameConfig

EXIT_OK, EXIT_SCENARIO, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _load_scenario(path: str, seed: int | None) -> scenario.Scenario:
    sc = scenario.load(path)
    return dataclasses.replace(sc, seed=seed) if seed is not None else sc


def cmd_run(args) -> int:
    sc = _load_scenario(args.file, args.seed)
    result = engine.run(sc, jobs=args.jobs)
    written = engine.write_atomic(engine.run_artifacts(result, with_cube=not args.no_cube), args.out)
    for path in written:
        print(path)
    return EXIT_OK


def _cube_scenario(cube_path: str, scenario_path: str | None, shape) -> scenario.Scenario:
    if scenario_path:
        return scenario.load(scenario_path)
    sibling = os.path.join(os.path.dirname(os.path.abspath(cube_path)), "summary.json")
    if os.path.exists(sibling):
        with open(sibling, encoding="utf-8") as fh:
            return scenario.scenario_from_dict(json.load(fh)["scenario"])
    n_chirps, n_rx, n_samples = shape
    chirp = ChirpConfig(n_samples=n_samples)
    frame = FrameConfig(n_chirps=n_chirps)
    return scenario.Scenario(chirp=chirp, frame=frame, rx=RxArray(n_rx, chirp.wavelength / 2.0))


def cmd_detect(args) -> int:
    samples = rdmx.read(args.cube)
    if samples.ndim != 3 or samples.dtype.kind != "c":
        raise FormatError(f"{args.cube}: expected a complex rank-3 cube, got {samples.dtype} rank {samples.ndim}")
    sc = _cube_scenario(args.cube, args.scenario, samples.shape)
    cube = IFDataCube(samples, sc.chirp, sc.frame, sc.rx)
    overrides = {k: getattr(args, k) for k in ("nc", "guard", "pfa", "sc", "k") if getattr(args, k) is not None}
    ca = dataclasses.replace(sc.detection.ca, **{k: v for k, v in overrides.items() if k != "k"})
    os_cfg = dataclasses.replace(sc.detection.os, **overrides)
    algos = {"ca": ("CA",), "os": ("OS",), "both": ("CA", "OS")}[args.algo]
    analysis = engine.analyze(cube, sc, algorithms=algos, ca=ca, os_cfg=os_cfg)
    text = engine.detections_csv([d for a in algos for d in analysis.detections[a]])
    if args.out:
        engine.write_atomic({os.path.basename(args.out): text.encode()}, os.path.dirname(args.out) or ".")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_values(text: str) -> list:
    try:
        values = json.loads(text if text.strip().startswith("[") else f"[{text}]")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"cannot parse --values {text!r}: {exc}") from exc
    if not values or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ConfigurationError("--values must be a non-empty list of numbers")
    return values


def cmd_sweep(args) -> int:
    with open(args.file, encoding="utf-8") as fh:
        try:
            template = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"malformed scenario JSON: {exc}") from exc
    values = _parse_values(args.values)
    summaries = engine.sweep(template, args.param, values, jobs=args.jobs)
    text = engine.sweep_csv(values, summaries)
    if args.out:
        engine.write_atomic({os.path.basename(args.out): text.encode()}, os.path.dirname(args.out) or ".")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_figdata(args) -> int:
    if args.fig not in engine.FIGURES:
        raise ConfigurationError(f"unknown figure id {args.fig!r}; choose from {', '.join(engine.FIGURES)}")
    sc = _load_scenario(args.file, args.seed)
    text = engine.figdata(engine.run(sc, jobs=args.jobs), args.fig, args.velocity_bin)
    if args.out:
        engine.write_atomic({os.path.basename(args.out): text.encode()}, os.path.dirname(args.out) or ".")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmcwspoof", description="FMCW radar spoofing simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write its artifacts")
    p.add_argument("file")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--no-cube", action="store_true", help="skip the large cube.rdmx file")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("detect", help="re-run processing and CFAR on a saved cube")
    p.add_argument("cube")
    p.add_argument("--algo", choices=["ca", "os", "both"], default="both")
    p.add_argument("--nc", type=int)
    p.add_argument("--guard", type=int)
    p.add_argument("--pfa", type=float)
    p.add_argument("--sc", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--scenario", help="scenario file (default: summary.json next to the cube)")
    p.add_argument("-o", "--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep", help="run a scenario once per parameter value")
    p.add_argument("file")
    p.add_argument("--param", required=True, help="dotted path, e.g. attacker.plans.0.gain")
    p.add_argument("--values", required=True, help="comma-separated numbers or a JSON list")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figdata", help="write plot-ready CSV for one figure")
    p.add_argument("file")
    p.add_argument("--fig", required=True, help=", ".join(engine.FIGURES))
    p.add_argument("--velocity-bin", type=int, default=None, help="row for cfar_range (default: zero velocity)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_figdata)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        return args.func(args)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, ScenarioError, PlanError, PredictionError, KeyError, ValueError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
