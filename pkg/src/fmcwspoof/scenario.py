"""Scenario description and its JSON file format.

Unknown keys are rejected at every level. Angles are radians, times
seconds, frequencies hertz. A minimal file::

    {
      "chirp": {"f_s": 77e9, "b": 1e9, "t_c": 512e-6, "n_samples": 2048},
      "frame": {"n_chirps": 50, "t_frame": 0.2},
      "scene": {"reflectors": [{"range": 2.55, "reflectivity": 3.0}]}
    }

See README.md for the full key list.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field

from .attacker import AttackPlan
from .detection import CfarAlgorithm, CfarConfig
from .errors import ConfigurationError
from .receiver import ReceiverConfig
from .scene import AttackerPlacement, Reflector, RxArray, Scene
from .waveforms import ChirpConfig, FrameConfig


@dataclass(frozen=True)
class DetectionOptions:
    ca: CfarConfig = field(default_factory=lambda: CfarConfig(CfarAlgorithm.CA))
    os: CfarConfig = field(default_factory=lambda: CfarConfig(CfarAlgorithm.OS))
    angle_peak_db: float = 10.0

    def __post_init__(self):
        if self.ca.algorithm is not CfarAlgorithm.CA or self.os.algorithm is not CfarAlgorithm.OS:
            raise ConfigurationError("detection.ca must be a CA config and detection.os an OS config")
        if not self.angle_peak_db > 0:
            raise ConfigurationError("angle_peak_db must be positive")


@dataclass(frozen=True)
class Scenario:
    chirp: ChirpConfig = field(default_factory=ChirpConfig)
    frame: FrameConfig = field(default_factory=FrameConfig)
    rx: RxArray = field(default_factory=RxArray)
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)
    scene: Scene = field(default_factory=Scene)
    placement: AttackerPlacement | None = None
    attacks: tuple = ()
    detection: DetectionOptions = field(default_factory=DetectionOptions)
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "attacks", tuple(self.attacks))
        self.frame.check_fits(self.chirp)
        if self.attacks and self.placement is None:
            raise ConfigurationError("attack plans need an attacker placement")

    def without_attacks(self) -> "Scenario":
        return dataclasses.replace(self, attacks=())

    def attacks_only(self) -> "Scenario":
        return dataclasses.replace(self, scene=Scene(), receiver=dataclasses.replace(self.receiver, noise_std=0.0))


def _take(cls, data, path: str, **extra):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path or 'scenario'}: expected an object, got {type(data).__name__}")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigurationError(f"{path or 'scenario'}: unknown key(s) {', '.join(unknown)}")
    kwargs = dict(data)
    kwargs.update(extra)
    try:
        return cls(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


_TOP_KEYS = {"name", "seed", "chirp", "frame", "rx", "receiver", "scene", "attacker", "detection"}


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigurationError("scenario must be a JSON object")
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        raise ConfigurationError(f"scenario: unknown key(s) {', '.join(unknown)}")
    chirp = _take(ChirpConfig, data.get("chirp", {}), "chirp")
    frame = _take(FrameConfig, data.get("frame", {}), "frame")
    rx_data = dict(data.get("rx", {}))
    if rx_data.get("spacing") is None:
        rx_data["spacing"] = chirp.wavelength / 2.0
    rx = _take(RxArray, rx_data, "rx")
    receiver = _take(ReceiverConfig, data.get("receiver", {}), "receiver")

    scene_data = data.get("scene", {})
    if not isinstance(scene_data, dict) or set(scene_data) - {"reflectors"}:
        raise ConfigurationError("scene: only the key 'reflectors' is allowed")
    reflectors = [
        _take(Reflector, r, f"scene.reflectors[{i}]") for i, r in enumerate(scene_data.get("reflectors", []))
    ]

    placement, attacks = None, ()
    if data.get("attacker") is not None:
        att = data["attacker"]
        if not isinstance(att, dict) or set(att) - {"placement", "plans"}:
            raise ConfigurationError("attacker: only the keys 'placement' and 'plans' are allowed")
        placement = _take(AttackerPlacement, att.get("placement", {}), "attacker.placement")
        attacks = tuple(_take(AttackPlan, p, f"attacker.plans[{i}]") for i, p in enumerate(att.get("plans", [])))

    det = data.get("detection", {})
    if not isinstance(det, dict):
        raise ConfigurationError("detection: expected an object")
    unknown = sorted(set(det) - {"ca", "os", "angle_peak_db"})
    if unknown:
        raise ConfigurationError(f"detection: unknown key(s) {', '.join(unknown)}")
    for key in ("ca", "os"):
        if "algorithm" in det.get(key, {}):
            raise ConfigurationError(f"detection.{key}: the algorithm is implied by the section name")
    detection = DetectionOptions(
        ca=_take(CfarConfig, det.get("ca", {}), "detection.ca", algorithm=CfarAlgorithm.CA),
        os=_take(CfarConfig, det.get("os", {}), "detection.os", algorithm=CfarAlgorithm.OS),
        angle_peak_db=det.get("angle_peak_db", 10.0),
    )
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigurationError("seed must be an integer")
    try:
        return Scenario(chirp, frame, rx, receiver, Scene(tuple(reflectors)), placement, attacks,
                        detection, seed, str(data.get("name", "")))
    except ConfigurationError as exc:
        raise ConfigurationError(f"scenario: {exc}") from exc


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ConfigurationError(f"non-finite value {obj} cannot be serialised")
    return obj


def scenario_to_dict(sc: Scenario) -> dict:
    det = _plain(sc.detection)
    for key in ("ca", "os"):
        det[key].pop("algorithm")
    out = {
        "name": sc.name,
        "seed": sc.seed,
        "chirp": _plain(sc.chirp),
        "frame": _plain(sc.frame),
        "rx": _plain(sc.rx),
        "receiver": _plain(sc.receiver),
        "scene": {"reflectors": _plain(sc.scene.reflectors)},
        "detection": det,
    }
    if sc.placement is not None:
        out["attacker"] = {"placement": _plain(sc.placement), "plans": _plain(sc.attacks)}
    return out


def loads(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed scenario JSON: {exc}") from exc
    return scenario_from_dict(data)


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True)


def set_path(data: dict, path: str, value) -> dict:
    """Copy of ``data`` with the dotted ``path`` (list indices allowed) replaced by ``value``."""
    out = json.loads(json.dumps(data))
    parts = path.split(".")
    node = out
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        if isinstance(node, list):
            try:
                idx = int(part)
                node[idx]
            except (ValueError, IndexError):
                raise ConfigurationError(f"bad parameter path {path!r}: no list element {part!r}") from None
            if last:
                target_old = node[idx]
                node[idx] = value
            else:
                node = node[idx]
        elif isinstance(node, dict):
            if part not in node:
                raise ConfigurationError(f"bad parameter path {path!r}: no key {part!r}")
            if last:
                target_old = node[part]
                node[part] = value
            else:
                node = node[part]
        else:
            raise ConfigurationError(f"bad parameter path {path!r}: {part!r} is not a container")
    if not (isinstance(target_old, (int, float)) or target_old is None) or isinstance(target_old, bool):
        raise ConfigurationError(f"parameter path {path!r} does not address a numeric field")
    return out
