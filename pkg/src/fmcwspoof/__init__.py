"""FMCW automotive radar simulator with attacker models for spoofing and object removal."""

from .attacker import AttackMode, AttackPlan, GhostPrediction, VictimPublic, predict_ghosts
from .detection import CfarAlgorithm, CfarConfig, Detection, cfar_detect, cfar_map, group_detections
from .engine import RunResult, analyze, run, sweep, victim_timeline
from .errors import (
    AmbiguousAngleError,
    ConfigurationError,
    FormatError,
    NumericError,
    PlanError,
    PredictionError,
    ScenarioError,
    SimulationError,
)
from .receiver import EmissionEvent, IFDataCube, RangeDopplerMap, ReceiverConfig, synthesize_if
from .scenario import DetectionOptions, Scenario
from .scene import AttackerPlacement, Reflector, RxArray, Scene
from .waveforms import ChirpConfig, FrameConfig

__version__ = "0.1.0"
