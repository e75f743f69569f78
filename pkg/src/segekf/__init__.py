from typing import Final

from segekf.core.ekf import Ekf, EkfConfig, EkfState, MeasurementBundle, build_measurement, correct, predict
from segekf.core.extraction import ExtractedSegment, ExtractionConfig, ExtractionMode, Scan, extract_segments
from segekf.core.geometry import NormalLine, Point2, PolarPoint, Pose, Segment, SlopeIntercept
from segekf.core.kinematics import RobotParams, WheelSpeeds
from segekf.core.matching import GlobalMap, MatchConfig, MatchPair, match_segments
from segekf.sim.batch import run_batch, summarize
from segekf.sim.scenario import Estimator, RunLog, Scenario, run_scenario

__all__: Final[tuple[str, ...]] = (
    "Ekf",
    "EkfConfig",
    "EkfState",
    "Estimator",
    "ExtractedSegment",
    "ExtractionConfig",
    "ExtractionMode",
    "GlobalMap",
    "MatchConfig",
    "MatchPair",
    "MeasurementBundle",
    "NormalLine",
    "Point2",
    "PolarPoint",
    "Pose",
    "RobotParams",
    "RunLog",
    "Scan",
    "Scenario",
    "Segment",
    "SlopeIntercept",
    "WheelSpeeds",
    "build_measurement",
    "correct",
    "extract_segments",
    "match_segments",
    "predict",
    "run_batch",
    "run_scenario",
    "summarize",
)
