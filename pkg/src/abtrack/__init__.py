"""Abductive correction of multi-object tracks.

Per-frame detections are associated into tracklets; every tracklet start
and end is explained by a hypothesized event (entering, exiting,
occlusion, missing detections, noise) or boundary condition; the
cheapest consistent hypothesis set is selected exactly; and the chosen
explanation is instantiated as corrected, gap-free object tracks.
"""

from .abduce import (
    Endpoint,
    EndpointObligation,
    Hypothesis,
    HypothesisKind,
    belief_candidates,
    endpoint_candidates,
    generate_candidates,
)
from .config import Config, CostWeights
from .estimator import AbductiveTracker, check_detections
from .geometry import (
    Border,
    Box2D,
    FrameBounds,
    Point2D,
    Rcc8Relation,
    border_contact,
    interpolate_box,
    iou,
    rcc8_relation,
)
from .ingest import Detection, ParseError, SequenceMeta, parse_mot_csv, write_mot_csv
from .metrics import MotReport, clear_mot
from .solve import (
    BRUTE_FORCE_LIMIT,
    CapExceededError,
    Explanation,
    brute_force_solve,
    hypothesis_cost,
    motion_cost,
    solve,
)
from .synth import (
    ComplexEvent,
    ComplexEventKind,
    ObjectTrack,
    detect_complex_events,
    synthesize_tracks,
)
from .synthetic import SyntheticScene, crossing_scene, make_scene
from .tracker import (
    KalmanState,
    Tracklet,
    build_tracklets,
    kalman_predict,
    kalman_update,
    min_cost_assignment,
)

__version__ = "0.1.0"

__all__ = [
    "AbductiveTracker",
    "BRUTE_FORCE_LIMIT",
    "Border",
    "Box2D",
    "CapExceededError",
    "ComplexEvent",
    "ComplexEventKind",
    "Config",
    "CostWeights",
    "Detection",
    "Endpoint",
    "EndpointObligation",
    "Explanation",
    "FrameBounds",
    "Hypothesis",
    "HypothesisKind",
    "KalmanState",
    "MotReport",
    "ObjectTrack",
    "ParseError",
    "Point2D",
    "Rcc8Relation",
    "SequenceMeta",
    "SyntheticScene",
    "Tracklet",
    "belief_candidates",
    "border_contact",
    "brute_force_solve",
    "build_tracklets",
    "check_detections",
    "clear_mot",
    "crossing_scene",
    "detect_complex_events",
    "endpoint_candidates",
    "generate_candidates",
    "hypothesis_cost",
    "interpolate_box",
    "iou",
    "kalman_predict",
    "kalman_update",
    "make_scene",
    "min_cost_assignment",
    "motion_cost",
    "parse_mot_csv",
    "rcc8_relation",
    "solve",
    "synthesize_tracks",
    "write_mot_csv",
]
