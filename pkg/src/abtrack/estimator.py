"""Scikit-learn style front end for the whole correction pipeline.

``AbductiveTracker`` is a stateless transformer: ``transform`` takes
per-frame detections and returns corrected object tracks, so the engine
drops into sklearn pipelines, ``clone`` and grid search.  Inputs may be
``Detection`` objects or a plain array with columns
``frame, x, y, w, h[, conf]``.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .abduce import generate_candidates
from .config import Config, CostWeights
from .geometry import Box2D, FrameBounds
from .ingest import Detection, SequenceMeta
from .metrics import clear_mot
from .solve import Explanation, solve
from .synth import ObjectTrack, synthesize_tracks
from .tracker import Tracklet, build_tracklets

__all__ = ["AbductiveTracker", "check_detections"]


def check_detections(X) -> list[Detection]:
    """Validate transformer input and normalize it to ``Detection`` objects."""
    if isinstance(X, np.ndarray) or (
        isinstance(X, Sequence) and X and not isinstance(X[0], Detection)
    ):
        try:
            array = np.asarray(X, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValueError(
                f"expected Detection objects or a numeric array: {exc}"
            ) from exc
        if array.ndim != 2 or array.shape[1] < 5:
            raise ValueError(
                "array input must be 2-d with columns frame, x, y, w, h[, conf]"
            )
        if not np.all(np.isfinite(array)):
            raise ValueError("detections contain non-finite values")
        out = []
        for row in array:
            conf = float(row[5]) if array.shape[1] > 5 else 1.0
            out.append(
                Detection(
                    frame=int(row[0]),
                    id=None,
                    box=Box2D(float(row[1]), float(row[2]), float(row[3]), float(row[4])),
                    confidence=conf,
                )
            )
        return out
    if not isinstance(X, Iterable):
        raise ValueError(f"cannot interpret {type(X).__name__} as detections")
    out = list(X)
    for det in out:
        if not isinstance(det, Detection):
            raise ValueError(f"expected Detection, got {type(det).__name__}")
    return out


class AbductiveTracker(BaseEstimator, TransformerMixin):
    """Detections in, corrected object tracks out.

    Parameters mirror the pipeline configuration; ``weights`` takes a
    :class:`CostWeights` (defaults are used when ``None``).  Frame bounds
    are taken from ``frame_width``/``frame_height`` or, when omitted,
    inferred from the detections.
    """

    def __init__(
        self,
        gate: float = 0.7,
        max_age: int = 1,
        min_confidence: float = 0.0,
        distance: str = "iou",
        max_gap: int = 50,
        containment_ratio: float = 0.8,
        eps: float = 0.5,
        border_margin: float = 20.0,
        weights: CostWeights | None = None,
        max_optima: int = 100_000,
        require_part_whole: bool = True,
        frame_width: float | None = None,
        frame_height: float | None = None,
    ):
        self.gate = gate
        self.max_age = max_age
        self.min_confidence = min_confidence
        self.distance = distance
        self.max_gap = max_gap
        self.containment_ratio = containment_ratio
        self.eps = eps
        self.border_margin = border_margin
        self.weights = weights
        self.max_optima = max_optima
        self.require_part_whole = require_part_whole
        self.frame_width = frame_width
        self.frame_height = frame_height

    # -- plumbing ---------------------------------------------------------

    def _config(self) -> Config:
        cfg = Config(
            weights=self.weights if self.weights is not None else CostWeights(),
            gate=self.gate,
            max_age=self.max_age,
            min_confidence=self.min_confidence,
            distance=self.distance,
            max_gap=self.max_gap,
            containment_ratio=self.containment_ratio,
            eps=self.eps,
            border_margin=self.border_margin,
            max_optima=self.max_optima,
            require_part_whole=self.require_part_whole,
        )
        cfg.validate()
        return cfg

    def _meta(self, detections: list[Detection]) -> SequenceMeta:
        frame_count = max((d.frame for d in detections), default=1)
        width = self.frame_width
        height = self.frame_height
        if width is None:
            width = max((d.box.x2 for d in detections), default=100.0) + 1.0
        if height is None:
            height = max((d.box.y2 for d in detections), default=100.0) + 1.0
        return SequenceMeta(
            name="input",
            frame_count=frame_count,
            bounds=FrameBounds(width, height, self.border_margin),
        )

    # -- estimator surface --------------------------------------------------

    def fit(self, X, y=None):
        check_detections(X)
        self._config()
        return self

    def transform(self, X) -> list[ObjectTrack]:
        detections = check_detections(X)
        cfg = self._config()
        meta = self._meta(detections)
        tracklets = build_tracklets(detections, meta, cfg)
        obligations, candidates, beliefs = generate_candidates(tracklets, meta, cfg)
        explanations = solve(
            obligations,
            candidates,
            tracklets,
            cfg.weights,
            beliefs=beliefs,
            max_optima=cfg.max_optima,
            part_class=cfg.part_class,
            require_part_whole=cfg.require_part_whole,
        )
        self.meta_ = meta
        self.tracklets_: list[Tracklet] = tracklets
        self.explanations_: list[Explanation] = explanations
        self.explanation_ = explanations[0] if explanations else None
        self.tracks_ = (
            synthesize_tracks(explanations[0], tracklets) if explanations else []
        )
        return self.tracks_

    def predict(self, X) -> list[ObjectTrack]:
        return self.transform(X)

    def score(self, X, y, iou_threshold: float = 0.5) -> float:
        """Tracking accuracy of the corrected tracks against truth tracks."""
        tracks = self.transform(X)
        report = clear_mot(tracks, list(y), iou_threshold=iou_threshold)
        if report.mota is None:
            return math.nan
        return report.mota
