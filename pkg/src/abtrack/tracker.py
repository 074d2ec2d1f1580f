"""Detection-to-tracklet association.

A constant-velocity Kalman filter predicts each live track one frame
ahead; detections are matched to predictions by gated min-cost
assignment.  The output is a set of gap-free tracklets: a missed frame
ends the current tracklet, and reconnecting fragments across gaps is
deliberately left to the explanation stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import Config
from .geometry import Box2D, iou
from .ingest import Detection, SequenceMeta

__all__ = [
    "KalmanState",
    "Tracklet",
    "kalman_predict",
    "kalman_update",
    "initial_state",
    "process_noise",
    "measurement_noise",
    "min_cost_assignment",
    "build_tracklets",
]

_DIM = 8  # x, y, w, h and their per-frame velocities
_MIN_SIZE = 1e-3

# constant-velocity transition (dt = 1 frame) and box-measurement matrices
_F = np.eye(_DIM)
_F[:4, 4:] = np.eye(4)
_H = np.hstack([np.eye(4), np.zeros((4, 4))])


@dataclass(frozen=True)
class KalmanState:
    """Gaussian state over (x, y, w, h, vx, vy, vw, vh)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (_DIM,) or cov.shape != (_DIM, _DIM):
            raise ValueError("state must be an 8-vector with an 8x8 covariance")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("state must be finite")
        if not np.allclose(cov, cov.T, atol=1e-8):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def box(self) -> Box2D:
        x, y, w, h = self.mean[:4]
        return Box2D(x, y, max(w, _MIN_SIZE), max(h, _MIN_SIZE))


@dataclass(frozen=True)
class Tracklet:
    """A gap-free run of boxes for one tentative object."""

    id: int
    class_label: str
    start: int
    boxes: tuple[Box2D, ...]

    def __post_init__(self) -> None:
        if not self.boxes:
            raise ValueError("tracklet needs at least one box")
        if self.start < 1:
            raise ValueError(f"start frame must be >= 1, got {self.start}")

    @property
    def end(self) -> int:
        return self.start + len(self.boxes) - 1

    @property
    def length(self) -> int:
        return len(self.boxes)

    def alive_at(self, frame: int) -> bool:
        return self.start <= frame <= self.end

    def box_at(self, frame: int) -> Box2D:
        if not self.alive_at(frame):
            raise ValueError(f"frame {frame} outside [{self.start}, {self.end}]")
        return self.boxes[frame - self.start]


def process_noise(q_pos: float = 1e-2, q_vel: float = 1e-4) -> np.ndarray:
    return np.diag([q_pos] * 4 + [q_vel] * 4)


def measurement_noise(r_meas: float = 1e-1) -> np.ndarray:
    return np.eye(4) * r_meas


def initial_state(box: Box2D, r_meas: float = 1e-1, v0_var: float = 1000.0) -> KalmanState:
    mean = np.array([box.x, box.y, box.w, box.h, 0.0, 0.0, 0.0, 0.0])
    cov = np.diag([r_meas] * 4 + [v0_var] * 4)
    return KalmanState(mean, cov)


def kalman_predict(state: KalmanState, q: np.ndarray) -> KalmanState:
    """Advance one frame under constant velocity."""
    mean = _F @ state.mean
    cov = _F @ state.cov @ _F.T + np.asarray(q, dtype=float)
    return KalmanState(mean, 0.5 * (cov + cov.T))


def kalman_update(state: KalmanState, z: Box2D, r: np.ndarray) -> KalmanState:
    """Correct the state with a measured box.

    With r -> 0 the posterior box equals the measurement; with r -> inf
    the prior is kept.  A singular innovation covariance (exactly known
    state, exact measurement) falls back to the pseudo-inverse.
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (4, 4):
        raise ValueError("measurement noise must be 4x4")
    if not np.allclose(r, r.T, atol=1e-8):
        raise ValueError("measurement noise must be symmetric")
    if np.any(np.linalg.eigvalsh(r) < -1e-9):
        raise ValueError("measurement noise must be positive semidefinite")

    measurement = np.array([z.x, z.y, z.w, z.h])
    innovation = measurement - _H @ state.mean
    s = _H @ state.cov @ _H.T + r
    try:
        gain = np.linalg.solve(s.T, (_H @ state.cov.T)).T
    except np.linalg.LinAlgError:
        gain = state.cov @ _H.T @ np.linalg.pinv(s)
    mean = state.mean + gain @ innovation
    cov = (np.eye(_DIM) - gain @ _H) @ state.cov
    mean[2] = max(mean[2], _MIN_SIZE)
    mean[3] = max(mean[3], _MIN_SIZE)
    return KalmanState(mean, 0.5 * (cov + cov.T))


# --- assignment ----------------------------------------------------------


def _gated_optimum(cost: np.ndarray, allowed: np.ndarray) -> tuple[int, float]:
    """Best (cardinality, total cost) over matchings restricted to allowed pairs.

    Maximum cardinality wins first, then minimum cost; implemented by
    padding forbidden pairs with a penalty larger than any real spread.
    """
    if not allowed.any():
        return 0, 0.0
    big = 2.0 * float(np.abs(cost[allowed]).sum()) + 1.0
    padded = np.where(allowed, cost, big)
    rows, cols = linear_sum_assignment(padded)
    used = allowed[rows, cols]
    return int(used.sum()), float(cost[rows[used], cols[used]].sum())


def min_cost_assignment(cost, gate: float) -> list[tuple[int, int]]:
    """Gated min-cost matching with a lexicographic tie-break.

    Pairs with cost above ``gate`` (or infinite cost) are forbidden.
    Among matchings of maximum cardinality over the remaining pairs, the
    cheapest is returned; cost ties resolve to the lexicographically
    smallest (row, col) pair list.  Rows and columns may stay unmatched.
    """
    matrix = np.asarray(cost, dtype=float)
    if matrix.size == 0:
        return []
    if matrix.ndim != 2:
        raise ValueError("cost must be a 2-d matrix")
    allowed = np.isfinite(matrix) & (matrix <= gate)
    best_card, best_cost = _gated_optimum(matrix, allowed)
    if best_card == 0:
        return []

    pairs: list[tuple[int, int]] = []
    fixed_cost = 0.0
    live_rows = np.ones(matrix.shape[0], dtype=bool)
    live_cols = np.ones(matrix.shape[1], dtype=bool)
    for i in range(matrix.shape[0]):
        if len(pairs) == best_card:
            break
        for j in range(matrix.shape[1]):
            if not live_cols[j] or not allowed[i, j]:
                continue
            rows = live_rows.copy()
            cols = live_cols.copy()
            rows[i] = False
            cols[j] = False
            sub = matrix[np.ix_(rows, cols)]
            card, total = _gated_optimum(sub, allowed[np.ix_(rows, cols)])
            if card + len(pairs) + 1 == best_card and (
                fixed_cost + matrix[i, j] + total <= best_cost + 1e-9
            ):
                pairs.append((i, j))
                fixed_cost += matrix[i, j]
                live_rows[i] = False
                live_cols[j] = False
                break
        live_rows[i] = False
    return pairs


# --- tracklet construction ------------------------------------------------


class _LiveTrack:
    __slots__ = ("state", "class_label", "tracklet_id", "start", "boxes", "misses")

    def __init__(self, tracklet_id: int, det: Detection, cfg: Config):
        self.state = initial_state(det.box, r_meas=cfg.r_meas)
        self.class_label = det.label
        self.tracklet_id = tracklet_id
        self.start = det.frame
        self.boxes: list[Box2D] = [det.box]
        self.misses = 0

    def emit(self) -> Tracklet:
        return Tracklet(
            id=self.tracklet_id,
            class_label=self.class_label,
            start=self.start,
            boxes=tuple(self.boxes),
        )


def _association_cost(predicted: Box2D, det: Detection, cls: str, cfg: Config) -> float:
    if det.label != cls:
        return math.inf
    if cfg.distance == "center":
        pc, dc = predicted.center, det.box.center
        return math.hypot(pc.x - dc.x, pc.y - dc.y)
    return 1.0 - iou(predicted, det.box)


def build_tracklets(
    detections: list[Detection], meta: SequenceMeta, cfg: Config | None = None
) -> list[Tracklet]:
    """Associate per-frame detections into gap-free tracklets.

    Every detection above the confidence threshold lands in exactly one
    tracklet.  A track missing its detection starts a miss counter; after
    ``max_age`` consecutive misses the live track is dropped, and with a
    re-match before that the fragment observed so far is emitted and a
    fresh tracklet continues from the same filter state, so no tracklet
    ever contains a frame hole.
    """
    cfg = cfg or Config()
    cfg.validate()
    q = process_noise(cfg.q_pos, cfg.q_vel)
    r = measurement_noise(cfg.r_meas)

    by_frame: dict[int, list[Detection]] = {}
    last_frame = meta.frame_count
    for det in detections:
        if det.confidence < cfg.min_confidence:
            continue
        by_frame.setdefault(det.frame, []).append(det)
        last_frame = max(last_frame, det.frame)

    finished: list[Tracklet] = []
    live: list[_LiveTrack] = []
    next_id = 1

    for frame in range(1, last_frame + 1):
        predictions: list[Box2D] = []
        for track in live:
            track.state = kalman_predict(track.state, q)
            predictions.append(track.state.box)

        dets = by_frame.get(frame, [])
        matched_tracks: set[int] = set()
        matched_dets: set[int] = set()
        if live and dets:
            cost = np.array(
                [
                    [_association_cost(pred, det, track.class_label, cfg) for det in dets]
                    for track, pred in zip(live, predictions)
                ]
            )
            for ti, di in min_cost_assignment(cost, cfg.gate):
                track, det = live[ti], dets[di]
                track.state = kalman_update(track.state, det.box, r)
                if track.misses > 0:
                    # re-acquired after a hole: emit the fragment, keep the filter
                    finished.append(track.emit())
                    track.tracklet_id = next_id
                    next_id += 1
                    track.start = frame
                    track.boxes = [det.box]
                    track.misses = 0
                else:
                    track.boxes.append(det.box)
                matched_tracks.add(ti)
                matched_dets.add(di)

        survivors: list[_LiveTrack] = []
        for ti, track in enumerate(live):
            if ti in matched_tracks:
                survivors.append(track)
                continue
            track.misses += 1
            if track.misses >= cfg.max_age:
                finished.append(track.emit())
            else:
                survivors.append(track)
        live = survivors

        for di, det in enumerate(dets):
            if di in matched_dets:
                continue
            live.append(_LiveTrack(next_id, det, cfg))
            next_id += 1

    finished.extend(track.emit() for track in live)
    finished.sort(key=lambda t: t.id)
    return finished
