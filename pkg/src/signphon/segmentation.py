"""Split sign frames from rest/transition frames by hand-centroid speed.

Speed for a window of consecutive frames is the longer side of the
minimum-area rectangle enclosing the window's hand centroids. The sign is
taken to lie between the first and the last local maximum of that speed
series.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .labels import Handedness
from .pose import HandSkeleton, PoseFrame

logger = logging.getLogger(__name__)


def hand_centroid(hand: HandSkeleton) -> tuple[float, float] | None:
    """Mean of the detected keypoints, or None if the hand was not detected."""
    xy = hand.xy[hand.detected_mask]
    if len(xy) == 0:
        return None
    cx, cy = xy.mean(axis=0)
    return float(cx), float(cy)


# ---------------------------------------------------------------------------
# minimum bounding rectangle


def convex_hull(points) -> np.ndarray:
    """Counter-clockwise hull vertices (monotone chain), collinear points dropped.

    Returns a single row for coincident input and the two extremes for
    collinear input.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


@dataclass(frozen=True)
class Rectangle:
    center: tuple[float, float]
    width: float  # extent along `angle`
    height: float  # extent perpendicular to `angle`
    angle: float  # radians, direction of the `width` side

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def long_side(self) -> float:
        return max(self.width, self.height)

    def corners(self) -> np.ndarray:
        u = np.array([np.cos(self.angle), np.sin(self.angle)])
        v = np.array([-u[1], u[0]])
        c = np.asarray(self.center)
        hw, hh = self.width / 2, self.height / 2
        return np.array([c - hw * u - hh * v, c + hw * u - hh * v, c + hw * u + hh * v, c - hw * u + hh * v])


def minimum_bounding_rectangle(points) -> Rectangle:
    """Minimum-area enclosing rectangle by rotating calipers over the hull.

    One side of the optimal rectangle is collinear with a hull edge, so only
    hull-edge directions are tried. The optimum is not always unique (for
    three points every edge gives the same area); among rectangles whose
    area ties within a relative 1e-9 the one with the longest side wins,
    which keeps the long side invariant under rigid motion.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("minimum_bounding_rectangle needs at least one point")
    hull = convex_hull(pts)
    if len(hull) == 1:
        x, y = hull[0]
        return Rectangle((float(x), float(y)), 0.0, 0.0, 0.0)

    edges = np.roll(hull, -1, axis=0) - hull
    theta = np.arctan2(edges[:, 1], edges[:, 0])
    u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    v = np.stack([-u[:, 1], u[:, 0]], axis=1)
    pu, pv = hull @ u.T, hull @ v.T
    w = pu.max(axis=0) - pu.min(axis=0)
    h = pv.max(axis=0) - pv.min(axis=0)
    area = w * h
    tol = 1e-9 * max(float(np.max(np.maximum(w, h))) ** 2, 1e-300)
    tied = np.flatnonzero(area <= area.min() + tol)
    k = int(tied[np.argmax(np.maximum(w, h)[tied])])
    mu = (pu[:, k].max() + pu[:, k].min()) / 2
    mv = (pv[:, k].max() + pv[:, k].min()) / 2
    c = mu * u[k] + mv * v[k]
    return Rectangle((float(c[0]), float(c[1])), float(w[k]), float(h[k]), float(theta[k]))


# ---------------------------------------------------------------------------
# speed series


@dataclass(frozen=True)
class CentroidTrack:
    """Per-frame hand centroids; rows are NaN where the hand was not detected."""

    centroids: np.ndarray
    hand: Handedness

    def __len__(self) -> int:
        return len(self.centroids)

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.centroids).any(axis=1)

    @classmethod
    def from_frames(cls, frames: Sequence[PoseFrame], hand: Handedness) -> "CentroidTrack":
        rows = []
        for f in frames:
            c = hand_centroid(f.hand(hand))
            rows.append(c if c is not None else (np.nan, np.nan))
        return cls(np.asarray(rows, dtype=float).reshape(-1, 2), Handedness(hand))

    @classmethod
    def from_points(cls, points, hand: Handedness = Handedness.RIGHT) -> "CentroidTrack":
        return cls(np.asarray(points, dtype=float).reshape(-1, 2), Handedness(hand))


@dataclass(frozen=True)
class SpeedSeries:
    """Speed (pixels per window); value ``t`` covers frames ``t .. t + window - 1``."""

    speeds: np.ndarray
    window: int

    def __len__(self) -> int:
        return len(self.speeds)

    @property
    def total(self) -> float:
        return float(self.speeds.sum())


def window_speed(track: CentroidTrack, window: int = 3) -> SpeedSeries:
    """Longest side of the minimum bounding rectangle of each window of centroids.

    Frames where the hand is absent are left out of their windows; a window
    with no detected centroid has speed 0.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(track) - window + 1
    if n <= 0:
        return SpeedSeries(np.zeros(0), window)
    c = track.centroids
    ok = track.present
    out = np.zeros(n)
    for t in range(n):
        pts = c[t : t + window][ok[t : t + window]]
        if len(pts):
            out[t] = minimum_bounding_rectangle(pts).long_side
    return SpeedSeries(out, window)


def find_maxima(speeds) -> list[int]:
    """Interior indices where the forward difference turns from > 0 to <= 0.

    A plateau after a rise counts once, at its first index.
    """
    s = np.asarray(getattr(speeds, "speeds", speeds), dtype=float)
    if len(s) < 3:
        return []
    slope = np.diff(s)
    return [t for t in range(1, len(s) - 1) if slope[t - 1] > 0 and slope[t] <= 0]


def find_sign_boundaries(speeds) -> tuple[int, int]:
    """(first maximum, last maximum), inclusive; the full range when there is none."""
    s = np.asarray(getattr(speeds, "speeds", speeds), dtype=float)
    maxima = find_maxima(s)
    if not maxima:
        return 0, max(len(s) - 1, 0)
    return maxima[0], maxima[-1]


@dataclass(frozen=True)
class Segment:
    start: int  # first kept frame, inclusive
    end: int  # last kept frame, inclusive
    hand: Handedness | None
    found_maxima: bool

    @property
    def kept(self) -> range:
        return range(self.start, self.end + 1)


def segment_indices(frames: Sequence[PoseFrame], window: int = 3) -> Segment:
    """Kept frame range for one video, driven by the hand that travels more."""
    n = len(frames)
    if n == 0:
        return Segment(0, -1, None, False)
    series = {
        side: window_speed(CentroidTrack.from_frames(frames, side), window)
        for side in (Handedness.RIGHT, Handedness.LEFT)
    }
    # ties go to the right hand
    hand = max(series, key=lambda side: (series[side].total, side is Handedness.RIGHT))
    speeds = series[hand]
    maxima = find_maxima(speeds)
    if not maxima:
        return Segment(0, n - 1, hand, False)
    start, end = maxima[0], maxima[-1]
    return Segment(start, min(end + window - 1, n - 1), hand, True)


def segment_video(frames: Sequence[PoseFrame], window: int = 3) -> list[PoseFrame]:
    seg = segment_indices(frames, window)
    if not seg.found_maxima:
        logger.info("no speed maxima found; keeping all %d frames", len(frames))
    return list(frames[seg.start : seg.end + 1])
