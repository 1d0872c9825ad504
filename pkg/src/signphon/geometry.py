"""Closed-form orientation, location and handedness labels from keypoints."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .labels import Handedness, Location, Orientation
from .pose import BodyPart, HandSkeleton, PoseFrame, hand_slot
from .segmentation import hand_centroid


class UndefinedOrientationError(ValueError):
    pass


class NoBodyPartsWarning(UserWarning):
    """No body part of the location table was detected; the hand is labelled neutral."""


# counter-clockwise from east, 45 degrees apart
_SECTORS = (
    Orientation.E,
    Orientation.NE,
    Orientation.N,
    Orientation.NW,
    Orientation.W,
    Orientation.SW,
    Orientation.S,
    Orientation.SE,
)
MIDDLE_METACARPAL = hand_slot("middle", "metacarpal")


def orientation_from_vector(dx: float, dy: float) -> Orientation:
    """Compass sector of an image-space vector (y grows downward).

    Sectors are 45 degrees wide, centred on the compass directions and
    half-open: ``[centre - 22.5, centre + 22.5)``.
    """
    if dx == 0 and dy == 0:
        raise UndefinedOrientationError("zero-length direction")
    deg = math.degrees(math.atan2(-dy, dx))
    return _SECTORS[int(math.floor((deg + 22.5) / 45.0)) % 8]


def finger_orientation(hand: HandSkeleton) -> Orientation:
    """Direction from the radius to the middle-finger metacarpal keypoint."""
    p, q = hand.radius, hand[MIDDLE_METACARPAL]
    if not (p.detected and q.detected):
        raise UndefinedOrientationError("radius or middle metacarpal undetected")
    if (p.x, p.y) == (q.x, q.y):
        raise UndefinedOrientationError("radius and middle metacarpal coincide")
    return orientation_from_vector(q.x - p.x, q.y - p.y)


def _default_slots() -> dict[Location, tuple[int, ...]]:
    return {
        Location.EARS: (BodyPart.R_EAR, BodyPart.L_EAR),
        Location.EYES: (BodyPart.R_EYE, BodyPart.L_EYE),
        Location.NOSE: (BodyPart.NOSE,),
        Location.NECK: (BodyPart.NECK,),
        Location.SHOULDER: (BodyPart.R_SHOULDER, BodyPart.L_SHOULDER),
        # no abdomen keypoint in the 25-point body set; mid-hip stands in
        Location.ABDOMINAL: (BodyPart.MID_HIP,),
    }


@dataclass(frozen=True)
class LocationConfig:
    """``body_part_slots`` order is also the tie-break priority (head first)."""

    threshold_fraction: float = 0.10
    body_part_slots: Mapping[Location, tuple[int, ...]] = field(default_factory=_default_slots)

    def __post_init__(self):
        if not 0 < self.threshold_fraction < 1:
            raise ValueError("threshold_fraction must lie in (0, 1)")
        for loc, slots in self.body_part_slots.items():
            if Location(loc) is Location.NEUTRAL:
                raise ValueError("neutral space has no body keypoints")
            if not slots:
                raise ValueError(f"location {loc} needs at least one body keypoint")

    @property
    def locations(self) -> tuple[Location, ...]:
        return tuple(Location(k) for k in self.body_part_slots)


@dataclass(frozen=True)
class DistanceMatrix:
    """Hand-centroid to body-part distances in pixels; NaN where unavailable.

    Rows follow ``locations``; columns are (right hand, left hand).
    """

    locations: tuple[Location, ...]
    values: np.ndarray

    def column(self, hand: Handedness) -> np.ndarray:
        return self.values[:, 0 if Handedness(hand) is Handedness.RIGHT else 1]


def _part_distance(frame: PoseFrame, slots: Iterable[int], c: tuple[float, float] | None) -> float:
    if c is None:
        return math.nan
    best = math.nan
    for s in slots:
        kp = frame.body[s]
        if kp.detected:
            d = math.hypot(kp.x - c[0], kp.y - c[1])
            if not d >= best:  # also true while best is NaN
                best = d
    return best


def distance_matrix(frame: PoseFrame, cfg: LocationConfig | None = None) -> DistanceMatrix:
    """Lateralised parts use the nearer of their two sides."""
    cfg = cfg or LocationConfig()
    cents = [hand_centroid(frame.right_hand), hand_centroid(frame.left_hand)]
    vals = np.array(
        [[_part_distance(frame, cfg.body_part_slots[loc], c) for c in cents] for loc in cfg.locations],
        dtype=float,
    ).reshape(len(cfg.locations), 2)
    return DistanceMatrix(cfg.locations, vals)


def hand_location(frame: PoseFrame, hand: Handedness, cfg: LocationConfig | None = None) -> Location:
    """Nearest body part if within ``threshold_fraction`` of the image diagonal
    (inclusive), otherwise neutral space. Equal distances resolve in
    ``cfg.body_part_slots`` order."""
    cfg = cfg or LocationConfig()
    if hand_centroid(frame.hand(hand)) is None:
        raise ValueError(f"{Handedness(hand).value} hand not detected")
    col = distance_matrix(frame, cfg).column(hand)
    if np.isnan(col).all():
        warnings.warn("no body part detected; labelling neutral", NoBodyPartsWarning, stacklevel=2)
        return Location.NEUTRAL
    i = int(np.nanargmin(col))  # first minimum wins ties
    if col[i] <= cfg.threshold_fraction * frame.diagonal:
        return cfg.locations[i]
    return Location.NEUTRAL


@dataclass(frozen=True)
class Heatmap:
    locations: tuple[Location, ...]
    values: np.ndarray  # (locations, 2): mean distance / diagonal, columns right, left

    def to_csv(self) -> str:
        lines = ["location,right,left"]
        for loc, (r, l) in zip(self.locations, self.values):
            lines.append(f"{loc.value},{r:.6f},{l:.6f}")
        return "\n".join(lines) + "\n"


def distance_heatmap(frames: Iterable[PoseFrame], cfg: LocationConfig | None = None) -> Heatmap:
    """Mean normalised hand to body-part distance per cell.

    A body part (or hand) that is not visible contributes 1.0.
    """
    cfg = cfg or LocationConfig()
    total = np.zeros((len(cfg.locations), 2))
    n = 0
    for f in frames:
        d = distance_matrix(f, cfg).values / f.diagonal
        total += np.where(np.isnan(d), 1.0, d)
        n += 1
    if n == 0:
        raise ValueError("distance_heatmap needs at least one frame")
    return Heatmap(cfg.locations, total / n)


def handedness_of(slot: str | Handedness) -> Handedness:
    """Handedness of a pose hand slot (``"right"``/``"left"`` or a Handedness)."""
    return Handedness(slot)


def detected_hands(frame: PoseFrame) -> list[Handedness]:
    """Hands with at least one detected keypoint, right first."""
    return [h for h in (Handedness.RIGHT, Handedness.LEFT) if frame.hand(h).n_detected > 0]

