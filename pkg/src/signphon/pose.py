"""Per-frame pose keypoints.

Coordinates are image pixels with the origin at the top-left corner and
y growing downward. Undetected keypoints are the explicit ``MISSING``
sentinel, never ``(0, 0)``, which is a legitimate corner pixel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .labels import Handedness

FINGERS = ("thumb", "index", "middle", "ring", "little")
# base -> tip along each finger chain
BONES = ("carpal", "metacarpal", "proximal", "phalanx")

N_BODY = 25
N_HAND = 21
N_FACE = 70

# Hand slot layout (pose-estimator positional order). The wrist is the
# radius; the thumb has no carpal slot, its base keypoint is the trapezium.
RADIUS = 0
TRAPEZIUM = 1
_HAND_SLOTS: dict[tuple[str, str], int] = {
    ("thumb", "metacarpal"): 2,
    ("thumb", "proximal"): 3,
    ("thumb", "phalanx"): 4,
}
for _f, _finger in enumerate(FINGERS[1:]):
    for _b, _bone in enumerate(BONES):
        _HAND_SLOTS[(_finger, _bone)] = 5 + 4 * _f + _b

_names = ["radius", "trapezium"] + [""] * (N_HAND - 2)
for (_finger, _bone), _i in _HAND_SLOTS.items():
    _names[_i] = f"{_finger}_{'phalange' if _bone == 'phalanx' else _bone}"
# feature-file names, e.g. "index_phalange", "thumb_metacarpal"
HAND_SLOT_NAMES: tuple[str, ...] = tuple(_names)
del _names

# 20 bones of the hand skeleton: wrist to each finger base, then along the chain.
HAND_EDGES: tuple[tuple[int, int], ...] = tuple(
    edge
    for base in (1, 5, 9, 13, 17)
    for edge in ((RADIUS, base), (base, base + 1), (base + 1, base + 2), (base + 2, base + 3))
)


def hand_slot(finger: str, bone: str) -> int:
    """Index of a named hand keypoint, e.g. ``hand_slot("index", "phalanx") == 8``."""
    if finger == "thumb" and bone == "carpal":
        raise KeyError("the thumb has no carpal keypoint; use TRAPEZIUM")
    try:
        return _HAND_SLOTS[(finger, bone)]
    except KeyError:
        raise KeyError(f"unknown hand keypoint {finger}/{bone}") from None


class BodyPart:
    """BODY_25 indices used by the location classifier."""

    NOSE = 0
    NECK = 1
    R_SHOULDER = 2
    R_ELBOW = 3
    R_WRIST = 4
    L_SHOULDER = 5
    L_ELBOW = 6
    L_WRIST = 7
    MID_HIP = 8
    R_EYE = 15
    L_EYE = 16
    R_EAR = 17
    L_EAR = 18


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    confidence: float = 1.0
    detected: bool = True

    def __post_init__(self):
        if self.detected and (self.x < 0 or self.y < 0):
            raise ValueError(f"detected keypoint has negative coordinate ({self.x}, {self.y})")

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


MISSING = Keypoint(0.0, 0.0, 0.0, detected=False)


def _as_xy(points: tuple[Keypoint, ...]) -> np.ndarray:
    arr = np.array([(p.x, p.y) if p.detected else (np.nan, np.nan) for p in points], dtype=float)
    return arr.reshape(len(points), 2)


@dataclass(frozen=True)
class HandSkeleton:
    points: tuple[Keypoint, ...]

    def __post_init__(self):
        if len(self.points) != N_HAND:
            raise ValueError(f"hand skeleton needs {N_HAND} keypoints, got {len(self.points)}")

    @classmethod
    def from_xy(cls, xy, detected=None) -> "HandSkeleton":
        """Build from an (21, 2) array; NaN rows (or ``detected=False``) become MISSING."""
        xy = np.asarray(xy, dtype=float).reshape(N_HAND, 2)
        pts = []
        for i, (x, y) in enumerate(xy):
            ok = not (np.isnan(x) or np.isnan(y))
            if detected is not None:
                ok = ok and bool(detected[i])
            pts.append(Keypoint(float(x), float(y)) if ok else MISSING)
        return cls(tuple(pts))

    @classmethod
    def empty(cls) -> "HandSkeleton":
        return cls((MISSING,) * N_HAND)

    def __getitem__(self, i: int) -> Keypoint:
        return self.points[i]

    def get(self, finger: str, bone: str) -> Keypoint:
        return self.points[hand_slot(finger, bone)]

    @property
    def radius(self) -> Keypoint:
        return self.points[RADIUS]

    @property
    def trapezium(self) -> Keypoint:
        return self.points[TRAPEZIUM]

    @cached_property
    def xy(self) -> np.ndarray:
        """(21, 2) float array, NaN where undetected."""
        arr = _as_xy(self.points)
        arr.flags.writeable = False
        return arr

    @property
    def detected_mask(self) -> np.ndarray:
        return np.array([p.detected for p in self.points])

    @property
    def n_detected(self) -> int:
        return sum(p.detected for p in self.points)

    @property
    def complete(self) -> bool:
        return all(p.detected for p in self.points)


@dataclass(frozen=True)
class PoseFrame:
    body: tuple[Keypoint, ...]
    left_hand: HandSkeleton
    right_hand: HandSkeleton
    frame_width: float
    frame_height: float
    frame_index: int = 0
    source_video: str = ""
    face: tuple[Keypoint, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.body) != N_BODY:
            raise ValueError(f"body needs {N_BODY} keypoints, got {len(self.body)}")
        if self.face is not None and len(self.face) != N_FACE:
            raise ValueError(f"face needs {N_FACE} keypoints, got {len(self.face)}")
        if not (self.frame_width > 0 and self.frame_height > 0):
            raise ValueError("frame dimensions must be positive")
        if self.frame_index < 0:
            raise ValueError("frame_index must be non-negative")

    def hand(self, side: Handedness) -> HandSkeleton:
        return self.right_hand if Handedness(side) is Handedness.RIGHT else self.left_hand

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.frame_width, self.frame_height))

    @cached_property
    def body_xy(self) -> np.ndarray:
        arr = _as_xy(self.body)
        arr.flags.writeable = False
        return arr

    @property
    def frame_id(self) -> str:
        return f"{self.source_video}_{self.frame_index:04d}"
