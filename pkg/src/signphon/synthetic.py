"""Seeded synthetic data: handshape prototypes, co-dependent
orientation/location samples, contingency records and rest-sign-rest videos.

Everything here is deterministic for a given seed and is used by the test
suite, the acceptance checks and the CLI fixtures.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .geometry import LocationConfig, orientation_from_vector
from .ingest import AnnotationRecord
from .labels import Handedness, Handshape, Location, Orientation
from .pose import MISSING, N_BODY, BodyPart, HandSkeleton, Keypoint, PoseFrame

FRAME_W, FRAME_H = 800, 600  # diagonal 1000 px, so the default threshold is 100 px

# A front-facing signer; the signer's right side is on the image left.
CANONICAL_BODY: dict[int, tuple[float, float]] = {
    BodyPart.NOSE: (400.0, 150.0),
    BodyPart.NECK: (400.0, 250.0),
    BodyPart.R_SHOULDER: (310.0, 260.0),
    BodyPart.L_SHOULDER: (490.0, 260.0),
    BodyPart.R_ELBOW: (280.0, 380.0),
    BodyPart.L_ELBOW: (520.0, 380.0),
    BodyPart.R_WRIST: (300.0, 480.0),
    BodyPart.L_WRIST: (500.0, 480.0),
    BodyPart.MID_HIP: (400.0, 470.0),
    BodyPart.R_EYE: (375.0, 125.0),
    BodyPart.L_EYE: (425.0, 125.0),
    BodyPart.R_EAR: (345.0, 145.0),
    BodyPart.L_EAR: (455.0, 145.0),
}

# ---------------------------------------------------------------------------
# hands

# finger chains in a right hand with the fingers up; wrist at the origin,
# y grows downward. (base x, base y, direction in degrees counter-clockwise
# from east, three segment lengths)
_FINGER_GEOMETRY = {
    "thumb": (-22.0, -18.0, 150.0, (22.0, 18.0, 15.0)),
    "index": (-20.0, -55.0, 97.0, (25.0, 18.0, 15.0)),
    "middle": (-6.0, -60.0, 90.0, (28.0, 20.0, 16.0)),
    "ring": (8.0, -57.0, 83.0, (26.0, 18.0, 15.0)),
    "little": (20.0, -50.0, 76.0, (20.0, 15.0, 12.0)),
}
_FINGER_ORDER = ("thumb", "index", "middle", "ring", "little")

# per prototype: flexion per finger (0 straight .. 1 curled into the palm),
# thumb direction, and a multiplier on the finger spread
_PROTOTYPES: dict[Handshape, tuple[tuple[float, ...], float, float]] = {
    Handshape.S_HAND: ((1.0, 1.0, 1.0, 1.0, 1.0), 40.0, 1.0),
    Handshape.ONE_HAND: ((0.0, 1.0, 1.0, 1.0, 1.0), 110.0, 1.0),
    Handshape.B_HAND: ((1.0, 0.0, 0.0, 0.0, 0.0), 150.0, 0.0),
    Handshape.B_HAND_TOMMEL: ((0.0, 0.0, 0.0, 0.0, 0.0), 185.0, 0.0),
    Handshape.C_HAND: ((0.5, 0.5, 0.5, 0.5, 0.5), 160.0, 0.5),
    Handshape.PAEDAGOG_HAND: ((0.0, 0.0, 0.6, 0.6, 0.6), 150.0, 1.0),
    Handshape.PEGE_HAND: ((1.0, 0.0, 1.0, 1.0, 1.0), 150.0, 1.0),
    Handshape.TWO_HAND: ((1.0, 0.0, 0.0, 1.0, 1.0), 150.0, 2.5),
    Handshape.G_HAND: ((0.0, 0.0, 1.0, 1.0, 1.0), 175.0, 1.0),
    Handshape.THREE_HAND: ((0.0, 0.0, 0.0, 1.0, 1.0), 150.0, 2.0),
    Handshape.FIVE_HAND: ((0.0, 0.0, 0.0, 0.0, 0.0), 165.0, 3.0),
    Handshape.NINE_HAND: ((0.7, 0.7, 0.0, 0.0, 0.0), 120.0, 1.5),
    Handshape.O_HAND: ((0.7, 0.7, 0.7, 0.7, 0.7), 80.0, 0.5),
}


def handshape_prototype(h: Handshape) -> np.ndarray:
    """(21, 2) keypoints of a handshape in hand coordinates (wrist at origin).

    Bending is a frontal projection: segment k of a finger with flexion f is
    shortened by ``cos(k * f * 90deg)`` and turns back toward the palm past
    90 degrees.
    """
    flex, thumb_dir, spread = _PROTOTYPES[Handshape(h)]
    pts = np.zeros((21, 2))
    slot = 1
    for finger, f in zip(_FINGER_ORDER, flex):
        bx, by, ang, lengths = _FINGER_GEOMETRY[finger]
        if finger == "thumb":
            ang = thumb_dir
        else:
            ang = 90.0 + (ang - 90.0) * spread
        u = np.array([math.cos(math.radians(ang)), -math.sin(math.radians(ang))])
        p = np.array([bx, by])
        pts[slot] = p
        for k, seg in enumerate(lengths, start=1):
            p = p + u * seg * math.cos(math.radians(k * f * 90.0))
            pts[slot + k] = p
        slot += 4
    return pts


def place_hand(
    local: np.ndarray,
    center: tuple[float, float],
    rotation_deg: float = 0.0,
    scale: float = 1.0,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> HandSkeleton:
    """Rotate (image-space, clockwise on screen for positive angles), scale
    and translate hand-local keypoints so their centroid lands on ``center``."""
    th = math.radians(rotation_deg)
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    pts = (local - local.mean(axis=0)) @ R.T * scale + np.asarray(center, dtype=float)
    if noise and rng is not None:
        pts = pts + rng.normal(0.0, noise, pts.shape)
    return HandSkeleton.from_xy(np.maximum(pts, 0.0))


def handshape_suite(
    n_per_class: int,
    seed: int,
    rotate: bool = False,
    noise: float = 1.5,
    scale_range: tuple[float, float] = (0.95, 1.05),
) -> tuple[list[HandSkeleton], list[Handshape]]:
    """Noisy copies of the 13 prototypes placed in a 800 x 600 frame.

    With ``rotate`` every hand gets a uniformly random in-plane rotation.
    """
    rng = np.random.default_rng(seed)
    hands, labels = [], []
    for h in Handshape:
        proto = handshape_prototype(h)
        for _ in range(n_per_class):
            center = (rng.uniform(150, FRAME_W - 150), rng.uniform(150, FRAME_H - 150))
            rot = rng.uniform(0, 360) if rotate else 0.0
            hands.append(place_hand(proto, center, rot, rng.uniform(*scale_range), noise, rng))
            labels.append(h)
    return hands, labels


# ---------------------------------------------------------------------------
# co-dependent orientation / location samples

_SECTOR_DEG = {
    Orientation.E: 0.0, Orientation.NE: 45.0, Orientation.N: 90.0, Orientation.NW: 135.0,
    Orientation.W: 180.0, Orientation.SW: 225.0, Orientation.S: 270.0, Orientation.SE: 315.0,
}
_ORIENTATIONS = list(Orientation)

# preferred finger direction per location for the dependent generator
PREFERRED_ORIENTATION = {
    Location.EARS: Orientation.N,
    Location.EYES: Orientation.NE,
    Location.NOSE: Orientation.N,
    Location.NECK: Orientation.NW,
    Location.SHOULDER: Orientation.W,
    Location.ABDOMINAL: Orientation.S,
    Location.NEUTRAL: Orientation.E,
}

CODEP_BODY_PARTS = (
    BodyPart.NOSE, BodyPart.NECK, BodyPart.R_SHOULDER, BodyPart.L_SHOULDER, BodyPart.R_EYE,
    BodyPart.L_EYE, BodyPart.R_EAR, BodyPart.L_EAR, BodyPart.MID_HIP,
)
CODEP_FEATURE_NAMES = tuple(
    [f"body{p}_{a}" for p in CODEP_BODY_PARTS for a in "xy"] + ["hand_x", "hand_y", "dir_x", "dir_y"]
)


def _place_near(loc: Location, body: dict[int, np.ndarray], cfg: LocationConfig, thr: float, rng) -> np.ndarray:
    """A hand centroid whose nearest body part is ``loc`` (or none within ``thr``)."""
    parts = {l: [body[s] for s in cfg.body_part_slots[l]] for l in cfg.locations}

    def nearest(c):
        d = {l: min(np.hypot(*(p - c)) for p in ps) for l, ps in parts.items()}
        best = min(d, key=d.get)
        return best, d[best]

    for _ in range(10_000):
        if loc is Location.NEUTRAL:
            c = np.array([rng.uniform(100, FRAME_W - 100), rng.uniform(100, FRAME_H - 100)])
            if nearest(c)[1] > thr:
                return c
        else:
            anchor = parts[loc][rng.integers(len(parts[loc]))]
            c = anchor + rng.normal(0.0, thr / 4, 2)
            lab, d = nearest(c)
            if lab is loc and d <= thr:
                return c
    raise RuntimeError(f"could not place a hand at {loc}")


def codependent_suite(
    n: int,
    seed: int,
    dependence: float = 0.8,
    direction_noise_deg: float = 35.0,
    body_jitter: float = 60.0,
    cfg: LocationConfig | None = None,
):
    """Keypoint-like features with location and orientation labels.

    Location is uniform over the seven classes and the hand is placed at
    (or, for neutral space, away from) that body part of a randomly shifted
    and scaled signer. With probability ``dependence`` the orientation is the
    location's preferred direction, otherwise uniform over all eight. The
    observed finger direction is the true direction (uniform within its
    sector) plus Gaussian noise, so orientation is only partly recoverable
    from the direction alone.

    Returns a :class:`~signphon.learn.data.LabeledDataset` with tasks
    ``orientation`` and ``location``.
    """
    from .learn.data import LabeledDataset

    cfg = cfg or LocationConfig()
    rng = np.random.default_rng(seed)
    thr = cfg.threshold_fraction * math.hypot(FRAME_W, FRAME_H)
    locs = list(Location)
    X, ys_o, ys_l = [], [], []
    for _ in range(n):
        shift = rng.uniform(-body_jitter, body_jitter, 2)
        scale = rng.uniform(0.9, 1.1)
        center = np.array([FRAME_W / 2, FRAME_H / 2])
        body = {k: (np.array(v) - center) * scale + center + shift for k, v in CANONICAL_BODY.items()}
        loc = locs[rng.integers(len(locs))]
        if rng.random() < dependence:
            ori = PREFERRED_ORIENTATION[loc]
        else:
            ori = _ORIENTATIONS[rng.integers(8)]
        hand = _place_near(loc, body, cfg, thr, rng)
        ang = math.radians(_SECTOR_DEG[ori] + rng.uniform(-22.5, 22.5) + rng.normal(0.0, direction_noise_deg))
        feats = [v for p in CODEP_BODY_PARTS for v in body[p]] + [hand[0], hand[1], math.cos(ang), -math.sin(ang)]
        X.append(feats)
        ys_o.append(ori.value)
        ys_l.append(loc.value)
    return LabeledDataset(np.array(X), {"orientation": np.array(ys_o), "location": np.array(ys_l)}, CODEP_FEATURE_NAMES)


# ---------------------------------------------------------------------------
# contingency records


def contingency_records(
    n: int,
    seed: int,
    planted: tuple[Orientation, Location] | None = None,
    boost: float = 5.0,
    hands: Sequence[Handedness] = (Handedness.RIGHT,),
) -> list[AnnotationRecord]:
    """Records with independent orientation and location, optionally with
    one planted dependent pair.

    Location is drawn from fixed non-uniform marginals; orientation given
    location is drawn from fixed orientation marginals, with the planted
    orientation's weight multiplied by ``boost`` under the planted location.
    """
    rng = np.random.default_rng(seed)
    ori_w = np.array([3, 2, 2, 1, 3, 1, 2, 2], dtype=float)
    loc_w = np.array([1, 1, 1, 2, 3, 2, 5], dtype=float)
    oris, locs = list(Orientation), list(Location)
    cond = np.tile(ori_w, (len(locs), 1))
    if planted is not None:
        cond[locs.index(Location(planted[1])), oris.index(Orientation(planted[0]))] *= boost
    cdf = np.cumsum(cond / cond.sum(axis=1, keepdims=True), axis=1)
    loc_idx = rng.choice(len(locs), size=n, p=loc_w / loc_w.sum())
    # inverse-CDF draw of the orientation given each record's location
    ori_idx = np.minimum((rng.random(n)[:, None] > cdf[loc_idx]).sum(axis=1), len(oris) - 1)
    hand_idx = rng.integers(len(hands), size=n)
    return [
        AnnotationRecord(f"s{i}_0000.png", 0, 0, hands[h], None, oris[o], locs[j])
        for i, (o, j, h) in enumerate(zip(ori_idx, loc_idx, hand_idx))
    ]


# ---------------------------------------------------------------------------
# videos

# per-frame horizontal hand displacement for the rest-sign-rest fixture:
# rest, accelerate, slow signing, accelerate, rest
REST_SIGN_REST_STEPS = (0, 0, 0, 1, 2, 5, 5, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 5, 5, 2, 1, 0, 0, 0, 0, 0)


def body_keypoints(offset=(0.0, 0.0)) -> tuple[Keypoint, ...]:
    pts = [MISSING] * N_BODY
    for k, (x, y) in CANONICAL_BODY.items():
        pts[k] = Keypoint(x + offset[0], y + offset[1])
    return tuple(pts)


def video_from_centroids(
    right: np.ndarray | None,
    left: np.ndarray | None = None,
    video: str = "synthetic",
    handshape: Handshape = Handshape.PEGE_HAND,
    rotation_deg: float = 0.0,
) -> list[PoseFrame]:
    """One frame per centroid row; a hand is absent when its array is None."""
    n = len(right) if right is not None else len(left)
    proto = handshape_prototype(handshape)
    frames = []
    for i in range(n):
        rh = place_hand(proto, right[i], rotation_deg) if right is not None else HandSkeleton.empty()
        lh = place_hand(proto * [-1, 1], left[i], -rotation_deg) if left is not None else HandSkeleton.empty()
        frames.append(PoseFrame(body_keypoints(), lh, rh, FRAME_W, FRAME_H, i, video))
    return frames


def rest_sign_rest_centroids(start=(300.0, 300.0), steps: Sequence[float] = REST_SIGN_REST_STEPS) -> np.ndarray:
    x = start[0] + np.concatenate([[0.0], np.cumsum(steps)])
    return np.column_stack([x, np.full(len(x), start[1])])


def rest_sign_rest_video(video: str = "rsr", **kw) -> list[PoseFrame]:
    """Right hand follows the fixture steps; the left hand rests."""
    right = rest_sign_rest_centroids()
    left = np.tile([500.0, 480.0], (len(right), 1))
    return video_from_centroids(right, left, video, **kw)


def stationary_video(n: int, video: str = "still") -> list[PoseFrame]:
    return video_from_centroids(np.tile([300.0, 300.0], (n, 1)), np.tile([500.0, 300.0], (n, 1)), video)


def orientation_of_rotation(rotation_deg: float) -> Orientation:
    """Orientation label a prototype hand gets after ``place_hand`` rotation."""
    th = math.radians(rotation_deg)
    # prototype radius -> middle metacarpal points straight up: (0, -1)
    return orientation_from_vector(math.sin(th), -math.cos(th))
