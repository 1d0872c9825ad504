import math
import time
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from signphon.geometry import (
    LocationConfig,
    NoBodyPartsWarning,
    UndefinedOrientationError,
    detected_hands,
    distance_heatmap,
    distance_matrix,
    finger_orientation,
    hand_location,
    handedness_of,
    orientation_from_vector,
)
from signphon.labels import Handedness, Location, Orientation
from signphon.pose import MISSING, N_BODY, BodyPart, HandSkeleton, Keypoint, PoseFrame

COMPASS = [Orientation.N, Orientation.NE, Orientation.E, Orientation.SE,
           Orientation.S, Orientation.SW, Orientation.W, Orientation.NW]


def _two_point_hand(p, q):
    xy = np.full((21, 2), np.nan)
    xy[0], xy[10] = p, q
    return HandSkeleton.from_xy(xy)


def _rotate(v, deg):
    """Rotate an image-space vector clockwise on screen by ``deg``."""
    t = math.radians(deg)
    return (v[0] * math.cos(t) - v[1] * math.sin(t), v[0] * math.sin(t) + v[1] * math.cos(t))


# ---------------------------------------------------------------- orientation


def test_axis_aligned_examples():
    assert finger_orientation(_two_point_hand((100, 100), (100, 60))) is Orientation.N
    assert finger_orientation(_two_point_hand((100, 100), (140, 100))) is Orientation.E
    assert finger_orientation(_two_point_hand((100, 100), (100, 140))) is Orientation.S
    assert finger_orientation(_two_point_hand((100, 100), (60, 60))) is Orientation.NW


def test_undefined_orientation():
    with pytest.raises(UndefinedOrientationError):
        finger_orientation(_two_point_hand((5, 5), (5, 5)))
    with pytest.raises(UndefinedOrientationError):
        finger_orientation(HandSkeleton.empty())


def test_sweep_fills_bins_evenly():
    counts = {o: 0 for o in Orientation}
    for deg in range(360):
        t = math.radians(deg)
        counts[orientation_from_vector(math.cos(t), -math.sin(t))] += 1
    assert set(counts.values()) == {45}


def test_rotation_advances_one_step():
    for deg in range(360):
        t = math.radians(deg + 0.25)
        v = (math.cos(t), -math.sin(t))
        a = orientation_from_vector(*v)
        b = orientation_from_vector(*_rotate(v, 45))
        assert COMPASS.index(b) == (COMPASS.index(a) + 1) % 8


@given(st.floats(0.01, 100), st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 2 * math.pi))
def test_orientation_scale_invariant(k, cx, cy, theta):
    p, q = np.array([200.0, 200.0]), np.array([200 + 40 * math.cos(theta), 200 - 40 * math.sin(theta)])
    c = np.array([200 + cx, 200 + cy])
    a = finger_orientation(_two_point_hand(p, q))
    # about any centre, keeping coordinates non-negative
    sp, sq = c + k * (p - c), c + k * (q - c)
    shift = -min(sp.min(), sq.min(), 0.0)
    assert finger_orientation(_two_point_hand(sp + shift, sq + shift)) is a


# ---------------------------------------------------------------- location


def _body(parts):
    pts = [MISSING] * N_BODY
    for k, (x, y) in parts.items():
        pts[k] = Keypoint(x, y)
    return tuple(pts)


def _const_hand(c):
    return HandSkeleton.from_xy(np.tile(np.asarray(c, dtype=float), (21, 1)))


def _frame(parts, right=None, left=None, w=800, h=600):
    r = _const_hand(right) if right is not None else HandSkeleton.empty()
    l_ = _const_hand(left) if left is not None else HandSkeleton.empty()
    return PoseFrame(_body(parts), l_, r, w, h)


BODY = {BodyPart.NOSE: (400, 100), BodyPart.NECK: (400, 300), BodyPart.R_SHOULDER: (250, 300),
        BodyPart.L_SHOULDER: (550, 300), BodyPart.MID_HIP: (400, 550)}


def test_nearest_under_threshold():
    assert hand_location(_frame(BODY, right=(400, 150)), Handedness.RIGHT) is Location.NOSE


def test_all_over_threshold_is_neutral():
    assert hand_location(_frame(BODY, right=(700, 100)), Handedness.RIGHT) is Location.NEUTRAL


def test_boundary_inclusive_with_tie_priority():
    parts = {BodyPart.NOSE: (400, 100), BodyPart.NECK: (400, 300), BodyPart.R_SHOULDER: (520, 300)}
    f = _frame(parts, right=(460, 380))
    d = distance_matrix(f).column(Handedness.RIGHT)
    assert d[3] == d[4] == 100.0 == 0.1 * f.diagonal
    assert hand_location(f, Handedness.RIGHT) is Location.NECK


def test_lateral_parts_use_nearer_side():
    f = _frame(BODY, left=(540, 310))
    d = distance_matrix(f).column(Handedness.LEFT)
    assert d[4] == pytest.approx(math.hypot(10, 10))
    assert hand_location(f, Handedness.LEFT) is Location.SHOULDER


def test_no_body_parts_warns_neutral():
    with pytest.warns(NoBodyPartsWarning):
        assert hand_location(_frame({}, right=(10, 10)), Handedness.RIGHT) is Location.NEUTRAL


def test_missing_hand_raises():
    with pytest.raises(ValueError):
        hand_location(_frame(BODY), Handedness.RIGHT)


@given(st.floats(0, 800), st.floats(0, 600), st.sampled_from([0.5, 2.0, 3.0, 10.0]))
def test_location_scale_invariant(x, y, k):
    base = _frame(BODY, right=(x, y))
    scaled = _frame({p: (a * k, b * k) for p, (a, b) in BODY.items()}, right=(x * k, y * k), w=800 * k, h=600 * k)
    assert hand_location(scaled, Handedness.RIGHT) is hand_location(base, Handedness.RIGHT)


def test_smaller_threshold_grows_neutral(rng):
    frames = [_frame(BODY, right=tuple(rng.uniform(0, [800, 600]))) for _ in range(300)]
    prev = set()
    for frac in (0.5, 0.3, 0.2, 0.1, 0.05, 0.01):
        cfg = LocationConfig(threshold_fraction=frac)
        neutral = {i for i, f in enumerate(frames) if hand_location(f, Handedness.RIGHT, cfg) is Location.NEUTRAL}
        assert prev <= neutral
        prev = neutral


def test_location_config_validation():
    with pytest.raises(ValueError):
        LocationConfig(threshold_fraction=0.0)
    with pytest.raises(ValueError):
        LocationConfig(body_part_slots={Location.NOSE: ()})


# ---------------------------------------------------------------- heatmap


def test_heatmap_examples():
    hm = distance_heatmap([_frame(BODY, right=(400, 100))])
    assert hm.values[2, 0] == 0.0  # nose, right hand
    assert hm.values[0, 0] == 1.0  # ears never detected
    assert np.all(hm.values[:, 1] == 1.0)  # left hand absent

    f1 = _frame({BodyPart.NOSE: (0, 0)}, right=(200, 0))  # 200 / 1000
    f2 = _frame({BodyPart.NOSE: (0, 0)}, right=(400, 0))  # 400 / 1000
    assert distance_heatmap([f1, f2]).values[2, 0] == pytest.approx(0.3)


def test_heatmap_csv():
    text = distance_heatmap([_frame(BODY, right=(400, 100))]).to_csv()
    lines = text.splitlines()
    assert lines[0] == "location,right,left"
    assert lines[3] == "nose,0.000000,1.000000"


def test_heatmap_needs_frames():
    with pytest.raises(ValueError):
        distance_heatmap([])


# ---------------------------------------------------------------- handedness


def test_handedness_of_slot():
    assert handedness_of("right") is Handedness.RIGHT
    assert handedness_of(Handedness.LEFT) is Handedness.LEFT


def test_detected_hands():
    assert detected_hands(_frame(BODY)) == []
    assert detected_hands(_frame(BODY, right=(1, 1))) == [Handedness.RIGHT]
    assert detected_hands(_frame(BODY, right=(1, 1), left=(2, 2))) == [Handedness.RIGHT, Handedness.LEFT]
