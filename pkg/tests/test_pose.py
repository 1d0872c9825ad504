import numpy as np
import pytest

from signphon.labels import Handedness
from signphon.pose import (
    HAND_EDGES,
    HAND_SLOT_NAMES,
    MISSING,
    N_BODY,
    HandSkeleton,
    Keypoint,
    PoseFrame,
    hand_slot,
)


def test_slot_layout():
    assert hand_slot("thumb", "phalanx") == 4
    assert hand_slot("index", "carpal") == 5
    assert hand_slot("middle", "metacarpal") == 10
    assert hand_slot("little", "phalanx") == 20
    with pytest.raises(KeyError):
        hand_slot("thumb", "carpal")
    assert len(set(HAND_SLOT_NAMES)) == 21
    assert HAND_SLOT_NAMES[8] == "index_phalange"


def test_edges_form_a_tree_over_all_slots():
    assert len(HAND_EDGES) == 20
    assert {v for e in HAND_EDGES for v in e} == set(range(21))


def test_missing_sentinel_differs_from_origin():
    origin = Keypoint(0.0, 0.0)
    assert origin.detected and not MISSING.detected
    assert origin != MISSING


def test_negative_detected_coordinates_rejected():
    with pytest.raises(ValueError):
        Keypoint(-1.0, 3.0)


def test_hand_from_xy_marks_nan_missing():
    xy = np.arange(42, dtype=float).reshape(21, 2)
    xy[4] = np.nan
    h = HandSkeleton.from_xy(xy)
    assert not h.get("thumb", "phalanx").detected
    assert h.n_detected == 20 and not h.complete
    assert np.isnan(h.xy[4]).all()
    assert h.radius == Keypoint(0.0, 1.0)


def test_hand_requires_21_points():
    with pytest.raises(ValueError):
        HandSkeleton((MISSING,) * 20)


def _frame(**kw):
    args = dict(body=(MISSING,) * N_BODY, left_hand=HandSkeleton.empty(), right_hand=HandSkeleton.empty(),
                frame_width=640, frame_height=480)
    args.update(kw)
    return PoseFrame(**args)


def test_frame_validation_and_accessors():
    f = _frame(frame_index=21, source_video="2169")
    assert f.diagonal == pytest.approx(800.0)
    assert f.frame_id == "2169_0021"
    assert f.hand(Handedness.LEFT) is f.left_hand
    with pytest.raises(ValueError):
        _frame(frame_width=0)
    with pytest.raises(ValueError):
        _frame(frame_index=-1)
    with pytest.raises(ValueError):
        _frame(body=(MISSING,) * 18)


def test_frames_are_immutable():
    f = _frame()
    with pytest.raises(AttributeError):
        f.frame_index = 3
