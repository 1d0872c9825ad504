import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from signphon.features import (
    DISTANCE_FEATURE_NAMES,
    RAW_FEATURE_NAMES,
    IncompleteHandError,
    crop_origin,
    distance_features,
    hand_features,
    raw_features,
    read_feature_csv,
    render_skeleton,
    write_feature_csv,
)
from signphon.pose import HAND_EDGES, HandSkeleton, hand_slot

TIPS = [0, 4, 8, 12, 16, 20]


def _hand(xy):
    return HandSkeleton.from_xy(np.asarray(xy, dtype=float))


def test_names():
    assert len(RAW_FEATURE_NAMES) == 42 and RAW_FEATURE_NAMES[:2] == ("radius_x", "radius_y")
    assert "index_phalange_y" in RAW_FEATURE_NAMES
    assert len(DISTANCE_FEATURE_NAMES) == 15
    assert DISTANCE_FEATURE_NAMES[0] == "radius_thumb" and "thumb_little" in DISTANCE_FEATURE_NAMES


def test_raw_zero_hand():
    assert np.array_equal(raw_features(_hand(np.zeros((21, 2)))), np.zeros(42))


def test_raw_radius_first():
    xy = np.ones((21, 2))
    xy[0] = (3, 7)
    assert raw_features(_hand(xy))[:2].tolist() == [3.0, 7.0]


def test_raw_matches_slot_readout(rng):
    h = _hand(rng.uniform(0, 400, (21, 2)))
    expected = []
    for name in RAW_FEATURE_NAMES:
        slot_name, axis = name.rsplit("_", 1)
        if slot_name in ("radius", "trapezium"):
            kp = h.radius if slot_name == "radius" else h.trapezium
        else:
            finger, bone = slot_name.split("_")
            kp = h.get(finger, "phalanx" if bone == "phalange" else bone)
        expected.append(kp.x if axis == "x" else kp.y)
    assert raw_features(h).tolist() == expected


def test_incomplete_hand_rejected():
    xy = np.ones((21, 2))
    xy[8] = np.nan
    with pytest.raises(IncompleteHandError, match="index_phalange"):
        raw_features(_hand(xy))
    with pytest.raises(IncompleteHandError, match="index"):
        distance_features(_hand(xy))
    xy = np.ones((21, 2))
    xy[6] = np.nan  # not involved in distances
    assert len(distance_features(_hand(xy))) == 15


def test_distance_examples():
    assert np.array_equal(distance_features(_hand(np.full((21, 2), 5.0))), np.zeros(15))
    xy = np.full((21, 2), 50.0)
    xy[0] = (0, 0)
    xy[4] = (3, 4)
    assert distance_features(_hand(xy))[0] == pytest.approx(5.0)


def test_distance_matches_pairwise_oracle(rng):
    xy = rng.uniform(0, 400, (21, 2))
    expected = [math.dist(xy[a], xy[b]) for a, b in itertools.combinations(TIPS, 2)]
    assert np.allclose(distance_features(_hand(xy)), expected, atol=1e-9, rtol=0)


def test_hand_features_dispatch():
    h = _hand(np.ones((21, 2)))
    assert len(hand_features(h, "raw")) == 42 and len(hand_features(h, "distance")) == 15
    with pytest.raises(ValueError):
        hand_features(h, "pixels")


@given(st.floats(0, 2 * math.pi), st.floats(-200, 200), st.floats(-200, 200))
def test_distance_rigid_invariance(theta, tx, ty):
    xy = np.random.default_rng(3).uniform(300, 500, (21, 2))
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    moved = (xy - 400) @ R.T + 400 + [tx, ty]
    assert np.max(np.abs(distance_features(_hand(moved)) - distance_features(_hand(xy)))) < 1e-6


def test_raw_not_translation_invariant():
    xy = np.random.default_rng(3).uniform(0, 100, (21, 2))
    assert not np.allclose(raw_features(_hand(xy + 10)), raw_features(_hand(xy)))


@given(st.integers(0, 2**32 - 1))
def test_distance_triangle_inequality(seed):
    xy = np.random.default_rng(seed).uniform(0, 100, (21, 2))
    d = distance_features(_hand(xy))
    pair = {p: v for p, v in zip(itertools.combinations(range(6), 2), d)}
    dist = lambda a, b: 0.0 if a == b else pair[(min(a, b), max(a, b))]  # noqa: E731
    for a, b, c in itertools.permutations(range(6), 3):
        assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-9


# ---------------------------------------------------------------- raster


def _oracle_raster(xy, ok, size=128, k=10, margin=4):
    """Per-edge sampling with nearest-cell rounding, written independently."""
    pts = [tuple(p) for p, m in zip(xy, ok) if m]
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    ext = max(max(xs) - min(xs), max(ys) - min(ys))
    s = (size - 1 - 2 * margin) / ext
    cells = set()
    for a, b in HAND_EDGES:
        if not (ok[a] and ok[b]):
            continue
        ax, ay = (xy[a][0] - min(xs)) * s + margin, (xy[a][1] - min(ys)) * s + margin
        bx, by = (xy[b][0] - min(xs)) * s + margin, (xy[b][1] - min(ys)) * s + margin
        for i in range(k + 2):
            t = i / (k + 1)
            cells.add((math.floor(ay + t * (by - ay) + 0.5), math.floor(ax + t * (bx - ax) + 0.5)))
    return cells


def test_raster_matches_oracle(rng):
    for _ in range(10):
        xy = rng.uniform(0, 300, (21, 2))
        img = render_skeleton(_hand(xy))
        assert img.shape == (128, 128)
        assert {tuple(c) for c in np.argwhere(img)} == _oracle_raster(xy, [True] * 21)


def test_two_endpoints_only():
    xy = np.full((21, 2), np.nan)
    xy[0], xy[1] = (10, 10), (60, 40)
    img = render_skeleton(_hand(xy))
    # extent 50 px maps onto 119 cells: (10,10) -> (4,4), (60,40) -> (123, 75.4)
    assert img[4, 4] == 1 and img[75, 123] == 1
    assert 2 <= img.sum() <= 12


def test_vertical_bone():
    xy = np.full((21, 2), np.nan)
    xy[0], xy[1] = (50, 10), (50, 90)
    cols = np.argwhere(render_skeleton(_hand(xy)))[:, 1]
    assert len(set(cols)) == 1


def test_degenerate_raster():
    img = render_skeleton(_hand(np.full((21, 2), 7.0)))
    assert img.sum() == 1 and img[64, 64] == 1


@given(st.sampled_from([0.25, 0.5, 2.0, 4.0, 8.0]), st.integers(0, 1000))
def test_raster_scale_invariance(scale, seed):
    xy = np.random.default_rng(seed).uniform(10, 200, (21, 2))
    assert np.array_equal(render_skeleton(_hand(xy * scale)), render_skeleton(_hand(xy)))


# ---------------------------------------------------------------- crop


def test_crop_examples():
    assert crop_origin((288, 352), 512, 512) == (224, 288)
    assert crop_origin((0, 0), 512, 512) == (0, 0)
    assert crop_origin((512, 512), 512, 512) == (384, 384)
    assert crop_origin((700, 500), 800, 600) == (608, 416)
    with pytest.raises(ValueError):
        crop_origin((10, 10), 100, 512)


@given(st.floats(0, 800), st.floats(0, 600))
def test_crop_inside_frame(x, y):
    x0, y0 = crop_origin((x, y), 800, 600)
    assert x0 % 32 == 0 and y0 % 32 == 0
    assert 0 <= x0 <= 800 - 128 and 0 <= y0 <= 600 - 128


# ---------------------------------------------------------------- csv


def test_feature_csv_round_trip(rng):
    X = rng.normal(size=(5, 3))
    labels = {"handshape": ["s-hand", "1-hand", "s-hand", "c-hand", "o-hand"]}
    text = write_feature_csv(X, ["a", "b", "c"], labels, sample_ids=[f"v_{i}" for i in range(5)])
    assert text.splitlines()[0] == "sample,a,b,c,handshape"
    X2, names, labels2, ids = read_feature_csv(text, ["handshape", "location"])
    assert np.array_equal(X, X2) and names == ["a", "b", "c"] and labels2 == labels
    assert ids == [f"v_{i}" for i in range(5)]
