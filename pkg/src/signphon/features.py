"""Hand feature vectors and the binary skeleton raster."""

from __future__ import annotations

import csv
import io
import math
from typing import Iterable, Sequence

import numpy as np

from .pose import HAND_EDGES, HAND_SLOT_NAMES, RADIUS, HandSkeleton, hand_slot


class IncompleteHandError(ValueError):
    """A keypoint required by a feature is undetected."""


# raw: (x, y) of every slot in positional order, radius first
RAW_FEATURE_NAMES: tuple[str, ...] = tuple(f"{name}_{axis}" for name in HAND_SLOT_NAMES for axis in "xy")

# fingertips stand in for whole fingers in the distance set
_TIP_NAMES = ("radius", "thumb", "index", "middle", "ring", "little")
_TIP_SLOTS = (RADIUS,) + tuple(hand_slot(f, "phalanx") for f in _TIP_NAMES[1:])
DISTANCE_PAIRS: tuple[tuple[int, int], ...] = tuple(
    (i, j) for i in range(len(_TIP_SLOTS)) for j in range(i + 1, len(_TIP_SLOTS))
)
DISTANCE_FEATURE_NAMES: tuple[str, ...] = tuple(f"{_TIP_NAMES[i]}_{_TIP_NAMES[j]}" for i, j in DISTANCE_PAIRS)

FEATURE_SETS = {"raw": RAW_FEATURE_NAMES, "distance": DISTANCE_FEATURE_NAMES}


def raw_features(hand: HandSkeleton) -> np.ndarray:
    """42 values: x, y of each of the 21 keypoints; no normalisation."""
    if not hand.complete:
        missing = [HAND_SLOT_NAMES[i] for i, p in enumerate(hand.points) if not p.detected]
        raise IncompleteHandError(f"undetected keypoints: {', '.join(missing)}")
    return np.asarray(hand.xy, dtype=float).reshape(-1).copy()


def distance_features(hand: HandSkeleton) -> np.ndarray:
    """15 Euclidean distances among the radius and the five fingertips."""
    pts = []
    for name, slot in zip(_TIP_NAMES, _TIP_SLOTS):
        p = hand[slot]
        if not p.detected:
            raise IncompleteHandError(f"undetected keypoint: {name}")
        pts.append((p.x, p.y))
    pts = np.asarray(pts)
    i, j = np.array(DISTANCE_PAIRS).T
    return np.hypot(*(pts[i] - pts[j]).T)


def hand_features(hand: HandSkeleton, kind: str) -> np.ndarray:
    if kind == "raw":
        return raw_features(hand)
    if kind == "distance":
        return distance_features(hand)
    raise ValueError(f"unknown feature set {kind!r}; expected one of {sorted(FEATURE_SETS)}")


def _cell(v: float) -> int:
    return int(math.floor(v + 0.5))


def render_skeleton(hand: HandSkeleton, size: int = 128, fill_steps: int = 10, margin: int = 4) -> np.ndarray:
    """Rasterise the hand skeleton into a ``size`` x ``size`` binary image.

    Keypoints are scaled into ``[margin, size - 1 - margin]`` with one scale
    factor for both axes (aspect ratio kept). Every bone is drawn as its two
    end cells plus ``fill_steps`` evenly spaced interior samples of the
    segment between them; bones with an undetected end are skipped.
    """
    img = np.zeros((size, size), dtype=np.uint8)
    xy = hand.xy
    ok = hand.detected_mask
    if not ok.any():
        return img
    lo = xy[ok].min(axis=0)
    extent = float((xy[ok].max(axis=0) - lo).max())
    if extent == 0.0:
        img[size // 2, size // 2] = 1
        return img
    scale = (size - 1 - 2 * margin) / extent
    norm = (xy - lo) * scale + margin

    for a, b in HAND_EDGES:
        if not (ok[a] and ok[b]):
            continue
        p, q = norm[a], norm[b]
        # parameterised over the segment, so vertical bones need no special case
        ts = np.arange(fill_steps + 2) / (fill_steps + 1)
        for t in ts:
            x, y = p + t * (q - p)
            img[_cell(y), _cell(x)] = 1
    return img


def crop_origin(centroid, frame_w: float, frame_h: float, size: int = 128, snap: int = 32) -> tuple[int, int]:
    """Top-left corner of a ``size`` box centred on ``centroid``, kept inside
    the frame and snapped down to a multiple of ``snap``."""
    if frame_w < size or frame_h < size:
        raise ValueError(f"frame {frame_w}x{frame_h} is smaller than the {size}x{size} crop")
    cx, cy = centroid
    x0 = min(max(cx - size / 2, 0.0), frame_w - size)
    y0 = min(max(cy - size / 2, 0.0), frame_h - size)
    return int(x0 // snap) * snap, int(y0 // snap) * snap


# ---------------------------------------------------------------------------
# CSV feature matrices


def write_feature_csv(
    features: np.ndarray,
    feature_names: Sequence[str],
    labels: dict[str, Sequence[str]],
    sample_ids: Sequence[str] | None = None,
) -> str:
    """Header row of feature names, one row per sample, label columns last.

    ``labels`` maps a task name to per-sample tokens. A leading ``sample``
    column is written when ``sample_ids`` is given.
    """
    X = np.asarray(features, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = (["sample"] if sample_ids is not None else []) + list(feature_names) + list(labels)
    w.writerow(head)
    for i, row in enumerate(X):
        out = [sample_ids[i]] if sample_ids is not None else []
        out += [repr(float(v)) for v in row]
        out += [str(labels[t][i]) for t in labels]
        w.writerow(out)
    return buf.getvalue()


def read_feature_csv(text: str, label_columns: Iterable[str]) -> tuple[np.ndarray, list[str], dict[str, list[str]], list[str] | None]:
    """Inverse of :func:`write_feature_csv`: (X, feature_names, labels, sample_ids)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty feature file")
    head = rows[0]
    label_columns = [c for c in label_columns if c in head]
    has_ids = head[0] == "sample"
    feat_cols = [i for i, c in enumerate(head) if c not in label_columns and not (has_ids and i == 0)]
    X = np.array([[float(r[i]) for i in feat_cols] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, len(feat_cols))
    labels = {c: [r[head.index(c)] for r in rows[1:]] for c in label_columns}
    ids = [r[0] for r in rows[1:]] if has_ids else None
    return X, [head[i] for i in feat_cols], labels, ids

