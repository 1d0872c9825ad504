"""Batch pipeline driver.

Subcommands: ``segment``, ``featurize``, ``train``, ``annotate``, ``codep``
and ``report``. Settings come from ``--config`` (JSON) with flags taking
precedence; a seed is always required. Exit codes: 0 success, 1 usage or
configuration error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from .codependence import bonferroni_screen, build_contingency
from .config import ConfigError, PipelineConfig, load_config
from .features import FEATURE_SETS, IncompleteHandError, crop_origin, hand_features, read_feature_csv, write_feature_csv
from .geometry import (
    LocationConfig,
    UndefinedOrientationError,
    detected_hands,
    distance_heatmap,
    finger_orientation,
    hand_location,
)
from .ingest import (
    AnnotationRecord,
    FormatError,
    FrameMeta,
    HANDSHAPE_PLACEHOLDER,
    entry_handshape,
    filter_single_sequence,
    parse_catalog,
    parse_pose_frame,
    read_annotations,
    split_frame_file_name,
    write_annotations,
)
from .labels import TASKS, Handshape
from .learn import ChainModel, TrainingDivergedError, accuracy, confusion_matrix, dumps_model, kfold, loads_model, split
from .learn.chain import make_base, task_seed
from .learn.data import LabeledDataset
from .pose import PoseFrame
from .segmentation import hand_centroid, segment_indices

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
MAX_SKIPPED_FRACTION = 0.10

logger = logging.getLogger("signphon")


class DataError(Exception):
    pass


def write_atomic(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _read_text(path: str | Path, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {what} {path}: {exc}") from None


# ---------------------------------------------------------------------------
# pose frames


def discover_videos(frames_dir: str | Path) -> tuple[dict[str, list[tuple[int, Path]]], list[str]]:
    """``{video: [(frame index, path), ...]}`` sorted by video then frame,
    plus the names of keypoint files whose names carry no frame number."""
    videos: dict[str, list[tuple[int, Path]]] = defaultdict(list)
    bad = []
    for p in sorted(Path(frames_dir).glob("*_keypoints.json")):
        try:
            video, idx = split_frame_file_name(p.name)
        except FormatError as exc:
            bad.append(str(exc))
            continue
        videos[video].append((idx, p))
    return {v: sorted(videos[v]) for v in sorted(videos)}, bad


def _load_video(cfg: PipelineConfig, video: str, files: list[tuple[int, Path]]):
    frames, skipped = [], []
    for idx, path in files:
        try:
            text = path.read_text(encoding="utf-8")
            frames.append(parse_pose_frame(text, FrameMeta(cfg.frame_width, cfg.frame_height, idx, video)))
        except (OSError, UnicodeDecodeError, FormatError, ValueError) as exc:
            skipped.append(f"{path.name}: {exc}")
    return frames, skipped


def load_frames(cfg: PipelineConfig) -> tuple[dict[str, list[PoseFrame]], int, int]:
    """Parse every frame file; returns (frames per video, files seen, files skipped)."""
    cfg.require("frames_dir")
    videos, bad = discover_videos(cfg.frames_dir)
    if not videos:
        raise DataError(f"no *_keypoints.json frame files in {cfg.frames_dir}")
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(lambda v: _load_video(cfg, v, videos[v]), videos))
    for msg in bad:
        logger.warning("skipped %s", msg)
    out, n_skipped = {}, len(bad)
    for video, (frames, skipped) in zip(videos, results):
        for msg in skipped:
            logger.warning("skipped %s", msg)
        n_skipped += len(skipped)
        out[video] = frames
    return out, sum(len(f) for f in videos.values()) + len(bad), n_skipped


def _check_skipped(seen: int, skipped: int) -> int:
    if skipped > MAX_SKIPPED_FRACTION * seen:
        logger.error("%d of %d frame files skipped (more than %d%%)", skipped, seen, round(100 * MAX_SKIPPED_FRACTION))
        return EXIT_DATA
    return EXIT_OK


def kept_frames(cfg: PipelineConfig, videos: dict[str, list[PoseFrame]]) -> dict[str, list[PoseFrame]]:
    """Restrict each video to the frame ids listed in its segment file, when one is configured."""
    if cfg.segments_dir is None:
        return videos
    cfg.require("segments_dir")
    out = {}
    for video, frames in videos.items():
        path = Path(cfg.segments_dir) / f"{video}.txt"
        if not path.exists():
            logger.warning("%s: no segment file, using every frame", video)
            out[video] = frames
            continue
        keep = set(_read_text(path, "segment file").split())
        out[video] = [f for f in frames if f.frame_id in keep]
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_segment(cfg: PipelineConfig) -> int:
    videos, seen, skipped = load_frames(cfg)
    out = Path(cfg.out_dir) / "segments"
    total_kept = total = 0
    for video, frames in videos.items():
        seg = segment_indices(frames, cfg.window)
        if not seg.found_maxima:
            logger.warning("%s: no maxima in the hand speed, keeping all frames", video)
        ids = [frames[i].frame_id for i in seg.kept]
        write_atomic(out / f"{video}.txt", "".join(f"{i}\n" for i in ids))
        print(f"{video}: kept {len(ids)}/{len(frames)} frames")
        total_kept += len(ids)
        total += len(frames)
    print(f"segmented {len(videos)} videos: kept {total_kept}/{total} frames, skipped {skipped} files")
    return _check_skipped(seen, skipped)


def _catalog_handshapes(cfg: PipelineConfig) -> dict[str, Handshape]:
    if cfg.catalog is None:
        return {}
    cfg.require("catalog")
    entries = filter_single_sequence(parse_catalog(_read_text(cfg.catalog, "catalog")))
    return {e.video_id: h for e in entries if (h := entry_handshape(e)) is not None}


def _hand_rows(cfg: PipelineConfig, frame: PoseFrame):
    """(side, centroid, orientation, location) for each usable detected hand."""
    loc_cfg = LocationConfig(cfg.threshold_fraction)
    for side in detected_hands(frame):
        hand = frame.hand(side)
        try:
            ori = finger_orientation(hand)
        except UndefinedOrientationError as exc:
            logger.warning("%s %s hand skipped: %s", frame.frame_id, side.value, exc)
            continue
        yield side, hand_centroid(hand), ori, hand_location(frame, side, loc_cfg)


def cmd_featurize(cfg: PipelineConfig) -> int:
    videos, seen, skipped = load_frames(cfg)
    videos = kept_frames(cfg, videos)
    shapes = _catalog_handshapes(cfg)
    rows, ids = [], []
    labels: dict[str, list[str]] = {t: [] for t in TASKS}
    for video, frames in videos.items():
        shape = shapes.get(video)
        for frame in frames:
            for side, _, ori, loc in _hand_rows(cfg, frame):
                try:
                    rows.append(hand_features(frame.hand(side), cfg.feature_set))
                except IncompleteHandError:
                    continue
                ids.append(f"{frame.frame_id}_{side.value}")
                labels["handedness"].append(side.value)
                labels["handshape"].append(shape.value if shape else HANDSHAPE_PLACEHOLDER)
                labels["orientation"].append(ori.value)
                labels["location"].append(loc.value)
    names = FEATURE_SETS[cfg.feature_set]
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    write_atomic(Path(cfg.out_dir) / "features.csv", write_feature_csv(X, names, labels, ids))
    print(f"featurized {len(ids)} hands")
    return _check_skipped(seen, skipped)


def _load_dataset(cfg: PipelineConfig) -> LabeledDataset:
    cfg.require("features")
    try:
        X, names, labels, ids = read_feature_csv(_read_text(cfg.features, "feature file"), TASKS)
    except (ValueError, IndexError) as exc:
        raise DataError(f"{cfg.features}: {exc}") from None
    tasks = list(cfg.tasks) or [t for t in TASKS if t in labels and any(v != HANDSHAPE_PLACEHOLDER for v in labels[t])]
    missing = [t for t in tasks if t not in labels]
    if missing:
        raise ConfigError(f"tasks without a label column: {', '.join(missing)}")
    if not tasks:
        raise DataError(f"{cfg.features}: no label columns")
    keep = np.array([all(labels[t][i] != HANDSHAPE_PLACEHOLDER for t in tasks) for i in range(len(X))], dtype=bool)
    if (~keep).any():
        logger.warning("%d rows without a label dropped", int((~keep).sum()))
    if not keep.any() or X.shape[1] == 0:
        raise DataError(f"{cfg.features}: no labelled samples")
    idx = np.flatnonzero(keep)
    return LabeledDataset(
        X[idx], {t: np.asarray(labels[t])[idx] for t in tasks}, tuple(names),
        None if ids is None else tuple(ids[i] for i in idx),
    )


def cmd_train(cfg: PipelineConfig) -> int:
    ds = _load_dataset(cfg)
    for s, t in cfg.coupling:
        if s not in ds.tasks or t not in ds.tasks:
            raise ConfigError(f"coupling {s}->{t} refers to a task that is not being trained")
    try:
        train, val, test = split(ds, cfg.split_spec)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if len(train) == 0 or len(test) == 0:
        raise DataError("degenerate split: the train and test parts must be non-empty")
    for t, y in train.labels.items():
        if len(set(y)) < 2:
            raise DataError(f"degenerate split: task {t} has a single class in the training part")

    model = ChainModel(cfg.classifier, cfg.coupling, cfg.mode, cfg.classifier_params, cfg.seed)
    try:
        model.fit(train.features, train.labels)
    except TrainingDivergedError as exc:
        raise DataError(str(exc)) from None

    out = Path(cfg.out_dir)
    meta = {"tasks": list(ds.tasks), "feature_names": list(ds.feature_names), "seed": cfg.seed,
            "classifier": cfg.classifier, "mode": cfg.mode}
    write_atomic(out / "model.json", dumps_model(model, meta))

    lines = ["task,split,n,accuracy"]
    for name, part in (("validation", val), ("test", test)):
        pred = model.predict(part.features) if len(part) else {t: [] for t in ds.tasks}
        for t in ds.tasks:
            lines.append(f"{t},{name},{len(part)},{accuracy(part.labels[t], pred[t]):.6f}")
            if name == "test":
                write_atomic(out / f"confusion_{t}.csv", confusion_matrix(part.labels[t], pred[t]).to_csv())
    metrics = "\n".join(lines) + "\n"
    write_atomic(out / "metrics.csv", metrics)
    sys.stdout.write(metrics)

    if cfg.kfold:
        base = "mlp" if cfg.mode == "joint" else cfg.classifier
        rows = ["task,folds,mean,std"]
        for t in ds.tasks:
            seed = task_seed(cfg.seed, t)
            mean, std = kfold(ds.features, ds.labels[t], lambda X, y: make_base(base, cfg.classifier_params, seed).fit(X, y),
                              folds=cfg.kfold, seed=cfg.seed)
            rows.append(f"{t},{cfg.kfold},{mean:.6f},{std:.6f}")
        write_atomic(out / "kfold.csv", "\n".join(rows) + "\n")
    return EXIT_OK


def _load_model(cfg: PipelineConfig):
    cfg.require("model")
    try:
        model, meta = loads_model(_read_text(cfg.model, "model"))
    except ValueError as exc:
        raise ConfigError(f"{cfg.model}: {exc}") from None
    if not isinstance(model, ChainModel):
        raise ConfigError(f"{cfg.model}: expected a model written by the train command")
    return model, meta


def _feature_set_of(meta: dict) -> str:
    names = tuple(meta.get("feature_names", ()))
    for kind, kind_names in FEATURE_SETS.items():
        if names == tuple(kind_names):
            return kind
    raise ConfigError("the model was not trained on a known hand feature set")


def cmd_annotate(cfg: PipelineConfig) -> int:
    model = kind = None
    if cfg.model is not None:
        model, meta = _load_model(cfg)
        if "handshape" not in meta.get("tasks", ()):
            raise ConfigError(f"{cfg.model}: the model has no handshape task")
        kind = _feature_set_of(meta)
    else:
        logger.warning("no handshape model given, writing %r for handshape", HANDSHAPE_PLACEHOLDER)
    videos, seen, skipped = load_frames(cfg)
    videos = kept_frames(cfg, videos)
    records = []
    for frames in videos.values():
        for frame in frames:
            for side, c, ori, loc in _hand_rows(cfg, frame):
                shape = None
                if model is not None:
                    try:
                        x = hand_features(frame.hand(side), kind)[None, :]
                        shape = Handshape.parse(str(model.predict(x)["handshape"][0]))
                    except IncompleteHandError:
                        pass
                try:
                    x0, y0 = crop_origin(c, frame.frame_width, frame.frame_height)
                except ValueError as exc:
                    raise DataError(str(exc)) from None
                records.append(AnnotationRecord(f"{frame.frame_id}.png", x0, y0, side, shape, ori, loc))
    write_atomic(Path(cfg.out_dir) / "annotations.txt", write_annotations(records, cfg.handshape_format))
    print(f"annotated {len(records)} hands")
    return _check_skipped(seen, skipped)


def cmd_codep(cfg: PipelineConfig) -> int:
    cfg.require("annotations")
    try:
        records = read_annotations(_read_text(cfg.annotations, "annotation file"))
    except FormatError as exc:
        raise DataError(f"{cfg.annotations}: {exc}") from None
    n_ori = len({r.orientation for r in records})
    n_loc = len({r.location for r in records})
    if n_ori < 2 or n_loc < 2:
        raise DataError(f"untestable: need at least 2 orientation and 2 location labels, got {n_ori} and {n_loc}")
    tables = build_contingency(records, stratify_by_hand=True)
    out = Path(cfg.out_dir)
    for hand, table in tables.items():
        write_atomic(out / f"contingency_{hand.value}.csv", table.to_csv())
    report = bonferroni_screen([t for t in tables.values() if t.total > 0], cfg.alpha)
    if report.m == 0:
        raise DataError("untestable: no cell admits a chi-square test")
    write_atomic(out / "significance.csv", report.to_csv())
    write_atomic(out / "summary.txt", report.summary())
    sys.stdout.write(report.summary())
    return EXIT_OK


def cmd_report(cfg: PipelineConfig) -> int:
    if cfg.frames_dir is None and cfg.model is None:
        raise ConfigError("report needs frames_dir (heatmap) and/or model with features (confusion matrices)")
    out = Path(cfg.out_dir)
    status = EXIT_OK
    if cfg.frames_dir is not None:
        videos, seen, skipped = load_frames(cfg)
        frames = [f for fs in kept_frames(cfg, videos).values() for f in fs]
        if not frames:
            raise DataError("no readable frames for the heatmap")
        heat = distance_heatmap(frames, LocationConfig(cfg.threshold_fraction))
        write_atomic(out / "heatmap.csv", heat.to_csv())
        print(f"heatmap over {len(frames)} frames")
        status = _check_skipped(seen, skipped)
    if cfg.model is not None:
        model, meta = _load_model(cfg)
        ds = _load_dataset(cfg)
        if list(ds.feature_names) != list(meta.get("feature_names", [])):
            raise DataError("feature columns do not match the model")
        pred = model.predict(ds.features)
        for t in ds.tasks:
            if t in pred:
                rep = confusion_matrix(ds.labels[t], pred[t])
                write_atomic(out / f"confusion_{t}.csv", rep.to_csv())
                print(f"{t}: accuracy {rep.accuracy:.6f} on {len(ds)} samples")
    return status


COMMANDS = {
    "segment": cmd_segment,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "annotate": cmd_annotate,
    "codep": cmd_codep,
    "report": cmd_report,
}


HELP = {
    "segment": "write the kept (non-resting) frame ids of each video",
    "featurize": "write hand feature vectors with geometric labels as CSV",
    "train": "train classifiers on a feature CSV and report accuracies",
    "annotate": "write the annotation file for the kept frames",
    "codep": "test orientation/location co-dependence in an annotation file",
    "report": "write the distance heatmap and confusion matrices",
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    a = p.add_argument
    a("--config", help="JSON configuration file")
    a("--seed", type=int, help="random seed (required here or in the config)")
    a("--out", dest="out_dir", help="output directory")
    a("--workers", type=int, help="parallel workers for per-video work")
    a("--frames", dest="frames_dir", help="directory of <video>_<frame>_keypoints.json files")
    a("--segments", dest="segments_dir", help="directory of per-video kept-frame lists")
    a("--catalog", help="catalog XML providing handshape labels per video")
    a("--features", help="feature CSV")
    a("--annotations", help="annotation file")
    a("--model", help="model JSON written by train")
    a("--frame-width", type=float)
    a("--frame-height", type=float)
    a("--window", type=int, help="speed window in frames")
    a("--threshold", dest="threshold_fraction", type=float, help="location threshold as a fraction of the diagonal")
    a("--feature-set", choices=sorted(FEATURE_SETS))
    a("--classifier", choices=["forest", "knn", "mlp"])
    a("--mode", choices=["separate", "joint"])
    a("--coupling", action="append", help="coupling edge source->target (repeatable)")
    a("--tasks", help="comma-separated tasks to train")
    a("--kfold", type=int, help="also report k-fold accuracy with this many folds")
    a("--alpha", type=float, help="family-wise significance level")
    a("--handshape-format", choices=["code", "index"])
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="signphon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    over = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if over.get("tasks") is not None:
        over["tasks"] = [t.strip() for t in over["tasks"].split(",") if t.strip()]
    cfg = load_config(args.config, over)
    if cfg.seed is None:
        raise ConfigError("a seed is required (--seed or \"seed\" in the config)")
    return cfg


def _setup_logging() -> None:
    if not logger.handlers:
        h = logging.StreamHandler(sys.stderr)
        h.setFormatter(logging.Formatter("signphon: %(levelname)s: %(message)s"))
        logger.addHandler(h)
        logger.setLevel(logging.INFO)


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except (DataError, FormatError) as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
