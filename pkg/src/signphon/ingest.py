"""Readers and writers for the dictionary catalog, pose keypoint files and
annotation files."""

from __future__ import annotations

import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable

from .labels import Handedness, Handshape, Location, Orientation
from .pose import MISSING, N_BODY, N_FACE, N_HAND, HandSkeleton, Keypoint, PoseFrame

logger = logging.getLogger(__name__)


class FormatError(ValueError):
    """Input does not follow the expected file format."""


class CatalogError(FormatError):
    pass


class PoseFormatError(FormatError):
    pass


class NoPersonError(PoseFormatError):
    pass


class AnnotationFormatError(FormatError):
    pass


# ---------------------------------------------------------------------------
# dictionary catalog


@dataclass(frozen=True)
class PhonologySeq:
    seq_no: int
    sign_type: str = ""
    handshape1: str = ""
    handshape_final: str = ""
    orientation_fingers: str = ""
    orientation_palm: str = ""
    location: str = ""
    movement: str = ""
    relation: str = ""
    repeat: str = ""


@dataclass(frozen=True)
class CatalogEntry:
    entry_no: int
    gloss: str
    sign_video: str
    sequences: tuple[PhonologySeq, ...]

    @property
    def video_id(self) -> str:
        """Stem of the sign video file, e.g. ``t_2542`` for ``t_2542.mp4``."""
        return Path(self.sign_video).stem


@dataclass(frozen=True)
class EntryError:
    index: int
    message: str


_SEQ_FIELDS = {
    "SignType": "sign_type",
    "Handshape1": "handshape1",
    "HandshapeFinal": "handshape_final",
    "OrientationFingers": "orientation_fingers",
    "OrientationPalm": "orientation_palm",
    "Location": "location",
    "Movement": "movement",
    "Relation": "relation",
    "Repeat": "repeat",
}


def _text(el: ET.Element | None) -> str:
    if el is None or el.text is None:
        return ""
    return el.text.strip()


def _parse_seq(el: ET.Element) -> PhonologySeq:
    raw_no = _text(el.find("SeqNo"))
    try:
        seq_no = int(raw_no)
    except ValueError:
        raise CatalogError(f"Seq: SeqNo {raw_no!r} is not an integer") from None
    if seq_no < 1:
        raise CatalogError(f"Seq: SeqNo must be >= 1, got {seq_no}")
    values = {attr: _text(el.find(tag)) for tag, attr in _SEQ_FIELDS.items()}
    return PhonologySeq(seq_no=seq_no, **values)


def _parse_entry(el: ET.Element) -> CatalogEntry:
    raw_no = _text(el.find("EntryNo"))
    if not raw_no:
        raise CatalogError("missing EntryNo")
    try:
        entry_no = int(raw_no)
    except ValueError:
        raise CatalogError(f"EntryNo {raw_no!r} is not an integer") from None
    video = _text(el.find("SignVideo"))
    if not video:
        raise CatalogError(f"entry {entry_no}: missing SignVideo")
    seqs = tuple(_parse_seq(s) for s in el.iterfind("Phonology/Seq"))
    if not seqs:
        raise CatalogError(f"entry {entry_no}: no Phonology/Seq elements")
    return CatalogEntry(entry_no, _text(el.find("Gloss")), video, seqs)


def parse_catalog(xml_text: str, errors: list[EntryError] | None = None) -> list[CatalogEntry]:
    """Parse every ``<Entry>`` element of a catalog document.

    The root may be a single ``<Entry>`` or any wrapper element. A broken
    entry is skipped (logged, and appended to ``errors`` when given) while
    the rest are still returned; malformed XML raises :class:`CatalogError`.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise CatalogError(f"malformed catalog XML at line {line}, column {col}: {exc}") from None

    entries: list[CatalogEntry] = []
    seen: set[int] = set()
    for i, el in enumerate(root.iter("Entry")):
        try:
            entry = _parse_entry(el)
            if entry.entry_no in seen:
                raise CatalogError(f"duplicate EntryNo {entry.entry_no}")
        except CatalogError as exc:
            logger.warning("catalog entry #%d skipped: %s", i, exc)
            if errors is not None:
                errors.append(EntryError(i, str(exc)))
            continue
        seen.add(entry.entry_no)
        entries.append(entry)
    return entries


def filter_single_sequence(entries: Iterable[CatalogEntry]) -> list[CatalogEntry]:
    return [e for e in entries if len(e.sequences) == 1]


@lru_cache(maxsize=None)
def danish_lookup() -> dict[str, dict[str, str]]:
    """Danish catalog vocabulary -> label codes, from the bundled data file."""
    text = resources.files("signphon.data").joinpath("danish_labels.json").read_text("utf-8")
    return json.loads(text)


def map_handshape(text: str, table: dict[str, str] | None = None) -> Handshape | None:
    """Map a catalog handshape string to a :class:`Handshape`, or None if unmapped."""
    table = danish_lookup()["handshape"] if table is None else table
    key = " ".join(text.lower().split())
    if key in table:
        return Handshape.parse(table[key])
    try:
        return Handshape.parse(key.replace(" ", "-"))
    except ValueError:
        return None


def entry_handshape(entry: CatalogEntry) -> Handshape | None:
    seq = entry.sequences[0]
    return map_handshape(seq.handshape1) or map_handshape(seq.handshape_final)


# ---------------------------------------------------------------------------
# pose keypoint files

_FRAME_FILE = re.compile(r"^(?P<video>.+)_(?P<frame>\d+)_keypoints\.json$")


@dataclass(frozen=True)
class FrameMeta:
    width: float
    height: float
    frame_index: int = 0
    source_video: str = ""


def frame_file_name(video: str, frame: int) -> str:
    return f"{video}_{frame:04d}_keypoints.json"


def split_frame_file_name(name: str) -> tuple[str, int]:
    """``"2169_0021_keypoints.json"`` -> ``("2169", 21)``."""
    m = _FRAME_FILE.match(Path(name).name)
    if m is None:
        raise PoseFormatError(f"{name}: not a <video>_<frame>_keypoints.json file name")
    return m["video"], int(m["frame"])


def _keypoints(values, n: int, what: str) -> tuple[Keypoint, ...]:
    if len(values) != 3 * n:
        got = len(values) / 3
        got_s = str(int(got)) if got == int(got) else f"{len(values)} values"
        raise PoseFormatError(f"{what}: expected {n} keypoints, got {got_s}")
    out = []
    for i in range(n):
        x, y, c = (float(v) for v in values[3 * i : 3 * i + 3])
        # zero confidence means undetected; off-frame (negative) points are treated alike
        if c <= 0 or x < 0 or y < 0:
            out.append(MISSING)
        else:
            out.append(Keypoint(x, y, c))
    return tuple(out)


def parse_pose_frame(json_text: str, meta: FrameMeta) -> PoseFrame:
    """Parse one pose-estimator JSON frame; the first detected person is used.

    An absent or empty hand array yields an all-undetected hand; any other
    array of the wrong length is a :class:`PoseFormatError`.
    """
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise PoseFormatError(f"invalid JSON: {exc}") from None
    people = doc.get("people") if isinstance(doc, dict) else None
    if not people:
        raise NoPersonError("no person detected in frame")
    person = people[0]

    body = _keypoints(person.get("pose_keypoints_2d") or [], N_BODY, "body")
    hands = {}
    for side, key in (("left", "hand_left_keypoints_2d"), ("right", "hand_right_keypoints_2d")):
        arr = person.get(key) or []
        hands[side] = HandSkeleton(_keypoints(arr, N_HAND, f"{side}_hand")) if arr else HandSkeleton.empty()
    face_arr = person.get("face_keypoints_2d") or []
    face = _keypoints(face_arr, N_FACE, "face") if face_arr else None

    return PoseFrame(
        body=body,
        left_hand=hands["left"],
        right_hand=hands["right"],
        frame_width=meta.width,
        frame_height=meta.height,
        frame_index=meta.frame_index,
        source_video=meta.source_video,
        face=face,
    )


def _flat(points: Iterable[Keypoint]) -> list[float]:
    out: list[float] = []
    for p in points:
        out.extend((p.x, p.y, p.confidence) if p.detected else (0.0, 0.0, 0.0))
    return out


def dump_pose_frame(frame: PoseFrame) -> str:
    """Inverse of :func:`parse_pose_frame` (used for fixtures and synthetic videos)."""
    person = {
        "pose_keypoints_2d": _flat(frame.body),
        "hand_left_keypoints_2d": _flat(frame.left_hand.points),
        "hand_right_keypoints_2d": _flat(frame.right_hand.points),
    }
    if frame.face is not None:
        person["face_keypoints_2d"] = _flat(frame.face)
    return json.dumps({"version": 1.3, "people": [person]})


# ---------------------------------------------------------------------------
# annotation files

ANNOTATION_HEADER = ("video_frame", "x", "y", "handedness", "handshape", "orientation", "location")
HANDSHAPE_PLACEHOLDER = "-"


@dataclass(frozen=True)
class AnnotationRecord:
    video_frame: str
    bbox_x: int
    bbox_y: int
    handedness: Handedness
    handshape: Handshape | None
    orientation: Orientation
    location: Location

    def __post_init__(self):
        if self.bbox_x < 0 or self.bbox_y < 0:
            raise ValueError("bbox origin must be non-negative")
        # normalise plain strings to enum members
        object.__setattr__(self, "handedness", Handedness(self.handedness))
        if self.handshape is not None:
            object.__setattr__(self, "handshape", Handshape(self.handshape))
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        object.__setattr__(self, "location", Location(self.location))


def write_annotations(records: Iterable[AnnotationRecord], handshape_format: str = "code") -> str:
    """Render records as annotation text (header row first, LF line ends).

    ``handshape_format="index"`` writes the positional integer instead of the
    code token.
    """
    if handshape_format not in ("code", "index"):
        raise ValueError("handshape_format must be 'code' or 'index'")
    lines = [" ".join(ANNOTATION_HEADER)]
    for r in records:
        if r.handshape is None:
            hs = HANDSHAPE_PLACEHOLDER
        elif handshape_format == "index":
            hs = str(r.handshape.index)
        else:
            hs = r.handshape.value
        lines.append(
            " ".join(
                (r.video_frame, str(int(r.bbox_x)), str(int(r.bbox_y)), r.handedness.value, hs,
                 r.orientation.value, r.location.value)
            )
        )
    return "\n".join(lines) + "\n"


def _parse_int(tok: str, row: int, col: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise AnnotationFormatError(f"row {row}: {col} {tok!r} is not an integer") from None


def read_annotations(text: str) -> list[AnnotationRecord]:
    """Parse annotation text; columns may be separated by any whitespace.

    Row numbers in errors count lines from 1, header included.
    """
    records: list[AnnotationRecord] = []
    header_seen = False
    for row, line in enumerate(text.splitlines(), start=1):
        cols = line.split()
        if not cols:
            continue
        if not header_seen:
            if tuple(c.lower() for c in cols) != ANNOTATION_HEADER:
                raise AnnotationFormatError(f"row {row}: expected header {' '.join(ANNOTATION_HEADER)!r}")
            header_seen = True
            continue
        if len(cols) != len(ANNOTATION_HEADER):
            raise AnnotationFormatError(f"row {row}: expected {len(ANNOTATION_HEADER)} columns, got {len(cols)}")
        frame, x, y, hand, shape, ori, loc = cols
        try:
            rec = AnnotationRecord(
                video_frame=frame,
                bbox_x=_parse_int(x, row, "x"),
                bbox_y=_parse_int(y, row, "y"),
                handedness=Handedness.parse(hand),
                handshape=None if shape == HANDSHAPE_PLACEHOLDER else Handshape.parse(shape),
                orientation=Orientation.parse(ori),
                location=Location.parse(loc),
            )
        except AnnotationFormatError:
            raise
        except ValueError as exc:
            raise AnnotationFormatError(f"row {row}: {exc}") from None
        records.append(rec)
    if not header_seen:
        raise AnnotationFormatError("row 1: missing header row")
    return records
