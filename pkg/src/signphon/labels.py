"""Label vocabularies for the four annotated phonological parameters.

Text codes are the lowercase tokens used in annotation files, so
``Orientation.parse(o.value) is o`` for every member.
"""

from __future__ import annotations

from enum import Enum


class _Label(str, Enum):
    @classmethod
    def parse(cls, token: str):
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise ValueError(f"unknown {cls.__name__.lower()} token {token!r}") from None

    @classmethod
    def codes(cls) -> list[str]:
        return [m.value for m in cls]

    def __str__(self) -> str:
        return self.value


class Handedness(_Label):
    RIGHT = "right"
    LEFT = "left"


class HandshapeGroup(_Label):
    TIED = "tied"
    FLAT = "flat"
    ONE_FINGER = "1-finger"
    TWO_FINGERS = "2-fingers"
    THREE_FIVE_FINGERS = "3-5-fingers"
    CLOSED = "closed"


class Handshape(_Label):
    # Declaration order is the positional index accepted in annotation files.
    # It follows the group sequence of the per-handshape video-count chart
    # (flat, 1-finger, 3-5, flat, tied, tied, closed, 2, flat, 3-5, flat,
    # closed, 2), so index 1 is the pointing hand.
    B_HAND = "b-hand"
    PEGE_HAND = "pege-hand"
    THREE_HAND = "3-hand"
    B_HAND_TOMMEL = "b-hand-tommel"
    S_HAND = "s-hand"
    ONE_HAND = "1-hand"
    NINE_HAND = "9-hand"
    TWO_HAND = "2-hand"
    C_HAND = "c-hand"
    FIVE_HAND = "5-hand"
    PAEDAGOG_HAND = "paedagog-hand"
    O_HAND = "o-hand"
    G_HAND = "g-hand"

    @property
    def index(self) -> int:
        return _HANDSHAPE_ORDER.index(self)

    @classmethod
    def from_index(cls, i: int) -> "Handshape":
        if not 0 <= i < len(_HANDSHAPE_ORDER):
            raise ValueError(f"handshape index {i} out of range 0..{len(_HANDSHAPE_ORDER) - 1}")
        return _HANDSHAPE_ORDER[i]

    @classmethod
    def parse(cls, token: str) -> "Handshape":
        """Accept either the code token or the positional integer index."""
        t = token.strip()
        if t.isdigit():
            return cls.from_index(int(t))
        return super().parse(t)


_HANDSHAPE_ORDER = list(Handshape)


class Orientation(_Label):
    """Extended-finger direction in 45 degree compass sectors."""

    N = "n"
    NE = "ne"
    E = "e"
    SE = "se"
    S = "s"
    SW = "sw"
    W = "w"
    NW = "nw"


class Location(_Label):
    EARS = "ears"
    EYES = "eyes"
    NOSE = "nose"
    NECK = "neck"
    SHOULDER = "shoulder"
    ABDOMINAL = "abdominal"
    NEUTRAL = "neutral"


BODY_LOCATIONS: tuple[Location, ...] = tuple(loc for loc in Location if loc is not Location.NEUTRAL)

_GROUPS = {
    Handshape.S_HAND: HandshapeGroup.TIED,
    Handshape.ONE_HAND: HandshapeGroup.TIED,
    Handshape.B_HAND: HandshapeGroup.FLAT,
    Handshape.B_HAND_TOMMEL: HandshapeGroup.FLAT,
    Handshape.C_HAND: HandshapeGroup.FLAT,
    Handshape.PAEDAGOG_HAND: HandshapeGroup.FLAT,
    Handshape.PEGE_HAND: HandshapeGroup.ONE_FINGER,
    Handshape.TWO_HAND: HandshapeGroup.TWO_FINGERS,
    Handshape.G_HAND: HandshapeGroup.TWO_FINGERS,
    Handshape.THREE_HAND: HandshapeGroup.THREE_FIVE_FINGERS,
    Handshape.FIVE_HAND: HandshapeGroup.THREE_FIVE_FINGERS,
    Handshape.NINE_HAND: HandshapeGroup.CLOSED,
    Handshape.O_HAND: HandshapeGroup.CLOSED,
}


def handshape_group(h: Handshape) -> HandshapeGroup:
    return _GROUPS[Handshape(h)]


TASKS: tuple[str, ...] = ("handedness", "handshape", "orientation", "location")

TASK_LABELS: dict[str, type[_Label]] = {
    "handedness": Handedness,
    "handshape": Handshape,
    "orientation": Orientation,
    "location": Location,
}
