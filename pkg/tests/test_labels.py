from collections import Counter

import pytest

from signphon.labels import (
    TASK_LABELS,
    Handedness,
    Handshape,
    HandshapeGroup,
    Location,
    Orientation,
    handshape_group,
)


@pytest.mark.parametrize("enum", [Handedness, Handshape, HandshapeGroup, Orientation, Location])
def test_parse_render_round_trip(enum):
    for member in enum:
        assert enum.parse(str(member)) is member
        assert enum.parse(f"  {str(member).upper()} ") is member


def test_listing_codes_are_lowercase_tokens():
    assert [str(o) for o in (Orientation.NE, Orientation.E, Orientation.N, Orientation.SE)] == ["ne", "e", "n", "se"]
    assert str(Location.SHOULDER) == "shoulder"
    assert str(Location.NEUTRAL) == "neutral"


def test_unknown_token_rejected():
    with pytest.raises(ValueError, match="unknown"):
        Orientation.parse("north")


def test_enum_sizes():
    assert len(Orientation) == 8
    assert len(Location) == 7
    assert len(Handshape) == 13


@pytest.mark.parametrize(
    "shape, group",
    [(Handshape.S_HAND, HandshapeGroup.TIED), (Handshape.PEGE_HAND, HandshapeGroup.ONE_FINGER),
     (Handshape.O_HAND, HandshapeGroup.CLOSED)],
)
def test_handshape_group_examples(shape, group):
    assert handshape_group(shape) is group


def test_groups_partition_handshapes():
    sizes = Counter(handshape_group(h) for h in Handshape)
    assert sizes == {
        HandshapeGroup.TIED: 2, HandshapeGroup.FLAT: 4, HandshapeGroup.ONE_FINGER: 1,
        HandshapeGroup.TWO_FINGERS: 2, HandshapeGroup.THREE_FIVE_FINGERS: 2, HandshapeGroup.CLOSED: 2,
    }


def test_positional_index_round_trip():
    assert Handshape.from_index(1) is Handshape.PEGE_HAND
    assert Handshape.parse("1") is Handshape.PEGE_HAND
    for h in Handshape:
        assert Handshape.from_index(h.index) is h
    with pytest.raises(ValueError):
        Handshape.from_index(13)


def test_task_labels_cover_tasks():
    assert set(TASK_LABELS) == {"handedness", "handshape", "orientation", "location"}
