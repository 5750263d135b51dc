from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackany.errors import DimensionMismatchError, UnknownObjectError
from trackany.rasters import (
    BinaryMask,
    BoxPrompt,
    LabelMap,
    PointPrompt,
    compose_labelmap,
    extract_binary,
)


def test_labelmap_rejects_undeclared_ids():
    with pytest.raises(ValueError, match="undeclared"):
        LabelMap(np.array([[0, 3]], dtype=np.uint16), (1,))


def test_labelmap_rejects_duplicate_and_zero_ids():
    labels = np.zeros((2, 2), dtype=np.uint16)
    with pytest.raises(ValueError):
        LabelMap(labels, (1, 1))
    with pytest.raises(ValueError):
        LabelMap(labels, (0,))


def test_labelmap_is_immutable():
    m = LabelMap(np.zeros((2, 2), dtype=np.uint16), ())
    with pytest.raises(ValueError):
        m.labels[0, 0] = 1


def test_extract_binary_background_only():
    m = LabelMap(np.zeros((3, 3), dtype=np.uint16), (1,))
    assert extract_binary(m, 1).is_empty()


def test_extract_binary_direct_definition():
    m = LabelMap(np.array([[1, 2], [2, 1]], dtype=np.uint16), (1, 2))
    got = extract_binary(m, 2)
    assert got.bits.tolist() == [[False, True], [True, False]]


def test_extract_binary_unknown_id_errors():
    m = LabelMap(np.zeros((2, 2), dtype=np.uint16), (1,))
    with pytest.raises(UnknownObjectError):
        extract_binary(m, 9)


def test_extract_binary_preserves_dimensions():
    m = LabelMap(np.zeros((5, 7), dtype=np.uint16), (1,))
    got = extract_binary(m, 1)
    assert got.bits.shape == (5, 7)


def test_compose_single_mask():
    mask = BinaryMask(np.array([[True, False], [False, True]]))
    m = compose_labelmap([(3, mask)])
    assert m.labels.tolist() == [[3, 0], [0, 3]]
    assert m.object_ids == (3,)


def test_compose_disjoint_union():
    a = BinaryMask(np.array([[True, False], [False, False]]))
    b = BinaryMask(np.array([[False, False], [False, True]]))
    m = compose_labelmap([(1, a), (2, b)])
    assert m.labels.tolist() == [[1, 0], [0, 2]]


def test_compose_overlap_lower_id_wins_hand_oracle():
    # 4x4 grid: object 1 covers rows 0-2, object 2 covers rows 1-3.
    a = np.zeros((4, 4), dtype=bool)
    a[0:3] = True
    b = np.zeros((4, 4), dtype=bool)
    b[1:4] = True
    m = compose_labelmap([(1, BinaryMask(a)), (2, BinaryMask(b))])
    # Hand-enumerated: rows 0-2 -> 1 (overlap rows 1-2 taken by the lower id), row 3 -> 2.
    expected = [[1] * 4, [1] * 4, [1] * 4, [2] * 4]
    assert m.labels.tolist() == expected


def test_compose_confidence_policy():
    a = np.zeros((2, 2), dtype=bool)
    a[0] = True
    b = np.zeros((2, 2), dtype=bool)
    b[:, 0] = True
    m = compose_labelmap(
        [(1, BinaryMask(a)), (2, BinaryMask(b))],
        policy="confidence",
        scores={1: 0.4, 2: 0.9},
    )
    assert m.labels[0, 0] == 2  # overlap goes to the higher score


def test_compose_errors():
    a = BinaryMask(np.zeros((2, 2), dtype=bool))
    b = BinaryMask(np.zeros((3, 3), dtype=bool))
    with pytest.raises(DimensionMismatchError):
        compose_labelmap([(1, a), (2, b)])
    with pytest.raises(ValueError):
        compose_labelmap([(1, a), (1, a)])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_compose_extract_round_trip(seed):
    rng = np.random.default_rng(seed)
    ids = (1, 2, 3)
    labels = rng.integers(0, 4, size=(16, 16)).astype(np.uint16)
    original = LabelMap(labels, ids)
    rebuilt = compose_labelmap([(i, extract_binary(original, i)) for i in ids])
    assert np.array_equal(rebuilt.labels, original.labels)
    assert rebuilt.object_ids == original.object_ids


def test_point_prompt_validation():
    with pytest.raises(ValueError):
        PointPrompt(x=0, y=0, polarity="maybe", object_id=1)
    with pytest.raises(ValueError):
        PointPrompt(x=0, y=0, polarity="positive", object_id=0)
    p = PointPrompt(x=3, y=1, polarity="negative", object_id=2)
    assert p.in_frame(4, 2) and not p.in_frame(3, 2)


def test_box_prompt_validation():
    with pytest.raises(ValueError):
        BoxPrompt(2, 0, 1, 3)
    assert BoxPrompt(0, 0, 2, 2).in_frame(2, 2)


def test_digest_sensitive_to_raster_and_ids():
    a = LabelMap(np.zeros((2, 2), dtype=np.uint16), (1,))
    b = LabelMap(np.zeros((2, 2), dtype=np.uint16), (2,))
    c = LabelMap(np.array([[1, 0], [0, 0]], dtype=np.uint16), (1,))
    assert len({a.digest(), b.digest(), c.digest()}) == 3
