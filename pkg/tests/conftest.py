from __future__ import annotations

import numpy as np
import pytest

from trackany.rasters import BinaryMask, FrameRef, LabelMap


def mask_from_rows(rows: list[str]) -> BinaryMask:
    """Build a mask from strings of '.' and '#'."""
    bits = np.array([[c == "#" for c in row] for row in rows], dtype=bool)
    return BinaryMask(bits)


def square_mask(size: int, top: int, left: int, side: int) -> BinaryMask:
    bits = np.zeros((size, size), dtype=bool)
    bits[top : top + side, left : left + side] = True
    return BinaryMask(bits)


def square_scene(
    n_frames: int,
    size: int = 96,
    side: int = 40,
    top: int = 8,
    left: int = 8,
    dx: int = 1,
    object_id: int = 1,
) -> list[LabelMap]:
    """A single drifting square, the workhorse ground-truth sequence."""
    frames = []
    for t in range(n_frames):
        labels = np.zeros((size, size), dtype=np.uint16)
        x = left + dx * t
        labels[top : top + side, x : x + side] = object_id
        frames.append(LabelMap(labels, (object_id,)))
    return frames


def frame_refs(n_frames: int, size: int, seq: str = "seq") -> list[FrameRef]:
    image = np.zeros((size, size, 3), dtype=np.uint8)
    return [FrameRef(sequence_id=seq, frame_index=t, image=image) for t in range(n_frames)]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {status}: {name}", flush=True)
