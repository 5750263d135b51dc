from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from tests.conftest import frame_refs, square_scene
from trackany.backends import (
    DegradationConfig,
    SyntheticOraclePropagator,
    SyntheticSegmenter,
    create_backend,
)
from trackany.backends.base import BackendContext
from trackany.errors import BackendError, ConfigError
from trackany.prompts import encode_mask_prompt
from trackany.rasters import BinaryMask, BoxPrompt, LabelMap, PointPrompt, binary_view


def _two_object_scene(n_frames=5, size=64):
    frames = []
    for _ in range(n_frames):
        labels = np.zeros((size, size), dtype=np.uint16)
        labels[8:24, 8:24] = 1
        labels[36:56, 36:56] = 2
        frames.append(LabelMap(labels, (1, 2)))
    return frames


def _erode_oracle(bits: np.ndarray, depth: int) -> np.ndarray:
    out = bits.copy()
    structure = ndimage.generate_binary_structure(2, 1)
    for _ in range(depth):
        out = ndimage.binary_erosion(out, structure=structure)
    return out


# -- DegradationConfig --------------------------------------------------------

def test_degradation_defaults_and_validation():
    cfg = DegradationConfig(erosion_base=1.5)
    assert cfg.affinity_sharpness == 3.0
    assert DegradationConfig().affinity_sharpness == 1.0
    with pytest.raises(ValueError):
        DegradationConfig(erosion_base=-1)
    with pytest.raises(ValueError):
        DegradationConfig(affinity_sharpness=0.0)


# -- propagator ---------------------------------------------------------------

def test_step_before_init_errors():
    gt = square_scene(3)
    prop = SyntheticOraclePropagator(gt, DegradationConfig())
    with pytest.raises(BackendError, match="before init"):
        prop.step(frame_refs(3, 96)[1])


def test_erosion_zero_is_identity_channel():
    gt = square_scene(6)
    frames = frame_refs(6, 96)
    prop = SyntheticOraclePropagator(gt, DegradationConfig(erosion_base=0.0))
    prop.init(frames[0], gt[0])
    for t in range(1, 6):
        out = prop.step(frames[t])
        assert np.array_equal(out.label_map.labels, gt[t].labels)
        mask = binary_view(out.label_map, 1)
        assert np.all(out.affinities[1].values[mask.bits] == 1.0)


def test_erosion_depth_matches_morphological_oracle():
    gt = square_scene(6, side=40)
    frames = frame_refs(6, 96)
    prop = SyntheticOraclePropagator(gt, DegradationConfig(erosion_base=0.5))
    prop.init(frames[0], gt[0])
    out = None
    for t in range(1, 5):
        out = prop.step(frames[t])
    # 4 frames after anchor at erosion 0.5 -> floor(2.0) = 2 px erosion
    want = _erode_oracle(gt[4].labels == 1, 2)
    assert np.array_equal(out.label_map.labels == 1, want)


def test_reanchor_resets_erosion_clock():
    gt = square_scene(8, side=40)
    frames = frame_refs(8, 96)
    prop = SyntheticOraclePropagator(gt, DegradationConfig(erosion_base=1.0))
    prop.init(frames[0], gt[0])
    for t in range(1, 5):
        prop.step(frames[t])
    prop.re_anchor(frames[4], gt[4])
    out = prop.step(frames[5])
    want = _erode_oracle(gt[5].labels == 1, 1)  # erosion restarts from 1 x base
    assert np.array_equal(out.label_map.labels == 1, want)


def test_closed_form_square_area_at_depth_10():
    side, n = 40, 12
    gt = square_scene(n, side=side, dx=0)
    frames = frame_refs(n, 96)
    prop = SyntheticOraclePropagator(gt, DegradationConfig(erosion_base=1.0))
    prop.init(frames[0], gt[0])
    out = None
    for t in range(1, 11):
        out = prop.step(frames[t])
    area = binary_view(out.label_map, 1).area
    assert area == (side - 20) ** 2  # ((n-2e)^2 at e=10


def test_emitted_mask_is_subset_of_gt():
    gt = square_scene(10, side=30)
    frames = frame_refs(10, 96)
    prop = SyntheticOraclePropagator(gt, DegradationConfig(erosion_base=0.7))
    prop.init(frames[0], gt[0])
    for t in range(1, 10):
        out = prop.step(frames[t])
        emitted = binary_view(out.label_map, 1).bits
        assert not (emitted & ~(gt[t].labels == 1)).any()


def test_affinity_band_keeps_eroded_pixels_recoverable():
    gt = square_scene(4, side=40)
    frames = frame_refs(4, 96)
    prop = SyntheticOraclePropagator(
        gt, DegradationConfig(erosion_base=1.0, affinity_sharpness=4.0)
    )
    prop.init(frames[0], gt[0])
    prop.step(frames[1])
    out = prop.step(frames[2])  # 2 px eroded
    emitted = binary_view(out.label_map, 1).bits
    band = (gt[2].labels == 1) & ~emitted
    values = out.affinities[1].values
    assert np.all(values[band] > 0.0)
    assert np.all(values[band] < 1.0)
    assert np.all(values[emitted] == 1.0)


def test_step_out_of_order_and_past_end_error():
    gt = square_scene(3)
    frames = frame_refs(4, 96)
    prop = SyntheticOraclePropagator(gt, DegradationConfig())
    prop.init(frames[0], gt[0])
    prop.step(frames[1])
    with pytest.raises(BackendError, match="strictly increasing"):
        prop.step(frames[1])
    prop.step(frames[2])
    with pytest.raises(BackendError, match="beyond"):
        prop.step(frames[3])


# -- segmenter ----------------------------------------------------------------

def test_segment_requires_a_prompt():
    gt = _two_object_scene()
    seg = SyntheticSegmenter(gt)
    with pytest.raises(BackendError, match="at least one prompt"):
        seg.segment(frame_refs(5, 64)[0])


def test_positive_click_returns_component():
    gt = _two_object_scene()
    seg = SyntheticSegmenter(gt)
    frame = frame_refs(5, 64)[0]
    out = seg.segment(frame, points=[PointPrompt(40, 40, "positive", 2)])
    assert np.array_equal(out.mask.bits, gt[0].labels == 2)
    assert out.confidence == 1.0


def test_negative_click_cancels_component():
    gt = _two_object_scene()
    seg = SyntheticSegmenter(gt)
    frame = frame_refs(5, 64)[0]
    out = seg.segment(
        frame,
        points=[PointPrompt(40, 40, "positive", 2), PointPrompt(45, 45, "negative", 2)],
    )
    assert out.mask.is_empty()
    assert out.confidence == 0.0


def test_click_on_background_selects_nothing():
    gt = _two_object_scene()
    seg = SyntheticSegmenter(gt)
    out = seg.segment(frame_refs(5, 64)[0], points=[PointPrompt(0, 0, "positive", 1)])
    assert out.mask.is_empty() and out.confidence == 0.0


def test_mask_prompt_max_overlap_rule():
    gt = _two_object_scene()
    seg = SyntheticSegmenter(gt)
    eroded = _erode_oracle(gt[0].labels == 1, 3)
    prompt = encode_mask_prompt(BinaryMask(eroded), prompt_res=64)
    out = seg.segment(frame_refs(5, 64)[0], mask_prompt=prompt)
    assert np.array_equal(out.mask.bits, gt[0].labels == 1)

    # Overlap-count oracle across all gt objects backs the choice.
    overlaps = {
        oid: int(np.count_nonzero(eroded & (gt[0].labels == oid))) for oid in (1, 2)
    }
    assert max(overlaps, key=overlaps.get) == 1


def test_box_prompt_selects_intersecting_components():
    gt = _two_object_scene()
    seg = SyntheticSegmenter(gt)
    out = seg.segment(frame_refs(5, 64)[0], box=BoxPrompt(0, 0, 30, 30))
    assert np.array_equal(out.mask.bits, gt[0].labels == 1)


def test_segmenter_idempotent_on_own_output():
    gt = _two_object_scene()
    seg = SyntheticSegmenter(gt)
    frame = frame_refs(5, 64)[0]
    first = seg.segment(frame, points=[PointPrompt(10, 10, "positive", 1)])
    ys, xs = np.nonzero(first.mask.bits)
    again = seg.segment(
        frame, points=[PointPrompt(int(xs[0]), int(ys[0]), "positive", 1)]
    )
    assert np.array_equal(first.mask.bits, again.mask.bits)


def test_out_of_frame_prompt_rejected():
    gt = _two_object_scene()
    seg = SyntheticSegmenter(gt)
    with pytest.raises(BackendError, match="outside"):
        seg.segment(frame_refs(5, 64)[0], points=[PointPrompt(99, 2, "positive", 1)])


# -- registry -----------------------------------------------------------------

def test_registry_builds_synthetic_bundle(tmp_path):
    from tests.test_davis_io import _write_sequence
    from trackany.davis import open_davis_sequence

    _write_sequence(tmp_path, "toy", 3, [0, 1, 2])
    seq = open_davis_sequence(tmp_path, "toy")
    bundle = create_backend("synthetic", BackendContext(sequence=seq))
    assert isinstance(bundle.segmenter, SyntheticSegmenter)
    assert isinstance(bundle.propagator, SyntheticOraclePropagator)


def test_registry_rejects_unknown_and_incomplete():
    with pytest.raises(ConfigError, match="unknown backend"):
        create_backend("quantum", BackendContext())
    with pytest.raises(ConfigError, match="ground-truth"):
        create_backend("synthetic", BackendContext())
