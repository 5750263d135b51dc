"""Synthetic oracle backends reproducing the long-video shrinkage failure.

The oracle propagator emits the ground truth eroded by a depth that
grows with the number of frames since the last anchor, so tracking decays
deterministically and re-anchoring measurably recovers it. The synthetic
segmenter answers prompts from the ground truth, standing in for a
perfect promptable model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from trackany.backends.base import (
    BackendBundle,
    BackendContext,
    PropagateResult,
    Propagator,
    SegmentResult,
    Segmenter,
    register_backend,
)
from trackany.errors import BackendError, ConfigError
from trackany.prompts import AffinityField, MaskPrompt, decode_mask_prompt
from trackany.rasters import (
    BinaryMask,
    BoxPrompt,
    FrameRef,
    LabelMap,
    PointPrompt,
    binary_view,
    compose_labelmap,
)

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class DegradationConfig:
    """Controls the synthetic shrinkage model.

    erosion_base: pixels of 4-connected erosion accrued per frame since
    the last anchor. affinity_sharpness: width (px) of the confidence
    ramp outside the emitted mask; defaults to twice the per-frame
    erosion so the eroded-away band keeps nonzero affinity.
    """

    erosion_base: float = 0.0
    noise_seed: int = 0
    affinity_sharpness: float | None = None

    def __post_init__(self):
        if self.erosion_base < 0:
            raise ValueError("erosion_base must be >= 0")
        if self.affinity_sharpness is None:
            object.__setattr__(
                self, "affinity_sharpness", max(1.0, 2.0 * self.erosion_base)
            )
        if self.affinity_sharpness <= 0:
            raise ValueError("affinity_sharpness must be > 0")

    def to_dict(self) -> dict:
        return {
            "erosion_base": self.erosion_base,
            "noise_seed": self.noise_seed,
            "affinity_sharpness": self.affinity_sharpness,
        }


def erode_mask(mask: BinaryMask, depth: int) -> BinaryMask:
    """4-connected erosion by `depth` pixels."""
    if depth <= 0:
        return mask
    dist = ndimage.distance_transform_cdt(mask.bits, metric="taxicab")
    return BinaryMask(dist > depth)


def affinity_for_mask(mask: BinaryMask, object_id: int, sharpness: float) -> AffinityField:
    """Confidence 1 on the mask, linear ramp to 0 across `sharpness` px outside.

    Euclidean distance, so an eroded-away square corner (depth*sqrt(2)
    out) still sits inside a band sized to twice the erosion depth.
    """
    if mask.is_empty():
        return AffinityField(object_id, np.zeros(mask.bits.shape, dtype=np.float32))
    outside = ndimage.distance_transform_edt(~mask.bits).astype(np.float32)
    values = np.clip(1.0 - outside / np.float32(sharpness), 0.0, 1.0)
    return AffinityField(object_id, values)


class SyntheticOraclePropagator(Propagator):
    """Emits ground truth eroded by floor(erosion_base * frames-since-anchor)."""

    def __init__(self, gt_sequence: Sequence[LabelMap], config: DegradationConfig):
        if not gt_sequence:
            raise ConfigError("oracle propagator needs a full ground-truth sequence")
        self._gt = list(gt_sequence)
        self._config = config
        self._anchors: dict[int, int] = {}
        self._last_index: int | None = None

    def _check_frame(self, image: FrameRef) -> int:
        t = image.frame_index
        if t >= len(self._gt):
            raise BackendError(f"frame {t} beyond ground-truth length {len(self._gt)}")
        return t

    def init(self, image: FrameRef, label_map: LabelMap) -> None:
        t = self._check_frame(image)
        self._anchors = {oid: t for oid in label_map.object_ids}
        self._last_index = t

    def re_anchor(self, image: FrameRef, label_map: LabelMap) -> None:
        if self._last_index is None:
            raise BackendError("re_anchor before init")
        t = self._check_frame(image)
        if t != self._last_index:
            raise BackendError(f"re_anchor at frame {t}, expected current frame {self._last_index}")
        self._anchors = {oid: t for oid in label_map.object_ids}

    def step(self, image: FrameRef) -> PropagateResult:
        if self._last_index is None:
            raise BackendError("step before init")
        t = self._check_frame(image)
        if t <= self._last_index:
            raise BackendError(f"frames must be strictly increasing; got {t} after {self._last_index}")
        gt = self._gt[t]
        masks: list[tuple[int, BinaryMask]] = []
        affinities: dict[int, AffinityField] = {}
        for oid, anchor in self._anchors.items():
            depth = math.floor(self._config.erosion_base * (t - anchor))
            emitted = erode_mask(binary_view(gt, oid), depth)
            masks.append((oid, emitted))
            affinities[oid] = affinity_for_mask(emitted, oid, self._config.affinity_sharpness)
        if masks:
            label_map = compose_labelmap(masks, policy="lower-id-wins")
        else:
            label_map = LabelMap.background(gt.width, gt.height)
        self._last_index = t
        return PropagateResult(label_map=label_map, affinities=affinities)


class SyntheticSegmenter(Segmenter):
    """Answers prompts from ground truth: selected 4-connected components.

    Point prompts select whole components of the clicked objects; any
    negative click on a component cancels it. A lone mask prompt returns
    the ground-truth object with maximal overlap. Confidence is 1.0, or
    0.0 when the prompts select nothing.
    """

    def __init__(self, gt_sequence: Sequence[LabelMap]):
        if not gt_sequence:
            raise ConfigError("synthetic segmenter needs ground truth")
        self._gt = list(gt_sequence)

    def _components(self, gt: LabelMap) -> np.ndarray:
        """Per-object component labeling packed into one int raster."""
        out = np.zeros(gt.labels.shape, dtype=np.int32)
        next_label = 1
        for oid in gt.object_ids:
            labeled, n = ndimage.label(gt.labels == oid, structure=_FOUR_CONNECTED)
            out[labeled > 0] = labeled[labeled > 0] + (next_label - 1)
            next_label += n
        return out

    def segment(
        self,
        image: FrameRef,
        points: Sequence[PointPrompt] = (),
        box: BoxPrompt | None = None,
        mask_prompt: MaskPrompt | None = None,
    ) -> SegmentResult:
        if image.frame_index >= len(self._gt):
            raise BackendError(f"frame {image.frame_index} beyond ground-truth length")
        gt = self._gt[image.frame_index]
        self.check_prompts(gt.width, gt.height, points, box, mask_prompt)
        components = self._components(gt)
        selected: set[int] = set()
        removed: set[int] = set()
        if points:
            for p in points:
                comp = int(components[p.y, p.x])
                if comp == 0:
                    continue
                if p.polarity == "positive":
                    selected.add(comp)
                else:
                    removed.add(comp)
        elif box is not None:
            region = components[box.y0 : box.y1, box.x0 : box.x1]
            selected = set(int(c) for c in np.unique(region) if c != 0)
        elif mask_prompt is not None:
            decoded = decode_mask_prompt(mask_prompt)
            if decoded.bits.shape != gt.labels.shape:
                raise BackendError("mask prompt source dims do not match the frame")
            best_id, best_overlap = 0, 0
            for oid in gt.object_ids:
                overlap = int(np.count_nonzero(decoded.bits & (gt.labels == oid)))
                if overlap > best_overlap:
                    best_id, best_overlap = oid, overlap
            if best_id:
                return SegmentResult(mask=binary_view(gt, best_id), confidence=1.0)
            return SegmentResult(mask=BinaryMask.empty(gt.width, gt.height), confidence=0.0)
        keep = selected - removed
        if not keep:
            return SegmentResult(mask=BinaryMask.empty(gt.width, gt.height), confidence=0.0)
        bits = np.isin(components, sorted(keep))
        return SegmentResult(mask=BinaryMask(bits), confidence=1.0)


def _synthetic_factory(spec: str, context: BackendContext) -> BackendBundle:
    if context.sequence is None:
        raise ConfigError("synthetic backend needs a sequence with ground-truth annotations")
    seq = context.sequence
    n = len(seq.frames)
    missing = [i for i in range(n) if i not in seq.annotations]
    if missing:
        raise ConfigError(
            f"synthetic backend needs ground truth for every frame of {seq.sequence_id!r}; "
            f"missing {missing[:5]}{'...' if len(missing) > 5 else ''}"
        )
    gt = [seq.annotations[i] for i in range(n)]
    degradation = context.degradation or DegradationConfig()
    return BackendBundle(
        segmenter=SyntheticSegmenter(gt),
        propagator=SyntheticOraclePropagator(gt, degradation),
    )


register_backend("synthetic", _synthetic_factory)
