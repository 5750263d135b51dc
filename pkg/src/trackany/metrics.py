"""Region similarity J, contour accuracy F, and DAVIS-style aggregation.

J is intersection-over-union. F is the boundary F-measure with
dilation-based matching at a pixel tolerance (default
ceil(0.008 * image diagonal), the DAVIS convention). J&F is their
arithmetic mean. Both metrics score 1.0 when predicted and ground-truth
masks are both empty (object legitimately absent and predicted absent).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from trackany.errors import DimensionMismatchError, UnknownObjectError
from trackany.rasters import BinaryMask, LabelMap, binary_view

FRAME_POLICIES = ("skip-first", "strict-davis", "all")


def default_tolerance(width: int, height: int) -> int:
    return int(math.ceil(0.008 * math.hypot(width, height)))


@dataclass(frozen=True)
class ObjectScore:
    object_id: int
    J: float
    F: float

    @property
    def JF(self) -> float:
        return (self.J + self.F) / 2.0


@dataclass(frozen=True)
class SequenceResult:
    sequence_id: str
    objects: tuple[ObjectScore, ...]

    @property
    def J(self) -> float:
        return float(np.mean([o.J for o in self.objects]))

    @property
    def F(self) -> float:
        return float(np.mean([o.F for o in self.objects]))

    @property
    def JF(self) -> float:
        return (self.J + self.F) / 2.0


@dataclass(frozen=True)
class DatasetResult:
    sequences: tuple[SequenceResult, ...]
    config: dict = field(default_factory=dict)

    def _all_objects(self) -> list[ObjectScore]:
        return [o for s in self.sequences for o in s.objects]

    @property
    def J(self) -> float:
        return float(np.mean([o.J for o in self._all_objects()]))

    @property
    def F(self) -> float:
        return float(np.mean([o.F for o in self._all_objects()]))

    @property
    def JF(self) -> float:
        return (self.J + self.F) / 2.0


def _check_dims(pred: BinaryMask, gt: BinaryMask) -> None:
    if pred.bits.shape != gt.bits.shape:
        raise DimensionMismatchError(
            f"pred {pred.bits.shape} vs gt {gt.bits.shape}"
        )


def jaccard(pred: BinaryMask, gt: BinaryMask) -> float:
    """Intersection-over-union; 1.0 when both masks are empty."""
    _check_dims(pred, gt)
    inter = int(np.count_nonzero(pred.bits & gt.bits))
    union = int(np.count_nonzero(pred.bits | gt.bits))
    if union == 0:
        return 1.0
    return inter / union


def mask_boundary(mask: BinaryMask) -> np.ndarray:
    """1-px-wide boundary: foreground with a background/out-of-frame 4-neighbor."""
    bits = mask.bits
    interior = np.zeros_like(bits)
    interior[1:-1, 1:-1] = (
        bits[1:-1, 1:-1]
        & bits[:-2, 1:-1]
        & bits[2:, 1:-1]
        & bits[1:-1, :-2]
        & bits[1:-1, 2:]
    )
    return bits & ~interior


def boundary_f(pred: BinaryMask, gt: BinaryMask, tolerance: int | None = None) -> float:
    """Boundary F-measure with Euclidean matching at `tolerance` pixels."""
    _check_dims(pred, gt)
    if tolerance is None:
        tolerance = default_tolerance(pred.width, pred.height)
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    pb = mask_boundary(pred)
    gb = mask_boundary(gt)
    n_p = int(pb.sum())
    n_g = int(gb.sum())
    if n_p == 0 and n_g == 0:
        return 1.0
    if n_p == 0 or n_g == 0:
        return 0.0
    # Distance-to-boundary maps; exact Euclidean via the distance transform.
    dist_to_g = ndimage.distance_transform_edt(~gb)
    dist_to_p = ndimage.distance_transform_edt(~pb)
    precision = float(np.count_nonzero(dist_to_g[pb] <= tolerance)) / n_p
    recall = float(np.count_nonzero(dist_to_p[gb] <= tolerance)) / n_g
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _evaluated_indices(n_frames: int, frame_policy: str) -> list[int]:
    if frame_policy == "skip-first":
        return list(range(1, n_frames))
    if frame_policy == "strict-davis":
        return list(range(1, n_frames - 1))
    if frame_policy == "all":
        return list(range(n_frames))
    raise ValueError(f"unknown frame policy {frame_policy!r}; use one of {FRAME_POLICIES}")


def score_object(
    preds: Sequence[LabelMap],
    gts: Sequence[LabelMap],
    object_id: int,
    frame_policy: str = "skip-first",
    tolerance: int | None = None,
) -> ObjectScore:
    """Mean per-frame J and F for one object over the evaluated frames.

    `frame_policy` selects which frames count: "skip-first" (default;
    frame 0 is the initialized frame), "strict-davis" (drop first and
    last), or "all".
    """
    if len(preds) != len(gts):
        raise DimensionMismatchError(f"{len(preds)} predictions vs {len(gts)} ground truths")
    if not any(object_id in g.object_ids and binary_view(g, object_id).area > 0 for g in gts):
        raise UnknownObjectError(f"object {object_id} absent from every ground-truth frame")
    idx = _evaluated_indices(len(preds), frame_policy)
    if not idx:
        raise ValueError("frame policy leaves no frames to evaluate")
    js, fs = [], []
    for i in idx:
        p = binary_view(preds[i], object_id)
        g = binary_view(gts[i], object_id)
        js.append(jaccard(p, g))
        fs.append(boundary_f(p, g, tolerance))
    return ObjectScore(object_id=object_id, J=float(np.mean(js)), F=float(np.mean(fs)))


def aggregate(results: Iterable[SequenceResult], config: dict | None = None) -> DatasetResult:
    """Unweighted mean over all (sequence, object) pairs."""
    seqs = tuple(results)
    if not seqs or not any(s.objects for s in seqs):
        raise ValueError("aggregate needs at least one scored object")
    return DatasetResult(sequences=seqs, config=dict(config or {}))


def result_to_dict(result: DatasetResult) -> dict:
    return {
        "dataset": {"J": result.J, "F": result.F, "JF": result.JF},
        "sequences": [
            {
                "id": s.sequence_id,
                "J": s.J,
                "F": s.F,
                "JF": s.JF,
                "objects": [
                    {"id": o.object_id, "J": o.J, "F": o.F, "JF": o.JF} for o in s.objects
                ],
            }
            for s in result.sequences
        ],
        "config": result.config,
    }


def result_to_json(result: DatasetResult) -> str:
    return json.dumps(result_to_dict(result), indent=2, sort_keys=True)


def format_table(result: DatasetResult, title: str = "dataset") -> str:
    """Plain-text score table with per-sequence rows and a dataset line."""
    lines = [
        f"{'Sequence':<24}{'J&F':>8}{'J':>8}{'F':>8}",
        "-" * 48,
    ]
    for s in result.sequences:
        lines.append(f"{s.sequence_id:<24}{100 * s.JF:>8.1f}{100 * s.J:>8.1f}{100 * s.F:>8.1f}")
    lines.append("-" * 48)
    lines.append(f"{title:<24}{100 * result.JF:>8.1f}{100 * result.J:>8.1f}{100 * result.F:>8.1f}")
    return "\n".join(lines)
