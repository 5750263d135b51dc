"""Core raster data model: label maps, binary masks, and prompt types.

All types are immutable values after construction (backing arrays are
frozen), so they can be shared freely across threads.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from trackany.errors import DimensionMismatchError, UnknownObjectError

Polarity = Literal["positive", "negative"]


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr or out.base is arr:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel object-id raster for one frame; 0 is background.

    `labels` is (height, width) unsigned int; `object_ids` is the ordered
    set of declared nonzero ids. Declared ids may be absent from the
    raster (an object can vanish), but every nonzero raster value must be
    declared.
    """

    labels: np.ndarray
    object_ids: tuple[int, ...]

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("labels must be a nonempty 2-D raster")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("labels must have an integer dtype")
        object.__setattr__(self, "labels", _frozen(arr.astype(np.uint16, copy=False)))
        ids = tuple(int(i) for i in self.object_ids)
        if any(i <= 0 for i in ids):
            raise ValueError("object ids must be positive")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate object id")
        object.__setattr__(self, "object_ids", ids)
        present = set(np.unique(self.labels).tolist()) - {0}
        if not present.issubset(ids):
            raise ValueError(f"raster contains undeclared ids {sorted(present - set(ids))}")

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @classmethod
    def background(cls, width: int, height: int) -> "LabelMap":
        return cls(np.zeros((height, width), dtype=np.uint16), ())

    def digest(self) -> str:
        """256-bit hash of dimensions, declared ids, and raw raster."""
        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}:{','.join(map(str, self.object_ids))}:".encode())
        h.update(self.labels.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class BinaryMask:
    """Row-major boolean raster, the per-object view of a LabelMap."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("bits must be a nonempty 2-D raster")
        object.__setattr__(self, "bits", _frozen(arr.astype(bool, copy=False)))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def area(self) -> int:
        return int(self.bits.sum())

    def is_empty(self) -> bool:
        return not bool(self.bits.any())

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}:".encode())
        h.update(np.packbits(self.bits).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class PointPrompt:
    """A positive or negative click at pixel (x, y) targeting one object."""

    x: int
    y: int
    polarity: Polarity
    object_id: int

    def __post_init__(self):
        if self.polarity not in ("positive", "negative"):
            raise ValueError(f"bad polarity {self.polarity!r}")
        if self.object_id <= 0:
            raise ValueError("object_id must be nonzero")

    def in_frame(self, width: int, height: int) -> bool:
        return 0 <= self.x < width and 0 <= self.y < height


@dataclass(frozen=True)
class BoxPrompt:
    """Axis-aligned box prompt; half-open on neither side (inclusive corners)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("box must satisfy x0 < x1 and y0 < y1")

    def in_frame(self, width: int, height: int) -> bool:
        return 0 <= self.x0 and 0 <= self.y0 and self.x1 <= width and self.y1 <= height


@dataclass(frozen=True)
class FrameRef:
    """Reference to one video frame: inline RGB raster or a path to one."""

    sequence_id: str
    frame_index: int
    image: Path | np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError("frame_index must be nonnegative")
        if isinstance(self.image, np.ndarray):
            object.__setattr__(self, "image", _frozen(self.image))

    def load_rgb(self) -> np.ndarray:
        """Decode the frame to an (H, W, 3) uint8 array."""
        if isinstance(self.image, np.ndarray):
            arr = self.image
            if arr.ndim == 2:
                arr = np.stack([arr] * 3, axis=-1)
            return arr.astype(np.uint8, copy=False)
        if isinstance(self.image, Path):
            from PIL import Image

            with Image.open(self.image) as im:
                return np.asarray(im.convert("RGB"))
        raise ValueError(f"frame {self.sequence_id}:{self.frame_index} has no image payload")


def extract_binary(label_map: LabelMap, object_id: int) -> BinaryMask:
    """Binary view of one declared object of a label map."""
    if object_id not in label_map.object_ids:
        raise UnknownObjectError(f"object id {object_id} not in {label_map.object_ids}")
    return BinaryMask(label_map.labels == object_id)


def binary_view(label_map: LabelMap, object_id: int) -> BinaryMask:
    """Like extract_binary but yields an empty mask for undeclared ids."""
    if object_id in label_map.object_ids:
        return extract_binary(label_map, object_id)
    return BinaryMask.empty(label_map.width, label_map.height)


def compose_labelmap(
    masks: Sequence[tuple[int, BinaryMask]],
    policy: str = "lower-id-wins",
    scores: dict[int, float] | None = None,
) -> LabelMap:
    """Merge per-object binary masks into one LabelMap.

    Overlaps are resolved by `policy`: "lower-id-wins" (deterministic
    default) or "confidence" (highest per-mask score wins; ties fall back
    to the lower id). Uncovered pixels stay background.
    """
    if not masks:
        raise ValueError("compose_labelmap needs at least one mask")
    ids = [oid for oid, _ in masks]
    if any(i <= 0 for i in ids):
        raise ValueError("object ids must be positive")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate object id")
    shape = masks[0][1].bits.shape
    for oid, m in masks:
        if m.bits.shape != shape:
            raise DimensionMismatchError(
                f"mask for object {oid} has shape {m.bits.shape}, expected {shape}"
            )
    if policy == "lower-id-wins":
        order = sorted(masks, key=lambda im: im[0], reverse=True)
    elif policy == "confidence":
        if scores is None:
            raise ValueError("confidence policy requires per-mask scores")
        missing = [oid for oid in ids if oid not in scores]
        if missing:
            raise ValueError(f"missing scores for objects {missing}")
        # Painted in ascending (score, preference) order so the best wins.
        order = sorted(masks, key=lambda im: (scores[im[0]], -im[0]))
    else:
        raise ValueError(f"unknown overlap policy {policy!r}")
    labels = np.zeros(shape, dtype=np.uint16)
    for oid, m in order:
        labels[m.bits] = oid
    return LabelMap(labels, tuple(ids))
