"""DAVIS-format dataset access and palette-PNG mask I/O.

Annotation masks are 8-bit indexed PNGs whose palette index *is* the
object id; the palette itself is the standard 256-entry VOC colormap.
Written files additionally carry the declared object ids in a text chunk
so that a LabelMap round-trips exactly even when an object is absent
from the raster.
"""
from __future__ import annotations

import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, PngImagePlugin

from trackany.errors import DatasetLayoutError, MaskFormatError
from trackany.rasters import FrameRef, LabelMap

_IDS_KEY = "trackany:object_ids"
_FRAME_RE = re.compile(r"^(\d{5})\.(jpg|png)$")


def voc_colormap() -> np.ndarray:
    """The 256-entry VOC palette via the standard 8-step bit-reversal routine."""
    cmap = np.zeros((256, 3), dtype=np.uint8)
    for i in range(256):
        r = g = b = 0
        c = i
        for j in range(8):
            r |= ((c >> 0) & 1) << (7 - j)
            g |= ((c >> 1) & 1) << (7 - j)
            b |= ((c >> 2) & 1) << (7 - j)
            c >>= 3
        cmap[i] = (r, g, b)
    return cmap


_VOC_PALETTE = voc_colormap()


def write_mask_png(label_map: LabelMap) -> bytes:
    """Encode a LabelMap as an indexed PNG with the VOC palette.

    Deterministic: identical maps produce identical bytes.
    """
    if any(i >= 256 for i in label_map.object_ids):
        raise MaskFormatError("object ids must be < 256 for indexed PNG")
    im = Image.fromarray(label_map.labels.astype(np.uint8), mode="P")
    im.putpalette(_VOC_PALETTE.flatten().tolist())
    info = PngImagePlugin.PngInfo()
    info.add_text(_IDS_KEY, ",".join(str(i) for i in label_map.object_ids))
    buf = io.BytesIO()
    im.save(buf, format="PNG", pnginfo=info)
    return buf.getvalue()


def read_mask_png(data: bytes) -> LabelMap:
    """Decode an indexed PNG into a LabelMap.

    Object ids come from the embedded id chunk when present (files written
    by this module), otherwise from the nonzero indices in the raster
    (external DAVIS annotations).
    """
    im = Image.open(io.BytesIO(data))
    if im.mode != "P":
        raise MaskFormatError(f"mask PNG must be indexed-color, got mode {im.mode!r}")
    labels = np.asarray(im, dtype=np.uint16)
    declared = im.info.get(_IDS_KEY)
    if declared is not None:
        ids = tuple(int(t) for t in declared.split(",")) if declared else ()
    else:
        ids = tuple(int(i) for i in np.unique(labels) if i != 0)
    return LabelMap(labels, ids)


def save_mask_png(label_map: LabelMap, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_mask_png(label_map))


def load_mask_png(path: Path) -> LabelMap:
    return read_mask_png(path.read_bytes())


@dataclass(frozen=True)
class DavisSequence:
    """One sequence: ordered frames plus whatever annotations exist."""

    sequence_id: str
    frames: tuple[FrameRef, ...]
    annotations: dict[int, LabelMap]

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self._dims()[0]

    @property
    def height(self) -> int:
        return self._dims()[1]

    def _dims(self) -> tuple[int, int]:
        if self.annotations:
            first = self.annotations[min(self.annotations)]
            return first.width, first.height
        with Image.open(self.frames[0].image) as im:
            return im.size


def _indexed_files(directory: Path, ext: str) -> dict[int, Path]:
    out: dict[int, Path] = {}
    for p in sorted(directory.iterdir()):
        m = _FRAME_RE.match(p.name)
        if m and m.group(2) == ext:
            out[int(m.group(1))] = p
    return out


def open_davis_sequence(root_dir: Path | str, sequence_id: str) -> DavisSequence:
    """Open `JPEGImages/480p/<seq>` + `Annotations/480p/<seq>` under a root.

    Frames must be contiguously numbered from 00000; gaps are an error.
    Annotations may cover any subset of the frames (test-dev style
    sequences annotate frame 0 only).
    """
    root = Path(root_dir)
    frame_dir = root / "JPEGImages" / "480p" / sequence_id
    anno_dir = root / "Annotations" / "480p" / sequence_id
    if not frame_dir.is_dir():
        raise DatasetLayoutError(f"missing sequence directory {frame_dir}")
    frame_paths = _indexed_files(frame_dir, "jpg")
    if not frame_paths:
        raise DatasetLayoutError(f"no frames in {frame_dir}")
    indices = sorted(frame_paths)
    expected = list(range(len(indices)))
    if indices != expected:
        gaps = sorted(set(range(indices[-1] + 1)) - set(indices))
        raise DatasetLayoutError(
            f"sequence {sequence_id!r} frame numbering has gaps: missing {gaps}"
        )
    frames = tuple(
        FrameRef(sequence_id=sequence_id, frame_index=i, image=frame_paths[i]) for i in indices
    )
    annotations: dict[int, LabelMap] = {}
    if anno_dir.is_dir():
        anno_paths = _indexed_files(anno_dir, "png")
        if len(anno_paths) > len(frames):
            raise DatasetLayoutError(
                f"sequence {sequence_id!r} has more annotations ({len(anno_paths)}) "
                f"than frames ({len(frames)})"
            )
        extra = sorted(set(anno_paths) - set(indices))
        if extra:
            raise DatasetLayoutError(
                f"sequence {sequence_id!r} has annotations for nonexistent frames {extra}"
            )
        for i, p in sorted(anno_paths.items()):
            annotations[i] = load_mask_png(p)
        dims = {(a.width, a.height) for a in annotations.values()}
        if len(dims) > 1:
            raise DatasetLayoutError(
                f"sequence {sequence_id!r} annotations disagree on resolution: {sorted(dims)}"
            )
    return DavisSequence(sequence_id=sequence_id, frames=frames, annotations=annotations)


def list_sequences(root_dir: Path | str) -> list[str]:
    image_root = Path(root_dir) / "JPEGImages" / "480p"
    if not image_root.is_dir():
        raise DatasetLayoutError(f"missing {image_root}")
    return sorted(p.name for p in image_root.iterdir() if p.is_dir())


def write_sequence_masks(out_root: Path | str, sequence_id: str, masks: dict[int, LabelMap]) -> None:
    """Write predicted masks as `<out>/<seq>/NNNNN.png`."""
    seq_dir = Path(out_root) / sequence_id
    seq_dir.mkdir(parents=True, exist_ok=True)
    for index, m in sorted(masks.items()):
        save_mask_png(m, seq_dir / f"{index:05d}.png")
