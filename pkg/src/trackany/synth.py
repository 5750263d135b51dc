"""Deterministic desk-scale synthetic dataset generator in DAVIS layout.

Flat-color squares drift over a textured background; ground-truth
annotations are exact. Same spec + seed regenerate byte-identical trees,
which the determinism and replay checks depend on.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from trackany.davis import save_mask_png, voc_colormap
from trackany.errors import ConfigError
from trackany.rasters import LabelMap


@dataclass(frozen=True)
class SynthSpec:
    """Generation parameters: counts, resolution, motion, and the seed."""

    sequences: int = 3
    frames: int = 30
    objects: int = 2
    width: int = 192
    height: int = 192
    object_side: int = 60
    drift: float = 1.0  # horizontal px/frame, alternating direction per object
    scale_amp: float = 0.0  # fractional side oscillation amplitude
    scale_period: float = 16.0
    seed: int = 7
    name: str = "synth"

    def __post_init__(self):
        if min(self.sequences, self.frames, self.objects) < 1:
            raise ConfigError("sequences, frames and objects must all be >= 1")
        if self.object_side < 3:
            raise ConfigError("object_side must be >= 3")
        if self.scale_amp < 0 or self.scale_period <= 0:
            raise ConfigError("bad scale oscillation parameters")

    @classmethod
    def from_json(cls, path: Path | str) -> "SynthSpec":
        return cls(**json.loads(Path(path).read_text()))


def object_side_at(spec: SynthSpec, t: int) -> int:
    """Closed-form side length at frame t (rounded sinusoid)."""
    factor = 1.0 + spec.scale_amp * math.sin(2.0 * math.pi * t / spec.scale_period)
    return max(1, round(spec.object_side * factor))


def _object_box(spec: SynthSpec, obj: int, t: int) -> tuple[int, int, int]:
    """(top, left, side) of object `obj` at frame t."""
    side = object_side_at(spec, t)
    max_side = max(object_side_at(spec, k) for k in range(spec.frames))
    lane_height = spec.height // spec.objects
    top_center = obj * lane_height + lane_height // 2
    top = top_center - side // 2
    margin = 6
    span = int(abs(spec.drift) * (spec.frames - 1))
    if obj % 2 == 0:
        left = margin + round(abs(spec.drift) * t)
    else:
        left = margin + span - round(abs(spec.drift) * t)
    # Keep the lane honest even while the size oscillates.
    if max_side + 2 > lane_height:
        raise ConfigError(
            f"object {obj + 1} (side up to {max_side}) does not fit its lane of {lane_height} px"
        )
    return top, left, side


def _validate_bounds(spec: SynthSpec) -> None:
    for t in range(spec.frames):
        for obj in range(spec.objects):
            top, left, side = _object_box(spec, obj, t)
            if top < 0 or left < 0 or top + side > spec.height or left + side > spec.width:
                raise ConfigError(
                    f"object {obj + 1} would exit the frame at frame {t} "
                    f"(box {left},{top} side {side} in {spec.width}x{spec.height})"
                )


def ground_truth_map(spec: SynthSpec, t: int) -> LabelMap:
    labels = np.zeros((spec.height, spec.width), dtype=np.uint16)
    for obj in range(spec.objects):
        top, left, side = _object_box(spec, obj, t)
        labels[top : top + side, left : left + side] = obj + 1
    return LabelMap(labels, tuple(range(1, spec.objects + 1)))


def _background(spec: SynthSpec, sequence_index: int) -> np.ndarray:
    rng = np.random.default_rng(spec.seed * 1000 + sequence_index)
    noise = rng.normal(loc=110.0, scale=40.0, size=(spec.height, spec.width))
    smooth = ndimage.gaussian_filter(noise, sigma=3.0)
    texture = np.clip(smooth, 40, 200).astype(np.uint8)
    return np.stack([texture, texture // 2 + 40, texture // 3 + 60], axis=-1)


def render_frame(spec: SynthSpec, sequence_index: int, t: int, background: np.ndarray) -> np.ndarray:
    frame = background.copy()
    palette = voc_colormap()
    gt = ground_truth_map(spec, t)
    for obj in range(1, spec.objects + 1):
        frame[gt.labels == obj] = palette[obj]
    return frame


def sequence_name(spec: SynthSpec, index: int) -> str:
    return f"{spec.name}-{index:03d}"


def make_synthetic_dataset(spec: SynthSpec, out_root: Path | str) -> list[str]:
    """Generate dataset under `out_root`; returns the sequence ids."""
    _validate_bounds(spec)
    root = Path(out_root)
    names = []
    for s in range(spec.sequences):
        name = sequence_name(spec, s)
        names.append(name)
        img_dir = root / "JPEGImages" / "480p" / name
        anno_dir = root / "Annotations" / "480p" / name
        img_dir.mkdir(parents=True, exist_ok=True)
        anno_dir.mkdir(parents=True, exist_ok=True)
        background = _background(spec, s)
        for t in range(spec.frames):
            frame = render_frame(spec, s, t, background)
            Image.fromarray(frame, mode="RGB").save(
                img_dir / f"{t:05d}.jpg", quality=92, subsampling=0
            )
            save_mask_png(ground_truth_map(spec, t), anno_dir / f"{t:05d}.png")
    split_dir = root / "ImageSets"
    split_dir.mkdir(parents=True, exist_ok=True)
    (split_dir / f"{spec.name}.txt").write_text("\n".join(names) + "\n")
    (root / "spec.json").write_text(json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n")
    return names
