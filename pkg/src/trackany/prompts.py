"""Prompt projection and the deterministic robot user.

Turns a propagator's per-object affinity field into point prompts for a
segmenter (positives inside the given mask, negatives outside), encodes
coarse masks as low-resolution logit grids, and simulates human clicks
at the interior pole of the largest error region so interactive runs can
be evaluated unattended.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from trackany.errors import DimensionMismatchError
from trackany.rasters import BinaryMask, PointPrompt, _frozen

DEFAULT_PROMPT_RES = 256
DEFAULT_LOGIT_MAG = 8.0
DEFAULT_K_POS = 5
DEFAULT_K_NEG = 3
DEFAULT_MIN_DIST = 10
DEFAULT_INIT_CLICKS = 3

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class AffinityField:
    """Per-object per-pixel confidence in [0, 1]."""

    object_id: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("values must be a nonempty 2-D raster")
        if self.object_id <= 0:
            raise ValueError("object_id must be nonzero")
        object.__setattr__(self, "values", _frozen(np.clip(arr, 0.0, 1.0)))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MaskPrompt:
    """Fixed low-resolution grid of signed mask logits plus source dims."""

    grid: np.ndarray
    source_width: int
    source_height: int

    def __post_init__(self):
        arr = np.asarray(self.grid, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("grid must be square")
        if not np.isfinite(arr).all():
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "grid", _frozen(arr))

    @property
    def res(self) -> int:
        return self.grid.shape[0]


def encode_mask_prompt(
    mask: BinaryMask,
    prompt_res: int = DEFAULT_PROMPT_RES,
    logit_mag: float = DEFAULT_LOGIT_MAG,
) -> MaskPrompt:
    """Nearest-neighbor resample to prompt_res², inside -> +mag, outside -> -mag."""
    h, w = mask.bits.shape
    rows = (np.arange(prompt_res) * h) // prompt_res
    cols = (np.arange(prompt_res) * w) // prompt_res
    sampled = mask.bits[np.ix_(rows, cols)]
    grid = np.where(sampled, np.float32(logit_mag), np.float32(-logit_mag))
    return MaskPrompt(grid=grid, source_width=w, source_height=h)


def decode_mask_prompt(prompt: MaskPrompt) -> BinaryMask:
    """Nearest-neighbor expansion of the logit grid back to source dims."""
    res = prompt.res
    rows = (np.arange(prompt.source_height) * res) // prompt.source_height
    cols = (np.arange(prompt.source_width) * res) // prompt.source_width
    return BinaryMask(prompt.grid[np.ix_(rows, cols)] > 0)


def _greedy_select(
    values: np.ndarray,
    candidates: np.ndarray,
    k: int,
    min_dist: float,
) -> list[tuple[int, int]]:
    """Greedy descending-value pick with NMS; ties break row-major."""
    ys, xs = np.nonzero(candidates)
    if k <= 0 or ys.size == 0:
        return []
    vals = values[ys, xs]
    flat = ys.astype(np.int64) * values.shape[1] + xs
    order = np.lexsort((flat, -vals))
    picked: list[tuple[int, int]] = []
    for i in order:
        y, x = int(ys[i]), int(xs[i])
        if any((y - py) ** 2 + (x - px) ** 2 < min_dist**2 for py, px in picked):
            continue
        picked.append((y, x))
        if len(picked) == k:
            break
    return picked


def project_prompts(
    affinity: AffinityField,
    mask: BinaryMask,
    k_pos: int = DEFAULT_K_POS,
    k_neg: int = DEFAULT_K_NEG,
    min_dist: float = DEFAULT_MIN_DIST,
) -> list[PointPrompt]:
    """Project an affinity field into point prompts around a mask.

    Positives: up to k_pos affinity maxima inside the mask, greedy with
    non-maximum suppression at radius min_dist. Negatives: up to k_neg
    maxima outside the mask (high confidence outside the predicted mask
    signals confusion). Deterministic; ties break in row-major order.
    """
    if affinity.values.shape != mask.bits.shape:
        raise DimensionMismatchError(
            f"affinity {affinity.values.shape} vs mask {mask.bits.shape}"
        )
    if k_pos < 0 or k_neg < 0 or min_dist < 0:
        raise ValueError("k_pos, k_neg and min_dist must be nonnegative")
    prompts: list[PointPrompt] = []
    for (y, x) in _greedy_select(affinity.values, mask.bits, k_pos, min_dist):
        prompts.append(PointPrompt(x=x, y=y, polarity="positive", object_id=affinity.object_id))
    for (y, x) in _greedy_select(affinity.values, ~mask.bits, k_neg, min_dist):
        prompts.append(PointPrompt(x=x, y=y, polarity="negative", object_id=affinity.object_id))
    return prompts


def _largest_component(region: np.ndarray) -> np.ndarray | None:
    labeled, n = ndimage.label(region, structure=_FOUR_CONNECTED)
    if n == 0:
        return None
    counts = np.bincount(labeled.ravel())
    counts[0] = 0
    return labeled == int(np.argmax(counts))


def _interior_pole(component: np.ndarray) -> tuple[int, int]:
    """Pixel maximizing 4-connected distance to the component's complement."""
    dist = ndimage.distance_transform_cdt(component, metric="taxicab")
    flat = int(np.argmax(dist))  # argmax is row-major-first on ties
    y, x = np.unravel_index(flat, dist.shape)
    return int(y), int(x)


def simulate_click(
    gt: BinaryMask,
    current: BinaryMask | None = None,
    object_id: int = 1,
) -> PointPrompt | None:
    """One robot-user click at the interior pole of the largest error region.

    The error region is gt XOR current (gt itself when current is absent).
    Returns None when there is nothing to correct. Polarity is positive
    when the pole is a missing object pixel, negative for a spurious one.
    """
    if current is not None and current.bits.shape != gt.bits.shape:
        raise DimensionMismatchError(f"gt {gt.bits.shape} vs current {current.bits.shape}")
    error = gt.bits ^ current.bits if current is not None else gt.bits
    component = _largest_component(error)
    if component is None:
        return None
    y, x = _interior_pole(component)
    polarity = "positive" if gt.bits[y, x] else "negative"
    return PointPrompt(x=x, y=y, polarity=polarity, object_id=object_id)


def simulate_init_clicks(
    gt: BinaryMask,
    n_clicks: int = DEFAULT_INIT_CLICKS,
    object_id: int = 1,
    min_dist: float = DEFAULT_MIN_DIST,
    segment: Callable[[Sequence[PointPrompt]], BinaryMask] | None = None,
) -> list[PointPrompt]:
    """Deterministic initialization clicks for one ground-truth object.

    Online mode (`segment` given): each click is simulated against the
    segmenter's output for the clicks so far. Offline mode: the first
    click, then poles of the largest remaining components after masking
    out already-clicked neighborhoods. May return fewer than n_clicks
    when the target is exhausted.
    """
    if n_clicks < 1:
        raise ValueError("n_clicks must be >= 1")
    if gt.is_empty():
        raise ValueError("ground-truth mask is empty")
    clicks: list[PointPrompt] = []
    if segment is not None:
        current: BinaryMask | None = None
        for _ in range(n_clicks):
            clk = simulate_click(gt, current, object_id=object_id)
            if clk is None:
                break
            clicks.append(clk)
            current = segment(clicks)
        return clicks
    first = simulate_click(gt, None, object_id=object_id)
    assert first is not None
    clicks.append(first)
    working = gt.bits.copy()
    yy, xx = np.mgrid[0 : gt.height, 0 : gt.width]
    while len(clicks) < n_clicks:
        last = clicks[-1]
        working &= (yy - last.y) ** 2 + (xx - last.x) ** 2 > min_dist**2
        component = _largest_component(working)
        if component is None:
            break
        y, x = _interior_pole(component)
        clicks.append(PointPrompt(x=x, y=y, polarity="positive", object_id=object_id))
    return clicks
