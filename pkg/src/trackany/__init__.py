"""Interactive video object tracking and segmentation orchestration."""

__version__ = "0.1.0"

from trackany.rasters import BinaryMask, BoxPrompt, FrameRef, LabelMap, PointPrompt

__all__ = [
    "__version__",
    "BinaryMask",
    "BoxPrompt",
    "FrameRef",
    "LabelMap",
    "PointPrompt",
]
