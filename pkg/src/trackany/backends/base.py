"""Abstract segmenter/propagator interfaces and the backend registry."""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Sequence

from trackany.errors import BackendError, ConfigError
from trackany.prompts import AffinityField, MaskPrompt
from trackany.rasters import BinaryMask, BoxPrompt, FrameRef, LabelMap, PointPrompt

if TYPE_CHECKING:
    from trackany.davis import DavisSequence


@dataclass(frozen=True)
class SegmentResult:
    mask: BinaryMask
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class PropagateResult:
    label_map: LabelMap
    affinities: dict[int, AffinityField]

    def __post_init__(self):
        if set(self.affinities) != set(self.label_map.object_ids):
            raise ValueError(
                f"affinity ids {sorted(self.affinities)} != tracked ids "
                f"{sorted(self.label_map.object_ids)}"
            )
        for oid, aff in self.affinities.items():
            if aff.values.shape != self.label_map.labels.shape:
                raise ValueError(f"affinity for object {oid} has wrong dimensions")


class Segmenter(ABC):
    """Promptable single-object segmenter. Must be safe to call concurrently."""

    @abstractmethod
    def segment(
        self,
        image: FrameRef,
        points: Sequence[PointPrompt] = (),
        box: BoxPrompt | None = None,
        mask_prompt: MaskPrompt | None = None,
    ) -> SegmentResult:
        raise NotImplementedError

    @staticmethod
    def check_prompts(
        width: int,
        height: int,
        points: Sequence[PointPrompt],
        box: BoxPrompt | None,
        mask_prompt: MaskPrompt | None,
    ) -> None:
        if not points and box is None and mask_prompt is None:
            raise BackendError("segment requires at least one prompt (point, box, or mask)")
        for p in points:
            if not p.in_frame(width, height):
                raise BackendError(f"point prompt ({p.x}, {p.y}) outside {width}x{height} frame")
        if box is not None and not box.in_frame(width, height):
            raise BackendError(f"box prompt {box} outside {width}x{height} frame")


class Propagator(ABC):
    """Stateful mask propagator, confined to one session's processing thread."""

    @abstractmethod
    def init(self, image: FrameRef, label_map: LabelMap) -> None:
        raise NotImplementedError

    @abstractmethod
    def step(self, image: FrameRef) -> PropagateResult:
        raise NotImplementedError

    @abstractmethod
    def re_anchor(self, image: FrameRef, label_map: LabelMap) -> None:
        raise NotImplementedError


@dataclass
class BackendBundle:
    segmenter: Segmenter
    propagator: Propagator


@dataclass
class BackendContext:
    """Everything a backend factory may need to build a bundle."""

    sequence: "DavisSequence | None" = None
    degradation: "object | None" = None  # DegradationConfig for synthetic backends
    session_id: str = "default"
    options: dict = field(default_factory=dict)


_REGISTRY: dict[str, Callable[[str, BackendContext], BackendBundle]] = {}


def register_backend(name: str, factory: Callable[[str, BackendContext], BackendBundle]) -> None:
    _REGISTRY[name] = factory


def create_backend(spec: str, context: BackendContext) -> BackendBundle:
    """Build a backend bundle from a spec string like `synthetic` or `remote:<url>`."""
    name, _, _ = spec.partition(":")
    factory = _REGISTRY.get(name)
    if factory is None:
        raise ConfigError(f"unknown backend {name!r}; registered: {sorted(_REGISTRY)}")
    return factory(spec, context)
