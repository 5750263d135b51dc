"""The interactive tracking session state machine.

A session walks a frame sequence once: click-initialized objects are
propagated frame by frame, every propagated mask is quality-assessed,
failing masks are refined with projected prompts and re-anchored, and a
paused human (or robot) can correct the current frame. Everything the
session does lands in an append-only event log that supports one-pass
auditing and exact replay.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import ndimage

import trackany
from trackany.backends.base import Propagator, Segmenter
from trackany.errors import (
    BackendError,
    EmptyMaskError,
    PhaseError,
    ReplayDivergenceError,
    UnknownObjectError,
)
from trackany.eventlog import EventLog, SessionEvent, canonical_json, verify_chain
from trackany.prompts import AffinityField, encode_mask_prompt, project_prompts
from trackany.rasters import (
    BinaryMask,
    FrameRef,
    LabelMap,
    PointPrompt,
    binary_view,
    compose_labelmap,
)

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


class Phase(str, Enum):
    IDLE = "Idle"
    INITIALIZED = "Initialized"
    TRACKING = "Tracking"
    PAUSED = "Paused"
    FINISHED = "Finished"


@dataclass(frozen=True)
class EngineConfig:
    """Session knobs, frozen into the event-log header."""

    k_pos: int = 5
    k_neg: int = 3
    min_dist: float = 10.0
    prompt_res: int = 256
    logit_mag: float = 8.0
    alpha: float = 0.5
    tau: float = 0.85
    refine_enabled: bool = True
    # Refinement negatives must carry at least this much affinity; weaker
    # outside-mask confidence is ambiguity, not actionable confusion.
    neg_floor: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "k_pos": self.k_pos,
            "k_neg": self.k_neg,
            "min_dist": self.min_dist,
            "prompt_res": self.prompt_res,
            "logit_mag": self.logit_mag,
            "alpha": self.alpha,
            "tau": self.tau,
            "refine_enabled": self.refine_enabled,
            "neg_floor": self.neg_floor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EngineConfig":
        return cls(**d)


@dataclass(frozen=True)
class QualityReport:
    object_id: int
    confidence: float
    area_ratio: float
    score: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "confidence": self.confidence,
            "area_ratio": self.area_ratio,
            "score": self.score,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class StepOutcome:
    frame_index: int
    label_map: LabelMap
    reports: tuple[QualityReport, ...]
    refined_objects: frozenset[int]


@dataclass
class ObjectInfo:
    object_id: int
    label: str
    clicks: list[PointPrompt] = field(default_factory=list)


def _clicks_payload(clicks: Sequence[PointPrompt]) -> list[dict]:
    return [
        {"x": c.x, "y": c.y, "polarity": c.polarity, "object_id": c.object_id} for c in clicks
    ]


def _clicks_from_payload(payload: list[dict]) -> list[PointPrompt]:
    return [
        PointPrompt(x=d["x"], y=d["y"], polarity=d["polarity"], object_id=d["object_id"])
        for d in payload
    ]


class Session:
    """Single-writer state machine over one video; see module docstring."""

    def __init__(
        self,
        frames: Sequence[FrameRef],
        segmenter: Segmenter,
        propagator: Propagator,
        config: EngineConfig | None = None,
        session_id: str = "session",
        _observer=None,
    ):
        if not frames:
            raise ValueError("a session needs at least one frame")
        self.frames = tuple(frames)
        self.segmenter = segmenter
        self.propagator = propagator
        self.config = config or EngineConfig()
        self.session_id = session_id
        self.phase = Phase.IDLE
        self.current_frame = 0
        self.objects: dict[int, ObjectInfo] = {}
        self.masks: dict[int, LabelMap] = {}
        self._anchor_areas: dict[int, int] = {}
        self._last_scores: dict[int, float] = {}
        self._refined_frames: set[int] = set()
        self.log = EventLog(
            header={
                "engine_version": trackany.__version__,
                "session_id": session_id,
                "sequence_id": self.frames[0].sequence_id,
                "n_frames": len(self.frames),
                "config": self.config.to_dict(),
            },
            observer=_observer,
        )

    # -- phase helpers -------------------------------------------------

    def _require_phase(self, *allowed: Phase, op: str) -> None:
        if self.phase not in allowed:
            raise PhaseError(
                f"{op} not allowed in phase {self.phase.value}"
                f" (requires {'/'.join(p.value for p in allowed)})",
                phase=self.phase.value,
            )

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def current_map(self) -> LabelMap:
        if self.current_frame in self.masks:
            return self.masks[self.current_frame]
        f0 = self.frames[0]
        if isinstance(f0.image, np.ndarray):
            h, w = f0.image.shape[:2]
        else:
            rgb = f0.load_rgb()
            h, w = rgb.shape[:2]
        return LabelMap.background(w, h)

    # -- step 1: initialization ----------------------------------------

    def init_object(self, clicks: Sequence[PointPrompt], label: str | None = None) -> LabelMap:
        self._require_phase(Phase.IDLE, Phase.INITIALIZED, Phase.PAUSED, op="init_object")
        if not clicks:
            raise ValueError("init_object needs at least one click")
        object_id = max(self.objects, default=0) + 1
        clicks = [replace(c, object_id=object_id) for c in clicks]
        frame = self.frames[self.current_frame]
        result = self.segmenter.segment(frame, points=clicks)
        if result.mask.is_empty():
            # Nothing is logged or mutated; the caller should add clicks.
            raise EmptyMaskError(
                f"clicks selected nothing for new object {object_id}; add more clicks"
            )
        self.log.append("Clicked", self.current_frame, {
            "object_id": object_id,
            "clicks": _clicks_payload(clicks),
        })
        entries = [
            (oid, binary_view(self.current_map(), oid)) for oid in self.objects
        ] + [(object_id, result.mask)]
        new_map = compose_labelmap(entries, policy="lower-id-wins")
        self.objects[object_id] = ObjectInfo(object_id, label or f"object-{object_id}", list(clicks))
        self.masks[self.current_frame] = new_map
        for oid in new_map.object_ids:
            self._anchor_areas[oid] = binary_view(new_map, oid).area
            self._last_scores.setdefault(oid, 1.0)
        if self.phase in (Phase.IDLE, Phase.INITIALIZED):
            self.propagator.init(frame, new_map)
            self.phase = Phase.INITIALIZED
        else:  # adding an object mid-video while paused
            self.propagator.re_anchor(frame, new_map)
        self.log.append("Init", self.current_frame, {
            "object_id": object_id,
            "label": self.objects[object_id].label,
            "confidence": result.confidence,
            "mask_digest": result.mask.digest(),
            "labelmap_digest": new_map.digest(),
        })
        return new_map

    # -- step 2: tracking ----------------------------------------------

    def start(self) -> None:
        self._require_phase(Phase.INITIALIZED, op="start")
        self.phase = Phase.TRACKING

    def _assess(self, object_id: int, mask: BinaryMask, affinity: AffinityField) -> QualityReport:
        if mask.is_empty():
            confidence = 0.0
        else:
            confidence = float(affinity.values[mask.bits].mean())
        anchor = self._anchor_areas.get(object_id, 0)
        area_ratio = 1.0 if anchor == 0 else mask.area / anchor
        a = self.config.alpha
        score = a * confidence + (1.0 - a) * min(area_ratio, 1.0)
        return QualityReport(
            object_id=object_id,
            confidence=confidence,
            area_ratio=area_ratio,
            score=score,
            passed=score >= self.config.tau,
        )

    def _prompt_region(self, mask: BinaryMask, affinity: AffinityField) -> BinaryMask:
        """Confident-support components touching the predicted mask.

        This is where the propagator still believes the object lives; it
        extends past a shrunken mask, so positive prompts can reach the
        lost band.
        """
        support = affinity.values >= 0.5
        if not support.any():
            return mask
        labeled, n = ndimage.label(support, structure=_FOUR_CONNECTED)
        touching = np.unique(labeled[mask.bits & (labeled > 0)])
        if touching.size == 0:
            return mask
        return BinaryMask(np.isin(labeled, touching))

    def _refine(
        self,
        object_id: int,
        mask: BinaryMask,
        affinity: AffinityField,
        failing_score: float,
        frame_index: int,
    ) -> tuple[BinaryMask, float, bool]:
        """Step-3 refinement; returns (mask, score-for-merge, accepted)."""
        cfg = self.config
        region = self._prompt_region(mask, affinity)
        prompts = project_prompts(
            affinity, region, k_pos=cfg.k_pos, k_neg=cfg.k_neg, min_dist=cfg.min_dist
        )
        prompts = [
            p
            for p in prompts
            if p.polarity == "positive" or affinity.values[p.y, p.x] >= cfg.neg_floor
        ]
        frame = self.frames[frame_index]
        try:
            result = self.segmenter.segment(
                frame,
                points=prompts,
                mask_prompt=encode_mask_prompt(mask, cfg.prompt_res, cfg.logit_mag),
            )
        except Exception as exc:  # noqa: BLE001 - backend failures keep the frame
            self.log.append("Refined", frame_index, {
                "object_id": object_id,
                "accepted": False,
                "error": str(exc),
            })
            return mask, failing_score, False
        accepted = result.confidence >= failing_score and not result.mask.is_empty()
        self.log.append("Refined", frame_index, {
            "object_id": object_id,
            "accepted": accepted,
            "segment_confidence": result.confidence,
            "failing_score": failing_score,
            "prompts": _clicks_payload(prompts),
            "mask_digest": result.mask.digest(),
        })
        if accepted:
            return result.mask, result.confidence, True
        return mask, failing_score, False

    def track_step(self) -> StepOutcome:
        self._require_phase(Phase.TRACKING, op="track_step")
        next_index = self.current_frame + 1
        if next_index >= len(self.frames):
            raise PhaseError("no frames remain", phase=self.phase.value)
        frame = self.frames[next_index]
        try:
            result = self.propagator.step(frame)
        except Exception as exc:
            self.phase = Phase.PAUSED
            self.log.append("Paused", next_index, {"error": str(exc)})
            raise BackendError(f"propagation failed at frame {next_index}: {exc}") from exc
        self.log.append("Propagated", next_index, {
            "labelmap_digest": result.label_map.digest(),
            "objects": {
                str(oid): binary_view(result.label_map, oid).digest()
                for oid in result.label_map.object_ids
            },
        })
        working: dict[int, tuple[BinaryMask, float]] = {}
        reports: dict[int, QualityReport] = {}
        affinities: dict[int, AffinityField] = {}
        for oid in self.objects:
            mask = binary_view(result.label_map, oid)
            affinity = result.affinities.get(oid)
            if affinity is None:
                affinity = AffinityField(
                    oid, np.zeros(result.label_map.labels.shape, dtype=np.float32)
                )
            affinities[oid] = affinity
            report = self._assess(oid, mask, affinity)
            reports[oid] = report
            working[oid] = (mask, report.score)
            self.log.append("Assessed", next_index, report.to_dict())
        refined: set[int] = set()
        final = result.label_map  # bit-exact passthrough unless a refinement lands
        if self.config.refine_enabled:
            for oid, report in reports.items():
                if report.passed:
                    continue
                mask, score, accepted = self._refine(
                    oid, working[oid][0], affinities[oid], report.score, next_index
                )
                if not accepted:
                    continue
                refined.add(oid)
                working[oid] = (mask, score)
                final = self._compose_working(working)
                self.propagator.re_anchor(frame, final)
                for anchor_id in final.object_ids:
                    self._anchor_areas[anchor_id] = binary_view(final, anchor_id).area
                self.log.append("ReAnchored", next_index, {
                    "labelmap_digest": final.digest(),
                    "trigger": "Refined",
                    "object_id": oid,
                })
                # The old affinity field describes the pre-refinement belief;
                # the accepted segmenter confidence is the fresh signal.
                post = self.config.alpha * score + (1 - self.config.alpha) * 1.0
                reports[oid] = QualityReport(
                    object_id=oid,
                    confidence=score,
                    area_ratio=1.0,
                    score=post,
                    passed=post >= self.config.tau,
                )
        self.current_frame = next_index
        self.masks[next_index] = final
        for oid, report in reports.items():
            self._last_scores[oid] = report.score
        if refined:
            self._refined_frames.add(next_index)
        return StepOutcome(
            frame_index=next_index,
            label_map=final,
            reports=tuple(reports[oid] for oid in self.objects),
            refined_objects=frozenset(refined),
        )

    def _compose_working(self, working: dict[int, tuple[BinaryMask, float]]) -> LabelMap:
        entries = [(oid, mask) for oid, (mask, _) in working.items()]
        scores = {oid: score for oid, (_, score) in working.items()}
        return compose_labelmap(entries, policy="confidence", scores=scores)

    # -- step 4: pause and correct ---------------------------------------

    def pause(self) -> None:
        self._require_phase(Phase.TRACKING, op="pause")
        self.phase = Phase.PAUSED
        self.log.append("Paused", self.current_frame, {})

    def resume(self) -> None:
        self._require_phase(Phase.PAUSED, op="resume")
        self.phase = Phase.TRACKING
        self.log.append("Resumed", self.current_frame, {})

    def correct(self, object_id: int, clicks: Sequence[PointPrompt]) -> LabelMap:
        self._require_phase(Phase.PAUSED, op="correct")
        if object_id not in self.objects:
            raise UnknownObjectError(f"unknown object {object_id}")
        if not clicks:
            raise ValueError("correct needs at least one click")
        clicks = [replace(c, object_id=object_id) for c in clicks]
        frame = self.frames[self.current_frame]
        current = binary_view(self.current_map(), object_id)
        result = self.segmenter.segment(
            frame,
            points=clicks,
            mask_prompt=encode_mask_prompt(
                current, self.config.prompt_res, self.config.logit_mag
            ),
        )
        if result.mask.is_empty():
            raise EmptyMaskError(
                f"correction clicks selected nothing for object {object_id}; previous mask kept"
            )
        working = {
            oid: (binary_view(self.current_map(), oid), self._last_scores.get(oid, 1.0))
            for oid in self.objects
        }
        working[object_id] = (result.mask, result.confidence)
        new_map = self._compose_working(working)
        self.masks[self.current_frame] = new_map
        self.objects[object_id].clicks.extend(clicks)
        self.propagator.re_anchor(frame, new_map)
        for oid in new_map.object_ids:
            self._anchor_areas[oid] = binary_view(new_map, oid).area
        self._last_scores[object_id] = result.confidence
        self.log.append("Corrected", self.current_frame, {
            "object_id": object_id,
            "clicks": _clicks_payload(clicks),
            "confidence": result.confidence,
            "mask_digest": result.mask.digest(),
            "labelmap_digest": new_map.digest(),
        })
        self.log.append("ReAnchored", self.current_frame, {
            "labelmap_digest": new_map.digest(),
            "trigger": "Corrected",
            "object_id": object_id,
        })
        return new_map

    # -- one-pass execution ----------------------------------------------

    def finish(self) -> None:
        self._require_phase(Phase.TRACKING, Phase.PAUSED, op="finish")
        self.phase = Phase.FINISHED
        self.log.append("Finished", self.current_frame, {})

    def run_one_pass(self) -> dict[int, LabelMap]:
        self._require_phase(Phase.INITIALIZED, op="run_one_pass")
        self.start()
        while self.current_frame + 1 < len(self.frames):
            self.track_step()
        self.finish()
        return dict(self.masks)

    def was_refined(self, frame_index: int) -> bool:
        return frame_index in self._refined_frames


def create_session(
    frames: Sequence[FrameRef],
    segmenter: Segmenter,
    propagator: Propagator,
    config: EngineConfig | None = None,
    session_id: str = "session",
) -> Session:
    return Session(frames, segmenter, propagator, config, session_id)


def replay(
    header: dict,
    events: Sequence[SessionEvent],
    frames: Sequence[FrameRef],
    segmenter: Segmenter,
    propagator: Propagator,
) -> dict[int, LabelMap]:
    """Re-execute a recorded session and verify every event matches.

    Raises ReplayDivergenceError naming the first divergent event; a
    tampered log line fails the hash-chain check on exactly that event.
    """
    return dict(replay_session(header, events, frames, segmenter, propagator).masks)


def replay_session(
    header: dict,
    events: Sequence[SessionEvent],
    frames: Sequence[FrameRef],
    segmenter: Segmenter,
    propagator: Propagator,
) -> Session:
    """replay(), but hands back the reconstructed live session."""
    bad = verify_chain(header, events)
    if bad is not None:
        raise ReplayDivergenceError(
            f"event log hash chain broken at event {bad} ({events[bad].kind})",
            event_index=bad,
            kind=events[bad].kind,
        )
    if header.get("engine_version") != trackany.__version__:
        raise ReplayDivergenceError(
            f"log written by engine {header.get('engine_version')}, "
            f"this is {trackany.__version__}",
            event_index=-1,
            kind="header",
        )
    if header.get("n_frames") != len(frames):
        raise ReplayDivergenceError(
            f"log recorded {header.get('n_frames')} frames, video has {len(frames)}",
            event_index=-1,
            kind="header",
        )
    cursor = 0

    def observer(event: SessionEvent) -> None:
        nonlocal cursor
        if cursor >= len(events):
            raise ReplayDivergenceError(
                f"replay produced extra event {event.kind} at index {event.index}",
                event_index=event.index,
                kind=event.kind,
            )
        recorded = events[cursor]
        if canonical_json(event.body()) != canonical_json(recorded.body()):
            raise ReplayDivergenceError(
                f"replay diverged at event {recorded.index} ({recorded.kind})",
                event_index=recorded.index,
                kind=recorded.kind,
            )
        cursor += 1

    session = Session(
        frames,
        segmenter,
        propagator,
        EngineConfig.from_dict(header["config"]),
        session_id=header.get("session_id", "replay"),
        _observer=observer,
    )
    while cursor < len(events):
        record = events[cursor]
        kind = record.kind
        if kind == "Clicked":
            session.init_object(
                _clicks_from_payload(record.payload["clicks"]),
                label=None,
            )
        elif kind == "Propagated":
            if session.phase == Phase.INITIALIZED:
                session.start()
            session.track_step()
        elif kind == "Paused":
            if "error" in record.payload:
                if session.phase == Phase.INITIALIZED:
                    session.start()
                try:
                    session.track_step()
                except BackendError:
                    pass
            else:
                session.pause()
        elif kind == "Resumed":
            session.resume()
        elif kind == "Corrected":
            session.correct(
                record.payload["object_id"],
                _clicks_from_payload(record.payload["clicks"]),
            )
        elif kind == "Finished":
            if session.phase == Phase.INITIALIZED:
                session.start()
            session.finish()
        else:
            raise ReplayDivergenceError(
                f"unexpected {kind} event at index {record.index} during replay",
                event_index=record.index,
                kind=kind,
            )
    return session
