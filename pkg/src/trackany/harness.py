"""Unattended evaluation harness: robot clicks in, score table out.

For each sequence the robot user derives initialization clicks from the
frame-0 ground truth, the session runs one pass, and (budget permitting)
a simulated human pauses at the first frame whose quality report is
still failing after refinement, corrects it with one click per failing
object, and resumes. Masks, per-sequence event logs, a results JSON, and
a plain-text score table land under the output directory.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from trackany.backends import DegradationConfig
from trackany.backends.base import BackendContext, create_backend
from trackany.davis import (
    DavisSequence,
    list_sequences,
    open_davis_sequence,
    write_sequence_masks,
)
from trackany.engine import EngineConfig, Session, create_session
from trackany.errors import ConfigError
from trackany.eventlog import audit_one_pass
from trackany.metrics import (
    DatasetResult,
    SequenceResult,
    aggregate,
    format_table,
    result_to_json,
    score_object,
)
from trackany.prompts import simulate_click, simulate_init_clicks
from trackany.rasters import LabelMap, binary_view, extract_binary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalConfig:
    dataset_root: Path
    split: tuple[str, ...] = ()  # empty = every sequence under the root
    backend: str = "synthetic"
    init_clicks: int = 3
    correction_budget: int = 0
    engine: EngineConfig = field(default_factory=EngineConfig)
    degradation: DegradationConfig = field(default_factory=DegradationConfig)
    frame_policy: str = "skip-first"
    tolerance: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.init_clicks < 1:
            raise ConfigError("init click count must be >= 1")
        if self.correction_budget < 0:
            raise ConfigError("correction budget must be >= 0")


@dataclass
class SequenceRun:
    sequence_id: str
    session: Session
    masks: dict[int, LabelMap]
    result: SequenceResult | None
    warnings: list[str]


def load_split(path: Path | str) -> tuple[str, ...]:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    return tuple(ln for ln in lines if ln and not ln.startswith("#"))


def _robot_init(session: Session, gt0: LabelMap, n_clicks: int) -> None:
    frame0 = session.frames[0]
    for oid in sorted(gt0.object_ids):
        gt_mask = extract_binary(gt0, oid)
        if gt_mask.is_empty():
            continue

        def segment(clicks):
            return session.segmenter.segment(frame0, points=clicks).mask

        clicks = simulate_init_clicks(
            gt_mask, n_clicks=n_clicks, object_id=oid, segment=segment
        )
        session.init_object(clicks)


def run_sequence(config: EvalConfig, sequence_id: str) -> SequenceRun:
    seq = open_davis_sequence(config.dataset_root, sequence_id)
    bundle = create_backend(
        config.backend,
        BackendContext(
            sequence=seq, degradation=config.degradation, session_id=sequence_id
        ),
    )
    session = create_session(
        seq.frames,
        bundle.segmenter,
        bundle.propagator,
        config.engine,
        session_id=sequence_id,
    )
    warnings: list[str] = []
    gt0 = seq.annotations.get(0)
    if gt0 is None or not gt0.object_ids:
        raise ConfigError(f"sequence {sequence_id!r} has no frame-0 annotation to initialize from")
    _robot_init(session, gt0, config.init_clicks)
    session.start()
    budget = config.correction_budget
    while session.current_frame + 1 < len(seq.frames):
        outcome = session.track_step()
        failing = [r for r in outcome.reports if not r.passed]
        if failing and budget > 0:
            t = outcome.frame_index
            gt_t = seq.annotations.get(t)
            if gt_t is None:
                warnings.append(f"frame {t}: correction skipped, no ground truth")
                continue
            session.pause()
            for report in failing:
                click = simulate_click(
                    binary_view(gt_t, report.object_id),
                    binary_view(session.masks[t], report.object_id),
                    object_id=report.object_id,
                )
                if click is not None:
                    session.correct(report.object_id, [click])
            session.resume()
            budget -= 1
    session.finish()
    problems = audit_one_pass(session.log.events, len(seq.frames))
    if problems:
        raise RuntimeError(f"one-pass audit failed for {sequence_id!r}: {problems}")
    result = _score_sequence(config, seq, session.masks, warnings)
    return SequenceRun(sequence_id, session, dict(session.masks), result, warnings)


def _score_sequence(
    config: EvalConfig,
    seq: DavisSequence,
    masks: dict[int, LabelMap],
    warnings: list[str],
) -> SequenceResult | None:
    n = len(seq.frames)
    missing = [t for t in range(n) if t not in seq.annotations]
    if missing:
        warnings.append(
            f"scoring skipped: ground truth missing for frames {missing[:5]}"
            f"{'...' if len(missing) > 5 else ''}"
        )
        log.warning("sequence %s: %s", seq.sequence_id, warnings[-1])
        return None
    gts = [seq.annotations[t] for t in range(n)]
    preds = [
        masks.get(t, LabelMap.background(gts[0].width, gts[0].height)) for t in range(n)
    ]
    scores = [
        score_object(
            preds,
            gts,
            object_id=oid,
            frame_policy=config.frame_policy,
            tolerance=config.tolerance,
        )
        for oid in sorted(seq.annotations[0].object_ids)
    ]
    return SequenceResult(seq.sequence_id, tuple(scores))


def evaluate(config: EvalConfig, out_dir: Path | str | None = None) -> tuple[DatasetResult | None, list[SequenceRun]]:
    """Run the harness over the configured split; write artifacts if out_dir given."""
    split = config.split or tuple(list_sequences(config.dataset_root))
    if not split:
        raise ConfigError("no sequences to evaluate")
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            runs = list(pool.map(lambda sid: run_sequence(config, sid), split))
    else:
        runs = [run_sequence(config, sid) for sid in split]
    scored = [r.result for r in runs if r.result is not None]
    dataset: DatasetResult | None = None
    if scored:
        meta = {
            "backend": config.backend,
            "frame_policy": config.frame_policy,
            "tolerance": config.tolerance,
            "init_clicks": config.init_clicks,
            "correction_budget": config.correction_budget,
            "engine": config.engine.to_dict(),
            "degradation": config.degradation.to_dict(),
            "resolution": f"{runs[0].masks[0].width}x{runs[0].masks[0].height}"
            if runs[0].masks
            else "unknown",
        }
        dataset = aggregate(scored, config=meta)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for run in runs:
            write_sequence_masks(out / "masks", run.sequence_id, run.masks)
            run.session.log.write(out / "logs" / f"{run.sequence_id}.jsonl")
        if dataset is not None:
            (out / "results.json").write_text(result_to_json(dataset) + "\n")
            (out / "table.txt").write_text(format_table(dataset) + "\n")
    return dataset, runs
