"""Command-line interface: serve, eval, synth, replay, mock-server.

Every option can be set through the environment with a TRACKANY_ prefix
(e.g. TRACKANY_EVAL_BACKEND=synthetic). Exit codes: 0 ok, 2 config
error, 3 backend failure, 4 metric/ground-truth mismatch.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

import trackany
from trackany.backends import DegradationConfig
from trackany.engine import EngineConfig
from trackany.errors import (
    BackendError,
    ConfigError,
    DatasetLayoutError,
    DimensionMismatchError,
    ReplayDivergenceError,
    UnknownObjectError,
)

EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_METRIC = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _engine_options(fn):
    fn = click.option("--k-pos", default=5, show_default=True, help="Positive prompt count for refinement.")(fn)
    fn = click.option("--k-neg", default=3, show_default=True, help="Negative prompt count for refinement.")(fn)
    fn = click.option("--min-dist", default=10.0, show_default=True, help="Prompt suppression radius (px).")(fn)
    fn = click.option("--prompt-res", default=256, show_default=True, help="Mask prompt grid resolution.")(fn)
    fn = click.option("--tau", default=0.85, show_default=True, help="Quality threshold.")(fn)
    fn = click.option("--alpha", default=0.5, show_default=True, help="Confidence weight in the quality score.")(fn)
    fn = click.option("--refine/--no-refine", default=True, show_default=True, help="Quality-gated refinement.")(fn)
    return fn


def _build_engine(k_pos, k_neg, min_dist, prompt_res, tau, alpha, refine) -> EngineConfig:
    return EngineConfig(
        k_pos=k_pos,
        k_neg=k_neg,
        min_dist=min_dist,
        prompt_res=prompt_res,
        tau=tau,
        alpha=alpha,
        refine_enabled=refine,
    )


@click.group()
@click.version_option(version=trackany.__version__)
def main():
    """Interactive video object tracking and segmentation toolkit."""


@main.command()
@click.option("--bind", default="127.0.0.1:8765", show_default=True, help="host:port to listen on.")
@click.option("--backend", default="synthetic", show_default=True, help="synthetic or remote:<url>.")
@click.option("--state-dir", type=click.Path(path_type=Path), default=Path("./trackany-state"), show_default=True)
@click.option("--erosion-base", default=0.0, show_default=True, help="Synthetic degradation rate.")
@click.option("--step-delay", default=0.0, show_default=True, help="Pacing between tracking steps (s).")
@_engine_options
def serve(bind, backend, state_dir, erosion_base, step_delay, **engine_kwargs):
    """Run the session service (REST + WebSocket)."""
    import uvicorn

    from trackany.service import ServiceConfig, build_app

    try:
        host, _, port = bind.partition(":")
        config = ServiceConfig(
            state_dir=state_dir,
            backend=backend,
            engine=_build_engine(**engine_kwargs),
            degradation=DegradationConfig(erosion_base=erosion_base),
            step_delay=step_delay,
        )
        app = build_app(config)
    except (ConfigError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8765), log_level="info")


@main.command(name="eval")
@click.option("--dataset", "dataset_root", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--split", type=click.Path(exists=True, path_type=Path), default=None, help="Sequence-id list file.")
@click.option("--backend", default="synthetic", show_default=True)
@click.option("--init-clicks", default=3, show_default=True)
@click.option("--correction-budget", default=0, show_default=True)
@click.option("--erosion-base", default=0.0, show_default=True, help="Synthetic degradation rate.")
@click.option("--frame-policy", type=click.Choice(["skip-first", "strict-davis", "all"]), default="skip-first", show_default=True)
@click.option("--tolerance", type=int, default=None, help="Boundary match tolerance (px); default 0.8% of diagonal.")
@click.option("--jobs", default=1, show_default=True, help="Parallel sequences.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None, help="Results directory.")
@_engine_options
def eval_command(dataset_root, split, backend, init_clicks, correction_budget,
                 erosion_base, frame_policy, tolerance, jobs, out_dir, **engine_kwargs):
    """Unattended evaluation with the robot user; prints the score table."""
    from trackany.harness import EvalConfig, evaluate, load_split
    from trackany.metrics import format_table

    try:
        config = EvalConfig(
            dataset_root=dataset_root,
            split=load_split(split) if split else (),
            backend=backend,
            init_clicks=init_clicks,
            correction_budget=correction_budget,
            engine=_build_engine(**engine_kwargs),
            degradation=DegradationConfig(erosion_base=erosion_base),
            frame_policy=frame_policy,
            tolerance=tolerance,
            jobs=jobs,
        )
    except (ConfigError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        dataset, runs = evaluate(config, out_dir)
    except (ConfigError, DatasetLayoutError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    except BackendError as exc:
        _fail(EXIT_BACKEND, str(exc))
    except (DimensionMismatchError, UnknownObjectError) as exc:
        _fail(EXIT_METRIC, str(exc))
    for run in runs:
        for warning in run.warnings:
            click.echo(f"warning [{run.sequence_id}]: {warning}", err=True)
    if dataset is None:
        click.echo("masks written; scoring skipped (no full ground truth)")
    else:
        click.echo(format_table(dataset))


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True, path_type=Path), default=None, help="SynthSpec JSON file.")
@click.option("--sequences", default=3, show_default=True)
@click.option("--frames", default=30, show_default=True)
@click.option("--objects", default=2, show_default=True)
@click.option("--size", default=192, show_default=True, help="Square frame side (px).")
@click.option("--object-side", default=60, show_default=True)
@click.option("--drift", default=1.0, show_default=True)
@click.option("--scale-amp", default=0.0, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def synth(spec_path, sequences, frames, objects, size, object_side, drift, scale_amp, seed, out_dir):
    """Generate a deterministic synthetic dataset in DAVIS layout."""
    from trackany.synth import SynthSpec, make_synthetic_dataset

    try:
        if spec_path is not None:
            spec = SynthSpec.from_json(spec_path)
        else:
            spec = SynthSpec(
                sequences=sequences, frames=frames, objects=objects,
                width=size, height=size, object_side=object_side,
                drift=drift, scale_amp=scale_amp, seed=seed,
            )
        names = make_synthetic_dataset(spec, out_dir)
    except (ConfigError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    click.echo(f"wrote {len(names)} sequences under {out_dir}")


@main.command(name="replay")
@click.option("--log", "log_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--video", "video_root", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--sequence", default=None, help="Sequence id (defaults to the one in the log).")
@click.option("--backend", default="synthetic", show_default=True)
@click.option("--erosion-base", default=None, type=float, help="Override degradation (defaults from config).")
def replay_command(log_path, video_root, sequence, backend, erosion_base):
    """Re-execute a recorded event log and verify it reproduces exactly."""
    from trackany.backends.base import BackendContext, create_backend
    from trackany.davis import open_davis_sequence
    from trackany.engine import replay
    from trackany.eventlog import read_log

    try:
        header, events = read_log(log_path)
        seq_id = sequence or header.get("sequence_id")
        seq = open_davis_sequence(video_root, seq_id)
        degradation = DegradationConfig(erosion_base=erosion_base if erosion_base is not None else 0.0)
        bundle = create_backend(
            backend,
            BackendContext(sequence=seq, degradation=degradation, session_id=header.get("session_id", "replay")),
        )
    except (ConfigError, DatasetLayoutError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        masks = replay(header, events, seq.frames, bundle.segmenter, bundle.propagator)
    except ReplayDivergenceError as exc:
        _fail(EXIT_METRIC, f"divergence at event {exc.event_index} ({exc.kind}): {exc}")
    except BackendError as exc:
        _fail(EXIT_BACKEND, str(exc))
    click.echo(f"replayed {len(events)} events, {len(masks)} masks reproduced exactly")


@main.command(name="mock-server")
@click.option("--dataset", "dataset_root", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--sequence", required=True)
@click.option("--bind", default="127.0.0.1:8900", show_default=True)
@click.option("--erosion-base", default=0.0, show_default=True)
def mock_server(dataset_root, sequence, bind, erosion_base):
    """Serve the wire protocol over synthetic backends (for integration tests)."""
    import uvicorn

    from trackany.backends.mock_server import build_mock_app
    from trackany.davis import open_davis_sequence

    try:
        seq = open_davis_sequence(dataset_root, sequence)
        missing = [i for i in range(len(seq.frames)) if i not in seq.annotations]
        if missing:
            raise ConfigError(f"sequence {sequence!r} lacks ground truth for frames {missing[:5]}")
        gt = [seq.annotations[i] for i in range(len(seq.frames))]
        app = build_mock_app(gt, DegradationConfig(erosion_base=erosion_base))
    except (ConfigError, DatasetLayoutError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8900), log_level="info")


def entrypoint():
    main(auto_envvar_prefix="TRACKANY")


if __name__ == "__main__":
    entrypoint()
