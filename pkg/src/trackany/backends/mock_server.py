"""Mock model server: the wire protocol served over the synthetic backends.

Ships in-repo so integration tests (and the CLI) can exercise the remote
client against a real HTTP loop. Fault injection flags let tests check
that malformed responses surface as typed client errors.
"""
from __future__ import annotations

import base64
import contextlib
import threading
import time
from dataclasses import dataclass, field

import numpy as np
import uvicorn
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from trackany.backends.synthetic import (
    DegradationConfig,
    SyntheticOraclePropagator,
    SyntheticSegmenter,
)
from trackany.davis import write_mask_png
from trackany.prompts import MaskPrompt
from trackany.rasters import BoxPrompt, FrameRef, LabelMap, PointPrompt


@dataclass
class MockFaults:
    """Deliberate protocol violations for client-hardening tests."""

    segment_status: int | None = None  # e.g. 503
    wrong_mask_dims: bool = False
    affinity_out_of_range: bool = False
    fail_first_n: int = 0  # transient: first N /segment calls fail with 503


class _FramePayload(BaseModel):
    seq: str
    index: int
    png_b64: str


class _PointPayload(BaseModel):
    x: int
    y: int
    polarity: str


class _BoxPayload(BaseModel):
    x0: int
    y0: int
    x1: int
    y1: int


class _MaskPromptPayload(BaseModel):
    res: int
    logits_b64_f32le: str
    src_w: int
    src_h: int


class _SegmentRequest(BaseModel):
    frame: _FramePayload
    points: list[_PointPayload] = []
    box: _BoxPayload | None = None
    mask_prompt: _MaskPromptPayload | None = None


class _AnchorRequest(BaseModel):
    session: str
    frame: _FramePayload
    labelmap_png_b64: str


class _StepRequest(BaseModel):
    session: str
    frame: _FramePayload


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def build_mock_app(
    gt_sequence: list[LabelMap],
    degradation: DegradationConfig | None = None,
    faults: MockFaults | None = None,
) -> FastAPI:
    degradation = degradation or DegradationConfig()
    faults = faults or MockFaults()
    segmenter = SyntheticSegmenter(gt_sequence)
    propagators: dict[str, SyntheticOraclePropagator] = {}
    state = {"segment_calls": 0}
    app = FastAPI(title="trackany mock model server")

    def frame_ref(payload: _FramePayload) -> FrameRef:
        if not 0 <= payload.index < len(gt_sequence):
            raise HTTPException(status_code=400, detail=f"frame index {payload.index} out of range")
        return FrameRef(sequence_id=payload.seq, frame_index=payload.index)

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "frames": len(gt_sequence)}

    @app.post("/v1/segment")
    def segment(request: _SegmentRequest):
        state["segment_calls"] += 1
        if faults.segment_status is not None:
            raise HTTPException(status_code=faults.segment_status, detail="injected fault")
        if state["segment_calls"] <= faults.fail_first_n:
            raise HTTPException(status_code=503, detail="transient fault")
        frame = frame_ref(request.frame)
        points = [
            PointPrompt(x=p.x, y=p.y, polarity=p.polarity, object_id=1)
            for p in request.points
        ]
        box = None
        if request.box is not None:
            box = BoxPrompt(request.box.x0, request.box.y0, request.box.x1, request.box.y1)
        mask_prompt = None
        if request.mask_prompt is not None:
            raw = base64.b64decode(request.mask_prompt.logits_b64_f32le)
            grid = np.frombuffer(raw, dtype="<f4").reshape(
                request.mask_prompt.res, request.mask_prompt.res
            )
            mask_prompt = MaskPrompt(
                grid=grid,
                source_width=request.mask_prompt.src_w,
                source_height=request.mask_prompt.src_h,
            )
        try:
            result = segmenter.segment(frame, points=points, box=box, mask_prompt=mask_prompt)
        except Exception as exc:  # noqa: BLE001 - surface as a client error
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        mask = result.mask.bits
        if faults.wrong_mask_dims:
            mask = mask[: max(1, mask.shape[0] // 2)]
        label_map = LabelMap(mask.astype(np.uint16), (1,) if mask.any() else ())
        return {"mask_png_b64": _b64(write_mask_png(label_map)), "confidence": result.confidence}

    @app.post("/v1/propagate/init")
    def propagate_init(request: _AnchorRequest):
        from trackany.davis import read_mask_png

        label_map = read_mask_png(base64.b64decode(request.labelmap_png_b64))
        propagator = SyntheticOraclePropagator(gt_sequence, degradation)
        propagator.init(frame_ref(request.frame), label_map)
        propagators[request.session] = propagator
        return {"ok": True}

    @app.post("/v1/propagate/reanchor")
    def propagate_reanchor(request: _AnchorRequest):
        from trackany.davis import read_mask_png

        propagator = propagators.get(request.session)
        if propagator is None:
            raise HTTPException(status_code=404, detail=f"unknown session {request.session!r}")
        label_map = read_mask_png(base64.b64decode(request.labelmap_png_b64))
        try:
            propagator.re_anchor(frame_ref(request.frame), label_map)
        except Exception as exc:  # noqa: BLE001
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"ok": True}

    @app.post("/v1/propagate/step")
    def propagate_step(request: _StepRequest):
        propagator = propagators.get(request.session)
        if propagator is None:
            raise HTTPException(status_code=404, detail=f"unknown session {request.session!r}")
        try:
            result = propagator.step(frame_ref(request.frame))
        except Exception as exc:  # noqa: BLE001
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        affinities = []
        for oid, aff in result.affinities.items():
            values = aff.values
            if faults.affinity_out_of_range:
                values = values * 1.5 + 0.01
            affinities.append({
                "object_id": oid,
                "f32le_b64": _b64(values.astype("<f4").tobytes()),
                "w": aff.width,
                "h": aff.height,
            })
        return {
            "labelmap_png_b64": _b64(write_mask_png(result.label_map)),
            "affinities": affinities,
        }

    return app


@dataclass
class RunningServer:
    url: str
    _server: uvicorn.Server = field(repr=False, default=None)
    _thread: threading.Thread = field(repr=False, default=None)


@contextlib.contextmanager
def run_server(app: FastAPI, host: str = "127.0.0.1", port: int = 0):
    """Serve `app` on a background thread; yields the base URL."""
    config = uvicorn.Config(app, host=host, port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("mock server failed to start")
        time.sleep(0.01)
    sock = server.servers[0].sockets[0]
    url = f"http://{host}:{sock.getsockname()[1]}"
    try:
        yield RunningServer(url=url, _server=server, _thread=thread)
    finally:
        server.should_exit = True
        thread.join(timeout=10)
