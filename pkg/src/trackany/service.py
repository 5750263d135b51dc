"""HTTP/WebSocket session service for interactive tracking.

Sessions are persisted as a manifest plus the replayable event log, so a
restarted service restores state by replaying. All mutations of one
session are serialized behind a per-session lock; tracking runs on a
background thread that fans frames out to WebSocket subscribers.
"""
from __future__ import annotations

import base64
import io
import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

import trackany
from trackany.backends import DegradationConfig
from trackany.backends.base import BackendContext, create_backend
from trackany.davis import open_davis_sequence, voc_colormap, write_mask_png
from trackany.engine import EngineConfig, Phase, Session, StepOutcome
from trackany.errors import EmptyMaskError, PhaseError, TrackAnyError
from trackany.eventlog import parse_log
from trackany.rasters import PointPrompt

_DONE = object()


@dataclass(frozen=True)
class ServiceConfig:
    state_dir: Path
    backend: str = "synthetic"
    engine: EngineConfig = field(default_factory=EngineConfig)
    degradation: DegradationConfig = field(default_factory=DegradationConfig)
    step_delay: float = 0.0  # pacing between tracking steps (demo / UI use)


@dataclass
class ManagedSession:
    manifest: dict
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list[queue.Queue] = field(default_factory=list)
    sub_lock: threading.Lock = field(default_factory=threading.Lock)
    runner: threading.Thread | None = None

    def fanout(self, message) -> None:
        with self.sub_lock:
            for q in self.subscribers:
                q.put(message)

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self.sub_lock:
            self.subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self.sub_lock:
            if q in self.subscribers:
                self.subscribers.remove(q)


class ClickRequest(BaseModel):
    frame: int
    object_id: int | None = None
    points: list[dict]
    label: str | None = None


class CreateSessionRequest(BaseModel):
    video_dir: str
    sequence: str | None = None


def _mask_b64(label_map) -> str:
    return base64.b64encode(write_mask_png(label_map)).decode("ascii")


def _outcome_message(managed: ManagedSession, outcome: StepOutcome) -> dict:
    return {
        "frame": outcome.frame_index,
        "mask_png_b64": _mask_b64(outcome.label_map),
        "quality": [r.to_dict() for r in outcome.reports],
        "refined": bool(outcome.refined_objects),
        "phase": managed.session.phase.value,
    }


class SessionService:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.state_dir = Path(config.state_dir)
        (self.state_dir / "manifests").mkdir(parents=True, exist_ok=True)
        (self.state_dir / "logs").mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, ManagedSession] = {}
        self._registry_lock = threading.Lock()

    # -- persistence -----------------------------------------------------

    def _manifest_path(self, session_id: str) -> Path:
        return self.state_dir / "manifests" / f"{session_id}.json"

    def _log_path(self, session_id: str) -> Path:
        return self.state_dir / "logs" / f"{session_id}.jsonl"

    def _save(self, managed: ManagedSession) -> None:
        managed.manifest["updated"] = time.time()
        managed.manifest["phase"] = managed.session.phase.value
        managed.manifest["current_frame"] = managed.session.current_frame
        self._manifest_path(managed.manifest["id"]).write_text(
            json.dumps(managed.manifest, indent=2, sort_keys=True) + "\n"
        )
        managed.session.log.write(self._log_path(managed.manifest["id"]))

    def _build_session(self, manifest: dict) -> Session:
        seq = open_davis_sequence(manifest["video_dir"], manifest["sequence"])
        bundle = create_backend(
            self.config.backend,
            BackendContext(
                sequence=seq,
                degradation=self.config.degradation,
                session_id=manifest["id"],
            ),
        )
        return Session(
            seq.frames,
            bundle.segmenter,
            bundle.propagator,
            self.config.engine,
            session_id=manifest["id"],
        )

    def _restore(self, session_id: str) -> ManagedSession:
        path = self._manifest_path(session_id)
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        manifest = json.loads(path.read_text())
        log_path = self._log_path(session_id)
        fresh = self._build_session(manifest)
        if log_path.exists() and log_path.read_text().count("\n") > 1:
            from trackany.engine import replay_session

            header, events = parse_log(log_path.read_text())
            fresh = replay_session(
                header, events, fresh.frames, fresh.segmenter, fresh.propagator
            )
        return ManagedSession(manifest=manifest, session=fresh)

    # -- registry ----------------------------------------------------------

    def create(self, request: CreateSessionRequest) -> dict:
        video_dir = Path(request.video_dir)
        sequence = request.sequence
        if sequence is None:
            from trackany.davis import list_sequences

            candidates = list_sequences(video_dir)
            if len(candidates) != 1:
                raise HTTPException(
                    status_code=422,
                    detail=f"video_dir holds {len(candidates)} sequences; pass `sequence`",
                )
            sequence = candidates[0]
        session_id = str(uuid.uuid4())
        manifest = {
            "id": session_id,
            "video_dir": str(video_dir),
            "sequence": sequence,
            "backend": self.config.backend,
            "created": time.time(),
            "log_path": str(self._log_path(session_id)),
        }
        try:
            session = self._build_session(manifest)
        except TrackAnyError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        managed = ManagedSession(manifest=manifest, session=session)
        with self._registry_lock:
            self._sessions[session_id] = managed
        self._save(managed)
        return self.describe(managed)

    def get(self, session_id: str) -> ManagedSession:
        with self._registry_lock:
            managed = self._sessions.get(session_id)
            if managed is None:
                managed = self._restore(session_id)
                self._sessions[session_id] = managed
                if managed.session.phase == Phase.TRACKING:
                    # Interrupted mid-run; pick the loop back up.
                    self.start_tracking(managed)
            return managed

    def describe(self, managed: ManagedSession) -> dict:
        session = managed.session
        return {
            **managed.manifest,
            "phase": session.phase.value,
            "current_frame": session.current_frame,
            "n_frames": session.frame_count,
            "objects": [
                {"id": info.object_id, "label": info.label}
                for info in session.objects.values()
            ],
        }

    # -- tracking loop ------------------------------------------------------

    def _run_tracking(self, managed: ManagedSession) -> None:
        session = managed.session
        while True:
            if self.config.step_delay:
                time.sleep(self.config.step_delay)
            with managed.lock:
                if session.phase != Phase.TRACKING:
                    break
                if session.current_frame + 1 >= session.frame_count:
                    session.finish()
                    self._save(managed)
                    managed.fanout({"done": True, "phase": session.phase.value})
                    managed.fanout(_DONE)
                    break
                try:
                    outcome = session.track_step()
                except TrackAnyError as exc:
                    self._save(managed)
                    managed.fanout({
                        "error": str(exc),
                        "frame": session.current_frame + 1,
                        "phase": session.phase.value,
                    })
                    break
                self._save(managed)
                managed.fanout(_outcome_message(managed, outcome))

    def start_tracking(self, managed: ManagedSession) -> None:
        if managed.runner is not None and managed.runner.is_alive():
            return
        managed.runner = threading.Thread(
            target=self._run_tracking, args=(managed,), daemon=True
        )
        managed.runner.start()


def build_app(config: ServiceConfig) -> FastAPI:
    service = SessionService(config)
    app = FastAPI(title="trackany session service", version=trackany.__version__)
    app.state.service = service

    def _phase_error(exc: PhaseError):
        raise HTTPException(status_code=409, detail={"error": str(exc), "phase": exc.phase})

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": trackany.__version__}

    @app.post("/v1/sessions")
    def create_session_endpoint(request: CreateSessionRequest):
        return service.create(request)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        return service.describe(service.get(session_id))

    @app.get("/v1/sessions/{session_id}/events")
    def get_events(session_id: str):
        managed = service.get(session_id)
        with managed.lock:
            return {
                "header": managed.session.log.header,
                "events": [json.loads(e.to_line()) for e in managed.session.log.events],
            }

    @app.post("/v1/sessions/{session_id}/clicks")
    def post_clicks(session_id: str, request: ClickRequest):
        managed = service.get(session_id)
        session = managed.session
        with managed.lock:
            points = [
                PointPrompt(
                    x=int(p["x"]),
                    y=int(p["y"]),
                    polarity=p["polarity"],
                    object_id=request.object_id or 1,
                )
                for p in request.points
            ]
            if request.frame != session.current_frame:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "error": f"clicks are for frame {request.frame}, "
                        f"session is at {session.current_frame}",
                        "phase": session.phase.value,
                    },
                )
            try:
                if session.phase in (Phase.IDLE, Phase.INITIALIZED):
                    label_map = session.init_object(points, label=request.label)
                    object_id = max(session.objects)
                elif session.phase == Phase.PAUSED and request.object_id is not None:
                    label_map = session.correct(request.object_id, points)
                    object_id = request.object_id
                elif session.phase == Phase.PAUSED:
                    label_map = session.init_object(points, label=request.label)
                    object_id = max(session.objects)
                else:
                    raise PhaseError(
                        f"clicks not accepted in phase {session.phase.value}",
                        phase=session.phase.value,
                    )
            except PhaseError as exc:
                _phase_error(exc)
            except EmptyMaskError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            service._save(managed)
            from trackany.rasters import binary_view, compose_labelmap

            mask = binary_view(label_map, object_id)
            single = compose_labelmap([(object_id, mask)])
            return {
                "object_id": object_id,
                "phase": session.phase.value,
                "frame": session.current_frame,
                "mask_png_b64": _mask_b64(single),
                "labelmap_png_b64": _mask_b64(label_map),
            }

    @app.post("/v1/sessions/{session_id}/start")
    def start(session_id: str):
        managed = service.get(session_id)
        with managed.lock:
            try:
                managed.session.start()
            except PhaseError as exc:
                _phase_error(exc)
            service._save(managed)
        service.start_tracking(managed)
        return {"phase": managed.session.phase.value}

    @app.post("/v1/sessions/{session_id}/pause")
    def pause(session_id: str):
        managed = service.get(session_id)
        with managed.lock:
            try:
                managed.session.pause()
            except PhaseError as exc:
                _phase_error(exc)
            service._save(managed)
        managed.fanout({
            "phase": managed.session.phase.value,
            "frame": managed.session.current_frame,
        })
        return {"phase": managed.session.phase.value, "frame": managed.session.current_frame}

    @app.post("/v1/sessions/{session_id}/resume")
    def resume(session_id: str):
        managed = service.get(session_id)
        with managed.lock:
            try:
                managed.session.resume()
            except PhaseError as exc:
                _phase_error(exc)
            service._save(managed)
        service.start_tracking(managed)
        return {"phase": managed.session.phase.value}

    @app.post("/v1/sessions/{session_id}/finish")
    def finish(session_id: str):
        managed = service.get(session_id)
        with managed.lock:
            try:
                managed.session.finish()
            except PhaseError as exc:
                _phase_error(exc)
            service._save(managed)
        managed.fanout({"done": True, "phase": managed.session.phase.value})
        managed.fanout(_DONE)
        return {"phase": managed.session.phase.value}

    def _frame_or_404(session: Session, index: int):
        if not 0 <= index < session.frame_count:
            raise HTTPException(status_code=404, detail=f"frame {index} out of range")
        return session.frames[index]

    @app.get("/v1/sessions/{session_id}/frames/{index}/image.jpg")
    def frame_image(session_id: str, index: int):
        managed = service.get(session_id)
        frame = _frame_or_404(managed.session, index)
        if isinstance(frame.image, Path):
            return FileResponse(frame.image, media_type="image/jpeg")
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(frame.load_rgb(), mode="RGB").save(buf, format="JPEG")
        return Response(buf.getvalue(), media_type="image/jpeg")

    @app.get("/v1/sessions/{session_id}/frames/{index}/mask.png")
    def frame_mask(session_id: str, index: int):
        managed = service.get(session_id)
        _frame_or_404(managed.session, index)
        with managed.lock:
            label_map = managed.session.masks.get(index)
        if label_map is None:
            raise HTTPException(status_code=404, detail=f"no mask for frame {index} yet")
        return Response(write_mask_png(label_map), media_type="image/png")

    @app.get("/v1/sessions/{session_id}/frames/{index}/overlay.png")
    def frame_overlay(session_id: str, index: int, opacity: float = 0.5):
        from PIL import Image

        managed = service.get(session_id)
        frame = _frame_or_404(managed.session, index)
        with managed.lock:
            label_map = managed.session.masks.get(index)
        rgb = frame.load_rgb().astype(np.float32)
        if label_map is not None:
            palette = voc_colormap()
            labels = label_map.labels
            colored = palette[np.minimum(labels, 255)].astype(np.float32)
            on = labels > 0
            rgb[on] = (1.0 - opacity) * rgb[on] + opacity * colored[on]
        rgba = np.dstack([rgb.astype(np.uint8), np.full(rgb.shape[:2], 255, dtype=np.uint8)])
        buf = io.BytesIO()
        Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
        return Response(buf.getvalue(), media_type="image/png")

    @app.websocket("/v1/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        import anyio

        try:
            managed = service.get(session_id)
        except HTTPException:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        start_from = websocket.query_params.get("from")
        q = managed.subscribe()
        try:
            with managed.lock:
                session = managed.session
                history = []
                if start_from is not None:
                    for i in sorted(session.masks):
                        if i >= int(start_from):
                            history.append({
                                "frame": i,
                                "mask_png_b64": _mask_b64(session.masks[i]),
                                "quality": [],
                                "refined": session.was_refined(i),
                                "phase": session.phase.value,
                            })
                finished = session.phase == Phase.FINISHED
            for message in history:
                await websocket.send_json(message)
            if finished:
                await websocket.send_json({"done": True, "phase": Phase.FINISHED.value})
                await websocket.close()
                return
            while True:
                message = await anyio.to_thread.run_sync(q.get)
                if message is _DONE:
                    await websocket.close()
                    break
                await websocket.send_json(message)
        except WebSocketDisconnect:
            pass
        finally:
            managed.unsubscribe(q)

    frontend_dist = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    if frontend_dist.is_dir():
        app.mount("/", StaticFiles(directory=frontend_dist, html=True), name="ui")

    return app
