"""HTTP client speaking the model-server wire protocol.

JSON over HTTP; rasters travel as base64 (indexed PNG for masks,
little-endian float32 for affinities). Responses are validated against
the schema before they touch engine state: in strict mode (default) any
violation is a typed error, in lenient mode out-of-range affinities are
clamped with a warning.
"""
from __future__ import annotations

import base64
import io
import logging
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import requests
from PIL import Image

from trackany.backends.base import (
    BackendBundle,
    BackendContext,
    PropagateResult,
    Propagator,
    SegmentResult,
    Segmenter,
    register_backend,
)
from trackany.davis import read_mask_png, write_mask_png
from trackany.errors import BackendUnavailableError, ConfigError, SchemaViolationError
from trackany.prompts import AffinityField, MaskPrompt
from trackany.rasters import BinaryMask, BoxPrompt, FrameRef, LabelMap, PointPrompt

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0
DEFAULT_RETRIES = 2


@dataclass(frozen=True)
class RemoteOptions:
    base_url: str
    timeout: float = DEFAULT_TIMEOUT
    retries: int = DEFAULT_RETRIES
    strict: bool = True


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except Exception as exc:
        raise SchemaViolationError(f"invalid base64 payload: {exc}") from exc


def encode_frame(image: FrameRef) -> dict:
    rgb = image.load_rgb()
    buf = io.BytesIO()
    Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
    return {"seq": image.sequence_id, "index": image.frame_index, "png_b64": _b64(buf.getvalue())}


def encode_points(points: Sequence[PointPrompt]) -> list[dict]:
    return [{"x": p.x, "y": p.y, "polarity": p.polarity} for p in points]


def encode_mask_prompt_wire(prompt: MaskPrompt) -> dict:
    return {
        "res": prompt.res,
        "logits_b64_f32le": _b64(prompt.grid.astype("<f4").tobytes()),
        "src_w": prompt.source_width,
        "src_h": prompt.source_height,
    }


def decode_affinity(entry: dict, width: int, height: int, strict: bool) -> AffinityField:
    if entry.get("w") != width or entry.get("h") != height:
        raise SchemaViolationError(
            f"affinity for object {entry.get('object_id')} is "
            f"{entry.get('w')}x{entry.get('h')}, frame is {width}x{height}"
        )
    raw = _unb64(entry["f32le_b64"])
    if len(raw) != 4 * width * height:
        raise SchemaViolationError(
            f"affinity payload is {len(raw)} bytes, expected {4 * width * height}"
        )
    values = np.frombuffer(raw, dtype="<f4").reshape(height, width)
    if not np.isfinite(values).all():
        raise SchemaViolationError("affinity contains non-finite values")
    lo, hi = float(values.min()), float(values.max())
    if lo < 0.0 or hi > 1.0:
        if strict:
            raise SchemaViolationError(
                f"affinity values outside [0, 1] (range {lo:.4g}..{hi:.4g})"
            )
        log.warning(
            "clamping out-of-range affinity for object %s (range %.4g..%.4g)",
            entry.get("object_id"), lo, hi,
        )
        values = np.clip(values, 0.0, 1.0)
    return AffinityField(int(entry["object_id"]), values)


class WireClient:
    """Shared transport: timeouts, bounded retries with backoff, typed errors."""

    def __init__(self, options: RemoteOptions):
        self.options = options
        self._http = requests.Session()

    def post(self, path: str, payload: dict) -> dict:
        url = self.options.base_url.rstrip("/") + path
        attempts = self.options.retries + 1
        last_status: int | None = None
        last_error = "unknown"
        for attempt in range(attempts):
            if attempt:
                time.sleep(0.2 * (2 ** (attempt - 1)))
            try:
                response = self._http.post(url, json=payload, timeout=self.options.timeout)
            except requests.Timeout:
                last_error = f"timeout after {self.options.timeout}s"
                continue
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if response.status_code >= 500:
                last_status = response.status_code
                last_error = f"server returned {response.status_code}"
                continue
            if response.status_code >= 300:
                raise BackendUnavailableError(
                    f"{url} returned {response.status_code}: {response.text[:200]}",
                    attempts=attempt + 1,
                    last_status=response.status_code,
                )
            try:
                return response.json()
            except ValueError as exc:
                raise SchemaViolationError(f"{url} returned non-JSON body: {exc}") from exc
        raise BackendUnavailableError(
            f"{url} unavailable after {attempts} attempts: {last_error}",
            attempts=attempts,
            last_status=last_status,
        )


def _frame_dims(image: FrameRef) -> tuple[int, int]:
    rgb = image.load_rgb()
    return rgb.shape[1], rgb.shape[0]


def _decode_mask_png(text: str, width: int, height: int) -> LabelMap:
    label_map = read_mask_png(_unb64(text))
    if (label_map.width, label_map.height) != (width, height):
        raise SchemaViolationError(
            f"response mask is {label_map.width}x{label_map.height}, "
            f"frame is {width}x{height}"
        )
    return label_map


class RemoteSegmenter(Segmenter):
    def __init__(self, client: WireClient):
        self._client = client

    def segment(
        self,
        image: FrameRef,
        points: Sequence[PointPrompt] = (),
        box: BoxPrompt | None = None,
        mask_prompt: MaskPrompt | None = None,
    ) -> SegmentResult:
        width, height = _frame_dims(image)
        self.check_prompts(width, height, points, box, mask_prompt)
        payload: dict = {"frame": encode_frame(image), "points": encode_points(points)}
        if box is not None:
            payload["box"] = {"x0": box.x0, "y0": box.y0, "x1": box.x1, "y1": box.y1}
        if mask_prompt is not None:
            payload["mask_prompt"] = encode_mask_prompt_wire(mask_prompt)
        data = self._client.post("/v1/segment", payload)
        try:
            mask_map = _decode_mask_png(data["mask_png_b64"], width, height)
            confidence = float(data["confidence"])
        except (KeyError, TypeError) as exc:
            raise SchemaViolationError(f"malformed /v1/segment response: {exc}") from exc
        if not 0.0 <= confidence <= 1.0:
            raise SchemaViolationError(f"confidence {confidence} outside [0, 1]")
        return SegmentResult(mask=BinaryMask(mask_map.labels == 1), confidence=confidence)


class RemotePropagator(Propagator):
    def __init__(self, client: WireClient, session_id: str):
        self._client = client
        self._session = session_id

    def init(self, image: FrameRef, label_map: LabelMap) -> None:
        self._anchor("/v1/propagate/init", image, label_map)

    def re_anchor(self, image: FrameRef, label_map: LabelMap) -> None:
        self._anchor("/v1/propagate/reanchor", image, label_map)

    def _anchor(self, path: str, image: FrameRef, label_map: LabelMap) -> None:
        data = self._client.post(path, {
            "session": self._session,
            "frame": encode_frame(image),
            "labelmap_png_b64": _b64(write_mask_png(label_map)),
        })
        if not data.get("ok"):
            raise SchemaViolationError(f"{path} did not acknowledge: {data}")

    def step(self, image: FrameRef) -> PropagateResult:
        width, height = _frame_dims(image)
        data = self._client.post("/v1/propagate/step", {
            "session": self._session,
            "frame": encode_frame(image),
        })
        try:
            label_map = _decode_mask_png(data["labelmap_png_b64"], width, height)
            entries = data["affinities"]
        except (KeyError, TypeError) as exc:
            raise SchemaViolationError(f"malformed /v1/propagate/step response: {exc}") from exc
        strict = self._client.options.strict
        affinities = {
            int(e["object_id"]): decode_affinity(e, width, height, strict) for e in entries
        }
        try:
            return PropagateResult(label_map=label_map, affinities=affinities)
        except ValueError as exc:
            raise SchemaViolationError(str(exc)) from exc


def _remote_factory(spec: str, context: BackendContext) -> BackendBundle:
    _, sep, url = spec.partition(":")
    if not sep or not url:
        raise ConfigError("remote backend spec must look like remote:<base-url>")
    options = RemoteOptions(
        base_url=url,
        timeout=float(context.options.get("timeout", DEFAULT_TIMEOUT)),
        retries=int(context.options.get("retries", DEFAULT_RETRIES)),
        strict=bool(context.options.get("strict", True)),
    )
    client = WireClient(options)
    return BackendBundle(
        segmenter=RemoteSegmenter(client),
        propagator=RemotePropagator(client, context.session_id),
    )


register_backend("remote", _remote_factory)
