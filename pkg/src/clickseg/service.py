"""HTTP session service for interactive annotation.

Each session holds one image, the click history, and the latest binarized
mask. A click request predicts first and mutates second, so a predictor
failure (remote model down, bad state) returns 502 with the session
exactly as it was. Undo restores the previous state byte for byte.

Sessions live in memory only. The store is an LRU capped by
CLICKSEG_MAX_SESSIONS (default 256): creating a session past the cap
evicts the least recently used one. Per-session operations serialize on a
per-session lock; different sessions proceed in parallel.

Masks cross the wire as run-length strings (see rle module docs).

Demo mode: uploading a ground-truth mask alongside the image makes every
click response carry the IoU against it, and enables the oracle
predictor for harness checks.
"""

from __future__ import annotations

import io
import os
import threading
import time
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Query, UploadFile
from PIL import Image
from pydantic import BaseModel

from .core import Click, InteractionState, new_session, push_click, undo
from .encoding import ClickEncoder
from .imageproc import iou
from .predictors import OraclePredictor, PredictorInput
from .rle import encode_mask_rle

DEFAULT_MAX_SESSIONS = 256


class ClickBody(BaseModel):
    row: int
    col: int
    polarity: Literal["positive", "negative"]


@dataclass
class SessionRecord:
    session_id: str
    state: InteractionState
    predictor_name: str
    predictor: object
    gt: np.ndarray | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    created: float = field(default_factory=time.monotonic)
    updated: float = field(default_factory=time.monotonic)


class SessionStore:
    """LRU map of sessions, safe for concurrent access."""

    def __init__(self, max_sessions: int):
        self.max_sessions = max_sessions
        self._lock = threading.Lock()
        self._sessions: OrderedDict[str, SessionRecord] = OrderedDict()

    def add(self, record: SessionRecord) -> None:
        with self._lock:
            while len(self._sessions) >= self.max_sessions:
                self._sessions.popitem(last=False)
            self._sessions[record.session_id] = record

    def get(self, session_id: str) -> SessionRecord:
        with self._lock:
            record = self._sessions.get(session_id)
            if record is None:
                raise HTTPException(status_code=404,
                                    detail=f"unknown session {session_id}")
            self._sessions.move_to_end(session_id)
            return record

    def __len__(self) -> int:
        with self._lock:
            return len(self._sessions)


def _decode_image(data: bytes) -> np.ndarray:
    try:
        arr = np.asarray(Image.open(io.BytesIO(data)))
    except Exception as exc:
        raise HTTPException(status_code=400, detail=f"undecodable image: {exc}")
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=2)
    if arr.ndim == 3 and arr.shape[2] == 4:
        arr = arr[:, :, :3]
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise HTTPException(status_code=400,
                            detail=f"cannot interpret image of shape {arr.shape}")
    return arr.astype(np.uint8)


def _decode_mask(data: bytes, height: int, width: int, label: str) -> np.ndarray:
    try:
        arr = np.asarray(Image.open(io.BytesIO(data)))
    except Exception as exc:
        raise HTTPException(status_code=400, detail=f"undecodable {label}: {exc}")
    if arr.ndim != 2:
        raise HTTPException(status_code=400,
                            detail=f"{label} must be single-channel, got shape {arr.shape}")
    if arr.shape != (height, width):
        raise HTTPException(
            status_code=400,
            detail=f"{label} is {arr.shape}, image is {(height, width)}",
        )
    return (arr != 0).astype(np.uint8)


def make_app(predictors: dict[str, object], default_predictor: str,
             encoder: ClickEncoder | None = None,
             max_sessions: int | None = None,
             static_dir: str | None = None) -> FastAPI:
    """Build the service.

    predictors maps names to predictor objects selectable per session via
    ?predictor=NAME. The name "oracle" is always available but requires a
    ground-truth upload on session creation.
    """
    if default_predictor not in predictors and default_predictor != "oracle":
        raise ValueError(f"default predictor {default_predictor!r} not configured")
    encoder = encoder or ClickEncoder()
    if max_sessions is None:
        max_sessions = int(os.environ.get("CLICKSEG_MAX_SESSIONS",
                                          DEFAULT_MAX_SESSIONS))
    app = FastAPI(title="clickseg session service")
    store = SessionStore(max_sessions)
    app.state.store = store

    def _mask_payload(record: SessionRecord) -> dict:
        mask = record.state.prev_mask
        payload = {
            "mask": encode_mask_rle(mask),
            "height": record.state.height,
            "width": record.state.width,
        }
        if record.gt is not None:
            payload["iou"] = iou(mask, record.gt)
        return payload

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(store)}

    @app.post("/sessions")
    def create_session(image: UploadFile, mask: UploadFile | None = None,
                       gt: UploadFile | None = None,
                       predictor: str | None = Query(default=None)):
        name = predictor or default_predictor
        if name != "oracle" and name not in predictors:
            raise HTTPException(status_code=422, detail=f"unknown predictor {name!r}")
        img = _decode_image(image.file.read())
        h, w = img.shape[:2]
        external = None
        if mask is not None:
            external = _decode_mask(mask.file.read(), h, w, "mask")
        gt_mask = None
        if gt is not None:
            gt_mask = _decode_mask(gt.file.read(), h, w, "gt")
        if name == "oracle":
            if gt_mask is None:
                raise HTTPException(status_code=422,
                                    detail="oracle predictor needs a gt upload")
            bound = OraclePredictor(gt_mask)
        else:
            bound = predictors[name]
        record = SessionRecord(
            session_id=uuid.uuid4().hex,
            state=new_session(img, external_mask=external),
            predictor_name=name,
            predictor=bound,
            gt=gt_mask,
        )
        store.add(record)
        return {"session_id": record.session_id, "height": h, "width": w}

    @app.post("/sessions/{session_id}/clicks")
    def add_click(session_id: str, body: ClickBody):
        record = store.get(session_id)
        with record.lock:
            state = record.state
            if not (0 <= body.row < state.height and 0 <= body.col < state.width):
                raise HTTPException(
                    status_code=400,
                    detail=f"click ({body.row}, {body.col}) outside "
                           f"{state.height}x{state.width}",
                )
            click = Click(row=body.row, col=body.col, polarity=body.polarity)
            tentative = state.clicks + [click]
            guidance = encoder(tentative, state.height, state.width)
            inp = PredictorInput(image=state.image, guidance=guidance,
                                 prev_mask=state.prev_mask)
            try:
                prob = record.predictor.predict(inp)
            except Exception as exc:
                raise HTTPException(status_code=502,
                                    detail=f"predictor failed: {exc}")
            push_click(state, click, prob)
            record.updated = time.monotonic()
            return _mask_payload(record)

    @app.post("/sessions/{session_id}/undo")
    def undo_click(session_id: str):
        record = store.get(session_id)
        with record.lock:
            try:
                undo(record.state)
            except IndexError:
                raise HTTPException(status_code=409, detail="nothing to undo")
            record.updated = time.monotonic()
            return _mask_payload(record)

    @app.get("/sessions/{session_id}/state")
    def session_state(session_id: str):
        record = store.get(session_id)
        with record.lock:
            payload = _mask_payload(record)
            payload["clicks"] = [
                {"row": c.row, "col": c.col, "polarity": c.polarity, "order": c.order}
                for c in record.state.clicks
            ]
            payload["predictor"] = record.predictor_name
            return payload

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
