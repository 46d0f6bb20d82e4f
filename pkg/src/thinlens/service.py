"""HTTP render service for the interactive defocus explorer.

Sessions hold the uploaded rasters in memory (LRU-evicted, single-user
desk scale); renders are pure reads of immutable session data, so they can
run concurrently while creation/eviction is serialized behind a lock.
Identical render requests return byte-identical PNGs.
"""

from __future__ import annotations

import base64
import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass
from typing import Literal

import numpy as np
from fastapi import FastAPI, File, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from . import imageio
from .errors import DimensionMismatch, SingularLens, ThinLensError, UnknownSession
from .focus import SOURCE_STUB, focus_from_saliency, stub_saliency
from .lens import APERTURE_SWEEP
from .metrics import blur_monotonicity, signal_energy
from .pipeline import RenderResult, render_scene

DEFAULT_SESSION_LIMIT = 8
HISTOGRAM_BINS = 32


@dataclass
class Session:
    id: str
    image: np.ndarray
    depth: np.ndarray
    saliency: np.ndarray | None  # None -> stub heuristic at render time
    default_fd: float
    focus_source: str


class SessionStore:
    """Memory-resident LRU session map; mutation is serialized."""

    def __init__(self, limit: int):
        self._limit = max(1, limit)
        self._lock = threading.Lock()
        self._sessions: OrderedDict[str, Session] = OrderedDict()

    def create(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session
            while len(self._sessions) > self._limit:
                self._sessions.popitem(last=False)

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                raise UnknownSession(session_id)
            self._sessions.move_to_end(session_id)
            return self._sessions[session_id]

    def delete(self, session_id: str) -> None:
        with self._lock:
            if session_id not in self._sessions:
                raise UnknownSession(session_id)
            del self._sessions[session_id]


class RenderRequestBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    session_id: str
    f_number: float | None = None
    focal_length_mm: float | None = None
    focus_distance: float | None = None  # None -> saliency-weighted default
    focus_scale: float | None = None
    pixels_per_unit: float | None = None
    coc_max_px: float | None = None
    output: Literal["image", "coc_heatmap", "in_focus_mask"] = "image"


class SweepRequestBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    session_id: str
    f_numbers: list[float] = list(APERTURE_SWEEP)
    focal_length_mm: float | None = None
    focus_distance: float | None = None
    focus_scale: float | None = None
    pixels_per_unit: float | None = None
    coc_max_px: float | None = None


def _overrides(body: BaseModel) -> dict[str, float]:
    fields = (
        "f_number",
        "focal_length_mm",
        "focus_distance",
        "focus_scale",
        "pixels_per_unit",
        "coc_max_px",
    )
    return {
        name: getattr(body, name)
        for name in fields
        if hasattr(body, name) and getattr(body, name) is not None
    }


def _session_meta(session: Session) -> dict:
    counts, edges = np.histogram(session.depth, bins=HISTOGRAM_BINS)
    img = session.image
    return {
        "session_id": session.id,
        "width": int(img.shape[1]),
        "height": int(img.shape[0]),
        "channels": 1 if img.ndim == 2 else int(img.shape[2]),
        "depth_min": float(session.depth.min()),
        "depth_max": float(session.depth.max()),
        "default_focus_distance": session.default_fd,
        "focus_source": session.focus_source,
        "histogram": {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
        },
    }


def _rows_header(ranges: list[tuple[int, int]]) -> str:
    return ",".join(f"{a}-{b}" for a, b in ranges)


def _render_headers(result: RenderResult, session: Session) -> dict[str, str]:
    stats = result.coc_stats()
    energy = signal_energy(result.image).energy
    return {
        "X-Session-Id": session.id,
        "X-F-Number": repr(result.params.f_number),
        "X-Focus-Distance": repr(result.params.focus_distance),
        "X-Focus-Source": result.focus.source,
        "X-Coc-Min-Px": repr(stats["coc_min_px"]),
        "X-Coc-Mean-Px": repr(stats["coc_mean_px"]),
        "X-Coc-Max-Px": repr(stats["coc_max_px"]),
        "X-Signal-Energy": repr(energy),
        "X-In-Focus-Rows": _rows_header(result.in_focus_rows()),
    }


def create_app(
    session_limit: int = DEFAULT_SESSION_LIMIT, ui_dir: str | None = None
) -> FastAPI:
    app = FastAPI(title="thinlens render service")
    store = SessionStore(session_limit)
    app.state.store = store

    @app.exception_handler(ThinLensError)
    async def _thinlens_error(_: Request, exc: ThinLensError):
        if isinstance(exc, UnknownSession):
            status = 404
        elif isinstance(exc, SingularLens):
            status = 422
        else:
            status = 400
        return JSONResponse(
            status_code=status, content={"code": exc.code, "detail": str(exc)}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"code": "validation", "detail": exc.errors()}
        )

    @app.exception_handler(ValueError)
    async def _value_error(_: Request, exc: ValueError):
        return JSONResponse(
            status_code=400, content={"code": "invalid_argument", "detail": str(exc)}
        )

    @app.get("/")
    def root():
        return {"service": "thinlens", "sessions_limit": session_limit}

    @app.post("/session")
    async def create_session(
        image: UploadFile = File(...),
        depth: UploadFile = File(...),
        saliency: UploadFile | None = File(None),
    ):
        image_arr = imageio.decode_png(await image.read())
        depth_arr = imageio.decode_depth(await depth.read())
        saliency_arr = None
        if saliency is not None:
            saliency_arr = imageio.decode_pfm(await saliency.read())
        if depth_arr.shape != image_arr.shape[:2]:
            raise DimensionMismatch(
                f"image {image_arr.shape[:2]} vs depth {depth_arr.shape}"
            )
        if saliency_arr is not None and saliency_arr.shape != depth_arr.shape:
            raise DimensionMismatch(
                f"depth {depth_arr.shape} vs saliency {saliency_arr.shape}"
            )
        if saliency_arr is not None:
            estimate = focus_from_saliency(depth_arr, saliency_arr)
        else:
            estimate = focus_from_saliency(
                depth_arr, stub_saliency(image_arr, depth_arr), source=SOURCE_STUB
            )
        session = Session(
            id=uuid.uuid4().hex,
            image=image_arr,
            depth=depth_arr,
            saliency=saliency_arr,
            default_fd=estimate.focus_distance,
            focus_source=estimate.source,
        )
        store.create(session)
        return _session_meta(session)

    @app.get("/session/{session_id}/meta")
    def session_meta(session_id: str):
        return _session_meta(store.get(session_id))

    @app.delete("/session/{session_id}", status_code=204)
    def delete_session(session_id: str):
        store.delete(session_id)
        return Response(status_code=204)

    @app.post("/render")
    def render(body: RenderRequestBody):
        session = store.get(body.session_id)
        result = render_scene(
            session.image,
            session.depth,
            saliency=session.saliency,
            overrides=_overrides(body),
        )
        if body.output == "coc_heatmap":
            top = result.params.coc_max_px or 1.0
            payload = result.coc_map / top
        elif body.output == "in_focus_mask":
            payload = (result.coc_map < 1.0).astype(np.float64)
        else:
            payload = result.image
        png = imageio.encode_png(payload)
        return Response(
            content=png,
            media_type="image/png",
            headers=_render_headers(result, session),
        )

    @app.post("/sweep")
    def sweep(body: SweepRequestBody):
        if len(body.f_numbers) < 2:
            raise ValueError("sweep needs at least 2 f-numbers")
        if any(b <= a for a, b in zip(body.f_numbers, body.f_numbers[1:])):
            raise ValueError("f_numbers must be strictly increasing")
        session = store.get(body.session_id)
        overrides = _overrides(body)
        frames, energies, rows, images = [], [], [], []
        for n in body.f_numbers:
            result = render_scene(
                session.image,
                session.depth,
                saliency=session.saliency,
                overrides={**overrides, "f_number": n},
            )
            png = imageio.encode_png(result.image)
            frames.append(base64.b64encode(png).decode("ascii"))
            energies.append(signal_energy(result.image).energy)
            rows.append(_rows_header(result.in_focus_rows()))
            images.append(result.image)
        return {
            "session_id": session.id,
            "f_numbers": body.f_numbers,
            "energies": energies,
            "blur_monotonicity": blur_monotonicity(images),
            "in_focus_rows": rows,
            "frames": frames,
        }

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
