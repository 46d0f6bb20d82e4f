"""Focus-distance estimation and lens parameter resolution.

The focus distance is the saliency-weighted average of the depth map,
which always lands inside the depth range. A deterministic heuristic
saliency stub (center prior times inverse normalized depth) stands in when
no saliency map is supplied; it is not a learned model and is labeled as
such in the estimate's ``source``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DimensionMismatch, MissingParameter, ZeroSaliencyMass
from .exif import ExifRecord
from .lens import LensParams, default_coc_max_px, default_pixels_per_unit

SALIENCY_MASS_EPS = 1e-12
DEFAULT_HUBER_DELTA = 0.1
DEFAULT_F_NUMBER = 8.0
DEFAULT_FOCAL_LENGTH_MM = 50.0
DEFAULT_FOCUS_SCALE = 1.0

SOURCE_SALIENCY = "saliency_weighted"
SOURCE_OVERRIDE = "user_override"
SOURCE_STUB = "stub"


@dataclass(frozen=True)
class FocusEstimate:
    focus_distance: float
    source: str  # saliency_weighted | user_override | stub


def focus_from_saliency(
    depth: np.ndarray, saliency: np.ndarray, source: str = SOURCE_SALIENCY
) -> FocusEstimate:
    """Saliency-weighted mean depth: sum(d * s) / sum(s)."""
    d = np.asarray(depth, dtype=np.float64)
    s = np.asarray(saliency, dtype=np.float64)
    if d.shape != s.shape:
        raise DimensionMismatch(f"depth {d.shape} vs saliency {s.shape}")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("saliency values must be finite and >= 0")
    mass = float(s.sum())
    if mass < SALIENCY_MASS_EPS:
        raise ZeroSaliencyMass(f"saliency mass {mass} below {SALIENCY_MASS_EPS}")
    return FocusEstimate(focus_distance=float((d * s).sum() / mass), source=source)


def stub_saliency(image: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """Deterministic stand-in saliency: Gaussian center prior weighted by
    inverse normalized depth (nearer pixels more salient). Strictly positive.
    """
    img = np.asarray(image, dtype=np.float64)
    d = np.asarray(depth, dtype=np.float64)
    if img.shape[:2] != d.shape:
        raise DimensionMismatch(f"image {img.shape[:2]} vs depth {d.shape}")
    h, w = d.shape
    sigma = 0.25 * min(h, w)
    ys = np.arange(h)[:, None] - (h - 1) / 2.0
    xs = np.arange(w)[None, :] - (w - 1) / 2.0
    prior = np.exp(-(ys**2 + xs**2) / (2.0 * sigma**2))
    return prior * (d.min() / d)


def huber_loss(predicted_fd: float, reference_fd: float, delta: float = DEFAULT_HUBER_DELTA) -> float:
    """Quadratic within delta of the reference, linear beyond; C1 at the joint."""
    if not (math.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be finite and > 0, got {delta!r}")
    e = abs(predicted_fd - reference_fd)
    if e <= delta:
        return 0.5 * e * e
    return delta * (e - 0.5 * delta)


def resolve_lens_params(
    exif: ExifRecord | None = None,
    overrides: Mapping[str, float] | None = None,
    image_width: int | None = None,
    *,
    depth: np.ndarray | None = None,
    saliency: np.ndarray | None = None,
    image: np.ndarray | None = None,
    allow_defaults: bool = True,
) -> tuple[LensParams, FocusEstimate]:
    """Merge overrides, EXIF and defaults into a LensParams.

    Precedence is overrides > EXIF > defaults. ``allow_defaults`` gates the
    photographic defaults (f-number 8, focal length 50 mm); the artifact
    knobs (focus scale, pixels_per_unit, coc_max_px) always have defaults
    derived from the image width. The focus distance comes from the
    override, else from the saliency-weighted depth average (using the
    stub when no saliency map is given); with no override and no depth it
    is unresolvable.

    ``overrides`` keys match LensParams field names.
    """
    ov = dict(overrides or {})
    unknown = set(ov) - {
        "f_number",
        "focal_length_mm",
        "focus_distance",
        "focus_scale",
        "pixels_per_unit",
        "coc_max_px",
    }
    if unknown:
        raise ValueError(f"unknown override fields: {sorted(unknown)}")

    if image_width is None and image is not None:
        image_width = np.asarray(image).shape[1]

    f_number = ov.get("f_number")
    if f_number is None and exif is not None:
        f_number = exif.f_number
    if f_number is None and allow_defaults:
        f_number = DEFAULT_F_NUMBER
    if f_number is None:
        raise MissingParameter("f_number")

    focal = ov.get("focal_length_mm")
    if focal is None and exif is not None:
        focal = exif.focal_length_mm
    if focal is None and allow_defaults:
        focal = DEFAULT_FOCAL_LENGTH_MM
    if focal is None:
        raise MissingParameter("focal_length")

    if "focus_distance" in ov:
        estimate = FocusEstimate(float(ov["focus_distance"]), SOURCE_OVERRIDE)
    elif depth is not None and saliency is not None:
        estimate = focus_from_saliency(depth, saliency)
    elif depth is not None and image is not None:
        estimate = focus_from_saliency(
            depth, stub_saliency(image, depth), source=SOURCE_STUB
        )
    else:
        raise MissingParameter("focus_distance")

    ppu = ov.get("pixels_per_unit")
    if ppu is None:
        if image_width is None:
            raise MissingParameter("pixels_per_unit")
        ppu = default_pixels_per_unit(image_width)

    coc_max = ov.get("coc_max_px")
    if coc_max is None:
        if image_width is None:
            raise MissingParameter("coc_max_px")
        coc_max = default_coc_max_px(image_width)

    params = LensParams(
        focal_length_mm=float(focal),
        f_number=float(f_number),
        focus_distance=estimate.focus_distance,
        focus_scale=float(ov.get("focus_scale", DEFAULT_FOCUS_SCALE)),
        pixels_per_unit=float(ppu),
        coc_max_px=float(coc_max),
    )
    params.validate()
    return params, estimate
