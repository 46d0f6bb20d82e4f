"""Shared render pipeline: image + depth -> focus -> lens -> defocused image.

Both the CLI and the HTTP service go through ``render_scene`` and encode
with the same PNG writer, which is what makes their outputs byte-identical
for identical inputs and parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DimensionMismatch
from .exif import ExifRecord
from .focus import FocusEstimate, resolve_lens_params, stub_saliency
from .lens import LensParams, compute_coc_map, render_defocus

IN_FOCUS_COC_PX = 1.0


@dataclass
class RenderResult:
    image: np.ndarray  # defocused, float in [0, 1], same layout as input
    coc_map: np.ndarray
    params: LensParams
    focus: FocusEstimate

    def coc_stats(self) -> dict[str, float]:
        return {
            "coc_min_px": float(self.coc_map.min()),
            "coc_mean_px": float(self.coc_map.mean()),
            "coc_max_px": float(self.coc_map.max()),
        }

    def in_focus_rows(self, threshold_px: float = IN_FOCUS_COC_PX) -> list[tuple[int, int]]:
        """Inclusive row ranges whose median coc is below the threshold."""
        sharp = np.median(self.coc_map, axis=1) < threshold_px
        ranges: list[tuple[int, int]] = []
        start = None
        for row, flag in enumerate(sharp):
            if flag and start is None:
                start = row
            elif not flag and start is not None:
                ranges.append((start, row - 1))
                start = None
        if start is not None:
            ranges.append((start, len(sharp) - 1))
        return ranges


def render_scene(
    image: np.ndarray,
    depth: np.ndarray,
    saliency: np.ndarray | None = None,
    exif: ExifRecord | None = None,
    overrides: Mapping[str, float] | None = None,
    allow_defaults: bool = True,
) -> RenderResult:
    """Resolve lens parameters, render, and collect the per-render stats."""
    if np.asarray(depth).shape != np.asarray(image).shape[:2]:
        raise DimensionMismatch(
            f"image {np.asarray(image).shape[:2]} vs depth {np.asarray(depth).shape}"
        )
    if saliency is not None and np.asarray(saliency).shape != np.asarray(depth).shape:
        raise DimensionMismatch(
            f"depth {np.asarray(depth).shape} vs saliency {np.asarray(saliency).shape}"
        )
    params, estimate = resolve_lens_params(
        exif=exif,
        overrides=overrides,
        image_width=np.asarray(image).shape[1],
        depth=depth,
        saliency=saliency,
        image=image,
        allow_defaults=allow_defaults,
    )
    coc = compute_coc_map(depth, params)
    rendered = render_defocus(image, depth, params)
    return RenderResult(image=rendered, coc_map=coc, params=params, focus=estimate)


def default_session_saliency(image: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """Saliency used when a session uploads none: the deterministic stub."""
    return stub_saliency(image, depth)
