"""Thin-lens defocus rendering.

The blur diameter (circle of confusion) for a pixel at depth d is

    coc_length = |d - f_d| / d * f^2 / (N * |f_s * f_d - f|)

with focal length f, f-number N, focus distance f_d and a dimensionless
focus scale f_s that bridges depth units and focal-length units. The
absolute value is applied to the denominator as well so diameters stay
non-negative when the scaled focus plane is closer than the focal length;
the pole at f_s * f_d = f is rejected as SingularLens. coc_length is
converted to pixels via ``pixels_per_unit`` and clamped to ``coc_max_px``.

Rendering scatters (splats) each source pixel through its own unit-energy
soft-boundary disk kernel and renormalizes by the accumulated weight:

    out_p = sum_q x_q * W_q(p - q) / sum_q W_q(p - q)

The raw kernel tap at distance rho from the center is
clamp(coc/2 - rho + 0.5, 0, 1): a linear one-pixel-wide boundary ramp,
piecewise linear (hence differentiable a.e.) in the coc diameter, with a
center tap that stays positive for every coc, so the denominator above is
always positive. ``render_adjoint`` propagates exact gradients of this
whole chain back to the input image and the four scalar lens parameters.

Subgradient conventions at the non-differentiable points (fixed, and
relied on by the gradient tests): the |d - f_d| term uses sign(0) = 0; the
coc clamp and the tap ramp clamps use their interior (linear) branch at
the kink itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidApertureList,
    InvalidDepth,
    SingularLens,
)

# f-number sweep used throughout evaluation, ascending.
APERTURE_SWEEP = (1.8, 2.8, 4.0, 5.6, 8.0, 11.0, 16.0, 22.0)

SINGULARITY_EPS = 1e-9

# Cap on per-chunk tap-matrix elements during splatting (memory bound).
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class LensParams:
    """Scalar lens configuration.

    focus_distance shares the depth map's unit; focal_length_mm is in mm;
    pixels_per_unit converts coc_length to sensor pixels; coc_max_px clamps
    the blur diameter (0 forces an all-in-focus render).
    """

    focal_length_mm: float
    f_number: float
    focus_distance: float
    focus_scale: float = 1.0
    pixels_per_unit: float = 28.444
    coc_max_px: float = 64.0

    def validate(self) -> None:
        for name in ("focal_length_mm", "f_number", "focus_scale", "pixels_per_unit"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not math.isfinite(self.focus_distance):
            raise ValueError("focus_distance must be finite")
        if not (math.isfinite(self.coc_max_px) and self.coc_max_px >= 0):
            raise ValueError(f"coc_max_px must be >= 0, got {self.coc_max_px!r}")
        if abs(self.focus_scale * self.focus_distance - self.focal_length_mm) < SINGULARITY_EPS:
            raise SingularLens(
                "focus_scale * focus_distance coincides with the focal length"
            )

    def with_f_number(self, f_number: float) -> "LensParams":
        return replace(self, f_number=f_number)


def default_pixels_per_unit(image_width: int) -> float:
    # full-frame 36 mm sensor width
    return image_width / 36.0


def default_coc_max_px(image_width: int) -> float:
    # 64 px at 1024-px width, scaled proportionally
    return 64.0 * image_width / 1024.0


@dataclass(frozen=True)
class SoftDiskKernel:
    """Unit-energy disk kernel with a 1-pixel linear boundary ramp."""

    radius_px: int
    weights: np.ndarray  # (2r+1, 2r+1), taps >= 0, sum == 1


@dataclass
class LensGradients:
    """Pullback of an upstream cotangent through render_defocus."""

    d_image: np.ndarray
    d_focus_distance: float
    d_focus_scale: float
    d_f_number: float
    d_focal_length: float


def _as_image(image: np.ndarray) -> tuple[np.ndarray, bool]:
    """Return (H, W, C) float64 view of an (H, W) or (H, W, C) image."""
    arr = np.asarray(image, dtype=np.float64)
    squeezed = arr.ndim == 2
    if squeezed:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image must be HxW or HxWxC, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite samples")
    return arr, squeezed


def _check_depth(depth: np.ndarray) -> np.ndarray:
    arr = np.asarray(depth, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"depth must be HxW, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise InvalidDepth("depth values must be finite and > 0")
    return arr


def compute_coc_map(depth: np.ndarray, lens: LensParams) -> np.ndarray:
    """Per-pixel circle-of-confusion diameter in pixels, clamped to coc_max_px."""
    lens.validate()
    d = _check_depth(depth)
    denom = lens.f_number * abs(
        lens.focus_scale * lens.focus_distance - lens.focal_length_mm
    )
    coc_length = (
        np.abs(d - lens.focus_distance) / d * lens.focal_length_mm**2 / denom
    )
    return np.minimum(coc_length * lens.pixels_per_unit, lens.coc_max_px)


def kernel_radius(coc_px: float) -> int:
    """Support radius of the soft disk for a given diameter."""
    return math.ceil(coc_px / 2.0 + 0.5)


def build_soft_disk_kernel(coc_px: float) -> SoftDiskKernel:
    """Build the normalized soft-boundary disk kernel for one coc diameter."""
    if not (math.isfinite(coc_px) and coc_px >= 0):
        raise ValueError(f"coc_px must be finite and >= 0, got {coc_px!r}")
    r = kernel_radius(coc_px)
    ys, xs = np.mgrid[-r : r + 1, -r : r + 1]
    rho = np.hypot(ys, xs)
    raw = np.clip(coc_px / 2.0 - rho + 0.5, 0.0, 1.0)
    return SoftDiskKernel(radius_px=r, weights=raw / raw.sum())


@lru_cache(maxsize=128)
def _window(radius: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flattened (dy, dx, rho) arrays for the (2r+1)^2 offset window."""
    ys, xs = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    dy = ys.ravel().astype(np.int64)
    dx = xs.ravel().astype(np.int64)
    return dy, dx, np.hypot(dy, dx)


def _radius_groups(coc: np.ndarray):
    """Yield (radius, ys, xs) groups of source pixels sharing a support radius."""
    radius = np.ceil(coc / 2.0 + 0.5).astype(np.int64)
    for r in np.unique(radius):
        ys, xs = np.nonzero(radius == r)
        yield int(r), ys, xs


def _chunks(n: int, taps: int):
    step = max(1, _CHUNK_ELEMS // max(1, taps))
    for start in range(0, n, step):
        yield start, min(n, start + step)


def _splat(img: np.ndarray, coc: np.ndarray):
    """Accumulate the normalized scatter. Returns (out, den, pad_radius).

    Sources are grouped by support radius; each group splats its kernels
    into arrays padded by the global max radius, so taps falling off the
    image are dropped without branching. The per-target weight sum ``den``
    renormalizes the output (positive everywhere: every source keeps a
    positive center tap).
    """
    H, W, C = img.shape
    R = kernel_radius(float(coc.max()))
    H2, W2 = H + 2 * R, W + 2 * R
    num = np.zeros((H2 * W2, C))
    den = np.zeros(H2 * W2)
    for r, ys, xs in _radius_groups(coc):
        dy, dx, rho = _window(r)
        half = coc[ys, xs] * 0.5 + 0.5
        base = (ys + R) * W2 + (xs + R)
        vals = img[ys, xs, :]
        for a, b in _chunks(len(ys), len(rho)):
            taps = np.clip(half[a:b, None] - rho[None, :], 0.0, 1.0)
            taps /= taps.sum(axis=1, keepdims=True)
            tgt = (base[a:b, None] + dy[None, :] * W2 + dx[None, :]).ravel()
            den += np.bincount(tgt, weights=taps.ravel(), minlength=H2 * W2)
            for ch in range(C):
                num[:, ch] += np.bincount(
                    tgt,
                    weights=(taps * vals[a:b, ch : ch + 1]).ravel(),
                    minlength=H2 * W2,
                )
    num = num.reshape(H2, W2, C)[R : R + H, R : R + W]
    den = den.reshape(H2, W2)[R : R + H, R : R + W]
    return num / den[:, :, None], den, R


def render_defocus(
    image: np.ndarray, depth: np.ndarray, lens: LensParams
) -> np.ndarray:
    """Render defocus blur via normalized splatting.

    With coc = 0 everywhere the output equals the input exactly, and a
    constant input stays constant for any depth/lens (unit-energy kernels
    plus renormalization).
    """
    img, squeezed = _as_image(image)
    d = _check_depth(depth)
    if d.shape != img.shape[:2]:
        raise DimensionMismatch(
            f"image {img.shape[:2]} vs depth {d.shape}"
        )
    coc = compute_coc_map(d, lens)
    out, _, _ = _splat(img, coc)
    return out[:, :, 0] if squeezed else out


def _coc_length_partials(depth: np.ndarray, lens: LensParams) -> dict[str, np.ndarray]:
    """Per-pixel partial derivatives of coc_length w.r.t. the lens scalars.

    sign(0) = 0 handles the |d - f_d| kink; the |f_s f_d - f| pole is
    excluded by LensParams.validate().
    """
    f = lens.focal_length_mm
    n = lens.f_number
    fd = lens.focus_distance
    fs = lens.focus_scale
    dd = lens.focus_scale * fd - f
    abs_dd = abs(dd)
    sgn_dd = math.copysign(1.0, dd) if dd != 0 else 0.0
    b = f * f / (n * abs_dd)

    diff = depth - fd
    a = np.abs(diff) / depth
    sgn = np.sign(diff)

    da_dfd = -sgn / depth
    db_dfd = -f * f * sgn_dd * fs / (n * dd * dd)
    db_dfs = -f * f * sgn_dd * fd / (n * dd * dd)
    db_dn = -f * f / (n * n * abs_dd)
    db_df = 2.0 * f / (n * abs_dd) + f * f * sgn_dd / (n * dd * dd)

    return {
        "coc_length": a * b,
        "focus_distance": da_dfd * b + a * db_dfd,
        "focus_scale": a * db_dfs,
        "f_number": a * db_dn,
        "focal_length": a * db_df,
    }


def render_adjoint(
    image: np.ndarray,
    depth: np.ndarray,
    lens: LensParams,
    upstream: np.ndarray,
) -> LensGradients:
    """Exact analytic gradients of render_defocus against an upstream cotangent.

    Writing the render as out_p = num_p / den_p, the pullbacks are

        d_image_q = sum_o W_q(o) * u_{q+o} / den_{q+o}
        dL/dcoc_q = sum_o sum_c dW_q(o)/dcoc * (x_qc - out_{q+o,c}) * u / den

    followed by the chain through the coc clamp and the coc_length
    partials. Taps that fall off the image contribute nothing (u and 1/den
    are zero-padded).
    """
    img, squeezed = _as_image(image)
    d = _check_depth(depth)
    if d.shape != img.shape[:2]:
        raise DimensionMismatch(f"image {img.shape[:2]} vs depth {d.shape}")
    u, _ = _as_image(upstream)
    if u.shape != img.shape:
        raise DimensionMismatch(f"upstream {u.shape} vs image {img.shape}")

    coc = compute_coc_map(d, lens)
    out, den, R = _splat(img, coc)

    H, W, C = img.shape
    H2, W2 = H + 2 * R, W + 2 * R
    # A = u/den, B = out*u/den, zero-padded and flattened for tap gathers
    a_flat = np.zeros((H2 * W2, C))
    b_flat = np.zeros((H2 * W2, C))
    ud = u / den[:, :, None]
    a_flat.reshape(H2, W2, C)[R : R + H, R : R + W] = ud
    b_flat.reshape(H2, W2, C)[R : R + H, R : R + W] = out * ud

    d_image = np.zeros_like(img)
    g_coc = np.zeros((H, W))  # dL/d(coc_px) per source pixel

    for r, ys, xs in _radius_groups(coc):
        dy, dx, rho = _window(r)
        half = coc[ys, xs] * 0.5 + 0.5
        base = (ys + R) * W2 + (xs + R)
        vals = img[ys, xs, :]
        for a, b in _chunks(len(ys), len(rho)):
            t = half[a:b, None] - rho[None, :]
            raw = np.clip(t, 0.0, 1.0)
            # d(raw)/d(coc): ramp slope 0.5; interior branch at the kinks
            draw = 0.5 * ((t >= 0.0) & (t <= 1.0))
            s = raw.sum(axis=1, keepdims=True)
            ds = draw.sum(axis=1, keepdims=True)
            w = raw / s
            dw = draw / s - raw * (ds / (s * s))
            tgt = base[a:b, None] + dy[None, :] * W2 + dx[None, :]
            acc = np.zeros(b - a)
            for ch in range(C):
                a_g = a_flat[tgt, ch]
                d_image[ys[a:b], xs[a:b], ch] = (w * a_g).sum(axis=1)
                acc += (dw * (vals[a:b, ch : ch + 1] * a_g - b_flat[tgt, ch])).sum(
                    axis=1
                )
            g_coc[ys[a:b], xs[a:b]] = acc

    # chain: coc_px = min(coc_length * ppu, coc_max); interior branch at the kink
    partials = _coc_length_partials(d, lens)
    interior = partials["coc_length"] * lens.pixels_per_unit <= lens.coc_max_px
    g_len = g_coc * lens.pixels_per_unit * interior

    return LensGradients(
        d_image=d_image[:, :, 0] if squeezed else d_image,
        d_focus_distance=float((g_len * partials["focus_distance"]).sum()),
        d_focus_scale=float((g_len * partials["focus_scale"]).sum()),
        d_f_number=float((g_len * partials["f_number"]).sum()),
        d_focal_length=float((g_len * partials["focal_length"]).sum()),
    )


def sweep_apertures(
    image: np.ndarray,
    depth: np.ndarray,
    lens_base: LensParams,
    f_numbers: Sequence[float] = APERTURE_SWEEP,
) -> list[np.ndarray]:
    """Render once per f-number (strictly increasing), other parameters fixed."""
    f_numbers = list(f_numbers)
    if any(b <= a for a, b in zip(f_numbers, f_numbers[1:])):
        raise InvalidApertureList("f_numbers must be strictly increasing")
    return [
        render_defocus(image, depth, lens_base.with_f_number(n)) for n in f_numbers
    ]
