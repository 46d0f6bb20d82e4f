"""Blur evaluation metrics.

Signal energy is the sum of squared sample magnitudes, computed in the
spatial domain or (equivalently, by Parseval) as the per-channel sum of
squared DFT magnitudes divided by H*W. Blur monotonicity counts the
fraction of adjacent aperture steps whose energy strictly increases.
Content consistency compares per-pixel top-3 segmentation label sets
across an aperture stack.

``circular_energy_oracle`` is the exact-theorem companion: under circular
(wrap-around) convolution with a non-negative unit-sum kernel, the output
energy never exceeds the input energy, strictly so when some frequency has
|F_k| > 0 and |H_k| < 1. The renderer uses zero-boundary normalized
splatting, so this oracle owns its own circular convolver instead of
reusing the renderer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidKernel, TooFewImages

KERNEL_SUM_EPS = 1e-9

# aperture set over which content consistency is evaluated by default
CONSISTENCY_APERTURES = (4.0, 5.6, 8.0, 11.0, 16.0, 22.0)


@dataclass(frozen=True)
class EnergyValue:
    energy: float
    domain: str  # "spatial" | "spectral"


def signal_energy(image: np.ndarray, domain: str = "spatial") -> EnergyValue:
    """Signal energy of an image, summed over all pixels and channels."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if domain == "spatial":
        return EnergyValue(float(np.sum(arr * arr)), "spatial")
    if domain == "spectral":
        h, w = arr.shape[:2]
        total = 0.0
        for ch in range(arr.shape[2]):
            spectrum = np.fft.fft2(arr[:, :, ch])
            total += float(np.sum(np.abs(spectrum) ** 2)) / (h * w)
        return EnergyValue(total, "spectral")
    raise ValueError(f"domain must be 'spatial' or 'spectral', got {domain!r}")


def blur_monotonicity(images: Sequence[np.ndarray]) -> float:
    """Percentage of adjacent pairs (aperture-ascending order) with strictly
    increasing signal energy."""
    if len(images) < 2:
        raise TooFewImages(f"need at least 2 images, got {len(images)}")
    shape = np.asarray(images[0]).shape
    for img in images[1:]:
        if np.asarray(img).shape != shape:
            raise DimensionMismatch("all images must share dimensions")
    energies = [signal_energy(img).energy for img in images]
    increases = sum(1 for a, b in zip(energies, energies[1:]) if a < b)
    return 100.0 * increases / (len(energies) - 1)


@dataclass(frozen=True)
class LabelStack:
    """Per-pixel top-3 segmentation class ids for one rendered aperture."""

    labels: np.ndarray  # (H, W, 3) int

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"labels must be HxWx3, got shape {arr.shape}")
        if arr.min() < 0:
            raise ValueError("class ids must be >= 0")
        srt = np.sort(arr, axis=2)
        if np.any(srt[:, :, :-1] == srt[:, :, 1:]):
            raise ValueError("duplicate class ids within a pixel's top-3")
        object.__setattr__(self, "labels", arr.astype(np.int64))

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape[:2]


def content_consistency(stacks: Sequence[LabelStack], mode: str = "all") -> float:
    """Percentage of pixels whose top-3 label sets agree across the stack.

    mode "all" (default): a pixel is consistent iff the intersection of its
    top-3 sets across all stacks is non-empty. mode "adjacent": iff every
    adjacent pair of stacks shares at least one of the pixel's top-3 labels.
    Both are order-insensitive within each pixel's top-3.
    """
    if len(stacks) < 2:
        raise TooFewImages(f"need at least 2 label stacks, got {len(stacks)}")
    shape = stacks[0].shape
    for s in stacks[1:]:
        if s.shape != shape:
            raise DimensionMismatch("all label stacks must share dimensions")
    if mode == "all":
        base = stacks[0].labels
        alive = np.ones(base.shape, dtype=bool)  # which base labels survive
        for other in stacks[1:]:
            alive &= (base[:, :, :, None] == other.labels[:, :, None, :]).any(axis=3)
        consistent = alive.any(axis=2)
    elif mode == "adjacent":
        consistent = np.ones(shape, dtype=bool)
        for left, right in zip(stacks, stacks[1:]):
            shared = (
                left.labels[:, :, :, None] == right.labels[:, :, None, :]
            ).any(axis=(2, 3))
            consistent &= shared
    else:
        raise ValueError(f"mode must be 'all' or 'adjacent', got {mode!r}")
    return 100.0 * float(consistent.mean())


def circular_convolve(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Spatial-domain circular convolution; kernel offsets are taken
    relative to the kernel's center tap and wrap around the image."""
    arr = np.asarray(image, dtype=np.float64)
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2:
        raise ValueError("kernel must be 2-D")
    cy, cx = k.shape[0] // 2, k.shape[1] // 2
    out = np.zeros_like(arr)
    for iy in range(k.shape[0]):
        for ix in range(k.shape[1]):
            tap = k[iy, ix]
            if tap == 0.0:
                continue
            shifted = np.roll(arr, shift=(iy - cy, ix - cx), axis=(0, 1))
            out += tap * shifted
    return out


def circular_energy_oracle(
    image: np.ndarray, kernel: np.ndarray
) -> tuple[float, float, bool]:
    """Energies before/after circular convolution plus the strictness flag.

    Returns (E_before, E_after, strict_expected) where strict_expected is
    True iff some frequency has |F_k| > 0 and |H_k| < 1 (in any channel),
    in which case the energy drop is strict.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2:
        raise InvalidKernel("kernel must be 2-D")
    if np.any(k < 0) or not np.all(np.isfinite(k)):
        raise InvalidKernel("kernel taps must be finite and >= 0")
    if abs(float(k.sum()) - 1.0) > KERNEL_SUM_EPS:
        raise InvalidKernel(f"kernel taps must sum to 1, got {k.sum()!r}")

    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    h, w = arr.shape[:2]

    blurred = np.stack(
        [circular_convolve(arr[:, :, ch], k) for ch in range(arr.shape[2])], axis=2
    )
    e_before = signal_energy(arr).energy
    e_after = signal_energy(blurred).energy

    # kernel spectrum on the image grid (centered embedding; the phase of
    # the embedding does not affect |H_k|)
    embedded = np.zeros((h, w))
    cy, cx = k.shape[0] // 2, k.shape[1] // 2
    for iy in range(k.shape[0]):
        for ix in range(k.shape[1]):
            embedded[(iy - cy) % h, (ix - cx) % w] += k[iy, ix]
    h_mag = np.abs(np.fft.fft2(embedded))

    strict = False
    for ch in range(arr.shape[2]):
        f_mag = np.abs(np.fft.fft2(arr[:, :, ch]))
        if np.any((f_mag > 1e-9) & (h_mag < 1.0 - 1e-12)):
            strict = True
            break
    return e_before, e_after, strict
