import json

import numpy as np
import pytest

from thinlens import imageio
from thinlens.cli import EXIT_CODES, main
from thinlens.metrics import LabelStack

from exif_blobs import TAG_F_NUMBER, build_tiff, rational_entry, wrap_jpeg


@pytest.fixture
def flat_scene(tmp_path):
    rng = np.random.default_rng(0)
    img = np.rint(rng.random((12, 12, 3)) * 65535) / 65535
    depth = np.full((12, 12), 2.0)
    image_path = tmp_path / "in.png"
    depth_path = tmp_path / "d.pfm"
    imageio.save_image(image_path, img)
    imageio.save_pfm(depth_path, depth)
    return image_path, depth_path, img


def run(*argv) -> int:
    return main([str(a) for a in argv])


class TestRenderCommand:
    def test_focal_plane_identity(self, flat_scene, tmp_path):
        image_path, depth_path, img = flat_scene
        out = tmp_path / "out.png"
        code = run(
            "render", "--image", image_path, "--depth", depth_path,
            "--fnumber", 1.8, "--fd", 2.0, "--out", out,
        )
        assert code == 0
        np.testing.assert_allclose(imageio.load_image(out), img, atol=1e-6)
        report = json.loads(out.with_suffix(".json").read_text())
        assert report["focus_distance"] == 2.0
        assert report["focus_source"] == "user_override"
        assert report["coc_max_px"] >= report["coc_mean_px"] == 0.0

    def test_golden_energy_ordering(self, golden_paths, tmp_path):
        image_path, depth_path, lens_path = golden_paths
        cfg = json.loads(lens_path.read_text())
        outs = {}
        for n in (1.8, 22.0):
            out = tmp_path / f"out_{n}.png"
            code = run(
                "render", "--image", image_path, "--depth", depth_path,
                "--fnumber", n, "--fd", cfg["focus_distance"],
                "--focal", cfg["focal_length_mm"], "--fs", cfg["focus_scale"],
                "--ppu", cfg["pixels_per_unit"], "--coc-max", cfg["coc_max_px"],
                "--out", out,
            )
            assert code == 0
            outs[n] = imageio.load_image(out)
        e_wide = float((outs[1.8] ** 2).sum())
        e_narrow = float((outs[22.0] ** 2).sum())
        assert e_wide < e_narrow

    def test_missing_fnumber_without_defaults(self, flat_scene, tmp_path, capsys):
        image_path, depth_path, _ = flat_scene
        code = run(
            "render", "--image", image_path, "--depth", depth_path,
            "--fd", 2.0, "--no-defaults", "--out", tmp_path / "x.png",
        )
        assert code == EXIT_CODES["missing_parameter"]
        err = capsys.readouterr().err.strip()
        assert err.splitlines() == [f"error: missing_parameter f_number"]

    def test_singular_lens_exit_code(self, flat_scene, tmp_path):
        image_path, depth_path, _ = flat_scene
        code = run(
            "render", "--image", image_path, "--depth", depth_path,
            "--fnumber", 1.8, "--fd", 50.0, "--focal", 50.0,
            "--out", tmp_path / "x.png",
        )
        assert code == EXIT_CODES["singular_lens"]

    def test_missing_file(self, tmp_path):
        code = run(
            "render", "--image", tmp_path / "absent.png",
            "--depth", tmp_path / "absent.pfm",
            "--fd", 2.0, "--out", tmp_path / "x.png",
        )
        assert code == EXIT_CODES["io_error"]


class TestSweepCommand:
    def test_golden_sweep_monotonicity_100(self, golden_paths, tmp_path):
        image_path, depth_path, lens_path = golden_paths
        cfg = json.loads(lens_path.read_text())
        out_dir = tmp_path / "sweep"
        code = run(
            "sweep", "--image", image_path, "--depth", depth_path,
            "--fd", cfg["focus_distance"], "--focal", cfg["focal_length_mm"],
            "--fs", cfg["focus_scale"], "--ppu", cfg["pixels_per_unit"],
            "--coc-max", cfg["coc_max_px"], "--out-dir", out_dir,
        )
        assert code == 0
        report = json.loads((out_dir / "sweep_report.json").read_text())
        assert report["blur_monotonicity"] == 100.0
        assert report["f_numbers"] == [1.8, 2.8, 4, 5.6, 8, 11, 16, 22]
        assert len(report["outputs"]) == 8
        assert all((tmp_path / "sweep").joinpath(p.split("/")[-1]).exists() for p in report["outputs"])

    def test_single_aperture_rejected(self, flat_scene, tmp_path):
        image_path, depth_path, _ = flat_scene
        code = run(
            "sweep", "--image", image_path, "--depth", depth_path,
            "--fd", 2.0, "--apertures", "8", "--out-dir", tmp_path / "s",
        )
        assert code == EXIT_CODES["too_few_images"]

    def test_descending_apertures_rejected(self, flat_scene, tmp_path):
        image_path, depth_path, _ = flat_scene
        code = run(
            "sweep", "--image", image_path, "--depth", depth_path,
            "--fd", 2.0, "--apertures", "22,16,11", "--out-dir", tmp_path / "s",
        )
        assert code == EXIT_CODES["invalid_aperture_list"]


class TestMetricsCommands:
    def test_energy(self, flat_scene, capsys):
        image_path, _, img = flat_scene
        assert run("metrics", "energy", "--image", image_path) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["spatial"] == pytest.approx(float((img**2).sum()))
        assert payload["spectral"] == pytest.approx(payload["spatial"], rel=1e-9)

    def test_monotonicity(self, tmp_path, capsys):
        paths = []
        for i, value in enumerate((0.2, 0.5, 0.4)):
            p = tmp_path / f"m{i}.png"
            imageio.save_image(p, np.full((4, 4), value))
            paths.append(p)
        assert run("metrics", "monotonicity", "--images", *paths) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["monotonicity"] == 50.0

    def test_consistency(self, tmp_path, capsys):
        a = tmp_path / "a.seg"
        b = tmp_path / "b.seg"
        labels = np.array([[[1, 2, 3], [4, 5, 6]]], dtype=np.int64)
        imageio.save_label_stack(a, labels)
        other = np.array([[[3, 9, 10], [7, 8, 9]]], dtype=np.int64)
        imageio.save_label_stack(b, other)
        assert run("metrics", "consistency", "--stacks", a, b) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["consistency"] == 50.0
        LabelStack(labels)  # sanity: fixture labels are valid stacks

    def test_theorem_check(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        p = tmp_path / "t.png"
        imageio.save_image(p, rng.random((8, 8)))
        assert run("metrics", "theorem-check", "--image", p, "--box", 3) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["strict_expected"] is True
        assert payload["holds"] is True
        assert payload["energy_after"] < payload["energy_before"]


class TestIngestCommand:
    def test_end_to_end(self, tmp_path, capsys):
        files = tmp_path / "files"
        files.mkdir()
        shallow = files / "a.jpg"
        shallow.write_bytes(
            wrap_jpeg(build_tiff([], [rational_entry(TAG_F_NUMBER, 2, 1, "<")], "<").blob)
        )
        deep = files / "b.jpg"
        deep.write_bytes(
            wrap_jpeg(build_tiff([], [rational_entry(TAG_F_NUMBER, 16, 1, "<")], "<").blob)
        )
        manifest = tmp_path / "manifest.txt"
        manifest.write_text(f"{shallow}\n{deep}\n")
        assert run("ingest", "--manifest", manifest, "--out-dir", tmp_path / "out") == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["deep"] == 1 and payload["shallow"] == 1
        assert payload["rejected"] == {}
