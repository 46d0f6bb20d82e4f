import base64
import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from thinlens import imageio
from thinlens.cli import main as cli_main
from thinlens.service import create_app


@pytest.fixture
def client():
    with TestClient(create_app(session_limit=4)) as c:
        yield c


def make_session(client, image, depth, saliency=None):
    files = {
        "image": ("image.png", imageio.encode_png(image), "image/png"),
        "depth": ("depth.pfm", imageio.encode_pfm(depth), "application/octet-stream"),
    }
    if saliency is not None:
        files["saliency"] = (
            "sal.pfm",
            imageio.encode_pfm(saliency),
            "application/octet-stream",
        )
    resp = client.post("/session", files=files)
    assert resp.status_code == 200, resp.text
    return resp.json()


@pytest.fixture
def flat_session(client):
    rng = np.random.default_rng(0)
    image = np.rint(rng.random((16, 16, 3)) * 65535) / 65535
    depth = np.full((16, 16), 2.0)
    meta = make_session(client, image, depth)
    return meta, image, depth


class TestSessionLifecycle:
    def test_create_returns_meta(self, flat_session):
        meta, _, depth = flat_session
        assert meta["width"] == meta["height"] == 16
        assert meta["channels"] == 3
        assert meta["depth_min"] == meta["depth_max"] == 2.0
        assert meta["focus_source"] == "stub"
        assert meta["default_focus_distance"] == pytest.approx(2.0)
        assert sum(meta["histogram"]["counts"]) == 256

    def test_meta_endpoint(self, client, flat_session):
        meta, _, _ = flat_session
        got = client.get(f"/session/{meta['session_id']}/meta")
        assert got.status_code == 200
        assert got.json() == meta

    def test_unknown_session_404(self, client):
        assert client.get("/session/nope/meta").status_code == 404
        resp = client.post("/render", json={"session_id": "nope", "f_number": 8})
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_session"

    def test_delete(self, client, flat_session):
        meta, _, _ = flat_session
        sid = meta["session_id"]
        assert client.delete(f"/session/{sid}").status_code == 204
        assert client.get(f"/session/{sid}/meta").status_code == 404
        assert client.delete(f"/session/{sid}").status_code == 404

    def test_lru_eviction(self, client):
        rng = np.random.default_rng(1)
        ids = []
        for _ in range(5):  # limit is 4
            image = rng.random((4, 4, 3))
            depth = np.full((4, 4), 2.0)
            ids.append(make_session(client, image, depth)["session_id"])
        assert client.get(f"/session/{ids[0]}/meta").status_code == 404
        assert client.get(f"/session/{ids[1]}/meta").status_code == 200

    def test_dimension_mismatch_400(self, client):
        rng = np.random.default_rng(2)
        files = {
            "image": ("i.png", imageio.encode_png(rng.random((8, 8, 3))), "image/png"),
            "depth": (
                "d.pfm",
                imageio.encode_pfm(np.full((4, 4), 2.0)),
                "application/octet-stream",
            ),
        }
        resp = client.post("/session", files=files)
        assert resp.status_code == 400
        assert resp.json()["code"] == "dimension_mismatch"

    def test_saliency_upload_and_source(self, client):
        rng = np.random.default_rng(3)
        image = rng.random((8, 8, 3))
        depth = rng.uniform(1, 4, (8, 8))
        sal = rng.random((8, 8)) + 0.01
        meta = make_session(client, image, depth, saliency=sal)
        assert meta["focus_source"] == "saliency_weighted"
        expected = float((depth * sal).sum() / sal.sum())
        assert meta["default_focus_distance"] == pytest.approx(expected)

    def test_depth_raw_format_accepted(self, client):
        rng = np.random.default_rng(4)
        image = rng.random((6, 6, 3))
        files = {
            "image": ("i.png", imageio.encode_png(image), "image/png"),
            "depth": (
                "d.bin",
                imageio.encode_depth_raw(np.full((6, 6), 3.0)),
                "application/octet-stream",
            ),
        }
        resp = client.post("/session", files=files)
        assert resp.status_code == 200
        assert resp.json()["depth_min"] == 3.0


class TestRender:
    def test_focal_plane_returns_input(self, client, flat_session):
        meta, image, _ = flat_session
        resp = client.post(
            "/render",
            json={"session_id": meta["session_id"], "f_number": 1.8, "focus_distance": 2.0},
        )
        assert resp.status_code == 200
        out = imageio.decode_png(resp.content)
        np.testing.assert_allclose(out, image, atol=1e-6)
        assert resp.headers["X-Coc-Max-Px"] == "0.0"
        assert resp.headers["X-Focus-Source"] == "user_override"

    def test_determinism_byte_identical(self, client, flat_session):
        meta, _, _ = flat_session
        body = {"session_id": meta["session_id"], "f_number": 2.8, "focus_distance": 2.4}
        a = client.post("/render", json=body)
        b = client.post("/render", json=body)
        assert a.content == b.content
        assert a.headers["X-Signal-Energy"] == b.headers["X-Signal-Energy"]

    def test_default_focus_distance_used(self, client, flat_session):
        meta, _, _ = flat_session
        resp = client.post(
            "/render", json={"session_id": meta["session_id"], "f_number": 4.0}
        )
        assert resp.status_code == 200
        assert float(resp.headers["X-Focus-Distance"]) == pytest.approx(
            meta["default_focus_distance"]
        )
        assert resp.headers["X-Focus-Source"] == "stub"

    def test_singular_lens_422(self, client, flat_session):
        meta, _, _ = flat_session
        resp = client.post(
            "/render",
            json={
                "session_id": meta["session_id"],
                "f_number": 1.8,
                "focus_distance": 50.0,
                "focal_length_mm": 50.0,
            },
        )
        assert resp.status_code == 422
        assert resp.json()["code"] == "singular_lens"

    def test_validation_400(self, client, flat_session):
        meta, _, _ = flat_session
        resp = client.post(
            "/render",
            json={"session_id": meta["session_id"], "f_number": "wide", "bogus": 1},
        )
        assert resp.status_code == 400
        assert resp.json()["code"] == "validation"

    def test_coc_heatmap_and_mask_outputs(self, client):
        rng = np.random.default_rng(5)
        image = rng.random((12, 12, 3))
        rows = np.linspace(1.0, 4.0, 12)
        depth = np.repeat(rows[:, None], 12, axis=1)
        meta = make_session(client, image, depth)
        base = {
            "session_id": meta["session_id"],
            "f_number": 1.8,
            "focus_distance": 2.0,
            "pixels_per_unit": 0.3,
            "coc_max_px": 16.0,
        }
        heat = client.post("/render", json={**base, "output": "coc_heatmap"})
        mask = client.post("/render", json={**base, "output": "in_focus_mask"})
        assert heat.status_code == mask.status_code == 200
        heat_arr = imageio.decode_png(heat.content)
        mask_arr = imageio.decode_png(mask.content)
        assert heat_arr.shape == mask_arr.shape == (12, 12)
        assert set(np.unique(mask_arr)) <= {0.0, 1.0}
        rows_header = heat.headers["X-In-Focus-Rows"]
        assert rows_header  # the focused stripe exists
        for rng_part in rows_header.split(","):
            a, b = rng_part.split("-")
            assert 0 <= int(a) <= int(b) < 12

    def test_renders_on_distinct_sessions_in_parallel(self, client):
        rng = np.random.default_rng(6)
        metas = []
        for _ in range(2):
            image = rng.random((16, 16, 3))
            depth = rng.uniform(1, 4, (16, 16))
            metas.append(make_session(client, image, depth))

        def render(meta):
            return client.post(
                "/render", json={"session_id": meta["session_id"], "f_number": 2.8}
            )

        with ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(render, metas * 3))
        assert all(r.status_code == 200 for r in results)
        # same-session responses are identical regardless of interleaving
        by_session = {}
        for meta, resp in zip(metas * 3, results):
            by_session.setdefault(meta["session_id"], set()).add(resp.content)
        assert all(len(bodies) == 1 for bodies in by_session.values())


class TestSweepEndpoint:
    def test_golden_sweep(self, client, golden_scene):
        image, depth, lens = golden_scene
        meta = make_session(client, image, depth)
        resp = client.post(
            "/sweep",
            json={
                "session_id": meta["session_id"],
                "focus_distance": lens.focus_distance,
                "focal_length_mm": lens.focal_length_mm,
                "focus_scale": lens.focus_scale,
                "pixels_per_unit": lens.pixels_per_unit,
                "coc_max_px": lens.coc_max_px,
            },
        )
        assert resp.status_code == 200, resp.text
        payload = resp.json()
        assert payload["blur_monotonicity"] == 100.0
        assert len(payload["frames"]) == 8
        energies = payload["energies"]
        assert all(b > a for a, b in zip(energies, energies[1:]))
        # frames decode to images and the in-focus band widens
        first = imageio.decode_png(base64.b64decode(payload["frames"][0]))
        assert first.shape == image.shape
        widths = [
            sum(int(part.split("-")[1]) - int(part.split("-")[0]) + 1 for part in rows.split(","))
            for rows in payload["in_focus_rows"]
        ]
        assert all(b >= a for a, b in zip(widths, widths[1:]))
        assert widths[-1] > widths[0]

    def test_sweep_rejects_descending(self, client, flat_session):
        meta, _, _ = flat_session
        resp = client.post(
            "/sweep",
            json={"session_id": meta["session_id"], "f_numbers": [8.0, 4.0]},
        )
        assert resp.status_code == 400


class TestCliHttpAgreement:
    def test_byte_identical_outputs(self, client, golden_paths, tmp_path):
        image_path, depth_path, lens_path = golden_paths
        cfg = json.loads(lens_path.read_text())
        out = tmp_path / "cli.png"
        code = cli_main([
            "render", "--image", str(image_path), "--depth", str(depth_path),
            "--fnumber", "2.8", "--fd", str(cfg["focus_distance"]),
            "--focal", str(cfg["focal_length_mm"]), "--fs", str(cfg["focus_scale"]),
            "--ppu", str(cfg["pixels_per_unit"]), "--coc-max", str(cfg["coc_max_px"]),
            "--out", str(out),
        ])
        assert code == 0

        meta = make_session(
            client,
            imageio.load_image(image_path),
            imageio.load_depth(depth_path),
        )
        resp = client.post(
            "/render",
            json={
                "session_id": meta["session_id"],
                "f_number": 2.8,
                "focus_distance": cfg["focus_distance"],
                "focal_length_mm": cfg["focal_length_mm"],
                "focus_scale": cfg["focus_scale"],
                "pixels_per_unit": cfg["pixels_per_unit"],
                "coc_max_px": cfg["coc_max_px"],
            },
        )
        assert resp.status_code == 200
        assert resp.content == out.read_bytes()
