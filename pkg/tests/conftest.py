import json
from pathlib import Path

import pytest

from thinlens import LensParams, imageio

DATA = Path(__file__).parent / "data"


def load_scene(scene_dir: Path):
    image = imageio.load_image(scene_dir / "image.png")
    depth = imageio.load_depth(scene_dir / "depth.pfm")
    cfg = json.loads((scene_dir / "lens.json").read_text())
    return image, depth, LensParams(f_number=8.0, **cfg)


@pytest.fixture(scope="session")
def golden_scene():
    return load_scene(DATA / "golden")


@pytest.fixture(scope="session")
def golden_paths():
    d = DATA / "golden"
    return d / "image.png", d / "depth.pfm", d / "lens.json"


@pytest.fixture(scope="session")
def committed_scenes():
    dirs = sorted((DATA / "scenes").iterdir())
    assert len(dirs) == 20
    return [load_scene(d) for d in dirs]
