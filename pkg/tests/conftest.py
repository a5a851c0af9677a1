import numpy as np
import pytest

from src.config import Settings
from src.dataset import TextureSheet, build_manifest, crop, synth_textures
from src.logger import set_color


@pytest.fixture(autouse=True)
def plain_logs():
    set_color(False)
    yield
    set_color(True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def cli_settings(tmp_path):
    return Settings(data_dir=tmp_path, workers=1, seed=0, color=False)


def in_memory_sheets(n_classes: int, sheet_size: int, seed: int = 0):
    return [
        TextureSheet(class_name=name, id=name, field=field)
        for name, field in synth_textures(n_classes, sheet_size, seed)
    ]


def crop_all(manifest, sheets):
    by_id = {s.id: s.field for s in sheets}
    return [crop(by_id[e.sheet], e.row, e.col, manifest.patch_size) for e in manifest.entries]


@pytest.fixture
def small_dataset():
    """3 classes, 16x16 patches, 6 train / 10 test each, pixels kept in memory."""
    sheets = in_memory_sheets(3, 64)
    manifest = build_manifest(sheets, n_train=6, n_test=10, patch_size=16, seed=7)
    return manifest, crop_all(manifest, sheets)
