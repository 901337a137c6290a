import json
import os
from pathlib import Path

import cv2
import numpy as np
import pytest

# Keep the developer's environment and .env out of the settings under test.
for _name in [n for n in os.environ if n.startswith("MATTEKIT_")]:
    del os.environ[_name]


@pytest.fixture
def rng():
    """Seeded generator so random cases are reproducible."""
    return np.random.default_rng(1234)


@pytest.fixture
def random_matte(rng):
    """Factory for random mattes with a fully opaque block (so Conn has a source)."""
    from models import AlphaMatte

    def make(h=16, w=16, opaque=True):
        values = rng.uniform(0.0, 1.0, size=(h, w))
        if opaque:
            values[: h // 3, : w // 3] = 1.0
        return AlphaMatte(values=values)

    return make


@pytest.fixture
def random_image(rng):
    """Factory for random RGB (or grey) images."""
    from models import ImageBuffer

    def make(h=8, w=8, channels=3):
        return ImageBuffer(data=rng.uniform(0.0, 1.0, size=(channels, h, w)))

    return make


@pytest.fixture
def random_mask(rng):
    """Factory for masks with at least one set and one clear pixel."""
    from models import BinaryMask

    def make(h=8, w=8):
        values = rng.uniform(size=(h, w)) < 0.5
        values.flat[0] = True
        values.flat[-1] = False
        return BinaryMask.from_bool(values)

    return make


# ── Corpus builder ────────────────────────────────────────────────────────────


def write_u8(path: Path, array: np.ndarray) -> Path:
    """Write an HxW or HxWx3 (RGB) uint8 array as PNG."""
    path.parent.mkdir(parents=True, exist_ok=True)
    if array.ndim == 3:
        array = array[:, :, ::-1]
    assert cv2.imwrite(str(path), np.ascontiguousarray(array))
    return path


@pytest.fixture
def corpus(tmp_path):
    """Build a small on-disk corpus: fg/alpha/bg PNGs plus manifest.jsonl.

    Returns a builder taking a record count; alpha mattes are soft-edged
    squares so compositing and harmonization have real edges to work on.
    """

    def build(n=10, size=24, with_background=True, seed=7):
        gen = np.random.default_rng(seed)
        root = tmp_path / "corpus"
        root.mkdir(parents=True, exist_ok=True)
        lines = []
        for i in range(n):
            fg = gen.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
            bg = gen.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
            alpha = np.zeros((size, size), dtype=np.uint8)
            lo, hi = 4 + i % 3, size - 4
            alpha[lo:hi, lo:hi] = 255
            alpha[lo - 1, lo:hi] = 128
            alpha[lo:hi, hi] = 64
            write_u8(root / "fg" / f"fg_{i:02d}.png", fg)
            write_u8(root / "alpha" / f"fg_{i:02d}.png", alpha)
            record = {
                "foreground_path": f"fg/fg_{i:02d}.png",
                "alpha_path": f"alpha/fg_{i:02d}.png",
                "split": "test" if i % 2 else "train",
            }
            if with_background or i == 0:
                write_u8(root / "bg" / f"bg_{i:02d}.png", bg)
                record["background_path"] = f"bg/bg_{i:02d}.png"
            lines.append(json.dumps(record))
        manifest = root / "manifest.jsonl"
        manifest.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        return manifest

    return build
