"""Deterministic procedural digit corpus for self-contained runs.

Real MNIST files are not bundled; this module renders 28x28 digit images
from a 5x7 glyph set with per-image jitter (position, stroke thickness,
intensity, speckle noise) so demos and end-to-end tests can exercise the
whole pipeline without external data. The corpus is a pure function of
(count, seed).
"""

from __future__ import annotations

import numpy as np

from colanet.data_io import Dataset, IMAGE_SIDE

_GLYPHS = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}

_SCALE = 3  # glyph cell size in pixels: 5x7 cells -> 15x21 strokes


def _glyph_mask(digit: int) -> np.ndarray:
    rows = _GLYPHS[digit]
    bitmap = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
    return np.kron(bitmap, np.ones((_SCALE, _SCALE), dtype=bool))


def _dilate(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:, 1:] |= mask[:, :-1]
    return out


def render_digit(digit: int, rng: np.random.Generator) -> np.ndarray:
    """One jittered 28x28 rendering, uint8 pixels, flattened to 784."""
    mask = _glyph_mask(digit)
    if rng.random() < 0.5:  # thickness style
        mask = _dilate(mask)
    h, w = mask.shape
    canvas = np.zeros((IMAGE_SIDE, IMAGE_SIDE), dtype=np.uint8)
    y0 = rng.integers(0, IMAGE_SIDE - h + 1)
    x0 = rng.integers(0, IMAGE_SIDE - w + 1)
    # per-stroke-pixel intensity jitter, clean zero background as in scanned digits
    patch = canvas[y0:y0 + h, x0:x0 + w]
    patch[mask] = rng.integers(160, 256, size=int(mask.sum()))
    return canvas.reshape(-1)


def generate_digits(n: int, seed: int = 0, train_count: int = -1) -> Dataset:
    """A corpus of n labelled digit images; labels drawn uniformly."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 10, size=n)
    images = np.zeros((n, IMAGE_SIDE * IMAGE_SIDE), dtype=np.uint8)
    for i in range(n):
        images[i] = render_digit(int(labels[i]), rng)
    return Dataset(images, labels, train_count)
