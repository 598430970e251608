"""Built-in 5x7 bitmap font: glyph table, measurement, and raster text drawing.

Rendering and pixel-exact OCR share this single table, so any text the mock
GUI draws can be read back byte-for-byte.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

import numpy as np

GLYPH_W = 5
GLYPH_H = 7
SCALE = 2
CELL_W = GLYPH_W * SCALE   # 10 px per character cell
CELL_H = GLYPH_H * SCALE   # 14 px per character cell

# Text is always drawn this far from the left edge of its anchor box and
# vertically centered; OCR relies on the same anchoring.
TEXT_PAD_X = 4

TEXT_COLOR = (20, 20, 20)


def _parse_font(text: str) -> dict[str, tuple[tuple[bool, ...], ...]]:
    glyphs: dict[str, tuple[tuple[bool, ...], ...]] = {}
    lines = [ln.rstrip("\n") for ln in text.splitlines()]
    i = 0
    while i < len(lines):
        line = lines[i]
        if not line.startswith("glyph"):
            i += 1
            continue
        name = line[len("glyph"):].strip()
        ch = " " if name == "space" else name
        rows = []
        for j in range(1, GLYPH_H + 1):
            row = lines[i + j]
            if len(row) != GLYPH_W:
                raise ValueError(f"glyph {ch!r}: row {j} is {len(row)} cells wide")
            rows.append(tuple(c == "#" for c in row))
        glyphs[ch] = tuple(rows)
        i += GLYPH_H + 1
    return glyphs


@lru_cache(maxsize=1)
def glyph_table() -> dict[str, tuple[tuple[bool, ...], ...]]:
    """Glyph bitmaps keyed by character, loaded from the packaged table."""
    data = resources.files("bimpilot.data").joinpath("font5x7.txt").read_text("utf-8")
    return _parse_font(data)


@lru_cache(maxsize=1)
def charset() -> frozenset[str]:
    return frozenset(glyph_table().keys())


def text_supported(text: str) -> bool:
    return all(c in charset() for c in text)


def text_width(text: str) -> int:
    return CELL_W * len(text)


def draw_text(pixels: np.ndarray, x: int, y: int, text: str,
              color: tuple[int, int, int] = TEXT_COLOR) -> None:
    """Stamp `text` onto an (h, w, 3) uint8 array with its top-left cell at (x, y).

    Unsupported characters raise; callers pre-validate with text_supported.
    """
    table = glyph_table()
    h, w = pixels.shape[:2]
    for k, ch in enumerate(text):
        try:
            rows = table[ch]
        except KeyError:
            raise ValueError(f"character {ch!r} not in the built-in font") from None
        cx = x + k * CELL_W
        for gy in range(GLYPH_H):
            for gx in range(GLYPH_W):
                if not rows[gy][gx]:
                    continue
                px = cx + gx * SCALE
                py = y + gy * SCALE
                if 0 <= px < w - 1 and 0 <= py < h - 1:
                    pixels[py:py + SCALE, px:px + SCALE] = color


def draw_text_in_box(pixels: np.ndarray, x0: int, y0: int, x1: int, y1: int,
                     text: str, color: tuple[int, int, int] = TEXT_COLOR) -> None:
    """Draw text anchored at the standard position within an inclusive box."""
    y = y0 + ((y1 - y0 + 1) - CELL_H) // 2
    draw_text(pixels, x0 + TEXT_PAD_X, y, text, color)


def read_cell(pixels: np.ndarray, x: int, y: int,
              color: tuple[int, int, int] = TEXT_COLOR) -> str | None:
    """Decode one glyph cell whose top-left is at (x, y); None if unreadable."""
    h, w = pixels.shape[:2]
    if x < 0 or y < 0 or x + CELL_W > w or y + CELL_H > h:
        return None
    grid = []
    col = np.array(color, dtype=np.uint8)
    for gy in range(GLYPH_H):
        row = []
        for gx in range(GLYPH_W):
            px = pixels[y + gy * SCALE, x + gx * SCALE]
            row.append(bool((px == col).all()))
        grid.append(tuple(row))
    grid_t = tuple(grid)
    for ch, rows in glyph_table().items():
        if rows == grid_t:
            return ch
    return None
