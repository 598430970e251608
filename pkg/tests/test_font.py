"""Tests for the built-in bitmap font."""

import numpy as np

from bimpilot.font import (
    CELL_H,
    CELL_W,
    TEXT_PAD_X,
    charset,
    draw_text,
    glyph_table,
    read_cell,
    text_supported,
)

EXPECTED_CHARS = (
    [chr(c) for c in range(ord("A"), ord("Z") + 1)]
    + [chr(c) for c in range(ord("a"), ord("z") + 1)]
    + [chr(c) for c in range(ord("0"), ord("9") + 1)]
    + list(" .,:;_'\"()+=-/")
)


def test_charset_complete():
    assert charset() == frozenset(EXPECTED_CHARS)
    assert len(EXPECTED_CHARS) == 76


def test_glyphs_pairwise_distinct():
    table = glyph_table()
    seen = {}
    for ch, rows in table.items():
        assert rows not in seen, f"{ch!r} duplicates {seen[rows]!r}"
        seen[rows] = ch


def test_draw_and_read_back_every_glyph():
    pixels = np.full((40, 40, 3), 255, dtype=np.uint8)
    for ch in EXPECTED_CHARS:
        pixels[:] = 255
        draw_text(pixels, 4, 4, ch)
        assert read_cell(pixels, 4, 4) == ch


def test_text_supported():
    assert text_supported("01-Floor")
    assert text_supported("ctrl+shift+o")
    assert not text_supported("naïve")


def test_draw_clips_at_edges():
    pixels = np.full((CELL_H, CELL_W, 3), 255, dtype=np.uint8)
    draw_text(pixels, -4, -4, "WW")  # must not raise
    draw_text(pixels, CELL_W - 2, 0, "W")
