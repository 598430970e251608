"""Desk-scale design layer: parametric floorplan synthesis, sketch raster
round-trip, and rule-based interpretation.

Synthesis replaces a generative image backend with a deterministic layout
engine so that every task has machine-checkable ground truth. Footprints are
x-monotone polygons; rooms are vertical slices separated by internal walls.
Diagonal footprints bypass raster segmentation and travel as structured
segment sets built straight from the model.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

import numpy as np

from .core import (
    CanvasGeometry,
    DEFAULT_CANVAS,
    FloorplanModel,
    ImagePoint,
    OpeningKind,
    OpeningSpec,
    RoofSpec,
    StoreySpec,
    WallKind,
    WallSpec,
    canonical_json,
    validate_floorplan,
)


class SynthesisError(ValueError):
    """Requested layout cannot be realized (e.g. too many rooms)."""


class ModificationError(ValueError):
    """A floorplan modification references a missing room or is infeasible."""


class InterpretationError(ValueError):
    """Segments do not contain a closed outer boundary."""

    def __init__(self, message: str, dangling: list[int]):
        super().__init__(message)
        self.dangling = dangling


class Modality(Enum):
    TEXT_ONLY = "TextOnly"
    SKETCH = "Sketch"
    DATASET = "Dataset"
    SKETCH_MODIFIED = "SketchModified"
    DATASET_MODIFIED = "DatasetModified"


class Footprint(Enum):
    RECTANGLE = "Rectangle"
    HEXAGON = "Hexagon"
    OCTAGON = "Octagon"
    H_SHAPE = "HShape"
    L_SHAPE = "LShape"


class ModKind(Enum):
    ADD_ROOM = "AddRoom"
    SPLIT_ROOM = "SplitRoom"
    REMOVE_ROOM = "RemoveRoom"


@dataclass(frozen=True)
class Modification:
    kind: ModKind
    target: str | None = None     # room id, or "largest"
    location: str | None = None   # placement hint for AddRoom


@dataclass(frozen=True)
class DesignTask:
    id: str
    modality: Modality
    footprint: Footprint
    storeys: int
    rooms: int
    modifications: tuple[Modification, ...] = ()
    prose: str = ""

    def __post_init__(self) -> None:
        if self.rooms < 1:
            raise ValueError("rooms must be >= 1")
        if not 1 <= self.storeys <= 3:
            raise ValueError("storeys must be in 1..3")
        modified = self.modality in (Modality.SKETCH_MODIFIED,
                                     Modality.DATASET_MODIFIED)
        if self.modifications and not modified:
            raise ValueError("modifications require a *Modified modality")


# Footprint outlines in image coordinates (clockwise on screen, y grows down).
# All are x-monotone so any vertical line crosses the boundary exactly twice.
_FOOTPRINTS: dict[Footprint, tuple[tuple[int, int], ...]] = {
    Footprint.RECTANGLE: ((180, 120), (780, 120), (780, 520), (180, 520)),
    Footprint.HEXAGON: ((280, 320), (380, 147), (580, 147), (680, 320),
                        (580, 493), (380, 493)),
    Footprint.OCTAGON: ((400, 120), (560, 120), (680, 240), (680, 400),
                        (560, 520), (400, 520), (280, 400), (280, 240)),
    Footprint.H_SHAPE: ((180, 120), (330, 120), (330, 270), (630, 270),
                        (630, 120), (780, 120), (780, 520), (630, 520),
                        (630, 370), (330, 370), (330, 520), (180, 520)),
    Footprint.L_SHAPE: ((180, 120), (530, 120), (530, 320), (780, 320),
                        (780, 520), (180, 520)),
}

MIN_ROOM_WIDTH = 48          # image px; narrower slices are rejected
WINDOW_WIDTH_MM = 900.0
DOOR_WIDTH_MM = 900.0
SECOND_WINDOW_MIN_PX = 3 * 90   # bottom-side window only on pieces >= 3x width
ENTRANCE_INSET_PX = 8


def footprint_polygon(fp: Footprint) -> tuple[tuple[int, int], ...]:
    return _FOOTPRINTS[fp]


def _edges(poly: Iterable[tuple[int, int]]) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    pts = list(poly)
    return [(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]


def _crossings(poly, x: float) -> list[tuple[float, int]]:
    """(y, edge index) where the vertical line at x crosses the boundary."""
    out = []
    for i, (a, b) in enumerate(_edges(poly)):
        lo, hi = min(a[0], b[0]), max(a[0], b[0])
        if lo < x < hi:
            t = (x - a[0]) / (b[0] - a[0])
            out.append((a[1] + t * (b[1] - a[1]), i))
    out.sort()
    return out


def _away_from_vertices(poly, x: float, gap: int = 7) -> float:
    xs = sorted({p[0] for p in poly})
    guard = 0
    while any(abs(x - vx) < gap for vx in xs):
        x += 3
        guard += 1
        if guard > 20:
            break
    return x


def _split_positions(poly, rooms: int, rng: random.Random) -> list[int]:
    xs = [p[0] for p in poly]
    x_min, x_max = min(xs), max(xs)
    span = x_max - x_min
    if span / rooms < MIN_ROOM_WIDTH:
        raise SynthesisError(
            f"{rooms} rooms do not fit a footprint {span} px wide "
            f"(minimum room width {MIN_ROOM_WIDTH} px)")
    jitter = min(8.0, span / (4 * rooms) - 1)
    out = []
    for k in range(1, rooms):
        base = x_min + span * k / rooms
        x = base + (rng.uniform(-jitter, jitter) if jitter > 0 else 0.0)
        x = _away_from_vertices(poly, round(x))
        out.append(int(x))
    return out


@dataclass(frozen=True)
class _Layout:
    """Resolved slice structure of a synthesized plan."""
    poly: tuple[tuple[int, int], ...]
    split_xs: tuple[int, ...]

    @property
    def x_min(self) -> int:
        return min(p[0] for p in self.poly)

    @property
    def x_max(self) -> int:
        return max(p[0] for p in self.poly)

    def slices(self) -> list[tuple[float, float]]:
        bounds = [self.x_min, *self.split_xs, self.x_max]
        return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def _edge_point_t(a, b, p) -> float:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    length2 = dx * dx + dy * dy
    return ((p[0] - ax) * dx + (p[1] - ay) * dy) / length2


def _build_model(canvas: CanvasGeometry, layout: _Layout, storeys: int,
                 roof: RoofSpec | None = RoofSpec()) -> FloorplanModel:
    poly = layout.poly
    edges = _edges(poly)
    n_ext = len(edges)

    # Internal walls span the footprint top-to-bottom at each split.
    internal_segs = []
    for x in layout.split_xs:
        cross = _crossings(poly, x)
        if len(cross) != 2:
            raise SynthesisError(f"split at x={x} does not cross the boundary twice")
        (yu, _), (yl, _) = cross
        internal_segs.append(((x, round(yu)), (x, round(yl))))

    # Opening sites, computed once and replicated per storey: every room gets
    # a window on its top boundary; wide rooms get a second one on the bottom.
    window_sites: list[tuple[int, float]] = []   # (edge index, t)
    for cx, width in _slice_centers(layout):
        cross = _crossings(poly, cx)
        top_y, top_edge = cross[0]
        ea, eb = edges[top_edge]
        window_sites.append((top_edge, _edge_point_t(ea, eb, (cx, top_y))))
        if width >= SECOND_WINDOW_MIN_PX:
            bot_y, bot_edge = cross[1]
            ea2, eb2 = edges[bot_edge]
            window_sites.append((bot_edge, _edge_point_t(ea2, eb2, (cx, bot_y))))

    entrance_site = _entrance_site(poly, edges, window_sites)

    storeys_spec = tuple(
        StoreySpec(index=s, name=f"{s:02d}-Floor", elevation=(s - 1) * 3000.0,
                   wall_height=3000.0)
        for s in range(1, storeys + 1))

    walls: list[WallSpec] = []
    openings: list[OpeningSpec] = []
    for s in range(1, storeys + 1):
        ext_ids = []
        for i, (a, b) in enumerate(edges):
            wid = f"wall{i + 1}_floor{s}"
            ext_ids.append(wid)
            walls.append(WallSpec(id=wid, start=ImagePoint(*a), end=ImagePoint(*b),
                                  kind=WallKind.EXTERNAL, storey=s))
        for k, (a, b) in enumerate(internal_segs):
            walls.append(WallSpec(id=f"wall{n_ext + k + 1}_floor{s}",
                                  start=ImagePoint(*a), end=ImagePoint(*b),
                                  kind=WallKind.INTERNAL, storey=s))

        win_no = 0
        for edge_idx, t in window_sites:
            win_no += 1
            openings.append(OpeningSpec(id=f"window{win_no}_floor{s}",
                                        host_wall=ext_ids[edge_idx], t=t,
                                        kind=OpeningKind.WINDOW,
                                        width=WINDOW_WIDTH_MM))
        door_no = 0
        if s == 1:
            door_no += 1
            e_idx, e_t = entrance_site
            openings.append(OpeningSpec(id=f"door{door_no}_floor{s}",
                                        host_wall=ext_ids[e_idx], t=e_t,
                                        kind=OpeningKind.DOOR,
                                        width=DOOR_WIDTH_MM))
        for k in range(len(internal_segs)):
            door_no += 1
            openings.append(OpeningSpec(id=f"door{door_no}_floor{s}",
                                        host_wall=f"wall{n_ext + k + 1}_floor{s}",
                                        t=0.5, kind=OpeningKind.DOOR,
                                        width=DOOR_WIDTH_MM))

    model = FloorplanModel(canvas=canvas, storeys=storeys_spec,
                           walls=tuple(walls), openings=tuple(openings), roof=roof)
    problems = validate_floorplan(model)
    if problems:
        raise SynthesisError(f"internal synthesis defect: {problems[:3]}")
    return model


def _slice_centers(layout: _Layout) -> list[tuple[float, float]]:
    """(center x nudged off vertices, slice width) per room, left to right."""
    out = []
    for lo, hi in layout.slices():
        cx = _away_from_vertices(layout.poly, round((lo + hi) / 2))
        out.append((cx, hi - lo))
    return out


def _entrance_site(poly, edges, window_sites) -> tuple[int, float]:
    """Entrance defined as the lexicographically lowest (y, x) opening site."""
    min_y = min(p[1] for p in poly)
    candidates = [(i, (a, b)) for i, (a, b) in enumerate(edges)
                  if a[1] == min_y and b[1] == min_y]
    if not candidates:
        raise SynthesisError("footprint has no horizontal top edge")
    idx, (a, b) = min(candidates, key=lambda e: min(e[1][0][0], e[1][1][0]))
    left = min(a[0], b[0])
    x = left + ENTRANCE_INSET_PX
    # Stay left of every window on the same edge so the entrance wins the
    # lowest-(y, x) convention.
    same_edge = [t for e, t in window_sites if e == idx]
    if same_edge:
        ea, eb = edges[idx]
        win_xs = [ea[0] + t * (eb[0] - ea[0]) for t in same_edge]
        limit = min(win_xs)
        if x >= limit:
            x = (left + limit) / 2
    t = _edge_point_t(a, b, (x, min_y))
    return idx, min(max(t, 0.01), 0.99)


def synthesize_floorplan(task: DesignTask, seed: int) -> FloorplanModel:
    """Deterministic floorplan for a task: footprint outline plus vertically
    sliced rooms, each with a window; one entrance door on storey 1."""
    rng = random.Random(f"{task.id}|{seed}")
    poly = footprint_polygon(task.footprint)
    layout = _Layout(poly=poly, split_xs=tuple(_split_positions(poly, task.rooms, rng)))
    return _build_model(DEFAULT_CANVAS, layout, task.storeys)


def _recover_layout(fp: FloorplanModel) -> _Layout:
    """Rebuild the slice structure of a plan produced by this module."""
    ext = [w for w in fp.storey_walls(1) if w.kind is WallKind.EXTERNAL]
    poly_pts = []
    for w in ext:
        poly_pts.append((round(w.start.x), round(w.start.y)))
    # Walls were emitted in edge order, so starts already trace the polygon.
    internal = [w for w in fp.storey_walls(1) if w.kind is WallKind.INTERNAL]
    xs = sorted({round(w.start.x) for w in internal})
    return _Layout(poly=tuple(poly_pts), split_xs=tuple(xs))


def room_count(fp: FloorplanModel) -> int:
    return len(_recover_layout(fp).slices())


def _resolve_room(layout: _Layout, target: str | None) -> int:
    slices = layout.slices()
    if target in (None, "largest", "biggest"):
        widths = [hi - lo for lo, hi in slices]
        return widths.index(max(widths))
    if target is not None and target.startswith("room"):
        try:
            k = int(target[4:])
        except ValueError:
            raise ModificationError(f"unknown room id {target!r}") from None
        if 1 <= k <= len(slices):
            return k - 1
    raise ModificationError(f"unknown room id {target!r}")


def _room_for_hint(layout: _Layout, hint: str | None) -> int:
    slices = layout.slices()
    if hint:
        h = hint.lower()
        if "left" in h:
            return 0
        if "right" in h:
            return len(slices) - 1
        if "middle" in h or "center" in h or "centre" in h:
            return len(slices) // 2
    widths = [hi - lo for lo, hi in slices]
    return widths.index(max(widths))


def apply_modifications(fp: FloorplanModel,
                        mods: Iterable[Modification]) -> FloorplanModel:
    """Apply room add/split/remove edits; openings are regenerated so the
    result always validates."""
    mods = tuple(mods)
    if not mods:
        return fp
    layout = _recover_layout(fp)
    xs = list(layout.split_xs)
    for mod in mods:
        layout = _Layout(poly=layout.poly, split_xs=tuple(sorted(xs)))
        slices = layout.slices()
        if mod.kind in (ModKind.ADD_ROOM, ModKind.SPLIT_ROOM):
            idx = (_room_for_hint(layout, mod.location)
                   if mod.kind is ModKind.ADD_ROOM
                   else _resolve_room(layout, mod.target))
            lo, hi = slices[idx]
            if (hi - lo) / 2 < MIN_ROOM_WIDTH:
                raise ModificationError(
                    f"room{idx + 1} is too narrow to split ({hi - lo:.0f} px)")
            xs.append(int(_away_from_vertices(layout.poly, round((lo + hi) / 2))))
        elif mod.kind is ModKind.REMOVE_ROOM:
            if len(slices) == 1:
                raise ModificationError("cannot remove the only room")
            idx = _resolve_room(layout, mod.target)
            # Merge with the right neighbour when one exists, else the left.
            xs.remove(layout.split_xs[idx] if idx < len(xs) else layout.split_xs[-1])
        else:  # pragma: no cover - enum is closed
            raise ModificationError(f"unsupported modification {mod.kind}")
    final = _Layout(poly=layout.poly, split_xs=tuple(sorted(xs)))
    return _build_model(fp.canvas, final, len(fp.storeys), fp.roof)


# ---------------------------------------------------------------------------
# Sketch raster
# ---------------------------------------------------------------------------

STROKE_PX = 4
WHITE = (255, 255, 255)
INK = (0, 0, 0)
DOOR_TICK = (200, 30, 30)
WINDOW_TICK = (30, 60, 200)


@dataclass(frozen=True)
class SketchRaster:
    width: int
    height: int
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError("pixel array does not match declared dimensions")


class Axis(Enum):
    H = "H"
    V = "V"
    DIAGONAL = "Diagonal"


@dataclass(frozen=True)
class WallRun:
    start: ImagePoint
    end: ImagePoint
    axis: Axis


@dataclass(frozen=True)
class OpeningMark:
    point: ImagePoint
    hint: OpeningKind


@dataclass(frozen=True)
class SegmentSet:
    wall_runs: tuple[WallRun, ...]
    opening_marks: tuple[OpeningMark, ...]


def _wall_axis(w: WallSpec) -> Axis:
    if round(w.start.y) == round(w.end.y):
        return Axis.H
    if round(w.start.x) == round(w.end.x):
        return Axis.V
    return Axis.DIAGONAL


def _stamp(pixels: np.ndarray, x0: int, y0: int, x1: int, y1: int, color) -> None:
    h, w = pixels.shape[:2]
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, w), min(y1, h)
    if x0 < x1 and y0 < y1:
        pixels[y0:y1, x0:x1] = color


def render_sketch(fp: FloorplanModel) -> SketchRaster:
    """Rasterize storey 1 as a synthetic hand sketch: 4 px black wall strokes,
    red door ticks, blue window ticks on white."""
    g = fp.canvas
    pixels = np.full((g.h_img, g.w_img, 3), 255, dtype=np.uint8)
    half = STROKE_PX // 2
    walls = {w.id: w for w in fp.walls}

    for w in fp.storey_walls(1):
        ax, ay = round(w.start.x), round(w.start.y)
        bx, by = round(w.end.x), round(w.end.y)
        axis = _wall_axis(w)
        if axis is Axis.H:
            lo, hi = min(ax, bx), max(ax, bx)
            _stamp(pixels, lo - half, ay - half, hi + half, ay + half, INK)
        elif axis is Axis.V:
            lo, hi = min(ay, by), max(ay, by)
            _stamp(pixels, ax - half, lo - half, ax + half, hi + half, INK)
        else:
            length = math.hypot(bx - ax, by - ay)
            steps = int(length * 2) + 1
            for i in range(steps + 1):
                t = i / steps
                px = round(ax + t * (bx - ax))
                py = round(ay + t * (by - ay))
                _stamp(pixels, px - half, py - half, px + half, py + half, INK)

    for o in fp.storey_openings(1):
        host = walls[o.host_wall]
        p = host.point_at(o.t)
        px, py = round(p.x), round(p.y)
        color = DOOR_TICK if o.kind is OpeningKind.DOOR else WINDOW_TICK
        axis = _wall_axis(host)
        if axis is Axis.H:
            _stamp(pixels, px - half, py - 2 * half, px + half, py + 2 * half, color)
        elif axis is Axis.V:
            _stamp(pixels, px - 2 * half, py - half, px + 2 * half, py + half, color)
        else:
            _stamp(pixels, px - 3, py - 3, px + 3, py + 3, color)

    return SketchRaster(width=g.w_img, height=g.h_img, pixels=pixels)


def raster_to_ppm(raster: SketchRaster) -> bytes:
    header = f"P6\n{raster.width} {raster.height}\n255\n".encode("ascii")
    return header + raster.pixels.tobytes()


def raster_from_ppm(data: bytes) -> SketchRaster:
    if not data.startswith(b"P6"):
        raise ValueError("not a binary PPM (P6) stream")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError("only maxval 255 supported")
    raw = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=pos)
    return SketchRaster(width=width, height=height,
                        pixels=raw.reshape(height, width, 3).copy())


# ---------------------------------------------------------------------------
# Segmentation (run-length extraction; axis-aligned plans only)
# ---------------------------------------------------------------------------

MIN_RUN_PX = 12


def _runs_in_line(mask_line: np.ndarray) -> list[tuple[int, int]]:
    idx = np.flatnonzero(mask_line)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [idx.size - 1]))
    return [(int(idx[s]), int(idx[e]) + 1) for s, e in zip(starts, ends)
            if idx[e] + 1 - idx[s] >= MIN_RUN_PX]


def _grouped_runs(mask: np.ndarray) -> list[tuple[int, int, int, int]]:
    """(line_start, line_count, a, b) for identical runs on consecutive lines."""
    open_groups: dict[tuple[int, int], int] = {}
    out = []
    n_lines = mask.shape[0]
    for line in range(n_lines + 1):
        runs = set(_runs_in_line(mask[line])) if line < n_lines else set()
        for key in list(open_groups):
            if key not in runs:
                out.append((open_groups.pop(key), line, *key))
        for key in runs:
            open_groups.setdefault(key, line)
    return [(s, e - s, a, b) for s, e, a, b in out]


def segment_sketch(raster: SketchRaster) -> SegmentSet:
    """Recover axis-aligned wall runs and colour-keyed opening marks."""
    px = raster.pixels.astype(np.int16)
    r, g, b = px[:, :, 0], px[:, :, 1], px[:, :, 2]
    dark = (r < 100) & (g < 100) & (b < 100)
    red = (r > 150) & (g < 100) & (b < 100)
    blue = (b > 150) & (r < 100) & (g < 100)
    ink = dark | red | blue

    half = STROKE_PX // 2
    runs: list[WallRun] = []
    for y0, h, a, bx in _grouped_runs(ink):
        if 3 <= h <= 6:
            yc = y0 + h // 2
            runs.append(WallRun(ImagePoint(a + half, yc), ImagePoint(bx - half, yc),
                                Axis.H))
    for x0, w, a, by in _grouped_runs(ink.T):
        if 3 <= w <= 6:
            xc = x0 + w // 2
            runs.append(WallRun(ImagePoint(xc, a + half), ImagePoint(xc, by - half),
                                Axis.V))
    runs.sort(key=lambda r: (r.start.y, r.start.x, r.end.y, r.end.x))

    marks = []
    for mask, kind in ((red, OpeningKind.DOOR), (blue, OpeningKind.WINDOW)):
        for cy, cx in _blob_centroids(mask):
            marks.append(OpeningMark(ImagePoint(cx, cy), kind))
    marks.sort(key=lambda m: (m.point.y, m.point.x))
    return SegmentSet(wall_runs=tuple(runs), opening_marks=tuple(marks))


def _blob_centroids(mask: np.ndarray) -> list[tuple[float, float]]:
    seen = np.zeros_like(mask, dtype=bool)
    out = []
    ys, xs = np.nonzero(mask)
    for y, x in zip(ys.tolist(), xs.tolist()):
        if seen[y, x]:
            continue
        stack = [(y, x)]
        seen[y, x] = True
        py, px_, n = 0.0, 0.0, 0
        while stack:
            cy, cx = stack.pop()
            py += cy
            px_ += cx
            n += 1
            for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ny, nx = cy + dy, cx + dx
                if (0 <= ny < mask.shape[0] and 0 <= nx < mask.shape[1]
                        and mask[ny, nx] and not seen[ny, nx]):
                    seen[ny, nx] = True
                    stack.append((ny, nx))
        out.append((py / n, px_ / n))
    return out


def segments_from_floorplan(fp: FloorplanModel) -> SegmentSet:
    """Structured-metadata path: a segment set lifted directly from storey 1,
    used for diagonal footprints that bypass raster segmentation."""
    walls = {w.id: w for w in fp.walls}
    runs = tuple(WallRun(w.start, w.end, _wall_axis(w))
                 for w in fp.storey_walls(1))
    marks = tuple(OpeningMark(walls[o.host_wall].point_at(o.t),
                              o.kind)
                  for o in fp.storey_openings(1))
    return SegmentSet(wall_runs=runs, opening_marks=marks)


# ---------------------------------------------------------------------------
# Interpretation
# ---------------------------------------------------------------------------

SNAP_TOLERANCE = 3.0
HOST_TOLERANCE = 6.0


def _point_segment_distance(p: ImagePoint, a: ImagePoint, b: ImagePoint) -> float:
    dx, dy = b.x - a.x, b.y - a.y
    length2 = dx * dx + dy * dy
    if length2 == 0:
        return math.hypot(p.x - a.x, p.y - a.y)
    t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / length2
    t = min(max(t, 0.0), 1.0)
    return math.hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy))


def _snap_nodes(runs) -> list[tuple[int, int]]:
    """Node index per run endpoint (2 per run), merged within tolerance."""
    nodes: list[tuple[float, float]] = []
    assignment = []
    for run in runs:
        for p in (run.start, run.end):
            for i, (nx, ny) in enumerate(nodes):
                if math.hypot(p.x - nx, p.y - ny) <= SNAP_TOLERANCE:
                    assignment.append(i)
                    break
            else:
                nodes.append((p.x, p.y))
                assignment.append(len(nodes) - 1)
    return [ (assignment[2 * i], assignment[2 * i + 1]) for i in range(len(runs)) ]


def interpret_floorplan(segments: SegmentSet, canvas: CanvasGeometry,
                        storeys: int) -> FloorplanModel:
    """Classify runs into external/internal walls, type the openings, and
    replicate the layout across the requested storeys."""
    runs = list(segments.wall_runs)
    if not runs:
        raise InterpretationError("no wall runs to interpret", [])
    endpoints = _snap_nodes(runs)

    active = set(range(len(runs)))
    removed: list[int] = []
    while True:
        degree: dict[int, int] = {}
        for i in active:
            for node in endpoints[i]:
                degree[node] = degree.get(node, 0) + 1
        dangling = [i for i in sorted(active)
                    if any(degree[n] < 2 for n in endpoints[i])]
        if not dangling:
            break
        for i in dangling:
            active.remove(i)
            removed.append(i)
    if not active:
        raise InterpretationError(
            "segments contain no closed boundary cycle", sorted(removed))

    # Connected components of the remaining cycle set; the one with the
    # largest bounding box is the outer boundary.
    comp_of: dict[int, int] = {}
    comps: list[list[int]] = []
    for i in sorted(active):
        if i in comp_of:
            continue
        comp = [i]
        comp_of[i] = len(comps)
        frontier = [i]
        while frontier:
            j = frontier.pop()
            for k in active:
                if k in comp_of:
                    continue
                if set(endpoints[j]) & set(endpoints[k]):
                    comp_of[k] = len(comps)
                    comp.append(k)
                    frontier.append(k)
        comps.append(comp)

    def bbox_area(comp: list[int]) -> float:
        xs = [c for i in comp for c in (runs[i].start.x, runs[i].end.x)]
        ys = [c for i in comp for c in (runs[i].start.y, runs[i].end.y)]
        return (max(xs) - min(xs)) * (max(ys) - min(ys))

    outer = max(range(len(comps)), key=lambda c: (bbox_area(comps[c]), -c))
    external = set(comps[outer])

    order = sorted(external) + sorted(set(range(len(runs))) - external)
    storeys_spec = tuple(
        StoreySpec(index=s, name=f"{s:02d}-Floor", elevation=(s - 1) * 3000.0,
                   wall_height=3000.0)
        for s in range(1, storeys + 1))

    walls: list[WallSpec] = []
    id_for_run: dict[int, dict[int, str]] = {s: {} for s in range(1, storeys + 1)}
    for s in range(1, storeys + 1):
        for seq, run_idx in enumerate(order):
            run = runs[run_idx]
            wid = f"wall{seq + 1}_floor{s}"
            id_for_run[s][run_idx] = wid
            walls.append(WallSpec(id=wid, start=run.start, end=run.end,
                                  kind=(WallKind.EXTERNAL if run_idx in external
                                        else WallKind.INTERNAL),
                                  storey=s))

    # Host assignment and kind rule: internal -> door, external -> window,
    # except the lowest-(y, x) external mark on storey 1, which is the entrance.
    placed: list[tuple[int, float, ImagePoint, bool]] = []
    for mark in segments.opening_marks:
        best, best_d = None, HOST_TOLERANCE + 1
        for i, run in enumerate(runs):
            d = _point_segment_distance(mark.point, run.start, run.end)
            if d < best_d:
                best, best_d = i, d
        if best is None or best_d > HOST_TOLERANCE:
            continue
        run = runs[best]
        t = _edge_point_t((run.start.x, run.start.y), (run.end.x, run.end.y),
                          (mark.point.x, mark.point.y))
        t = min(max(t, 0.02), 0.98)
        placed.append((best, t, mark.point, best in external))

    entrance_key = None
    ext_marks = [(p.y, p.x) for (_, _, p, is_ext) in placed if is_ext]
    if ext_marks:
        entrance_key = min(ext_marks)

    openings: list[OpeningSpec] = []
    for s in range(1, storeys + 1):
        win_no = door_no = 0
        for run_idx, t, point, is_ext in placed:
            is_entrance = (is_ext and s == 1 and entrance_key == (point.y, point.x))
            if is_ext and not is_entrance:
                kind = OpeningKind.WINDOW
            else:
                kind = OpeningKind.DOOR
            if kind is OpeningKind.WINDOW:
                win_no += 1
                oid = f"window{win_no}_floor{s}"
                width = WINDOW_WIDTH_MM
            else:
                door_no += 1
                oid = f"door{door_no}_floor{s}"
                width = DOOR_WIDTH_MM
            openings.append(OpeningSpec(id=oid, host_wall=id_for_run[s][run_idx],
                                        t=t, kind=kind, width=width))

    return FloorplanModel(canvas=canvas, storeys=storeys_spec, walls=tuple(walls),
                          openings=tuple(openings), roof=RoofSpec())


# ---------------------------------------------------------------------------
# Task files
# ---------------------------------------------------------------------------

def task_to_obj(task: DesignTask) -> dict[str, Any]:
    return {
        "id": task.id,
        "modality": task.modality.value,
        "footprint": task.footprint.value,
        "storeys": task.storeys,
        "rooms": task.rooms,
        "modifications": [
            {"kind": m.kind.value, "target": m.target, "location": m.location}
            for m in task.modifications
        ],
        "prose": task.prose,
    }


def task_from_obj(o: dict[str, Any]) -> DesignTask:
    return DesignTask(
        id=o["id"], modality=Modality(o["modality"]),
        footprint=Footprint(o["footprint"]), storeys=o["storeys"],
        rooms=o["rooms"],
        modifications=tuple(Modification(kind=ModKind(m["kind"]),
                                         target=m.get("target"),
                                         location=m.get("location"))
                            for m in o.get("modifications", [])),
        prose=o.get("prose", ""),
    )


def task_to_json(task: DesignTask) -> bytes:
    return canonical_json(task_to_obj(task))
