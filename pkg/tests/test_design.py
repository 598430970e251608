"""Tests for floorplan synthesis, sketch round-trip, and interpretation."""

import math
import random

import numpy as np
import pytest

from bimpilot.core import (
    DEFAULT_CANVAS,
    ImagePoint,
    OpeningKind,
    WallKind,
    floorplan_to_json,
    validate_floorplan,
)
from bimpilot.design import (
    Axis,
    DesignTask,
    Footprint,
    InterpretationError,
    Modality,
    ModKind,
    Modification,
    ModificationError,
    OpeningMark,
    SegmentSet,
    SketchRaster,
    SynthesisError,
    WallRun,
    apply_modifications,
    interpret_floorplan,
    raster_from_ppm,
    raster_to_ppm,
    render_sketch,
    room_count,
    segment_sketch,
    segments_from_floorplan,
    synthesize_floorplan,
    task_from_obj,
    task_to_obj,
)


def make_task(footprint=Footprint.RECTANGLE, storeys=1, rooms=2,
              modality=Modality.TEXT_ONLY, mods=(), task_id="t1"):
    return DesignTask(id=task_id, modality=modality, footprint=footprint,
                      storeys=storeys, rooms=rooms, modifications=tuple(mods),
                      prose="")


class TestSynthesize:
    def test_hexagon_four_rooms(self):
        fp = synthesize_floorplan(make_task(Footprint.HEXAGON, rooms=4), seed=1)
        ext = [w for w in fp.walls if w.kind is WallKind.EXTERNAL]
        internal = [w for w in fp.walls if w.kind is WallKind.INTERNAL]
        assert len(ext) == 6
        assert len(internal) >= 3
        assert room_count(fp) == 4
        doors = [o for o in fp.openings if o.kind is OpeningKind.DOOR]
        windows = [o for o in fp.openings if o.kind is OpeningKind.WINDOW]
        assert len(windows) >= 4
        assert len(doors) >= 4  # entrance plus one per internal wall

    def test_octagon_eight_external(self):
        fp = synthesize_floorplan(make_task(Footprint.OCTAGON, rooms=4), seed=3)
        assert sum(w.kind is WallKind.EXTERNAL for w in fp.walls) == 8

    def test_single_room_rectangle(self):
        fp = synthesize_floorplan(make_task(rooms=1), seed=0)
        assert sum(w.kind is WallKind.EXTERNAL for w in fp.walls) == 4
        assert sum(w.kind is WallKind.INTERNAL for w in fp.walls) == 0
        doors = [o for o in fp.openings if o.kind is OpeningKind.DOOR]
        assert len(doors) == 1  # the entrance

    def test_exactly_one_entrance_on_storey_one(self):
        fp = synthesize_floorplan(make_task(storeys=3, rooms=3), seed=5)
        walls = {w.id: w for w in fp.walls}
        ext_doors = [o for o in fp.openings
                     if o.kind is OpeningKind.DOOR
                     and walls[o.host_wall].kind is WallKind.EXTERNAL]
        assert len(ext_doors) == 1
        assert walls[ext_doors[0].host_wall].storey == 1

    def test_entrance_is_lowest_yx_external_opening(self):
        for fpname in Footprint:
            fp = synthesize_floorplan(make_task(fpname, rooms=3), seed=9)
            walls = {w.id: w for w in fp.walls}
            ext = [(o, walls[o.host_wall]) for o in fp.storey_openings(1)
                   if walls[o.host_wall].kind is WallKind.EXTERNAL]
            keyed = sorted(((w.point_at(o.t).y, w.point_at(o.t).x), o.kind)
                           for o, w in ext)
            assert keyed[0][1] is OpeningKind.DOOR, fpname

    def test_every_room_has_door_and_window(self):
        fp = synthesize_floorplan(make_task(Footprint.HEXAGON, rooms=4), seed=1)
        walls = {w.id: w for w in fp.walls}
        internal_xs = sorted(w.start.x for w in fp.storey_walls(1)
                             if w.kind is WallKind.INTERNAL)
        bounds = [280.0, *internal_xs, 680.0]
        for k in range(4):
            lo, hi = bounds[k], bounds[k + 1]
            has_window = any(
                lo <= walls[o.host_wall].point_at(o.t).x <= hi
                for o in fp.storey_openings(1) if o.kind is OpeningKind.WINDOW)
            assert has_window, f"room {k + 1} lacks a window"
        # Every internal wall carries a door, so all four rooms are reachable.
        internal_ids = {w.id for w in fp.storey_walls(1)
                        if w.kind is WallKind.INTERNAL}
        doored = {o.host_wall for o in fp.storey_openings(1)
                  if o.kind is OpeningKind.DOOR}
        assert internal_ids <= doored

    @pytest.mark.parametrize("footprint", list(Footprint))
    @pytest.mark.parametrize("storeys", [1, 2, 3])
    def test_synthesized_plans_validate(self, footprint, storeys):
        for rooms in (1, 2, 4):
            fp = synthesize_floorplan(
                make_task(footprint, storeys=storeys, rooms=rooms), seed=11)
            assert validate_floorplan(fp) == []

    def test_deterministic_bytes(self):
        task = make_task(Footprint.H_SHAPE, storeys=2, rooms=5)
        a = floorplan_to_json(synthesize_floorplan(task, seed=42))
        b = floorplan_to_json(synthesize_floorplan(task, seed=42))
        assert a == b

    def test_infeasible_room_count(self):
        with pytest.raises(SynthesisError):
            synthesize_floorplan(make_task(rooms=13), seed=0)

    def test_identical_layout_per_storey(self):
        fp = synthesize_floorplan(make_task(storeys=2, rooms=3), seed=2)
        for w1 in fp.storey_walls(1):
            twin = w1.id.replace("floor1", "floor2")
            w2 = fp.wall_by_id(twin)
            assert w2 is not None
            assert (w1.start, w1.end, w1.kind) == (w2.start, w2.end, w2.kind)


class TestModifications:
    def test_empty_modifications_identity(self):
        fp = synthesize_floorplan(make_task(rooms=3), seed=1)
        assert apply_modifications(fp, ()) is fp

    def test_add_two_rooms_h_shape(self):
        task = make_task(Footprint.H_SHAPE, rooms=6,
                         modality=Modality.SKETCH_MODIFIED)
        fp = synthesize_floorplan(task, seed=4)
        out = apply_modifications(fp, (
            Modification(ModKind.ADD_ROOM, location="left block"),
            Modification(ModKind.ADD_ROOM, location="right block"),
        ))
        assert room_count(out) == 8
        assert validate_floorplan(out) == []

    def test_split_largest_room(self):
        fp = synthesize_floorplan(make_task(rooms=3), seed=7)
        out = apply_modifications(
            fp, (Modification(ModKind.SPLIT_ROOM, target="largest"),))
        assert room_count(out) == 4
        assert validate_floorplan(out) == []

    def test_remove_room(self):
        fp = synthesize_floorplan(make_task(rooms=3), seed=7)
        out = apply_modifications(
            fp, (Modification(ModKind.REMOVE_ROOM, target="room2"),))
        assert room_count(out) == 2

    def test_unknown_room_rejected(self):
        fp = synthesize_floorplan(make_task(rooms=2), seed=7)
        with pytest.raises(ModificationError):
            apply_modifications(
                fp, (Modification(ModKind.REMOVE_ROOM, target="room9"),))

    def test_remove_only_room_rejected(self):
        fp = synthesize_floorplan(make_task(rooms=1), seed=7)
        with pytest.raises(ModificationError):
            apply_modifications(
                fp, (Modification(ModKind.REMOVE_ROOM, target="room1"),))


def union_area(rects):
    """Grid-compression area of a rectangle union (independent oracle)."""
    xs = sorted({x for r in rects for x in (r[0], r[2])})
    ys = sorted({y for r in rects for y in (r[1], r[3])})
    area = 0
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            cx = (xs[i] + xs[i + 1]) / 2
            cy = (ys[j] + ys[j + 1]) / 2
            if any(r[0] <= cx <= r[2] and r[1] <= cy <= r[3] for r in rects):
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j])
    return area


def stroke_rects(fp):
    """Stroke rectangles [x0, y0, x1, y1) for axis-aligned storey-1 walls."""
    out = []
    for w in fp.storey_walls(1):
        ax, ay, bx, by = w.start.x, w.start.y, w.end.x, w.end.y
        if ay == by:
            out.append((min(ax, bx) - 2, ay - 2, max(ax, bx) + 2, ay + 2))
        elif ax == bx:
            out.append((ax - 2, min(ay, by) - 2, ax + 2, max(ay, by) + 2))
    return out


def tick_rects(fp):
    walls = {w.id: w for w in fp.walls}
    out = []
    for o in fp.storey_openings(1):
        host = walls[o.host_wall]
        p = host.point_at(o.t)
        px, py = round(p.x), round(p.y)
        if host.start.y == host.end.y:
            out.append((px - 2, py - 4, px + 2, py + 4))
        else:
            out.append((px - 4, py - 2, px + 4, py + 2))
    return out


class TestRenderSketch:
    def test_black_pixel_count_matches_analytic_area(self):
        fp = synthesize_floorplan(make_task(rooms=1), seed=0)
        raster = render_sketch(fp)
        black = int(((raster.pixels == 0).all(axis=2)).sum())
        strokes = stroke_rects(fp)
        ticks = tick_rects(fp)
        covered = union_area(strokes)
        # Ticks repaint part of the strokes; subtract each overlap.
        overlap = union_area(strokes) + union_area(ticks) - union_area(strokes + ticks)
        assert black == covered - overlap

    def test_empty_storey_renders_white(self):
        fp = synthesize_floorplan(make_task(rooms=1), seed=0)
        empty = fp.__class__(canvas=fp.canvas, storeys=fp.storeys, walls=(),
                             openings=(), roof=None)
        raster = render_sketch(empty)
        assert (raster.pixels == 255).all()

    def test_injective_over_axis_aligned_fixture_set(self):
        plans = []
        for footprint in (Footprint.RECTANGLE, Footprint.H_SHAPE, Footprint.L_SHAPE):
            for rooms in (1, 2, 3, 4):
                plans.append(synthesize_floorplan(
                    make_task(footprint, rooms=rooms,
                              task_id=f"{footprint.value}-{rooms}"), seed=rooms))
        for footprint in (Footprint.RECTANGLE, Footprint.L_SHAPE):
            for seed in (101, 202, 303, 404):
                plans.append(synthesize_floorplan(
                    make_task(footprint, rooms=5,
                              task_id=f"{footprint.value}-j{seed}"), seed=seed))
        assert len(plans) == 20
        blobs = [render_sketch(fp).pixels.tobytes() for fp in plans]
        assert len(set(blobs)) == len(blobs)

    def test_ppm_round_trip(self):
        fp = synthesize_floorplan(make_task(rooms=2), seed=1)
        raster = render_sketch(fp)
        data = raster_to_ppm(raster)
        assert data.startswith(b"P6\n960 640\n255\n")
        again = raster_from_ppm(data)
        assert (again.pixels == raster.pixels).all()


class TestSegmentSketch:
    def test_two_room_rectangle_round_trip(self):
        fp = synthesize_floorplan(make_task(rooms=2), seed=1)
        segs = segment_sketch(render_sketch(fp))
        assert len(segs.wall_runs) == 5
        sources = [(w.start, w.end) for w in fp.storey_walls(1)]
        for run in segs.wall_runs:
            # Match each run against its nearest source wall, endpoint-wise.
            errs = []
            for s, e in sources:
                pairs = [(s, e), (e, s)]
                errs.append(min(
                    max(math.hypot(run.start.x - a.x, run.start.y - a.y),
                        math.hypot(run.end.x - b.x, run.end.y - b.y))
                    for a, b in pairs))
            assert min(errs) <= 2.0

    def test_opening_count_and_hints_preserved(self):
        fp = synthesize_floorplan(make_task(rooms=2), seed=1)
        segs = segment_sketch(render_sketch(fp))
        want = sorted(o.kind.value for o in fp.storey_openings(1))
        got = sorted(m.hint.value for m in segs.opening_marks)
        assert got == want

    def test_all_white_raster_empty(self):
        raster = SketchRaster(100, 80, np.full((80, 100, 3), 255, dtype=np.uint8))
        segs = segment_sketch(raster)
        assert segs.wall_runs == () and segs.opening_marks == ()

    def test_single_red_tick_yields_door_hint(self):
        pixels = np.full((200, 200, 3), 255, dtype=np.uint8)
        pixels[98:102, 48:152] = (0, 0, 0)          # horizontal wall stroke
        pixels[96:104, 98:102] = (200, 30, 30)      # door tick
        segs = segment_sketch(SketchRaster(200, 200, pixels))
        assert len(segs.opening_marks) == 1
        assert segs.opening_marks[0].hint is OpeningKind.DOOR


def convex_hull(points):
    """Andrew's monotone chain; returns hull vertices counter-clockwise."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def on_hull_edge(hull, a, b):
    n = len(hull)
    for i in range(n):
        p, q = hull[i], hull[(i + 1) % n]
        def collinear(r):
            return abs((q[0] - p[0]) * (r[1] - p[1])
                       - (q[1] - p[1]) * (r[0] - p[0])) < 1e-6
        if collinear(a) and collinear(b):
            return True
    return False


HEXAGON = [(280, 320), (380, 147), (580, 147), (680, 320), (580, 493), (380, 493)]


def hexagon_runs():
    runs = []
    for i in range(6):
        a, b = HEXAGON[i], HEXAGON[(i + 1) % 6]
        runs.append(WallRun(ImagePoint(*a), ImagePoint(*b),
                            Axis.DIAGONAL if a[1] != b[1] and a[0] != b[0]
                            else (Axis.H if a[1] == b[1] else Axis.V)))
    return runs


class TestInterpret:
    def test_hexagon_with_cross_wall(self):
        runs = hexagon_runs() + [WallRun(ImagePoint(480, 147), ImagePoint(480, 493),
                                         Axis.V)]
        fp = interpret_floorplan(SegmentSet(tuple(runs), ()), DEFAULT_CANVAS, 1)
        ext = [w for w in fp.walls if w.kind is WallKind.EXTERNAL]
        internal = [w for w in fp.walls if w.kind is WallKind.INTERNAL]
        assert (len(ext), len(internal)) == (6, 1)
        # Independent oracle: external walls are exactly those on the convex hull.
        pts = [(p.x, p.y) for r in runs for p in (r.start, r.end)]
        hull = convex_hull(pts)
        for w in fp.walls:
            expect_ext = on_hull_edge(hull, (w.start.x, w.start.y),
                                      (w.end.x, w.end.y))
            assert (w.kind is WallKind.EXTERNAL) == expect_ext

    def test_square_single_mark_becomes_entrance_door(self):
        square = [(100, 100), (300, 100), (300, 300), (100, 300)]
        runs = [WallRun(ImagePoint(*square[i]), ImagePoint(*square[(i + 1) % 4]),
                        Axis.H if square[i][1] == square[(i + 1) % 4][1] else Axis.V)
                for i in range(4)]
        marks = (OpeningMark(ImagePoint(200, 100), OpeningKind.WINDOW),)
        fp = interpret_floorplan(SegmentSet(tuple(runs), marks), DEFAULT_CANVAS, 1)
        assert len(fp.openings) == 1
        assert fp.openings[0].kind is OpeningKind.DOOR

    def test_two_boundary_one_interior_marks(self):
        square = [(100, 100), (300, 100), (300, 300), (100, 300)]
        runs = [WallRun(ImagePoint(*square[i]), ImagePoint(*square[(i + 1) % 4]),
                        Axis.H if square[i][1] == square[(i + 1) % 4][1] else Axis.V)
                for i in range(4)]
        runs.append(WallRun(ImagePoint(200, 100), ImagePoint(200, 300), Axis.V))
        marks = (OpeningMark(ImagePoint(150, 100), OpeningKind.DOOR),
                 OpeningMark(ImagePoint(250, 100), OpeningKind.WINDOW),
                 OpeningMark(ImagePoint(200, 200), OpeningKind.DOOR))
        fp = interpret_floorplan(SegmentSet(tuple(runs), marks), DEFAULT_CANVAS, 1)
        walls = {w.id: w for w in fp.walls}
        kinds = []
        for o in fp.openings:
            host = walls[o.host_wall]
            p = host.point_at(o.t)
            kinds.append(((round(p.y), round(p.x)), o.kind))
        kinds.sort()
        assert [k for _, k in kinds] == [OpeningKind.DOOR, OpeningKind.WINDOW,
                                         OpeningKind.DOOR]

    def test_no_cycle_reports_dangling_runs(self):
        runs = (WallRun(ImagePoint(0, 0), ImagePoint(100, 0), Axis.H),
                WallRun(ImagePoint(100, 0), ImagePoint(100, 100), Axis.V))
        with pytest.raises(InterpretationError) as exc:
            interpret_floorplan(SegmentSet(runs, ()), DEFAULT_CANVAS, 1)
        assert exc.value.dangling == [0, 1]

    def test_scale_invariant_classification(self):
        runs = hexagon_runs() + [WallRun(ImagePoint(480, 147), ImagePoint(480, 493),
                                         Axis.V)]
        fp1 = interpret_floorplan(SegmentSet(tuple(runs), ()), DEFAULT_CANVAS, 1)
        scaled = tuple(WallRun(ImagePoint(r.start.x * 0.5, r.start.y * 0.5),
                               ImagePoint(r.end.x * 0.5, r.end.y * 0.5), r.axis)
                       for r in runs)
        fp2 = interpret_floorplan(SegmentSet(scaled, ()), DEFAULT_CANVAS, 1)
        assert [w.kind for w in fp1.walls] == [w.kind for w in fp2.walls]

    def test_structured_metadata_path_round_trip(self):
        src = synthesize_floorplan(make_task(Footprint.OCTAGON, rooms=3), seed=6)
        fp = interpret_floorplan(segments_from_floorplan(src), src.canvas, 1)
        src_kinds = {(round(w.start.x), round(w.start.y),
                      round(w.end.x), round(w.end.y)): w.kind
                     for w in src.storey_walls(1)}
        for w in fp.walls:
            key = (round(w.start.x), round(w.start.y),
                   round(w.end.x), round(w.end.y))
            assert src_kinds[key] == w.kind


class TestTaskSerialization:
    def test_round_trip(self):
        task = make_task(Footprint.L_SHAPE, storeys=2, rooms=4,
                         modality=Modality.DATASET_MODIFIED,
                         mods=(Modification(ModKind.ADD_ROOM, location="right"),))
        again = task_from_obj(task_to_obj(task))
        assert again == task

    def test_modifications_require_modified_modality(self):
        with pytest.raises(ValueError):
            DesignTask(id="x", modality=Modality.SKETCH,
                       footprint=Footprint.RECTANGLE, storeys=1, rooms=2,
                       modifications=(Modification(ModKind.ADD_ROOM),))
