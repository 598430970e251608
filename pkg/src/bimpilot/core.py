"""Shared data model: floorplans, building documents, and coordinate mapping.

Three coordinate spaces appear throughout the package:

* image space  - floorplan raster pixels (floats allowed),
* GUI space    - integer screen pixels; the design panel sits at an offset
                 inside the application frame,
* document space - millimeters, at a fixed scale of 10 mm per GUI pixel.

All types are immutable values; operations are pure functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

MM_PER_GUI_PX = 10.0


class DomainError(ValueError):
    """Raised when an operation's input lies outside its stated domain."""


def round_half_away(v: float) -> int:
    """Round to nearest integer, halves away from zero (platform-stable)."""
    return int(math.floor(v + 0.5)) if v >= 0 else -int(math.floor(-v + 0.5))


@dataclass(frozen=True)
class ImagePoint:
    x: float
    y: float


@dataclass(frozen=True)
class GuiPoint:
    x: int
    y: int


@dataclass(frozen=True)
class CanvasGeometry:
    """Floorplan image resolution plus the design panel's place in the frame."""

    w_img: int
    h_img: int
    w_gui: int
    h_gui: int
    origin_x: int = 0
    origin_y: int = 0
    mm_per_gui_px: float = MM_PER_GUI_PX

    def __post_init__(self) -> None:
        if min(self.w_img, self.h_img, self.w_gui, self.h_gui) <= 0:
            raise DomainError("canvas dimensions must be positive")
        if self.origin_x < 0 or self.origin_y < 0:
            raise DomainError("panel origin must be non-negative")

    def contains_image(self, p: ImagePoint) -> bool:
        return 0 <= p.x <= self.w_img and 0 <= p.y <= self.h_img

    def contains_gui(self, q: GuiPoint) -> bool:
        return (self.origin_x <= q.x <= self.origin_x + self.w_gui
                and self.origin_y <= q.y <= self.origin_y + self.h_gui)

    def gui_to_mm(self, q: GuiPoint) -> tuple[float, float]:
        """Document coordinates of a panel point; scale is exact in GUI space."""
        return ((q.x - self.origin_x) * self.mm_per_gui_px,
                (q.y - self.origin_y) * self.mm_per_gui_px)

    def mm_to_gui(self, x_mm: float, y_mm: float) -> GuiPoint:
        return GuiPoint(self.origin_x + round_half_away(x_mm / self.mm_per_gui_px),
                        self.origin_y + round_half_away(y_mm / self.mm_per_gui_px))

    def image_to_mm(self, p: ImagePoint) -> tuple[float, float]:
        return (p.x * self.mm_per_gui_px * self.w_gui / self.w_img,
                p.y * self.mm_per_gui_px * self.h_gui / self.h_img)


# Default setup used across the package: a 1280x800 frame whose design panel
# sits at (160, 80) with size 960x640, fed by same-sized floorplan images so
# the image->GUI mapping is a pure offset.
DEFAULT_CANVAS = CanvasGeometry(w_img=960, h_img=640, w_gui=960, h_gui=640,
                                origin_x=160, origin_y=80)


def map_to_gui(p: ImagePoint, g: CanvasGeometry) -> GuiPoint:
    """Scale an image-space point into the GUI design panel."""
    if not (0 <= p.x <= g.w_img):
        raise DomainError(f"x_i={p.x} outside image width [0, {g.w_img}]")
    if not (0 <= p.y <= g.h_img):
        raise DomainError(f"y_i={p.y} outside image height [0, {g.h_img}]")
    return GuiPoint(g.origin_x + round_half_away(p.x / g.w_img * g.w_gui),
                    g.origin_y + round_half_away(p.y / g.h_img * g.h_gui))


def map_to_image(q: GuiPoint, g: CanvasGeometry) -> ImagePoint:
    """Inverse panel->image mapping; exact on the round trip from GUI points."""
    if not g.contains_gui(q):
        raise DomainError(f"({q.x},{q.y}) outside panel rectangle")
    return ImagePoint((q.x - g.origin_x) * g.w_img / g.w_gui,
                      (q.y - g.origin_y) * g.h_img / g.h_gui)


class WallKind(Enum):
    EXTERNAL = "External"
    INTERNAL = "Internal"


class OpeningKind(Enum):
    DOOR = "Door"
    WINDOW = "Window"


class RoofKind(Enum):
    HIP = "Hip"


@dataclass(frozen=True)
class WallSpec:
    id: str
    start: ImagePoint
    end: ImagePoint
    kind: WallKind
    thickness: float = 200.0
    height: float = 3000.0
    storey: int = 1

    def length_image(self) -> float:
        return math.hypot(self.end.x - self.start.x, self.end.y - self.start.y)

    def point_at(self, t: float) -> ImagePoint:
        return ImagePoint(self.start.x + t * (self.end.x - self.start.x),
                          self.start.y + t * (self.end.y - self.start.y))


@dataclass(frozen=True)
class OpeningSpec:
    id: str
    host_wall: str
    t: float
    kind: OpeningKind
    width: float = 900.0


@dataclass(frozen=True)
class StoreySpec:
    index: int
    name: str
    elevation: float
    wall_height: float = 3000.0


@dataclass(frozen=True)
class RoofSpec:
    pitch: float = 30.0
    kind: RoofKind = RoofKind.HIP


@dataclass(frozen=True)
class FloorplanModel:
    canvas: CanvasGeometry
    storeys: tuple[StoreySpec, ...]
    walls: tuple[WallSpec, ...]
    openings: tuple[OpeningSpec, ...]
    roof: RoofSpec | None = None

    def wall_by_id(self, wall_id: str) -> WallSpec | None:
        for w in self.walls:
            if w.id == wall_id:
                return w
        return None

    def storey_walls(self, storey: int) -> tuple[WallSpec, ...]:
        return tuple(w for w in self.walls if w.storey == storey)

    def storey_openings(self, storey: int) -> tuple[OpeningSpec, ...]:
        by_id = {w.id: w for w in self.walls}
        return tuple(o for o in self.openings
                     if o.host_wall in by_id and by_id[o.host_wall].storey == storey)


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str
    detail: str = ""


def _endpoint_key(p: ImagePoint) -> tuple[float, float]:
    return (round(p.x, 3), round(p.y, 3))


def validate_floorplan(fp: FloorplanModel) -> list[Violation]:
    """Check every structural invariant; violations are data, not failures."""
    out: list[Violation] = []
    walls = {w.id: w for w in fp.walls}

    for w in fp.walls:
        if _endpoint_key(w.start) == _endpoint_key(w.end):
            out.append(Violation("WallDegenerate", w.id, "start equals end"))
        if w.thickness <= 0:
            out.append(Violation("WallThickness", w.id, f"thickness={w.thickness}"))
        if w.height <= 0:
            out.append(Violation("WallHeight", w.id, f"height={w.height}"))
        for p in (w.start, w.end):
            if not fp.canvas.contains_image(p):
                out.append(Violation("PointOutOfBounds", w.id, f"({p.x},{p.y})"))

    for o in fp.openings:
        host = walls.get(o.host_wall)
        if host is None:
            out.append(Violation("OpeningHostMissing", o.id, o.host_wall))
            continue
        if not (0 < o.t < 1):
            out.append(Violation("OpeningOutOfRange", o.id, f"t={o.t}"))
        gx, gy = fp.canvas.image_to_mm(ImagePoint(
            host.end.x - host.start.x, host.end.y - host.start.y))
        if o.width >= math.hypot(gx, gy):
            out.append(Violation("OpeningTooWide", o.id,
                                 f"width={o.width} vs wall {o.host_wall}"))

    indices = [s.index for s in fp.storeys]
    if indices != list(range(1, len(indices) + 1)):
        out.append(Violation("StoreyIndexGap", "storeys", f"indices={indices}"))
    prev = None
    for s in sorted(fp.storeys, key=lambda s: s.index):
        if s.index == 1 and s.elevation != 0:
            out.append(Violation("GroundElevationNonZero", str(s.index),
                                 f"elevation={s.elevation}"))
        if prev is not None and s.elevation <= prev:
            out.append(Violation("ElevationNotIncreasing", str(s.index),
                                 f"{s.elevation} after {prev}"))
        prev = s.elevation

    for s in fp.storeys:
        ext = [w for w in fp.storey_walls(s.index) if w.kind is WallKind.EXTERNAL]
        if not ext:
            out.append(Violation("ExternalBoundaryOpen", str(s.index), "no external walls"))
            continue
        degree: dict[tuple[float, float], int] = {}
        for w in ext:
            for p in (w.start, w.end):
                degree[_endpoint_key(p)] = degree.get(_endpoint_key(p), 0) + 1
        bad = [k for k, d in degree.items() if d != 2]
        if bad:
            out.append(Violation("ExternalBoundaryOpen", str(s.index),
                                 f"{len(bad)} endpoints without degree 2"))
    return out


class ElementKind(Enum):
    WALL = "Wall"
    SLAB = "Slab"
    DOOR = "Door"
    WINDOW = "Window"
    ROOF = "Roof"


KIND_ORDER = (ElementKind.WALL, ElementKind.SLAB, ElementKind.DOOR,
              ElementKind.WINDOW, ElementKind.ROOF)


@dataclass(frozen=True)
class Layer:
    index: int
    name: str
    elevation: float
    wall_height: float


@dataclass(frozen=True)
class Element:
    id: int
    kind: ElementKind
    layer: int
    geometry: tuple[tuple[float, float], ...]   # document millimeters
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class BuildingDocument:
    layers: tuple[Layer, ...]
    elements: tuple[Element, ...]

    def __post_init__(self) -> None:
        ids = [e.id for e in self.elements]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise DomainError("element ids must be strictly increasing")
        layer_ids = {l.index for l in self.layers}
        for e in self.elements:
            if e.layer not in layer_ids:
                raise DomainError(f"element {e.id} references missing layer {e.layer}")


@dataclass(frozen=True)
class Census:
    total: dict[str, int]
    by_layer: dict[int, dict[str, int]]

    def __getitem__(self, kind: ElementKind | str) -> int:
        key = kind.value if isinstance(kind, ElementKind) else kind
        return self.total[key]


def census(doc: BuildingDocument) -> Census:
    """Per-kind element counts, per layer and in total, deterministically keyed."""
    def fresh() -> dict[str, int]:
        return {k.value: 0 for k in KIND_ORDER}

    total = fresh()
    by_layer = {l.index: fresh() for l in sorted(doc.layers, key=lambda l: l.index)}
    for e in doc.elements:
        total[e.kind.value] += 1
        by_layer[e.layer][e.kind.value] += 1
    return Census(total=total, by_layer=by_layer)


# ---------------------------------------------------------------------------
# Canonical JSON: sorted keys, arrays ordered by id, floats at up to six
# significant digits, newline-terminated UTF-8. Equal values yield equal bytes.
# ---------------------------------------------------------------------------

def _fmt_number(v: float) -> str:
    if isinstance(v, bool):  # bool is an int subclass; keep it out of numbers
        raise TypeError("bool is not a JSON number here")
    if isinstance(v, int):
        return str(v)
    if math.isinf(v) or math.isnan(v):
        raise ValueError("non-finite numbers are not serializable")
    s = format(v, ".6g")
    return s


def _ser(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return _fmt_number(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, Enum):
        return _ser(v.value)
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_ser(x) for x in v) + "]"
    if isinstance(v, dict):
        items = sorted(v.items(), key=lambda kv: str(kv[0]))
        return "{" + ",".join(json.dumps(str(k), ensure_ascii=False) + ":" + _ser(x)
                              for k, x in items) + "}"
    raise TypeError(f"cannot canonically serialize {type(v).__name__}")


def canonical_json(value: Any) -> bytes:
    """Serialize a JSON-like structure to canonical, newline-terminated bytes."""
    return (_ser(value) + "\n").encode("utf-8")


def canvas_to_obj(g: CanvasGeometry) -> dict[str, Any]:
    return {"w_img": g.w_img, "h_img": g.h_img, "w_gui": g.w_gui, "h_gui": g.h_gui,
            "origin_x": g.origin_x, "origin_y": g.origin_y,
            "mm_per_gui_px": g.mm_per_gui_px}


def canvas_from_obj(o: dict[str, Any]) -> CanvasGeometry:
    return CanvasGeometry(w_img=o["w_img"], h_img=o["h_img"], w_gui=o["w_gui"],
                          h_gui=o["h_gui"], origin_x=o["origin_x"],
                          origin_y=o["origin_y"],
                          mm_per_gui_px=o.get("mm_per_gui_px", MM_PER_GUI_PX))


def floorplan_to_obj(fp: FloorplanModel) -> dict[str, Any]:
    obj = {
        "canvas": canvas_to_obj(fp.canvas),
        "storeys": [
            {"index": s.index, "name": s.name, "elevation": s.elevation,
             "wall_height": s.wall_height}
            for s in sorted(fp.storeys, key=lambda s: s.index)
        ],
        "walls": [
            {"id": w.id, "start": [w.start.x, w.start.y], "end": [w.end.x, w.end.y],
             "kind": w.kind.value, "thickness": w.thickness, "height": w.height,
             "storey": w.storey}
            for w in sorted(fp.walls, key=lambda w: w.id)
        ],
        "openings": [
            {"id": o.id, "host_wall": o.host_wall, "t": o.t, "kind": o.kind.value,
             "width": o.width}
            for o in sorted(fp.openings, key=lambda o: o.id)
        ],
    }
    if fp.roof is not None:
        obj["roof"] = {"pitch": fp.roof.pitch, "kind": fp.roof.kind.value}
    return obj


def floorplan_from_obj(o: dict[str, Any]) -> FloorplanModel:
    roof = None
    if "roof" in o:
        roof = RoofSpec(pitch=o["roof"]["pitch"], kind=RoofKind(o["roof"]["kind"]))
    return FloorplanModel(
        canvas=canvas_from_obj(o["canvas"]),
        storeys=tuple(StoreySpec(index=s["index"], name=s["name"],
                                 elevation=s["elevation"],
                                 wall_height=s["wall_height"])
                      for s in o["storeys"]),
        walls=tuple(WallSpec(id=w["id"],
                             start=ImagePoint(w["start"][0], w["start"][1]),
                             end=ImagePoint(w["end"][0], w["end"][1]),
                             kind=WallKind(w["kind"]), thickness=w["thickness"],
                             height=w["height"], storey=w["storey"])
                    for w in o["walls"]),
        openings=tuple(OpeningSpec(id=p["id"], host_wall=p["host_wall"], t=p["t"],
                                   kind=OpeningKind(p["kind"]), width=p["width"])
                       for p in o["openings"]),
        roof=roof,
    )


def document_to_obj(doc: BuildingDocument) -> dict[str, Any]:
    return {
        "layers": [
            {"index": l.index, "name": l.name, "elevation": l.elevation,
             "wall_height": l.wall_height}
            for l in sorted(doc.layers, key=lambda l: l.index)
        ],
        "elements": [
            {"id": e.id, "kind": e.kind.value, "layer": e.layer,
             "geometry": [[x, y] for x, y in e.geometry],
             "params": dict(e.params)}
            for e in sorted(doc.elements, key=lambda e: e.id)
        ],
    }


def document_from_obj(o: dict[str, Any]) -> BuildingDocument:
    return BuildingDocument(
        layers=tuple(Layer(index=l["index"], name=l["name"],
                           elevation=l["elevation"], wall_height=l["wall_height"])
                     for l in o["layers"]),
        elements=tuple(Element(id=e["id"], kind=ElementKind(e["kind"]),
                               layer=e["layer"],
                               geometry=tuple((g[0], g[1]) for g in e["geometry"]),
                               params=dict(e["params"]))
                       for e in o["elements"]),
    )


def floorplan_to_json(fp: FloorplanModel) -> bytes:
    return canonical_json(floorplan_to_obj(fp))


def floorplan_from_json(data: bytes | str) -> FloorplanModel:
    return floorplan_from_obj(json.loads(data))


def document_to_json(doc: BuildingDocument) -> bytes:
    return canonical_json(document_to_obj(doc))


def document_from_json(data: bytes | str) -> BuildingDocument:
    return document_from_obj(json.loads(data))
