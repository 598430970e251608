"""Deterministic mock BIM-authoring environment.

A single 1280x800 application frame with a design panel, tool shortcuts,
modal dialogs, an object-info panel, undo, and seeded fault injection.
Rendering is pixel-deterministic: the same state always produces the same
frame bytes, and every drawn widget is recoverable by border-signature
scanning plus bitmap-font OCR.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable

import numpy as np

from . import font
from .core import (
    BuildingDocument,
    CanvasGeometry,
    DEFAULT_CANVAS,
    Element,
    ElementKind,
    GuiPoint,
    Layer,
    document_to_json,
)

FRAME_W = 1280
FRAME_H = 800

# Border signatures: (top-left edge colour, bottom-right edge colour) per role.
# Detection relies on these being unique and absent from all other drawing.
BUTTON_TL = (250, 250, 250)
BUTTON_BR = (90, 90, 90)
FIELD_TL = (90, 90, 90)
FIELD_BR = (250, 250, 250)
CANVAS_BORDER = (120, 120, 120)
INFO_BORDER = (150, 150, 150)
LABEL_BORDER = (170, 170, 170)

FRAME_BG = (205, 205, 205)
BUTTON_FACE = (225, 225, 225)
FIELD_FACE = (255, 255, 255)
LABEL_FACE = (215, 215, 215)
CANVAS_FACE = (255, 255, 255)
DIALOG_BG = (230, 230, 230)
DIALOG_BORDER = (60, 60, 60)
FOCUS_RING = (255, 140, 0)

WALL_COLOR = (20, 20, 20)
DOOR_COLOR = (200, 30, 30)
WINDOW_COLOR = (30, 60, 200)
SLAB_COLOR = (215, 215, 225)
ROOF_COLOR = (110, 80, 50)
SELECT_COLOR = (240, 120, 240)
CURSOR_COLOR = (80, 40, 160)

PICK_TOLERANCE_PX = 6   # snap radius for slab picking and opening placement
UNDO_DEPTH = 64
OPENING_WIDTH_MM = 900.0
WALL_THICKNESS_MM = 200.0

DEFAULT_LAYER_NAME = "Design Layer-1"


class WidgetRole(Enum):
    BUTTON = "Button"
    TEXT_FIELD = "TextField"
    CANVAS_PANEL = "CanvasPanel"
    INFO_PANEL = "InfoPanel"
    LABEL = "Label"


@dataclass(frozen=True)
class Widget:
    id: int
    bbox: tuple[int, int, int, int]   # x0, y0, x1, y1 inclusive
    role: WidgetRole
    label: str
    value: str | None = None


@dataclass(frozen=True)
class GuiFrame:
    width: int
    height: int
    pixels: np.ndarray = field(repr=False)
    widgets: tuple[Widget, ...] = ()


def frame_hash(frame: GuiFrame) -> str:
    return hashlib.sha256(frame.pixels.tobytes()).hexdigest()[:16]


def frame_to_ppm(frame: GuiFrame) -> bytes:
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels.tobytes()


class Tool(Enum):
    NONE = "None"
    WALL = "Wall"
    SLAB = "Slab"
    WINDOW = "Window"
    DOOR = "Door"
    ROOF = "Roof"


class DialogKind(Enum):
    ORGANIZATION = "Organization"
    LAYER_EDIT = "LayerEdit"
    ROOF_PARAMS = "RoofParams"


@dataclass
class Dialog:
    kind: DialogKind
    fields: dict[str, str] = field(default_factory=dict)
    focused: str | None = None
    marked: bool = False          # focused field content selected for replacement
    target_layer: int | None = None
    pending_name: bool = False    # Organization: a just-created layer is being named


@dataclass(frozen=True)
class FaultConfig:
    click_offset_prob: float = 0.0
    offset_magnitude: int = 16
    key_drop_prob: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for p in (self.click_offset_prob, self.key_drop_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("fault probabilities must be within [0, 1]")
        if not 8 <= self.offset_magnitude <= 24:
            raise ValueError("offset magnitude must be within 8..24 px")

    @property
    def enabled(self) -> bool:
        return self.click_offset_prob > 0 or self.key_drop_prob > 0


# Input events ---------------------------------------------------------------

@dataclass(frozen=True)
class MouseMove:
    point: GuiPoint


@dataclass(frozen=True)
class LeftClick:
    pass


@dataclass(frozen=True)
class KeyText:
    text: str


@dataclass(frozen=True)
class KeyEnter:
    pass


@dataclass(frozen=True)
class KeyEscape:
    pass


@dataclass(frozen=True)
class KeyCombo:
    combo: str


@dataclass(frozen=True)
class SelectAll:
    pass


InputEvent = MouseMove | LeftClick | KeyText | KeyEnter | KeyEscape | KeyCombo | SelectAll

SHORTCUTS = {
    "9": Tool.WALL,
    "alt+shift+2": Tool.SLAB,
    "shift+d": Tool.WINDOW,
    "alt+shift+d": Tool.DOOR,
}
ROOF_COMBO = "ctrl+alt+shift+1"
ORGANIZATION_COMBO = "ctrl+shift+o"


@dataclass
class EnvState:
    canvas: CanvasGeometry
    fault: FaultConfig
    rng: random.Random
    layers: list[Layer]
    elements: list[Element]
    next_element_id: int = 1
    active_layer: int = 1
    active_tool: Tool = Tool.NONE
    cursor: GuiPoint = GuiPoint(0, 0)
    dialog_stack: list[Dialog] = field(default_factory=list)
    click_buffer: list[Any] = field(default_factory=list)
    selection: set[int] = field(default_factory=set)
    undo_stack: list[tuple[tuple[Layer, ...], tuple[Element, ...]]] = field(default_factory=list)
    flag_log: list[tuple[int, str]] = field(default_factory=list)
    step_counter: int = 0
    last_text_target: str | None = None

    def document(self) -> BuildingDocument:
        return BuildingDocument(layers=tuple(self.layers),
                                elements=tuple(self.elements))

    def top_dialog(self) -> Dialog | None:
        return self.dialog_stack[-1] if self.dialog_stack else None

    def panel_rect(self) -> tuple[int, int, int, int]:
        g = self.canvas
        return (g.origin_x, g.origin_y,
                g.origin_x + g.w_gui - 1, g.origin_y + g.h_gui - 1)


def new_session(canvas: CanvasGeometry = DEFAULT_CANVAS,
                fault: FaultConfig = FaultConfig()) -> EnvState:
    """Fresh environment: empty document with the default design layer."""
    return EnvState(canvas=canvas, fault=fault, rng=random.Random(fault.seed),
                    layers=[Layer(1, DEFAULT_LAYER_NAME, 0.0, 3000.0)],
                    elements=[])


def state_hash(state: EnvState) -> str:
    h = hashlib.sha256()
    h.update(document_to_json(state.document()))
    h.update(repr((state.cursor, state.active_tool.value, state.active_layer,
                   [(d.kind.value, sorted(d.fields.items()), d.focused, d.marked)
                    for d in state.dialog_stack],
                   sorted(state.selection), state.click_buffer,
                   state.rng.getstate())).encode())
    return h.hexdigest()[:16]


def _fmt_mm(v: float) -> str:
    return format(v, "g")


def _push_undo(state: EnvState) -> None:
    state.undo_stack.append((tuple(state.layers), tuple(state.elements)))
    if len(state.undo_stack) > UNDO_DEPTH:
        state.undo_stack.pop(0)


def undo_last(state: EnvState) -> EnvState:
    """Restore the most recent document snapshot; dialogs and tool stay put."""
    if state.undo_stack:
        layers, elements = state.undo_stack.pop()
        state.layers = list(layers)
        state.elements = list(elements)
        if state.active_layer > len(state.layers):
            state.active_layer = len(state.layers)
        state.selection &= {e.id for e in state.elements}
    return state


def object_info(state: EnvState) -> dict[str, Any]:
    """Metadata of the most recently created element; empty when none."""
    if not state.elements:
        return {}
    e = state.elements[-1]
    info: dict[str, Any] = {"id": e.id, "kind": e.kind.value, "layer": e.layer}
    info.update(e.params)
    info["geometry"] = [list(p) for p in e.geometry]
    return info


def export_document(state: EnvState) -> bytes:
    return document_to_json(state.document())


# ---------------------------------------------------------------------------
# Event semantics
# ---------------------------------------------------------------------------

def apply_event(state: EnvState, ev: InputEvent) -> list[str]:
    """Advance the state by one input event; returns the flags it raised.

    Never raises for "illegal" input; anomalies surface as flags.
    """
    state.step_counter += 1
    draw = state.rng.random() if state.fault.enabled else None

    flags: list[str] = []
    if isinstance(ev, MouseMove):
        state.cursor = ev.point
    elif isinstance(ev, LeftClick):
        point = state.cursor
        if draw is not None and draw < state.fault.click_offset_prob:
            bits = int(draw * (1 << 30))
            delta = state.fault.offset_magnitude * (1 if bits & 2 else -1)
            point = (GuiPoint(point.x + delta, point.y) if bits & 1
                     else GuiPoint(point.x, point.y + delta))
        _handle_click(state, point, flags)
    elif isinstance(ev, KeyText):
        if draw is not None and draw < state.fault.key_drop_prob:
            pass  # keystroke lost silently
        else:
            _handle_text(state, ev.text, flags)
    elif isinstance(ev, KeyEnter):
        _handle_enter(state, flags)
    elif isinstance(ev, KeyEscape):
        if state.dialog_stack:
            dialog = state.dialog_stack.pop()
            if dialog.kind is DialogKind.ROOF_PARAMS:
                state.active_tool = Tool.NONE
        else:
            state.click_buffer.clear()
    elif isinstance(ev, KeyCombo):
        _handle_combo(state, ev.combo, flags)
    elif isinstance(ev, SelectAll):
        top = state.top_dialog()
        if top is not None and top.focused:
            top.marked = True
        else:
            state.selection = {e.id for e in state.elements}
    else:  # pragma: no cover - union is closed
        flags.append("UnknownEvent")

    for f in flags:
        state.flag_log.append((state.step_counter, f))
    return flags


def _handle_combo(state: EnvState, combo: str, flags: list[str]) -> None:
    combo = combo.strip().lower()
    if state.dialog_stack:
        flags.append("ShortcutBlocked")
        return
    if combo in SHORTCUTS:
        state.active_tool = SHORTCUTS[combo]
        state.click_buffer.clear()
    elif combo == ORGANIZATION_COMBO:
        state.dialog_stack.append(Dialog(kind=DialogKind.ORGANIZATION))
    elif combo == ROOF_COMBO:
        state.active_tool = Tool.ROOF
        state.click_buffer.clear()
        state.dialog_stack.append(Dialog(kind=DialogKind.ROOF_PARAMS,
                                         fields={"Pitch": "0"}, focused="Pitch"))
    else:
        flags.append("UnknownShortcut")


def _handle_text(state: EnvState, text: str, flags: list[str]) -> None:
    top = state.top_dialog()
    if top is None or not top.focused:
        flags.append("TypedWithoutFocus")
        return
    clean = "".join(c for c in text if c in font.charset())
    if clean != text:
        flags.append("UnsupportedText")
    current = top.fields.get(top.focused, "")
    top.fields[top.focused] = clean if top.marked else current + clean
    top.marked = False
    state.last_text_target = top.focused


def _handle_click(state: EnvState, point: GuiPoint, flags: list[str]) -> None:
    top = state.top_dialog()
    if top is not None:
        hit = _dialog_widget_at(state, top, point)
        if hit is None:
            # Modal click-away: anything outside the dialog's interactive
            # widgets drops field focus.
            top.focused = None
            top.marked = False
            return
        kind, name = hit
        if kind == "button":
            _dialog_button(state, top, name, flags)
        else:
            top.focused = name
            top.marked = False
        return

    x0, y0, x1, y1 = state.panel_rect()
    if x0 <= point.x <= x1 and y0 <= point.y <= y1:
        _canvas_click(state, point, flags)
        return
    for name, rect in _toolbar_buttons():
        if _contains(rect, point):
            state.active_tool = Tool[name.upper()]
            state.click_buffer.clear()
            return
    # Clicks on inert chrome do nothing.


def _canvas_click(state: EnvState, point: GuiPoint, flags: list[str]) -> None:
    tool = state.active_tool
    if tool is Tool.WALL:
        state.click_buffer.append(point)
    elif tool is Tool.SLAB:
        wall = _nearest_wall(state, point)
        if wall is not None:
            if wall.id in state.click_buffer:
                state.click_buffer.remove(wall.id)
            else:
                state.click_buffer.append(wall.id)
    elif tool in (Tool.WINDOW, Tool.DOOR):
        wall = _nearest_wall(state, point)
        if wall is None:
            flags.append("NoHostWall")
        else:
            state.click_buffer.append((wall.id, _closest_on_wall(state, wall, point)))
    # Tool.NONE / Tool.ROOF: canvas clicks are inert.


def _dialog_button(state: EnvState, dialog: Dialog, name: str,
                   flags: list[str]) -> None:
    if dialog.kind is not DialogKind.ORGANIZATION:
        return
    if name == "New...":
        _push_undo(state)
        index = len(state.layers) + 1
        layer = Layer(index, f"Design Layer-{index}", 0.0, 3000.0)
        state.layers.append(layer)
        state.active_layer = index
        dialog.pending_name = True
        dialog.fields["Layer Name"] = layer.name
        dialog.focused = "Layer Name"
        dialog.marked = False
    elif name == "Edit...":
        layer = state.layers[state.active_layer - 1]
        state.dialog_stack.append(Dialog(
            kind=DialogKind.LAYER_EDIT,
            fields={"Layer Name": layer.name,
                    "Elevation": _fmt_mm(layer.elevation),
                    "Wall Height": _fmt_mm(layer.wall_height)},
            focused="Elevation",
            target_layer=layer.index))


def _handle_enter(state: EnvState, flags: list[str]) -> None:
    top = state.top_dialog()
    if top is not None:
        if top.kind is DialogKind.ORGANIZATION:
            if top.pending_name:
                _push_undo(state)
                idx = state.active_layer - 1
                state.layers[idx] = replace(state.layers[idx],
                                            name=top.fields.get("Layer Name", ""))
                top.pending_name = False
                top.focused = None
                top.fields.pop("Layer Name", None)
            else:
                state.dialog_stack.pop()
        elif top.kind is DialogKind.LAYER_EDIT:
            _push_undo(state)
            idx = (top.target_layer or state.active_layer) - 1
            layer = state.layers[idx]
            elevation = _parse_mm(top.fields.get("Elevation"), layer.elevation, flags)
            height = _parse_mm(top.fields.get("Wall Height"), layer.wall_height, flags)
            state.layers[idx] = replace(layer,
                                        name=top.fields.get("Layer Name", layer.name),
                                        elevation=elevation, wall_height=height)
            state.dialog_stack.pop()
        elif top.kind is DialogKind.ROOF_PARAMS:
            _confirm_roof(state, top, flags)
        return

    tool = state.active_tool
    if tool is Tool.WALL:
        _commit_walls(state, flags)
    elif tool is Tool.SLAB:
        _commit_slab(state, flags)
    elif tool in (Tool.WINDOW, Tool.DOOR):
        _commit_openings(state, flags)


def _parse_mm(text: str | None, fallback: float, flags: list[str]) -> float:
    if text is None:
        return fallback
    try:
        return float(text)
    except ValueError:
        flags.append("BadFieldValue")
        return fallback


def _commit_walls(state: EnvState, flags: list[str]) -> None:
    vertices = [p for p in state.click_buffer if isinstance(p, GuiPoint)]
    state.click_buffer.clear()
    if len(vertices) < 2:
        return
    _push_undo(state)
    layer = state.layers[state.active_layer - 1]
    for a, b in zip(vertices, vertices[1:]):
        if a == b:
            flags.append("WallDegenerate")
            continue
        state.elements.append(Element(
            id=state.next_element_id, kind=ElementKind.WALL,
            layer=state.active_layer,
            geometry=(state.canvas.gui_to_mm(a), state.canvas.gui_to_mm(b)),
            params={"thickness": WALL_THICKNESS_MM, "height": layer.wall_height}))
        state.next_element_id += 1


def _commit_slab(state: EnvState, flags: list[str]) -> None:
    picked = [e for e in state.elements
              if e.id in state.click_buffer and e.kind is ElementKind.WALL]
    state.click_buffer.clear()
    cycle = _single_cycle([e.geometry for e in picked])
    if cycle is None:
        flags.append("SlabBoundaryOpen")
        return
    _push_undo(state)
    state.elements.append(Element(
        id=state.next_element_id, kind=ElementKind.SLAB,
        layer=state.active_layer, geometry=tuple(cycle),
        params={"boundary_walls": [e.id for e in picked]}))
    state.next_element_id += 1


def _commit_openings(state: EnvState, flags: list[str]) -> None:
    staged = [s for s in state.click_buffer if isinstance(s, tuple)]
    state.click_buffer.clear()
    if not staged:
        return
    _push_undo(state)
    kind = ElementKind.WINDOW if state.active_tool is Tool.WINDOW else ElementKind.DOOR
    for wall_id, (x_mm, y_mm, t) in staged:
        state.elements.append(Element(
            id=state.next_element_id, kind=kind, layer=state.active_layer,
            geometry=((x_mm, y_mm),),
            params={"host_wall": wall_id, "t": round(t, 6),
                    "width": OPENING_WIDTH_MM}))
        state.next_element_id += 1


def _confirm_roof(state: EnvState, dialog: Dialog, flags: list[str]) -> None:
    state.dialog_stack.pop()
    state.active_tool = Tool.NONE
    walls = [e for e in state.elements
             if e.id in state.selection and e.kind is ElementKind.WALL]
    if not walls:
        flags.append("RoofNoSelection")
        return
    pitch = _parse_mm(dialog.fields.get("Pitch"), float("nan"), flags)
    if math.isnan(pitch):
        return
    # Storeys share one footprint; collapse coincident segments before the
    # boundary walk, then peel dangling (internal) walls.
    unique: dict[tuple, tuple] = {}
    for e in walls:
        key = tuple(sorted((tuple(e.geometry[0]), tuple(e.geometry[1]))))
        unique[key] = e.geometry
    cycle = _outer_cycle(list(unique.values()))
    if cycle is None:
        flags.append("RoofBoundaryOpen")
        return
    _push_undo(state)
    state.elements.append(Element(
        id=state.next_element_id, kind=ElementKind.ROOF,
        layer=len(state.layers), geometry=tuple(cycle),
        params={"pitch": pitch, "kind": "Hip"}))
    state.next_element_id += 1


def _nearest_wall(state: EnvState, point: GuiPoint) -> Element | None:
    best: Element | None = None
    best_key: tuple[float, int, int] | None = None
    for e in state.elements:
        if e.kind is not ElementKind.WALL:
            continue
        d = _point_to_wall_px(state, e, point)
        if d > PICK_TOLERANCE_PX:
            continue
        # Coincident walls from replicated storeys: prefer the active layer.
        key = (d, 0 if e.layer == state.active_layer else 1, e.id)
        if best_key is None or key < best_key:
            best, best_key = e, key
    return best


def _wall_gui_segment(state: EnvState, e: Element):
    g = state.canvas
    (ax, ay), (bx, by) = e.geometry
    return g.mm_to_gui(ax, ay), g.mm_to_gui(bx, by)


def _point_to_wall_px(state: EnvState, e: Element, p: GuiPoint) -> float:
    a, b = _wall_gui_segment(state, e)
    dx, dy = b.x - a.x, b.y - a.y
    length2 = dx * dx + dy * dy
    if length2 == 0:
        return math.hypot(p.x - a.x, p.y - a.y)
    t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / length2
    t = min(max(t, 0.0), 1.0)
    return math.hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy))


def _closest_on_wall(state: EnvState, e: Element,
                     p: GuiPoint) -> tuple[float, float, float]:
    (ax, ay), (bx, by) = e.geometry
    px, py = state.canvas.gui_to_mm(p)
    dx, dy = bx - ax, by - ay
    length2 = dx * dx + dy * dy
    t = 0.0 if length2 == 0 else ((px - ax) * dx + (py - ay) * dy) / length2
    t = min(max(t, 0.0), 1.0)
    return (ax + t * dx, ay + t * dy, t)


def _vertex_key(p: Iterable[float]) -> tuple[float, float]:
    x, y = p
    return (round(x, 1), round(y, 1))


def _cycle_from_adjacency(segments) -> list[tuple[float, float]] | None:
    """Ordered vertices when the segments form exactly one closed cycle."""
    if len(segments) < 3:
        return None
    adj: dict[tuple, list[tuple]] = {}
    for geom in segments:
        a, b = _vertex_key(geom[0]), _vertex_key(geom[1])
        if a == b:
            return None
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    if any(len(n) != 2 for n in adj.values()):
        return None
    start = min(adj)
    cycle = [start]
    prev, cur = None, start
    while True:
        nxt = [n for n in adj[cur] if n != prev]
        # A two-vertex multigraph edge pair would bounce; pick deterministic.
        step = nxt[0] if nxt else prev
        prev, cur = cur, step
        if cur == start:
            break
        if cur in cycle:
            return None
        cycle.append(cur)
        if len(cycle) > len(segments):
            return None
    if len(cycle) != len(adj):
        return None  # disconnected components
    return [(float(x), float(y)) for x, y in cycle]


def _single_cycle(segments) -> list[tuple[float, float]] | None:
    return _cycle_from_adjacency(segments)


def _outer_cycle(segments) -> list[tuple[float, float]] | None:
    """Peel dangling segments (T-joined internals), then demand one cycle of
    the remainder; multiple cycles keep the one with the largest extent."""
    segs = list(segments)
    while True:
        degree: dict[tuple, int] = {}
        for geom in segs:
            for p in (geom[0], geom[1]):
                k = _vertex_key(p)
                degree[k] = degree.get(k, 0) + 1
        keep = [g for g in segs
                if degree[_vertex_key(g[0])] >= 2 and degree[_vertex_key(g[1])] >= 2]
        if len(keep) == len(segs):
            break
        segs = keep
    if not segs:
        return None
    # Partition into connected components.
    comps: list[list] = []
    assigned: dict[tuple, int] = {}
    for geom in segs:
        keys = {_vertex_key(geom[0]), _vertex_key(geom[1])}
        hit = {assigned[k] for k in keys if k in assigned}
        if not hit:
            idx = len(comps)
            comps.append([geom])
        else:
            idx = min(hit)
            comps[idx].append(geom)
            for other in hit - {idx}:
                comps[idx].extend(comps[other])
                comps[other] = []
        for k in keys:
            assigned[k] = idx
        for i, comp in enumerate(comps):
            for g in comp:
                assigned[_vertex_key(g[0])] = i
                assigned[_vertex_key(g[1])] = i
    comps = [c for c in comps if c]

    def extent(comp) -> float:
        xs = [p[0] for g in comp for p in g]
        ys = [p[1] for g in comp for p in g]
        return (max(xs) - min(xs)) * (max(ys) - min(ys))

    best = max(comps, key=extent)
    return _cycle_from_adjacency(best)


# ---------------------------------------------------------------------------
# Layout
# ---------------------------------------------------------------------------

def _toolbar_buttons() -> list[tuple[str, tuple[int, int, int, int]]]:
    names = ["Wall", "Slab", "Window", "Door", "Roof"]
    out = []
    x = 170
    for name in names:
        out.append((name, (x, 36, x + 80, 67)))
        x += 90
    return out


TITLE_RECT = (8, 6, 408, 27)
LAYER_LABEL_RECT = (640, 36, 920, 67)
STATUS_RECT = (8, 760, 308, 781)
INFO_RECT = (1130, 80, 1274, 719)

INFO_ROWS = [
    ("Name", (1136, 120, 1264, 146)),
    ("name_value", (1136, 150, 1264, 176)),
    ("Elevation", (1136, 184, 1264, 210)),
    ("elevation_value", (1136, 214, 1264, 240)),
    ("Wall Height", (1136, 248, 1264, 274)),
    ("wall_height_value", (1136, 278, 1264, 304)),
    ("kind_value", (1136, 318, 1264, 344)),
]

DIALOG_RECTS = {
    DialogKind.ORGANIZATION: (420, 230, 879, 569),
    DialogKind.LAYER_EDIT: (460, 260, 839, 489),
    DialogKind.ROOF_PARAMS: (470, 300, 809, 459),
}

DIALOG_TITLES = {
    DialogKind.ORGANIZATION: "Organization",
    DialogKind.LAYER_EDIT: "Edit Design Layer",
    DialogKind.ROOF_PARAMS: "Roof Parameters",
}

ORG_NEW_RECT = (440, 510, 560, 545)
ORG_EDIT_RECT = (580, 510, 700, 545)
ORG_NAME_FIELD_RECT = (590, 462, 850, 492)

LAYER_EDIT_FIELDS = [
    ("Layer Name", (640, 300, 820, 330)),
    ("Elevation", (640, 345, 820, 375)),
    ("Wall Height", (640, 390, 820, 420)),
]

ROOF_FIELDS = [("Pitch", (640, 390, 790, 420))]

CAPTION_STRIP_W = 150


def dialog_outer_rect(kind: DialogKind) -> tuple[int, int, int, int]:
    """Dialog content rect expanded by its 2 px border."""
    x0, y0, x1, y1 = DIALOG_RECTS[kind]
    return (x0 - 2, y0 - 2, x1 + 2, y1 + 2)


def _dialog_fields(dialog: Dialog) -> list[tuple[str, tuple[int, int, int, int]]]:
    if dialog.kind is DialogKind.ORGANIZATION:
        return [("Layer Name", ORG_NAME_FIELD_RECT)] if dialog.pending_name else []
    if dialog.kind is DialogKind.LAYER_EDIT:
        return LAYER_EDIT_FIELDS
    return ROOF_FIELDS


def _dialog_buttons(dialog: Dialog) -> list[tuple[str, tuple[int, int, int, int]]]:
    if dialog.kind is DialogKind.ORGANIZATION:
        return [("New...", ORG_NEW_RECT), ("Edit...", ORG_EDIT_RECT)]
    return []


def _contains(rect: tuple[int, int, int, int], p: GuiPoint) -> bool:
    x0, y0, x1, y1 = rect
    return x0 <= p.x <= x1 and y0 <= p.y <= y1


def _dialog_widget_at(state: EnvState, dialog: Dialog,
                      point: GuiPoint) -> tuple[str, str] | None:
    for name, rect in _dialog_buttons(dialog):
        if _contains(rect, point):
            return ("button", name)
    for name, rect in _dialog_fields(dialog):
        if _contains(rect, point):
            return ("field", name)
    return None


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _fill(px: np.ndarray, rect, color) -> None:
    x0, y0, x1, y1 = rect
    px[y0:y1 + 1, x0:x1 + 1] = color


def _border(px: np.ndarray, rect, tl, br) -> None:
    x0, y0, x1, y1 = rect
    px[y0, x0:x1] = tl          # top edge (x0..x1-1)
    px[y0:y1, x0] = tl          # left edge (y0..y1-1)
    px[y1, x0:x1 + 1] = br      # bottom edge
    px[y0:y1 + 1, x1] = br      # right edge


def _widget_pixels(px: np.ndarray, rect, role: WidgetRole, text: str | None) -> None:
    if role is WidgetRole.BUTTON:
        _fill(px, rect, BUTTON_FACE)
        _border(px, rect, BUTTON_TL, BUTTON_BR)
    elif role is WidgetRole.TEXT_FIELD:
        _fill(px, rect, FIELD_FACE)
        _border(px, rect, FIELD_TL, FIELD_BR)
    elif role is WidgetRole.LABEL:
        _fill(px, rect, LABEL_FACE)
        _border(px, rect, LABEL_BORDER, LABEL_BORDER)
    elif role is WidgetRole.CANVAS_PANEL:
        _fill(px, rect, CANVAS_FACE)
        _border(px, rect, CANVAS_BORDER, CANVAS_BORDER)
    elif role is WidgetRole.INFO_PANEL:
        _fill(px, rect, LABEL_FACE)
        _border(px, rect, INFO_BORDER, INFO_BORDER)
    if text:
        x0, y0, x1, y1 = rect
        font.draw_text_in_box(px, x0 + 2, y0, x1, y1, text)


def _clip_stamp(px: np.ndarray, x0, y0, x1, y1, color, clip) -> None:
    cx0, cy0, cx1, cy1 = clip
    x0, y0 = max(x0, cx0), max(y0, cy0)
    x1, y1 = min(x1, cx1 + 1), min(y1, cy1 + 1)
    if x0 < x1 and y0 < y1:
        px[y0:y1, x0:x1] = color


def _draw_segment(px, a: GuiPoint, b: GuiPoint, color, clip, half: int = 1) -> None:
    if a.y == b.y:
        lo, hi = sorted((a.x, b.x))
        _clip_stamp(px, lo - half, a.y - half, hi + half + 1, a.y + half + 1,
                    color, clip)
    elif a.x == b.x:
        lo, hi = sorted((a.y, b.y))
        _clip_stamp(px, a.x - half, lo - half, a.x + half + 1, hi + half + 1,
                    color, clip)
    else:
        steps = int(math.hypot(b.x - a.x, b.y - a.y)) * 2 + 1
        for i in range(steps + 1):
            t = i / steps
            x = round(a.x + t * (b.x - a.x))
            y = round(a.y + t * (b.y - a.y))
            _clip_stamp(px, x - half, y - half, x + half + 1, y + half + 1,
                        color, clip)


def _fill_polygon(px, pts: list[GuiPoint], color, clip) -> None:
    if len(pts) < 3:
        return
    ys = [p.y for p in pts]
    cx0, cy0, cx1, cy1 = clip
    for y in range(max(min(ys), cy0), min(max(ys), cy1) + 1):
        yc = y + 0.5
        xs = []
        n = len(pts)
        for i in range(n):
            a, b = pts[i], pts[(i + 1) % n]
            if (a.y <= yc < b.y) or (b.y <= yc < a.y):
                t = (yc - a.y) / (b.y - a.y)
                xs.append(a.x + t * (b.x - a.x))
        xs.sort()
        for j in range(0, len(xs) - 1, 2):
            x0 = max(int(math.ceil(xs[j])), cx0)
            x1 = min(int(math.floor(xs[j + 1])), cx1)
            if x0 <= x1:
                px[y, x0:x1 + 1] = color


def _element_bbox_gui(state: EnvState, e: Element) -> tuple[int, int, int, int]:
    pts = [state.canvas.mm_to_gui(x, y) for x, y in e.geometry]
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    return (min(xs), min(ys), max(xs), max(ys))


def render_frame(state: EnvState) -> GuiFrame:
    """Deterministic raster plus the widget tree that mirrors exactly what is
    drawn (occluded widgets are omitted)."""
    px = np.empty((FRAME_H, FRAME_W, 3), dtype=np.uint8)
    px[:] = FRAME_BG

    widgets: list[tuple[tuple[int, int, int, int], WidgetRole, str, str | None, int]] = []

    def add(rect, role, label, value=None, depth=0, text=None):
        _widget_pixels(px, rect, role, label if text is None else text)
        widgets.append((rect, role, label, value, depth))

    add(TITLE_RECT, WidgetRole.LABEL, "Design Studio")
    for name, rect in _toolbar_buttons():
        add(rect, WidgetRole.BUTTON, name)
        if state.active_tool.value == name:
            # Active tool shown as an inner highlight ring; border stays intact.
            x0, y0, x1, y1 = rect
            _border(px, (x0 + 2, y0 + 2, x1 - 2, y1 - 2), FOCUS_RING, FOCUS_RING)
    layer_name = state.layers[state.active_layer - 1].name
    add(LAYER_LABEL_RECT, WidgetRole.LABEL, f"Layer: {layer_name}")
    add(STATUS_RECT, WidgetRole.LABEL, "Ready")

    panel = state.panel_rect()
    add(panel, WidgetRole.CANVAS_PANEL, "")
    interior = (panel[0] + 1, panel[1] + 1, panel[2] - 1, panel[3] - 1)
    _draw_elements(state, px, interior)

    info = object_info(state)
    add(INFO_RECT, WidgetRole.INFO_PANEL, "")
    font.draw_text(px, INFO_RECT[0] + 6, INFO_RECT[1] + 8, "Object Info")
    values = {
        "name_value": (f"{info.get('kind', '')}-{info.get('id', '')}"
                       if info else ""),
        "elevation_value": _fmt_mm(state.layers[state.active_layer - 1].elevation),
        "wall_height_value": _fmt_mm(state.layers[state.active_layer - 1].wall_height),
        "kind_value": info.get("kind", "") if info else "",
    }
    for key, rect in INFO_ROWS:
        text = values.get(key, key)
        add(rect, WidgetRole.LABEL, text)

    # Cursor crosshair, visible only over the drawing area.
    cx, cy = state.cursor.x, state.cursor.y
    if interior[0] <= cx <= interior[2] and interior[1] <= cy <= interior[3]:
        _clip_stamp(px, cx - 4, cy, cx + 5, cy + 1, CURSOR_COLOR, interior)
        _clip_stamp(px, cx, cy - 4, cx + 1, cy + 5, CURSOR_COLOR, interior)

    for depth, dialog in enumerate(state.dialog_stack, start=1):
        _draw_dialog(state, px, dialog, depth, widgets.append)

    visible = _visible_widgets(state, widgets)
    return GuiFrame(width=FRAME_W, height=FRAME_H, pixels=_freeze(px),
                    widgets=visible)


def _freeze(px: np.ndarray) -> np.ndarray:
    px.setflags(write=False)
    return px


def _draw_elements(state: EnvState, px: np.ndarray, clip) -> None:
    g = state.canvas
    order = {ElementKind.SLAB: 0, ElementKind.ROOF: 1, ElementKind.WALL: 2,
             ElementKind.DOOR: 3, ElementKind.WINDOW: 3}
    for e in sorted(state.elements, key=lambda e: (order[e.kind], e.id)):
        if e.kind is ElementKind.SLAB:
            pts = [g.mm_to_gui(x, y) for x, y in e.geometry]
            _fill_polygon(px, pts, SLAB_COLOR, clip)
        elif e.kind is ElementKind.ROOF:
            pts = [g.mm_to_gui(x, y) for x, y in e.geometry]
            for i in range(len(pts)):
                _draw_segment(px, pts[i], pts[(i + 1) % len(pts)], ROOF_COLOR, clip)
        elif e.kind is ElementKind.WALL:
            a = g.mm_to_gui(*e.geometry[0])
            b = g.mm_to_gui(*e.geometry[1])
            _draw_segment(px, a, b, WALL_COLOR, clip)
        else:
            p = g.mm_to_gui(*e.geometry[0])
            color = DOOR_COLOR if e.kind is ElementKind.DOOR else WINDOW_COLOR
            _clip_stamp(px, p.x - 2, p.y - 4, p.x + 3, p.y + 5, color, clip)
    for eid in sorted(state.selection):
        e = next((el for el in state.elements if el.id == eid), None)
        if e is None:
            continue
        x0, y0, x1, y1 = _element_bbox_gui(state, e)
        _clip_stamp(px, x0 - 3, y0 - 3, x1 + 4, y0 - 2, SELECT_COLOR, clip)
        _clip_stamp(px, x0 - 3, y1 + 3, x1 + 4, y1 + 4, SELECT_COLOR, clip)
        _clip_stamp(px, x0 - 3, y0 - 3, x0 - 2, y1 + 4, SELECT_COLOR, clip)
        _clip_stamp(px, x1 + 3, y0 - 3, x1 + 4, y1 + 4, SELECT_COLOR, clip)


def _draw_dialog(state: EnvState, px: np.ndarray, dialog: Dialog, depth: int,
                 emit) -> None:
    rect = DIALOG_RECTS[dialog.kind]
    x0, y0, x1, y1 = rect
    _fill(px, (x0 - 2, y0 - 2, x1 + 2, y1 + 2), DIALOG_BORDER)
    _fill(px, rect, DIALOG_BG)
    font.draw_text(px, x0 + 10, y0 + 8, DIALOG_TITLES[dialog.kind])

    if dialog.kind is DialogKind.ORGANIZATION:
        y = y0 + 40
        for layer in state.layers:
            marker = "*" if layer.index == state.active_layer else " "
            row = (f"{marker}{layer.index} {layer.name} "
                   f"{_fmt_mm(layer.elevation)} {_fmt_mm(layer.wall_height)}")
            font.draw_text(px, x0 + 12, y, row)
            y += 24
    elif dialog.kind is DialogKind.ROOF_PARAMS:
        font.draw_text(px, x0 + 10, y0 + 40, "Kind: Hip over selection")

    for name, rect_b in _dialog_buttons(dialog):
        _widget_pixels(px, rect_b, WidgetRole.BUTTON, name)
        emit((rect_b, WidgetRole.BUTTON, name, None, depth))
    for name, rect_f in _dialog_fields(dialog):
        value = dialog.fields.get(name, "")
        _widget_pixels(px, rect_f, WidgetRole.TEXT_FIELD, value)
        fx0, fy0, fx1, fy1 = rect_f
        font.draw_text_in_box(px, fx0 - CAPTION_STRIP_W - 4, fy0, fx0 - 4, fy1, name)
        if dialog.focused == name:
            ring = (fx0 + 2, fy0 + 2, fx1 - 2, fy1 - 2)
            _border(px, ring, FOCUS_RING, FOCUS_RING)
        emit((rect_f, WidgetRole.TEXT_FIELD, name, value, depth))


def _visible_widgets(state: EnvState, raw) -> tuple[Widget, ...]:
    """Drop widgets whose border ring is touched by a higher dialog, then
    number the rest in raster order."""
    outer = [dialog_outer_rect(d.kind) for d in state.dialog_stack]

    def ring_covered(rect, depth) -> bool:
        x0, y0, x1, y1 = rect
        for d_idx in range(depth, len(outer)):
            ox0, oy0, ox1, oy1 = outer[d_idx]
            edges = (
                (x0, y0, x1, y0), (x0, y1, x1, y1),
                (x0, y0, x0, y1), (x1, y0, x1, y1),
            )
            for ex0, ey0, ex1, ey1 in edges:
                if ex0 <= ox1 and ox0 <= ex1 and ey0 <= oy1 and oy0 <= ey1:
                    return True
        return False

    kept = [(rect, role, label, value) for rect, role, label, value, depth in raw
            if not ring_covered(rect, depth)]
    kept.sort(key=lambda w: (w[0][1], w[0][0], w[0][3], w[0][2]))
    return tuple(Widget(id=i + 1, bbox=rect, role=role, label=label, value=value)
                 for i, (rect, role, label, value) in enumerate(kept))
