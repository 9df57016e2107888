"""Typed building model extracted from a curated IFC4 entity subset.

Mapping summary::

    IfcBuilding                          -> Building
    IfcBuildingStorey                    -> Level
    IfcSpace                             -> Room
    IfcZone / IfcSpatialZone             -> HvacZone
    IfcAirTerminalBox                    -> Equipment(VAV)
    IfcUnitaryEquipment tagged FCU       -> Equipment(FCU)
    IfcUnitaryControlElement / IfcController / IfcSensor
                   tagged thermostat     -> Equipment(Thermostat)
    IfcAirTerminal                       -> Equipment(AirTerminal)
    IfcDuctSegment / IfcDuctFitting      -> Duct
    IfcDistributionPort + IfcRelConnectsPorts -> Port graph
    IfcPropertySet "BIM2BRICK"           -> BmsParams / PointSpec

BMS metadata lives in a property set named ``BIM2BRICK`` with the keys
``Identifier``, ``HostingRoom``, ``TimeSeriesId``, ``MasterPanel``,
``Points`` (``kind:tsid`` pairs separated by ``;``), ``ControlsIdentifier``
(comma separated identifiers) and ``Kind`` (explicit equipment kind).
All lengths are converted to metres.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

from . import step
from .diagnostics import Diagnostic, emit
from .step import NULL, Ref, StepEntity, StepFile, Typed

PSET_NAME = "BIM2BRICK"


class MissingBuildingError(ValueError):
    pass


class UnsupportedRepresentation(ValueError):
    pass


class EquipmentKind(str, Enum):
    VAV = "VAV"
    FCU = "FCU"
    THERMOSTAT = "Thermostat"
    AIR_TERMINAL = "AirTerminal"


class PointKind(str, Enum):
    CO2 = "CO2_Sensor"
    TEMPERATURE = "Temperature_Sensor"
    HUMIDITY = "Humidity_Sensor"


class FlowDirection(str, Enum):
    SOURCE = "source"
    SINK = "sink"
    BIDIRECTIONAL = "bidirectional"


Point3 = tuple[float, float, float]
Polygon = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Building:
    source_id: str
    name: str


@dataclass(frozen=True)
class Level:
    source_id: str
    name: str
    elevation: float


@dataclass(frozen=True)
class Room:
    source_id: str
    name: str
    level_ref: str
    footprint: Polygon | None = None
    height: float | None = None
    long_name: str | None = None


@dataclass(frozen=True)
class HvacZone:
    source_id: str
    name: str
    room_refs: tuple[str, ...]


@dataclass(frozen=True)
class PointSpec:
    point_kind: PointKind
    timeseries_id: str | None = None


@dataclass(frozen=True)
class BmsParams:
    identifier: str | None = None
    hosting_room: str | None = None
    timeseries_id: str | None = None
    master_panel: str | None = None
    points: tuple[PointSpec, ...] = ()
    controls: tuple[str, ...] = ()


@dataclass(frozen=True)
class Port:
    source_id: str
    owner_ref: str
    position: Point3 | None
    flow_direction: FlowDirection | None
    connected_to: str | None = None


@dataclass(frozen=True)
class Equipment:
    source_id: str
    name: str
    kind: EquipmentKind
    placement_point: Point3 | None
    ports: tuple[str, ...] = ()
    bms: BmsParams = BmsParams()


@dataclass(frozen=True)
class Duct:
    source_id: str
    name: str
    ports: tuple[str, ...] = ()


@dataclass(frozen=True)
class BuildingModel:
    building: Building
    levels: tuple[Level, ...] = ()
    rooms: tuple[Room, ...] = ()
    zones: tuple[HvacZone, ...] = ()
    #: VAV, FCU and thermostats
    equipment: tuple[Equipment, ...] = ()
    air_terminals: tuple[Equipment, ...] = ()
    ducts: tuple[Duct, ...] = ()
    ports: Mapping[str, Port] = field(default_factory=dict)
    psets: Mapping[str, Mapping[str, Mapping[str, Any]]] = field(default_factory=dict)
    diagnostics: tuple[Diagnostic, ...] = ()
    length_unit: float = 1.0

    def all_equipment(self) -> tuple[Equipment, ...]:
        return self.equipment + self.air_terminals

    def element(self, source_id: str):
        return self._index().get(source_id)

    def source_ids(self) -> set[str]:
        return set(self._index())

    def _index(self) -> dict[str, Any]:
        cached = self.__dict__.get("_idx")
        if cached is None:
            cached = {self.building.source_id: self.building}
            for group in (self.levels, self.rooms, self.zones, self.equipment,
                          self.air_terminals, self.ducts):
                cached.update((e.source_id, e) for e in group)
            cached.update(self.ports)
            object.__setattr__(self, "_idx", cached)
        return cached


# -- geometry helpers ---------------------------------------------------------

Matrix = tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...], Point3]
_IDENTITY: Matrix = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))


def _clean(v: float) -> float:
    return round(v, 9) + 0.0


def _normalize(v):
    length = math.sqrt(sum(c * c for c in v))
    if length == 0.0 or not math.isfinite(length):
        return None
    return tuple(c / length for c in v)


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _compose(parent: Matrix, local: Matrix) -> Matrix:
    """``parent o local``; matrices store the local axes (columns) and origin."""
    px, py, pz, pt = parent
    axes = []
    for col in local[:3]:
        axes.append(tuple(px[i] * col[0] + py[i] * col[1] + pz[i] * col[2] for i in range(3)))
    lt = local[3]
    origin = tuple(px[i] * lt[0] + py[i] * lt[1] + pz[i] * lt[2] + pt[i] for i in range(3))
    return axes[0], axes[1], axes[2], origin


def _apply(m: Matrix, p) -> Point3:
    x, y, z = (tuple(p) + (0.0, 0.0, 0.0))[:3]
    return tuple(m[0][i] * x + m[1][i] * y + m[2][i] * z + m[3][i] for i in range(3))


class _Reader:
    """Navigation helpers over a StepFile with unit scaling."""

    def __init__(self, file: StepFile, diags: list):
        self.file = file
        self.diags = diags
        self.scale = length_unit_scale(file)
        self._placements: dict[int, Matrix] = {}

    def ent(self, value) -> StepEntity | None:
        return self.file.get(value)

    def point(self, value) -> Point3 | None:
        ent = self.ent(value)
        if ent is None or ent.type_name != "IFCCARTESIANPOINT" or not ent.args:
            return None
        coords = ent.args[0]
        if not isinstance(coords, tuple) or not coords or not all(_num(c) for c in coords):
            return None
        return tuple(float(c) * self.scale for c in (coords + (0.0, 0.0))[:3])

    def direction(self, value):
        ent = self.ent(value)
        if ent is None or ent.type_name != "IFCDIRECTION" or not ent.args:
            return None
        ratios = ent.args[0]
        if not isinstance(ratios, tuple) or not all(_num(c) for c in ratios):
            return None
        return _normalize(tuple(float(c) for c in (ratios + (0.0, 0.0))[:3]))

    def axis_placement(self, value) -> Matrix:
        ent = self.ent(value)
        if ent is None:
            return _IDENTITY
        if ent.type_name not in ("IFCAXIS2PLACEMENT3D", "IFCAXIS2PLACEMENT2D"):
            return _IDENTITY
        args = ent.args
        origin = self.point(args[0]) if args else None
        origin = origin or (0.0, 0.0, 0.0)
        if ent.type_name == "IFCAXIS2PLACEMENT2D":
            z = (0.0, 0.0, 1.0)
            ref = self.direction(args[1]) if len(args) > 1 else None
        else:
            z = (self.direction(args[1]) if len(args) > 1 else None) or (0.0, 0.0, 1.0)
            ref = self.direction(args[2]) if len(args) > 2 else None
        ref = ref or ((1.0, 0.0, 0.0) if abs(z[0]) < 0.9 else (0.0, 1.0, 0.0))
        # project the reference direction onto the plane normal to z
        d = sum(r * zz for r, zz in zip(ref, z))
        x = _normalize(tuple(r - d * zz for r, zz in zip(ref, z))) or (1.0, 0.0, 0.0)
        y = _cross(z, x)
        return x, y, z, origin

    def world(self, placement_ref) -> Matrix:
        """World transform of an IfcLocalPlacement chain."""
        chain = []
        seen = set()
        ent = self.ent(placement_ref)
        while ent is not None and ent.type_name == "IFCLOCALPLACEMENT":
            if ent.id in self._placements:
                break
            if ent.id in seen:
                emit(self.diags, "PlacementCycle", None, f"placement #{ent.id} is cyclic")
                break
            seen.add(ent.id)
            chain.append(ent)
            ent = self.ent(ent.args[0]) if ent.args else None
        base = self._placements.get(ent.id, _IDENTITY) if ent is not None else _IDENTITY
        for link in reversed(chain):
            rel = link.args[1] if len(link.args) > 1 else None
            base = _compose(base, self.axis_placement(rel))
            self._placements[link.id] = base
        return base

    def product_matrix(self, ent: StepEntity) -> Matrix:
        return self.world(ent.args[5]) if len(ent.args) > 5 else _IDENTITY

    def location(self, ent: StepEntity) -> Point3 | None:
        if len(ent.args) <= 5 or ent.args[5] is NULL:
            return None
        loc = _apply(self.product_matrix(ent), (0.0, 0.0, 0.0))
        return tuple(_clean(c) for c in loc)


def _num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _str(v) -> str | None:
    if isinstance(v, Typed):
        v = v.value
    if isinstance(v, str):
        return v
    return None


def _arg(ent: StepEntity, i: int):
    return ent.args[i] if i < len(ent.args) else NULL


def _refs(v) -> list[int]:
    if isinstance(v, Ref):
        return [v.id]
    if isinstance(v, tuple):
        return [x.id for x in v if isinstance(x, Ref)]
    return []


_SI_PREFIX = {
    "EXA": 1e18, "PETA": 1e15, "TERA": 1e12, "GIGA": 1e9, "MEGA": 1e6, "KILO": 1e3,
    "HECTO": 1e2, "DECA": 1e1, "DECI": 1e-1, "CENTI": 1e-2, "MILLI": 1e-3, "MICRO": 1e-6,
    "NANO": 1e-9, "PICO": 1e-12, "FEMTO": 1e-15, "ATTO": 1e-18,
}


def _unit_factor(file: StepFile, ent: StepEntity | None, depth: int = 0) -> float | None:
    if ent is None or depth > 8:
        return None
    if ent.type_name == "IFCSIUNIT":
        prefix = _arg(ent, 2)
        name = _arg(ent, 3)
        if not (isinstance(name, step.Enum) and name.name == "METRE"):
            return None
        if isinstance(prefix, step.Enum):
            return _SI_PREFIX.get(prefix.name)
        return 1.0
    if ent.type_name == "IFCCONVERSIONBASEDUNIT":
        measure = file.get(_arg(ent, 3))
        if measure is None or measure.type_name != "IFCMEASUREWITHUNIT":
            return None
        value = _arg(measure, 0)
        value = value.value if isinstance(value, Typed) else value
        base = _unit_factor(file, file.get(_arg(measure, 1)), depth + 1)
        if _num(value) and base is not None:
            return float(value) * base
    return None


def length_unit_scale(file: StepFile) -> float:
    """Metres per file length unit, from the first IfcUnitAssignment."""
    for assignment in file.by_type("IFCUNITASSIGNMENT"):
        for uid in _refs(_arg(assignment, 0)):
            unit = file.get(uid)
            if unit is None:
                continue
            utype = _arg(unit, 1)
            if isinstance(utype, step.Enum) and utype.name == "LENGTHUNIT":
                factor = _unit_factor(file, unit)
                if factor:
                    return factor
        break
    return 1.0


# -- footprints ---------------------------------------------------------------

def _signed_area(poly) -> float:
    s = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return s / 2.0


def polygon_area(poly) -> float:
    return abs(_signed_area(poly))


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 0) - (v < 0)

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and on_seg(p1, p2, q1)) or (o2 == 0 and on_seg(p1, p2, q2))
            or (o3 == 0 and on_seg(q1, q2, p1)) or (o4 == 0 and on_seg(q1, q2, p2)))


def is_simple(poly) -> bool:
    n = len(poly)
    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_intersect(a1, a2, poly[j], poly[(j + 1) % n]):
                return False
    return True


def normalize_polygon(points: Iterable[tuple[float, float]]) -> Polygon:
    """Return a simple counter-clockwise ring starting at its smallest vertex.

    Raises :class:`UnsupportedRepresentation` for degenerate rings.
    """
    ring: list[tuple[float, float]] = []
    for x, y in points:
        p = (_clean(x), _clean(y))
        if not ring or ring[-1] != p:
            ring.append(p)
    while len(ring) > 1 and ring[0] == ring[-1]:
        ring.pop()
    if len(ring) < 3:
        raise UnsupportedRepresentation("footprint has fewer than three distinct vertices")
    area = _signed_area(ring)
    if area == 0.0:
        raise UnsupportedRepresentation("footprint has zero area")
    if not is_simple(ring):
        raise UnsupportedRepresentation("footprint is self-intersecting")
    if area < 0:
        ring.reverse()
    k = ring.index(min(ring))
    return tuple(ring[k:] + ring[:k])


def _curve_points(r: _Reader, curve: StepEntity | None) -> list[tuple[float, float]]:
    """2-D points of a planar curve in its own coordinate system (file units)."""
    if curve is None:
        raise UnsupportedRepresentation("missing curve")
    t = curve.type_name
    if t == "IFCPOLYLINE":
        pts = []
        for pid in _refs(_arg(curve, 0)):
            ent = r.ent(pid)
            coords = _arg(ent, 0) if ent is not None else None
            if not isinstance(coords, tuple) or len(coords) < 2 or not all(_num(c) for c in coords):
                raise UnsupportedRepresentation(f"bad polyline point #{pid}")
            pts.append((float(coords[0]), float(coords[1])))
        return pts
    if t == "IFCINDEXEDPOLYCURVE":
        plist = r.ent(_arg(curve, 0))
        if plist is None or plist.type_name not in ("IFCCARTESIANPOINTLIST2D", "IFCCARTESIANPOINTLIST3D"):
            raise UnsupportedRepresentation("indexed poly curve without point list")
        coords = _arg(plist, 0)
        if not isinstance(coords, tuple):
            raise UnsupportedRepresentation("bad point list")
        table = []
        for c in coords:
            if not isinstance(c, tuple) or len(c) < 2 or not all(_num(v) for v in c):
                raise UnsupportedRepresentation("bad point list entry")
            table.append((float(c[0]), float(c[1])))
        segments = _arg(curve, 1)
        if segments is NULL:
            return table
        order: list[int] = []
        for seg in segments if isinstance(segments, tuple) else ():
            if not isinstance(seg, Typed) or seg.name != "IFCLINEINDEX":
                raise UnsupportedRepresentation("arc segments are not supported")
            idx = list(seg.value) if isinstance(seg.value, tuple) else []
            if order and idx and order[-1] == idx[0]:
                idx = idx[1:]
            order.extend(idx)
        try:
            return [table[i - 1] for i in order]
        except (IndexError, TypeError):
            raise UnsupportedRepresentation("segment index out of range") from None
    if t in ("IFCGEOMETRICCURVESET", "IFCGEOMETRICSET"):
        for eid in _refs(_arg(curve, 0)):
            try:
                return _curve_points(r, r.ent(eid))
            except UnsupportedRepresentation:
                continue
    raise UnsupportedRepresentation(f"unsupported curve {t}")


def _profile_points(r: _Reader, profile: StepEntity | None) -> list[tuple[float, float]]:
    if profile is None:
        raise UnsupportedRepresentation("missing profile")
    t = profile.type_name
    if t == "IFCRECTANGLEPROFILEDEF":
        xd, yd = _arg(profile, 3), _arg(profile, 4)
        if not (_num(xd) and _num(yd)):
            raise UnsupportedRepresentation("rectangle profile without dimensions")
        hx, hy = float(xd) / 2.0, float(yd) / 2.0
        corners = [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)]
        pos = _arg(profile, 2)
        if pos is NULL:
            return corners
        m = r.axis_placement(pos)
        # axis placement origins are already scaled; undo for profile-local maths
        m = (m[0], m[1], m[2], tuple(c / r.scale for c in m[3]))
        return [_apply(m, c)[:2] for c in corners]
    if t in ("IFCARBITRARYCLOSEDPROFILEDEF", "IFCARBITRARYPROFILEDEFWITHVOIDS"):
        return _curve_points(r, r.ent(_arg(profile, 2)))
    raise UnsupportedRepresentation(f"unsupported profile {t}")


def _solid(r: _Reader, item: StepEntity | None, depth: int = 0) -> StepEntity | None:
    while item is not None and depth < 16:
        if item.type_name == "IFCEXTRUDEDAREASOLID":
            return item
        if item.type_name in ("IFCBOOLEANCLIPPINGRESULT", "IFCBOOLEANRESULT"):
            item = r.ent(_arg(item, 1))
            depth += 1
            continue
        return None
    return None


def _footprint(r: _Reader, space: StepEntity) -> tuple[Polygon, float | None]:
    shape = r.ent(_arg(space, 6))
    if shape is None:
        raise UnsupportedRepresentation("space has no representation")
    placement = r.product_matrix(space)
    reps = [r.ent(x) for x in _refs(_arg(shape, 2))]
    reps = [x for x in reps if x is not None and x.type_name == "IFCSHAPEREPRESENTATION"]
    # footprint curves first, then extruded bodies
    reps.sort(key=lambda x: (_str(_arg(x, 1)) or "").upper() != "FOOTPRINT")
    last_error = "no extractable 2-D boundary"
    for rep in reps:
        ident = (_str(_arg(rep, 1)) or "").upper()
        for item_id in _refs(_arg(rep, 3)):
            item = r.ent(item_id)
            try:
                if ident == "FOOTPRINT":
                    pts = _curve_points(r, item)
                    world = [_apply(placement, (x * r.scale, y * r.scale, 0.0)) for x, y in pts]
                    return normalize_polygon((p[0], p[1]) for p in world), None
                solid = _solid(r, item)
                if solid is None:
                    continue
                pts = _profile_points(r, r.ent(_arg(solid, 0)))
                m = _compose(placement, r.axis_placement(_arg(solid, 1)))
                world = [_apply(m, (x * r.scale, y * r.scale, 0.0)) for x, y in pts]
                height = _arg(solid, 3)
                height = _clean(float(height) * r.scale) if _num(height) else None
                return normalize_polygon((p[0], p[1]) for p in world), height
            except UnsupportedRepresentation as exc:
                last_error = str(exc)
    raise UnsupportedRepresentation(last_error)


def footprint_of(space: StepEntity, file: StepFile) -> Polygon:
    """Counter-clockwise footprint of an IfcSpace in model metres."""
    return _footprint(_Reader(file, []), space)[0]


# -- property sets ------------------------------------------------------------

def _property_sets(r: _Reader) -> dict[int, dict[str, dict[str, Any]]]:
    out: dict[int, dict[str, dict[str, Any]]] = {}
    for rel in r.file.by_type("IFCRELDEFINESBYPROPERTIES"):
        pset = r.ent(_arg(rel, 5))
        if pset is None or pset.type_name != "IFCPROPERTYSET":
            continue
        name = _str(_arg(pset, 2)) or ""
        props: dict[str, Any] = {}
        for pid in _refs(_arg(pset, 4)):
            prop = r.ent(pid)
            if prop is None or prop.type_name != "IFCPROPERTYSINGLEVALUE":
                continue
            key = _str(_arg(prop, 0))
            if key is None:
                continue
            value = _arg(prop, 2)
            if isinstance(value, Typed):
                value = value.value
            if isinstance(value, step.Enum):
                value = {"T": True, "F": False}.get(value.name, value.name)
            props[key] = None if value is NULL else value
        for oid in _refs(_arg(rel, 4)):
            out.setdefault(oid, {}).setdefault(name, {}).update(props)
    return out


def _text(v) -> str | None:
    if v is None:
        return None
    if isinstance(v, str):
        v = v.strip()
        return v or None
    if isinstance(v, bool):
        return None
    if _num(v):
        return str(v)
    return None


_POINT_KINDS = {k.value.upper(): k for k in PointKind}


def _bms_params(props: Mapping[str, Any], source_id: str, diags: list) -> BmsParams:
    points = []
    raw_points = _text(props.get("Points"))
    for chunk in (raw_points or "").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        kind, _, tsid = chunk.partition(":")
        pk = _POINT_KINDS.get(kind.strip().upper())
        if pk is None:
            emit(diags, "UnknownPointKind", source_id, f"unknown point kind {kind.strip()!r}")
            continue
        points.append(PointSpec(pk, tsid.strip() or None))
    controls = tuple(
        c.strip() for c in (_text(props.get("ControlsIdentifier")) or "").split(",") if c.strip()
    )
    return BmsParams(
        identifier=_text(props.get("Identifier")),
        hosting_room=_text(props.get("HostingRoom")),
        timeseries_id=_text(props.get("TimeSeriesId")),
        master_panel=_text(props.get("MasterPanel")),
        points=tuple(points),
        controls=controls,
    )


# -- classification -------------------------------------------------------------

_EQUIPMENT_TYPES = (
    "IFCAIRTERMINALBOX", "IFCUNITARYEQUIPMENT", "IFCUNITARYCONTROLELEMENT", "IFCCONTROLLER",
    "IFCSENSOR", "IFCAIRTERMINAL",
    # generic IFC2x3-style carriers; only mapped with an explicit Kind
    "IFCFLOWCONTROLLER", "IFCFLOWTERMINAL", "IFCENERGYCONVERSIONDEVICE",
)
_DUCT_TYPES = ("IFCDUCTSEGMENT", "IFCDUCTFITTING")
_KIND_TAGS = {
    "VAV": EquipmentKind.VAV,
    "FCU": EquipmentKind.FCU,
    "FANCOILUNIT": EquipmentKind.FCU,
    "THERMOSTAT": EquipmentKind.THERMOSTAT,
    "AIRTERMINAL": EquipmentKind.AIR_TERMINAL,
}


def _squash(text: str | None) -> str:
    return re.sub(r"[^A-Z0-9]", "", (text or "").upper())


def classify(ent: StepEntity, props: Mapping[str, Any]) -> EquipmentKind | None:
    """Equipment kind of a candidate entity, or ``None`` when it is not mapped."""
    tag = _squash(_text(props.get("Kind")))
    if tag:
        return _KIND_TAGS.get(tag)
    t = ent.type_name
    if t == "IFCAIRTERMINALBOX":
        return EquipmentKind.VAV
    if t == "IFCAIRTERMINAL":
        return EquipmentKind.AIR_TERMINAL
    predefined = _arg(ent, 8)
    words = [_squash(_str(_arg(ent, 4))), _squash(_str(_arg(ent, 2)))]
    if isinstance(predefined, step.Enum):
        words.append(predefined.name.replace("_", ""))
    if t == "IFCUNITARYEQUIPMENT":
        if any("FANCOIL" in w or w.startswith("FCU") for w in words):
            return EquipmentKind.FCU
        return None
    if t in ("IFCUNITARYCONTROLELEMENT", "IFCCONTROLLER", "IFCSENSOR"):
        if any("THERMOSTAT" in w for w in words):
            return EquipmentKind.THERMOSTAT
    return None


_FLOW = {
    "SOURCE": FlowDirection.SOURCE,
    "SINK": FlowDirection.SINK,
    "SOURCEANDSINK": FlowDirection.BIDIRECTIONAL,
}


# -- extraction -------------------------------------------------------------------

def extract_model(file: StepFile) -> BuildingModel:
    """Interpret the IFC subset of a parsed file as a :class:`BuildingModel`.

    Raises :class:`MissingBuildingError` when there is no IfcBuilding; all
    other problems become diagnostics on the returned model.
    """
    diags: list[Diagnostic] = []
    r = _Reader(file, diags)
    buildings = file.by_type("IFCBUILDING")
    if not buildings:
        raise MissingBuildingError("file contains no IfcBuilding")
    if file.dangling:
        for src, dst in file.dangling:
            emit(diags, "DanglingReference", None, f"#{src} references missing #{dst}")

    taken: dict[str, int] = {}

    def gid(ent: StepEntity) -> str | None:
        g = _str(_arg(ent, 0))
        if not g:
            emit(diags, "MissingGlobalId", None, f"#{ent.id} {ent.type_name} has no GlobalId")
            return None
        if g in taken:
            emit(diags, "DuplicateGlobalId", g,
                 f"#{ent.id} reuses the GlobalId of #{taken[g]}; element skipped")
            return None
        taken[g] = ent.id
        return g

    def name_of(ent: StepEntity, fallback: str) -> str:
        return _str(_arg(ent, 2)) or fallback

    bent = buildings[0]
    if len(buildings) > 1:
        emit(diags, "MultipleBuildings", _str(_arg(bent, 0)),
             f"{len(buildings)} buildings found; only #{bent.id} is converted")
    bgid = gid(bent)
    if bgid is None:
        raise MissingBuildingError(f"IfcBuilding #{bent.id} has no usable GlobalId")
    building = Building(bgid, name_of(bent, bgid))

    # spatial decomposition: (relation id, parent id, child id)
    links: list[tuple[int, int, int]] = []
    for rel in file.by_type("IFCRELAGGREGATES", "IFCRELNESTS"):
        parent = _arg(rel, 4)
        if isinstance(parent, Ref):
            links.extend((rel.id, parent.id, c) for c in _refs(_arg(rel, 5)))
    for rel in file.by_type("IFCRELCONTAINEDINSPATIALSTRUCTURE"):
        parent = _arg(rel, 5)
        if isinstance(parent, Ref):
            links.extend((rel.id, parent.id, c) for c in _refs(_arg(rel, 4)))
    links.sort()
    parents: dict[int, list[int]] = {}
    for _, parent, child in links:
        lst = parents.setdefault(child, [])
        if parent not in lst:
            lst.append(parent)

    # levels
    level_by_ent: dict[int, Level] = {}
    for ent in file.by_type("IFCBUILDINGSTOREY"):
        if bent.id not in parents.get(ent.id, []):
            emit(diags, "OrphanLevel", _str(_arg(ent, 0)),
                 f"storey #{ent.id} is not part of building #{bent.id}; skipped")
            continue
        g = gid(ent)
        if g is None:
            continue
        z = None
        if _arg(ent, 5) is not NULL:
            z = r.location(ent)[2]
        elevation = _arg(ent, 9)
        if z is None:
            z = _clean(float(elevation) * r.scale) if _num(elevation) else 0.0
        level_by_ent[ent.id] = Level(g, name_of(ent, g), z)
    levels = sorted(level_by_ent.values(), key=lambda lv: (lv.elevation, lv.source_id))
    for a, b in zip(levels, levels[1:]):
        if a.elevation == b.elevation:
            emit(diags, "DuplicateElevation", b.source_id,
                 f"levels {a.name!r} and {b.name!r} share elevation {a.elevation}")

    # rooms
    room_by_ent: dict[int, Room] = {}
    for ent in file.by_type("IFCSPACE"):
        storeys = [p for p in parents.get(ent.id, []) if p in level_by_ent]
        sid = _str(_arg(ent, 0))
        if not storeys:
            emit(diags, "OrphanRoom", sid, f"space #{ent.id} is not contained in a storey; skipped")
            continue
        if len(storeys) > 1:
            emit(diags, "OrphanRoom", sid,
                 f"ambiguous containment: space #{ent.id} is related to storeys "
                 f"{', '.join('#%d' % s for s in storeys)}; using #{storeys[0]}")
        g = gid(ent)
        if g is None:
            continue
        footprint = height = None
        try:
            footprint, height = _footprint(r, ent)
        except UnsupportedRepresentation as exc:
            emit(diags, "UnsupportedRepresentation", g,
                 f"no usable footprint ({exc}); room excluded from spatial inference")
        room_by_ent[ent.id] = Room(
            g, name_of(ent, g), level_by_ent[storeys[0]].source_id, footprint, height,
            _str(_arg(ent, 7)),
        )

    # zones
    members: dict[int, list[int]] = {}
    for rel in file.by_type("IFCRELASSIGNSTOGROUP"):
        group = _arg(rel, 6)
        if isinstance(group, Ref):
            members.setdefault(group.id, []).extend(_refs(_arg(rel, 4)))
    for rel in file.by_type("IFCRELREFERENCEDINSPATIALSTRUCTURE"):
        group = _arg(rel, 5)
        if isinstance(group, Ref):
            members.setdefault(group.id, []).extend(_refs(_arg(rel, 4)))
    for _, parent, child in links:
        members.setdefault(parent, []).append(child)
    zones = []
    for ent in file.by_type("IFCZONE", "IFCSPATIALZONE"):
        rooms = []
        for m in members.get(ent.id, []):
            room = room_by_ent.get(m)
            if room is not None and room.source_id not in rooms:
                rooms.append(room.source_id)
        sid = _str(_arg(ent, 0))
        if not rooms:
            emit(diags, "EmptyZone", sid, f"zone #{ent.id} groups no known rooms; skipped")
            continue
        g = gid(ent)
        if g is not None:
            zones.append(HvacZone(g, name_of(ent, g), tuple(rooms)))

    # property sets keyed by entity id
    psets_by_ent = _property_sets(r)

    # equipment, terminals, ducts
    elem_by_ent: dict[int, str] = {}
    raw_equipment: list[tuple[StepEntity, str, EquipmentKind]] = []
    for ent in file.by_type(*_EQUIPMENT_TYPES):
        props = psets_by_ent.get(ent.id, {}).get(PSET_NAME, {})
        kind = classify(ent, props)
        if kind is None:
            continue
        g = gid(ent)
        if g is None:
            continue
        elem_by_ent[ent.id] = g
        raw_equipment.append((ent, g, kind))
    duct_ents = []
    for ent in file.by_type(*_DUCT_TYPES):
        g = gid(ent)
        if g is not None:
            elem_by_ent[ent.id] = g
            duct_ents.append((ent, g))

    # ports
    owner_of: dict[int, int] = {}
    for rel in file.by_type("IFCRELNESTS"):
        host = _arg(rel, 4)
        if isinstance(host, Ref):
            for pid in _refs(_arg(rel, 5)):
                owner_of.setdefault(pid, host.id)
    for rel in file.by_type("IFCRELCONNECTSPORTTOELEMENT"):
        port, host = _arg(rel, 4), _arg(rel, 5)
        if isinstance(port, Ref) and isinstance(host, Ref):
            owner_of.setdefault(port.id, host.id)
    port_fields: dict[int, dict] = {}
    for ent in file.by_type("IFCDISTRIBUTIONPORT"):
        owner = owner_of.get(ent.id)
        if owner is None:
            emit(diags, "UnownedPort", _str(_arg(ent, 0)), f"port #{ent.id} has no owning element")
            continue
        if owner not in elem_by_ent:
            continue  # port of an element outside the mapped subset
        g = gid(ent)
        if g is None:
            continue
        flow = _arg(ent, 7)
        port_fields[ent.id] = dict(
            source_id=g, owner_ref=elem_by_ent[owner], position=r.location(ent),
            flow_direction=_FLOW.get(flow.name) if isinstance(flow, step.Enum) else None,
            connected_to=None,
        )
    for rel in file.by_type("IFCRELCONNECTSPORTS"):
        a, b = _arg(rel, 4), _arg(rel, 5)
        if not (isinstance(a, Ref) and isinstance(b, Ref)):
            continue
        pa, pb = port_fields.get(a.id), port_fields.get(b.id)
        if pa is None or pb is None or a.id == b.id:
            continue
        if pa["connected_to"] is not None or pb["connected_to"] is not None:
            emit(diags, "MultiplyConnectedPort", pa["source_id"],
                 f"connection #{rel.id} ignored: a port may join only one other port")
            continue
        pa["connected_to"], pb["connected_to"] = pb["source_id"], pa["source_id"]
    ports = {f["source_id"]: Port(**f) for _, f in sorted(port_fields.items())}
    ports_of: dict[str, list[str]] = {}
    for p in ports.values():
        ports_of.setdefault(p.owner_ref, []).append(p.source_id)

    # element psets keyed by source id, BMS parameters
    psets: dict[str, dict[str, dict[str, Any]]] = {}
    all_mapped = {**{k: v.source_id for k, v in level_by_ent.items()},
                  **{k: v.source_id for k, v in room_by_ent.items()}, **elem_by_ent,
                  bent.id: bgid}
    for ent_id, g in all_mapped.items():
        if ent_id in psets_by_ent:
            psets[g] = psets_by_ent[ent_id]

    equipment, terminals = [], []
    seen_identifiers: dict[str, str] = {}
    for ent, g, kind in raw_equipment:
        bms = _bms_params(psets_by_ent.get(ent.id, {}).get(PSET_NAME, {}), g, diags)
        if bms.identifier is not None:
            if bms.identifier in seen_identifiers:
                emit(diags, "DuplicateIdentifier", g,
                     f"BMS identifier {bms.identifier!r} already used by "
                     f"{seen_identifiers[bms.identifier]}; ignored here")
                bms = BmsParams(None, bms.hosting_room, bms.timeseries_id, bms.master_panel,
                                bms.points, bms.controls)
            else:
                seen_identifiers[bms.identifier] = g
        point = r.location(ent)
        if point is None:
            emit(diags, "MissingPlacement", g, f"#{ent.id} has no placement point")
        item = Equipment(g, name_of(ent, g), kind, point, tuple(ports_of.get(g, ())), bms)
        (terminals if kind is EquipmentKind.AIR_TERMINAL else equipment).append(item)
    ducts = [Duct(g, name_of(ent, g), tuple(ports_of.get(g, ()))) for ent, g in duct_ents]

    return BuildingModel(
        building=building,
        levels=tuple(levels),
        rooms=tuple(room_by_ent[k] for k in sorted(room_by_ent)),
        zones=tuple(zones),
        equipment=tuple(equipment),
        air_terminals=tuple(terminals),
        ducts=tuple(ducts),
        ports=ports,
        psets=psets,
        diagnostics=tuple(diags),
        length_unit=r.scale,
    )


def load_model(path) -> BuildingModel:
    return extract_model(step.read_step(path))


__all__ = [
    "Building", "BmsParams", "BuildingModel", "Duct", "Equipment", "EquipmentKind",
    "FlowDirection", "HvacZone", "Level", "MissingBuildingError", "Point3", "PointKind",
    "PointSpec", "Polygon", "Port", "Room", "UnsupportedRepresentation", "classify",
    "extract_model", "footprint_of", "length_unit_scale", "load_model", "normalize_polygon",
    "polygon_area",
]
