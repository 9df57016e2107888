"""BRICK graph construction for the People, BMS and DigitalTwin modes."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

from .ifc import BuildingModel, EquipmentKind, PointKind
from .inference import (
    CONTROLS, EQUIPMENT_IN_ROOM, FEEDS_ZONE, OCCUPANT_IN_ROOM, RelationSet,
)
from .occupants import OccupantRecord

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
BRICK = "https://brickschema.org/schema/Brick#"
B2B = "urn:bim2brick:schema#"
OCC = "urn:bim2brick:occupant#"

RDF_TYPE = RDF + "type"
RDFS_LABEL = RDFS + "label"
XSD_INTEGER = XSD + "integer"
XSD_STRING = XSD + "string"
SOURCE_ID = B2B + "sourceId"
TIMESERIES_ID = B2B + "timeseriesId"
MASTER_PANEL = B2B + "masterPanel"
IDENTIFIER = B2B + "identifier"


class Mode(str, Enum):
    PEOPLE = "people"
    BMS = "bms"
    DIGITAL_TWIN = "digital-twin"


class EmptyModelError(ValueError):
    pass


# -- taxonomy ----------------------------------------------------------------------

#: instance classes and their direct superclasses; the abstract parents are
#: only used for subclass queries and never typed on instances
TAXONOMY: Mapping[str, tuple[str, ...]] = {
    "Building": ("Location",),
    "Floor": ("Location",),
    "Room": ("Space",),
    "HVAC_Zone": ("Zone",),
    "Variable_Air_Volume_Box": ("Terminal_Unit",),
    "Fan_Coil_Unit": ("Terminal_Unit",),
    "Terminal_Unit": ("HVAC_Equipment",),
    "Thermostat": ("Equipment",),
    "CO2_Sensor": ("Sensor",),
    "Temperature_Sensor": ("Sensor",),
    "Humidity_Sensor": ("Sensor",),
    "Individual": ("Occupant",),
    "Occupant": (),
    # abstract parents
    "Space": ("Location",),
    "Zone": ("Location",),
    "Location": (),
    "HVAC_Equipment": ("Equipment",),
    "Equipment": (),
    "Sensor": ("Point",),
    "Point": (),
}
INSTANCE_CLASSES = frozenset({
    "Building", "Floor", "Room", "HVAC_Zone", "Variable_Air_Volume_Box", "Fan_Coil_Unit",
    "Thermostat", "Terminal_Unit", "CO2_Sensor", "Temperature_Sensor", "Humidity_Sensor",
    "Occupant", "Individual",
})


def superclasses(name: str) -> set[str]:
    """All strict ancestors of a taxonomy class."""
    seen: set[str] = set()
    stack = list(TAXONOMY[name])
    while stack:
        parent = stack.pop()
        if parent not in seen:
            seen.add(parent)
            stack.extend(TAXONOMY[parent])
    return seen


def is_subclass(name: str, parent: str) -> bool:
    return name == parent or parent in superclasses(name)


class BrickRelation(str, Enum):
    HAS_PART = "hasPart"
    IS_PART_OF = "isPartOf"
    HAS_LOCATION = "hasLocation"
    IS_LOCATION_OF = "isLocationOf"
    FEEDS = "feeds"
    IS_FED_BY = "isFedBy"
    HAS_POINT = "hasPoint"
    IS_POINT_OF = "isPointOf"
    HAS_TAG = "hasTag"
    IS_TAG_OF = "isTagOf"

    @property
    def inverse(self) -> "BrickRelation":
        return _INVERSES[self]

    @property
    def iri(self) -> str:
        return BRICK + self.value


_INVERSES = {}
for _a, _b in (("HAS_PART", "IS_PART_OF"), ("HAS_LOCATION", "IS_LOCATION_OF"),
               ("FEEDS", "IS_FED_BY"), ("HAS_POINT", "IS_POINT_OF"), ("HAS_TAG", "IS_TAG_OF")):
    _INVERSES[BrickRelation[_a]] = BrickRelation[_b]
    _INVERSES[BrickRelation[_b]] = BrickRelation[_a]

HAS_PART = BrickRelation.HAS_PART.iri
HAS_LOCATION = BrickRelation.HAS_LOCATION.iri
FEEDS = BrickRelation.FEEDS.iri
HAS_POINT = BrickRelation.HAS_POINT.iri

_EQUIPMENT_CLASS = {
    EquipmentKind.VAV: "Variable_Air_Volume_Box",
    EquipmentKind.FCU: "Fan_Coil_Unit",
    EquipmentKind.THERMOSTAT: "Thermostat",
    EquipmentKind.AIR_TERMINAL: "Terminal_Unit",
}


# -- terms ---------------------------------------------------------------------------

class Literal(NamedTuple):
    lexical: str
    datatype: str | None = None

    @classmethod
    def integer(cls, value: int) -> "Literal":
        return cls(str(int(value)), XSD_INTEGER)


Term = "str | Literal"
Triple = tuple  # (subject IRI, predicate IRI, object IRI or Literal)


def object_key(obj) -> tuple:
    if isinstance(obj, Literal):
        return (1, obj.datatype or "", obj.lexical)
    return (0, "", obj)


@dataclass(frozen=True)
class BrickGraph:
    prefixes: Mapping[str, str]
    triples: frozenset = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.triples)

    def nodes(self) -> dict[str, str]:
        """Instance IRI -> class local name (or full IRI outside the BRICK namespace)."""
        out = {}
        for s, p, o in self.triples:
            if p == RDF_TYPE and isinstance(o, str):
                out[s] = o[len(BRICK):] if o.startswith(BRICK) else o
        return out

    def source_ids(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for s, p, o in self.triples:
            if p == SOURCE_ID and isinstance(o, Literal):
                out.setdefault(s, []).append(o.lexical)
        return out

    def links(self) -> list[Triple]:
        """Triples between two IRIs other than ``rdf:type``."""
        return [t for t in self.triples if t[1] != RDF_TYPE and not isinstance(t[2], Literal)]

    def problems(self) -> list[str]:
        """Violations of the graph invariants (empty when sound)."""
        issues = []
        types: dict[str, list] = {}
        for s, p, o in self.triples:
            if p == RDF_TYPE:
                types.setdefault(s, []).append(o)
        ids = self.source_ids()
        for node, classes in sorted(types.items()):
            if len(classes) != 1:
                issues.append(f"{node} has {len(classes)} rdf:type triples")
            elif not (isinstance(classes[0], str) and classes[0].startswith(BRICK)
                      and classes[0][len(BRICK):] in INSTANCE_CLASSES):
                issues.append(f"{node} is typed outside the taxonomy: {classes[0]}")
            if len(ids.get(node, ())) != 1:
                issues.append(f"{node} has {len(ids.get(node, ()))} sourceId annotations")
        seen: dict[str, str] = {}
        for node, values in sorted(ids.items()):
            for v in values:
                if v in seen and seen[v] != node:
                    issues.append(f"sourceId {v!r} used by {seen[v]} and {node}")
                seen.setdefault(v, node)
        return issues


# -- IRI minting ---------------------------------------------------------------------

def sanitize(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]", "_", text) or "_"


def mint_local_names(elements: Iterable[tuple[str, str]], suffix_len: int = 8) -> dict[str, str]:
    """Map source ids to ``<name>_<id suffix>`` local names, unique per call.

    Clashing names fall back to the full sanitised source id, then to a
    numeric suffix in source-id order.
    """
    items = sorted(dict(elements).items())
    short = {sid: f"{sanitize(name)}_{sanitize(sid)[-suffix_len:]}" for sid, name in items}
    clash = Counter(short.values())
    names = {sid: short[sid] if clash[short[sid]] == 1 else f"{sanitize(name)}_{sanitize(sid)}"
             for sid, name in items}
    clash = Counter(names.values())
    taken = set(names.values())
    final = {}
    for sid, _ in items:
        v = names[sid]
        if clash[v] > 1:
            if v in final.values():
                k = 2
                while f"{v}_{k}" in taken:
                    k += 1
                v = f"{v}_{k}"
                taken.add(v)
        final[sid] = v
    return final


@dataclass(frozen=True)
class SensorNode:
    source_id: str
    name: str
    kind: PointKind
    equipment_ref: str
    timeseries_id: str | None


def sensor_nodes(model: BuildingModel) -> list[SensorNode]:
    """Points declared on equipment, with derived ``<equipment>:<kind>`` source ids."""
    out = []
    for eq in model.all_equipment():
        seen: dict[PointKind, int] = {}
        for spec in eq.bms.points:
            n = seen[spec.point_kind] = seen.get(spec.point_kind, 0) + 1
            sid = f"{eq.source_id}:{spec.point_kind.value}" + (f":{n}" if n > 1 else "")
            out.append(SensorNode(sid, f"{eq.name}_{spec.point_kind.value}", spec.point_kind,
                                  eq.source_id, spec.timeseries_id))
    return out


def default_prefixes(model: BuildingModel, occ_namespace: str = OCC) -> dict[str, str]:
    return {
        "rdf": RDF, "rdfs": RDFS, "xsd": XSD, "brick": BRICK, "b2b": B2B,
        "occ": occ_namespace,
        "bldg": f"urn:bim2brick:{sanitize(model.building.name)}#",
    }


# -- construction --------------------------------------------------------------------

def build_graph(model: BuildingModel, relations: RelationSet,
                occupants: Sequence[OccupantRecord] = (), mode: Mode | str = Mode.DIGITAL_TWIN,
                occ_namespace: str = OCC) -> BrickGraph:
    """Assemble the BRICK graph for ``mode``.

    DigitalTwin is built as the union of the People and BMS triples so the
    shared spatial skeleton is identical across modes.
    """
    if model is None or model.building is None:
        raise EmptyModelError("no building to convert")
    mode = Mode(mode)
    prefixes = default_prefixes(model, occ_namespace)
    ns = prefixes["bldg"]
    sensors = sensor_nodes(model)

    # minted over every candidate so IRIs do not depend on the mode
    candidates = [(model.building.source_id, model.building.name)]
    for group in (model.levels, model.rooms, model.zones, model.all_equipment(), sensors):
        candidates.extend((e.source_id, e.name) for e in group)
    candidates.extend((o.subject_id, f"Occupant_{o.subject_id}") for o in occupants)
    if len({sid for sid, _ in candidates}) != len(candidates):
        raise ValueError("source ids of model elements and occupants must be distinct")
    iri = {sid: ns + local for sid, local in mint_local_names(candidates).items()}

    triples: set = set()
    if mode in (Mode.PEOPLE, Mode.DIGITAL_TWIN):
        triples |= _people_triples(model, relations, occupants, iri, prefixes["occ"])
    if mode in (Mode.BMS, Mode.DIGITAL_TWIN):
        triples |= _bms_triples(model, relations, sensors, iri)
    return BrickGraph(prefixes, frozenset(triples))


def _node(out: set, iri: str, cls: str, source_id: str, label: str) -> None:
    out.add((iri, RDF_TYPE, BRICK + cls))
    out.add((iri, SOURCE_ID, Literal(source_id)))
    out.add((iri, RDFS_LABEL, Literal(label)))


def _skeleton(model: BuildingModel, iri: Mapping[str, str]) -> set:
    out: set = set()
    b = model.building
    _node(out, iri[b.source_id], "Building", b.source_id, b.name)
    for lv in model.levels:
        _node(out, iri[lv.source_id], "Floor", lv.source_id, lv.name)
        out.add((iri[b.source_id], HAS_PART, iri[lv.source_id]))
    for room in model.rooms:
        _node(out, iri[room.source_id], "Room", room.source_id, room.name)
        out.add((iri[room.level_ref], HAS_PART, iri[room.source_id]))
    for zone in model.zones:
        _node(out, iri[zone.source_id], "HVAC_Zone", zone.source_id, zone.name)
        for r in zone.room_refs:
            out.add((iri[zone.source_id], HAS_PART, iri[r]))
    return out


def _people_triples(model, relations: RelationSet, occupants, iri, occ_ns: str) -> set:
    out = _skeleton(model, iri)
    known = set()
    for o in occupants:
        node = iri[o.subject_id]
        known.add(o.subject_id)
        _node(out, node, "Individual", o.subject_id, f"Occupant {o.subject_id}")
        if o.age is not None:
            out.add((node, occ_ns + "age", Literal.integer(o.age)))
        if o.gender is not None:
            out.add((node, occ_ns + "gender", Literal(o.gender)))
    for r in relations.of_kind(OCCUPANT_IN_ROOM):
        if r.subject in known:
            out.add((iri[r.subject], HAS_LOCATION, iri[r.object]))
    return out


def _bms_triples(model, relations: RelationSet, sensors, iri) -> set:
    out = _skeleton(model, iri)
    for eq in model.all_equipment():
        node = iri[eq.source_id]
        _node(out, node, _EQUIPMENT_CLASS[eq.kind], eq.source_id, eq.name)
        for prop, value in ((TIMESERIES_ID, eq.bms.timeseries_id),
                            (MASTER_PANEL, eq.bms.master_panel),
                            (IDENTIFIER, eq.bms.identifier)):
            if value is not None:
                out.add((node, prop, Literal(value)))
    for s in sensors:
        node = iri[s.source_id]
        _node(out, node, s.kind.value, s.source_id, s.name)
        out.add((iri[s.equipment_ref], HAS_POINT, node))
        if s.timeseries_id is not None:
            out.add((node, TIMESERIES_ID, Literal(s.timeseries_id)))
    predicate = {EQUIPMENT_IN_ROOM: HAS_LOCATION, FEEDS_ZONE: FEEDS, CONTROLS: FEEDS}
    for r in relations:
        if r.kind in predicate:
            out.add((iri[r.subject], predicate[r.kind], iri[r.object]))
    return out
