"""Relationships implied by the building model's geometry and topology."""
from __future__ import annotations

import bisect
from array import array
from collections import deque
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Iterator, NamedTuple, Sequence

from ._kernels import point_in_polygon
from .diagnostics import emit
from .ifc import BuildingModel, Equipment, EquipmentKind, FlowDirection
from .occupants import OccupantRecord, select_sample

EQUIPMENT_IN_ROOM = "equipment_in_room"
OCCUPANT_IN_ROOM = "occupant_in_room"
ROOM_IN_ZONE = "room_in_zone"
FEEDS_ZONE = "feeds_zone"
CONTROLS = "controls"
KINDS = (EQUIPMENT_IN_ROOM, OCCUPANT_IN_ROOM, ROOM_IN_ZONE, FEEDS_ZONE, CONTROLS)

AMBIGUOUS_CONTROL_LIMIT = 3
_SUPPLY = (EquipmentKind.VAV, EquipmentKind.FCU)


class Relation(NamedTuple):
    subject: str
    kind: str
    object: str


@dataclass(frozen=True)
class RelationSet:
    """Duplicate-free relations in canonical ``(subject, kind, object)`` order."""

    relations: tuple[Relation, ...] = ()

    @classmethod
    def of(cls, items: Iterable[Sequence[str]]) -> "RelationSet":
        return cls(tuple(sorted({Relation(*r) for r in items})))

    def __iter__(self) -> Iterator[Relation]:
        return iter(self.relations)

    def __len__(self) -> int:
        return len(self.relations)

    def __or__(self, other: "RelationSet") -> "RelationSet":
        return RelationSet.of(self.relations + other.relations)

    def of_kind(self, kind: str) -> list[Relation]:
        return [r for r in self.relations if r.kind == kind]

    def mapping(self, kind: str) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for r in self.of_kind(kind):
            out.setdefault(r.subject, []).append(r.object)
        return out


# -- containment -------------------------------------------------------------------

@dataclass(frozen=True)
class _RoomShape:
    source_id: str
    ring: array
    bbox: tuple[float, float, float, float]


class ContainmentIndex:
    """Rooms with footprints grouped by level z-range.

    A level covers ``[elevation, next elevation)``; the top level is open
    above and nothing lies below the lowest level. Levels sharing an
    elevation share one range.
    """

    def __init__(self, levels: Iterable[tuple[float, Iterable[tuple[str, Sequence]]]]):
        slots: dict[float, list[_RoomShape]] = {}
        for elevation, rooms in levels:
            bucket = slots.setdefault(float(elevation), [])
            for source_id, footprint in rooms:
                ring = array("d", [c for p in footprint for c in p[:2]])
                xs, ys = ring[0::2], ring[1::2]
                bucket.append(_RoomShape(source_id, ring, (min(xs), min(ys), max(xs), max(ys))))
        self.elevations = sorted(slots)
        self.slots = [tuple(sorted(slots[e], key=lambda r: r.source_id)) for e in self.elevations]

    @classmethod
    def from_model(cls, model: BuildingModel) -> "ContainmentIndex":
        by_level: dict[str, list] = {lv.source_id: [] for lv in model.levels}
        for room in model.rooms:
            if room.footprint is not None and room.level_ref in by_level:
                by_level[room.level_ref].append((room.source_id, room.footprint))
        return cls((lv.elevation, by_level[lv.source_id]) for lv in model.levels)

    def slot_at(self, z: float) -> int | None:
        i = bisect.bisect_right(self.elevations, z) - 1
        return i if i >= 0 else None

    def rooms_containing(self, x: float, y: float, z: float) -> list[str]:
        i = self.slot_at(z)
        if i is None:
            return []
        hits = []
        for shape in self.slots[i]:
            x0, y0, x1, y1 = shape.bbox
            if x0 <= x <= x1 and y0 <= y <= y1 and point_in_polygon(x, y, shape.ring):
                hits.append(shape.source_id)
        return hits


def locate(point: Sequence[float], index: ContainmentIndex,
           diagnostics: list | None = None) -> str | None:
    """Room containing ``point`` (boundary inclusive), or ``None``.

    Overlapping footprints resolve to the smallest room source id.
    """
    x, y, z = point
    hits = index.rooms_containing(x, y, z)
    if not hits:
        return None
    if len(hits) > 1:
        emit(diagnostics, "OverlappingRooms", hits[0],
             f"point ({x}, {y}, {z}) lies in rooms {', '.join(hits)}; using {hits[0]}")
    return hits[0]


# -- equipment ---------------------------------------------------------------------

def _room_lookup(model: BuildingModel) -> dict[str, list[str]]:
    table: dict[str, list[str]] = {}
    for room in model.rooms:
        for key in {room.source_id, room.name, room.long_name}:
            if key:
                table.setdefault(key, []).append(room.source_id)
    return table


def infer_equipment_rooms(model: BuildingModel, index: ContainmentIndex,
                          diagnostics: list | None = None) -> RelationSet:
    """``equipment_in_room`` for every equipment item and air terminal.

    A ``HostingRoom`` parameter overrides the placement point.
    """
    lookup = _room_lookup(model)
    out = []
    for eq in model.all_equipment():
        if eq.bms.hosting_room:
            matches = sorted(set(lookup.get(eq.bms.hosting_room, ())))
            if not matches:
                emit(diagnostics, "UnknownHostingRoom", eq.source_id,
                     f"hosting room {eq.bms.hosting_room!r} matches no room")
                continue
            if len(matches) > 1:
                emit(diagnostics, "AmbiguousHostingRoom", eq.source_id,
                     f"hosting room {eq.bms.hosting_room!r} matches {len(matches)} rooms; "
                     f"using {matches[0]}")
            out.append((eq.source_id, EQUIPMENT_IN_ROOM, matches[0]))
            continue
        if eq.placement_point is None:
            emit(diagnostics, "UnlocatedEquipment", eq.source_id, "no placement point")
            continue
        room = locate(eq.placement_point, index, diagnostics)
        if room is None:
            emit(diagnostics, "UnlocatedEquipment", eq.source_id,
                 f"placement point {eq.placement_point} lies outside every room")
            continue
        out.append((eq.source_id, EQUIPMENT_IN_ROOM, room))
    return RelationSet.of(out)


def zone_membership(model: BuildingModel) -> RelationSet:
    return RelationSet.of(
        (room, ROOM_IN_ZONE, zone.source_id) for zone in model.zones for room in zone.room_refs
    )


def _leaves_via(port) -> bool:
    return port.flow_direction in (None, FlowDirection.SOURCE, FlowDirection.BIDIRECTIONAL)


def reachable_terminals(model: BuildingModel, start: Equipment) -> set[str]:
    """Air terminals reachable from ``start`` through duct elements."""
    ports = model.ports
    terminals = {t.source_id for t in model.air_terminals}
    ducts = {d.source_id: d for d in model.ducts}
    found: set[str] = set()
    visited = {start.source_id}
    queue = deque(p for p in start.ports if p in ports and _leaves_via(ports[p]))
    while queue:
        port = ports[queue.popleft()]
        if port.connected_to is None or port.connected_to not in ports:
            continue
        owner = ports[port.connected_to].owner_ref
        if owner in terminals:
            found.add(owner)
        elif owner in ducts and owner not in visited:
            visited.add(owner)
            queue.extend(p for p in ducts[owner].ports if p in ports)
    return found


def infer_feeds(model: BuildingModel, equipment_rooms: RelationSet,
                diagnostics: list | None = None) -> RelationSet:
    """``feeds_zone`` from each VAV/FCU to the zones of the terminals it reaches."""
    terminal_room = {s: objs[0] for s, objs in equipment_rooms.mapping(EQUIPMENT_IN_ROOM).items()}
    zones_of = zone_membership(model).mapping(ROOM_IN_ZONE)
    out = []
    reported: set[str] = set()
    for eq in model.equipment:
        if eq.kind not in _SUPPLY:
            continue
        for terminal in sorted(reachable_terminals(model, eq)):
            room = terminal_room.get(terminal)
            if room is None:
                if terminal not in reported:
                    reported.add(terminal)
                    emit(diagnostics, "UnlocatedTerminal", terminal,
                         "air terminal lies in no room; skipped for zone feeding")
                continue
            out.extend((eq.source_id, FEEDS_ZONE, z) for z in zones_of.get(room, ()))
    return RelationSet.of(out)


def infer_controls(model: BuildingModel, relations: RelationSet,
                   diagnostics: list | None = None) -> RelationSet:
    """``controls`` from thermostats to VAV/FCU equipment.

    Explicit ``ControlsIdentifier`` links win; otherwise supply equipment
    in the thermostat's room, otherwise equipment feeding that room's zones.
    """
    supply = [e for e in model.equipment if e.kind in _SUPPLY]
    by_identifier = {}
    for e in supply:
        by_identifier.setdefault(e.source_id, e.source_id)
        if e.bms.identifier:
            by_identifier[e.bms.identifier] = e.source_id
    room_of = {s: objs[0] for s, objs in relations.mapping(EQUIPMENT_IN_ROOM).items()}
    feeds = relations.mapping(FEEDS_ZONE)
    zones_of = zone_membership(model).mapping(ROOM_IN_ZONE)

    out = []
    for t in model.equipment:
        if t.kind is not EquipmentKind.THERMOSTAT:
            continue
        if t.bms.controls:
            targets = []
            for ident in t.bms.controls:
                target = by_identifier.get(ident)
                if target is None:
                    emit(diagnostics, "UnknownControlTarget", t.source_id,
                         f"ControlsIdentifier {ident!r} matches no VAV or FCU")
                else:
                    targets.append(target)
        else:
            room = room_of.get(t.source_id)
            if room is None:
                emit(diagnostics, "UncontrolledThermostat", t.source_id, "thermostat has no room")
                continue
            targets = [e.source_id for e in supply if room_of.get(e.source_id) == room]
            if not targets:
                room_zones = set(zones_of.get(room, ()))
                targets = [e.source_id for e in supply if room_zones & set(feeds.get(e.source_id, ()))]
            if not targets:
                emit(diagnostics, "UncontrolledThermostat", t.source_id,
                     f"no VAV or FCU serves room {room}")
                continue
        targets = sorted(set(targets))
        if len(targets) > AMBIGUOUS_CONTROL_LIMIT:
            emit(diagnostics, "AmbiguousControl", t.source_id,
                 f"thermostat matches {len(targets)} equipment items")
        out.extend((t.source_id, CONTROLS, e) for e in targets)
    return RelationSet.of(out)


def infer_occupant_rooms(records: Iterable[OccupantRecord], index: ContainmentIndex,
                         as_of: datetime | None = None,
                         diagnostics: list | None = None) -> RelationSet:
    """``occupant_in_room`` from each occupant's nearest-previous sample."""
    out = []
    for rec in records:
        sample = select_sample(rec, as_of)
        if sample is None:
            emit(diagnostics, "UnlocatedOccupant", rec.subject_id,
                 "no localised sample at or before the selected instant")
            continue
        room = locate(sample.local, index, diagnostics)
        if room is None:
            emit(diagnostics, "UnlocatedOccupant", rec.subject_id,
                 f"sample at {sample.timestamp.isoformat()} lies outside every room")
            continue
        out.append((rec.subject_id, OCCUPANT_IN_ROOM, room))
    return RelationSet.of(out)


def infer_all(model: BuildingModel, records: Sequence[OccupantRecord] = (),
              as_of: datetime | None = None, diagnostics: list | None = None
              ) -> RelationSet:
    """Every relation kind, in canonical order."""
    index = ContainmentIndex.from_model(model)
    rooms = infer_equipment_rooms(model, index, diagnostics)
    feeds = infer_feeds(model, rooms, diagnostics)
    controls = infer_controls(model, rooms | feeds, diagnostics)
    people = infer_occupant_rooms(records, index, as_of, diagnostics)
    return rooms | feeds | controls | people | zone_membership(model)
