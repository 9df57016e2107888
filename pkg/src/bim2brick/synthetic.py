"""Synthetic campus-building fixture: an IFC4 model plus an occupant CSV.

The layout mirrors a nine-storey office block: 48 rooms each forming its
own HVAC zone, 52 VAV boxes (CO2, humidity and temperature points), 16 fan
coil units (two with CO2 and temperature, fourteen with temperature only),
one thermostat per room, ducted supply from every VAV/FCU to ceiling
terminals, and a connected trunk/riser network. Thirty occupants are
sampled, of whom seventeen have both age and gender.

Everything is deterministic. GlobalIds derive from stable element keys, so
editing one element leaves every other identifier unchanged. Room
coordinates are dyadic, so containment is exact in floating point.
"""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .geo import SiteTransform, utm_to_wgs84
from .step import DERIVED, NULL, Enum, Ref, StepEntity, StepFile, StepHeader, Typed, format_step

_GUID_CHARS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_$"

STOREYS = 9
STOREY_HEIGHT = 4.0
ROOM_SIZE = 8.0
ROOMS_PER_STOREY = (5, 5, 5, 5, 5, 5, 6, 6, 6)
EXTRA_VAV_ROOMS = (0, 1, 2, 3)   # rooms holding a second VAV
FCU_ROOMS = tuple(range(16))
FCU_WITH_CO2 = 2                 # the first FCUs also carry a CO2 point
SPLIT_EVERY = 13                 # VAV k with k % SPLIT_EVERY == 0 also feeds the next room
HOSTED_EVERY = 10                # thermostat r with r % HOSTED_EVERY == 5 is placed by name
SUBJECTS = 30
NO_AGE = (2, 5, 9, 12, 17, 21, 26)
NO_GENDER = (3, 7, 14, 19, 23, 28)
SAMPLE_TIMES = tuple(datetime(2024, 3, 4, 9, tzinfo=timezone.utc) + timedelta(hours=h)
                     for h in range(3))

DEFAULT_ORIGIN = (1.2966, 103.7764, 15.0)
DEFAULT_ROTATION = 30.0


def guid(key: str) -> str:
    """22-character IFC GlobalId derived from ``key``."""
    n = int.from_bytes(hashlib.sha256(key.encode()).digest()[:16], "big")
    chars = []
    for _ in range(22):
        chars.append(_GUID_CHARS[n & 63])
        n >>= 6
    return "".join(reversed(chars))


@dataclass(frozen=True)
class RoomPlan:
    index: int
    storey: int
    slot: int
    name: str
    long_name: str
    origin: tuple[float, float]       # south-west corner in model metres

    @property
    def centre(self) -> tuple[float, float, float]:
        x, y = self.origin
        return x + ROOM_SIZE / 2, y + ROOM_SIZE / 2, self.storey * STOREY_HEIGHT + 1.0


@dataclass(frozen=True)
class SupplyPlan:
    key: str
    kind: str                       # "VAV" or "FCU"
    name: str
    room: int
    points: tuple[str, ...]
    identifier: str
    terminal_rooms: tuple[int, ...]


@dataclass(frozen=True)
class ThermostatPlan:
    key: str
    name: str
    room: int
    hosted: bool                    # located through HostingRoom rather than geometry
    controls: tuple[str, ...] = ()  # explicit VAV/FCU identifiers


@dataclass(frozen=True)
class OccupantPlan:
    subject_id: str
    age: int | None
    gender: str | None
    rooms: tuple[int, ...]          # one room per sample time

    @property
    def valid(self) -> bool:
        return self.age is not None and self.gender is not None


@dataclass
class Layout:
    building: str
    rooms: list[RoomPlan] = field(default_factory=list)
    supply: list[SupplyPlan] = field(default_factory=list)
    thermostats: list[ThermostatPlan] = field(default_factory=list)
    occupants: list[OccupantPlan] = field(default_factory=list)


def plan_layout(building: str = "SDE4", extra_vav_room: int | None = None,
                renamed_room: tuple[int, str] | None = None) -> Layout:
    """The element plan; ``extra_vav_room`` and ``renamed_room`` model single edits."""
    layout = Layout(building)
    for storey, count in enumerate(ROOMS_PER_STOREY):
        for slot in range(count):
            idx = len(layout.rooms)
            name = f"L{storey + 1:02d}-R{slot + 1:02d}"
            if renamed_room and renamed_room[0] == idx:
                name = renamed_room[1]
            layout.rooms.append(RoomPlan(idx, storey, slot, name, f"Room {storey + 1}.{slot + 1:02d}",
                                         (slot * ROOM_SIZE, 0.0)))

    def neighbour(room: int) -> int:
        r = layout.rooms[room]
        same = [x.index for x in layout.rooms if x.storey == r.storey]
        return room + 1 if room + 1 in same else room - 1

    vav_rooms = [r.index for r in layout.rooms] + list(EXTRA_VAV_ROOMS)
    for k, room in enumerate(vav_rooms):
        terminals = (room, neighbour(room)) if k % SPLIT_EVERY == 0 else (room,)
        name = f"VAV-{k + 1:03d}"
        layout.supply.append(SupplyPlan(
            f"vav/{k}", "VAV", name, room,
            ("CO2_Sensor", "Humidity_Sensor", "Temperature_Sensor"), name, terminals))
    for k, room in enumerate(FCU_ROOMS):
        points = ("CO2_Sensor", "Temperature_Sensor") if k < FCU_WITH_CO2 else ("Temperature_Sensor",)
        name = f"FCU-{k + 1:03d}"
        layout.supply.append(SupplyPlan(f"fcu/{k}", "FCU", name, room, points, name, (room,)))
    if extra_vav_room is not None:
        layout.supply.append(SupplyPlan(
            "vav/extra", "VAV", "VAV-EXTRA", extra_vav_room,
            ("CO2_Sensor", "Humidity_Sensor", "Temperature_Sensor"), "VAV-EXTRA", ()))

    last = len(layout.rooms) - 1
    for r in layout.rooms:
        controls = ("VAV-047",) if r.index == last else ()
        layout.thermostats.append(ThermostatPlan(
            f"tstat/{r.index}", f"TS-{r.index + 1:03d}", r.index,
            r.index % HOSTED_EVERY == HOSTED_EVERY // 2, controls))

    n_rooms = len(layout.rooms)
    for s in range(1, SUBJECTS + 1):
        age = None if s in NO_AGE else 20 + (s * 7) % 45
        gender = None if s in NO_GENDER else ("female" if s % 2 else "male")
        rooms = tuple((s * 5 + 11 * t) % n_rooms for t in range(len(SAMPLE_TIMES)))
        layout.occupants.append(OccupantPlan(f"P{s:03d}", age, gender, rooms))
    return layout


class _Writer:
    def __init__(self):
        self.entities: dict[int, StepEntity] = {}

    def add(self, type_name: str, *args) -> Ref:
        eid = len(self.entities) + 1
        self.entities[eid] = StepEntity(eid, type_name, tuple(args))
        return Ref(eid)

    def point(self, *coords: float) -> Ref:
        return self.add("IFCCARTESIANPOINT", tuple(float(c) for c in coords))

    def placement(self, parent: Ref | None, x=0.0, y=0.0, z=0.0) -> Ref:
        axis = self.add("IFCAXIS2PLACEMENT3D", self.point(x, y, z), NULL, NULL)
        return self.add("IFCLOCALPLACEMENT", parent if parent else NULL, axis)

    def pset(self, target: Ref, values: dict[str, str], key: str) -> None:
        props = tuple(self.add("IFCPROPERTYSINGLEVALUE", k, NULL, Typed("IFCLABEL", v), NULL)
                      for k, v in values.items())
        ps = self.add("IFCPROPERTYSET", guid(key + "/pset"), NULL, "BIM2BRICK", NULL, props)
        self.add("IFCRELDEFINESBYPROPERTIES", guid(key + "/defines"), NULL, NULL, NULL, (target,), ps)


def build_ifc(layout: Layout) -> StepFile:
    w = _Writer()
    unit = w.add("IFCSIUNIT", DERIVED, Enum("LENGTHUNIT"), NULL, Enum("METRE"))
    units = w.add("IFCUNITASSIGNMENT", (unit,))
    project = w.add("IFCPROJECT", guid("project"), NULL, "Campus", NULL, NULL, NULL, NULL, NULL, units)
    site_pl = w.placement(None)
    site = w.add("IFCSITE", guid("site"), NULL, "Site", NULL, NULL, site_pl, NULL, NULL,
                 Enum("ELEMENT"), NULL, NULL, NULL, NULL, NULL)
    bld_pl = w.placement(site_pl)
    building = w.add("IFCBUILDING", guid("building"), NULL, layout.building, NULL, NULL, bld_pl,
                     NULL, NULL, Enum("ELEMENT"), NULL, NULL, NULL)
    w.add("IFCRELAGGREGATES", guid("agg/project"), NULL, NULL, NULL, project, (site,))
    w.add("IFCRELAGGREGATES", guid("agg/site"), NULL, NULL, NULL, site, (building,))

    storey_refs, storey_pls = [], []
    for s in range(STOREYS):
        pl = w.placement(bld_pl, 0.0, 0.0, s * STOREY_HEIGHT)
        storey_pls.append(pl)
        storey_refs.append(w.add("IFCBUILDINGSTOREY", guid(f"storey/{s}"), NULL, f"Level {s + 1:02d}",
                                 NULL, NULL, pl, NULL, NULL, Enum("ELEMENT"), s * STOREY_HEIGHT))
    w.add("IFCRELAGGREGATES", guid("agg/building"), NULL, NULL, NULL, building, tuple(storey_refs))

    context = w.add("IFCGEOMETRICREPRESENTATIONCONTEXT", NULL, "Model", 3, 1e-5,
                    w.add("IFCAXIS2PLACEMENT3D", w.point(0, 0, 0), NULL, NULL), NULL)
    space_refs: list[Ref] = []
    contained: dict[int, list[Ref]] = {s: [] for s in range(STOREYS)}
    for room in layout.rooms:
        pl = w.placement(storey_pls[room.storey], room.origin[0], room.origin[1], 0.0)
        if room.slot == 0:
            # explicit footprint curve
            ring = tuple(w.point(x, y) for x, y in ((0, 0), (8, 0), (8, 8), (0, 8), (0, 0)))
            item = w.add("IFCPOLYLINE", ring)
            rep = w.add("IFCSHAPEREPRESENTATION", context, "FootPrint", "Curve2D", (item,))
        else:
            if room.slot == 1:
                ring = tuple(w.point(x, y) for x, y in ((0, 0), (8, 0), (8, 8), (0, 8), (0, 0)))
                profile = w.add("IFCARBITRARYCLOSEDPROFILEDEF", Enum("AREA"), NULL,
                                w.add("IFCPOLYLINE", ring))
            else:
                centre = w.add("IFCAXIS2PLACEMENT2D", w.point(4, 4), NULL)
                profile = w.add("IFCRECTANGLEPROFILEDEF", Enum("AREA"), NULL, centre, 8.0, 8.0)
            solid = w.add("IFCEXTRUDEDAREASOLID", profile,
                          w.add("IFCAXIS2PLACEMENT3D", w.point(0, 0, 0), NULL, NULL),
                          w.add("IFCDIRECTION", (0.0, 0.0, 1.0)), 3.5)
            rep = w.add("IFCSHAPEREPRESENTATION", context, "Body", "SweptSolid", (solid,))
        shape = w.add("IFCPRODUCTDEFINITIONSHAPE", NULL, NULL, (rep,))
        space = w.add("IFCSPACE", guid(f"room/{room.index}"), NULL, room.name, NULL, NULL, pl, shape,
                      room.long_name, Enum("ELEMENT"), Enum("INTERNAL"), NULL)
        space_refs.append(space)
        zone = w.add("IFCZONE", guid(f"zone/{room.index}"), NULL,
                     f"Zone {room.storey + 1:02d}.{room.slot + 1:02d}", NULL, NULL, NULL)
        w.add("IFCRELASSIGNSTOGROUP", guid(f"group/{room.index}"), NULL, NULL, NULL, (space,), NULL, zone)
    for s in range(STOREYS):
        members = tuple(space_refs[r.index] for r in layout.rooms if r.storey == s)
        w.add("IFCRELAGGREGATES", guid(f"agg/storey/{s}"), NULL, NULL, NULL, storey_refs[s], members)

    def port(key: str, host: Ref, flow: str) -> Ref:
        ref = w.add("IFCDISTRIBUTIONPORT", guid(key), NULL, key, NULL, NULL, NULL, NULL,
                    Enum(flow), Enum("DUCT"), Enum("SUPPLYAIR"))
        w.add("IFCRELNESTS", guid(key + "/nest"), NULL, NULL, NULL, host, (ref,))
        return ref

    def connect(a: Ref, b: Ref, key: str) -> None:
        w.add("IFCRELCONNECTSPORTS", guid(key), NULL, NULL, NULL, a, b, NULL)

    riser = w.add("IFCDUCTSEGMENT", guid("riser"), NULL, "Riser", NULL, NULL, NULL, NULL, NULL,
                  Enum("RIGIDSEGMENT"))
    trunks = []
    for s in range(STOREYS):
        trunk = w.add("IFCDUCTSEGMENT", guid(f"trunk/{s}"), NULL, f"Trunk L{s + 1:02d}", NULL, NULL,
                      storey_pls[s], NULL, NULL, Enum("RIGIDSEGMENT"))
        trunks.append(trunk)
        contained[s].append(trunk)
        connect(port(f"riser/{s}", riser, "SOURCEANDSINK"), port(f"trunk/{s}/in", trunk, "SINK"),
                f"link/riser/{s}")

    per_room_slot: dict[int, int] = {}
    for sp in layout.supply:
        room = layout.rooms[sp.room]
        slot = per_room_slot[sp.room] = per_room_slot.get(sp.room, 0) + 1
        ex, ey = room.origin[0] + 1.0 + slot, room.origin[1] + 2.0
        pl = w.placement(storey_pls[room.storey], ex, ey, 3.0)
        if sp.kind == "VAV":
            eq = w.add("IFCAIRTERMINALBOX", guid(sp.key), NULL, sp.name, NULL, NULL, pl, NULL, NULL,
                       Enum("CONSTANTFLOW"))
        else:
            eq = w.add("IFCUNITARYEQUIPMENT", guid(sp.key), NULL, sp.name, NULL, "FanCoilUnit", pl,
                       NULL, NULL, Enum("USERDEFINED"))
        contained[room.storey].append(eq)
        tsid = f"TS-{sp.name}"
        w.pset(eq, {
            "Identifier": sp.identifier,
            "TimeSeriesId": tsid,
            "MasterPanel": f"MP-L{room.storey + 1:02d}",
            "Points": ";".join(f"{p}:{tsid}-{p.split('_')[0]}" for p in sp.points),
        }, sp.key)
        if not sp.terminal_rooms:
            continue
        inlet = port(f"{sp.key}/in", eq, "SINK")
        connect(port(f"trunk/{room.storey}/{sp.key}", trunks[room.storey], "SOURCE"), inlet,
                f"link/{sp.key}/in")
        branch = w.add("IFCDUCTSEGMENT", guid(f"{sp.key}/branch"), NULL, f"Branch {sp.name}", NULL,
                       NULL, NULL, NULL, NULL, Enum("FLEXIBLESEGMENT"))
        contained[room.storey].append(branch)
        connect(port(f"{sp.key}/out", eq, "SOURCE"), port(f"{sp.key}/branch/in", branch, "SINK"),
                f"link/{sp.key}/out")
        for t, troom_idx in enumerate(sp.terminal_rooms):
            troom = layout.rooms[troom_idx]
            tpl = w.placement(storey_pls[troom.storey], troom.origin[0] + 6.0,
                              troom.origin[1] + 2.0 + t, 3.25)
            term = w.add("IFCAIRTERMINAL", guid(f"{sp.key}/terminal/{t}"), NULL,
                         f"AT-{sp.name}-{t + 1}", NULL, NULL, tpl, NULL, NULL, Enum("DIFFUSER"))
            contained[troom.storey].append(term)
            connect(port(f"{sp.key}/branch/out/{t}", branch, "SOURCE"),
                    port(f"{sp.key}/terminal/{t}/in", term, "SINK"), f"link/{sp.key}/terminal/{t}")

    for th in layout.thermostats:
        room = layout.rooms[th.room]
        if th.hosted:
            # wall-mounted just outside the footprint; located by HostingRoom instead
            pl = w.placement(storey_pls[room.storey], room.origin[0] + 4.0, -0.5, 1.5)
        else:
            pl = w.placement(storey_pls[room.storey], room.origin[0] + 7.0, room.origin[1] + 7.0, 1.5)
        ts = w.add("IFCUNITARYCONTROLELEMENT", guid(th.key), NULL, th.name, NULL, NULL, pl, NULL, NULL,
                   Enum("THERMOSTAT"))
        contained[room.storey].append(ts)
        values = {}
        if th.hosted:
            values["HostingRoom"] = room.name
        if th.controls:
            values["ControlsIdentifier"] = ",".join(th.controls)
        if values:
            w.pset(ts, values, th.key)

    for s in range(STOREYS):
        w.add("IFCRELCONTAINEDINSPATIALSTRUCTURE", guid(f"contains/{s}"), NULL, NULL, NULL,
              tuple(contained[s]), storey_refs[s])
    w.add("IFCRELCONTAINEDINSPATIALSTRUCTURE", guid("contains/building"), NULL, NULL, NULL,
          (riser,), building)
    header = StepHeader(("ViewDefinition [ReferenceView]",), f"{layout.building}.ifc", ("IFC4",))
    return StepFile(header, w.entities)


def occupant_rows(layout: Layout, transform: SiteTransform) -> list[dict]:
    rows = []
    for occ in layout.occupants:
        for t, room_idx in zip(SAMPLE_TIMES, occ.rooms):
            x, y, z = layout.rooms[room_idx].centre
            coord, alt = transform.local_to_utm(x, y, z)
            geo = utm_to_wgs84(coord, alt)
            rows.append({
                "subject_id": occ.subject_id,
                "age": "" if occ.age is None else str(occ.age),
                "gender": occ.gender or "",
                "timestamp": t.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "latitude": repr(geo.latitude),
                "longitude": repr(geo.longitude),
                "altitude": repr(geo.altitude),
            })
    return rows


def occupant_csv(layout: Layout, transform: SiteTransform) -> str:
    buf = io.StringIO()
    cols = ("subject_id", "age", "gender", "timestamp", "latitude", "longitude", "altitude")
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    writer.writerows(occupant_rows(layout, transform))
    return buf.getvalue()


def default_transform() -> SiteTransform:
    lat, lon, alt = DEFAULT_ORIGIN
    return SiteTransform.from_geodetic(lat, lon, alt, DEFAULT_ROTATION)


@dataclass(frozen=True)
class Fixture:
    layout: Layout
    ifc_text: str
    csv_text: str
    transform: SiteTransform


def make_fixture(**edits) -> Fixture:
    layout = plan_layout(**edits)
    transform = default_transform()
    return Fixture(layout, format_step(build_ifc(layout)), occupant_csv(layout, transform), transform)


def write_fixture(directory, **edits) -> tuple[str, str]:
    """Write ``model.ifc`` and ``occupants.csv`` into ``directory``; returns both paths."""
    from pathlib import Path

    fx = make_fixture(**edits)
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    ifc, occ = d / "model.ifc", d / "occupants.csv"
    ifc.write_text(fx.ifc_text, encoding="utf-8")
    occ.write_text(fx.csv_text, encoding="utf-8")
    return str(ifc), str(occ)
