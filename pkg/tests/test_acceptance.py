"""End-to-end acceptance checks, one test per criterion.

Each test records its verdict in ``conftest.ACCEPTANCE_RESULTS`` before asserting,
so the terminal summary prints one PASS/FAIL line per criterion even when an
assertion stops the test early.
"""
import random
import time
from collections import Counter

import pytest

import conftest
from bim2brick.brick import sensor_nodes
from bim2brick.diff import diff_by_source_id
from bim2brick.geo import GeoSample, UtmCoord, central_meridian, utm_to_wgs84, wgs84_to_utm
from bim2brick.ifc import extract_model
from bim2brick.inference import ContainmentIndex, infer_feeds, locate
from bim2brick.occupants import filter_defined, load_occupants
from bim2brick.pipeline import convert
from bim2brick.step import StepError, StepFile, parse_step, read_step
from bim2brick.synthetic import guid, write_fixture
from bim2brick.turtle import parse_turtle, serialize_turtle
from conftest import run_config
from generators import GRID, lattice_probes, random_floor, random_network
from oracles import contains, expected_counts
from test_inference import expected_feeds, terminal_relations

pyproj = pytest.importorskip("pyproj")


def record(number, ok, label):
    conftest.ACCEPTANCE_RESULTS[number] = (bool(ok), label)
    return ok


# 1 ------------------------------------------------------------------------------------

def test_fixture_scale_conversion(sde4_dir, sde4_layout):
    start = time.perf_counter()
    run = convert(run_config(sde4_dir, "digital-twin"))
    elapsed = time.perf_counter() - start

    layout = sde4_layout
    vav = [s for s in layout.supply if s.kind == "VAV"]
    fcu_points = Counter(len(s.points) for s in layout.supply if s.kind == "FCU")
    structure = (len({r.storey for r in layout.rooms}), len(layout.rooms), len(vav),
                 len(vav[0].points) if vav and all(len(s.points) == 3 for s in vav) else None,
                 dict(fcu_points), len(layout.occupants))

    got = run.report
    want = expected_counts(layout, "digital-twin")
    sensors = sum(v for k, v in got.nodes_by_class.items() if k.endswith("_Sensor"))
    checks = {
        "structure": structure == (9, 48, 52, 3, {1: 14, 2: 2}, 30),
        "time": elapsed < 2.0,
        "nodes": got.nodes_by_class == want["nodes"],
        "relations": got.relations_by_predicate == want["relations"],
        "triples": got.triple_count == want["triples"],
        "sensors": sensors == 174,
        "occupants": got.nodes_by_class.get("Individual") == 17,
    }
    record(1, all(checks.values()),
           f"fixture converts in {elapsed:.2f} s with {got.node_count} nodes, "
           f"{got.relation_count} relations, {sensors} sensors, "
           f"{got.nodes_by_class.get('Individual')} occupants")
    assert checks == dict.fromkeys(checks, True)


# 2 ------------------------------------------------------------------------------------

def test_mode_algebra(sde4_runs):
    p, b, d = (parse_turtle(sde4_runs[m].turtle).triples for m in ("people", "bms", "digital-twin"))
    ok = d == p | b
    record(2, ok, f"DigitalTwin triples equal People | BMS ({len(d)} from {len(p)} and {len(b)})")
    assert ok


# 3 ------------------------------------------------------------------------------------

def _geodesy_points():
    rnd = random.Random(3)
    pts = [(rnd.uniform(0.0, 60.0), rnd.uniform(-180.0, 180.0)) for _ in range(120)]
    pts += [(rnd.uniform(1.15, 1.47), rnd.uniform(103.6, 104.05)) for _ in range(20)]
    return pts


def test_geodesy():
    worst_m = worst_deg = 0.0
    points = _geodesy_points()
    for lat, lon in points:
        u = wgs84_to_utm(GeoSample(lat, lon))
        crs = pyproj.CRS.from_proj4(f"+proj=utm +zone={u.zone_number} +datum=WGS84")
        e, n = pyproj.Transformer.from_crs("EPSG:4326", crs, always_xy=True).transform(lon, lat)
        worst_m = max(worst_m, abs(u.easting - e), abs(u.northing - n))
        back = utm_to_wgs84(u)
        worst_deg = max(worst_deg, abs(back.latitude - lat), abs(back.longitude - lon))
    singapore = wgs84_to_utm(GeoSample(1.2966, 103.7764)).zone_number
    equator = wgs84_to_utm(GeoSample(0.0, central_meridian(48)))
    off = abs(equator.easting - 500000.0)
    ok = (len(points) >= 100 and worst_m <= 0.01 and worst_deg <= 1e-9 and singapore == 48
          and off <= 1e-6 and abs(equator.northing) <= 1e-6)
    record(3, ok, f"{len(points)} points: max {worst_m:.2e} m from reference, round trip "
                  f"{worst_deg:.1e} deg, central meridian easting off by {off:.1e} m")
    assert ok
    assert utm_to_wgs84(UtmCoord(500000.0, 0.0, 48, "N")).longitude == pytest.approx(105.0)


# 4 ------------------------------------------------------------------------------------

def test_containment_against_brute_force():
    rnd = random.Random(44)
    probes = mismatches = 0
    for _ in range(5):
        floors = [random_floor(rnd, rooms=5), random_floor(rnd, rooms=3)]
        index = ContainmentIndex([(0.0, floors[0]), (3.5, floors[1])])
        exact = [[(sid, [(int(x * GRID), int(y * GRID)) for x, y in ring]) for sid, ring in f]
                 for f in floors]
        for x, y in lattice_probes(12.0, 0.25):
            px, py = int(x * GRID), int(y * GRID)
            for z, floor in ((0.0, exact[0]), (7.0, exact[1])):
                hits = [sid for sid, ring in floor if contains(px, py, ring)]
                mismatches += locate((x, y, z), index) != (min(hits) if hits else None)
                probes += 1
    ok = probes >= 10_000 and mismatches == 0
    record(4, ok, f"{probes} grid probes, {mismatches} disagreements with winding-number oracle")
    assert ok


# 5 ------------------------------------------------------------------------------------

def test_feeds_against_enumeration():
    rnd = random.Random(55)
    instances = mismatches = cyclic = 0
    for _ in range(220):
        model, terminal_rooms = random_network(rnd, max_nodes=50)
        nodes = len(model.equipment) + len(model.air_terminals) + len(model.ducts)
        assert nodes <= 50
        edges = len(model.ports) // 2
        cyclic += edges >= nodes   # a connected graph with as many edges as nodes has a cycle
        got = set(infer_feeds(model, terminal_relations(terminal_rooms)))
        mismatches += got != expected_feeds(model, terminal_rooms)
        instances += 1
    ok = instances >= 200 and mismatches == 0 and cyclic > 0
    record(5, ok, f"{instances} random networks ({cyclic} with cycles), {mismatches} disagreements")
    assert ok


# 6 ------------------------------------------------------------------------------------

def test_determinism_and_round_trip(sde4_dir, sde4_runs, tmp_path):
    again = {m: convert(run_config(sde4_dir, m)).turtle for m in sde4_runs}
    identical = all(again[m] == sde4_runs[m].turtle for m in sde4_runs)
    idempotent = all(serialize_turtle(parse_turtle(t)) == t for t in again.values())
    # an independently written copy of the fixture behaves the same
    write_fixture(tmp_path)
    copy = convert(run_config(tmp_path, "digital-twin")).turtle
    identical &= copy.encode() == sde4_runs["digital-twin"].turtle.encode()
    ok = identical and idempotent
    record(6, ok, f"repeat runs byte-identical: {identical}; serialize/parse/serialize stable: "
                  f"{idempotent}")
    assert ok


# 7 ------------------------------------------------------------------------------------

def test_source_id_link_and_single_edit_diff(sde4_dir, sde4_runs, tmp_path):
    model = extract_model(read_step(sde4_dir / "model.ifc"))
    records = filter_defined(load_occupants((sde4_dir / "occupants.csv").read_text())[0])
    skeleton = [model.building.source_id] + [e.source_id for grp in (model.levels, model.rooms,
                                                                     model.zones) for e in grp]
    bms = [e.source_id for e in model.all_equipment()] + [s.source_id for s in sensor_nodes(model)]
    expect = {"people": skeleton + [r.subject_id for r in records], "bms": skeleton + bms,
              "digital-twin": skeleton + bms + [r.subject_id for r in records]}

    link_ok = True
    for mode, run in sde4_runs.items():
        g = parse_turtle(run.turtle)
        ids = g.source_ids()
        link_ok &= set(ids) == set(g.nodes()) and all(len(v) == 1 for v in ids.values())
        link_ok &= Counter(v[0] for v in ids.values()) == Counter(expect[mode])

    edited = tmp_path / "edited"
    write_fixture(edited, renamed_room=(7, "Seminar Room"))
    report = diff_by_source_id(parse_turtle(sde4_runs["digital-twin"].turtle),
                               parse_turtle(convert(run_config(edited)).turtle))
    changes = [(c.source_id, c.status) for c in report.changes()]
    diff_ok = changes == [(guid("room/7"), "modified")]
    ok = link_ok and diff_ok
    record(7, ok, f"one sourceId per instance matching model elements: {link_ok}; "
                  f"renaming one room diffs as {len(changes)} change(s)")
    assert ok


# 8 ------------------------------------------------------------------------------------

FUZZ_TOKENS = list("#=();,$*.'/\\ \n0123456789-+EX") + ["''", "/*", "*/", "ENDSEC;", "DATA;",
                                                       "#1", "IFC", "(", ")", "\\X2\\", "\\X0\\"]


def _mutate(rec: str, rnd: random.Random) -> str:
    chars = list(rec)
    for _ in range(rnd.randint(1, 4)):
        op = rnd.randrange(5)
        i = rnd.randrange(len(chars) + 1)
        if op == 0 and chars:
            del chars[min(i, len(chars) - 1)]
        elif op == 1:
            chars.insert(i, rnd.choice(FUZZ_TOKENS))
        elif op == 2 and chars:
            j = rnd.randrange(len(chars))
            chars[min(i, len(chars) - 1)], chars[j] = chars[j], chars[min(i, len(chars) - 1)]
        elif op == 3:
            chars = chars[:i]
        else:
            chars[i:i] = chars[i:i + rnd.randint(1, 12)]
    return "".join(chars)


@pytest.mark.slow
def test_step_fuzzing(sde4_dir):
    lines = (sde4_dir / "model.ifc").read_text().splitlines()
    data = lines.index("DATA;")
    head = "\n".join(lines[:data + 1]) + "\n"
    records = [ln for ln in lines[data + 1:] if ln.startswith("#")]
    rnd = random.Random(8)
    parsed = located = 0
    crashes = []
    for _ in range(100_000):
        chosen = rnd.sample(records, 3)
        k = rnd.randrange(3)
        chosen[k] = _mutate(chosen[k], rnd)
        text = head + "\n".join(chosen) + "\nENDSEC;\nEND-ISO-10303-21;\n"
        try:
            result = parse_step(text)
        except StepError as exc:
            if exc.line >= 1 and exc.column >= 1:
                located += 1
            else:
                crashes.append(("unlocated", text))
        except Exception as exc:  # noqa: BLE001 - anything else is a crash
            crashes.append((repr(exc), text))
        else:
            parsed += isinstance(result, StepFile)
    total = parsed + located + len(crashes)
    ok = not crashes and total >= 100_000
    record(8, ok, f"{total} mutated inputs: {parsed} parsed, {located} located syntax errors, "
                  f"{len(crashes)} crashes")
    assert ok, crashes[:3]
