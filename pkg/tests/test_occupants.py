import csv
import io
import itertools
import random
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bim2brick.geo import GeoSample, SiteTransform, utm_to_wgs84
from bim2brick.occupants import (
    EmptyDatasetError, LocatedSample, MissingColumnError, OccupantRecord, filter_defined,
    load_occupants, localize, parse_instant, select_sample,
)
from bim2brick.synthetic import make_fixture

COLS = "subject_id,age,gender,timestamp,latitude,longitude,altitude"
T0 = datetime(2024, 3, 4, 9, tzinfo=timezone.utc)


def csv_text(*rows: str, header: str = COLS) -> str:
    return "\n".join((header,) + rows) + "\n"


def codes(diags):
    return [d.code for d in diags]


def test_fixture_yields_seventeen_valid_of_thirty():
    records, diags = load_occupants(make_fixture().csv_text)
    assert len(records) == 30 and not diags
    dropped = []
    kept = filter_defined(records, dropped)
    assert len(kept) == 17 and len(dropped) == 13
    assert all(len(r.samples) == 3 for r in kept)


def test_single_valid_row():
    records, diags = load_occupants(csv_text("P1,34,Female,2024-03-04T09:00:00Z,1.3,103.8,12.5"))
    rec, = records
    assert (rec.subject_id, rec.age, rec.gender) == ("P1", 34, "female")
    sample, = rec.samples
    assert sample.timestamp == T0 and sample.geo == GeoSample(1.3, 103.8, 12.5)
    assert not diags


def test_extra_columns_and_reordered_header():
    text = csv_text("0.5,P1,x,2024-03-04T09:00:00+08:00,1.3,103.8,0,m,40",
                    header="altitude,subject_id,note,timestamp,latitude,longitude,z,gender,age")
    rec, = load_occupants(text)[0]
    assert rec.age == 40 and rec.samples[0].timestamp == T0 - timedelta(hours=8)


def test_missing_column():
    with pytest.raises(MissingColumnError, match="altitude"):
        load_occupants(csv_text(header=COLS.rsplit(",", 1)[0]))


def test_empty_dataset():
    with pytest.raises(EmptyDatasetError):
        load_occupants(csv_text())


def test_malformed_rows_are_reported_with_line_numbers():
    text = csv_text(
        "P1,30,m,2024-03-04T09:00:00Z,1.3,103.8,0",
        "P1,30,m,not-a-time,1.3,103.8,0",
        "P1,30,m,2024-03-04T10:00:00Z,95,103.8,0",
        ",30,m,2024-03-04T10:00:00Z,1.3,103.8,0",
        "P2,thirty,f,2024-03-04T10:00:00Z,1.3,103.8,0",
    )
    records, diags = load_occupants(text)
    assert codes(diags) == ["MalformedRow"] * 4
    assert [d.message.split(":")[0] for d in diags] == ["line 3", "line 4", "line 5", "line 6"]
    p1, p2 = records
    assert len(p1.samples) == 1 and p2.age is None and len(p2.samples) == 1


def test_conflicting_attribute_keeps_first():
    text = csv_text("P1,30,m,2024-03-04T09:00:00Z,1.3,103.8,0",
                    "P1,31,m,2024-03-04T10:00:00Z,1.3,103.8,0",
                    "P1,,,2024-03-04T11:00:00Z,1.3,103.8,0")
    (rec,), diags = load_occupants(text)
    assert rec.age == 30 and codes(diags) == ["ConflictingAttribute"]


@settings(max_examples=100, deadline=None)
@given(st.permutations(range(8)))
def test_samples_sorted_regardless_of_row_order(order):
    stamps = [T0 + timedelta(minutes=17 * i) for i in range(8)]
    rows = [f"P1,30,m,{stamps[i].isoformat()},1.3,{103.8 + i / 1000},0" for i in order]
    text = csv_text(*rows)
    (rec,), _ = load_occupants(text)
    assert [s.timestamp for s in rec.samples] == sorted(stamps)
    # the longitude encodes the original index, so pairing is preserved
    assert [round((s.geo.longitude - 103.8) * 1000) for s in rec.samples] == list(range(8))


# -- filtering ----------------------------------------------------------------------

def sample(minutes=0):
    return LocatedSample(T0 + timedelta(minutes=minutes), GeoSample(1.3, 103.8))


SEVEN = [
    OccupantRecord("a", 30, "m", (sample(),)),
    OccupantRecord("b", None, "f", (sample(),)),
    OccupantRecord("c", 41, "f", (sample(), sample(5))),
    OccupantRecord("d", 22, None, (sample(),)),
    OccupantRecord("e", 50, "x", (sample(),)),
    OccupantRecord("f", 19, "m", ()),
    OccupantRecord("g", 0, "f", (sample(),)),
]


def defined(rec):
    return rec.age is not None and rec.gender is not None and len(rec.samples) > 0


def test_filter_matches_predicate_on_every_subset():
    for n in range(len(SEVEN) + 1):
        for subset in itertools.combinations(SEVEN, n):
            assert filter_defined(subset) == [r for r in subset if defined(r)]


def test_drop_reasons():
    diags = []
    filter_defined(SEVEN, diags)
    assert [(d.source_id, d.message) for d in diags] == [
        ("b", "undefined age"), ("d", "undefined gender"), ("f", "no valid samples")]


def test_filter_is_idempotent():
    once = filter_defined(SEVEN)
    assert filter_defined(once) == once


# -- localisation and selection ------------------------------------------------------

SITE = SiteTransform.from_geodetic(1.2966, 103.7764, 15.0, 30.0)


def geo_at(x, y, z=0.0):
    coord, alt = SITE.local_to_utm(x, y, z)
    return utm_to_wgs84(coord, alt)


def test_sample_at_origin_maps_to_zero():
    rec = OccupantRecord("a", 1, "m", (LocatedSample(T0, GeoSample(1.2966, 103.7764, 15.0)),))
    (out,) = localize([rec], SITE)
    assert max(abs(c) for c in out.samples[0].local) < 1e-6


def test_out_of_zone_sample_is_dropped():
    rnd = random.Random(3)
    samples = [LocatedSample(T0 + timedelta(minutes=i), geo_at(rnd.uniform(0, 40), rnd.uniform(0, 40)))
               for i in range(10)]
    # 108.5E lies in zone 49, Singapore's origin in zone 48
    samples[4] = LocatedSample(samples[4].timestamp, GeoSample(1.3, 108.5))
    diags = []
    (out,) = localize([OccupantRecord("a", 1, "m", tuple(samples))], SITE, diags)
    assert len(out.samples) == 9 and codes(diags) == ["ZoneMismatch"]
    assert [s.timestamp for s in out.samples] == [s.timestamp for i, s in enumerate(samples) if i != 4]


def test_localize_recovers_fixture_room_centres():
    fx = make_fixture()
    records, _ = load_occupants(fx.csv_text)
    out = localize(filter_defined(records), fx.transform)
    plans = {o.subject_id: o for o in fx.layout.occupants}
    for rec in out:
        for s, room in zip(rec.samples, plans[rec.subject_id].rooms):
            want = fx.layout.rooms[room].centre
            assert max(abs(a - b) for a, b in zip(s.local, want)) < 1e-6


def test_select_sample_nearest_previous():
    samples = tuple(LocatedSample(T0 + timedelta(hours=h), GeoSample(1.3, 103.8), (h, 0, 0))
                    for h in range(3))
    rec = OccupantRecord("a", 1, "m", samples)
    assert select_sample(rec) is samples[2]
    assert select_sample(rec, T0 + timedelta(minutes=90)) is samples[1]
    assert select_sample(rec, T0 + timedelta(hours=1)) is samples[1]
    assert select_sample(rec, T0 - timedelta(seconds=1)) is None


def test_parse_instant_forms():
    assert parse_instant("2024-03-04T09:00:00Z") == T0
    assert parse_instant("2024-03-04T17:00:00+08:00") == T0
    assert parse_instant("2024-03-04 09:00:00") == T0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABCDE"), st.sampled_from(["", "20", "31"]),
                          st.sampled_from(["", "m", "F"])), min_size=1, max_size=25))
def test_validated_never_exceeds_distinct_subjects(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLS.split(","))
    for i, (sid, age, gender) in enumerate(rows):
        w.writerow([sid, age, gender, (T0 + timedelta(minutes=i)).isoformat(), 1.3, 103.8, 0])
    records, _ = load_occupants(buf.getvalue())
    assert len(filter_defined(records)) <= len({r[0] for r in rows}) == len(records)
