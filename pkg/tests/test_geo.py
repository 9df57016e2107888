import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bim2brick.geo import (
    GeoSample, OutOfRangeError, SiteTransform, UtmCoord, ZoneMismatchError, central_meridian,
    fit_transform, to_local, utm_to_wgs84, wgs84_to_utm, zone_letter, zone_number,
)

pyproj = pytest.importorskip("pyproj")


def reference(lat, lon, zone):
    south = lat < 0
    crs = pyproj.CRS.from_proj4(f"+proj=utm +zone={zone} {'+south ' if south else ''}+datum=WGS84")
    tr = pyproj.Transformer.from_crs("EPSG:4326", crs, always_xy=True)
    return tr.transform(lon, lat)


def sample_points(n=150, seed=7):
    rnd = random.Random(seed)
    pts = [(rnd.uniform(0, 60), rnd.uniform(-180, 180)) for _ in range(n)]
    # Singapore region, zone 48
    pts += [(1.2966, 103.7764), (1.35, 103.82), (1.44, 104.0), (0.0, 105.0), (5.0, 102.01)]
    return pts


def test_matches_reference_projection():
    worst = 0.0
    for lat, lon in sample_points():
        u = wgs84_to_utm(GeoSample(lat, lon))
        e, n = reference(lat, lon, u.zone_number)
        worst = max(worst, abs(u.easting - e), abs(u.northing - n))
    assert worst <= 0.01


def test_singapore_origin():
    u = wgs84_to_utm(GeoSample(1.2966, 103.7764))
    assert (u.zone_number, u.zone_letter) == (48, "N")
    e, n = reference(1.2966, 103.7764, 48)
    assert abs(u.easting - e) < 1e-6 and abs(u.northing - n) < 1e-6


def test_equator_on_central_meridian():
    for zone in (1, 31, 48, 60):
        u = wgs84_to_utm(GeoSample(0.0, central_meridian(zone)))
        assert abs(u.easting - 500000.0) <= 1e-6
        assert abs(u.northing) <= 1e-6


@settings(max_examples=500, deadline=None)
@given(st.floats(-79.9, 83.9), st.floats(-179.999, 179.999))
def test_round_trip(lat, lon):
    u = wgs84_to_utm(GeoSample(lat, lon))
    back = utm_to_wgs84(u)
    assert abs(back.latitude - lat) <= 1e-9
    dlon = (back.longitude - lon + 180.0) % 360.0 - 180.0
    assert abs(dlon) <= 1e-9


def test_zone_rules():
    assert zone_number(-180.0) == 1 and zone_number(179.9999) == 60 and zone_number(180.0) == 60
    assert zone_number(6.5) == 32 and zone_letter(-80.0) == "C" and zone_letter(84.0) == "X"
    assert zone_letter(1.3) == "N" and zone_letter(-1.3) == "M"


@pytest.mark.parametrize("lat, lon", [(84.1, 0.0), (-80.1, 0.0), (0.0, 180.5), (float("nan"), 0.0)])
def test_out_of_range(lat, lon):
    with pytest.raises(OutOfRangeError):
        wgs84_to_utm(GeoSample(lat, lon))


def test_southern_hemisphere_uses_false_northing():
    u = wgs84_to_utm(GeoSample(-33.8688, 151.2093))
    e, n = reference(-33.8688, 151.2093, u.zone_number)
    assert not u.northern and abs(u.northing - n) < 1e-3 and abs(u.easting - e) < 1e-3


def test_site_transform_rotation_and_scale():
    t = SiteTransform.from_geodetic(1.2966, 103.7764, 10.0, rotation_deg=90.0, scale=2.0)
    u = wgs84_to_utm(GeoSample(1.2966, 103.7764))
    east = UtmCoord(u.easting + 10.0, u.northing, u.zone_number, u.zone_letter)
    x, y, z = t.utm_to_local(east, 13.0)
    assert abs(x) < 1e-9 and abs(y - 20.0) < 1e-9 and z == pytest.approx(6.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-200, 200), st.floats(-200, 200), st.floats(-10, 50),
       st.floats(0, 360), st.floats(0.5, 2.0))
def test_local_round_trip(x, y, z, rot, scale):
    t = SiteTransform.from_geodetic(1.2966, 103.7764, 15.0, rot, scale)
    coord, alt = t.local_to_utm(x, y, z)
    back = to_local(utm_to_wgs84(coord, alt), t)
    assert max(abs(a - b) for a, b in zip(back, (x, y, z))) < 1e-6


def test_zone_mismatch():
    t = SiteTransform.from_geodetic(1.2966, 103.7764)
    with pytest.raises(ZoneMismatchError):
        to_local(GeoSample(1.3, 108.5), t)


def test_fit_recovers_transform():
    truth = SiteTransform.from_geodetic(1.2966, 103.7764, 5.0, 37.0, 1.0)
    pairs = []
    for x, y in ((0, 0), (100, 0), (0, 60), (80, 90)):
        coord, alt = truth.local_to_utm(x, y, 2.0)
        pairs.append((utm_to_wgs84(coord, alt), (x, y, 2.0)))
    fit = fit_transform(pairs)
    assert fit.rms < 1e-6
    assert fit.transform.rotation_deg == pytest.approx(37.0, abs=1e-7)
    assert fit.transform.scale == pytest.approx(1.0, abs=1e-9)
    assert math.isclose(fit.transform.origin_altitude, 5.0, abs_tol=1e-6)
