"""WGS84 <-> UTM conversion and the site calibration to model coordinates.

The projection uses the Krüger series for the transverse Mercator
carried to sixth order in the third flattening, which keeps the error
well below a millimetre inside a UTM zone. The inverse recovers
geodetic latitude from the conformal latitude by Newton iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

A = 6378137.0
INV_F = 298.257223563
K0 = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10000000.0

_F = 1.0 / INV_F
_E2 = _F * (2.0 - _F)
_E = math.sqrt(_E2)
_N = _F / (2.0 - _F)


def _series():
    n = _N
    n2, n3, n4, n5, n6 = n**2, n**3, n**4, n**5, n**6
    rect = A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0)
    alpha = (
        n / 2 - 2 * n2 / 3 + 5 * n3 / 16 + 41 * n4 / 180 - 127 * n5 / 288 + 7891 * n6 / 37800,
        13 * n2 / 48 - 3 * n3 / 5 + 557 * n4 / 1440 + 281 * n5 / 630 - 1983433 * n6 / 1935360,
        61 * n3 / 240 - 103 * n4 / 140 + 15061 * n5 / 26880 + 167603 * n6 / 181440,
        49561 * n4 / 161280 - 179 * n5 / 168 + 6601661 * n6 / 7257600,
        34729 * n5 / 80640 - 3418889 * n6 / 1995840,
        212378941 * n6 / 319334400,
    )
    beta = (
        n / 2 - 2 * n2 / 3 + 37 * n3 / 96 - n4 / 360 - 81 * n5 / 512 + 96199 * n6 / 604800,
        n2 / 48 + n3 / 15 - 437 * n4 / 1440 + 46 * n5 / 105 - 1118711 * n6 / 3870720,
        17 * n3 / 480 - 37 * n4 / 840 - 209 * n5 / 4480 + 5569 * n6 / 90720,
        4397 * n4 / 161280 - 11 * n5 / 504 - 830251 * n6 / 7257600,
        4583 * n5 / 161280 - 108847 * n6 / 3991680,
        20648693 * n6 / 638668800,
    )
    return rect, alpha, beta


_RECT, _ALPHA, _BETA = _series()
_BANDS = "CDEFGHJKLMNPQRSTUVWXX"


class OutOfRangeError(ValueError):
    pass


class ZoneMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GeoSample:
    latitude: float
    longitude: float
    altitude: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.latitude, self.longitude, self.altitude)):
            raise OutOfRangeError(f"non-finite coordinate in {self}")
        if not -80.0 <= self.latitude <= 84.0:
            raise OutOfRangeError(f"latitude {self.latitude} outside UTM coverage [-80, 84]")
        if not -180.0 <= self.longitude <= 180.0:
            raise OutOfRangeError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True)
class UtmCoord:
    easting: float
    northing: float
    zone_number: int
    zone_letter: str

    @property
    def northern(self) -> bool:
        return self.zone_letter >= "N"


def zone_number(longitude: float) -> int:
    return min(int(math.floor((longitude + 180.0) / 6.0)) + 1, 60)


def zone_letter(latitude: float) -> str:
    if not -80.0 <= latitude <= 84.0:
        raise OutOfRangeError(f"latitude {latitude} outside UTM coverage [-80, 84]")
    band = int((latitude + 80.0) // 8.0)
    if latitude < 0:  # -1e-23 + 80 rounds to 80, which would give band N
        band = min(band, 9)
    return _BANDS[band]


def central_meridian(zone: int) -> float:
    return (zone - 1) * 6.0 - 180.0 + 3.0


def wgs84_to_utm(sample: GeoSample, force_zone: int | None = None) -> UtmCoord:
    """Project a WGS84 sample into its UTM zone (or ``force_zone``)."""
    lat = sample.latitude
    if not -80.0 <= lat <= 84.0:
        raise OutOfRangeError(f"latitude {lat} outside UTM coverage [-80, 84]")
    zone = force_zone if force_zone is not None else zone_number(sample.longitude)
    dlon = sample.longitude - central_meridian(zone)
    dlon = (dlon + 180.0) % 360.0 - 180.0
    phi = math.radians(lat)
    lam = math.radians(dlon)

    tau = math.tan(phi)
    sigma = math.sinh(_E * math.atanh(_E * tau / math.hypot(1.0, tau)))
    tau_c = tau * math.hypot(1.0, sigma) - sigma * math.hypot(1.0, tau)
    cos_lam = math.cos(lam)
    xi_c = math.atan2(tau_c, cos_lam)
    eta_c = math.asinh(math.sin(lam) / math.hypot(tau_c, cos_lam))

    xi = xi_c
    eta = eta_c
    for j, a in enumerate(_ALPHA, start=1):
        xi += a * math.sin(2 * j * xi_c) * math.cosh(2 * j * eta_c)
        eta += a * math.cos(2 * j * xi_c) * math.sinh(2 * j * eta_c)

    easting = FALSE_EASTING + K0 * _RECT * eta
    northing = K0 * _RECT * xi
    if lat < 0:
        northing += FALSE_NORTHING_SOUTH
    return UtmCoord(easting, northing, zone, zone_letter(lat))


def utm_to_wgs84(coord: UtmCoord, altitude: float = 0.0) -> GeoSample:
    """Inverse of :func:`wgs84_to_utm`."""
    if not 1 <= coord.zone_number <= 60:
        raise OutOfRangeError(f"zone number {coord.zone_number} outside 1..60")
    if coord.zone_letter not in _BANDS:
        raise OutOfRangeError(f"zone letter {coord.zone_letter!r} is not a UTM band")
    if not 100000.0 < coord.easting < 900000.0:
        raise OutOfRangeError(f"easting {coord.easting} outside (100000, 900000)")
    if not 0.0 <= coord.northing <= 10000000.0:
        raise OutOfRangeError(f"northing {coord.northing} outside [0, 10000000]")

    y = coord.northing - (0.0 if coord.northern else FALSE_NORTHING_SOUTH)
    xi = y / (K0 * _RECT)
    eta = (coord.easting - FALSE_EASTING) / (K0 * _RECT)
    xi_c = xi
    eta_c = eta
    for j, b in enumerate(_BETA, start=1):
        xi_c -= b * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
        eta_c -= b * math.cos(2 * j * xi) * math.sinh(2 * j * eta)

    sinh_eta = math.sinh(eta_c)
    cos_xi = math.cos(xi_c)
    tau_c = math.sin(xi_c) / math.hypot(sinh_eta, cos_xi)
    lam = math.atan2(sinh_eta, cos_xi)

    tau = tau_c
    for _ in range(8):
        sigma = math.sinh(_E * math.atanh(_E * tau / math.hypot(1.0, tau)))
        tau_i = tau * math.hypot(1.0, sigma) - sigma * math.hypot(1.0, tau)
        step = (
            (tau_c - tau_i) / math.hypot(1.0, tau_i)
            * (1.0 + (1.0 - _E2) * tau * tau)
            / ((1.0 - _E2) * math.hypot(1.0, tau))
        )
        tau += step
        if abs(step) < 1e-15 * max(1.0, abs(tau)):
            break

    lat = math.degrees(math.atan(tau))
    lon = central_meridian(coord.zone_number) + math.degrees(lam)
    lon = (lon + 180.0) % 360.0 - 180.0
    return GeoSample(lat, lon, altitude)


@dataclass(frozen=True)
class SiteTransform:
    """Calibrated mapping from UTM to model coordinates.

    ``local = scale * R(rotation_deg) * (utm - origin)`` horizontally and
    ``z = scale * (altitude - origin_altitude)``.
    """

    origin: UtmCoord
    origin_altitude: float = 0.0
    rotation_deg: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not math.isfinite(self.rotation_deg):
            raise ValueError("rotation must be finite")
        object.__setattr__(self, "rotation_deg", self.rotation_deg % 360.0)

    @classmethod
    def from_geodetic(cls, origin_lat: float, origin_lon: float, origin_alt: float = 0.0,
                      rotation_deg: float = 0.0, scale: float = 1.0) -> "SiteTransform":
        origin = wgs84_to_utm(GeoSample(origin_lat, origin_lon, origin_alt))
        return cls(origin, origin_alt, rotation_deg, scale)

    def rotate(self, dx: float, dy: float) -> tuple[float, float]:
        theta = math.radians(self.rotation_deg)
        c, s = math.cos(theta), math.sin(theta)
        return c * dx - s * dy, s * dx + c * dy

    def utm_to_local(self, coord: UtmCoord, altitude: float) -> tuple[float, float, float]:
        if coord.zone_number != self.origin.zone_number or coord.northern != self.origin.northern:
            raise ZoneMismatchError(
                f"sample in zone {coord.zone_number}{coord.zone_letter}, site origin in "
                f"{self.origin.zone_number}{self.origin.zone_letter}"
            )
        x, y = self.rotate(coord.easting - self.origin.easting, coord.northing - self.origin.northing)
        return self.scale * x, self.scale * y, self.scale * (altitude - self.origin_altitude)

    def local_to_utm(self, x: float, y: float, z: float) -> tuple[UtmCoord, float]:
        """Inverse mapping, used to synthesise samples at known model points."""
        theta = math.radians(self.rotation_deg)
        c, s = math.cos(theta), math.sin(theta)
        u, v = x / self.scale, y / self.scale
        de, dn = c * u + s * v, -s * u + c * v
        coord = UtmCoord(
            self.origin.easting + de, self.origin.northing + dn,
            self.origin.zone_number, self.origin.zone_letter,
        )
        return coord, self.origin_altitude + z / self.scale


def to_local(sample: GeoSample, transform: SiteTransform) -> tuple[float, float, float]:
    """Map a WGS84 sample to model ``(x, y, z)`` metres.

    Raises :class:`ZoneMismatchError` when the sample's natural UTM zone
    differs from the calibrated origin's.
    """
    return transform.utm_to_local(wgs84_to_utm(sample), sample.altitude)


@dataclass(frozen=True)
class FitResult:
    transform: SiteTransform
    residuals: tuple[float, ...]

    @property
    def rms(self) -> float:
        return math.sqrt(sum(r * r for r in self.residuals) / len(self.residuals))


def fit_transform(pairs: Iterable[tuple[GeoSample, Sequence[float]]]) -> FitResult:
    """Least-squares similarity fit from surveyed ``(sample, (x, y, z))`` pairs.

    Needs at least two horizontally distinct points in one UTM zone.
    Residuals are the 3-D distances between the fitted and surveyed
    model points.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("need at least two point pairs")
    utms = [wgs84_to_utm(g) for g, _ in pairs]
    zones = {(u.zone_number, u.northern) for u in utms}
    if len(zones) != 1:
        raise ZoneMismatchError(f"pairs span several UTM zones: {sorted(zones)}")

    m = len(pairs)
    ue = sum(u.easting for u in utms) / m
    un = sum(u.northing for u in utms) / m
    px = sum(p[1][0] for p in pairs) / m
    py = sum(p[1][1] for p in pairs) / m
    dot = cross = norm = 0.0
    for u, (_, p) in zip(utms, pairs):
        a, b = u.easting - ue, u.northing - un
        x, y = p[0] - px, p[1] - py
        dot += a * x + b * y
        cross += a * y - b * x
        norm += a * a + b * b
    if norm == 0.0:
        raise ValueError("surveyed points are horizontally coincident")
    ca, sa = dot / norm, cross / norm
    scale = math.hypot(ca, sa)
    rotation = math.degrees(math.atan2(sa, ca))

    # local = s R (u - o)  =>  o = u_mean - (s R)^-1 p_mean
    c, s = ca / scale, sa / scale
    inv_x, inv_y = (c * px + s * py) / scale, (-s * px + c * py) / scale
    zone = utms[0]
    origin = UtmCoord(ue - inv_x, un - inv_y, zone.zone_number, zone.zone_letter)
    origin_alt = sum(g.altitude - p[2] / scale for g, p in pairs) / m
    transform = SiteTransform(origin, origin_alt, rotation, scale)

    residuals = []
    for u, (g, p) in zip(utms, pairs):
        q = transform.utm_to_local(u, g.altitude)
        residuals.append(math.dist(q, tuple(p[:3])))
    return FitResult(transform, tuple(residuals))
