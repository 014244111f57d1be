"""Frame conversions: geodetic -> local ENU -> vehicle -> sensor.

Conventions used throughout the package:

* ENU is a local east/north/up tangent plane anchored at a geodetic origin
  (by convention the first ego fix of a scene).
* Yaw angles are radians, counterclockwise, zero along the ENU east axis,
  wrapped to (-pi, pi].
* The vehicle frame has x forward and y left.
* Sensor azimuth is zero at boresight and positive counterclockwise.
* Radial (Doppler) speed is positive for a receding target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InputError

# WGS84
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)


class GeoFix(NamedTuple):
    time_s: float
    lat_deg: float
    lon_deg: float
    alt_m: float = 0.0


class EnuPoint(NamedTuple):
    east_m: float
    north_m: float
    up_m: float = 0.0


class VehiclePoint(NamedTuple):
    """Point in the vehicle frame (x forward, y left)."""

    x_m: float
    y_m: float


class EgoPose(NamedTuple):
    time_s: float
    position: EnuPoint
    yaw_rad: float
    speed_mps: float = 0.0


@dataclass(frozen=True)
class SensorMount:
    """Sensor extrinsics in the vehicle frame."""

    x_m: float = 0.0
    y_m: float = 0.0
    yaw_rad: float = 0.0
    fov_rad: float = math.radians(150.0)
    max_range_m: float = 50.0

    def __post_init__(self):
        vals = (self.x_m, self.y_m, self.yaw_rad, self.fov_rad, self.max_range_m)
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"sensor mount has non-finite values: {self}")
        if not -math.pi < self.yaw_rad <= math.pi:
            raise InputError(f"sensor mount yaw {self.yaw_rad} outside (-pi, pi]")
        if self.fov_rad <= 0 or self.max_range_m <= 0:
            raise InputError("sensor field of view and max range must be positive")


def wrap_angle(a):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    two_pi = 2.0 * math.pi
    if isinstance(a, np.ndarray):
        return math.pi - np.mod(math.pi - a, two_pi)
    return math.pi - (math.pi - a) % two_pi


def _check_fix(fix: GeoFix, what: str) -> None:
    if not all(math.isfinite(v) for v in (fix.lat_deg, fix.lon_deg, fix.alt_m)):
        raise InputError(f"{what} has non-finite coordinates: {fix}")
    if not -90.0 <= fix.lat_deg <= 90.0:
        raise InputError(f"{what} latitude {fix.lat_deg} outside [-90, 90]")
    if not -180.0 <= fix.lon_deg <= 180.0:
        raise InputError(f"{what} longitude {fix.lon_deg} outside [-180, 180]")


def _ecef(lat_deg, lon_deg, alt_m):
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    sl, cl = np.sin(lat), np.cos(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sl * sl)
    x = (n + alt_m) * cl * np.cos(lon)
    y = (n + alt_m) * cl * np.sin(lon)
    z = (n * (1.0 - WGS84_E2) + alt_m) * sl
    return x, y, z


def geodetic_to_enu_arrays(lat_deg, lon_deg, alt_m, origin: GeoFix):
    """Vectorised geodetic -> ENU about ``origin``. Returns (east, north, up)."""
    lat_deg = np.asarray(lat_deg, dtype=float)
    lon_deg = np.asarray(lon_deg, dtype=float)
    alt_m = np.asarray(alt_m, dtype=float)
    if not (np.all(np.isfinite(lat_deg)) and np.all(np.isfinite(lon_deg))
            and np.all(np.isfinite(alt_m))):
        raise InputError("non-finite geodetic coordinates")
    x, y, z = _ecef(lat_deg, lon_deg, alt_m)
    x0, y0, z0 = _ecef(origin.lat_deg, origin.lon_deg, origin.alt_m)
    dx, dy, dz = x - x0, y - y0, z - z0
    lat0 = math.radians(origin.lat_deg)
    lon0 = math.radians(origin.lon_deg)
    sl, cl = math.sin(lat0), math.cos(lat0)
    so, co = math.sin(lon0), math.cos(lon0)
    east = -so * dx + co * dy
    north = -sl * co * dx - sl * so * dy + cl * dz
    up = cl * co * dx + cl * so * dy + sl * dz
    return east, north, up


def geodetic_to_enu(fix: GeoFix, origin: GeoFix) -> EnuPoint:
    _check_fix(fix, "fix")
    _check_fix(origin, "origin")
    e, n, u = geodetic_to_enu_arrays(fix.lat_deg, fix.lon_deg, fix.alt_m, origin)
    return EnuPoint(float(e), float(n), float(u))


def enu_to_geodetic_arrays(east, north, up, origin: GeoFix):
    """Inverse of :func:`geodetic_to_enu_arrays`. Returns (lat_deg, lon_deg, alt_m)."""
    east = np.asarray(east, dtype=float)
    north = np.asarray(north, dtype=float)
    up = np.asarray(up, dtype=float)
    lat0 = math.radians(origin.lat_deg)
    lon0 = math.radians(origin.lon_deg)
    sl, cl = math.sin(lat0), math.cos(lat0)
    so, co = math.sin(lon0), math.cos(lon0)
    x0, y0, z0 = _ecef(origin.lat_deg, origin.lon_deg, origin.alt_m)
    x = x0 - so * east - sl * co * north + cl * co * up
    y = y0 + co * east - sl * so * north + cl * so * up
    z = z0 + cl * north + sl * up

    lon = np.arctan2(y, x)
    p = np.hypot(x, y)
    lat = np.arctan2(z, p * (1.0 - WGS84_E2))
    for _ in range(6):
        s = np.sin(lat)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * s * s)
        h = p / np.cos(lat) - n
        lat = np.arctan2(z, p * (1.0 - WGS84_E2 * n / (n + h)))
    s = np.sin(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * s * s)
    h = p / np.cos(lat) - n
    return np.degrees(lat), np.degrees(lon), h


def enu_to_geodetic(p: EnuPoint, origin: GeoFix, time_s: float = 0.0) -> GeoFix:
    lat, lon, alt = enu_to_geodetic_arrays(p.east_m, p.north_m, p.up_m, origin)
    return GeoFix(time_s, float(lat), float(lon), float(alt))


def enu_to_vehicle(p: EnuPoint, pose: EgoPose) -> VehiclePoint:
    dx = p[0] - pose.position[0]
    dy = p[1] - pose.position[1]
    c, s = math.cos(pose.yaw_rad), math.sin(pose.yaw_rad)
    return VehiclePoint(c * dx + s * dy, -s * dx + c * dy)


def vehicle_to_enu(q: VehiclePoint, pose: EgoPose) -> EnuPoint:
    c, s = math.cos(pose.yaw_rad), math.sin(pose.yaw_rad)
    return EnuPoint(pose.position[0] + c * q[0] - s * q[1],
                    pose.position[1] + s * q[0] + c * q[1])


def polar_to_vehicle(range_m, azimuth_rad, mount: SensorMount):
    """Vectorised sensor polar -> vehicle Cartesian. Returns (x, y) arrays."""
    ang = np.asarray(azimuth_rad, dtype=float) + mount.yaw_rad
    r = np.asarray(range_m, dtype=float)
    return mount.x_m + r * np.cos(ang), mount.y_m + r * np.sin(ang)


def vehicle_to_polar(x, y, mount: SensorMount):
    """Vectorised vehicle Cartesian -> sensor (range, azimuth)."""
    dx = np.asarray(x, dtype=float) - mount.x_m
    dy = np.asarray(y, dtype=float) - mount.y_m
    return np.hypot(dx, dy), wrap_angle(np.arctan2(dy, dx) - mount.yaw_rad)


def detection_to_vehicle(d, mount: SensorMount) -> VehiclePoint:
    if not d.range_m > 0:
        raise InputError(f"detection range must be positive, got {d.range_m}")
    ang = d.azimuth_rad + mount.yaw_rad
    return VehiclePoint(mount.x_m + d.range_m * math.cos(ang),
                        mount.y_m + d.range_m * math.sin(ang))


def compensate_doppler_arrays(radial_speed_mps, azimuth_rad, speed_mps: float,
                              mount: SensorMount):
    """Vectorised ego-motion compensation; ego velocity is along the vehicle x axis."""
    ray = np.asarray(azimuth_rad, dtype=float) + mount.yaw_rad
    return np.asarray(radial_speed_mps, dtype=float) + speed_mps * np.cos(ray)


def ego_compensate_doppler(d, pose: EgoPose, mount: SensorMount) -> float:
    """Remove the ego velocity component from a detection's radial speed.

    A static world point compensates to zero: its raw radial speed is the
    negative projection of the ego velocity onto the sensor->point ray.
    """
    if not d.range_m > 0:
        raise InputError("cannot compensate a zero-length ray")
    ray = d.azimuth_rad + mount.yaw_rad
    return d.radial_speed_mps + pose.speed_mps * math.cos(ray)
