"""Motion-adaptive selection regions and point containment.

All extents are full lengths (diameters), not semi-axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .trajectory import CYCLIST, PEDESTRIAN, MotionEstimate

PED_BASE_MAJOR_M = 1.5
PED_BASE_MINOR_M = 1.2
STATIONARY_DIAMETER_M = 1.5
CYCLIST_LENGTH_M = 2.5
CYCLIST_BASE_WIDTH_M = 1.2
EXTRA_CAP_M = 1.0
SPEED_GAIN_S = 1.0          # m of extra length per m/s
YAW_RATE_GAIN = 5.0         # m of extra width per rad/s
SPEED_GATE_MPS = 0.05


@dataclass(frozen=True)
class Ellipse:
    center: tuple
    ax_major_m: float
    ax_minor_m: float
    yaw_rad: float

    kind = "ellipse"


@dataclass(frozen=True)
class Circle:
    center: tuple
    diameter_m: float

    kind = "circle"


@dataclass(frozen=True)
class Rectangle:
    center: tuple
    length_m: float
    width_m: float
    yaw_rad: float

    kind = "rectangle"


SelectionRegion = Union[Ellipse, Circle, Rectangle]


def _extra(rate: float, gain: float) -> float:
    return min(abs(rate) * gain, EXTRA_CAP_M)


def pedestrian_region(center, m: MotionEstimate, speed_gate_mps: float = SPEED_GATE_MPS):
    """Ellipse along the walking direction; a circle once motion is unreliable."""
    center = (float(center[0]), float(center[1]))
    if m.stationary or not m.speed_mps >= speed_gate_mps:
        return Circle(center, STATIONARY_DIAMETER_M)
    return Ellipse(center,
                   PED_BASE_MAJOR_M + _extra(m.speed_mps, SPEED_GAIN_S),
                   PED_BASE_MINOR_M + _extra(m.yaw_rate_rps, YAW_RATE_GAIN),
                   m.yaw_rad)


def cyclist_region(center, m: MotionEstimate):
    # stopping bikes keep their last heading, so no stationary branch here
    center = (float(center[0]), float(center[1]))
    return Rectangle(center, CYCLIST_LENGTH_M,
                     CYCLIST_BASE_WIDTH_M + _extra(m.yaw_rate_rps, YAW_RATE_GAIN),
                     m.yaw_rad)


def region_for(kind: str, center, m: MotionEstimate, speed_gate_mps: float = SPEED_GATE_MPS):
    if kind == PEDESTRIAN:
        return pedestrian_region(center, m, speed_gate_mps)
    if kind == CYCLIST:
        return cyclist_region(center, m)
    raise ValueError(f"unknown VRU kind {kind!r}")


def transform_region(region: SelectionRegion, dx: float, dy: float, rot: float):
    """Rotate a region by ``rot`` about the origin, then translate by (dx, dy)."""
    c, s = math.cos(rot), math.sin(rot)
    x, y = region.center[0], region.center[1]
    center = (c * x - s * y + dx, s * x + c * y + dy)
    if isinstance(region, Circle):
        return Circle(center, region.diameter_m)
    if isinstance(region, Ellipse):
        return Ellipse(center, region.ax_major_m, region.ax_minor_m, region.yaw_rad + rot)
    return Rectangle(center, region.length_m, region.width_m, region.yaw_rad + rot)


def contains_points(region: SelectionRegion, x, y) -> np.ndarray:
    """Boundary-inclusive membership for arrays of points."""
    dx = np.asarray(x, dtype=float) - region.center[0]
    dy = np.asarray(y, dtype=float) - region.center[1]
    if isinstance(region, Circle):
        r = 0.5 * region.diameter_m
        return dx * dx + dy * dy <= r * r
    c, s = math.cos(region.yaw_rad), math.sin(region.yaw_rad)
    u = c * dx + s * dy
    v = -s * dx + c * dy
    if isinstance(region, Ellipse):
        a = 0.5 * region.ax_major_m
        b = 0.5 * region.ax_minor_m
        return (u / a) ** 2 + (v / b) ** 2 <= 1.0
    if isinstance(region, Rectangle):
        return (np.abs(u) <= 0.5 * region.length_m) & (np.abs(v) <= 0.5 * region.width_m)
    raise TypeError(f"not a selection region: {region!r}")


def contains(region: SelectionRegion, p) -> bool:
    return bool(contains_points(region, p[0], p[1]))


def area(region: SelectionRegion) -> float:
    if isinstance(region, Circle):
        return math.pi * region.diameter_m ** 2 / 4.0
    if isinstance(region, Ellipse):
        return math.pi * region.ax_major_m * region.ax_minor_m / 4.0
    return region.length_m * region.width_m
