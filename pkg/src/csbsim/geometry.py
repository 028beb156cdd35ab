"""Coordinate transforms for a front-facing planar transmit array.

Three frames are used throughout the toolkit:

* rectangular space (x, y, z) with the array in the x = 0 plane facing +x,
* a modified spherical frame (r, theta, phi) where theta is azimuth,
  phi is elevation measured against a tilted reference, and both angles
  use the single-argument arctangent (valid because x > 0 is enforced),
* a normalized 2D plane at distance d in front of the array that bounds
  where an airborne eavesdropper may hover, with coordinates (u, v) in
  [-1, 1]^2.

All angles are radians internally; degrees appear only at CLI boundaries.
"""

from __future__ import annotations

import math
from typing import NamedTuple


class RectPoint(NamedTuple):
    """Point in rectangular space, meters."""

    x: float
    y: float
    z: float


class SphPoint(NamedTuple):
    """Point in the modified spherical frame.

    Attributes:
        r: range in meters, r > 0.
        theta: azimuth in radians, in (-pi/2, pi/2).
        phi: elevation in radians, includes the tilt offset.
    """

    r: float
    theta: float
    phi: float


class UavPlaneSpec(NamedTuple):
    """Geometry of the hover plane parallel to the (tilted) array face.

    Attributes:
        d: perpendicular distance from the array to the plane, meters, > 0.
        beta: full angular aperture of the plane as seen from the array,
            radians, in (0, pi).
        theta_tilt: downward tilt of the array's elevation reference, radians.
    """

    d: float
    beta: float
    theta_tilt: float = 0.0


class UavPlaneCoord(NamedTuple):
    """Normalized coordinates on the hover plane, each in [-1, 1]."""

    u: float
    v: float


def _check_plane_spec(spec: UavPlaneSpec) -> None:
    if not spec.d > 0:
        raise ValueError(f"plane distance must be positive, got d={spec.d}")
    if not 0 < spec.beta < math.pi:
        raise ValueError(f"plane aperture must lie in (0, pi), got beta={spec.beta}")


def rect_to_msph(p, theta_tilt: float = 0.0) -> SphPoint:
    """Convert a rectangular point to the modified spherical frame.

    Args:
        p: (x, y, z) triple or RectPoint, with x > 0 (front half-space).
        theta_tilt: elevation reference tilt in radians.

    Returns:
        SphPoint with r = sqrt(x^2+y^2+z^2), theta = arctan(y/x),
        phi = arctan(z/x) + theta_tilt.

    Raises:
        ValueError: if x <= 0. Points on or behind the array plane have no
            well-defined direction in the single-argument form, and the
            origin has no direction at all.
    """
    x, y, z = p
    if x <= 0:
        raise ValueError(
            f"point must lie strictly in front of the array (x > 0), got x={x}"
        )
    r = math.sqrt(x * x + y * y + z * z)
    theta = math.atan(y / x)
    phi = math.atan(z / x) + theta_tilt
    return SphPoint(r, theta, phi)


def uav_plane_to_rect(c, spec: UavPlaneSpec) -> RectPoint:
    """Map normalized plane coordinates to rectangular space.

    The plane is perpendicular to the tilted boresight, at distance d:
    every output satisfies x*cos(tilt) - z*sin(tilt) = d exactly.

    Args:
        c: (u, v) pair or UavPlaneCoord, each component in [-1, 1].
        spec: plane geometry.

    Returns:
        RectPoint on the plane. u moves the point in elevation, v in azimuth.

    Raises:
        ValueError: if |u| > 1 or |v| > 1, or the spec is invalid.
    """
    _check_plane_spec(spec)
    u, v = c
    if abs(u) > 1 or abs(v) > 1:
        raise ValueError(f"plane coordinates must lie in [-1,1]^2, got ({u}, {v})")
    half = spec.d * math.tan(spec.beta / 2)
    sin_t = math.sin(spec.theta_tilt)
    cos_t = math.cos(spec.theta_tilt)
    x = u * half * sin_t + spec.d * cos_t
    y = v * half
    z = u * half * cos_t - spec.d * sin_t
    return RectPoint(x, y, z)


def msph_angles_of_plane_coord(c, spec: UavPlaneSpec) -> tuple[float, float]:
    """Angles (theta, phi) of a hover-plane point, composing the two maps above.

    Raises:
        ValueError: if the plane point falls on or behind the array plane
            (possible for tilted arrays at extreme u).
    """
    p = uav_plane_to_rect(c, spec)
    s = rect_to_msph(p, spec.theta_tilt)
    return s.theta, s.phi
