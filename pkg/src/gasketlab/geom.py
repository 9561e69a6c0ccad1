"""Plane geometry of tangent disks and half-planes.

Everything here is a pure function on immutable values.  Points are
``(x, y)`` tuples; complex numbers are used internally for Mobius maps.
Geometric comparisons are relative to the local scale (the largest radius
involved); algebraic identities use a tighter tolerance.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import (
    DegenerateTriple,
    HalfPlanePresent,
    NotPositivelyOriented,
    NotTangent,
    NumericBreakdown,
    TwoHalfPlanes,
    UnrepresentableImage,
)

GEOM_RTOL = 1e-9
ALG_RTOL = 1e-12

Point = tuple[float, float]


# ---------------------------------------------------------------------------
# generalized disks


@dataclass(frozen=True)
class GeneralizedDisk:
    """Open disk (center, radius) or open half-plane {z : <z, normal> < offset}.

    The half-plane normal points out of the region, toward the side where
    tangent disks live.  ``curvature`` is 1/radius for disks and exactly 0
    for half-planes.
    """

    curvature: float
    center: Point | None = None
    radius: float | None = None
    normal: Point | None = None
    offset: float | None = None

    def __post_init__(self):
        if self.center is not None:
            if self.radius is None or self.radius <= 0.0:
                raise ValueError("disk needs a positive radius")
            if abs(self.curvature * self.radius - 1.0) > ALG_RTOL:
                raise ValueError("curvature * radius must be 1")
        else:
            if self.normal is None or self.offset is None:
                raise ValueError("half-plane needs normal and offset")
            nx, ny = self.normal
            if abs(math.hypot(nx, ny) - 1.0) > ALG_RTOL:
                raise ValueError("half-plane normal must be unit length")
            if self.curvature != 0.0:
                raise ValueError("half-plane curvature must be exactly 0")

    @property
    def is_disk(self) -> bool:
        return self.center is not None


def disk(center: Point, radius: float) -> GeneralizedDisk:
    """Open disk with the stated center and radius."""
    radius = float(radius)
    return GeneralizedDisk(
        curvature=1.0 / radius,
        center=(float(center[0]), float(center[1])),
        radius=radius,
    )


def halfplane(normal: Point, offset: float) -> GeneralizedDisk:
    """Open half-plane {z : <z, normal> < offset}."""
    return GeneralizedDisk(
        curvature=0.0,
        normal=(float(normal[0]), float(normal[1])),
        offset=float(offset),
    )


def disk_to_json(d: GeneralizedDisk) -> dict:
    if d.is_disk:
        return {"type": "disk", "center": [d.center[0], d.center[1]], "radius": d.radius}
    return {"type": "halfplane", "normal": [d.normal[0], d.normal[1]], "offset": d.offset}


def disk_from_json(obj: dict) -> GeneralizedDisk:
    if obj["type"] == "disk":
        return disk(tuple(obj["center"]), obj["radius"])
    if obj["type"] == "halfplane":
        return halfplane(tuple(obj["normal"]), obj["offset"])
    raise ValueError(f"unknown disk type {obj.get('type')!r}")


# ---------------------------------------------------------------------------
# tangency


# roundoff in a coordinate difference scales with the ambient magnitude, not
# with the (possibly tiny) local radii; tolerances carry both terms
_AMBIENT_EPS = 4096.0 * 2.220446049250313e-16


def tangency_point(d1: GeneralizedDisk, d2: GeneralizedDisk, rtol: float = GEOM_RTOL) -> Point:
    """Unique common boundary point of two externally tangent members."""
    if not d1.is_disk and not d2.is_disk:
        raise TwoHalfPlanes("tangency point of two half-planes is not defined")
    if d1.is_disk and d2.is_disk:
        (x1, y1), r1 = d1.center, d1.radius
        (x2, y2), r2 = d2.center, d2.radius
        dist = math.hypot(x2 - x1, y2 - y1)
        ambient = abs(x1) + abs(y1) + abs(x2) + abs(y2) + r1 + r2
        if abs(dist - (r1 + r2)) > rtol * max(r1, r2) + _AMBIENT_EPS * ambient:
            raise NotTangent(f"boundary gap {dist - (r1 + r2):.3e} exceeds tolerance")
        s = 1.0 / (r1 + r2)
        return ((r2 * x1 + r1 * x2) * s, (r2 * y1 + r1 * y2) * s)
    if d2.is_disk:
        d1, d2 = d2, d1
    (cx, cy), r = d1.center, d1.radius
    nx, ny = d2.normal
    signed = cx * nx + cy * ny - d2.offset
    ambient = abs(cx) + abs(cy) + abs(d2.offset) + r
    if abs(signed - r) > rtol * r + _AMBIENT_EPS * ambient:
        raise NotTangent(f"disk/half-plane gap {signed - r:.3e} exceeds tolerance")
    return (cx - r * nx, cy - r * ny)


def _signed_area(p1: Point, p2: Point, p3: Point) -> float:
    return 0.5 * (
        (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1])
    )


@dataclass(frozen=True)
class DiskTriple:
    """Validated positively oriented tangential disk triple.

    ``q`` holds the tangency points: q[j] is the common point of the two
    members other than member j.  ``quad`` is the curvature quadruple
    (alpha, beta, gamma, kappa) with kappa = sqrt(bg + ga + ab).
    """

    disks: tuple[GeneralizedDisk, GeneralizedDisk, GeneralizedDisk]
    q: tuple[Point, Point, Point]
    quad: tuple[float, float, float, float]

    @property
    def kappa(self) -> float:
        return self.quad[3]

    @property
    def is_bounded(self) -> bool:
        return all(d.is_disk for d in self.disks)


def validate_triple(
    d1: GeneralizedDisk,
    d2: GeneralizedDisk,
    d3: GeneralizedDisk,
    rtol: float = GEOM_RTOL,
) -> DiskTriple:
    """Check tangency and orientation, attach tangency points and quadruple."""
    if sum(not d.is_disk for d in (d1, d2, d3)) > 1:
        raise TwoHalfPlanes("a tangential disk triple admits at most one half-plane")
    q1 = tangency_point(d2, d3, rtol)
    q2 = tangency_point(d3, d1, rtol)
    q3 = tangency_point(d1, d2, rtol)
    if _signed_area(q1, q2, q3) <= 0.0:
        raise NotPositivelyOriented("tangency points are clockwise")
    a, b, c = d1.curvature, d2.curvature, d3.curvature
    kappa = math.sqrt(b * c + c * a + a * b)
    return DiskTriple(disks=(d1, d2, d3), q=(q1, q2, q3), quad=(a, b, c, kappa))


# ---------------------------------------------------------------------------
# circumscribed / inscribed disks


def _circumcircle(p1: Point, p2: Point, p3: Point) -> tuple[Point, float]:
    """Center and radius of the circle through three points."""
    ax, ay = p1
    bx, by = p2
    cx, cy = p3
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    scale = max(abs(bx - ax), abs(by - ay), abs(cx - ax), abs(cy - ay), 1e-300)
    if abs(d) <= 1e-14 * scale * scale:
        raise DegenerateTriple("tangency points are numerically collinear")
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    r = math.hypot(ax - ux, ay - uy)
    return (ux, uy), r


def circumscribed_disk(t: DiskTriple) -> GeneralizedDisk:
    """Disk through the three tangency points; orthogonal to every member."""
    center, r = _circumcircle(*t.q)
    return disk(center, r)


def inscribed_disk(t: DiskTriple, residual_rtol: float = 1e-6) -> GeneralizedDisk:
    """Disk inside the ideal triangle tangent to all three members.

    The curvature is alpha + beta + gamma + 2 kappa.  The center comes from
    the linear system obtained by differencing the tangency constraints
    (trilateration); the complex Descartes relation is used as a residual
    cross-check when all members are disks.
    """
    a, b, c, kappa = t.quad
    k_in = a + b + c + 2.0 * kappa
    r_in = 1.0 / k_in

    # work in coordinates local to the smallest member disk: differencing
    # squared global coordinates would cancel catastrophically deep in the
    # gasket, and the smallest center is the one nearest the solution
    disk_slots = [j for j in range(3) if t.disks[j].is_disk]
    i0 = min(disk_slots, key=lambda j: t.disks[j].radius)
    disk_slots.remove(i0)
    disk_slots.insert(0, i0)
    (ox, oy), r0 = t.disks[i0].center, t.disks[i0].radius

    rows = []
    rhs = []
    for j in range(3):
        if not t.disks[j].is_disk:
            nx, ny = t.disks[j].normal
            rows.append((nx, ny))
            rhs.append(t.disks[j].offset + r_in - (ox * nx + oy * ny))
    for j in disk_slots[1:]:
        (xj, yj), rj = t.disks[j].center, t.disks[j].radius
        dx, dy = xj - ox, yj - oy
        rows.append((2.0 * dx, 2.0 * dy))
        rhs.append(dx * dx + dy * dy + (r_in + r0) ** 2 - (r_in + rj) ** 2)
        if len(rows) == 2:
            break
    (a11, a12), (a21, a22) = rows[0], rows[1]
    det = a11 * a22 - a12 * a21
    if det == 0.0:
        raise NumericBreakdown("trilateration system is singular")
    ux = (rhs[0] * a22 - rhs[1] * a12) / det
    uy = (a11 * rhs[1] - a21 * rhs[0]) / det
    zx, zy = ox + ux, oy + uy

    for j in range(3):
        dj = t.disks[j]
        if dj.is_disk:
            resid = math.hypot(
                ux - (dj.center[0] - ox), uy - (dj.center[1] - oy)
            ) - (r_in + dj.radius)
        else:
            resid = (zx * dj.normal[0] + zy * dj.normal[1] - dj.offset) - r_in
        if abs(resid) > residual_rtol * r_in + _AMBIENT_EPS * (abs(ox) + abs(oy) + 1.0):
            raise NumericBreakdown(f"tangency residual {resid:.3e} exceeds {residual_rtol:g}*r_in")

    if t.is_bounded:
        o = complex(ox, oy)
        z1, z2, z3 = (complex(*d.center) - o for d in t.disks)
        root = cmath.sqrt(a * b * z1 * z2 + b * c * z2 * z3 + c * a * z3 * z1)
        base = a * z1 + b * z2 + c * z3
        z_loc = complex(ux, uy)
        err = min(abs((base + 2 * root) / k_in - z_loc), abs((base - 2 * root) / k_in - z_loc))
        if err > residual_rtol * r_in + _AMBIENT_EPS * (abs(ox) + abs(oy) + 1.0):
            raise NumericBreakdown(f"Descartes cross-check off by {err:.3e}")

    return GeneralizedDisk(curvature=k_in, center=(zx, zy), radius=r_in)


def triangle_area(t: DiskTriple) -> float:
    """Area of the triangle spanned by the three disk centers."""
    if not t.is_bounded:
        raise HalfPlanePresent("center triangle requires three bounded disks")
    c1, c2, c3 = (d.center for d in t.disks)
    return abs(_signed_area(c1, c2, c3))


# ---------------------------------------------------------------------------
# canonical constructions used by tests and the CLI


def triple_from_curvatures(a: float, b: float, c: float) -> DiskTriple:
    """Canonical triple with given curvatures: first two disks on the x-axis."""
    r1, r2, r3 = 1.0 / a, 1.0 / b, 1.0 / c
    d12, d13, d23 = r1 + r2, r1 + r3, r2 + r3
    x = (d12 * d12 + d13 * d13 - d23 * d23) / (2.0 * d12)
    y = math.sqrt(max(d13 * d13 - x * x, 0.0))
    return validate_triple(
        disk((0.0, 0.0), r1),
        disk((d12, 0.0), r2),
        disk((x, y), r3),
    )


def triple_with_halfplane(a: float, b: float) -> DiskTriple:
    """Two disks of curvature a, b resting on the x-axis plus the lower half-plane."""
    r1, r2 = 1.0 / a, 1.0 / b
    x = 2.0 * math.sqrt(r1 * r2)
    return validate_triple(
        disk((0.0, r1), r1),
        halfplane((0.0, 1.0), 0.0),
        disk((x, r2), r2),
    )


def transform_triple(
    t: DiskTriple,
    scale: float = 1.0,
    rotate: float = 0.0,
    translate: Point = (0.0, 0.0),
) -> DiskTriple:
    """Apply a direct similarity (dilation, rotation, translation)."""
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    co, si = math.cos(rotate), math.sin(rotate)
    tx, ty = translate

    def _map_point(p: Point) -> Point:
        x, y = p
        return (scale * (co * x - si * y) + tx, scale * (si * x + co * y) + ty)

    members = []
    for d in t.disks:
        if d.is_disk:
            members.append(disk(_map_point(d.center), scale * d.radius))
        else:
            nx, ny = d.normal
            n2 = (co * nx - si * ny, si * nx + co * ny)
            off2 = scale * d.offset + n2[0] * tx + n2[1] * ty
            members.append(halfplane(n2, off2))
    return validate_triple(*members)


# ---------------------------------------------------------------------------
# Mobius maps


@dataclass(frozen=True)
class MobiusMap:
    """z -> (a w + b) / (c w + d) with w = conj(z) if conj else z."""

    a: complex
    b: complex
    c: complex
    d: complex
    conj: bool = False

    def __post_init__(self):
        if abs(self.a * self.d - self.b * self.c) == 0.0:
            raise ValueError("Mobius map needs a nonzero determinant")

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1.0 + 0.0j, 0.0j, 0.0j, 1.0 + 0.0j)

    @classmethod
    def inversion(cls, center: complex, radius: float) -> "MobiusMap":
        """Inversion in the circle |z - center| = radius (an involution)."""
        a = complex(center)
        return cls(a, radius * radius - a * a.conjugate(), 1.0 + 0.0j, -a.conjugate(), conj=True)

    @classmethod
    def line_reflection(cls, point: complex, angle: float) -> "MobiusMap":
        """Reflection in the line through ``point`` with direction ``angle``."""
        u = cmath.exp(2.0j * angle)
        p = complex(point)
        return cls(u, p - u * p.conjugate(), 0.0j, 1.0 + 0.0j, conj=True)

    def apply(self, z: complex) -> complex:
        w = z.conjugate() if self.conj else z
        den = self.c * w + self.d
        if den == 0.0:
            return complex(math.inf, math.inf)
        return (self.a * w + self.b) / den

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        """Composition: (f @ g)(z) = f(g(z))."""
        if self.conj:
            oa, ob, oc, od = (
                other.a.conjugate(),
                other.b.conjugate(),
                other.c.conjugate(),
                other.d.conjugate(),
            )
        else:
            oa, ob, oc, od = other.a, other.b, other.c, other.d
        return MobiusMap(
            self.a * oa + self.b * oc,
            self.a * ob + self.b * od,
            self.c * oa + self.d * oc,
            self.c * ob + self.d * od,
            conj=self.conj != other.conj,
        )

    def inverse(self) -> "MobiusMap":
        a, b, c, d = self.d, -self.b, -self.c, self.a
        if self.conj:
            a, b, c, d = a.conjugate(), b.conjugate(), c.conjugate(), d.conjugate()
        return MobiusMap(a, b, c, d, conj=self.conj)

    def pole(self) -> complex | None:
        """Source point mapped to infinity, or None for affine maps."""
        if self.c == 0.0:
            return None
        w = -self.d / self.c
        return w.conjugate() if self.conj else w


class InvertedRegion(NamedTuple):
    region: GeneralizedDisk
    complemented: bool  # True when the actual image contains infinity


def _contains(d: GeneralizedDisk, z: complex) -> bool:
    if d.is_disk:
        return abs(z - complex(*d.center)) < d.radius
    return z.real * d.normal[0] + z.imag * d.normal[1] < d.offset


def _boundary_points(d: GeneralizedDisk, angles) -> list[complex]:
    if d.is_disk:
        c = complex(*d.center)
        return [c + d.radius * cmath.exp(1j * th) for th in angles]
    nx, ny = d.normal
    base = complex(nx, ny) * d.offset
    tang = complex(-ny, nx)
    return [base + t * tang for t in angles]


def invert(m: MobiusMap, d: GeneralizedDisk) -> InvertedRegion:
    """Image of an open disk or half-plane under a Mobius map.

    Returns the image region together with a flag telling whether the true
    image contains the point at infinity (in which case the returned disk
    is the complement of the image, or the returned half-plane misses it).
    """
    for attempt in range(4):
        phase = 0.7548776662 * (attempt + 1)
        if d.is_disk:
            params = [phase, phase + 2.0 * math.pi / 3.0, phase + 4.0 * math.pi / 3.0]
        else:
            params = [phase - 1.0, phase, phase + 1.3]
        pts = [m.apply(z) for z in _boundary_points(d, params)]
        if all(abs(w) < 1e13 for w in pts):
            break
    else:
        raise UnrepresentableImage("boundary sampling keeps hitting the pole")

    pole = m.pole()
    contains_inf = pole is not None and _contains(d, pole)
    if d.is_disk:
        interior_src = complex(*d.center)
    else:
        nx, ny = d.normal
        interior_src = complex(nx, ny) * (d.offset - 1.0)
    if pole is not None and abs(interior_src - pole) < 1e-12:
        interior_src = 0.5 * (interior_src + _boundary_points(d, [0.1])[0])
    w_int = m.apply(interior_src)

    p1, p2, p3 = ((w.real, w.imag) for w in pts)
    try:
        center, radius = _circumcircle(p1, p2, p3)
        image_boundary_is_line = False
    except DegenerateTriple:
        image_boundary_is_line = True

    if image_boundary_is_line:
        # boundary maps onto a straight line; the image region is a half-plane
        direction = pts[1] - pts[0]
        if direction == 0.0:
            raise UnrepresentableImage("degenerate boundary image")
        n = direction / abs(direction) * 1j
        nx, ny = n.real, n.imag
        off = pts[0].real * nx + pts[0].imag * ny
        if w_int.real * nx + w_int.imag * ny > off:
            nx, ny, off = -nx, -ny, -off
        return InvertedRegion(halfplane((nx, ny), off), contains_inf)

    image = disk(center, radius)
    inside = abs(w_int - complex(*center)) < radius
    if inside and not contains_inf:
        return InvertedRegion(image, False)
    # interior maps outside: the true image is the complement of the disk
    return InvertedRegion(image, True)


# ---------------------------------------------------------------------------
# raw circle transforms (fast paths used by the carpet orbit enumeration)


def reflect_circle_in_line(center: complex, radius: float, point: complex, angle: float):
    """Image of a circle under reflection in a line (radius preserved)."""
    u = cmath.exp(2.0j * angle)
    return point + u * (center - point).conjugate(), radius


def invert_circle_in_circle(center: complex, radius: float, inv_center: complex, inv_radius: float):
    """Image of a circle under inversion; raises for circles through the center."""
    s2 = inv_radius * inv_radius
    delta = center - inv_center
    denom = delta.real * delta.real + delta.imag * delta.imag - radius * radius
    if abs(denom) < 1e-15 * (abs(delta) ** 2 + radius * radius):
        raise UnrepresentableImage("circle passes through the inversion center")
    factor = s2 / denom
    return inv_center + factor * delta, abs(factor) * radius
