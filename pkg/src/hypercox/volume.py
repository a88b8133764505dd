"""Volumes and Euler characteristics along the deformation.

Three independent routes to the volume of the family polytope are provided
and cross-checked: integration of the Schlafli differential over a regime
of constant combinatorics, closed forms in the deformation angle, and the
restricted Poincare formula evaluated on an enumerated strata complex.
Gauss-Bonnet converts the orbifold Euler characteristic into a fourth.

The spherical ingredients (regular tetrahedron volumes, the Coxeter
integral) are one-dimensional quadratures with a square-root substitution
at the left endpoint, where the integrand has unbounded slope.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from scipy.integrate import quad

from .coxeter import (
    StrataComplex,
    build_diagram,
    coxeter_group_order,
    enumerate_strata,
    gram_matrix,
)
from .family import Regime, T1_SQUARED, T2_SQUARED, angle_theta
from .lorentz import SpaceLikeVector, minkowski_product, pair_relation, tolerance

#: Dihedral angle of the Euclidean regular tetrahedron, the lower limit of
#: the spherical family.
TET_MIN_DIHEDRAL = math.acos(1 / 3)

QUAD_TOL = 1e-10

T1 = math.sqrt(float(T1_SQUARED))
T2 = math.sqrt(float(T2_SQUARED))


def hyperbolic_polygon_area(sides: int, angles: Sequence[float]) -> float:
    """Area (sides - 2)*pi - sum(angles) of a hyperbolic polygon."""
    if sides < 3:
        raise ValueError("a polygon needs at least 3 sides")
    for angle in angles:
        if not 0 <= angle < math.pi:
            raise ValueError(f"interior angle {angle} outside [0, pi)")
    area = (sides - 2) * math.pi - sum(angles)
    if area <= -1e-12:
        raise ValueError("angle sum exceeds the hyperbolic bound")
    return max(0.0, area)


def cone_surface_area(euler_char: int, cone_angles: Sequence[float]) -> float:
    """Gauss-Bonnet area of a hyperbolic cone surface."""
    for angle in cone_angles:
        if angle >= 2 * math.pi:
            raise ValueError("cone angles must be below 2*pi")
    area = -2 * math.pi * euler_char + sum(2 * math.pi - a for a in cone_angles)
    if area <= 0:
        raise ValueError("the data does not describe a hyperbolic cone surface")
    return area


# ---------------------------------------------------------------------------
# spherical quadratures


def eta_of_theta(theta: float) -> float:
    """Edge angle of the regular spherical tetrahedron with dihedral theta.

    The same function gives the non-right face angle of the family polytope
    below the second critical time under theta-substitution.
    """
    if theta < TET_MIN_DIHEDRAL - 1e-12 or theta > math.pi + 1e-12:
        raise ValueError("dihedral angle outside [arccos(1/3), pi]")
    c = math.cos(theta) / (1 - 2 * math.cos(theta))
    return math.acos(max(-1.0, min(1.0, c)))


def _eta_integral(theta: float) -> float:
    """Integral of eta from arccos(1/3) to theta, via u = sqrt(shift)."""
    if theta <= TET_MIN_DIHEDRAL:
        return 0.0
    top = math.sqrt(theta - TET_MIN_DIHEDRAL)
    value, _ = quad(
        lambda s: 2 * s * eta_of_theta(TET_MIN_DIHEDRAL + s * s),
        0.0,
        top,
        epsabs=QUAD_TOL,
        limit=200,
    )
    return value


def spherical_regular_tet_volume(theta: float) -> float:
    """Volume of the regular spherical tetrahedron with dihedral theta.

    Schlafli in S^3: dV = 3 eta d(theta), starting from the point
    tetrahedron at theta = arccos(1/3).
    """
    if theta < TET_MIN_DIHEDRAL - 1e-12 or theta > math.pi + 1e-12:
        raise ValueError("dihedral angle outside [arccos(1/3), pi]")
    return 3 * _eta_integral(theta)


def coxeter_integral() -> float:
    """The definite integral of eta over the whole spherical range."""
    return _eta_integral(math.pi)


# ---------------------------------------------------------------------------
# face geometry


@dataclass(frozen=True)
class FaceGeometry:
    """Measured polygon data of one 2-dimensional stratum."""

    walls: frozenset
    sides: int
    interior_angles: tuple[float, ...]
    vertex_finite: tuple[bool, ...]
    vertex_walls: tuple[frozenset, ...]
    area: float
    dihedral: float


def _unit(v: Sequence[float]) -> list[float]:
    scale = 1 / math.sqrt(minkowski_product(v, v))
    return [scale * float(x) for x in v]


def face_geometry(
    normals: Mapping[str, SpaceLikeVector],
    complex_: StrataComplex,
    face_walls: frozenset,
    eps: Optional[float] = None,
) -> FaceGeometry:
    """Polygon combinatorics, interior angles and area of one face.

    The interior angle at a finite vertex is the dihedral angle of the two
    remaining vertex walls projected into the plane of the face; ideal
    vertices contribute angle zero.
    """
    a, b = sorted(face_walls)
    dihedral = complex_.face_angle(face_walls)
    u1 = _unit(normals[a])
    raw = [float(x) for x in normals[b].coords]
    g = minkowski_product(raw, u1)
    u2 = _unit([x - g * y for x, y in zip(raw, u1)])

    def projected(name: str) -> list[float]:
        w = [float(x) for x in normals[name].coords]
        c1 = minkowski_product(w, u1)
        c2 = minkowski_product(w, u2)
        return _unit([x - c1 * y - c2 * z for x, y, z in zip(w, u1, u2)])

    angles: list[float] = []
    finite_flags: list[bool] = []
    corners: list[frozenset] = []
    for vertex in complex_.finite_vertices:
        if face_walls <= vertex.walls:
            c, d = sorted(vertex.walls - face_walls)
            cos_angle = -minkowski_product(projected(c), projected(d))
            angles.append(math.acos(max(-1.0, min(1.0, cos_angle))))
            finite_flags.append(True)
            corners.append(vertex.walls)
    for vertex in complex_.ideal_vertices:
        if face_walls <= vertex.walls:
            angles.append(0.0)
            finite_flags.append(False)
            corners.append(vertex.walls)
    sides = len(angles)
    area = hyperbolic_polygon_area(sides, angles)
    return FaceGeometry(
        walls=face_walls,
        sides=sides,
        interior_angles=tuple(angles),
        vertex_finite=tuple(finite_flags),
        vertex_walls=tuple(corners),
        area=area,
        dihedral=dihedral,
    )


# ---------------------------------------------------------------------------
# the Schlafli route


@dataclass(frozen=True)
class FaceFamily:
    """A class of congruent faces that deform together."""

    name: str
    count: int
    dihedral: Callable[[float], float]
    area: Callable[[float], float]


def _cos_phi(t: float) -> float:
    value = math.sqrt(2) * (1 - t * t)
    scale = math.sqrt(max((2 * t * t - 1) * (t * t + 1), 1e-300))
    return max(-1.0, min(1.0, value / scale))


def _robust_phi(t: float) -> float:
    return math.acos(_cos_phi(t))


def _robust_eta(t: float) -> float:
    c = (3 * t * t - 1) / (3 - 5 * t * t)
    return math.acos(max(-1.0, min(1.0, c)))


def _robust_theta(t: float) -> float:
    c = (3 * t * t - 1) / (1 + t * t)
    return math.acos(max(-1.0, min(1.0, c)))


def ks_face_inventory(regime: Regime) -> tuple[FaceFamily, ...]:
    """The deforming faces of the family polytope in one regime.

    Right-angled faces are omitted: their dihedral angle is constant, so
    they never contribute to the Schlafli differential.
    """
    red_quad = FaceFamily(
        "red quadrilateral",
        12,
        _robust_theta,
        lambda t: math.pi - 2 * _robust_phi(t),
    )
    red_hexagon = FaceFamily(
        "red right-angled hexagon", 12, _robust_theta, lambda t: math.pi
    )
    red_pentagon = FaceFamily(
        "red pentagon with one eta corner",
        12,
        _robust_theta,
        lambda t: math.pi - _robust_eta(t),
    )
    green_triangle = FaceFamily(
        "green triangle",
        8,
        _robust_phi,
        lambda t: math.pi - 3 * _robust_theta(t),
    )
    if regime in (Regime.ABOVE_T1, Regime.AT_ONE):
        return (red_quad, green_triangle)
    if regime in (Regime.BETWEEN, Regime.AT_T1):
        return (red_hexagon,)
    if regime in (Regime.BELOW_T2, Regime.AT_T2):
        return (red_pentagon,)
    raise ValueError(f"unknown regime: {regime!r}")


def _regime_label(t: float) -> Regime:
    if t > T1 + 1e-12:
        return Regime.ABOVE_T1
    if t > T2 + 1e-12:
        return Regime.BETWEEN
    return Regime.BELOW_T2


@dataclass(frozen=True)
class VolumeCurve:
    """Sampled volumes along the deformation, tagged by method."""

    samples: tuple[tuple[float, float], ...]
    regimes: tuple[str, ...]
    method: str

    def volume_at(self, t: float) -> float:
        for sample_t, vol in self.samples:
            if abs(sample_t - t) < 1e-12:
                return vol
        raise KeyError(f"no sample at t = {t}")

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["t", "theta", "phi", "vol", "method"])
        for t, vol in self.samples:
            theta = angle_theta(t)
            phi = repr(_robust_phi(t)) if t >= T1 - 1e-12 else ""
            writer.writerow([repr(t), repr(theta), phi, repr(vol), self.method])
        return buffer.getvalue()


def _schlafli_integrand(inventory: Sequence[FaceFamily]) -> Callable[[float], float]:
    h = 1e-6

    def integrand(t: float) -> float:
        total = 0.0
        for family in inventory:
            rate = (family.dihedral(t + h) - family.dihedral(t - h)) / (2 * h)
            total += family.count * family.area(t) * rate
        return -total / 3.0

    return integrand


def schlafli_integrate(
    t_span: tuple[float, float],
    inventory: Sequence[FaceFamily],
    initial: tuple[float, float],
    steps: int = 100,
) -> VolumeCurve:
    """Integrate dVol = -(1/3) sum Area(F) d(angle_F) across one regime.

    The initial (t, Vol) pair must sit at one end of the span; the curve is
    integrated away from it with Gauss-Kronrod quadrature per step.
    """
    lo, hi = min(t_span), max(t_span)
    if lo < hi:
        for boundary in (T2, T1):
            if lo + 1e-12 < boundary < hi - 1e-12:
                raise ValueError(
                    "the span crosses a regime boundary; integrate each regime separately"
                )
    t0, vol0 = initial
    if abs(t0 - lo) < 1e-12:
        grid = [lo + (hi - lo) * i / steps for i in range(steps + 1)] if steps else [lo]
    elif abs(t0 - hi) < 1e-12:
        grid = [hi - (hi - lo) * i / steps for i in range(steps + 1)] if steps else [hi]
    else:
        raise ValueError("the initial point must be an endpoint of the span")
    integrand = _schlafli_integrand(inventory)
    samples = [(grid[0], vol0)]
    vol = vol0
    for left, right in zip(grid, grid[1:]):
        piece, _ = quad(integrand, left, right, epsabs=QUAD_TOL, limit=200)
        vol += piece
        samples.append((right, vol))
    mid = (lo + hi) / 2
    label = _regime_label(mid if lo < hi else lo).value
    return VolumeCurve(
        samples=tuple(samples),
        regimes=tuple(label for _ in samples),
        method="schlafli",
    )


# ---------------------------------------------------------------------------
# closed forms


def closed_form_volume(t: float) -> float:
    """The closed-form volume of the family polytope at time t."""
    if not 0 < t <= 1:
        raise ValueError("t out of range (0, 1]")
    theta = angle_theta(t)
    base = 4 * math.pi ** 2 / 3
    if t >= T1 - 1e-15:
        phi = _robust_phi(t)
        return base * (
            2
            - 3 * theta / math.pi
            - 2 * phi / math.pi
            + 6 * theta * phi / math.pi ** 2
        )
    if t >= T2 - 1e-15:
        return base * (2 - 3 * theta / math.pi)
    return base * (2 - 3 * theta / math.pi) + 4 * _eta_integral(theta)


def manifold_volume_formula(alpha: float, beta: float) -> float:
    """Volume of the cone manifold with the two singular cone angles."""
    return (8 * math.pi ** 2 / 3) * (
        2 - (alpha + beta) / (2 * math.pi) + alpha * beta / (4 * math.pi ** 2)
    )


def gauss_bonnet_volume(chi) -> float:
    """Volume of a hyperbolic 4-orbifold from its Euler characteristic."""
    return (4 * math.pi ** 2 / 3) * float(chi)


# ---------------------------------------------------------------------------
# the Poincare route


def _vertex_link_volume(
    normals: Mapping[str, SpaceLikeVector], walls: frozenset, eps: float
) -> float:
    """Spherical volume of a finite vertex link.

    Supports the three families that occur along the deformation: joins of
    two circular arcs (Vol = product of arc lengths / 2), cones over a
    spherical triangle from an orthogonal apex (Vol = (pi/4) Area), and the
    regular tetrahedron.
    """
    names = sorted(walls)
    relations = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            rel = pair_relation(normals[a], normals[b], eps)
            if rel.angle is None:
                raise ValueError(
                    f"walls {a} and {b} of a finite vertex do not meet at an angle"
                )
            relations[frozenset((a, b))] = rel.angle
    right = math.pi / 2
    components: list[set] = []
    for name in names:
        attached = [
            c
            for c in components
            if any(abs(relations[frozenset((name, s))] - right) > 1e-9 for s in c)
        ]
        merged = {name}.union(*attached) if attached else {name}
        components = [c for c in components if c not in attached] + [merged]
    sizes = sorted(len(c) for c in components)

    if sizes[-1] <= 2:
        arcs = [
            relations[frozenset(c)] for c in components if len(c) == 2
        ]
        while len(arcs) < 2:
            arcs.append(right)
        return arcs[0] * arcs[1] / 2
    if sizes == [1, 3]:
        triple = next(c for c in components if len(c) == 3)
        a, b, c = sorted(triple)
        angle_sum = (
            relations[frozenset((a, b))]
            + relations[frozenset((a, c))]
            + relations[frozenset((b, c))]
        )
        return (math.pi / 4) * (angle_sum - math.pi)
    angles = [relations[frozenset(p)] for p in relations]
    if max(angles) - min(angles) < 1e-9:
        return spherical_regular_tet_volume(angles[0])
    raise ValueError(
        f"unsupported vertex link at walls {names}: expected a join of two "
        "arcs, a cone over a triangle, or a regular tetrahedron"
    )


def poincare_volume(
    normals: Mapping[str, SpaceLikeVector],
    complex_: Optional[StrataComplex] = None,
    eps: Optional[float] = None,
) -> float:
    """Poincare's alternating formula for the volume of a 4-polytope.

    Vol = (4 pi^2 / 3) [1 - N/2 + sum(angle_F)/2pi - sum(Area L_E)/4pi
          + sum(Vol L_V)/2pi^2], with ideal vertices contributing nothing.
    """
    band = tolerance(eps)
    if complex_ is None:
        complex_ = enumerate_strata(normals, mode="diagram", eps=band)
    n_walls = len(complex_.walls)
    face_term = sum(f.angle for f in complex_.faces) / (2 * math.pi)
    edge_term = 0.0
    for edge in complex_.edges:
        a, b, c = sorted(edge.walls)
        link_area = (
            complex_.face_angle(frozenset((a, b)))
            + complex_.face_angle(frozenset((a, c)))
            + complex_.face_angle(frozenset((b, c)))
            - math.pi
        )
        edge_term += link_area
    edge_term /= 4 * math.pi
    vertex_term = sum(
        _vertex_link_volume(normals, v.walls, band) for v in complex_.finite_vertices
    ) / (2 * math.pi ** 2)
    bracket = 1 - n_walls / 2 + face_term - edge_term + vertex_term
    return (4 * math.pi ** 2 / 3) * bracket


# ---------------------------------------------------------------------------
# orbifold Euler characteristic


def stabilizer_orders(
    normals: Mapping[str, SpaceLikeVector],
    complex_: StrataComplex,
    eps: Optional[float] = None,
) -> dict[frozenset, int]:
    """Coxeter stabilizer order of every face, edge and finite vertex."""
    orders: dict[frozenset, int] = {}
    strata = (
        [f.walls for f in complex_.faces]
        + [e.walls for e in complex_.edges]
        + [v.walls for v in complex_.finite_vertices]
    )
    for walls in strata:
        subset = {name: normals[name] for name in sorted(walls)}
        diagram = build_diagram(gram_matrix(subset), eps)
        orders[walls] = coxeter_group_order(diagram, eps)
    return orders


def orbifold_euler_char(
    complex_: StrataComplex, orders: Mapping[frozenset, int]
) -> Fraction:
    """Alternating sum of reciprocal stabilizer orders over the strata.

    The polytope itself contributes +1 and every wall -1/2; ideal vertices
    are excluded.
    """
    chi = Fraction(1)
    chi -= Fraction(len(complex_.walls), 2)
    for face in complex_.faces:
        chi += Fraction(1, orders[face.walls])
    for edge in complex_.edges:
        chi -= Fraction(1, orders[edge.walls])
    for vertex in complex_.finite_vertices:
        chi += Fraction(1, orders[vertex.walls])
    return chi
