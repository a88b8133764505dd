"""Tests for volumes: closed forms, Schlafli, Poincare, Euler characteristics."""

import math
from collections import Counter
from fractions import Fraction

import pytest

from hypercox.coxeter import StrataComplex, VertexStratum, enumerate_strata
from hypercox.family import (
    FamilyTime,
    Regime,
    T1_SQUARED,
    TBAR_SQUARED,
    angle_eta,
    angle_phi,
    angle_theta,
    ks_normals,
)
from hypercox.lorentz import SpaceLikeVector
from hypercox.volume import (
    TET_MIN_DIHEDRAL,
    FaceGeometry,
    closed_form_volume,
    cone_surface_area,
    coxeter_integral,
    eta_of_theta,
    face_geometry,
    gauss_bonnet_volume,
    hyperbolic_polygon_area,
    ks_face_inventory,
    manifold_volume_formula,
    orbifold_euler_char,
    poincare_volume,
    schlafli_integrate,
    spherical_regular_tet_volume,
    stabilizer_orders,
)

PI = math.pi
T1 = math.sqrt(0.6)
T2 = math.sqrt(0.5)
TBAR = math.sqrt(1 / 3)
COXETER_24_CELL = 4 * PI**2 / 3


# ---------------------------------------------------------------------------
# polygon and cone-surface areas


def test_polygon_area_equilateral_triangle():
    theta = 0.4
    assert hyperbolic_polygon_area(3, (theta,) * 3) == pytest.approx(PI - 3 * theta)


def test_polygon_area_two_right_two_phi_quadrilateral():
    phi = 1.1
    area = hyperbolic_polygon_area(4, (PI / 2, PI / 2, phi, phi))
    assert area == pytest.approx(PI - 2 * phi)


def test_polygon_area_ideal_triangle():
    assert hyperbolic_polygon_area(3, (0.0, 0.0, 0.0)) == pytest.approx(PI)


def test_polygon_area_rejects_bad_input():
    with pytest.raises(ValueError, match="at least 3"):
        hyperbolic_polygon_area(2, (0.1, 0.1))
    with pytest.raises(ValueError, match="outside"):
        hyperbolic_polygon_area(3, (0.1, 0.1, PI))
    with pytest.raises(ValueError, match="exceeds"):
        hyperbolic_polygon_area(3, (1.5, 1.5, 1.5))


def test_cone_surface_area_torus_with_two_cone_points():
    beta = 2.0
    assert cone_surface_area(0, (beta, beta)) == pytest.approx(4 * PI - 2 * beta)


def test_cone_surface_area_klein_bottle_with_two_cone_points():
    alpha = 1.3
    assert cone_surface_area(0, (alpha, alpha)) == pytest.approx(4 * PI - 2 * alpha)


def test_cone_surface_area_genus_two_smooth():
    assert cone_surface_area(-2, ()) == pytest.approx(4 * PI)


def test_cone_surface_area_rejects_spherical_data():
    with pytest.raises(ValueError, match="cone surface"):
        cone_surface_area(2, ())
    with pytest.raises(ValueError, match="below 2\\*pi"):
        cone_surface_area(0, (2 * PI, 1.0))


# ---------------------------------------------------------------------------
# spherical quadratures


def test_eta_endpoint_values():
    # arccos near 1 has square-root conditioning, so the zero endpoint is
    # only good to ~1e-8 in binary64.
    assert eta_of_theta(TET_MIN_DIHEDRAL) == pytest.approx(0.0, abs=1e-7)
    assert eta_of_theta(PI) == pytest.approx(math.acos(-1 / 3), abs=1e-12)
    with pytest.raises(ValueError, match="arccos"):
        eta_of_theta(0.5)


def test_eta_matches_family_angle_below_t2():
    t = 0.62
    assert eta_of_theta(angle_theta(t)) == pytest.approx(angle_eta(t), abs=1e-12)


def test_regular_tetrahedron_volume_endpoints():
    assert spherical_regular_tet_volume(TET_MIN_DIHEDRAL) == 0.0
    assert spherical_regular_tet_volume(PI) == pytest.approx(PI**2, abs=1e-6)


def test_regular_tetrahedron_volume_right_angled():
    # The all-right spherical simplex tiles S^3 in 16 copies: 2 pi^2 / 16.
    assert spherical_regular_tet_volume(PI / 2) == pytest.approx(PI**2 / 8, abs=1e-6)


def test_regular_tetrahedron_volume_is_increasing():
    grid = [TET_MIN_DIHEDRAL + k * 0.3 for k in range(5)]
    values = [spherical_regular_tet_volume(theta) for theta in grid]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_coxeter_integral_value():
    assert coxeter_integral() == pytest.approx(PI**2 / 3, abs=1e-8)


# ---------------------------------------------------------------------------
# closed-form volumes


def test_closed_form_at_coxeter_times():
    assert closed_form_volume(1.0) == pytest.approx(COXETER_24_CELL, abs=1e-9)
    assert closed_form_volume(T1) == pytest.approx(COXETER_24_CELL, abs=1e-9)
    assert closed_form_volume(TBAR) == pytest.approx(5 * PI**2 / 6, abs=1e-9)


def test_closed_form_tends_to_zero():
    assert abs(closed_form_volume(1e-8)) < 1e-6


def test_closed_form_linear_limit_at_small_t():
    # Vol ~ 8 sqrt(2) (pi - arccos(-1/3)) t as t -> 0, driven by the
    # eta integral approaching the full Coxeter integral.
    slope = 8 * math.sqrt(2) * (PI - math.acos(-1 / 3))
    assert abs(closed_form_volume(1e-3) - slope * 1e-3) < 1e-4


def test_closed_form_continuous_at_regime_boundaries():
    for boundary in (T1, T2):
        left = closed_form_volume(boundary - 1e-9)
        right = closed_form_volume(boundary + 1e-9)
        assert abs(left - right) < 1e-7


def test_closed_form_increases_up_to_t1():
    # The volume grows through the two lower regimes; on (t1, 1) it rises
    # above the common endpoint value 4 pi^2 / 3 before returning to it.
    grid = [0.2, 0.4, 0.6, T2, 0.75, T1]
    values = [closed_form_volume(t) for t in grid]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert closed_form_volume(0.9) > closed_form_volume(1.0)


def test_closed_form_rejects_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        closed_form_volume(0.0)
    with pytest.raises(ValueError, match="out of range"):
        closed_form_volume(1.2)


def _one_sided_dvol_dtheta_upper(delta: float) -> float:
    """dVol/dtheta just above t1, with the sqrt term removed by Richardson."""

    def cos_phi(t):
        num = math.sqrt(2) * (1 - t * t)
        den = math.sqrt((2 * t * t - 1) * (t * t + 1))
        return min(1.0, num / den)

    def rate(t):
        h = 1e-6
        c = cos_phi(t)
        c_rate = (cos_phi(t + h) - cos_phi(t - h)) / (2 * h)
        phi_rate = -c_rate / math.sqrt(max(1e-300, 1 - c * c))
        theta_rate = -2 * math.sqrt(2) / ((1 + t * t) * math.sqrt(1 - t * t))
        phi, theta = math.acos(c), angle_theta(t)
        return -4 * (PI - 2 * phi) - (8 / 3) * (phi_rate / theta_rate) * (PI - 3 * theta)

    return 2 * rate(T1 + delta / 4) - rate(T1 + delta)


def _one_sided_dvol_dtheta_low(delta: float) -> float:
    """dVol/dtheta just below t2, same extrapolation."""

    def rate(t):
        return -4 * PI + 4 * eta_of_theta(angle_theta(t))

    return 2 * rate(T2 - delta / 4) - rate(T2 - delta)


def test_closed_form_first_derivative_matches_at_boundaries():
    # In the middle regime dVol/dtheta is exactly -4 pi; the outer regimes
    # approach the same slope at t1 and t2.
    assert _one_sided_dvol_dtheta_upper(1e-10) == pytest.approx(-4 * PI, abs=1e-6)
    assert _one_sided_dvol_dtheta_low(1e-10) == pytest.approx(-4 * PI, abs=1e-6)


# ---------------------------------------------------------------------------
# Schlafli integration


def test_schlafli_upper_regime_from_t_equals_one():
    curve = schlafli_integrate(
        (T1, 1.0),
        ks_face_inventory(Regime.ABOVE_T1),
        initial=(1.0, COXETER_24_CELL),
        steps=25,
    )
    assert curve.method == "schlafli"
    assert curve.volume_at(T1) == pytest.approx(COXETER_24_CELL, abs=1e-6)
    for t, vol in curve.samples:
        assert vol == pytest.approx(closed_form_volume(t), abs=1e-6)


def test_schlafli_upper_regime_from_t1_end():
    curve = schlafli_integrate(
        (T1, 1.0),
        ks_face_inventory(Regime.ABOVE_T1),
        initial=(T1, COXETER_24_CELL),
        steps=25,
    )
    assert curve.volume_at(1.0) == pytest.approx(COXETER_24_CELL, abs=1e-6)


def test_schlafli_middle_regime_matches_closed_form():
    curve = schlafli_integrate(
        (T2, T1),
        ks_face_inventory(Regime.BETWEEN),
        initial=(T2, closed_form_volume(T2)),
        steps=25,
    )
    for t, vol in curve.samples:
        assert vol == pytest.approx(closed_form_volume(t), abs=1e-6)
    assert set(curve.regimes) == {Regime.BETWEEN.value}


def test_schlafli_low_regime_matches_closed_form():
    curve = schlafli_integrate(
        (0.35, T2),
        ks_face_inventory(Regime.BELOW_T2),
        initial=(T2, closed_form_volume(T2)),
        steps=25,
    )
    for t, vol in curve.samples:
        assert vol == pytest.approx(closed_form_volume(t), abs=1e-6)


def test_schlafli_zero_length_interval():
    curve = schlafli_integrate(
        (0.9, 0.9), ks_face_inventory(Regime.ABOVE_T1), initial=(0.9, 7.0), steps=0
    )
    assert curve.samples == ((0.9, 7.0),)


def test_schlafli_rejects_regime_crossing():
    with pytest.raises(ValueError, match="regime boundary"):
        schlafli_integrate(
            (0.7, 0.9),
            ks_face_inventory(Regime.ABOVE_T1),
            initial=(0.9, COXETER_24_CELL),
        )


def test_schlafli_rejects_interior_initial_point():
    with pytest.raises(ValueError, match="endpoint"):
        schlafli_integrate(
            (T1, 1.0), ks_face_inventory(Regime.ABOVE_T1), initial=(0.9, 7.0)
        )


def test_volume_curves_chain_continuously_across_regimes():
    upper = schlafli_integrate(
        (T1, 1.0),
        ks_face_inventory(Regime.ABOVE_T1),
        initial=(1.0, COXETER_24_CELL),
        steps=10,
    )
    middle = schlafli_integrate(
        (T2, T1),
        ks_face_inventory(Regime.BETWEEN),
        initial=(T1, upper.volume_at(T1)),
        steps=10,
    )
    low = schlafli_integrate(
        (0.4, T2),
        ks_face_inventory(Regime.BELOW_T2),
        initial=(T2, middle.volume_at(T2)),
        steps=10,
    )
    assert low.volume_at(0.4) == pytest.approx(closed_form_volume(0.4), abs=1e-6)


def test_volume_curve_csv_export():
    curve = schlafli_integrate(
        (T1, 1.0),
        ks_face_inventory(Regime.ABOVE_T1),
        initial=(1.0, COXETER_24_CELL),
        steps=4,
    )
    lines = curve.to_csv().strip().splitlines()
    assert lines[0] == "t,theta,phi,vol,method"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert float(first[0]) == pytest.approx(1.0)
    assert float(first[1]) == pytest.approx(angle_theta(1.0))
    assert float(first[2]) == pytest.approx(PI / 2)
    assert first[4] == "schlafli"


def test_volume_curve_csv_leaves_phi_blank_below_t1():
    curve = schlafli_integrate(
        (T2, 0.76),
        ks_face_inventory(Regime.BETWEEN),
        initial=(0.76, closed_form_volume(0.76)),
        steps=2,
    )
    rows = [line.split(",") for line in curve.to_csv().strip().splitlines()[1:]]
    assert all(row[2] == "" for row in rows)


# ---------------------------------------------------------------------------
# face geometry


def test_face_geometry_red_quadrilateral():
    t = 0.9
    normals = ks_normals(t)
    complex_ = enumerate_strata(normals)
    red = [
        f.walls
        for f in complex_.faces
        if abs(f.angle - angle_theta(t)) < 1e-9
    ]
    assert len(red) == 12
    geom = face_geometry(normals, complex_, red[0])
    assert geom.sides == 4
    assert sorted(geom.interior_angles) == pytest.approx(
        [angle_phi(t), angle_phi(t), PI / 2, PI / 2], abs=1e-9
    )
    assert geom.area == pytest.approx(PI - 2 * angle_phi(t), abs=1e-9)
    assert geom.dihedral == pytest.approx(angle_theta(t), abs=1e-12)
    assert all(geom.vertex_finite)


def test_face_geometry_green_triangle():
    t = 0.9
    normals = ks_normals(t)
    complex_ = enumerate_strata(normals)
    green = [
        f.walls for f in complex_.faces if abs(f.angle - angle_phi(t)) < 1e-9
    ]
    assert len(green) == 8
    geom = face_geometry(normals, complex_, green[0])
    assert geom.sides == 3
    assert geom.interior_angles == pytest.approx((angle_theta(t),) * 3, abs=1e-9)
    assert geom.area == pytest.approx(PI - 3 * angle_theta(t), abs=1e-9)


def test_face_geometry_middle_regime_red_hexagon():
    t = 0.73
    normals = ks_normals(t)
    complex_ = enumerate_strata(normals)
    red = [
        f.walls for f in complex_.faces if abs(f.angle - angle_theta(t)) < 1e-9
    ]
    assert len(red) == 12
    geom = face_geometry(normals, complex_, red[0])
    assert geom.sides == 6
    assert geom.interior_angles == pytest.approx((PI / 2,) * 6, abs=1e-9)
    assert geom.area == pytest.approx(PI, abs=1e-9)


def test_face_geometry_low_regime_red_pentagon():
    t = 0.65
    normals = ks_normals(t)
    complex_ = enumerate_strata(normals)
    red = [
        f.walls for f in complex_.faces if abs(f.angle - angle_theta(t)) < 1e-9
    ]
    assert len(red) == 12
    geom = face_geometry(normals, complex_, red[0])
    assert geom.sides == 5
    assert sorted(geom.interior_angles) == pytest.approx(
        [angle_eta(t)] + [PI / 2] * 4, abs=1e-9
    )
    assert geom.area == pytest.approx(PI - angle_eta(t), abs=1e-9)


def test_face_geometry_ideal_triangle_has_no_finite_vertices():
    t = 0.9
    normals = ks_normals(t)
    complex_ = enumerate_strata(normals)
    for face in complex_.faces:
        geom = face_geometry(normals, complex_, face.walls)
        if geom.sides == 3 and not any(geom.vertex_finite):
            assert geom.interior_angles == (0.0, 0.0, 0.0)
            assert geom.area == pytest.approx(PI)
            break
    else:
        pytest.fail("no ideal triangle face found at t = 0.9")


def test_face_inventory_areas_match_measured_geometry():
    cases = [
        (0.9, Regime.ABOVE_T1),
        (0.73, Regime.BETWEEN),
        (0.65, Regime.BELOW_T2),
    ]
    for t, regime in cases:
        normals = ks_normals(t)
        complex_ = enumerate_strata(normals)
        for family in ks_face_inventory(regime):
            members = [
                f.walls
                for f in complex_.faces
                if abs(f.angle - family.dihedral(t)) < 1e-9
            ]
            assert len(members) == family.count, family.name
            for walls in members[:2]:
                geom = face_geometry(normals, complex_, walls)
                assert geom.area == pytest.approx(family.area(t), abs=1e-9)


# ---------------------------------------------------------------------------
# the Poincare formula


def test_poincare_volume_of_ideal_24_cell():
    normals = ks_normals(FamilyTime.of(1))
    assert poincare_volume(normals) == pytest.approx(COXETER_24_CELL, abs=1e-6)


def test_poincare_volume_matches_closed_form_at_generic_time():
    t = 0.9
    normals = ks_normals(t)
    complex_ = enumerate_strata(normals)
    assert poincare_volume(normals, complex_) == pytest.approx(
        closed_form_volume(t), abs=1e-6
    )


def test_poincare_volume_at_tbar():
    normals = ks_normals(FamilyTime.exact(TBAR_SQUARED))
    assert poincare_volume(normals) == pytest.approx(5 * PI**2 / 6, abs=1e-6)


def test_poincare_volume_below_t2_uses_tetrahedral_links():
    t = 0.65
    normals = ks_normals(t)
    complex_ = enumerate_strata(normals)
    assert poincare_volume(normals, complex_) == pytest.approx(
        closed_form_volume(t), abs=1e-6
    )


def test_poincare_rejects_unsupported_vertex_link():
    # A connected 4-wall link with unequal angles is none of the supported
    # families; its volume would need genuine spherical tetrahedra.
    normals = {
        "a": SpaceLikeVector((0, 1, 0, 0, 0)),
        "b": SpaceLikeVector((0, 0.3, 1, 0, 0)),
        "c": SpaceLikeVector((0, 0.2, 0.3, 1, 0)),
        "d": SpaceLikeVector((0, 0.1, 0.2, 0.3, 1)),
    }
    complex_ = StrataComplex(
        walls=("a", "b", "c", "d"),
        faces=(),
        edges=(),
        finite_vertices=(
            VertexStratum(walls=frozenset("abcd"), link="synthetic"),
        ),
        ideal_vertices=(),
    )
    with pytest.raises(ValueError, match="unsupported vertex link"):
        poincare_volume(normals, complex_)


# ---------------------------------------------------------------------------
# Euler characteristics and Gauss-Bonnet


def test_orbifold_euler_char_at_coxeter_times():
    expected = {
        Fraction(1, 1): FamilyTime.of(1),
        Fraction(1): FamilyTime.exact(T1_SQUARED),
        Fraction(5, 8): FamilyTime.exact(TBAR_SQUARED),
    }
    for chi, time in expected.items():
        normals = ks_normals(time)
        complex_ = enumerate_strata(normals)
        orders = stabilizer_orders(normals, complex_)
        assert orbifold_euler_char(complex_, orders) == chi


def test_orbifold_euler_char_stabilizer_census_at_t1():
    normals = ks_normals(FamilyTime.exact(T1_SQUARED))
    complex_ = enumerate_strata(normals)
    orders = stabilizer_orders(normals, complex_)
    faces = Counter(orders[f.walls] for f in complex_.faces)
    edges = Counter(orders[e.walls] for e in complex_.edges)
    vertices = Counter(orders[v.walls] for v in complex_.finite_vertices)
    assert faces == {4: 88, 6: 12}
    assert edges == {8: 72, 12: 48}
    assert vertices == {24: 24}


def test_stabilizer_orders_reject_generic_angles():
    normals = ks_normals(0.9)
    complex_ = enumerate_strata(normals)
    with pytest.raises(ValueError, match="Coxeter"):
        stabilizer_orders(normals, complex_)


def test_gauss_bonnet_volume():
    assert gauss_bonnet_volume(1) == pytest.approx(COXETER_24_CELL)
    assert gauss_bonnet_volume(0) == 0.0
    assert gauss_bonnet_volume(2) == pytest.approx(8 * PI**2 / 3)
    assert gauss_bonnet_volume(Fraction(5, 8)) == pytest.approx(5 * PI**2 / 6)


def test_gauss_bonnet_matches_closed_form_at_coxeter_times():
    cases = [
        (FamilyTime.of(1), 1.0),
        (FamilyTime.exact(T1_SQUARED), T1),
        (FamilyTime.exact(TBAR_SQUARED), TBAR),
    ]
    for time, t in cases:
        normals = ks_normals(time)
        complex_ = enumerate_strata(normals)
        chi = orbifold_euler_char(complex_, stabilizer_orders(normals, complex_))
        assert gauss_bonnet_volume(chi) == pytest.approx(
            closed_form_volume(t), abs=1e-9
        )


# ---------------------------------------------------------------------------
# the doubled-manifold formula


def test_manifold_volume_formula_endpoints():
    assert manifold_volume_formula(0.0, 2 * PI) == pytest.approx(8 * PI**2 / 3)
    assert manifold_volume_formula(2 * PI, 2 * PI) == pytest.approx(8 * PI**2 / 3)


def test_manifold_volume_formula_matches_doubled_closed_form():
    for k in range(11):
        t = T1 + (1.0 - T1) * k / 10
        alpha = 6 * angle_theta(t)
        beta = 4 * angle_phi(t)
        assert manifold_volume_formula(alpha, beta) == pytest.approx(
            2 * closed_form_volume(t), abs=1e-9
        )


def test_mirror_double_volume_endpoints():
    assert 8 * closed_form_volume(1.0) == pytest.approx(32 * PI**2 / 3, abs=1e-9)
    assert 8 * closed_form_volume(TBAR) == pytest.approx(20 * PI**2 / 3, abs=1e-9)
