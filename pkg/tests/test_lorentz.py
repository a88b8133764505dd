"""Tests for Minkowski linear algebra in both scalar backends."""

import math
from fractions import Fraction

import pytest

from hypercox.arith import MultiQuad
from hypercox.lorentz import (
    LorentzPoint,
    PointKind,
    RelationKind,
    SpaceLikeVector,
    classify_vector,
    minkowski_product,
    pair_relation,
    point_side,
    project_to_wall,
    solve_vertex,
    tolerance,
)

SQRT2 = math.sqrt(2.0)
R2 = MultiQuad.root(2)

# Spatial sign patterns of the eight positive/negative wall pairs; the last
# coordinate of the i-th positive wall carries sign (-1)^i.
_OCTET_SIGNS = (
    (1, 1, 1),
    (1, -1, 1),
    (1, -1, -1),
    (1, 1, -1),
    (-1, 1, -1),
    (-1, 1, 1),
    (-1, -1, 1),
    (-1, -1, -1),
)


def float_walls(t: float) -> dict[str, tuple[float, ...]]:
    """The 24 reference walls with binary64 coordinates."""
    walls: dict[str, tuple[float, ...]] = {}
    for i, (s1, s2, s3) in enumerate(_OCTET_SIGNS):
        last = 1.0 if i % 2 == 0 else -1.0
        walls[f"p{i}"] = (SQRT2, s1, s2, s3, last / t)
        walls[f"m{i}"] = (SQRT2, s1, s2, s3, -last * t)
    walls["A"] = (1.0, SQRT2, 0.0, 0.0, 0.0)
    walls["B"] = (1.0, 0.0, SQRT2, 0.0, 0.0)
    walls["C"] = (1.0, 0.0, 0.0, SQRT2, 0.0)
    walls["D"] = (1.0, 0.0, 0.0, -SQRT2, 0.0)
    walls["E"] = (1.0, 0.0, -SQRT2, 0.0, 0.0)
    walls["F"] = (1.0, -SQRT2, 0.0, 0.0, 0.0)
    walls["G"] = (1.0, 0.0, 0.0, 0.0, -SQRT2 * t)
    walls["H"] = (1.0, 0.0, 0.0, 0.0, SQRT2 * t)
    return walls


def exact_walls(t) -> dict[str, tuple]:
    """The 24 reference walls over the exact backend (t rational or MultiQuad)."""
    tq = t if isinstance(t, MultiQuad) else MultiQuad(Fraction(t))
    inv = tq.inverse()
    walls: dict[str, tuple] = {}
    for i, (s1, s2, s3) in enumerate(_OCTET_SIGNS):
        sign = 1 if i % 2 == 0 else -1
        walls[f"p{i}"] = (R2, s1, s2, s3, sign * inv)
        walls[f"m{i}"] = (R2, s1, s2, s3, -sign * tq)
    walls["A"] = (1, R2, 0, 0, 0)
    walls["B"] = (1, 0, R2, 0, 0)
    walls["C"] = (1, 0, 0, R2, 0)
    walls["D"] = (1, 0, 0, -R2, 0)
    walls["E"] = (1, 0, -R2, 0, 0)
    walls["F"] = (1, -R2, 0, 0, 0)
    walls["G"] = (1, 0, 0, 0, -R2 * tq)
    walls["H"] = (1, 0, 0, 0, R2 * tq)
    return walls


MIRROR_L = (0, -1, 1, 0, 0)
MIRROR_M = (0, 0, -1, 1, 0)
MIRROR_N = (0, 0, -1, -1, 0)


# ---------------------------------------------------------------------------
# minkowski_product


def test_product_of_mirror_wall_with_itself():
    assert minkowski_product(MIRROR_L, MIRROR_L) == 2


def test_product_orthogonal_unit_vectors():
    unit_m = (0.0, 0.0, -SQRT2 / 2, SQRT2 / 2, 0.0)
    assert minkowski_product((1.0, SQRT2, 0.0, 0.0, 0.0), unit_m) == 0.0


def test_product_negative_wall_with_time_wall_float():
    t = 0.9
    walls = float_walls(t)
    expected = -SQRT2 * (1.0 - t * t)
    assert minkowski_product(walls["m0"], walls["G"]) == pytest.approx(expected, abs=1e-15)


def test_product_negative_wall_with_time_wall_exact():
    walls = exact_walls(Fraction(9, 10))
    product = minkowski_product(walls["m0"], walls["G"])
    assert product == -R2 * Fraction(19, 100)


def test_product_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        minkowski_product((1, 0, 0), (1, 0, 0, 0, 0))


# ---------------------------------------------------------------------------
# classify_vector


def test_classification_across_the_degeneration():
    assert classify_vector(float_walls(0.8)["G"]) == "space"
    assert classify_vector(float_walls(math.sqrt(0.5))["G"]) == "light"
    assert classify_vector(float_walls(0.6)["G"]) == "time"


def test_classification_exact_at_the_degeneration():
    t = MultiQuad.root(Fraction(1, 2))
    assert classify_vector(exact_walls(t)["G"]) == "light"
    assert classify_vector(exact_walls(Fraction(3, 5))["G"]) == "time"


def test_space_like_vector_validation():
    vec = SpaceLikeVector((0, -1, 1, 0, 0))
    assert vec.dimension == 4
    assert len(vec) == 5
    with pytest.raises(ValueError, match="not space-like"):
        SpaceLikeVector((1, 0, 0, 0, 0))
    with pytest.raises(ValueError, match="not space-like"):
        SpaceLikeVector((1.0, 1.0, 0.0, 0.0, 0.0))


# ---------------------------------------------------------------------------
# pair_relation


def test_mirror_walls_meet_at_sixty_degrees():
    rel = pair_relation(MIRROR_L, MIRROR_M)
    assert rel.kind is RelationKind.ANGLE
    assert rel.alpha == Fraction(1, 2)
    assert rel.angle == pytest.approx(math.pi / 3, abs=1e-12)


def test_positive_wall_tangent_to_mirror_at_one():
    rel = pair_relation(float_walls(1.0)["p0"], MIRROR_N)
    assert rel.kind is RelationKind.PARALLEL
    exact = pair_relation(exact_walls(1)["p0"], MIRROR_N)
    assert exact.kind is RelationKind.PARALLEL
    assert exact.alpha == 1


def test_negative_wall_ultraparallel_to_mirror():
    rel = pair_relation(float_walls(0.9)["m0"], MIRROR_N)
    assert rel.kind is RelationKind.ULTRAPARALLEL
    assert rel.distance > 0
    assert math.cosh(rel.distance) == pytest.approx(rel.alpha, abs=1e-12)
    exact = pair_relation(exact_walls(Fraction(9, 10))["m0"], MIRROR_N)
    assert exact.kind is RelationKind.ULTRAPARALLEL
    assert float(exact.alpha) == pytest.approx(rel.alpha, abs=1e-12)


def test_opposite_letter_walls_disjoint_after_reflection():
    walls = exact_walls(1)
    flipped = tuple(-x for x in walls["F"])
    rel = pair_relation(walls["A"], flipped)
    assert rel.kind is RelationKind.DISJOINT
    assert rel.alpha == -3


def test_pair_relation_symmetry_and_round_trips():
    walls = float_walls(0.75)
    names = ["p0", "p3", "m0", "m2", "A", "G", "H"]
    for a in names:
        for b in names:
            if a == b:
                continue
            ab = pair_relation(walls[a], walls[b])
            ba = pair_relation(walls[b], walls[a])
            assert ab.kind is ba.kind
            assert ab.alpha == pytest.approx(ba.alpha, abs=1e-15)
            if ab.kind is RelationKind.ANGLE:
                assert math.cos(ab.angle) == pytest.approx(ab.alpha, abs=1e-12)
            if ab.kind is RelationKind.ULTRAPARALLEL:
                assert math.cosh(ab.distance) == pytest.approx(ab.alpha, abs=1e-12)


def test_pair_relation_rejects_non_space_like():
    with pytest.raises(ValueError, match="space-like"):
        pair_relation(float_walls(0.6)["G"], MIRROR_L)


# ---------------------------------------------------------------------------
# project_to_wall


def test_projection_of_orthogonal_vector_is_identity():
    walls = exact_walls(Fraction(7, 10))
    projected = project_to_wall(walls["p0"], walls["m0"])
    for before, after in zip(walls["p0"], projected):
        assert MultiQuad(after) == MultiQuad(before)


def test_projection_of_mirror_along_positive_wall():
    for t in (0.7, 0.95):
        walls = float_walls(t)
        coeff = 2 * t * t / (t * t + 1)
        projected = project_to_wall(MIRROR_M, walls["p3"])
        for got, m, p in zip(projected, MIRROR_M, walls["p3"]):
            assert got == pytest.approx(m + coeff * p, abs=1e-12)
        norm = minkowski_product(projected, projected)
        assert norm == pytest.approx(2 * (1 - t * t) / (1 + t * t), abs=1e-12)


def test_projection_of_mirror_along_positive_wall_exact():
    t2 = Fraction(1, 4)
    walls = exact_walls(Fraction(1, 2))
    projected = project_to_wall(MIRROR_M, walls["p3"])
    norm = minkowski_product(projected, projected)
    assert MultiQuad(norm) == 2 * (1 - t2) / (1 + t2)


def test_projection_idempotent_and_orthogonal():
    walls = float_walls(0.85)
    wall = walls["p1"]
    once = project_to_wall(walls["G"], wall)
    twice = project_to_wall(once, wall)
    assert all(abs(a - b) < 1e-12 for a, b in zip(once, twice))
    assert abs(minkowski_product(once, wall)) < 1e-9

    exact = exact_walls(Fraction(4, 5))
    image = project_to_wall(exact["G"], exact["p1"])
    assert MultiQuad(minkowski_product(image, exact["p1"])).is_zero()


# ---------------------------------------------------------------------------
# solve_vertex


def test_ideal_ray_of_six_walls():
    names = ["p3", "m3", "p0", "m0", "A", "B"]
    walls = float_walls(1.0)
    point = solve_vertex([walls[n] for n in names])
    assert point is not None and point.kind is PointKind.IDEAL
    expected = (1.0, SQRT2 / 2, SQRT2 / 2, 0.0, 0.0)
    for got, want in zip(point.coords, expected):
        assert got == pytest.approx(want, abs=1e-12)

    exact = exact_walls(1)
    point = solve_vertex([exact[n] for n in names])
    assert point is not None and point.kind is PointKind.IDEAL
    half = R2 * Fraction(1, 2)
    assert tuple(MultiQuad(x) for x in point.coords) == (MultiQuad(1), half, half, MultiQuad(0), MultiQuad(0))


def test_orthogonal_frame_meets_at_centre():
    normals = [
        (0.0, 1.0, 0.0, 0.0, 0.0),
        (0.0, 0.0, 1.0, 0.0, 0.0),
        (0.0, 0.0, 0.0, 1.0, 0.0),
        (0.0, 0.0, 0.0, 0.0, 1.0),
    ]
    point = solve_vertex(normals)
    assert point is not None and point.kind is PointKind.FINITE
    assert point.coords == pytest.approx((1.0, 0.0, 0.0, 0.0, 0.0))


def test_finite_vertex_of_four_positive_walls():
    names = ["p1", "p3", "p5", "p7"]
    walls = float_walls(0.6)
    point = solve_vertex([SpaceLikeVector(walls[n]) for n in names])
    assert point is not None and point.kind is PointKind.FINITE
    assert minkowski_product(point.coords, point.coords) == pytest.approx(-1.0, abs=1e-9)
    for name in names:
        assert abs(minkowski_product(walls[name], point.coords)) < 1e-9

    exact = exact_walls(Fraction(3, 5))
    point = solve_vertex([exact[n] for n in names])
    assert point is not None and point.kind is PointKind.FINITE
    assert MultiQuad(minkowski_product(point.coords, point.coords)) == -1
    for name in names:
        assert MultiQuad(minkowski_product(exact[name], point.coords)).is_zero()


def test_degenerate_and_space_like_solutions_are_rejected():
    e2 = (0.0, 0.0, 1.0, 0.0, 0.0)
    e3 = (0.0, 0.0, 0.0, 1.0, 0.0)
    e4 = (0.0, 0.0, 0.0, 0.0, 1.0)
    assert solve_vertex([e4, tuple(2 * x for x in e4), e3, e2]) is None
    assert solve_vertex([e2, e3, e4]) is None
    assert solve_vertex([e2, e3, e4, (2.0, 1.0, 0.0, 0.0, 0.0)]) is None

    exact_e = [(0, 0, 1, 0, 0), (0, 0, 0, 1, 0), (0, 0, 0, 0, 1)]
    assert solve_vertex(exact_e) is None
    assert solve_vertex(exact_e + [(2, 1, 0, 0, 0)]) is None


# ---------------------------------------------------------------------------
# point_side


def test_centre_is_inside_every_wall():
    centre = (1.0, 0.0, 0.0, 0.0, 0.0)
    for wall in float_walls(0.8).values():
        assert point_side(centre, wall) == "inside"
    for wall in exact_walls(Fraction(4, 5)).values():
        assert point_side((1, 0, 0, 0, 0), wall) == "inside"
    for mirror in (MIRROR_L, MIRROR_M, MIRROR_N):
        assert point_side((1, 0, 0, 0, 0), mirror) == "boundary"


def test_boundary_point_of_positive_and_negative_walls():
    x = (SQRT2, 2 / 3, 2 / 3, 2 / 3, 0.0)
    walls = float_walls(0.77)
    assert point_side(x, walls["p0"]) == "boundary"
    assert point_side(x, walls["m0"]) == "boundary"
    assert point_side(x, walls["A"]) == "inside"

    exact = exact_walls(Fraction(4, 5))
    y = (R2, Fraction(2, 3), Fraction(2, 3), Fraction(2, 3), 0)
    assert point_side(y, exact["p0"]) == "boundary"
    assert point_side(y, exact["m0"]) == "boundary"


def test_point_outside_a_wall():
    x = (math.sqrt(5.0), -2.0, 0.0, 0.0, 0.0)
    assert point_side(x, float_walls(1.0)["F"]) == "outside"
    y = (MultiQuad.root(5), -2, 0, 0, 0)
    assert point_side(y, exact_walls(1)["F"]) == "outside"


def test_point_side_accepts_lorentz_points():
    walls = float_walls(0.6)
    point = solve_vertex([walls[n] for n in ("p1", "p3", "p5", "p7")])
    assert point_side(point, walls["p1"]) == "boundary"
    assert point_side(point, walls["A"]) == "inside"


# ---------------------------------------------------------------------------
# tolerance resolution


def test_tolerance_resolution(monkeypatch):
    assert tolerance() == 1e-9
    assert tolerance(1e-6) == 1e-6
    monkeypatch.setenv("HYPERCOX_EPS", "1e-7")
    assert tolerance() == 1e-7
    assert tolerance(1e-5) == 1e-5


def test_loose_tolerance_changes_classification():
    nearly_light = (1.0, 1.0 + 5e-7, 0.0, 0.0, 0.0)
    assert classify_vector(nearly_light) == "space"
    assert classify_vector(nearly_light, eps=1e-5) == "light"
