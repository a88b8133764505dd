"""Diagram combinatorics against the deformation family.

Frozen values: the printed 10x10 quotient Gram matrix at t = 1, the face
counts of the polytope in each deformation regime, the Euclidean triangle
(pi/2, pi/3, pi/6) appearing at t1, and the induced angle between the two
short mirrors inside a wall.  The diagram and geometric backends are run
against each other on the family presets.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import pytest

from hypercox.arith import MultiQuad
from hypercox.coxeter import (
    ClassKind,
    CoxeterDiagram,
    EdgeKind,
    FiniteVolumeResult,
    GramMatrix,
    build_diagram,
    classify_subdiagram,
    coxeter_group_order,
    enumerate_strata,
    finite_volume_check,
    gram_matrix,
    polytope_witness,
    wall_diagram,
)
from hypercox.family import (
    FamilyTime,
    T1_SQUARED,
    T2_SQUARED,
    TBAR_SQUARED,
    angle_phi,
    angle_theta,
    ks_normals,
    quotient_normals,
)
from hypercox.lorentz import SpaceLikeVector

T1 = math.sqrt(3 / 5)
T2 = math.sqrt(1 / 2)

ORTHOGONAL_TRIPLE = [
    SpaceLikeVector((0, 1, 0, 0, 0)),
    SpaceLikeVector((0, 0, 1, 0, 0)),
    SpaceLikeVector((0, 0, 0, 1, 0)),
]


def diagram_of(subset_normals) -> CoxeterDiagram:
    return build_diagram(gram_matrix(subset_normals))


def angle_gram(*alphas) -> GramMatrix:
    """Gram matrix of a path diagram with the given consecutive cosines."""
    n = len(alphas) + 1
    entries = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        entries[i][i] = Fraction(1)
    for i, alpha in enumerate(alphas):
        entries[i][i + 1] = entries[i + 1][i] = -alpha
    names = tuple(str(i) for i in range(n))
    return GramMatrix(names, tuple(tuple(row) for row in entries))


def cos_pi_over(m: int):
    if m == 2:
        return Fraction(0)
    if m == 3:
        return Fraction(1, 2)
    if m == 4:
        return MultiQuad({2: Fraction(1, 2)})
    if m == 5:
        return MultiQuad({1: Fraction(1, 4), 5: Fraction(1, 4)})
    if m == 6:
        return MultiQuad({3: Fraction(1, 2)})
    raise ValueError(m)


# ---------------------------------------------------------------------------
# Gram matrices


def test_single_wall_gram_is_identity():
    gram = gram_matrix([SpaceLikeVector((0, 3, 4, 0, 0))])
    assert gram.size == 1
    assert gram.entries[0][0] == MultiQuad(1)


def test_quotient_gram_at_one_matches_printed_matrix():
    gram = gram_matrix(quotient_normals(FamilyTime.exact(Fraction(1))))
    assert gram.names == ("p0", "m0", "p3", "m3", "G", "H", "A", "L", "M", "N")
    expected = [
        [1, 0, -1, 0, -2, 0, 0, 0, 0, -1],
        [0, 1, 0, -1, 0, -2, 0, 0, 0, -1],
        [-1, 0, 1, 0, 0, -2, 0, 0, -1, 0],
        [0, -1, 0, 1, -2, 0, 0, 0, -1, 0],
        [-2, 0, 0, -2, 1, -3, -1, 0, 0, 0],
        [0, -2, -2, 0, -3, 1, -1, 0, 0, 0],
        [0, 0, 0, 0, -1, -1, 1, -1, 0, 0],
        [0, 0, 0, 0, 0, 0, -1, 1, Fraction(-1, 2), Fraction(-1, 2)],
        [0, 0, -1, -1, 0, 0, 0, Fraction(-1, 2), 1, 0],
        [-1, -1, 0, 0, 0, 0, 0, Fraction(-1, 2), 0, 1],
    ]
    for i in range(10):
        for j in range(10):
            assert gram.entries[i][j] == MultiQuad(expected[i][j]), (i, j)
    assert gram.is_exact


def test_quotient_gram_at_tbar_is_eight_by_eight():
    gram = gram_matrix(quotient_normals(FamilyTime.exact(TBAR_SQUARED)))
    assert gram.size == 8
    assert gram.is_exact
    assert "G" not in gram.names and "H" not in gram.names


def test_float_gram_is_symmetric_unit_diagonal():
    gram = gram_matrix(ks_normals(0.9))
    assert gram.size == 24
    assert not gram.is_exact
    for i in range(24):
        assert gram.entries[i][i] == pytest.approx(1.0)
        for j in range(24):
            assert gram.entries[i][j] == pytest.approx(gram.entries[j][i])


# ---------------------------------------------------------------------------
# diagrams


def test_quotient_diagram_at_one_has_expected_labels():
    diagram = diagram_of(quotient_normals(FamilyTime.exact(Fraction(1))))
    assert diagram.label("m0", "N").kind is EdgeKind.THICK
    assert diagram.label("A", "G").kind is EdgeKind.THICK
    assert diagram.label("G", "H").kind is EdgeKind.DASHED
    assert diagram.label("L", "M").kind is EdgeKind.ANGLE
    assert diagram.label("L", "M").angle == pytest.approx(math.pi / 3)
    assert diagram.label("M", "N").kind is EdgeKind.RIGHT_ANGLE


def test_quotient_diagram_below_one_angles():
    t = 0.9
    diagram = diagram_of(quotient_normals(t))
    green = diagram.label("m0", "G")
    assert green.kind is EdgeKind.ANGLE
    assert green.angle == pytest.approx(angle_phi(t), abs=1e-12)
    for pair in (("p0", "N"), ("p3", "M")):
        red = diagram.label(*pair)
        assert red.kind is EdgeKind.ANGLE
        assert red.angle == pytest.approx(angle_theta(t) / 2, abs=1e-12)
    assert diagram.label("p0", "m0").kind is EdgeKind.RIGHT_ANGLE
    assert diagram.label("p0", "p3").kind is EdgeKind.THICK


def test_orthogonal_walls_give_edgeless_diagram():
    diagram = diagram_of(ORTHOGONAL_TRIPLE)
    assert all(lab.kind is EdgeKind.RIGHT_ANGLE for lab in diagram.labels.values())
    assert diagram.neighbors("0") == set()


def test_disjoint_walls_have_no_diagram_label():
    apart = [SpaceLikeVector((1, 2, 0, 0, 0)), SpaceLikeVector((-1, 2, 0, 0, 0))]
    with pytest.raises(ValueError, match="disjoint"):
        build_diagram(gram_matrix(apart))


# ---------------------------------------------------------------------------
# subdiagram classification


def test_single_node_is_elliptic():
    gram = gram_matrix(quotient_normals(FamilyTime.exact(Fraction(1))))
    assert classify_subdiagram(gram, ["p0"]).kind is ClassKind.ELLIPTIC


def test_euclidean_triangle_appears_exactly_at_t1():
    exact = gram_matrix(quotient_normals(FamilyTime.exact(T1_SQUARED)))
    cls = classify_subdiagram(exact, ["p3", "L", "M"])
    assert cls.kind is ClassKind.PARABOLIC
    assert cls.components == 1
    assert cls.rank == 2
    assert exact.alpha("p3", "L") == MultiQuad(0)
    assert exact.alpha("L", "M") == MultiQuad(Fraction(1, 2))
    assert exact.alpha("p3", "M") == MultiQuad({3: Fraction(1, 2)})

    below = gram_matrix(quotient_normals(0.74))
    assert classify_subdiagram(below, ["p3", "L", "M"]).kind is ClassKind.ELLIPTIC
    above = gram_matrix(quotient_normals(0.9))
    assert classify_subdiagram(above, ["p3", "L", "M"]).kind is ClassKind.INDEFINITE


@pytest.mark.parametrize("time", [0.9, FamilyTime.exact(TBAR_SQUARED)])
def test_parallel_rectangle_is_parabolic_of_rank_two(time):
    gram = gram_matrix(quotient_normals(time))
    cls = classify_subdiagram(gram, ["m0", "p0", "m3", "p3"])
    assert cls.kind is ClassKind.PARABOLIC
    assert cls.components == 2
    assert cls.rank == 2
    extended = classify_subdiagram(gram, ["m0", "p0", "m3", "p3", "A", "L"])
    assert extended.kind is ClassKind.PARABOLIC
    assert extended.components == 3
    assert extended.rank == 3


def test_thick_pair_with_spectator_is_degenerate_not_parabolic():
    gram = gram_matrix(quotient_normals(0.9))
    cls = classify_subdiagram(gram, ["p0", "p3", "A"])
    assert cls.kind is ClassKind.DEGENERATE


def test_indefinite_subset():
    gram = gram_matrix(quotient_normals(FamilyTime.exact(Fraction(1))))
    assert classify_subdiagram(gram, ["A", "L", "M"]).kind is ClassKind.INDEFINITE


# ---------------------------------------------------------------------------
# strata enumeration


def test_f_vector_generic_regime():
    complex_ = enumerate_strata(ks_normals(0.9))
    assert complex_.f_vector == (24, 108, 144, 60)
    assert len(complex_.ideal_vertices) == 12
    assert len(complex_.finite_vertices) == 48
    assert complex_.is_simple


def test_f_vector_at_t1():
    complex_ = enumerate_strata(ks_normals(FamilyTime.exact(T1_SQUARED)))
    assert complex_.f_vector == (24, 100, 120, 44)
    assert len(complex_.ideal_vertices) == 20
    links = sorted(v.link for v in complex_.ideal_vertices)
    assert links.count("~A1 x ~A1 x ~A1") == 12
    assert links.count("~A1 x ~A2") == 8
    orders = {
        coxeter_group_order(
            build_diagram(
                gram_matrix(
                    {
                        n: ks_normals(FamilyTime.exact(T1_SQUARED))[n]
                        for n in sorted(v.walls)
                    }
                )
            )
        )
        for v in complex_.finite_vertices
    }
    assert orders == {24}


def test_f_vector_middle_regime():
    complex_ = enumerate_strata(ks_normals(0.73))
    assert complex_.f_vector == (24, 100, 128, 52)
    assert len(complex_.ideal_vertices) == 12


def test_f_vector_low_regime():
    complex_ = enumerate_strata(ks_normals(0.6))
    assert complex_.f_vector == (22, 92, 116, 46)


def test_ideal_24_cell_at_one():
    complex_ = enumerate_strata(ks_normals(FamilyTime.exact(Fraction(1))))
    assert complex_.f_vector == (24, 96, 96, 24)
    assert not complex_.finite_vertices
    assert all(len(v.walls) == 6 for v in complex_.ideal_vertices)
    assert all(v.link == "~A1 x ~A1 x ~A1" for v in complex_.ideal_vertices)
    assert all(
        f.angle == pytest.approx(math.pi / 2) for f in complex_.faces
    )


@pytest.mark.parametrize(
    "time",
    [
        FamilyTime.exact(Fraction(1)),
        FamilyTime.exact(T1_SQUARED),
        FamilyTime.exact(T2_SQUARED),
        0.9,
        math.sqrt(0.6),
        0.65,
    ],
)
def test_backends_agree_on_family(time):
    complex_ = enumerate_strata(ks_normals(time), mode="both")
    assert complex_.is_simple
    assert finite_volume_check(complex_).finite


def test_unknown_mode_rejected():
    with pytest.raises(ValueError, match="unknown mode"):
        enumerate_strata(ks_normals(0.9), mode="fast")


def test_combinatorics_constant_within_regimes():
    # Below t = sqrt(1/3) the deformation angle is obtuse, so the low
    # interval is sampled with the geometric backend.
    for mode, low, high in (
        ("geometric", 0.45, 0.65),
        ("diagram", 0.72, 0.76),
        ("diagram", 0.8, 0.95),
    ):
        left = enumerate_strata(ks_normals(low), mode=mode)
        right = enumerate_strata(ks_normals(high), mode=mode)
        assert left.f_vector == right.f_vector, (low, high)
        assert {f.walls for f in left.faces} == {f.walls for f in right.faces}
        assert {e.walls for e in left.edges} == {e.walls for e in right.edges}
        assert {v.walls for v in left.ideal_vertices} == {
            v.walls for v in right.ideal_vertices
        }


def test_diagram_mode_rejects_obtuse_angles():
    with pytest.raises(ValueError, match="acute"):
        enumerate_strata(ks_normals(0.3), mode="diagram")


def test_incidence_maps():
    complex_ = enumerate_strata(ks_normals(0.9))
    faces = complex_.faces_of_wall("p0")
    assert faces and all("p0" in f.walls for f in faces)
    edges = complex_.edges_of_face(faces[0])
    assert edges and all(faces[0].walls <= e.walls for e in edges)
    for edge in complex_.edges:
        finite, ideal = complex_.endpoints_of_edge(edge)
        assert len(finite) + len(ideal) == 2


def test_strata_json_round_trip():
    complex_ = enumerate_strata(ks_normals(0.9))
    payload = json.loads(complex_.to_json())
    assert len(payload["walls"]) == 24
    assert len(payload["faces"]) == 108
    assert len(payload["edges"]) == 144
    assert all(face["walls"] == sorted(face["walls"]) for face in payload["faces"])
    assert all(isinstance(face["angle"], float) for face in payload["faces"])
    assert all(
        vertex["components"] for vertex in payload["ideal_vertices"]
    )


def test_witness_point_exists_for_quotient():
    point = polytope_witness(quotient_normals(0.9))
    assert point[0] == pytest.approx(1.0, abs=0.2)


# ---------------------------------------------------------------------------
# finite volume


def test_family_polytope_has_finite_volume():
    result = finite_volume_check(enumerate_strata(ks_normals(0.9)))
    assert result == FiniteVolumeResult(True)


def test_dropping_the_last_letters_opens_the_polytope():
    walls = dict(ks_normals(0.9))
    del walls["G"], walls["H"]
    result = finite_volume_check(enumerate_strata(walls))
    assert not result.finite
    assert result.witness is not None and len(result.witness) == 3


def test_single_wall_has_infinite_volume():
    result = finite_volume_check(enumerate_strata([SpaceLikeVector((0, 1, 0, 0, 0))]))
    assert not result.finite


# ---------------------------------------------------------------------------
# wall diagrams


def test_wall_diagram_of_letter_wall_keeps_ambient_angles():
    t = 0.9
    normals = quotient_normals(t)
    induced = wall_diagram(normals, "A")
    assert set(induced.nodes) == {"p0", "m0", "p3", "m3", "M", "N"}
    ambient = diagram_of(normals)
    for pair, label in induced.labels.items():
        reference = ambient.labels[pair]
        assert label.kind is reference.kind
        if label.angle is not None:
            assert label.angle == pytest.approx(reference.angle, abs=1e-12)


@pytest.mark.parametrize(
    "time, expected_kind",
    [
        (0.9, EdgeKind.DASHED),
        (FamilyTime.exact(T1_SQUARED), EdgeKind.THICK),
        (FamilyTime.exact(T2_SQUARED), EdgeKind.ANGLE),
    ],
)
def test_mirror_angle_inside_p_wall(time, expected_kind):
    induced = wall_diagram(quotient_normals(time), "p3")
    label = induced.label("L", "M")
    assert label.kind is expected_kind
    t_sq = time.square if isinstance(time, FamilyTime) else time * time
    expected_alpha = (1 + t_sq) / (2 * math.sqrt(1 - float(t_sq) ** 2))
    assert float(label.alpha) == pytest.approx(float(expected_alpha), abs=1e-12)
    if expected_kind is EdgeKind.ANGLE:
        assert label.angle == pytest.approx(math.pi / 6, abs=1e-12)


def test_wall_diagram_of_orthogonal_set_is_edgeless():
    walls = ORTHOGONAL_TRIPLE + [SpaceLikeVector((0, 0, 0, 0, 1))]
    induced = wall_diagram(walls, "3")
    assert set(induced.nodes) == {"0", "1", "2"}
    assert all(lab.kind is EdgeKind.RIGHT_ANGLE for lab in induced.labels.values())


def test_wall_diagram_unknown_wall():
    with pytest.raises(ValueError, match="unknown wall"):
        wall_diagram(quotient_normals(0.9), "Z")


# ---------------------------------------------------------------------------
# Coxeter group orders


@pytest.mark.parametrize(
    "alphas, order",
    [
        ((cos_pi_over(3),), 6),  # I2(3), the dihedral triangle group
        ((cos_pi_over(4),), 8),
        ((cos_pi_over(5),), 10),
        ((cos_pi_over(3), cos_pi_over(3)), 24),  # A3
        ((cos_pi_over(4), cos_pi_over(3)), 48),  # B3
        ((cos_pi_over(5), cos_pi_over(3)), 120),  # H3
        ((cos_pi_over(3), cos_pi_over(3), cos_pi_over(3)), 120),  # A4
        ((cos_pi_over(4), cos_pi_over(3), cos_pi_over(3)), 384),  # B4
        ((cos_pi_over(3), cos_pi_over(4), cos_pi_over(3)), 1152),  # F4
        ((cos_pi_over(5), cos_pi_over(3), cos_pi_over(3)), 14400),  # H4
    ],
)
def test_coxeter_orders_for_paths(alphas, order):
    assert coxeter_group_order(build_diagram(angle_gram(*alphas))) == order


def test_coxeter_order_orthogonal_product():
    assert coxeter_group_order(diagram_of(ORTHOGONAL_TRIPLE)) == 8


def test_coxeter_order_mixed_components():
    entries = [[Fraction(0)] * 4 for _ in range(4)]
    for i in range(4):
        entries[i][i] = Fraction(1)
    entries[0][1] = entries[1][0] = -cos_pi_over(3)
    gram = GramMatrix(("a", "b", "c", "d"), tuple(tuple(r) for r in entries))
    assert coxeter_group_order(build_diagram(gram)) == 24  # I2(3) x A1 x A1


def test_coxeter_order_branched_diagram():
    entries = [[Fraction(0)] * 4 for _ in range(4)]
    for i in range(4):
        entries[i][i] = Fraction(1)
    for leaf in (1, 2, 3):
        entries[0][leaf] = entries[leaf][0] = -cos_pi_over(3)
    gram = GramMatrix(("c", "x", "y", "z"), tuple(tuple(r) for r in entries))
    assert coxeter_group_order(build_diagram(gram)) == 192  # D4


def test_coxeter_order_multiplicative_over_unions():
    left = angle_gram(cos_pi_over(6))
    right = angle_gram(cos_pi_over(3))
    n = left.size + right.size
    entries = [[Fraction(0)] * n for _ in range(n)]
    for i in range(left.size):
        for j in range(left.size):
            entries[i][j] = left.entries[i][j]
    for i in range(right.size):
        for j in range(right.size):
            entries[left.size + i][left.size + j] = right.entries[i][j]
    gram = GramMatrix(
        tuple(f"l{i}" for i in range(left.size)) + tuple(f"r{i}" for i in range(right.size)),
        tuple(tuple(r) for r in entries),
    )
    combined = coxeter_group_order(build_diagram(gram))
    assert combined == coxeter_group_order(build_diagram(left)) * coxeter_group_order(
        build_diagram(right)
    )
    assert combined == 72


def test_coxeter_order_rejects_non_elliptic():
    gram = gram_matrix(quotient_normals(0.9))
    thick = GramMatrix(
        ("p0", "p3"),
        ((gram.entries[0][0], gram.entries[0][2]), (gram.entries[2][0], gram.entries[2][2])),
    )
    with pytest.raises(ValueError, match="not elliptic"):
        coxeter_group_order(build_diagram(thick))


def test_coxeter_order_rejects_non_coxeter_angle():
    gram = angle_gram(0.4)  # arccos(0.4) is not pi/m for any integer m
    with pytest.raises(ValueError, match="Coxeter"):
        coxeter_group_order(build_diagram(gram))
