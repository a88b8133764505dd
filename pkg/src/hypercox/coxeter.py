"""Gram matrices, Coxeter diagrams and the strata of acute-angled polytopes.

A finite-volume acute-angled polytope in H^4 is described by its Gram matrix
of unit normals.  Subsets of walls classify by the definiteness of the
corresponding principal submatrix: positive definite (elliptic) subsets of
size k carry the codimension-k strata, while maximal positive semidefinite
singular subsets whose components are all singular (parabolic) of rank 3
carry the ideal vertices.

Strata can be enumerated either through this subdiagram calculus or through
a direct geometric backend that solves for vertices and filters by
half-space membership; the two are cross-checked in "both" mode.  Finite
volume is certified by checking that every edge joins exactly two vertices.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .arith import MultiQuad, is_exact, sign_of, sqrt_of
from .lorentz import (
    PointKind,
    Scalar,
    SpaceLikeVector,
    minkowski_product,
    pair_relation,
    solve_vertex,
    tolerance,
)

NormalSet = Union[Mapping[str, SpaceLikeVector], Sequence[SpaceLikeVector]]

#: Looser tolerance for incidence detection on normalized geometric data.
INCIDENCE_EPS = 1e-7


def _named_normals(normals: NormalSet) -> dict[str, SpaceLikeVector]:
    if isinstance(normals, Mapping):
        return dict(normals)
    return {str(i): v for i, v in enumerate(normals)}


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric unit-diagonal matrix of products of unit normals."""

    names: tuple[str, ...]
    entries: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.names)
        if len(self.entries) != n or any(len(row) != n for row in self.entries):
            raise ValueError("Gram matrix shape does not match the name list")

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def is_exact(self) -> bool:
        return all(is_exact(x) for row in self.entries for x in row)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def alpha(self, a: str, b: str) -> Scalar:
        """Normalized product -<e_a, e_b> of the two unit normals."""
        return -self.entries[self.index(a)][self.index(b)]

    def submatrix(self, subset: Sequence[str]) -> list[list[Scalar]]:
        idx = [self.index(name) for name in subset]
        return [[self.entries[i][j] for j in idx] for i in idx]


def gram_matrix(normals: NormalSet) -> GramMatrix:
    """Gram matrix of the normalized normals, exact when the inputs are."""
    named = _named_normals(normals)
    names = tuple(named)
    vectors = [named[n] for n in names]
    norms = [minkowski_product(v, v) for v in vectors]
    exact = all(is_exact(x) for v in vectors for x in v.coords)
    if exact:
        scales = [sqrt_of(MultiQuad(s)).inverse() for s in norms]
        units = [tuple(scale * x for x in v.coords) for scale, v in zip(scales, vectors)]
    else:
        scales = [1.0 / math.sqrt(float(s)) for s in norms]
        units = [tuple(scale * float(x) for x in v.coords) for scale, v in zip(scales, vectors)]
    entries = tuple(
        tuple(minkowski_product(units[i], units[j]) for j in range(len(units)))
        for i in range(len(units))
    )
    return GramMatrix(names, entries)


class EdgeKind(Enum):
    DASHED = "dashed"
    THICK = "thick"
    ANGLE = "angle"
    RIGHT_ANGLE = "right-angle"


@dataclass(frozen=True)
class EdgeLabel:
    kind: EdgeKind
    alpha: Scalar
    angle: Optional[float] = None


@dataclass(frozen=True)
class CoxeterDiagram:
    """Labelled graph on the walls, determined by the Gram matrix alone."""

    nodes: tuple[str, ...]
    labels: dict[frozenset, EdgeLabel]

    def label(self, a: str, b: str) -> EdgeLabel:
        return self.labels[frozenset((a, b))]

    def edges_of_kind(self, kind: EdgeKind) -> list[frozenset]:
        return [pair for pair, lab in self.labels.items() if lab.kind is kind]

    def neighbors(self, node: str) -> set[str]:
        """Nodes joined by any visible edge (everything but right angles)."""
        out = set()
        for pair, lab in self.labels.items():
            if node in pair and lab.kind is not EdgeKind.RIGHT_ANGLE:
                out |= pair - {node}
        return out


def _classify_alpha(alpha: Scalar, eps: float) -> EdgeLabel:
    a = float(alpha)
    high = sign_of(alpha - 1 if is_exact(alpha) else a - 1.0, eps)
    if high > 0:
        return EdgeLabel(EdgeKind.DASHED, alpha)
    if high == 0:
        return EdgeLabel(EdgeKind.THICK, alpha)
    if sign_of(alpha, eps) == 0:
        return EdgeLabel(EdgeKind.RIGHT_ANGLE, alpha, angle=math.pi / 2)
    if sign_of(alpha + 1 if is_exact(alpha) else a + 1.0, eps) <= 0:
        raise ValueError("walls are disjoint: no diagram label for alpha <= -1")
    return EdgeLabel(EdgeKind.ANGLE, alpha, angle=math.acos(max(-1.0, min(1.0, a))))


def build_diagram(gram: GramMatrix, eps: Optional[float] = None) -> CoxeterDiagram:
    """Label every pair from the Gram matrix: dashed, thick, angle or right angle."""
    band = tolerance(eps)
    labels: dict[frozenset, EdgeLabel] = {}
    for i, j in itertools.combinations(range(gram.size), 2):
        alpha = -gram.entries[i][j]
        labels[frozenset((gram.names[i], gram.names[j]))] = _classify_alpha(alpha, band)
    return CoxeterDiagram(gram.names, labels)


class ClassKind(Enum):
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    INDEFINITE = "indefinite"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class SubdiagramClass:
    kind: ClassKind
    components: Optional[int] = None
    rank: Optional[int] = None


def _definiteness(matrix: list[list[Scalar]], eps: float) -> tuple[str, int]:
    """("pd" | "psd" | "indefinite", rank) by symmetric elimination.

    A symmetric matrix is positive semidefinite exactly when elimination on
    positive diagonal pivots terminates with an all-zero remainder; any
    negative diagonal entry (original or Schur complement) is a witness
    against it.
    """
    n = len(matrix)
    work = [[x for x in row] for row in matrix]
    active = list(range(n))
    rank = 0
    while active:
        signs = {}
        for i in active:
            value = work[i][i]
            signs[i] = sign_of(value, 0.0 if is_exact(value) else eps)
        if any(s < 0 for s in signs.values()):
            return "indefinite", rank
        pivot = next((i for i in active if signs[i] > 0), None)
        if pivot is None:
            for i in active:
                for j in active:
                    entry = work[i][j]
                    if sign_of(entry, 0.0 if is_exact(entry) else eps) != 0:
                        return "indefinite", rank
            return "psd", rank
        rank += 1
        active.remove(pivot)
        d = work[pivot][pivot]
        for i in active:
            if is_exact(work[i][pivot]) and is_exact(d):
                f = MultiQuad(work[i][pivot]) * MultiQuad(d).inverse()
            else:
                f = float(work[i][pivot]) / float(d)
            for j in active:
                work[i][j] = work[i][j] - f * work[pivot][j]
    return ("pd", rank) if rank == n else ("psd", rank)


def _components(
    matrix: list[list[Scalar]], eps: float
) -> list[list[int]]:
    """Connected components under nonzero off-diagonal entries."""
    n = len(matrix)
    seen: set[int] = set()
    components = []
    for start in range(n):
        if start in seen:
            continue
        stack, comp = [start], []
        seen.add(start)
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in range(n):
                if j in seen:
                    continue
                entry = matrix[i][j]
                if sign_of(entry, 0.0 if is_exact(entry) else eps) != 0:
                    seen.add(j)
                    stack.append(j)
        components.append(sorted(comp))
    return components


def classify_subdiagram(
    gram: GramMatrix, subset: Sequence[str], eps: Optional[float] = None
) -> SubdiagramClass:
    """Elliptic, parabolic, indefinite or degenerate-other for a wall subset."""
    if not subset:
        raise ValueError("subset must be nonempty")
    band = tolerance(eps)
    matrix = gram.submatrix(list(subset))
    kind, rank = _definiteness(matrix, band)
    if kind == "pd":
        return SubdiagramClass(ClassKind.ELLIPTIC)
    if kind == "indefinite":
        return SubdiagramClass(ClassKind.INDEFINITE)
    components = _components(matrix, band)
    for comp in components:
        sub = [[matrix[i][j] for j in comp] for i in comp]
        comp_kind, comp_rank = _definiteness(sub, band)
        if comp_kind == "pd":
            return SubdiagramClass(ClassKind.DEGENERATE)
    return SubdiagramClass(ClassKind.PARABOLIC, components=len(components), rank=rank)


# ---------------------------------------------------------------------------
# finite Coxeter groups


def _factorial(n: int) -> int:
    return math.factorial(n)


def _coxeter_label(label: EdgeLabel, eps: float) -> int:
    """Integer m with angle = pi/m, validating the Coxeter condition."""
    if label.kind is not EdgeKind.ANGLE and label.kind is not EdgeKind.RIGHT_ANGLE:
        raise ValueError("diagram is not elliptic: thick or dashed edge present")
    m = round(math.pi / label.angle)
    if m < 2 or abs(label.angle - math.pi / m) > max(eps, 1e-9):
        raise ValueError(f"angle {label.angle} is not of Coxeter form pi/m")
    return m


def _component_order(size: int, edges: dict[frozenset, int], degrees: dict[str, int]) -> int:
    """Order of the finite Coxeter group of one connected diagram component."""
    if size == 1:
        return 2
    if len(edges) != size - 1:
        raise ValueError("component is not a tree: not a finite Coxeter diagram")
    labels = sorted(edges.values())
    max_degree = max(degrees.values())
    if max_degree > 2:
        branch_nodes = [n for n, d in degrees.items() if d > 2]
        if (
            len(branch_nodes) == 1
            and degrees[branch_nodes[0]] == 3
            and all(m == 3 for m in labels)
            and size >= 4
        ):
            arms = sorted(_arm_lengths(branch_nodes[0], edges))
            if arms[0] == 1 and arms[1] == 1:
                return 2 ** (size - 1) * _factorial(size)
        raise ValueError("unrecognized branched Coxeter diagram")
    if size == 2:
        return 2 * labels[0]
    path = _path_labels(edges, degrees)
    if all(m == 3 for m in path):
        return _factorial(size + 1)
    reversed_path = list(reversed(path))
    for candidate in (path, reversed_path):
        if candidate[0] == 4 and all(m == 3 for m in candidate[1:]):
            return 2 ** size * _factorial(size)
        if candidate == [5, 3]:
            return 120
        if candidate == [5, 3, 3]:
            return 14400
    if path == [3, 4, 3]:
        return 1152
    raise ValueError(f"unrecognized Coxeter diagram with path labels {path}")


def _arm_lengths(center: str, edges: dict[frozenset, int]) -> list[int]:
    adjacency: dict[str, set[str]] = {}
    for pair in edges:
        a, b = tuple(pair)
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    lengths = []
    for start in adjacency[center]:
        length, prev, node = 1, center, start
        while True:
            nxt = adjacency[node] - {prev}
            if not nxt:
                break
            prev, node = node, nxt.pop()
            length += 1
        lengths.append(length)
    return lengths


def _path_labels(edges: dict[frozenset, int], degrees: dict[str, int]) -> list[int]:
    adjacency: dict[str, dict[str, int]] = {}
    for pair, m in edges.items():
        a, b = tuple(pair)
        adjacency.setdefault(a, {})[b] = m
        adjacency.setdefault(b, {})[a] = m
    start = min(n for n, d in degrees.items() if d == 1)
    labels, prev, node = [], None, start
    while True:
        nxt = [(other, m) for other, m in adjacency[node].items() if other != prev]
        if not nxt:
            break
        (other, m), = nxt
        labels.append(m)
        prev, node = node, other
    return labels


def coxeter_group_order(diagram: CoxeterDiagram, eps: Optional[float] = None) -> int:
    """Order of the finite Coxeter group of an elliptic diagram.

    Multiplicative over connected components; recognizes the classical and
    exceptional families A, B, D, I2(m), H3, H4 and F4.
    """
    band = tolerance(eps)
    visible = {
        pair: lab for pair, lab in diagram.labels.items()
        if lab.kind is not EdgeKind.RIGHT_ANGLE
    }
    adjacency: dict[str, set[str]] = {node: set() for node in diagram.nodes}
    for pair in visible:
        a, b = tuple(pair)
        adjacency[a].add(b)
        adjacency[b].add(a)
    seen: set[str] = set()
    order = 1
    for start in diagram.nodes:
        if start in seen:
            continue
        component = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for other in adjacency[node] - component:
                component.add(other)
                stack.append(other)
        seen |= component
        edges = {
            pair: _coxeter_label(lab, band)
            for pair, lab in visible.items() if pair <= component
        }
        degrees = {node: len(adjacency[node] & component) for node in component}
        order *= _component_order(len(component), edges, degrees)
    return order


# ---------------------------------------------------------------------------
# strata


@dataclass(frozen=True)
class FaceStratum:
    walls: frozenset
    angle: float


@dataclass(frozen=True)
class EdgeStratum:
    walls: frozenset


@dataclass(frozen=True)
class VertexStratum:
    walls: frozenset
    link: str


@dataclass(frozen=True)
class IdealVertexStratum:
    walls: frozenset
    components: tuple[frozenset, ...]
    link: str


@dataclass(frozen=True)
class StrataComplex:
    """All strata of the polytope, with incidence given by wall-set inclusion."""

    walls: tuple[str, ...]
    faces: tuple[FaceStratum, ...]
    edges: tuple[EdgeStratum, ...]
    finite_vertices: tuple[VertexStratum, ...]
    ideal_vertices: tuple[IdealVertexStratum, ...]

    @property
    def f_vector(self) -> tuple[int, int, int, int]:
        """(walls, faces, edges, vertices) with ideal vertices included."""
        return (
            len(self.walls),
            len(self.faces),
            len(self.edges),
            len(self.finite_vertices) + len(self.ideal_vertices),
        )

    @property
    def is_simple(self) -> bool:
        """Every interior stratum of codimension k lies in exactly k walls."""
        return (
            all(len(f.walls) == 2 for f in self.faces)
            and all(len(e.walls) == 3 for e in self.edges)
            and all(len(v.walls) == 4 for v in self.finite_vertices)
        )

    def faces_of_wall(self, wall: str) -> list[FaceStratum]:
        return [f for f in self.faces if wall in f.walls]

    def edges_of_face(self, face: FaceStratum) -> list[EdgeStratum]:
        return [e for e in self.edges if face.walls <= e.walls]

    def endpoints_of_edge(
        self, edge: EdgeStratum
    ) -> tuple[list[VertexStratum], list[IdealVertexStratum]]:
        finite = [v for v in self.finite_vertices if edge.walls <= v.walls]
        ideal = [v for v in self.ideal_vertices if edge.walls <= v.walls]
        return finite, ideal

    def face_angle(self, walls: frozenset) -> float:
        for f in self.faces:
            if f.walls == walls:
                return f.angle
        raise KeyError(f"no face with walls {sorted(walls)}")

    def to_json(self) -> str:
        index = {name: i for i, name in enumerate(self.walls)}

        def wall_list(subset: frozenset) -> list[int]:
            return sorted(index[w] for w in subset)

        payload = {
            "walls": list(self.walls),
            "faces": [
                {"walls": wall_list(f.walls), "angle": f.angle} for f in self.faces
            ],
            "edges": [wall_list(e.walls) for e in self.edges],
            "finite_vertices": [
                {"walls": wall_list(v.walls), "link": v.link}
                for v in self.finite_vertices
            ],
            "ideal_vertices": [
                {
                    "walls": wall_list(v.walls),
                    "components": [wall_list(c) for c in v.components],
                    "link": v.link,
                }
                for v in self.ideal_vertices
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _canonical_sort(strata):
    return tuple(sorted(strata, key=lambda s: sorted(s.walls)))


# -- diagram backend


_AFFINE_NAMES = {  # path label sequences of the affine triangle groups
    (4, 4): "~C2",
    (3, 6): "~G2",
    (6, 3): "~G2",
}


def _parabolic_component_name(size: int, labels: list[int], cyclic: bool) -> str:
    if size == 2:
        return "~A1"
    if cyclic and all(m == 3 for m in labels):
        return f"~A{size - 1}"
    if not cyclic:
        name = _AFFINE_NAMES.get(tuple(labels)) or _AFFINE_NAMES.get(tuple(reversed(labels)))
        if name:
            return name
        if size >= 4 and labels[0] == 4 and labels[-1] == 4 and all(m == 3 for m in labels[1:-1]):
            return f"~C{size - 1}"
    return f"affine({size})"


def _describe_parabolic_component(diagram: CoxeterDiagram, comp: list[str], eps: float) -> str:
    pairs = {
        frozenset((a, b)) for a, b in itertools.combinations(comp, 2)
        if diagram.label(a, b).kind is not EdgeKind.RIGHT_ANGLE
    }
    if len(comp) == 2:
        return "~A1"
    try:
        cyclic = len(pairs) == len(comp)
        if cyclic:
            labels = [_coxeter_label(diagram.labels[p], eps) for p in pairs]
            return _parabolic_component_name(len(comp), labels, cyclic=True)
        degrees = {n: sum(1 for p in pairs if n in p) for n in comp}
        edge_labels = {p: _coxeter_label(diagram.labels[p], eps) for p in pairs}
        path = _path_labels(edge_labels, degrees)
        return _parabolic_component_name(len(comp), path, cyclic=False)
    except ValueError:
        return f"affine({len(comp)})"


def _describe_elliptic(diagram: CoxeterDiagram, subset: Sequence[str], eps: float) -> str:
    adjacency = {
        n: {
            m for m in subset
            if m != n and diagram.label(n, m).kind is not EdgeKind.RIGHT_ANGLE
        }
        for n in subset
    }
    seen: set[str] = set()
    parts = []
    for start in subset:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for other in adjacency[node] - comp:
                comp.add(other)
                stack.append(other)
        seen |= comp
        if len(comp) == 1:
            parts.append("A1")
            continue
        pairs = {
            frozenset((a, b)) for a, b in itertools.combinations(comp, 2)
            if diagram.label(a, b).kind is not EdgeKind.RIGHT_ANGLE
        }
        try:
            labels = sorted(_coxeter_label(diagram.labels[p], eps) for p in pairs)
        except ValueError:
            # Generic deformation angles are not of the form pi/m; the link
            # is still a spherical simplex, just not a Coxeter one.
            parts.append(f"spherical({len(comp)})")
            continue
        if len(comp) == 2:
            parts.append(f"I2({labels[0]})")
        elif all(m == 3 for m in labels):
            parts.append(f"A{len(comp)}")
        else:
            parts.append(f"rank{len(comp)}({','.join(map(str, labels))})")
    return " x ".join(sorted(parts))


def _diagram_strata(
    gram: GramMatrix, eps: float
) -> StrataComplex:
    diagram = build_diagram(gram, eps)
    names = gram.names
    for pair, lab in diagram.labels.items():
        if lab.kind is EdgeKind.ANGLE and sign_of(lab.alpha, eps) < 0:
            raise ValueError(
                f"diagram backend requires an acute-angled polytope; "
                f"pair {sorted(pair)} has an obtuse angle"
            )

    def relation(a: str, b: str) -> EdgeKind:
        return diagram.label(a, b).kind

    angle_adjacency: dict[str, set[str]] = {n: set() for n in names}
    for pair, lab in diagram.labels.items():
        if lab.kind in (EdgeKind.ANGLE, EdgeKind.RIGHT_ANGLE):
            a, b = tuple(pair)
            angle_adjacency[a].add(b)
            angle_adjacency[b].add(a)

    faces = [
        FaceStratum(pair, lab.angle)
        for pair, lab in diagram.labels.items()
        if lab.kind in (EdgeKind.ANGLE, EdgeKind.RIGHT_ANGLE)
    ]

    order = {name: i for i, name in enumerate(names)}
    edges = []
    finite_vertices = []
    triangles = []
    for a, b in itertools.combinations(names, 2):
        if b not in angle_adjacency[a]:
            continue
        for c in sorted(angle_adjacency[a] & angle_adjacency[b], key=order.get):
            if order[c] <= order[b]:
                continue
            subset = (a, b, c)
            if classify_subdiagram(gram, subset, eps).kind is ClassKind.ELLIPTIC:
                edges.append(EdgeStratum(frozenset(subset)))
                triangles.append(subset)
    for a, b, c in triangles:
        common = angle_adjacency[a] & angle_adjacency[b] & angle_adjacency[c]
        for d in sorted(common, key=order.get):
            if order[d] <= order[c]:
                continue
            subset = (a, b, c, d)
            if classify_subdiagram(gram, subset, eps).kind is ClassKind.ELLIPTIC:
                finite_vertices.append(
                    VertexStratum(
                        frozenset(subset), _describe_elliptic(diagram, subset, eps)
                    )
                )

    ideal_vertices = _diagram_ideal_vertices(gram, diagram, eps)

    return StrataComplex(
        walls=names,
        faces=_canonical_sort(faces),
        edges=_canonical_sort(edges),
        finite_vertices=_canonical_sort(finite_vertices),
        ideal_vertices=_canonical_sort(ideal_vertices),
    )


def _connected_subsets(
    names: Sequence[str], adjacency: dict[str, set[str]], max_size: int
) -> set[frozenset]:
    """All connected subsets of size 2..max_size of the given graph."""
    order = {name: i for i, name in enumerate(names)}
    found: set[frozenset] = set()

    def grow(subset: tuple[str, ...], frontier: set[str], floor: int) -> None:
        if 2 <= len(subset):
            found.add(frozenset(subset))
        if len(subset) == max_size:
            return
        for node in sorted(frontier, key=order.get):
            if order[node] <= floor:
                continue
            new_frontier = (frontier | adjacency[node]) - set(subset) - {node}
            grow(subset + (node,), new_frontier, order[node])

    for start in names:
        grow((start,), set(adjacency[start]), order[start])
    return found


def _diagram_ideal_vertices(
    gram: GramMatrix, diagram: CoxeterDiagram, eps: float
) -> list[IdealVertexStratum]:
    """Maximal parabolic rank-3 subsets, found as orthogonal unions of
    connected singular components of sizes 2 to 4."""
    names = gram.names
    # Dashed pairs force a negative 2x2 minor, so a connected singular
    # component only ever uses thick and angle edges.
    connect_adjacency: dict[str, set[str]] = {n: set() for n in names}
    for pair, lab in diagram.labels.items():
        if lab.kind in (EdgeKind.THICK, EdgeKind.ANGLE):
            a, b = tuple(pair)
            connect_adjacency[a].add(b)
            connect_adjacency[b].add(a)

    components: list[frozenset] = []
    for subset in _connected_subsets(names, connect_adjacency, max_size=4):
        cls = classify_subdiagram(gram, tuple(subset), eps)
        if cls.kind is ClassKind.PARABOLIC and cls.components == 1:
            components.append(subset)
    by_rank: dict[int, list[frozenset]] = {1: [], 2: [], 3: []}
    for comp in components:
        rank = len(comp) - 1
        if rank in by_rank:
            by_rank[rank].append(comp)

    def orthogonal(a: frozenset, b: frozenset) -> bool:
        if a & b:
            return False
        return all(
            diagram.label(x, y).kind is EdgeKind.RIGHT_ANGLE for x in a for y in b
        )

    unions: set[frozenset] = set()
    component_map: dict[frozenset, tuple[frozenset, ...]] = {}
    for comp in by_rank[3]:
        unions.add(comp)
        component_map[comp] = (comp,)
    for c2 in by_rank[2]:
        for c1 in by_rank[1]:
            if orthogonal(c2, c1):
                union = c2 | c1
                unions.add(union)
                component_map[union] = (c2, c1)
    singles = by_rank[1]
    for i, a in enumerate(singles):
        for j in range(i + 1, len(singles)):
            b = singles[j]
            if not orthogonal(a, b):
                continue
            for k in range(j + 1, len(singles)):
                c = singles[k]
                if orthogonal(a, c) and orthogonal(b, c):
                    union = a | b | c
                    unions.add(union)
                    component_map[union] = (a, b, c)

    maximal = [
        u for u in unions if not any(u < other for other in unions)
    ]
    strata = []
    for subset in maximal:
        comps = tuple(sorted(component_map[subset], key=lambda c: sorted(c)))
        label = " x ".join(
            sorted(_describe_parabolic_component(diagram, sorted(c), eps) for c in comps)
        )
        strata.append(IdealVertexStratum(subset, comps, label))
    return strata


# -- geometric backend


def polytope_witness(
    normals: NormalSet, eps: Optional[float] = None
) -> tuple[float, ...]:
    """A point strictly inside every half-space, found by nudging the centre."""
    named = _named_normals(normals)
    units = _unit_float_normals(named)
    x = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    j = np.array([-1.0, 1.0, 1.0, 1.0, 1.0])
    margin = tolerance(eps) * 10
    for _ in range(200):
        products = {name: float(np.dot(u * j, x)) for name, u in units.items()}
        violated = [name for name, p in products.items() if p > -margin]
        if not violated:
            return tuple(x)
        step = sum(units[name] for name in violated)
        x = x - 0.05 * j * step
        x = x / max(1e-9, abs(x[0]))
    raise ValueError("no interior point found: the half-spaces may have empty interior")


def _unit_float_normals(named: dict[str, SpaceLikeVector]) -> dict[str, np.ndarray]:
    units = {}
    for name, v in named.items():
        arr = np.array([float(x) for x in v.coords])
        norm = -arr[0] * arr[0] + float(np.dot(arr[1:], arr[1:]))
        units[name] = arr / math.sqrt(norm)
    return units


def _light_rays_in_plane(u: np.ndarray, v: np.ndarray) -> list[np.ndarray]:
    """Light-like directions in the span of two vectors."""

    def form(a: np.ndarray, b: np.ndarray) -> float:
        return float(-a[0] * b[0] + np.dot(a[1:], b[1:]))

    a, b, c = form(v, v), form(u, v), form(u, u)
    rays = []
    if abs(a) < 1e-12:
        rays.append(v)
        if abs(b) > 1e-12:
            rays.append(u - (c / (2 * b)) * v)
        return rays
    disc = b * b - a * c
    if disc < -1e-12:
        return []
    if disc <= 1e-12:
        rays.append(u - (b / a) * v)
    else:
        root = math.sqrt(disc)
        rays.append(u + ((-b + root) / a) * v)
        rays.append(u + ((-b - root) / a) * v)
    return rays


def _geometric_strata(normals: NormalSet, eps: float) -> StrataComplex:
    named = _named_normals(normals)
    names = tuple(named)
    units = _unit_float_normals(named)
    float_normals = {n: tuple(units[n]) for n in names}
    polytope_witness(named, eps)
    j = np.array([-1.0, 1.0, 1.0, 1.0, 1.0])

    def incident_walls(x: np.ndarray) -> frozenset:
        return frozenset(
            name for name, u in units.items() if abs(float(np.dot(u * j, x))) < INCIDENCE_EPS
        )

    def inside(x: Sequence[float]) -> bool:
        return all(
            float(np.dot(units[name] * j, np.asarray(x))) < INCIDENCE_EPS for name in names
        )

    finite_points: dict[tuple, tuple[np.ndarray, frozenset]] = {}
    ideal_points: dict[tuple, tuple[np.ndarray, frozenset]] = {}

    def record_ideal(x: np.ndarray) -> None:
        if x[0] < 0:
            x = -x
        if abs(x[0]) < 1e-9:
            return
        x = x / x[0]
        if not inside(x):
            return
        key = tuple(round(float(c), 6) for c in x)
        ideal_points.setdefault(key, (x, incident_walls(x)))

    # Walls through a common point, finite or ideal, are never ultraparallel,
    # so subsets containing a dashed pair cannot carry a vertex.
    meets: set[frozenset] = set()
    for a, b in itertools.combinations(names, 2):
        alpha = -float(np.dot(units[a] * j, units[b]))
        if alpha < 1 + INCIDENCE_EPS:
            meets.add(frozenset((a, b)))

    def all_meet(subset: tuple[str, ...]) -> bool:
        return all(
            frozenset(pair) in meets for pair in itertools.combinations(subset, 2)
        )

    for subset in itertools.combinations(names, 4):
        if not all_meet(subset):
            continue
        point = solve_vertex([float_normals[n] for n in subset], eps)
        if point is None:
            continue
        coords = np.array([float(c) for c in point.coords])
        if not inside(coords):
            continue
        if point.kind is PointKind.FINITE:
            key = tuple(round(float(c), 6) for c in coords)
            if key not in finite_points:
                walls = incident_walls(coords)
                if len(walls) != 4:
                    raise ValueError(
                        f"polytope is not simple: vertex on walls {sorted(walls)}"
                    )
                finite_points[key] = (coords, walls)
        else:
            record_ideal(coords)

    for subset in itertools.combinations(names, 3):
        if not all_meet(subset):
            continue
        rows = np.array([units[n] * j for n in subset])
        _, singular, vt = np.linalg.svd(rows, full_matrices=True)
        null = [vt[i] for i in range(5) if i >= len(singular) or singular[i] < 1e-9]
        if len(null) != 2:
            continue
        for ray in _light_rays_in_plane(null[0], null[1]):
            record_ideal(ray)

    finite_list = [value for _, value in sorted(finite_points.items())]
    ideal_list = [value for _, value in sorted(ideal_points.items())]
    all_vertices = finite_list + ideal_list

    edge_candidates: set[frozenset] = set()
    for _, walls in all_vertices:
        for triple in itertools.combinations(sorted(walls), 3):
            edge_candidates.add(frozenset(triple))

    edges = []
    for candidate in edge_candidates:
        endpoints = [
            coords for coords, walls in all_vertices if candidate <= walls
        ]
        if len(endpoints) != 2:
            continue
        midpoint = (endpoints[0] + endpoints[1]) / 2
        if not inside(midpoint):
            continue
        if incident_walls(midpoint) != candidate:
            continue
        edges.append(EdgeStratum(candidate))

    face_sets: set[frozenset] = set()
    for edge in edges:
        for pair in itertools.combinations(sorted(edge.walls), 2):
            face_sets.add(frozenset(pair))
    faces = []
    for pair in face_sets:
        members = [coords for coords, walls in all_vertices if pair <= walls]
        centroid = sum(members) / len(members)
        if not inside(centroid) or incident_walls(centroid) != pair:
            continue
        a, b = sorted(pair)
        relation = pair_relation(float_normals[a], float_normals[b], eps)
        faces.append(FaceStratum(pair, relation.angle))

    gram = gram_matrix({n: SpaceLikeVector(float_normals[n]) for n in names})
    diagram = build_diagram(gram, eps)
    finite_vertices = [
        VertexStratum(walls, _describe_elliptic(diagram, sorted(walls), eps))
        for _, walls in finite_list
    ]
    ideal_vertices = []
    for _, walls in ideal_list:
        matrix = gram.submatrix(sorted(walls))
        comps = [
            frozenset(sorted(walls)[i] for i in comp)
            for comp in _components(matrix, eps)
        ]
        label = " x ".join(
            sorted(
                _describe_parabolic_component(diagram, sorted(c), eps) for c in comps
            )
        )
        ideal_vertices.append(IdealVertexStratum(walls, tuple(sorted(comps, key=lambda c: sorted(c))), label))

    return StrataComplex(
        walls=names,
        faces=_canonical_sort(faces),
        edges=_canonical_sort(edges),
        finite_vertices=_canonical_sort(finite_vertices),
        ideal_vertices=_canonical_sort(ideal_vertices),
    )


def _compare_complexes(diagram: StrataComplex, geometric: StrataComplex) -> None:
    if diagram.walls != geometric.walls:
        raise ValueError("backends disagree on the wall list")
    for kind, left, right in (
        ("face", {f.walls for f in diagram.faces}, {f.walls for f in geometric.faces}),
        ("edge", {e.walls for e in diagram.edges}, {e.walls for e in geometric.edges}),
        (
            "finite vertex",
            {v.walls for v in diagram.finite_vertices},
            {v.walls for v in geometric.finite_vertices},
        ),
        (
            "ideal vertex",
            {v.walls for v in diagram.ideal_vertices},
            {v.walls for v in geometric.ideal_vertices},
        ),
    ):
        if left != right:
            difference = left ^ right
            sample = sorted(sorted(s) for s in difference)[0]
            raise ValueError(
                f"backends disagree on a {kind} stratum: {sample}"
            )
    for f in diagram.faces:
        other = geometric.face_angle(f.walls)
        if abs(f.angle - other) > 1e-6:
            raise ValueError(
                f"backends disagree on the angle of face {sorted(f.walls)}"
            )


def enumerate_strata(
    normals: NormalSet, mode: str = "diagram", eps: Optional[float] = None
) -> StrataComplex:
    """Strata of the polytope cut out by the normals.

    ``diagram`` classifies wall subsets through the Gram matrix (valid for
    acute-angled polytopes, exact when the input is); ``geometric`` solves
    for vertices and reconstructs higher strata from incidences (binary64);
    ``both`` runs the two and insists they agree.
    """
    band = tolerance(eps)
    if mode == "diagram":
        return _diagram_strata(gram_matrix(normals), band)
    if mode == "geometric":
        return _geometric_strata(normals, band)
    if mode == "both":
        diagram = _diagram_strata(gram_matrix(normals), band)
        geometric = _geometric_strata(normals, band)
        _compare_complexes(diagram, geometric)
        return diagram
    raise ValueError(f"unknown mode: {mode!r}")


@dataclass(frozen=True)
class FiniteVolumeResult:
    finite: bool
    witness: Optional[frozenset] = None


def finite_volume_check(complex_: StrataComplex) -> FiniteVolumeResult:
    """Vinberg's criterion: finite volume iff every edge joins exactly two
    vertices (finite or ideal).  A polytope with no edges at all is infinite."""
    if not complex_.edges:
        return FiniteVolumeResult(False)
    for edge in complex_.edges:
        finite, ideal = complex_.endpoints_of_edge(edge)
        if len(finite) + len(ideal) != 2:
            return FiniteVolumeResult(False, witness=edge.walls)
    return FiniteVolumeResult(True)


def wall_diagram(
    normals: NormalSet, wall: str, eps: Optional[float] = None
) -> CoxeterDiagram:
    """Coxeter diagram of one wall, seen as a polytope in its own hyperplane.

    Walls tangent or ultraparallel to the chosen one are dropped; the rest
    are projected onto the wall and their mutual angles recomputed.
    """
    named = _named_normals(normals)
    if wall not in named:
        raise ValueError(f"unknown wall: {wall!r}")
    band = tolerance(eps)
    base = named[wall]
    survivors: dict[str, SpaceLikeVector] = {}
    for name, normal in named.items():
        if name == wall:
            continue
        label = _classify_alpha(_pair_alpha(normal, base), band)
        if label.kind in (EdgeKind.ANGLE, EdgeKind.RIGHT_ANGLE):
            coeff_num = minkowski_product(normal, base)
            coeff_den = minkowski_product(base, base)
            if is_exact(coeff_num) and is_exact(coeff_den):
                factor = MultiQuad(coeff_num) * MultiQuad(coeff_den).inverse()
            else:
                factor = float(coeff_num) / float(coeff_den)
            projected = tuple(
                x - factor * w for x, w in zip(normal.coords, base.coords)
            )
            survivors[name] = SpaceLikeVector(projected)
    return build_diagram(gram_matrix(survivors), band)


def _pair_alpha(v: SpaceLikeVector, w: SpaceLikeVector) -> Scalar:
    cross = minkowski_product(v, w)
    norms = minkowski_product(v, v) * minkowski_product(w, w)
    if is_exact(cross) and is_exact(norms):
        return -MultiQuad(cross) * sqrt_of(MultiQuad(norms)).inverse()
    return -float(cross) / math.sqrt(float(norms))
