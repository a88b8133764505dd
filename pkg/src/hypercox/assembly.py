"""Cone-manifolds assembled from copies of one polytope.

Two gluing patterns are supported.  A mirror colouring doubles the polytope
iteratively in k colour classes of walls, producing 2^k copies indexed by
bit vectors, every wall glued to the same wall of the copy across its
colour by the identity.  A wall pairing glues arbitrary (copy, wall) slots
by explicit isometries, each of which must carry the source wall onto the
target wall and the polytope onto itself.

Cells of every copy are addressed by their wall subsets, and
identifications act on them through the induced wall permutation, so orbit
traversals stay purely combinatorial.  Face cycles measure the transverse
cone angle around each 2-stratum; the singular ones assemble into cone
surfaces with Euler characteristic, cone points, area and an orientability
verdict from a coherent-orientation sweep; ideal-vertex cycles carry the
cusp count and the monodromy orientation sign.  An order-two automorphism
without fixed cells produces the quotient complex.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .coxeter import StrataComplex, enumerate_strata
from .family import (
    IDENTITY,
    FamilyTime,
    IsometryMatrix,
    WallKind,
    WallName,
    central_involution,
    ks_normals,
    pairing_isometries,
    quotient_normals,
    verify_symmetry,
)
from .lorentz import SpaceLikeVector, minkowski_product, tolerance
from .volume import FaceGeometry, face_geometry, orbifold_euler_char, stabilizer_orders

#: A copy label: bit vectors for mirror builds, anything hashable otherwise.
CopyId = Union[tuple, str, int]

#: A cell of the complex: (copy, wall subset).  Copies themselves use the
#: empty subset.
Cell = tuple

TWO_PI = 2 * math.pi

#: Cone angles within this band of 2*pi count as smooth.
CONE_ANGLE_EPS = 1e-9

_TRAVERSAL_LIMIT = 100_000


def _matrices_close(a: IsometryMatrix, b: IsometryMatrix, band: float) -> bool:
    return all(
        abs(float(x) - float(y)) <= band
        for row_a, row_b in zip(a.rows, b.rows)
        for x, y in zip(row_a, row_b)
    )


def _is_identity(iso: IsometryMatrix, band: float = 1e-9) -> bool:
    return _matrices_close(iso, IDENTITY, band)


def _wall_permutation(
    iso: IsometryMatrix, normals: Mapping[str, SpaceLikeVector], eps: Optional[float]
) -> dict[str, str]:
    return verify_symmetry(iso, 1, normals=normals, eps=eps)


def wall_reflection(normal: SpaceLikeVector) -> IsometryMatrix:
    """The Minkowski reflection in the wall's hyperplane, as binary64."""
    coords = [float(x) for x in normal.coords]
    norm = minkowski_product(coords, coords)
    j_diag = (-1.0, 1.0, 1.0, 1.0, 1.0)
    rows = tuple(
        tuple(
            (1.0 if i == j else 0.0) - 2.0 * coords[i] * j_diag[j] * coords[j] / norm
            for j in range(5)
        )
        for i in range(5)
    )
    return IsometryMatrix(rows)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class MirrorColouring:
    """Assignment of a palette colour in 0..k-1 to every wall."""

    colours: Mapping[str, int]

    def __post_init__(self) -> None:
        colours = dict(self.colours)
        object.__setattr__(self, "colours", colours)
        if not colours:
            raise ValueError("colouring must cover at least one wall")
        used = set(colours.values())
        if used != set(range(len(used))):
            raise ValueError("colours must form the range 0..k-1 with every colour used")

    @property
    def palette_size(self) -> int:
        return len(set(self.colours.values()))


_OCTET_COLOURS = {WallKind.POSITIVE: 0, WallKind.NEGATIVE: 1, WallKind.LETTER: 2}


def octet_colouring(walls: Iterable[str]) -> MirrorColouring:
    """The standard three-colouring by octet: positive 0, negative 1, letter 2."""
    colours = {}
    for name in walls:
        kind = WallName.parse(name).kind
        if kind not in _OCTET_COLOURS:
            raise ValueError(f"wall {name!r} belongs to no octet")
        colours[name] = _OCTET_COLOURS[kind]
    return MirrorColouring(colours)


@dataclass(frozen=True, eq=False)
class WallRule:
    """One direction of a wall identification between copies.

    ``wall_map`` is the permutation the isometry induces on wall names; for
    identity gluings and for a wall mirrored to itself it is the identity
    map.  Cells transform by mapping their wall subsets through it.
    """

    source_copy: CopyId
    source_wall: str
    target_copy: CopyId
    target_wall: str
    iso: IsometryMatrix
    wall_map: Mapping[str, str]


def _apply_rule(rule: WallRule, cell: Cell) -> Cell:
    copy, walls = cell
    return (rule.target_copy, frozenset(rule.wall_map[w] for w in walls))


@dataclass(eq=False)
class AssembledComplex:
    """Copies of one polytope glued along their walls."""

    normals: dict[str, SpaceLikeVector]
    strata: StrataComplex
    copies: tuple[CopyId, ...]
    rules: dict[tuple, WallRule]
    _orbit_cache: dict = field(default_factory=dict, repr=False)

    def rule(self, copy: CopyId, wall: str) -> WallRule:
        return self.rules[(copy, wall)]

    def cells(self, dim: int) -> list[Cell]:
        """Interior cells of one dimension; ideal vertices are excluded."""
        if dim == 4:
            subsets: list[frozenset] = [frozenset()]
        elif dim == 3:
            subsets = [frozenset((w,)) for w in self.strata.walls]
        elif dim == 2:
            subsets = [f.walls for f in self.strata.faces]
        elif dim == 1:
            subsets = [e.walls for e in self.strata.edges]
        elif dim == 0:
            subsets = [v.walls for v in self.strata.finite_vertices]
        else:
            raise ValueError(f"no cells of dimension {dim}")
        return [(copy, s) for copy in self.copies for s in subsets]

    def ideal_cells(self) -> list[Cell]:
        return [(copy, v.walls) for copy in self.copies for v in self.strata.ideal_vertices]

    def orbit(self, cell: Cell) -> frozenset:
        """Closure of one cell under the identifications of its walls."""
        seen = {cell}
        stack = [cell]
        while stack:
            current = stack.pop()
            copy, walls = current
            for w in walls:
                image = _apply_rule(self.rules[(copy, w)], current)
                if image not in seen:
                    seen.add(image)
                    stack.append(image)
        return frozenset(seen)

    def cell_orbits(self, dim: int) -> list[frozenset]:
        """Orbit classes of the interior cells of one dimension."""
        if dim not in self._orbit_cache:
            orbits = []
            remaining = set(self.cells(dim))
            for cell in self.cells(dim):
                if cell not in remaining:
                    continue
                orb = self.orbit(cell)
                remaining -= orb
                orbits.append(orb)
            self._orbit_cache[dim] = orbits
        return self._orbit_cache[dim]


def _cell_sort_key(cell: Cell):
    copy, walls = cell
    return (repr(copy), tuple(sorted(walls)))


def _orbit_key(orbit: Iterable[Cell]):
    return min(_cell_sort_key(cell) for cell in orbit)


def _validate_rules(complex_: AssembledComplex, band: float) -> None:
    walls = set(complex_.strata.walls)
    for copy in complex_.copies:
        for wall in walls:
            if (copy, wall) not in complex_.rules:
                raise ValueError(f"no identification covers wall {wall!r} of copy {copy!r}")
    for (copy, wall), rule in complex_.rules.items():
        if set(rule.wall_map) != walls or set(rule.wall_map.values()) != walls:
            raise ValueError(f"wall map at {(copy, wall)!r} is not a permutation of the walls")
        partner = complex_.rules[(rule.target_copy, rule.target_wall)]
        returns = (partner.target_copy, partner.target_wall) == (copy, wall)
        if not returns or not _matrices_close(partner.iso.compose(rule.iso), IDENTITY, band):
            raise ValueError(f"identifications are not involutive at {(copy, wall)!r}")


# ---------------------------------------------------------------------------
# the two builders


def mirror_complex(
    normals: Mapping[str, SpaceLikeVector],
    colouring: MirrorColouring,
    *,
    strata: Optional[StrataComplex] = None,
    mode: str = "diagram",
    eps: Optional[float] = None,
) -> AssembledComplex:
    """Mirror the polytope once per colour: 2^k copies indexed by bit vectors.

    The wall coloured c in copy I is glued to the same wall of the copy
    I xor e_c by the identity, so a one-colour palette is the double.
    """
    normals = dict(normals)
    if set(colouring.colours) != set(normals):
        raise ValueError("colouring does not cover exactly the walls of the polytope")
    if strata is None:
        strata = enumerate_strata(normals, mode=mode, eps=eps)
    k = colouring.palette_size
    copies = tuple(itertools.product((0, 1), repeat=k))
    identity_map = {w: w for w in normals}
    rules: dict[tuple, WallRule] = {}
    for copy in copies:
        for wall, colour in colouring.colours.items():
            target = copy[:colour] + (1 - copy[colour],) + copy[colour + 1 :]
            rules[(copy, wall)] = WallRule(copy, wall, target, wall, IDENTITY, identity_map)
    built = AssembledComplex(normals, strata, copies, rules)
    _validate_rules(built, tolerance(eps))
    return built


PairingRule = tuple[tuple, tuple, IsometryMatrix]


def pairing_complex(
    normals: Mapping[str, SpaceLikeVector],
    copies: Sequence[CopyId],
    rules: Iterable[PairingRule],
    *,
    strata: Optional[StrataComplex] = None,
    mode: str = "diagram",
    eps: Optional[float] = None,
) -> AssembledComplex:
    """Glue explicit (copy, wall) slots by isometries.

    Every slot must be covered exactly once over sources and targets
    together.  A rule between distinct slots needs an isometry that is a
    symmetry of the polytope carrying the source wall to the target wall;
    a slot paired with itself needs the Minkowski reflection in that wall,
    which folds the copy onto itself as in an orbifold mirror.
    """
    normals = dict(normals)
    copy_list = tuple(copies)
    if len(set(copy_list)) != len(copy_list):
        raise ValueError("copy identifiers must be distinct")
    if strata is None:
        strata = enumerate_strata(normals, mode=mode, eps=eps)
    band = tolerance(eps)
    identity_map = {w: w for w in normals}
    table: dict[tuple, WallRule] = {}

    def claim(slot: tuple, rule: WallRule) -> None:
        if slot in table:
            raise ValueError(f"wall {slot[1]!r} of copy {slot[0]!r} is covered twice")
        table[slot] = rule

    for (sc, sw), (tc, tw), iso in rules:
        for copy, wall in ((sc, sw), (tc, tw)):
            if copy not in copy_list:
                raise ValueError(f"rule references unknown copy {copy!r}")
            if wall not in normals:
                raise ValueError(f"rule references unknown wall {wall!r}")
        if (sc, sw) == (tc, tw):
            expected = wall_reflection(normals[sw])
            if not _matrices_close(iso, expected, max(band, 1e-9)):
                raise ValueError(
                    f"self-identification of wall {sw!r} is not the reflection in that wall"
                )
            claim((sc, sw), WallRule(sc, sw, sc, sw, iso, identity_map))
            continue
        try:
            perm = _wall_permutation(iso, normals, eps)
        except ValueError as exc:
            raise ValueError(f"rule {(sc, sw)!r} -> {(tc, tw)!r}: {exc}") from None
        if perm[sw] != tw:
            raise ValueError(
                f"isometry carries wall {sw!r} to {perm[sw]!r}, not to the declared {tw!r}"
            )
        inverse = iso.inverse()
        claim((sc, sw), WallRule(sc, sw, tc, tw, iso, perm))
        claim((tc, tw), WallRule(tc, tw, sc, sw, inverse, {v: k for k, v in perm.items()}))

    built = AssembledComplex(normals, strata, copy_list, table)
    _validate_rules(built, band)
    return built


# ---------------------------------------------------------------------------
# face cycles


@dataclass(frozen=True, eq=False)
class FaceCycle:
    """The transverse cycle of copies around one image 2-face.

    ``cells`` lists the distinct (copy, face walls) entries in traversal
    order; the cone angle is the sum of their dihedral angles.  The return
    flag records whether the full traversal composes to an isometry that
    fixes the face pointwise.
    """

    cells: tuple[Cell, ...]
    total_angle: float
    return_is_identity: bool

    @property
    def length(self) -> int:
        return len(self.cells)

    def is_singular(self, eps: float = CONE_ANGLE_EPS) -> bool:
        return abs(self.total_angle - TWO_PI) > eps


def _face_plane_basis(
    normals: Mapping[str, SpaceLikeVector], walls: frozenset
) -> np.ndarray:
    """Spanning vectors of the 3-dimensional linear hull of a 2-face."""
    a, b = sorted(walls)
    j_diag = np.array([-1.0, 1.0, 1.0, 1.0, 1.0])
    rows = np.array(
        [
            j_diag * np.array([float(x) for x in normals[a].coords]),
            j_diag * np.array([float(x) for x in normals[b].coords]),
        ]
    )
    _, s, vt = np.linalg.svd(rows, full_matrices=True)
    return vt[2:]


def _fixes_pointwise(iso: IsometryMatrix, basis: np.ndarray, band: float = 1e-7) -> bool:
    matrix = np.array([[float(x) for x in row] for row in iso.rows])
    return bool(np.max(np.abs(basis @ matrix.T - basis)) <= band)


def face_cycles(complex_: AssembledComplex) -> list[FaceCycle]:
    """One cycle per image 2-face, traversed wall by wall until closure."""
    angle_of = {f.walls: f.angle for f in complex_.strata.faces}
    cycles: list[FaceCycle] = []
    visited: set[tuple] = set()
    for copy in complex_.copies:
        for face in complex_.strata.faces:
            start = (copy, face.walls, min(face.walls))
            if start in visited:
                continue
            entries: list[Cell] = []
            seen_cells: set[Cell] = set()
            states: list[tuple] = []
            composite = IDENTITY
            state = start
            while True:
                here, walls, exit_wall = state
                if (here, walls) not in seen_cells:
                    seen_cells.add((here, walls))
                    entries.append((here, walls))
                states.append(state)
                visited.add(state)
                rule = complex_.rules[(here, exit_wall)]
                composite = rule.iso.compose(composite)
                image = _apply_rule(rule, (here, walls))
                entered = rule.wall_map[exit_wall]
                (other,) = image[1] - {entered}
                state = (image[0], image[1], other)
                if state == start:
                    break
                if len(states) > _TRAVERSAL_LIMIT:
                    raise ValueError(
                        f"face cycle through {sorted(face.walls)} does not close"
                    )
            for here, walls, exit_wall in states:
                (reverse_exit,) = walls - {exit_wall}
                visited.add((here, walls, reverse_exit))
            total = sum(angle_of[walls] for _, walls in entries)
            if _is_identity(composite):
                returns = True
            else:
                basis = _face_plane_basis(complex_.normals, face.walls)
                returns = _fixes_pointwise(composite, basis)
            cycles.append(FaceCycle(tuple(entries), total, returns))
    return cycles


# ---------------------------------------------------------------------------
# singular surfaces


@dataclass(frozen=True, eq=False)
class StratumSurface:
    """A connected cone surface glued from singular image 2-faces."""

    cells: tuple[Cell, ...]
    euler_characteristic: int
    cone_points: tuple[float, ...]
    orientable: bool
    area: float
    has_boundary: bool
    transverse_angle: float

    @property
    def face_count(self) -> int:
        return len(self.cells)


class _ParityForest:
    """Union-find with a parity bit, detecting inconsistent 2-colourings."""

    def __init__(self, size: int) -> None:
        self.parent = list(range(size))
        self.rank = [0] * size
        self.offset = [0] * size
        self.conflicted = [False] * size

    def find(self, x: int) -> tuple[int, int]:
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        parity = 0
        for node in reversed(path):
            parity ^= self.offset[node]
            self.offset[node] = parity
            self.parent[node] = x
        return x, self.offset[x] if not path else parity

    def union(self, a: int, b: int, relation: int) -> None:
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            if pa ^ pb != relation:
                self.conflicted[ra] = True
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
            pa, pb = pb, pa
        self.parent[rb] = ra
        self.offset[rb] = pa ^ pb ^ relation
        self.conflicted[ra] = self.conflicted[ra] or self.conflicted[rb]
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1


_J_DIAG = np.array([-1.0, 1.0, 1.0, 1.0, 1.0])
_FRAME_SIGNS = np.array([-1.0, 1.0, 1.0])


def _float_rows(iso: IsometryMatrix) -> np.ndarray:
    return np.array([[float(x) for x in row] for row in iso.rows])


def _mdot(u: np.ndarray, v: np.ndarray) -> float:
    return float(u @ (_J_DIAG * v))


class _BaseGeometry:
    """Frames and boundary directions on the strata of the base polytope.

    All floating-point work of the surface assembly is concentrated here
    and computed once per base stratum class; the traversals consume only
    the resulting signs.  Each 2-face class carries a fixed reference frame
    (future time-like vector, two space-like spanning vectors of its plane)
    and every sign below is relative to these frames.
    """

    def __init__(self, normals: Mapping[str, SpaceLikeVector], strata: StrataComplex):
        self.normals = {
            name: np.array([float(x) for x in v.coords]) for name, v in normals.items()
        }
        self.vertex_sets = [v.walls for v in strata.finite_vertices] + [
            v.walls for v in strata.ideal_vertices
        ]
        self._frames: dict[frozenset, np.ndarray] = {}
        self._points: dict[frozenset, np.ndarray] = {}
        self._directions: dict[tuple, int] = {}
        self._characters: dict[tuple, int] = {}

    def frame(self, walls: frozenset) -> np.ndarray:
        if walls not in self._frames:
            rows = np.array([_J_DIAG * self.normals[w] for w in sorted(walls)])
            basis = np.linalg.svd(rows, full_matrices=True)[2][2:]
            gram = basis @ np.diag(_J_DIAG) @ basis.T
            values, vectors = np.linalg.eigh(gram)
            order = np.argsort(values)
            time = vectors[:, order[0]] @ basis
            time = time / math.sqrt(-_mdot(time, time))
            if time[0] < 0:
                time = -time
            spans = []
            for k in order[1:]:
                vec = vectors[:, k] @ basis
                spans.append(vec / math.sqrt(_mdot(vec, vec)))
            self._frames[walls] = np.array([time, *spans])
        return self._frames[walls]

    def vertex_point(self, walls: frozenset) -> np.ndarray:
        """The vertex as a point of the unit-time affine chart."""
        if walls not in self._points:
            rows = np.array([_J_DIAG * self.normals[w] for w in sorted(walls)])
            vec = np.linalg.svd(rows, full_matrices=True)[2][-1]
            if abs(vec[0]) < 1e-12:
                raise ValueError(f"vertex at walls {sorted(walls)} has no time component")
            self._points[walls] = vec / vec[0]
        return self._points[walls]

    def edge_endpoints(self, edge_walls: frozenset) -> tuple[frozenset, frozenset]:
        ends = sorted(
            (s for s in self.vertex_sets if edge_walls <= s),
            key=lambda s: tuple(sorted(s)),
        )
        if len(ends) != 2:
            raise ValueError(
                f"edge at walls {sorted(edge_walls)} has {len(ends)} endpoints, not 2"
            )
        return ends[0], ends[1]

    def _coefficients(self, walls: frozenset, vectors: np.ndarray) -> np.ndarray:
        """Coordinates of column vectors in the frame of one 2-face."""
        frame = self.frame(walls)
        return (_FRAME_SIGNS[:, None]) * (frame @ np.diag(_J_DIAG) @ vectors)

    def boundary_direction(self, face_walls: frozenset, edge_walls: frozenset) -> int:
        """Sign of (edge direction towards the larger endpoint, inward normal)
        against the face's reference frame."""
        key = (face_walls, edge_walls)
        if key not in self._directions:
            lo, hi = self.edge_endpoints(edge_walls)
            p_lo, p_hi = self.vertex_point(lo), self.vertex_point(hi)
            mid = (p_lo + p_hi) / 2
            p = mid / math.sqrt(-_mdot(mid, mid))
            along = p_hi - mid
            along = along + _mdot(along, p) * p
            corners = [s for s in self.vertex_sets if face_walls <= s]
            centre = np.mean([self.vertex_point(s) for s in corners], axis=0)
            inward = centre - mid
            inward = inward + _mdot(inward, p) * p
            inward = inward - (_mdot(inward, along) / _mdot(along, along)) * along
            det = np.linalg.det(self._coefficients(face_walls, np.array([p, along, inward]).T))
            if abs(det) < 1e-12:
                raise ValueError(
                    f"degenerate side geometry at face {sorted(face_walls)}, "
                    f"edge {sorted(edge_walls)}"
                )
            self._directions[key] = 1 if det > 0 else -1
        return self._directions[key]

    def step_character(self, rule: WallRule, walls: frozenset) -> int:
        """Orientation sign of one gluing step between two 2-face planes."""
        key = (rule.iso.key(), tuple(sorted(walls)))
        if key not in self._characters:
            target = frozenset(rule.wall_map[w] for w in walls)
            moved = _float_rows(rule.iso) @ self.frame(walls).T
            det = np.linalg.det(self._coefficients(target, moved))
            if abs(abs(det) - 1.0) > 1e-6:
                raise ValueError(
                    f"isometry does not carry the plane of face {sorted(walls)} "
                    f"onto the plane of face {sorted(target)}"
                )
            self._characters[key] = 1 if det > 0 else -1
        return self._characters[key]


def _slot_key(slot: tuple[Cell, frozenset]) -> tuple:
    (copy, edge_walls), pair = slot
    return (repr(copy), tuple(sorted(edge_walls)), tuple(sorted(pair)))


def _link_classes(
    complex_: AssembledComplex, slots: Sequence[tuple[Cell, frozenset]]
) -> list[set]:
    """Orbits of (edge cell, face pair) under the rules of the pair's walls.

    In the link sphere of the edge these are the vertex classes cut out by
    the singular faces: corners in one class lie on a single sheet of a
    surface reaching the edge, distinct classes are distinct sheets.
    """
    remaining = set(slots)
    classes = []
    while remaining:
        seed = min(remaining, key=_slot_key)
        remaining.discard(seed)
        group = {seed}
        stack = [seed]
        while stack:
            edge_cell, pair = stack.pop()
            for w in pair:
                rule = complex_.rules[(edge_cell[0], w)]
                image = (
                    _apply_rule(rule, edge_cell),
                    frozenset(rule.wall_map[x] for x in pair),
                )
                if image not in group:
                    group.add(image)
                    remaining.discard(image)
                    stack.append(image)
        classes.append(group)
    return classes


def _edge_direction_tags(
    complex_: AssembledComplex, base: _BaseGeometry, orbit: frozenset
) -> tuple[dict[Cell, int], bool]:
    """Directions of the edge cells of one orbit against the base endpoints.

    The root cell's lower endpoint label is transported through the wall
    maps; a clash with an already assigned label means some identification
    reverses the edge, which forces any surface glued across it to be
    non-orientable.
    """
    root = min(orbit, key=_cell_sort_key)
    tags = {root: base.edge_endpoints(root[1])[0]}
    queue = [root]
    consistent = True
    while queue:
        cell = queue.pop()
        copy, walls = cell
        for w in walls:
            rule = complex_.rules[(copy, w)]
            image = _apply_rule(rule, cell)
            moved = frozenset(rule.wall_map[x] for x in tags[cell])
            if image in tags:
                if tags[image] != moved:
                    consistent = False
            else:
                tags[image] = moved
                queue.append(image)
    directions = {
        cell: 1 if tags[cell] == base.edge_endpoints(cell[1])[0] else -1
        for cell in tags
    }
    return directions, consistent


def _transverse_orientations(
    complex_: AssembledComplex, seed: Cell, base: _BaseGeometry
) -> tuple[dict[Cell, int], bool]:
    """Orientation signs over one image face's cells; False on a folded cycle."""
    orient = {seed: 1}
    stack = [seed]
    consistent = True
    while stack:
        cell = stack.pop()
        copy, walls = cell
        for w in walls:
            rule = complex_.rules[(copy, w)]
            image = _apply_rule(rule, cell)
            value = orient[cell] * base.step_character(rule, walls)
            if image in orient:
                if orient[image] != value:
                    consistent = False
            else:
                orient[image] = value
                stack.append(image)
    return orient, consistent


def stratum_surfaces(
    complex_: AssembledComplex, eps: Optional[float] = None
) -> list[StratumSurface]:
    """Glue the singular image faces into cone surfaces.

    Around every image edge, the corners of the incident singular faces
    fall into link classes, and a surface continues across the edge between
    the exactly two singular classes found there.  An edge whose link
    carries one or more than two singular classes lies in the closure of
    lower singular strata, so the incident surfaces are flagged as having
    geodesic boundary and are not glued across it.  Orientations are
    transported with explicit base-polytope frames, making the coherence
    test honest for twisted pairings.
    """
    cycles = face_cycles(complex_)
    singular = [i for i, cy in enumerate(cycles) if cy.is_singular()]
    if not singular:
        return []
    cycle_of: dict[Cell, int] = {}
    for index, cycle in enumerate(cycles):
        for cell in cycle.cells:
            cycle_of[cell] = index

    base = _BaseGeometry(complex_.normals, complex_.strata)
    geometry: dict[frozenset, FaceGeometry] = {}

    def geom(walls: frozenset) -> FaceGeometry:
        if walls not in geometry:
            geometry[walls] = face_geometry(complex_.normals, complex_.strata, walls, eps)
        return geometry[walls]

    sides_of: dict[frozenset, list[frozenset]] = {}
    face_sets = {f.walls for f in complex_.strata.faces}
    for edge in complex_.strata.edges:
        for pair in itertools.combinations(sorted(edge.walls), 2):
            walls = frozenset(pair)
            if walls in face_sets:
                sides_of.setdefault(walls, []).append(edge.walls)

    orient: dict[Cell, int] = {}
    folded: dict[int, bool] = {}
    for index in singular:
        values, consistent = _transverse_orientations(
            complex_, cycles[index].cells[0], base
        )
        orient.update(values)
        folded[index] = not consistent

    position = {index: slot for slot, index in enumerate(singular)}
    forest = _ParityForest(len(singular))
    edge_records: list[tuple[int, tuple]] = []
    boundary_slots: set[int] = set()
    ambient_keys: dict[Cell, tuple] = {}
    orbit_of_key: dict[tuple, frozenset] = {}

    def ambient_key(cell: Cell) -> tuple:
        if cell not in ambient_keys:
            orb = complex_.orbit(cell)
            key = _orbit_key(orb)
            orbit_of_key[key] = orb
            for member in orb:
                ambient_keys[member] = key
        return ambient_keys[cell]

    edge_slots: dict[tuple, list[tuple]] = {}
    singular_cells = [cell for i in singular for cell in cycles[i].cells]
    for cell in singular_cells:
        copy, walls = cell
        me = position[cycle_of[cell]]
        for edge_walls in sides_of[walls]:
            key = ambient_key((copy, edge_walls))
            edge_records.append((me, key))
            edge_slots.setdefault(key, []).append(((copy, edge_walls), walls))

    for key, slots in sorted(edge_slots.items()):
        classes = _link_classes(complex_, slots)
        if len(classes) != 2:
            boundary_slots.update(
                position[cycle_of[(edge_cell[0], pair)]]
                for cls in classes
                for edge_cell, pair in cls
            )
            continue
        transported, tag_consistent = _edge_direction_tags(
            complex_, base, orbit_of_key[key]
        )
        first, second = sorted(
            (min(cls, key=_slot_key) for cls in classes), key=_slot_key
        )
        cell_a, pair_a = first
        cell_b, pair_b = second
        slot_a = position[cycle_of[(cell_a[0], pair_a)]]
        slot_b = position[cycle_of[(cell_b[0], pair_b)]]
        if not tag_consistent:
            forest.union(slot_a, slot_b, 0)
            forest.union(slot_a, slot_b, 1)
            continue
        tau = transported[cell_a] * transported[cell_b]
        character = -(
            orient[(cell_a[0], pair_a)]
            * base.boundary_direction(pair_a, cell_a[1])
            * tau
            * orient[(cell_b[0], pair_b)]
            * base.boundary_direction(pair_b, cell_b[1])
        )
        forest.union(slot_a, slot_b, 0 if character > 0 else 1)

    corner_records: list[tuple[int, tuple, float]] = []
    seen_corners: set[tuple] = set()
    for cell in singular_cells:
        copy, walls = cell
        me = position[cycle_of[cell]]
        shape = geom(walls)
        for angle, finite, vertex in zip(
            shape.interior_angles, shape.vertex_finite, shape.vertex_walls
        ):
            if not finite:
                continue
            corner = (cell, vertex)
            if corner in seen_corners:
                continue
            orbit = {corner}
            stack = [corner]
            while stack:
                (c, s), vw = stack.pop()
                for w in s:
                    rule = complex_.rules[(c, w)]
                    moved = (
                        _apply_rule(rule, (c, s)),
                        frozenset(rule.wall_map[x] for x in vw),
                    )
                    if moved not in orbit:
                        orbit.add(moved)
                        stack.append(moved)
            seen_corners |= orbit
            corner_records.append((me, ambient_key((copy, vertex)), angle))

    components: dict[int, list[int]] = {}
    for index in singular:
        root, _ = forest.find(position[index])
        components.setdefault(root, []).append(index)

    surfaces = []
    for root, members in sorted(components.items()):
        cells = [cycles[i].cells[0] for i in members]
        member_slots = {position[i] for i in members}
        edges = {key for slot, key in edge_records if forest.find(slot)[0] == root}
        sums: dict[tuple, float] = {}
        for slot, vertex_key, angle in corner_records:
            if forest.find(slot)[0] == root:
                sums[vertex_key] = sums.get(vertex_key, 0.0) + angle
        euler = len(sums) - len(edges) + len(members)
        cone_points = tuple(
            sorted(total for total in sums.values() if abs(total - TWO_PI) > CONE_ANGLE_EPS)
        )
        area = sum(geom(cycles[i].cells[0][1]).area for i in members)
        has_boundary = bool(member_slots & boundary_slots)
        orientable = not forest.conflicted[root] and not any(folded[i] for i in members)
        surfaces.append(
            StratumSurface(
                cells=tuple(sorted(cells, key=_cell_sort_key)),
                euler_characteristic=euler,
                cone_points=cone_points,
                orientable=orientable,
                area=area,
                has_boundary=has_boundary,
                transverse_angle=cycles[members[0]].total_angle,
            )
        )
    surfaces.sort(key=lambda s: _cell_sort_key(s.cells[0]))
    return surfaces


# ---------------------------------------------------------------------------
# cusp cycles


@dataclass(frozen=True, eq=False)
class CuspCycle:
    """The circle of (copy, ideal vertex) cells around one cusp.

    When the cusp section fibres through exactly two paired walls, the
    cells follow that circle and the monodromy sign is the product of the
    pairing isometries' orientations; a purely mirrored cusp lists its
    whole orbit with sign +1.
    """

    cells: tuple[Cell, ...]
    monodromy_sign: int

    @property
    def length(self) -> int:
        return len(self.cells)


def _pairing_walls(complex_: AssembledComplex, cell: Cell) -> list[str]:
    copy, walls = cell
    return sorted(
        w for w in walls if not _is_identity(complex_.rules[(copy, w)].iso)
    )


def _cusp_chain(
    complex_: AssembledComplex, cell: Cell
) -> Optional[tuple[tuple[Cell, ...], int]]:
    paired = _pairing_walls(complex_, cell)
    if len(paired) != 2:
        return None
    start = (cell, paired[0])
    entries: list[Cell] = []
    sign = 1
    state = start
    while True:
        (copy, walls), exit_wall = state
        if (copy, walls) not in entries:
            entries.append((copy, walls))
        rule = complex_.rules[(copy, exit_wall)]
        sign *= rule.iso.orientation
        image = _apply_rule(rule, (copy, walls))
        entered = rule.wall_map[exit_wall]
        paired = _pairing_walls(complex_, image)
        if len(paired) != 2 or entered not in paired:
            return None
        (other,) = set(paired) - {entered}
        state = (image, other)
        if state == start:
            break
        if len(entries) > _TRAVERSAL_LIMIT:
            raise ValueError("cusp cycle does not close")
    return tuple(entries), sign


def cusp_cycles(complex_: AssembledComplex) -> list[CuspCycle]:
    """One cycle per orbit of ideal vertices."""
    result = []
    remaining = set(complex_.ideal_cells())
    for cell in complex_.ideal_cells():
        if cell not in remaining:
            continue
        orbit = complex_.orbit(cell)
        remaining -= orbit
        chain = _cusp_chain(complex_, min(orbit, key=_cell_sort_key))
        if chain is None:
            result.append(CuspCycle(tuple(sorted(orbit, key=_cell_sort_key)), 1))
        else:
            cells, sign = chain
            result.append(CuspCycle(cells, sign))
    return result


# ---------------------------------------------------------------------------
# Euler characteristic and quotients


def complex_euler_char(
    complex_: AssembledComplex, eps: Optional[float] = None
) -> Union[int, Fraction]:
    """Euler characteristic of the assembled complex.

    For a non-singular assembly this is the alternating count of interior
    cell orbits over dimensions 0..4, the topological characteristic of
    the underlying space.  When face cycles are singular but the base
    polytope is itself reflective, the cells carry orbifold weights and
    the sum telescopes to the copy count times the orbifold characteristic
    of the base; the plain count would only see the underlying space and
    miss the cone structure entirely.
    """
    plain = sum(
        (-1) ** dim * len(complex_.cell_orbits(dim)) for dim in range(5)
    )
    if not any(cycle.is_singular() for cycle in face_cycles(complex_)):
        return plain
    try:
        orders = stabilizer_orders(complex_.normals, complex_.strata, eps)
    except ValueError:
        return plain
    weighted = len(complex_.copies) * orbifold_euler_char(complex_.strata, orders)
    if weighted.denominator == 1:
        return int(weighted)
    return weighted


def involution_quotient(
    complex_: AssembledComplex,
    copy_map: Mapping[CopyId, CopyId],
    iso: IsometryMatrix,
    eps: Optional[float] = None,
) -> AssembledComplex:
    """Quotient by an order-two automorphism given as copy permutation + isometry.

    Fixed-point detection works on the cells of the glued complex: an
    orbit class carried to itself by the automorphism pins a fixed locus
    (a mirrored wall is fixed pointwise, a preserved copy holds a fixed
    centre), and quotients along such involutions are not modelled here.
    """
    band = tolerance(eps)
    if set(copy_map) != set(complex_.copies) or set(copy_map.values()) != set(
        complex_.copies
    ):
        raise ValueError("copy permutation must be a bijection on the copies")
    for copy in complex_.copies:
        if copy_map[copy_map[copy]] != copy:
            raise ValueError("copy permutation is not an involution")
    if not _matrices_close(iso.compose(iso), IDENTITY, band):
        raise ValueError("isometry is not an involution")
    identity_iso = _is_identity(iso, band)
    identity_perm = all(copy_map[c] == c for c in complex_.copies)
    if identity_iso and identity_perm:
        raise ValueError("the involution is trivial")
    if identity_iso:
        wall_perm = {w: w for w in complex_.normals}
    else:
        wall_perm = _wall_permutation(iso, complex_.normals, eps)

    for (copy, wall), rule in complex_.rules.items():
        partner = complex_.rules[(copy_map[copy], wall_perm[wall])]
        target_matches = (
            partner.target_copy == copy_map[rule.target_copy]
            and partner.target_wall == wall_perm[rule.target_wall]
        )
        conjugated = iso.compose(rule.iso).compose(iso.inverse())
        if not target_matches or not _matrices_close(partner.iso, conjugated, band):
            raise ValueError(
                f"the involution does not preserve the identification at {(copy, wall)!r}"
            )

    fixed: list[tuple[int, Cell]] = []
    for dim in range(4, -1, -1):
        for orbit in complex_.cell_orbits(dim):
            image = frozenset(
                (copy_map[c], frozenset(wall_perm[w] for w in s)) for c, s in orbit
            )
            if image == orbit:
                fixed.append((dim, min(orbit, key=_cell_sort_key)))
    if fixed:
        sample = ", ".join(
            f"dim {dim}: copy {cell[0]!r} walls {sorted(cell[1])}" for dim, cell in fixed[:6]
        )
        raise ValueError(f"the involution has {len(fixed)} fixed cells ({sample})")

    representatives = []
    seen = set()
    for copy in complex_.copies:
        if copy in seen:
            continue
        representatives.append(copy)
        seen.add(copy)
        seen.add(copy_map[copy])

    def project(copy: CopyId, wall: str, step_iso: IsometryMatrix, step_map):
        if copy in representatives:
            return copy, wall, step_iso, step_map
        return (
            copy_map[copy],
            wall_perm[wall],
            iso.compose(step_iso),
            {k: wall_perm[v] for k, v in step_map.items()},
        )

    rules: dict[tuple, WallRule] = {}
    for copy in representatives:
        for wall in complex_.normals:
            rule = complex_.rules[(copy, wall)]
            target_copy, target_wall, new_iso, new_map = project(
                rule.target_copy, rule.target_wall, rule.iso, dict(rule.wall_map)
            )
            rules[(copy, wall)] = WallRule(
                copy, wall, target_copy, target_wall, new_iso, new_map
            )

    built = AssembledComplex(
        dict(complex_.normals), complex_.strata, tuple(representatives), rules
    )
    _validate_rules(built, band)
    return built


# ---------------------------------------------------------------------------
# the built-in family patterns


def family_pairing_rules(
    time: Union[FamilyTime, float], eps: Optional[float] = None
) -> tuple[tuple[CopyId, ...], list[PairingRule]]:
    """Copies and rules of the four-copy wall pairing.

    Letter walls are mirrored across the first index, negative walls across
    the second, and the positive walls of every copy are paired among
    themselves by the four wall-pairing isometries.
    """
    ft = FamilyTime.of(time)
    normals = ks_normals(ft)
    copies: tuple[CopyId, ...] = ((0, 0), (0, 1), (1, 0), (1, 1))
    rules: list[PairingRule] = []
    pairings = pairing_isometries()
    targets = {
        name: _wall_permutation(iso, normals, eps)[name] for name, iso in pairings.items()
    }
    for name in sorted(normals):
        kind = WallName.parse(name).kind
        if kind is WallKind.LETTER:
            for j in (0, 1):
                rules.append((((0, j), name), ((1, j), name), IDENTITY))
        elif kind is WallKind.NEGATIVE:
            for i in (0, 1):
                rules.append((((i, 0), name), ((i, 1), name), IDENTITY))
    for copy in copies:
        for name, iso in sorted(pairings.items()):
            rules.append(((copy, name), (copy, targets[name]), iso))
    return copies, rules


def assemble_pattern(
    pattern: str, time: Union[FamilyTime, float], eps: Optional[float] = None
) -> AssembledComplex:
    """The three built-in complexes over the deforming polytope.

    ``W`` mirrors the three octets into 8 copies, ``N`` is the four-copy
    wall pairing, and ``M`` is its quotient by the fixed-point-free
    involution combining the copy swap with the central point reflection.
    """
    ft = FamilyTime.of(time)
    if pattern == "W":
        normals = ks_normals(ft)
        return mirror_complex(normals, octet_colouring(normals), eps=eps)
    if pattern == "N":
        copies, rules = family_pairing_rules(ft, eps)
        return pairing_complex(ks_normals(ft), copies, rules, eps=eps)
    if pattern == "M":
        base = assemble_pattern("N", ft, eps)
        swap = {copy: (1 - copy[0], 1 - copy[1]) for copy in base.copies}
        return involution_quotient(base, swap, central_involution(), eps=eps)
    raise ValueError(f"unknown assembly pattern: {pattern!r}")


# ---------------------------------------------------------------------------
# JSON interface


def _copy_from_json(value):
    if isinstance(value, list):
        return tuple(_copy_from_json(v) for v in value)
    return value


def _copy_to_json(value):
    if isinstance(value, tuple):
        return [_copy_to_json(v) for v in value]
    return value


def _cell_to_json(cell: Cell) -> dict:
    copy, walls = cell
    return {"copy": _copy_to_json(copy), "walls": sorted(walls)}


def assemble_from_json(data: Mapping, eps: Optional[float] = None) -> AssembledComplex:
    """Build a complex from its JSON description.

    The description names a base polytope preset ("P@0.9", "Q@t1", or a
    bare time label for the full polytope) and carries either a colouring
    {wall: colour} or a pairing list [{from: [copy, wall], to: [copy,
    wall], iso: 5x5 matrix}].
    """
    base = str(data.get("base", ""))
    tag, _, token = base.rpartition("@")
    ft = FamilyTime.parse(token if token else base)
    if tag in ("", "P"):
        normals = ks_normals(ft)
    elif tag == "Q":
        normals = quotient_normals(ft)
    else:
        raise ValueError(f"unknown base polytope tag: {tag!r}")
    has_colouring = "colouring" in data
    has_pairings = "pairings" in data
    if has_colouring == has_pairings:
        raise ValueError("exactly one of 'colouring' and 'pairings' must be given")
    if has_colouring:
        colouring = MirrorColouring({str(w): int(c) for w, c in data["colouring"].items()})
        return mirror_complex(normals, colouring, eps=eps)
    rules: list[PairingRule] = []
    copies: list[CopyId] = []
    for entry in data["pairings"]:
        source_copy = _copy_from_json(entry["from"][0])
        target_copy = _copy_from_json(entry["to"][0])
        for copy in (source_copy, target_copy):
            if copy not in copies:
                copies.append(copy)
        iso = IsometryMatrix(tuple(tuple(row) for row in entry["iso"]))
        rules.append(
            ((source_copy, str(entry["from"][1])), (target_copy, str(entry["to"][1])), iso)
        )
    return pairing_complex(normals, copies, rules, eps=eps)


def complex_report(complex_: AssembledComplex, eps: Optional[float] = None) -> dict:
    """JSON-ready summary: cycles, surfaces, cusps and the Euler characteristic."""
    cycles = face_cycles(complex_)
    surfaces = stratum_surfaces(complex_, eps)
    cusps = cusp_cycles(complex_)
    singular = [cy for cy in cycles if cy.is_singular()]
    chi = complex_euler_char(complex_, eps)
    return {
        "copies": [_copy_to_json(c) for c in complex_.copies],
        "walls_per_copy": len(complex_.normals),
        "euler_characteristic": chi if isinstance(chi, int) else f"{chi}",
        "face_cycles": {
            "count": len(cycles),
            "smooth": len(cycles) - len(singular),
            "singular": [
                {
                    "length": cy.length,
                    "total_angle": cy.total_angle,
                    "return_is_identity": cy.return_is_identity,
                    "cells": [_cell_to_json(cell) for cell in cy.cells],
                }
                for cy in singular
            ],
        },
        "surfaces": [
            {
                "faces": surface.face_count,
                "euler_characteristic": surface.euler_characteristic,
                "cone_points": list(surface.cone_points),
                "orientable": surface.orientable,
                "area": surface.area,
                "has_boundary": surface.has_boundary,
                "transverse_angle": surface.transverse_angle,
            }
            for surface in surfaces
        ],
        "cusps": [
            {
                "length": cusp.length,
                "monodromy_sign": cusp.monodromy_sign,
                "cells": [_cell_to_json(cell) for cell in cusp.cells],
            }
            for cusp in cusps
        ],
    }
