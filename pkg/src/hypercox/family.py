"""The deforming polytope family and its symmetries.

A one-parameter family of finite-volume hyperbolic 4-polytopes is cut out by
24 explicit space-like normals depending on t in (0,1]: eight "positive"
walls p0..p7, eight "negative" walls m0..m7 and eight "letter" walls A..H.
Two of the letter walls degenerate at t2 = sqrt(1/2) and are dropped for
t <= t2, leaving 22 walls.  Three additional mirror walls L, M, N cut the
polytope down to a quotient chunk with 10 (or 8) walls.

Two parameter values are critical: the combinatorics changes at t2 and at
t1 = sqrt(3/5), and the essential dihedral angles admit closed forms in t.
At tbar = sqrt(1/3) all dihedral angles are right.

The module also carries the finite symmetry group generated by the three
mirror reflections and the roll rotation, and the four wall-pairing
isometries used to assemble manifolds from copies of the polytope.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Union

from .arith import MultiQuad, is_exact, sign_of
from .lorentz import (
    LorentzPoint,
    PairRelation,
    RelationKind,
    Scalar,
    SpaceLikeVector,
    minkowski_product,
    pair_relation,
    point_side,
    tolerance,
)

T2_SQUARED = Fraction(1, 2)
T1_SQUARED = Fraction(3, 5)
TBAR_SQUARED = Fraction(1, 3)


class Regime(Enum):
    """Position of t relative to the critical times t2 < t1 < 1."""

    BELOW_T2 = "(0,t2)"
    AT_T2 = "t2"
    BETWEEN = "(t2,t1)"
    AT_T1 = "t1"
    ABOVE_T1 = "(t1,1)"
    AT_ONE = "1"


_PRESET_SQUARES = {
    "1": Fraction(1),
    "t1": T1_SQUARED,
    "t2": T2_SQUARED,
    "tbar": TBAR_SQUARED,
}


def _regime_of_square(square: float, eps: float) -> Regime:
    for value, regime in (
        (1.0, Regime.AT_ONE),
        (0.6, Regime.AT_T1),
        (0.5, Regime.AT_T2),
    ):
        if abs(square - value) <= eps:
            return regime
    if square > 0.6:
        return Regime.ABOVE_T1
    if square > 0.5:
        return Regime.BETWEEN
    return Regime.BELOW_T2


@dataclass(frozen=True)
class FamilyTime:
    """A parameter value t in (0,1], exact when t^2 is rational.

    Exact times track t_squared as a Fraction and expose t itself as a
    MultiQuad, so that every table normal lives in the multiquadratic ring;
    numeric times carry binary64 only.
    """

    t: Scalar
    t_squared: Optional[Fraction]
    regime: Regime

    @classmethod
    def exact(cls, t_squared) -> "FamilyTime":
        square = Fraction(t_squared)
        if not 0 < square <= 1:
            raise ValueError(f"t out of range: t^2 = {square}")
        if square == 1:
            regime = Regime.AT_ONE
        elif square == T1_SQUARED:
            regime = Regime.AT_T1
        elif square == T2_SQUARED:
            regime = Regime.AT_T2
        elif square > T1_SQUARED:
            regime = Regime.ABOVE_T1
        elif square > T2_SQUARED:
            regime = Regime.BETWEEN
        else:
            regime = Regime.BELOW_T2
        return cls(MultiQuad.root(square), square, regime)

    @classmethod
    def numeric(cls, t: float, eps: Optional[float] = None) -> "FamilyTime":
        value = float(t)
        band = tolerance(eps)
        if not band < value <= 1.0 + band:
            raise ValueError(f"t out of range: {value}")
        return cls(min(value, 1.0), None, _regime_of_square(value * value, band))

    @classmethod
    def of(cls, value: Union["FamilyTime", float, Fraction, int]) -> "FamilyTime":
        """Coerce a bare parameter: rationals become exact times, floats numeric."""
        if isinstance(value, FamilyTime):
            return value
        if isinstance(value, (int, Fraction)):
            return cls.exact(Fraction(value) ** 2)
        return cls.numeric(value)

    @classmethod
    def parse(cls, token: str) -> "FamilyTime":
        """Parse a time label: ``1``, ``t1``, ``t2``, ``tbar``, ``sqrt(p/q)``, or a decimal."""
        text = token.strip()
        if text in _PRESET_SQUARES:
            return cls.exact(_PRESET_SQUARES[text])
        match = re.fullmatch(r"sqrt\(\s*([0-9]+(?:/[0-9]+)?)\s*\)", text)
        if match:
            return cls.exact(Fraction(match.group(1)))
        try:
            value = float(text)
        except ValueError:
            raise ValueError(f"unrecognized time label: {token!r}") from None
        return cls.numeric(value)

    @property
    def is_exact(self) -> bool:
        return self.t_squared is not None

    @property
    def square(self) -> Scalar:
        """t^2 in the backend of this time."""
        if self.t_squared is not None:
            return self.t_squared
        return self.t * self.t

    def has_degenerate_letters(self) -> bool:
        """Whether the two time-direction letter walls are missing (t <= t2)."""
        return self.regime in (Regime.BELOW_T2, Regime.AT_T2)


class WallKind(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    LETTER = "letter"
    MIRROR = "mirror"


@dataclass(frozen=True)
class WallName:
    """Structured wall identifier: p0..p7, m0..m7, A..H, or L/M/N."""

    kind: WallKind
    label: str

    @classmethod
    def parse(cls, name: str) -> "WallName":
        if re.fullmatch(r"p[0-7]", name):
            return cls(WallKind.POSITIVE, name)
        if re.fullmatch(r"m[0-7]", name):
            return cls(WallKind.NEGATIVE, name)
        if name in "ABCDEFGH" and len(name) == 1:
            return cls(WallKind.LETTER, name)
        if name in ("L", "M", "N"):
            return cls(WallKind.MIRROR, name)
        raise ValueError(f"unknown wall name: {name!r}")

    @property
    def index(self) -> Optional[int]:
        """Octet index for positive/negative walls, None otherwise."""
        if self.kind in (WallKind.POSITIVE, WallKind.NEGATIVE):
            return int(self.label[1])
        return None

    def __str__(self) -> str:
        return self.label


# Spatial sign patterns of the octets; the last coordinate of the i-th
# positive wall carries sign (-1)^i, the i-th negative wall the opposite.
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

_LETTER_AXES = {"A": (1, 1), "B": (2, 1), "C": (3, 1), "D": (3, -1), "E": (2, -1), "F": (1, -1)}

MIRROR_NORMALS = {
    "L": (0, -1, 1, 0, 0),
    "M": (0, 0, -1, 1, 0),
    "N": (0, 0, -1, -1, 0),
}

QUOTIENT_WALL_ORDER = ("p0", "m0", "p3", "m3", "G", "H", "A", "L", "M", "N")


def ks_normals(time: Union[FamilyTime, float, Fraction]) -> dict[str, SpaceLikeVector]:
    """The defining normals of the polytope at a time, unnormalized as printed.

    Returns 24 walls for t > t2 and 22 (without G and H) for t <= t2, in the
    order p0, m0, .., p7, m7, A, .., F (, G, H).
    """
    ft = FamilyTime.of(time)
    if ft.is_exact:
        t: Scalar = ft.t if isinstance(ft.t, MultiQuad) else MultiQuad(ft.t)
        inv_t: Scalar = t.inverse()
        root2: Scalar = MultiQuad.root(2)
    else:
        t = float(ft.t)
        inv_t = 1.0 / t
        root2 = math.sqrt(2.0)
    walls: dict[str, SpaceLikeVector] = {}
    for i, (s1, s2, s3) in enumerate(_OCTET_SIGNS):
        sign = 1 if i % 2 == 0 else -1
        walls[f"p{i}"] = SpaceLikeVector((root2, s1, s2, s3, sign * inv_t))
        walls[f"m{i}"] = SpaceLikeVector((root2, s1, s2, s3, -sign * t))
    for letter, (axis, sign) in _LETTER_AXES.items():
        coords: list[Scalar] = [1, 0, 0, 0, 0]
        coords[axis] = sign * root2
        walls[letter] = SpaceLikeVector(tuple(coords))
    if not ft.has_degenerate_letters():
        walls["G"] = SpaceLikeVector((1, 0, 0, 0, -root2 * t))
        walls["H"] = SpaceLikeVector((1, 0, 0, 0, root2 * t))
    return walls


def quotient_normals(time: Union[FamilyTime, float, Fraction]) -> dict[str, SpaceLikeVector]:
    """Walls of the quotient chunk: the surviving polytope walls plus the mirrors.

    10 walls (p0, m0, p3, m3, G, H, A, L, M, N) for t > t2, 8 without G and H.
    """
    ft = FamilyTime.of(time)
    ambient = ks_normals(ft)
    walls: dict[str, SpaceLikeVector] = {}
    for name in QUOTIENT_WALL_ORDER:
        if name in MIRROR_NORMALS:
            coords = MIRROR_NORMALS[name]
            if not ft.is_exact:
                coords = tuple(float(x) for x in coords)
            walls[name] = SpaceLikeVector(coords)
        elif name in ambient:
            walls[name] = ambient[name]
    return walls


# ---------------------------------------------------------------------------
# closed-form dihedral angles


def _square_of(time: Union[FamilyTime, float, Fraction]) -> tuple[FamilyTime, float]:
    ft = FamilyTime.of(time)
    return ft, float(ft.square)


def _safe_acos(x: float) -> float:
    return math.acos(max(-1.0, min(1.0, x)))


def angle_theta(time: Union[FamilyTime, float, Fraction]) -> float:
    """Common angle of the twelve deforming faces: cos = (3t^2-1)/(1+t^2)."""
    _, x = _square_of(time)
    return _safe_acos((3.0 * x - 1.0) / (1.0 + x))


def angle_phi(time: Union[FamilyTime, float, Fraction], eps: Optional[float] = None) -> float:
    """Angle at the two degenerating letter walls, defined for t in [t1,1]:
    cos = sqrt(2)(1-t^2)/sqrt((2t^2-1)(t^2+1))."""
    _, x = _square_of(time)
    if x < 0.6 - tolerance(eps):
        raise ValueError(f"angle undefined below t1: t^2 = {x}")
    if x <= 0.6:
        return 0.0
    return _safe_acos(math.sqrt(2.0) * (1.0 - x) / math.sqrt((2.0 * x - 1.0) * (x + 1.0)))


def angle_psi(time: Union[FamilyTime, float, Fraction], eps: Optional[float] = None) -> float:
    """Angle of the triangular faces appearing for t <= t1: cos = (1-3t^2)/(2(t^2-1))."""
    _, x = _square_of(time)
    if x > 0.6 + tolerance(eps):
        raise ValueError(f"angle undefined above t1: t^2 = {x}")
    if x >= 0.6:
        return 0.0
    return _safe_acos((1.0 - 3.0 * x) / (2.0 * (x - 1.0)))


def angle_eta(time: Union[FamilyTime, float, Fraction], eps: Optional[float] = None) -> float:
    """Apex angle of the shrinking tetrahedral links for t <= t2: cos = (3t^2-1)/(3-5t^2)."""
    _, x = _square_of(time)
    if x > 0.5 + tolerance(eps):
        raise ValueError(f"angle undefined above t2: t^2 = {x}")
    if x >= 0.5:
        return 0.0
    return _safe_acos((3.0 * x - 1.0) / (3.0 - 5.0 * x))


# ---------------------------------------------------------------------------
# isometries


_J_DIAGONAL = (-1, 1, 1, 1, 1)


@dataclass(frozen=True)
class IsometryMatrix:
    """A 5x5 matrix preserving the Lorentzian form, with its orientation sign."""

    rows: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        if len(rows) != 5 or any(len(r) != 5 for r in rows):
            raise ValueError("isometry matrix must be 5x5")
        for i in range(5):
            for j in range(i, 5):
                total = sum(_J_DIAGONAL[k] * rows[k][i] * rows[k][j] for k in range(5))
                target = _J_DIAGONAL[i] if i == j else 0
                residual = total - target
                if sign_of(residual, 0.0 if is_exact(residual) else tolerance(None)) != 0:
                    raise ValueError("matrix does not preserve the Lorentzian form")

    @classmethod
    def from_coordinate_map(cls, images: Sequence[tuple[int, int]]) -> "IsometryMatrix":
        """Signed coordinate substitution: entry i of `images` is (source, sign),
        meaning output coordinate i equals sign * x_source."""
        rows = []
        for source, sign in images:
            row = [0] * 5
            row[source] = sign
            rows.append(tuple(row))
        return cls(tuple(rows))

    def apply(self, vector: Sequence[Scalar]) -> tuple[Scalar, ...]:
        coords = tuple(vector.coords if isinstance(vector, SpaceLikeVector) else vector)
        return tuple(sum(r * x for r, x in zip(row, coords)) for row in self.rows)

    def compose(self, other: "IsometryMatrix") -> "IsometryMatrix":
        """Matrix product: self after other."""
        rows = tuple(
            tuple(sum(self.rows[i][k] * other.rows[k][j] for k in range(5)) for j in range(5))
            for i in range(5)
        )
        return IsometryMatrix(rows)

    def inverse(self) -> "IsometryMatrix":
        """J Q^T J, which inverts any J-orthogonal Q."""
        rows = tuple(
            tuple(_J_DIAGONAL[i] * self.rows[j][i] * _J_DIAGONAL[j] for j in range(5))
            for i in range(5)
        )
        return IsometryMatrix(rows)

    @property
    def orientation(self) -> int:
        """Sign of the determinant (equivalently of its spatial part here)."""
        matrix = [[float(x) for x in row] for row in self.rows]
        det = 1.0
        for col in range(5):
            pivot = max(range(col, 5), key=lambda r: abs(matrix[r][col]))
            if abs(matrix[pivot][col]) < 1e-12:
                return 0
            if pivot != col:
                matrix[col], matrix[pivot] = matrix[pivot], matrix[col]
                det = -det
            det *= matrix[col][col]
            for r in range(col + 1, 5):
                f = matrix[r][col] / matrix[col][col]
                for c in range(col, 5):
                    matrix[r][c] -= f * matrix[col][c]
        return 1 if det > 0 else -1

    def key(self) -> tuple:
        """Hashable exact form, valid for integer matrices."""
        return tuple(tuple(int(x) for x in row) for row in self.rows)


IDENTITY = IsometryMatrix.from_coordinate_map([(0, 1), (1, 1), (2, 1), (3, 1), (4, 1)])


def symmetry_generators() -> dict[str, IsometryMatrix]:
    """Reflections in the three mirror walls and the roll rotation."""
    return {
        "L": IsometryMatrix.from_coordinate_map([(0, 1), (2, 1), (1, 1), (3, 1), (4, 1)]),
        "M": IsometryMatrix.from_coordinate_map([(0, 1), (1, 1), (3, 1), (2, 1), (4, 1)]),
        "N": IsometryMatrix.from_coordinate_map([(0, 1), (1, 1), (3, -1), (2, -1), (4, 1)]),
        "R": IsometryMatrix.from_coordinate_map([(0, 1), (1, 1), (2, 1), (3, -1), (4, -1)]),
    }


def pairing_isometries() -> dict[str, IsometryMatrix]:
    """The four isometries pairing odd positive walls with even ones.

    Keyed by the odd wall they remove: p1 maps to p0, p3 to p2, p5 to p6
    and p7 to p4; the p7 pairing is the inverse of the p1 pairing.
    """
    return {
        "p1": IsometryMatrix.from_coordinate_map([(0, 1), (3, 1), (1, 1), (2, -1), (4, -1)]),
        "p3": IsometryMatrix.from_coordinate_map([(0, 1), (2, 1), (3, 1), (1, -1), (4, -1)]),
        "p5": IsometryMatrix.from_coordinate_map([(0, 1), (3, -1), (1, 1), (2, 1), (4, -1)]),
        "p7": IsometryMatrix.from_coordinate_map([(0, 1), (2, 1), (3, -1), (1, 1), (4, -1)]),
    }


def central_involution() -> IsometryMatrix:
    """The spatial point reflection negating all four space coordinates."""
    return IsometryMatrix.from_coordinate_map([(0, 1), (1, -1), (2, -1), (3, -1), (4, -1)])


def generated_group(generators: Sequence[IsometryMatrix]) -> list[IsometryMatrix]:
    """Closure of integer matrices under composition (breadth-first)."""
    seen = {IDENTITY.key(): IDENTITY}
    frontier = [IDENTITY]
    while frontier:
        nxt = []
        for element in frontier:
            for g in generators:
                candidate = g.compose(element)
                key = candidate.key()
                if key not in seen:
                    seen[key] = candidate
                    nxt.append(candidate)
        frontier = nxt
    return list(seen.values())


def _proportional(
    image: Sequence[Scalar], candidate: Sequence[Scalar], eps: float
) -> bool:
    """Whether image = lambda * candidate with lambda > 0."""
    ratio: Optional[Scalar] = None
    for a, b in zip(image, candidate):
        a_zero = sign_of(a, 0.0 if is_exact(a) else eps) == 0
        b_zero = sign_of(b, 0.0 if is_exact(b) else eps) == 0
        if a_zero != b_zero:
            return False
        if a_zero:
            continue
        if ratio is None:
            if is_exact(a) and is_exact(b):
                ratio = MultiQuad(a) * MultiQuad(b).inverse()
            else:
                ratio = float(a) / float(b)
            if sign_of(ratio, 0.0 if is_exact(ratio) else eps) <= 0:
                return False
        else:
            residual = a - ratio * b
            if sign_of(residual, 0.0 if is_exact(residual) else eps) != 0:
                return False
    return ratio is not None


def verify_symmetry(
    iso: IsometryMatrix,
    time: Union[FamilyTime, float, Fraction],
    normals: Optional[dict[str, SpaceLikeVector]] = None,
    eps: Optional[float] = None,
) -> dict[str, str]:
    """Induced permutation of a wall set, defaulting to the full polytope walls.

    Raises ValueError when some image normal is not a positive multiple of a
    wall in the set.
    """
    if normals is None:
        normals = ks_normals(time)
    band = tolerance(eps)
    permutation: dict[str, str] = {}
    for name, normal in normals.items():
        image = iso.apply(normal)
        target = next(
            (other for other, candidate in normals.items()
             if _proportional(image, candidate.coords, band)),
            None,
        )
        if target is None:
            raise ValueError(f"isometry does not preserve the wall set: image of {name} unmatched")
        permutation[name] = target
    if len(set(permutation.values())) != len(permutation):
        raise ValueError("isometry does not preserve the wall set: image not a bijection")
    return permutation


H3_NORMAL = (0, 0, 0, 0, 1)


def wall_angle_to_H3(
    wall: str, time: Union[FamilyTime, float, Fraction]
) -> PairRelation:
    """Relation of a wall to the symmetry hyperplane x4 = 0.

    Angles are folded to the unoriented hyperplane angle in (0, pi/2]; the
    degenerating letter walls are ultraparallel to the hyperplane instead.
    """
    ft = FamilyTime.of(time)
    walls = dict(ks_normals(ft))
    walls.update(quotient_normals(ft))
    normal = walls[wall]
    axis = H3_NORMAL if ft.is_exact else tuple(float(x) for x in H3_NORMAL)
    rel = pair_relation(normal, axis)
    if rel.kind is RelationKind.ANGLE and rel.angle > math.pi / 2:
        return PairRelation(RelationKind.ANGLE, -rel.alpha, angle=math.pi - rel.angle)
    return rel


def cuboctahedron_section(
    time: Union[FamilyTime, float, Fraction]
) -> tuple[LorentzPoint, ...]:
    """The twelve time-independent ideal vertices, all in the slice x4 = 0.

    Each is the light ray through (sqrt(2), ±1, ±1, 0, 0) up to placing the
    two unit entries in two of the three middle coordinates; together they
    span an ideal right-angled cuboctahedron in the fixed hyperplane.
    """
    ft = FamilyTime.of(time)
    walls = ks_normals(ft)
    root2: Scalar = MultiQuad.root(2) if ft.is_exact else math.sqrt(2.0)
    points = []
    for first, second in ((1, 2), (1, 3), (2, 3)):
        for sa in (1, -1):
            for sb in (1, -1):
                coords: list[Scalar] = [root2, 0, 0, 0, 0]
                coords[first] = sa
                coords[second] = sb
                point = LorentzPoint.ideal(tuple(coords))
                for wall in walls.values():
                    if point_side(point, wall) == "outside":
                        raise AssertionError("section point fell outside a wall")
                points.append(point)
    return tuple(points)
