"""Minkowski R^{1,n} linear algebra for the hyperboloid model of H^n.

The ambient form is ``<v, w> = -v_0*w_0 + sum(v_i*w_i, i >= 1)``.  A
space-like vector v (self-product positive) determines the half-space
``<v, x> <= 0``; hyperbolic points are time-like rays on the upper sheet,
ideal points are light-like rays.  The relation between two walls is read
off the normalized product

    alpha = -<v, w> / sqrt(<v, v> <w, w>)

which gives a dihedral angle for -1 < alpha < 1, tangency at alpha = 1, a
common perpendicular of length arccosh(alpha) for alpha > 1, and disjoint
or nested half-spaces for alpha <= -1.

Every operation runs in two scalar backends: binary64 with a classification
tolerance (default 1e-9, see :func:`tolerance`) and exact multi-quadratic
arithmetic from :mod:`hypercox.arith` for parameters with rational squares.
Values are immutable and the functions are pure.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .arith import MultiQuad, as_float, is_exact, sign_of, sqrt_of

Scalar = Union[int, float, Fraction, MultiQuad]
VectorLike = Union["SpaceLikeVector", Sequence[Scalar]]

#: Default classification tolerance for the binary64 backend.
DEFAULT_EPS = 1e-9

_EPS_ENV = "HYPERCOX_EPS"


def tolerance(eps: Optional[float] = None) -> float:
    """Resolve a tolerance: explicit value, else HYPERCOX_EPS, else 1e-9."""
    if eps is not None:
        return eps
    return float(os.environ.get(_EPS_ENV, DEFAULT_EPS))


def _coords(v: VectorLike) -> tuple[Scalar, ...]:
    if isinstance(v, SpaceLikeVector):
        return v.coords
    return tuple(v)


def minkowski_product(u: VectorLike, v: VectorLike) -> Scalar:
    """Lorentzian product -u0*v0 + u1*v1 + ... with signature (-, +, ..., +)."""
    uu, vv = _coords(u), _coords(v)
    if len(uu) != len(vv):
        raise ValueError(f"dimension mismatch: {len(uu)} vs {len(vv)}")
    total = -(uu[0] * vv[0])
    for a, b in zip(uu[1:], vv[1:]):
        total = total + a * b
    return total


def _is_exact_vector(coords: Sequence[Scalar]) -> bool:
    return all(is_exact(x) for x in coords)


def classify_vector(v: VectorLike, eps: Optional[float] = None) -> str:
    """Causal character of a vector: ``"space"``, ``"time"`` or ``"light"``."""
    coords = _coords(v)
    s = minkowski_product(coords, coords)
    band = 0.0 if _is_exact_vector(coords) else tolerance(eps)
    sign = sign_of(s, band)
    if sign > 0:
        return "space"
    if sign < 0:
        return "time"
    return "light"


@dataclass(frozen=True)
class SpaceLikeVector:
    """Half-space normal: a vector with positive Lorentzian self-product."""

    coords: tuple[Scalar, ...]

    def __post_init__(self) -> None:
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        if classify_vector(coords) != "space":
            raise ValueError(f"vector {coords} is not space-like")

    @property
    def dimension(self) -> int:
        return len(self.coords) - 1

    def __iter__(self):
        return iter(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> Scalar:
        return self.coords[i]


class RelationKind(Enum):
    ANGLE = "angle"
    PARALLEL = "parallel"
    ULTRAPARALLEL = "ultraparallel"
    DISJOINT = "disjoint"


@dataclass(frozen=True)
class PairRelation:
    """Classification of two space-like walls by their normalized product.

    ``alpha`` keeps the backend scalar; ``angle`` (radians) is set for the
    Angle variant and ``distance`` for the Ultraparallel variant, both as
    binary64 since they are transcendental in general.
    """

    kind: RelationKind
    alpha: Scalar
    angle: Optional[float] = None
    distance: Optional[float] = None


def pair_relation(v: VectorLike, w: VectorLike, eps: Optional[float] = None) -> PairRelation:
    """Relation of two space-like walls: angle, tangency, distance, or disjoint."""
    vc, wc = _coords(v), _coords(w)
    band = tolerance(eps)
    for c in (vc, wc):
        s = minkowski_product(c, c)
        if sign_of(s, 0.0 if is_exact(s) else band) <= 0:
            raise ValueError("pair_relation requires space-like vectors")
    norm_product = minkowski_product(vc, vc) * minkowski_product(wc, wc)
    cross = minkowski_product(vc, wc)
    if is_exact(cross) and is_exact(norm_product):
        alpha: Scalar = (-MultiQuad(cross)) * sqrt_of(norm_product).inverse()
        band = 0.0
        a = float(alpha)
    else:
        alpha = -as_float(cross) / math.sqrt(as_float(norm_product))
        a = float(alpha)
    high = sign_of(alpha - 1 if is_exact(alpha) else a - 1.0, band)
    if high > 0:
        return PairRelation(RelationKind.ULTRAPARALLEL, alpha, distance=math.acosh(max(1.0, a)))
    if high == 0:
        return PairRelation(RelationKind.PARALLEL, alpha)
    low = sign_of(alpha + 1 if is_exact(alpha) else a + 1.0, band)
    if low > 0:
        return PairRelation(RelationKind.ANGLE, alpha, angle=math.acos(max(-1.0, min(1.0, a))))
    return PairRelation(RelationKind.DISJOINT, alpha)


def project_to_wall(v: VectorLike, wall: VectorLike) -> tuple[Scalar, ...]:
    """Component of v parallel to a wall: v - (<v,w>/<w,w>) w, orthogonal to w."""
    vc, wc = _coords(v), _coords(wall)
    coeff = minkowski_product(vc, wc)
    norm = minkowski_product(wc, wc)
    if is_exact(coeff) and is_exact(norm):
        factor = MultiQuad(coeff) * MultiQuad(norm).inverse()
    else:
        factor = as_float(coeff) / as_float(norm)
    return tuple(a - factor * b for a, b in zip(vc, wc))


class PointKind(Enum):
    FINITE = "finite"
    IDEAL = "ideal"


@dataclass(frozen=True)
class LorentzPoint:
    """A point of H^n (upper-sheet, <x,x> = -1) or of its ideal boundary (x0 = 1)."""

    coords: tuple[Scalar, ...]
    kind: PointKind

    @classmethod
    def finite(cls, coords: Sequence[Scalar]) -> "LorentzPoint":
        """Normalize a time-like vector onto the upper hyperboloid sheet."""
        c = [x if is_exact(x) else float(x) for x in coords]
        if sign_of(c[0], 0.0) < 0:
            c = [-x for x in c]
        s = minkowski_product(c, c)
        if _is_exact_vector(c):
            scale = sqrt_of(-MultiQuad(s)).inverse()
        else:
            scale = 1.0 / math.sqrt(-as_float(s))
        return cls(tuple(scale * x for x in c), PointKind.FINITE)

    @classmethod
    def ideal(cls, coords: Sequence[Scalar]) -> "LorentzPoint":
        """Normalize a light-like vector to its canonical x0 = 1 representative."""
        c = [x if is_exact(x) else float(x) for x in coords]
        if sign_of(c[0], 0.0) < 0:
            c = [-x for x in c]
        if _is_exact_vector(c):
            scale = MultiQuad(c[0]).inverse()
        else:
            scale = 1.0 / as_float(c[0])
        return cls(tuple(scale * x for x in c), PointKind.IDEAL)

    def __iter__(self):
        return iter(self.coords)


def _exact_nullspace(rows: list[list[MultiQuad]], width: int) -> list[list[MultiQuad]]:
    """Basis of the right nullspace of an exact matrix by reduced echelon form."""
    matrix = [row[:] for row in rows]
    pivots: list[int] = []
    r = 0
    for col in range(width):
        pivot = next((i for i in range(r, len(matrix)) if not matrix[i][col].is_zero()), None)
        if pivot is None:
            continue
        matrix[r], matrix[pivot] = matrix[pivot], matrix[r]
        inv = matrix[r][col].inverse()
        matrix[r] = [inv * x for x in matrix[r]]
        for i in range(len(matrix)):
            if i != r and not matrix[i][col].is_zero():
                f = matrix[i][col]
                matrix[i] = [x - f * y for x, y in zip(matrix[i], matrix[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(width) if c not in pivots]
    basis = []
    for fc in free:
        vec = [MultiQuad(0)] * width
        vec[fc] = MultiQuad(1)
        for row_index, pc in enumerate(pivots):
            vec[pc] = -matrix[row_index][fc]
        basis.append(vec)
    return basis


def solve_vertex(
    normals: Sequence[VectorLike], eps: Optional[float] = None
) -> Optional[LorentzPoint]:
    """Common point of the walls orthogonal to all given normals, if any.

    Returns the Finite or Ideal point spanning the Lorentz-orthogonal
    complement of the normals when that complement is one-dimensional and
    time-like or light-like; otherwise None (including degenerate rank).
    """
    vectors = [_coords(v) for v in normals]
    if not vectors:
        return None
    width = len(vectors[0])
    if any(len(v) != width for v in vectors):
        raise ValueError("dimension mismatch among normals")
    if all(_is_exact_vector(v) for v in vectors):
        rows = [
            [MultiQuad(-v[0])] + [MultiQuad(x) for x in v[1:]] for v in vectors
        ]
        basis = _exact_nullspace(rows, width)
        if len(basis) != 1:
            return None
        x = basis[0]
        s = minkowski_product(x, x)
        sign = MultiQuad(s).sign()
        if sign > 0:
            return None
        if sign < 0:
            return LorentzPoint.finite(x)
        return LorentzPoint.ideal(x)

    band = tolerance(eps)
    a = np.array([[float(x) for x in v] for v in vectors], dtype=float)
    a[:, 0] = -a[:, 0]  # multiply by J so plain matvec realizes the Lorentz product
    _, singular, vt = np.linalg.svd(a, full_matrices=True)
    scale = max(1.0, float(singular[0]) if singular.size else 1.0)
    null_rows = [
        vt[i] for i in range(vt.shape[0])
        if i >= len(singular) or singular[i] < band * scale
    ]
    if len(null_rows) != 1:
        return None
    x = null_rows[0]
    s = float(minkowski_product(x, x))
    if s < -band:
        return LorentzPoint.finite(x)
    if s <= band:
        if abs(float(x[0])) <= band:
            return None
        return LorentzPoint.ideal(x)
    return None


def point_side(
    x: Union[LorentzPoint, Sequence[Scalar]], v: VectorLike, eps: Optional[float] = None
) -> str:
    """Position of a point relative to the half-space of a normal.

    ``"inside"`` for <v,x> < 0, ``"boundary"`` at zero, ``"outside"`` beyond.
    """
    coords = x.coords if isinstance(x, LorentzPoint) else tuple(x)
    s = minkowski_product(v, coords)
    band = 0.0 if is_exact(s) else tolerance(eps)
    sign = sign_of(s, band)
    if sign < 0:
        return "inside"
    if sign == 0:
        return "boundary"
    return "outside"
