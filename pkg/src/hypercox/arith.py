"""Exact arithmetic in multi-quadratic fields and rational quadratic form invariants.

This module is the exact-computation substrate for the rest of the package.
It provides two layers:

* :class:`MultiQuad`, an element of a real multi-quadratic field
  Q(sqrt(d_1), ..., sqrt(d_k)).  A value is stored as a finite map from
  squarefree radicands to rational coefficients, so every element is a sum
  q_1*sqrt(d_1) + ... with the key ``1`` holding the rational part.  Because
  square roots of distinct squarefree integers are linearly independent over
  Q, equality and zero-testing are exact dictionary comparisons, and signs
  can be decided by refining rational enclosures of each sqrt(d).

* the commensurability pipeline for reflection groups acting on a
  Lorentzian quadratic space: extraction of a 5-dimensional rational span
  from a Gram matrix of unit wall normals, the rational matrix of the
  restricted form, congruence diagonalization over Q, local Hilbert
  symbols, and the Hasse/Witt ramification sets that classify the
  commensurability class in the non-cocompact, field-Q case.

The Hilbert symbol uses the standard local formulas: at an odd prime p,
(a, b)_p = (-1)^(alpha*beta*(p-1)/2) * (u|p)^beta * (w|p)^alpha where
a = p^alpha*u, b = p^beta*w and (.|p) is the Legendre symbol; at p = 2 the
epsilon/omega exponent formula; at the real place a sign test.  All
factorization is by trial division, which is ample for the desk-scale
integers produced by the geometry.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence, Union

Rational = Union[int, Fraction]
Scalar = Union[int, float, Fraction, "MultiQuad"]

#: Largest prime attempted during trial division.  Inputs whose unfactored
#: part survives this bound raise, rather than silently mis-classifying.
TRIAL_DIVISION_CAP = 10**6

#: Marker for the real (archimedean) place in ramification sets.
INFINITE_PLACE = math.inf


# ---------------------------------------------------------------------------
# integer helpers


def _factorize(n: int) -> dict[int, int]:
    """Prime factorization of ``|n|`` by trial division.

    Raises
    ------
    ValueError
        If trial division would have to pass :data:`TRIAL_DIVISION_CAP`.
    """
    n = abs(n)
    if n == 0:
        raise ValueError("cannot factor zero")
    factors: dict[int, int] = {}
    p = 2
    while n > 1:
        if p * p > n:
            # the remaining cofactor is prime
            factors[n] = factors.get(n, 0) + 1
            break
        if p > TRIAL_DIVISION_CAP:
            raise ValueError(
                f"unfactored part {n} exceeds the trial division cap {TRIAL_DIVISION_CAP}"
            )
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
        p = 3 if p == 2 else p + 2
    return factors


def squarefree_decomposition(n: int) -> tuple[int, int]:
    """Write ``n = sf * s**2`` with ``sf`` squarefree (sign kept on ``sf``)."""
    if n == 0:
        raise ValueError("zero has no squarefree decomposition")
    sf, s = 1 if n > 0 else -1, 1
    for p, e in _factorize(n).items():
        if e % 2:
            sf *= p
        s *= p ** (e // 2)
    return sf, s


def squarefree_part(value: Rational) -> int:
    """Signed squarefree integer representing ``value`` modulo rational squares."""
    f = Fraction(value)
    if f == 0:
        raise ValueError("zero has no squarefree part")
    return squarefree_decomposition(f.numerator * f.denominator)[0]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return _factorize(n) == {n: 1}


# ---------------------------------------------------------------------------
# multi-quadratic scalars


class MultiQuad:
    """An element of a real multi-quadratic extension of Q.

    The value is ``sum(coeff * sqrt(d) for d, coeff in terms)`` where every
    radicand ``d`` is a squarefree positive integer and ``d == 1`` tags the
    rational part.  No zero coefficients are stored, so the empty map is the
    canonical zero and equality is structural.

    Arithmetic accepts ``int`` and :class:`~fractions.Fraction` operands and
    lifts them; ``float`` operands are rejected to keep the ring exact.
    """

    __slots__ = ("_terms",)

    def __init__(self, value: Rational | Mapping[int, Rational] | "MultiQuad" = 0):
        terms: dict[int, Fraction] = {}
        if isinstance(value, MultiQuad):
            terms = dict(value._terms)
        elif isinstance(value, Mapping):
            for d, coeff in value.items():
                c = Fraction(coeff)
                if c == 0:
                    continue
                if d <= 0:
                    raise ValueError(f"radicand must be positive, got {d}")
                sf, s = squarefree_decomposition(d)
                terms[sf] = terms.get(sf, Fraction(0)) + c * s
            terms = {d: c for d, c in terms.items() if c != 0}
        elif isinstance(value, (int, Fraction)):
            c = Fraction(value)
            if c != 0:
                terms = {1: c}
        else:
            raise TypeError(f"cannot build MultiQuad from {type(value).__name__}")
        self._terms = terms

    # -- constructors ------------------------------------------------------

    @classmethod
    def root(cls, value: Rational) -> "MultiQuad":
        """Exact square root of a nonnegative rational."""
        f = Fraction(value)
        if f < 0:
            raise ValueError(f"square root of negative rational {f}")
        if f == 0:
            return cls(0)
        sf, s = squarefree_decomposition(f.numerator * f.denominator)
        return cls({sf: Fraction(s, f.denominator)})

    @classmethod
    def parse(cls, text: str) -> "MultiQuad":
        """Parse strings like ``"3/2 + 1/2*sqrt(5) - sqrt(2)"``."""
        compact = text.replace(" ", "")
        if not compact:
            raise ValueError("empty MultiQuad literal")
        term = re.compile(
            r"(?P<sign>[+-]?)(?:"
            r"(?P<coeff>\d+(?:/\d+)?)\*sqrt\((?P<rad1>\d+)\)"
            r"|sqrt\((?P<rad2>\d+)\)"
            r"|(?P<plain>\d+(?:/\d+)?)"
            r")"
        )
        total = cls(0)
        for token in re.findall(r"[+-]?[^+-]+", compact):
            m = term.fullmatch(token)
            if m is None:
                raise ValueError(f"cannot parse MultiQuad term {token!r} in {text!r}")
            if m.group("plain") is not None:
                coeff, rad = Fraction(m.group("plain")), 1
            elif m.group("rad2") is not None:
                coeff, rad = Fraction(1), int(m.group("rad2"))
            else:
                coeff, rad = Fraction(m.group("coeff")), int(m.group("rad1"))
            if m.group("sign") == "-":
                coeff = -coeff
            total = total + cls({rad: coeff})
        return total

    # -- inspection --------------------------------------------------------

    @property
    def terms(self) -> dict[int, Fraction]:
        """Copy of the radicand-to-coefficient map."""
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_rational(self) -> bool:
        return set(self._terms) <= {1}

    def rational_value(self) -> Fraction:
        """The value as a Fraction; raises if any radical term is present."""
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self._terms.get(1, Fraction(0))

    def radicand_primes(self) -> frozenset[int]:
        primes: set[int] = set()
        for d in self._terms:
            primes.update(_factorize(d))
        return frozenset(primes)

    # -- ring operations ---------------------------------------------------

    def _coerce(self, other: Scalar) -> "MultiQuad | None":
        if isinstance(other, MultiQuad):
            return other
        if isinstance(other, (int, Fraction)):
            return MultiQuad(other)
        return None

    def __add__(self, other: Scalar) -> "MultiQuad":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms = dict(self._terms)
        for d, c in o._terms.items():
            s = terms.get(d, Fraction(0)) + c
            if s == 0:
                terms.pop(d, None)
            else:
                terms[d] = s
        out = MultiQuad.__new__(MultiQuad)
        out._terms = terms
        return out

    __radd__ = __add__

    def __neg__(self) -> "MultiQuad":
        out = MultiQuad.__new__(MultiQuad)
        out._terms = {d: -c for d, c in self._terms.items()}
        return out

    def __pos__(self) -> "MultiQuad":
        return self

    def __sub__(self, other: Scalar) -> "MultiQuad":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: Scalar) -> "MultiQuad":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other: Scalar) -> "MultiQuad":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms: dict[int, Fraction] = {}
        for d1, c1 in self._terms.items():
            for d2, c2 in o._terms.items():
                g = math.gcd(d1, d2)
                d = (d1 // g) * (d2 // g)  # sqrt(d1)*sqrt(d2) = g*sqrt(d)
                c = c1 * c2 * g
                s = terms.get(d, Fraction(0)) + c
                if s == 0:
                    terms.pop(d, None)
                else:
                    terms[d] = s
        out = MultiQuad.__new__(MultiQuad)
        out._terms = terms
        return out

    __rmul__ = __mul__

    def inverse(self) -> "MultiQuad":
        """Multiplicative inverse by Galois-conjugate norm descent.

        Multiplying by the conjugate that negates every term containing a
        chosen radicand prime eliminates that prime from the support, so
        recursion bottoms out in Q.
        """
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero MultiQuad")
        if self.is_rational():
            return MultiQuad(1 / self.rational_value())
        p = min(self.radicand_primes())
        conj = self._galois_negate(p)
        return conj * (self * conj).inverse()

    def _galois_negate(self, p: int) -> "MultiQuad":
        out = MultiQuad.__new__(MultiQuad)
        out._terms = {d: (-c if d % p == 0 else c) for d, c in self._terms.items()}
        return out

    def __truediv__(self, other: Scalar) -> "MultiQuad":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other: Scalar) -> "MultiQuad":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, exponent: int) -> "MultiQuad":
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = MultiQuad(1)
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # -- order and conversion ----------------------------------------------

    def sign(self) -> int:
        """Exact sign in {-1, 0, +1}."""
        if not self._terms:
            return 0
        if len(self._terms) == 1:
            ((_, c),) = self._terms.items()
            return 1 if c > 0 else -1
        prec = 32
        while True:
            lo, hi = self._bounds(prec)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            # sqrt-independence guarantees the value is nonzero, so the
            # enclosure eventually separates from zero
            prec *= 2

    def _bounds(self, prec: int) -> tuple[Fraction, Fraction]:
        scale = 1 << prec
        lo = hi = Fraction(0)
        for d, c in self._terms.items():
            n = math.isqrt(d * scale * scale)
            r_lo = Fraction(n, scale)
            r_hi = Fraction(n + 1, scale)
            if c > 0:
                lo += c * r_lo
                hi += c * r_hi
            else:
                lo += c * r_hi
                hi += c * r_lo
        return lo, hi

    def sqrt(self) -> "MultiQuad":
        """Square root of a rational-valued, nonnegative element."""
        return MultiQuad.root(self.rational_value())

    def __float__(self) -> float:
        return sum((float(c) * math.sqrt(d) for d, c in self._terms.items()), 0.0)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, MultiQuad):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == MultiQuad(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self.is_rational():
            return hash(self._terms.get(1, Fraction(0)))
        return hash(tuple(sorted(self._terms.items())))

    def __str__(self) -> str:
        return self._format(" ")

    def __repr__(self) -> str:
        return f"MultiQuad({self._format('')!r})"

    def _format(self, gap: str) -> str:
        if not self._terms:
            return "0"
        parts: list[str] = []
        for d in sorted(self._terms):
            c = self._terms[d]
            mag = abs(c)
            if d == 1:
                body = str(mag)
            elif mag == 1:
                body = f"sqrt({d})"
            else:
                body = f"{mag}*sqrt({d})"
            if not parts:
                parts.append(body if c > 0 else "-" + body)
            else:
                parts.append(("+" if c > 0 else "-") + gap + body)
        return gap.join(parts)


def mq_add(a: MultiQuad, b: MultiQuad) -> MultiQuad:
    """Sum in the multi-quadratic ring."""
    return MultiQuad(a) + MultiQuad(b)


def mq_mul(a: MultiQuad, b: MultiQuad) -> MultiQuad:
    """Product, with sqrt(a)*sqrt(b) reduced to g*sqrt(ab/g^2)."""
    return MultiQuad(a) * MultiQuad(b)


def mq_inv(a: MultiQuad) -> MultiQuad:
    """Inverse by Galois-conjugate norm descent; rejects zero."""
    return MultiQuad(a).inverse()


# ---------------------------------------------------------------------------
# scalar dispatch shared with the geometry modules


def sign_of(value: Scalar, eps: float = 0.0) -> int:
    """Sign of a scalar: exact for rationals and MultiQuad, eps-banded for floats."""
    if isinstance(value, MultiQuad):
        return value.sign()
    if isinstance(value, (int, Fraction)):
        return 0 if value == 0 else (1 if value > 0 else -1)
    v = float(value)
    if abs(v) <= eps:
        return 0
    return 1 if v > 0 else -1


def as_float(value: Scalar) -> float:
    return float(value)


def sqrt_of(value: Scalar) -> Scalar:
    """Square root in the matching backend (floats stay float, exacts stay exact)."""
    if isinstance(value, MultiQuad):
        return value.sqrt()
    if isinstance(value, (int, Fraction)):
        return MultiQuad.root(value)
    return math.sqrt(value)


def is_exact(value: Scalar) -> bool:
    return isinstance(value, (int, Fraction, MultiQuad))


# ---------------------------------------------------------------------------
# rational quadratic forms


@dataclass(frozen=True)
class RationalQuadraticForm:
    """Symmetric matrix over Q regarded as a quadratic form."""

    matrix: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.matrix)
        rows = tuple(
            tuple(Fraction(entry) for entry in row) for row in self.matrix
        )
        for row in rows:
            if len(row) != n:
                raise ValueError("form matrix must be square")
        for i in range(n):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise ValueError("form matrix must be symmetric")
        object.__setattr__(self, "matrix", rows)

    @property
    def dimension(self) -> int:
        return len(self.matrix)

    def determinant(self) -> Fraction:
        d, _ = congruence_diagonalize(self.matrix)
        det = Fraction(1)
        for entry in d:
            det *= entry
        return det

    def signature(self) -> tuple[int, int]:
        """(number of positive, number of negative) diagonal entries."""
        d, _ = congruence_diagonalize(self.matrix)
        pos = sum(1 for x in d if x > 0)
        return pos, len(d) - pos


def congruence_diagonalize(
    matrix: Sequence[Sequence[Rational]],
) -> tuple[list[Fraction], list[list[Fraction]]]:
    """Diagonalize a symmetric rational matrix by congruence.

    Returns ``(diag, trans)`` with ``trans @ M @ trans.T`` equal to
    ``diag(diag)`` exactly.  Zero diagonal pivots are repaired by a row and
    column combination before elimination; a fully zero trailing block means
    the form is degenerate and raises.
    """
    n = len(matrix)
    m = [[Fraction(matrix[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        if len(matrix[i]) != n:
            raise ValueError("matrix must be square")
        for j in range(i):
            if m[i][j] != m[j][i]:
                raise ValueError("matrix must be symmetric")
    trans = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]

    def add_row_col(dst: int, src: int, factor: Fraction) -> None:
        for j in range(n):
            m[dst][j] += factor * m[src][j]
        for i in range(n):
            m[i][dst] += factor * m[i][src]
        for j in range(n):
            trans[dst][j] += factor * trans[src][j]

    def swap(i: int, j: int) -> None:
        m[i], m[j] = m[j], m[i]
        for row in m:
            row[i], row[j] = row[j], row[i]
        trans[i], trans[j] = trans[j], trans[i]

    for k in range(n):
        if m[k][k] == 0:
            pivot = next((j for j in range(k + 1, n) if m[j][j] != 0), None)
            if pivot is not None:
                swap(k, pivot)
            else:
                partner = next((j for j in range(k + 1, n) if m[k][j] != 0), None)
                if partner is None:
                    raise ValueError("degenerate form: zero block on the diagonal")
                add_row_col(k, partner, Fraction(1))
        for i in range(k + 1, n):
            if m[i][k] != 0:
                add_row_col(i, k, -m[i][k] / m[k][k])
    return [m[i][i] for i in range(n)], trans


def diagonalize(form: RationalQuadraticForm | Sequence[Sequence[Rational]]) -> list[int]:
    """Diagonal of a congruence-equivalent form, reduced to squarefree integers.

    Each rational diagonal entry is rescaled by a square to the signed
    squarefree integer representing its square class.
    """
    matrix = form.matrix if isinstance(form, RationalQuadraticForm) else form
    diag, _ = congruence_diagonalize(matrix)
    return [squarefree_part(entry) for entry in diag]


def matrix_inverse(matrix: Sequence[Sequence[Rational]]) -> list[list[Fraction]]:
    """Exact inverse of a square rational matrix (Gauss-Jordan)."""
    n = len(matrix)
    aug = [
        [Fraction(matrix[i][j]) for j in range(n)]
        + [Fraction(1 if i == j else 0) for j in range(n)]
        for i in range(n)
    ]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


# ---------------------------------------------------------------------------
# Hilbert symbols and ramification


def _as_nonzero_int(value: Rational) -> int:
    f = Fraction(value)
    if f == 0:
        raise ValueError("Hilbert symbol arguments must be nonzero")
    # multiplying by the square den^2 keeps every local symbol unchanged
    return f.numerator * f.denominator


def _split_valuation(n: int, p: int) -> tuple[int, int]:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v, n


def _legendre(u: int, p: int) -> int:
    r = pow(u % p, (p - 1) // 2, p)
    return 1 if r == 1 else -1


def hilbert_symbol(a: Rational, b: Rational, place: Union[int, float]) -> int:
    """Local Hilbert symbol (a, b) at a finite prime or the real place."""
    ia = _as_nonzero_int(a)
    ib = _as_nonzero_int(b)
    if place == INFINITE_PLACE:
        return -1 if ia < 0 and ib < 0 else 1
    p = int(place)
    if not _is_prime(p):
        raise ValueError(f"{place} is not a prime or the infinite place")
    alpha, u = _split_valuation(ia, p)
    beta, w = _split_valuation(ib, p)
    if p == 2:
        def eps(x: int) -> int:
            return 0 if x % 4 == 1 else 1

        def omega(x: int) -> int:
            return 0 if x % 8 in (1, 7) else 1

        exponent = eps(u) * eps(w) + alpha * omega(w) + beta * omega(u)
        return -1 if exponent % 2 else 1
    sign = -1 if (alpha * beta * ((p - 1) // 2)) % 2 else 1
    if beta % 2:
        sign *= _legendre(u, p)
    if alpha % 2:
        sign *= _legendre(w, p)
    return sign


@dataclass(frozen=True)
class RamificationSet:
    """Finite set of places where a quaternion algebra ramifies.

    Always has even cardinality; places are primes plus possibly
    :data:`INFINITE_PLACE`.
    """

    places: frozenset

    def __post_init__(self) -> None:
        places = frozenset(self.places)
        if len(places) % 2:
            raise ValueError(f"ramification set {sorted(places, key=float)} has odd size")
        for v in places:
            if v != INFINITE_PLACE and not _is_prime(int(v)):
                raise ValueError(f"{v} is not a valid place")
        object.__setattr__(self, "places", places)

    @classmethod
    def of(cls, *places: Union[int, float]) -> "RamificationSet":
        return cls(frozenset(places))

    def __xor__(self, other: "RamificationSet") -> "RamificationSet":
        return RamificationSet(self.places ^ other.places)

    def __iter__(self):
        return iter(sorted(self.places, key=float))

    def __len__(self) -> int:
        return len(self.places)

    def __contains__(self, place: object) -> bool:
        return place in self.places

    def __str__(self) -> str:
        names = ["inf" if v == INFINITE_PLACE else str(int(v)) for v in self]
        return "{" + ", ".join(names) + "}"


def quaternion_ramification(a: Rational, b: Rational) -> RamificationSet:
    """Set of places where the quaternion algebra (a, b / Q) ramifies."""
    ia = squarefree_part(_as_nonzero_int(a))
    ib = squarefree_part(_as_nonzero_int(b))
    candidates: set[Union[int, float]] = {2, INFINITE_PLACE}
    for n in (ia, ib):
        for p in _factorize(n):
            if p != 2:
                candidates.add(p)
    ramified = frozenset(v for v in candidates if hilbert_symbol(ia, ib, v) == -1)
    if len(ramified) % 2:
        raise RuntimeError(
            f"odd ramification set {sorted(ramified, key=float)} for ({a}, {b}); "
            "this indicates a Hilbert symbol bug"
        )
    return RamificationSet(ramified)


def hasse_invariant(diag: Sequence[Rational]) -> RamificationSet:
    """Hasse invariant of a diagonal form as a ramification set.

    This is the Brauer class of the tensor product of (a_i, a_j) over all
    pairs i < j, i.e. the symmetric difference of their ramification sets.
    """
    result = RamificationSet(frozenset())
    entries = [squarefree_part(d) for d in diag]
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            result = result ^ quaternion_ramification(entries[i], entries[j])
    return result


def witt_invariant(diag: Sequence[Rational]) -> RamificationSet:
    """Witt (Hasse-Witt) invariant: the Hasse class times (-1, -1)."""
    return hasse_invariant(diag) ^ quaternion_ramification(-1, -1)


# ---------------------------------------------------------------------------
# rational span extraction


def minkowski_inner(v: Sequence[Scalar], w: Sequence[Scalar]):
    """Lorentzian product with signature (-, +, +, +, +) on 5-vectors."""
    total = -(v[0] * w[0])
    for a, b in zip(v[1:], w[1:]):
        total = total + a * b
    return total


class _RationalEchelon:
    """Incremental Q-echelon over sparse vectors with orderable keys."""

    def __init__(self) -> None:
        self.rows: dict = {}

    @staticmethod
    def _flatten(vector: Sequence[MultiQuad]) -> dict:
        flat: dict = {}
        for pos, entry in enumerate(vector):
            for d, c in MultiQuad(entry).terms.items():
                flat[(pos, d)] = c
        return flat

    def _reduce(self, flat: dict) -> dict:
        flat = dict(flat)
        while flat:
            lead = min(flat)
            if lead not in self.rows:
                return flat
            pivot_row = self.rows[lead]
            factor = flat[lead] / pivot_row[lead]
            for key, value in pivot_row.items():
                s = flat.get(key, Fraction(0)) - factor * value
                if s == 0:
                    flat.pop(key, None)
                else:
                    flat[key] = s
        return flat

    def contains(self, vector: Sequence[MultiQuad]) -> bool:
        return not self._reduce(self._flatten(vector))

    def add(self, vector: Sequence[MultiQuad]) -> bool:
        """Insert the vector; True iff it enlarged the span."""
        reduced = self._reduce(self._flatten(vector))
        if not reduced:
            return False
        self.rows[min(reduced)] = reduced
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)


def _scaled(vector: Sequence[Scalar], scalar: MultiQuad) -> tuple[MultiQuad, ...]:
    return tuple(scalar * MultiQuad(entry) for entry in vector)


def generate_rational_lattice(
    gram: Sequence[Sequence[Scalar]],
    normals: Sequence[Sequence[Scalar]],
    start: int = 0,
) -> list[tuple[MultiQuad, ...]]:
    """Closure vectors ``g[s][i1]*g[i1][i2]*...*e[ik]`` spanning the rational lattice.

    Starting from the unit normal with index ``start``, each Gram entry
    along a path multiplies the running scalar, and the path endpoint picks
    the normal the scalar is attached to.  Propagation is linear in the
    scalar, so it is enough to push forward a Q-basis of scalars per
    endpoint; the scalar spans stabilize because each lives in a fixed
    multi-quadratic field.

    Different base walls give Q-spans differing by a global radical factor,
    which leaves the rank and the Hasse data of the restricted form
    unchanged (for 5-dimensional forms the Hasse invariant is insensitive
    to scaling).
    """
    n = len(normals)
    spans = {i: _RationalEchelon() for i in range(n)}
    vectors: list[tuple[int, MultiQuad]] = []
    pending: list[tuple[int, MultiQuad]] = [(start, MultiQuad(1))]
    while pending:
        next_level: list[tuple[int, MultiQuad]] = []
        for i, scalar in pending:
            if not spans[i].add((scalar,)):
                continue
            vectors.append((i, scalar))
            for j in range(n):
                if j == i:
                    continue
                g = MultiQuad(gram[i][j])
                if not g.is_zero():
                    next_level.append((j, scalar * g))
        pending = next_level
    return [_scaled(normals[i], scalar) for i, scalar in vectors]


def rational_span(
    gram: Sequence[Sequence[Scalar]],
    normals: Sequence[Sequence[Scalar]],
    basis: Sequence[Sequence[Scalar]] | None = None,
) -> list[tuple[MultiQuad, ...]]:
    """A Q-basis of the rational span of the reflection lattice.

    With ``basis=None``, returns the first five closure vectors achieving
    full Q-rank (breadth-first from the first wall, so the choice is
    deterministic).  With a user-supplied basis, verifies that the basis is
    Q-independent and that every closure vector from some base wall lies in
    its Q-span, then returns it unchanged.  Trying each base wall absorbs
    the global radical rescaling between the closures of different base
    walls, which is invisible to the rank and to the invariants of the
    restricted form.

    Raises
    ------
    ValueError
        If the closure does not have rank exactly 5, or a supplied basis
        fails verification.
    """
    for i, row in enumerate(gram):
        if MultiQuad(row[i]) != 1:
            raise ValueError("gram must come from unit normals (unit diagonal)")
    if basis is None:
        generated = generate_rational_lattice(gram, normals)
        echelon = _RationalEchelon()
        chosen: list[tuple[MultiQuad, ...]] = []
        for vector in generated:
            if echelon.add(vector):
                chosen.append(vector)
                if echelon.rank == 5:
                    return chosen
        raise ValueError(
            f"rational span has rank {echelon.rank}, expected 5"
        )
    basis_vectors = [tuple(MultiQuad(x) for x in vec) for vec in basis]
    if len(basis_vectors) != 5:
        raise ValueError(f"supplied basis has {len(basis_vectors)} vectors, expected 5")
    echelon = _RationalEchelon()
    for vec in basis_vectors:
        if not echelon.add(vec):
            raise ValueError("supplied basis is not Q-independent")
    for start in range(len(normals)):
        generated = generate_rational_lattice(gram, normals, start)
        if all(echelon.contains(vector) for vector in generated):
            return basis_vectors
    raise ValueError(
        "supplied basis does not span the rational lattice for any base wall"
    )


def form_matrix(
    basis: Sequence[Sequence[Scalar]],
    inner: Callable[[Sequence[Scalar], Sequence[Scalar]], Scalar] = minkowski_inner,
) -> RationalQuadraticForm:
    """Matrix of the ambient form restricted to a basis; entries must be rational."""
    vectors = [tuple(MultiQuad(x) for x in vec) for vec in basis]
    n = len(vectors)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            entry = MultiQuad(inner(vectors[i], vectors[j]))
            if not entry.is_rational():
                raise ValueError(
                    f"form entry ({i}, {j}) = {entry} is irrational; "
                    "the basis does not span a rational quadratic space"
                )
            row.append(entry.rational_value())
        rows.append(tuple(row))
    return RationalQuadraticForm(tuple(rows))


# ---------------------------------------------------------------------------
# the commensurability invariant


@dataclass(frozen=True)
class QuadraticFormInvariant:
    """Complete similarity invariant package of a rational quadratic form."""

    hasse: RamificationSet
    witt: RamificationSet
    determinant_class: int
    signature: tuple[int, int]

    def __post_init__(self) -> None:
        expected = self.hasse ^ quaternion_ramification(-1, -1)
        if self.witt != expected:
            raise ValueError("witt invariant must equal hasse xor ram(-1,-1)")


@dataclass(frozen=True)
class PipelineResult:
    """Intermediate artifacts of the commensurability computation."""

    basis: tuple[tuple[MultiQuad, ...], ...]
    form: RationalQuadraticForm
    diagonal: tuple[int, ...]
    invariant: QuadraticFormInvariant


def _unit_normals(
    normals: Sequence[Sequence[Scalar]],
    inner: Callable,
) -> list[tuple[MultiQuad, ...]]:
    units = []
    for v in normals:
        vec = tuple(MultiQuad(x) for x in v)
        norm = MultiQuad(inner(vec, vec))
        if norm.sign() <= 0:
            raise ValueError("normals must be space-like")
        scale = norm.sqrt().inverse()
        units.append(tuple(scale * x for x in vec))
    return units


def commensurability_pipeline(
    normals: Sequence[Sequence[Scalar]],
    basis: Sequence[Sequence[Scalar]] | None = None,
    inner: Callable[[Sequence[Scalar], Sequence[Scalar]], Scalar] = minkowski_inner,
) -> PipelineResult:
    """Full invariant computation from exact wall normals.

    Normalizes the walls, extracts (or verifies) a rational basis, restricts
    the form, diagonalizes, and packages Hasse/Witt ramification data.
    """
    units = _unit_normals(normals, inner)
    gram = [[inner(u, v) for v in units] for u in units]
    chosen = rational_span(gram, units, basis)
    form = form_matrix(chosen, inner)
    if form.signature() != (4, 1):
        raise ValueError(f"expected Lorentzian signature (4, 1), got {form.signature()}")
    diag = diagonalize(form)
    det_class = squarefree_part(form.determinant())
    invariant = QuadraticFormInvariant(
        hasse=hasse_invariant(diag),
        witt=witt_invariant(diag),
        determinant_class=det_class,
        signature=(4, 1),
    )
    return PipelineResult(
        basis=tuple(chosen),
        form=form,
        diagonal=tuple(diag),
        invariant=invariant,
    )


def commensurability_class(
    normals: Sequence[Sequence[Scalar]],
    basis: Sequence[Sequence[Scalar]] | None = None,
) -> QuadraticFormInvariant:
    """Commensurability invariant of the reflection group with the given walls."""
    return commensurability_pipeline(normals, basis).invariant


def commensurable(a: QuadraticFormInvariant, b: QuadraticFormInvariant) -> bool:
    """Equality test for the non-cocompact, field-Q case: same Hasse set."""
    return a.hasse == b.hasse


# ---------------------------------------------------------------------------
# Gram matrices from JSON, and form reconstruction without ambient coordinates


def gram_from_json(text: str) -> list[list[MultiQuad]]:
    """Parse a Gram matrix whose entries are MultiQuad strings.

    The expected shape is a JSON list of rows, each entry either a number
    or a string such as ``"1/2*sqrt(5) - 1"``.
    """
    data = json.loads(text)
    rows = []
    for row in data:
        parsed = []
        for entry in row:
            if isinstance(entry, str):
                parsed.append(MultiQuad.parse(entry))
            elif isinstance(entry, int):
                parsed.append(MultiQuad(entry))
            else:
                raise ValueError(
                    f"gram entries must be integers or strings, got {entry!r}"
                )
        rows.append(parsed)
    n = len(rows)
    for row in rows:
        if len(row) != n:
            raise ValueError("gram matrix must be square")
    return rows


def gram_to_json(gram: Sequence[Sequence[Scalar]]) -> str:
    rows = [[MultiQuad(entry)._format("") for entry in row] for row in gram]
    return json.dumps(rows)


def _solve_exact(
    matrix: list[list[MultiQuad]], rhs: list[MultiQuad]
) -> list[MultiQuad]:
    """Solve a small dense linear system over the multi-quadratic field."""
    n = len(matrix)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if not aug[r][col].is_zero()), None)
        if pivot is None:
            raise ValueError("singular system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [inv * x for x in aug[col]]
        for r in range(n):
            if r != col and not aug[r][col].is_zero():
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def commensurability_from_gram(
    gram: Sequence[Sequence[Scalar]],
    basis_coefficients: Sequence[Mapping[int, Scalar]] | None = None,
) -> PipelineResult:
    """Invariant computation from a Gram matrix alone.

    Five walls with invertible Gram block are chosen as abstract
    coordinates; every other wall is expressed in that block by solving
    against its products, and the restricted bilinear form is the block
    itself.  An optional basis is given as wall-indexed coefficient maps.
    """
    g = [[MultiQuad(x) for x in row] for row in gram]
    n = len(g)
    from itertools import combinations

    block_index: tuple[int, ...] | None = None
    for candidate in combinations(range(n), 5):
        sub = [[g[i][j] for j in candidate] for i in candidate]
        try:
            _solve_exact([row[:] for row in sub], [MultiQuad(0)] * 5)
        except ValueError:
            continue
        block_index = candidate
        break
    if block_index is None:
        raise ValueError("gram matrix has rank below 5")
    block = [[g[i][j] for j in block_index] for i in block_index]

    def inner(x: Sequence[Scalar], y: Sequence[Scalar]) -> MultiQuad:
        total = MultiQuad(0)
        for i in range(5):
            xi = MultiQuad(x[i])
            if xi.is_zero():
                continue
            for j in range(5):
                total = total + xi * block[i][j] * MultiQuad(y[j])
        return total

    coords: list[tuple[MultiQuad, ...]] = []
    for i in range(n):
        rhs = [g[j][i] for j in block_index]
        coords.append(tuple(_solve_exact([row[:] for row in block], rhs)))

    basis = None
    if basis_coefficients is not None:
        basis = []
        for mapping in basis_coefficients:
            vec = [MultiQuad(0)] * 5
            for wall, coeff in mapping.items():
                for k in range(5):
                    vec[k] = vec[k] + MultiQuad(coeff) * coords[wall][k]
            basis.append(tuple(vec))

    units = coords  # gram has unit diagonal, so walls are already unit
    chosen = rational_span(g, units, basis)
    form = form_matrix(chosen, inner)
    if form.signature() != (4, 1):
        raise ValueError(f"expected Lorentzian signature (4, 1), got {form.signature()}")
    diag = diagonalize(form)
    invariant = QuadraticFormInvariant(
        hasse=hasse_invariant(diag),
        witt=witt_invariant(diag),
        determinant_class=squarefree_part(form.determinant()),
        signature=(4, 1),
    )
    return PipelineResult(
        basis=tuple(chosen), form=form, diagonal=tuple(diag), invariant=invariant
    )
