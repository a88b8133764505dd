"""Reference-value checks runnable as a batch.

The headline outputs of the package are pinned here against frozen
expected values at stated tolerances: the stratum census in every regime
of the deformation, the critical dihedral angles, the volume of the
family polytope by independent methods, two special-function integrals,
orbifold and complex Euler characteristics, the assembled cone-manifold
data, and the arithmetic commensurability invariants.

Each check is a zero-argument callable that returns a one-line summary
and raises CheckFailure when a comparison misses its tolerance.  The
test suite parametrizes over CHECKS so every item gets its own pass or
fail line, and the command line's ``check-paper`` subcommand runs the
same list.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .arith import (
    INFINITE_PLACE,
    RamificationSet,
    commensurability_pipeline,
    commensurable,
    diagonalize,
    hasse_invariant,
    hilbert_symbol,
)
from .assembly import (
    CONE_ANGLE_EPS,
    AssembledComplex,
    assemble_pattern,
    complex_euler_char,
    cusp_cycles,
    face_cycles,
    stratum_surfaces,
)
from .coxeter import enumerate_strata
from .family import (
    FamilyTime,
    Regime,
    angle_eta,
    angle_phi,
    angle_theta,
    ks_normals,
    quotient_normals,
)
from .volume import (
    closed_form_volume,
    coxeter_integral,
    gauss_bonnet_volume,
    ks_face_inventory,
    manifold_volume_formula,
    orbifold_euler_char,
    poincare_volume,
    schlafli_integrate,
    spherical_regular_tet_volume,
    stabilizer_orders,
)

T1 = math.sqrt(0.6)
T2 = math.sqrt(0.5)
TWO_PI = 2 * math.pi

#: Volume of the polytope at both ends of the upper regime.
COXETER_24_CELL = 4 * math.pi**2 / 3


class CheckFailure(AssertionError):
    """One acceptance comparison missed its tolerance."""


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise CheckFailure(message)


_ASSEMBLED: dict[tuple[str, str], AssembledComplex] = {}


def _assembled(pattern: str, token: str) -> AssembledComplex:
    key = (pattern, token)
    if key not in _ASSEMBLED:
        _ASSEMBLED[key] = assemble_pattern(pattern, FamilyTime.parse(token))
    return _ASSEMBLED[key]


# ---------------------------------------------------------------------------
# combinatorics


def check_f_vectors() -> str:
    """Stratum censuses in all four regimes, cross-checking backends."""
    expected = (
        ("0.85", "both", (24, 108, 144, 60)),
        ("t1", "both", (24, 100, 120, 44)),
        ("0.73", "both", (24, 100, 128, 52)),
        ("t2", "both", (22, 92, 116, 46)),
        ("tbar", "both", (22, 92, 116, 46)),
        ("0.3", "geometric", (22, 92, 116, 46)),
    )
    for token, mode, f_vector in expected:
        got = enumerate_strata(ks_normals(FamilyTime.parse(token)), mode=mode).f_vector
        _require(
            got == f_vector,
            f"f-vector at t={token} is {got}, expected {f_vector}",
        )
    return "4 regime censuses exact; backends agree wherever both apply"


def check_critical_angles() -> str:
    """Dihedral angles at the critical times, all to 1e-10."""
    tol = 1e-10
    t1 = FamilyTime.parse("t1")
    values = (
        ("theta at t1", angle_theta(t1), math.pi / 3),
        ("theta at sqrt(1/3)", angle_theta(FamilyTime.parse("tbar")), math.pi / 2),
        ("cos theta at t2", math.cos(angle_theta(FamilyTime.parse("t2"))), 1 / 3),
        ("phi at 1", angle_phi(FamilyTime.parse("1")), math.pi / 2),
        ("phi at t1 from above", angle_phi(t1), 0.0),
        ("eta toward t=0", angle_eta(1e-6), math.acos(-1 / 3)),
    )
    for label, got, want in values:
        _require(
            abs(got - want) <= tol,
            f"{label} is {got!r}, expected {want!r} within {tol}",
        )
    return "6 critical angle values within 1e-10"


# ---------------------------------------------------------------------------
# volume


def check_volume_methods() -> str:
    """Closed forms, Schlafli integration, the Poincare formula, and the
    vanishing limit all tell the same volume story."""
    for token, want in (
        ("1", COXETER_24_CELL),
        ("t1", COXETER_24_CELL),
        ("tbar", 5 * math.pi**2 / 6),
    ):
        got = closed_form_volume(float(FamilyTime.parse(token).t))
        _require(
            abs(got - want) <= 1e-12,
            f"closed-form volume at t={token} is {got!r}, expected {want!r}",
        )

    worst = 0.0
    for span, regime, start in (
        ((T1, 1.0), Regime.ABOVE_T1, 1.0),
        ((T2, T1), Regime.BETWEEN, T2),
        ((0.05, T2), Regime.BELOW_T2, T2),
    ):
        curve = schlafli_integrate(
            span,
            ks_face_inventory(regime),
            initial=(start, closed_form_volume(start)),
            steps=100,
        )
        for t, vol in curve.samples:
            worst = max(worst, abs(vol - closed_form_volume(t)))
    _require(worst <= 1e-6, f"Schlafli drifts from the closed form by {worst:.3e}")

    poincare_worst = 0.0
    for t in (0.95, 0.9, 0.85, 0.8, 0.76, 0.73, 0.71, 0.6, 0.5, 0.4):
        normals = ks_normals(FamilyTime.of(t))
        complex_ = enumerate_strata(normals, mode="geometric")
        got = poincare_volume(normals, complex_)
        poincare_worst = max(poincare_worst, abs(got - closed_form_volume(t)))
    _require(
        poincare_worst <= 1e-6,
        f"Poincare formula misses the closed form by {poincare_worst:.3e}",
    )

    t = 1e-3
    slope = 8 * math.sqrt(2) * (math.pi - math.acos(-1 / 3))
    drift = abs(closed_form_volume(t) - slope * t)
    _require(drift < 1e-4, f"volume at t=1e-3 is {drift:.3e} away from its linear limit")
    return "closed forms exact; 303 Schlafli and 10 Poincare samples within 1e-6"


def check_reference_integrals() -> str:
    got = coxeter_integral()
    _require(
        abs(got - math.pi**2 / 3) <= 1e-8,
        f"dihedral-angle integral is {got!r}, expected pi^2/3",
    )
    tet = spherical_regular_tet_volume(math.pi)
    _require(
        abs(tet - math.pi**2) <= 1e-6,
        f"spherical tetrahedron volume at theta=pi is {tet!r}, expected pi^2",
    )
    return "both reference integrals within tolerance"


def check_euler_characteristics() -> str:
    """Orbifold values at the Coxeter times, complex values for the glued
    covers, and the Gauss-Bonnet cross-check."""
    for token, want in (
        ("1", Fraction(1)),
        ("t1", Fraction(1)),
        ("tbar", Fraction(5, 8)),
    ):
        ft = FamilyTime.parse(token)
        normals = ks_normals(ft)
        complex_ = enumerate_strata(normals)
        chi = orbifold_euler_char(complex_, stabilizer_orders(normals, complex_))
        _require(
            chi == want,
            f"orbifold Euler characteristic at t={token} is {chi}, expected {want}",
        )
        drift = abs(gauss_bonnet_volume(chi) - closed_form_volume(float(ft.t)))
        _require(
            drift <= 1e-9,
            f"Gauss-Bonnet volume at t={token} misses the closed form by {drift:.3e}",
        )
    for pattern, token, want in (("W", "1", 8), ("W", "tbar", 5), ("N", "1", 4)):
        chi = complex_euler_char(_assembled(pattern, token))
        _require(
            chi == want,
            f"complex {pattern} at t={token} has chi={chi}, expected {want}",
        )
    return "orbifold 1, 1, 5/8; complexes 8, 5, 4; Gauss-Bonnet agrees to 1e-9"


# ---------------------------------------------------------------------------
# assembly


def check_assembly() -> str:
    """Cone angles, surface censuses, cusps, and area identities of the
    three glued spaces at a generic time."""
    token = "0.9"
    theta = angle_theta(FamilyTime.parse(token))
    phi = angle_phi(FamilyTime.parse(token))
    tol = 1e-12
    torus_area = 4 * math.pi - 2 * (4 * phi)
    klein_area = 4 * math.pi - 2 * (6 * theta)

    w = _assembled("W", token)
    singular = [
        c for c in face_cycles(w) if abs(c.total_angle - TWO_PI) > CONE_ANGLE_EPS
    ]
    red = sum(1 for c in singular if abs(c.total_angle - 2 * theta) <= tol)
    green = sum(1 for c in singular if abs(c.total_angle - 4 * phi) <= tol)
    _require(
        (red, green, len(singular)) == (48, 16, 64),
        f"W cone-angle census is {red} red, {green} green of {len(singular)}",
    )
    surfaces = stratum_surfaces(w)
    tori = [s for s in surfaces if abs(s.transverse_angle - 2 * theta) <= tol]
    spheres = [s for s in surfaces if abs(s.transverse_angle - 4 * phi) <= tol]
    _require(
        (len(tori), len(spheres), len(surfaces)) == (12, 8, 20),
        f"W surface census is {len(tori)} red, {len(spheres)} green of {len(surfaces)}",
    )
    for s in tori:
        _require(
            s.euler_characteristic == 0
            and len(s.cone_points) == 2
            and all(abs(c - 4 * phi) <= tol for c in s.cone_points),
            "a W red surface is not a torus with two cone points of 4*phi",
        )
        _require(
            abs(s.area - torus_area) <= 1e-9,
            f"W torus area {s.area!r} misses 4*pi - 8*phi",
        )
    for s in spheres:
        _require(
            s.euler_characteristic == 2
            and len(s.cone_points) == 3
            and all(abs(c - 2 * theta) <= tol for c in s.cone_points),
            "a W green surface is not a sphere with three cone points of 2*theta",
        )

    n = _assembled("N", token)
    singular = [
        c for c in face_cycles(n) if abs(c.total_angle - TWO_PI) > CONE_ANGLE_EPS
    ]
    sixfold = sum(1 for c in singular if abs(c.total_angle - 6 * theta) <= tol)
    green = sum(1 for c in singular if abs(c.total_angle - 4 * phi) <= tol)
    _require(
        (sixfold, green, len(singular)) == (8, 8, 16),
        f"N cone-angle census is {sixfold} sixfold, {green} green of {len(singular)}",
    )
    n_surfaces = stratum_surfaces(n)
    green_tori = [
        s
        for s in n_surfaces
        if s.euler_characteristic == 0
        and len(s.cone_points) == 2
        and all(abs(c - 4 * phi) <= tol for c in s.cone_points)
    ]
    red_torus = [
        s
        for s in n_surfaces
        if s.euler_characteristic == 0
        and len(s.cone_points) == 4
        and all(abs(c - 6 * theta) <= tol for c in s.cone_points)
    ]
    _require(
        (len(green_tori), len(red_torus), len(n_surfaces)) == (2, 1, 3),
        f"N surface census is {len(green_tori)}+{len(red_torus)} of {len(n_surfaces)}",
    )
    cusps = cusp_cycles(n)
    _require(
        len(cusps) == 2
        and all(len(c.cells) == 6 and c.monodromy_sign == 1 for c in cusps),
        f"N has {len(cusps)} cusp cycles, expected 2 of length 6 with sign +1",
    )

    m = _assembled("M", token)
    m_surfaces = stratum_surfaces(m)
    _require(len(m_surfaces) == 2, f"M has {len(m_surfaces)} surfaces, expected 2")
    orientable = [s for s in m_surfaces if s.orientable]
    flipped = [s for s in m_surfaces if not s.orientable]
    _require(
        len(orientable) == 1 and len(flipped) == 1,
        "M should carry one orientable and one non-orientable surface",
    )
    _require(
        abs(orientable[0].area - torus_area) <= 1e-9,
        f"M torus area {orientable[0].area!r} misses 4*pi - 2*(4*phi)",
    )
    _require(
        abs(flipped[0].area - klein_area) <= 1e-9,
        f"M Klein-bottle area {flipped[0].area!r} misses 4*pi - 2*(6*theta)",
    )
    return "cone angles, surfaces, cusps and areas all match at t=0.9"


# ---------------------------------------------------------------------------
# arithmetic


def _odd_prime_factors(n: int) -> set[int]:
    n = abs(n)
    while n % 2 == 0:
        n //= 2
    out: set[int] = set()
    p = 3
    while p * p <= n:
        while n % p == 0:
            out.add(p)
            n //= p
        p += 2
    if n > 1:
        out.add(n)
    return out


def check_commensurability() -> str:
    """Ramification sets of the quotient presets, the induced equivalences,
    the Hilbert product formula, and basis independence."""
    results = {}
    for token, want in (
        ("1", RamificationSet.of()),
        ("t1", RamificationSet.of(2, 5)),
        ("tbar", RamificationSet.of()),
    ):
        normals = [
            v.coords
            for _, v in sorted(quotient_normals(FamilyTime.parse(token)).items())
        ]
        result = commensurability_pipeline(normals)
        _require(
            result.invariant.hasse == want,
            f"hasse set at t={token} is {result.invariant.hasse}, expected {want}",
        )
        results[token] = result
    _require(
        commensurable(results["1"].invariant, results["tbar"].invariant),
        "t=1 and t=sqrt(1/3) should land in the same class",
    )
    _require(
        not commensurable(results["1"].invariant, results["t1"].invariant),
        "t=1 and t=sqrt(3/5) should land in different classes",
    )

    rng = random.Random(20260819)
    nonzero = [x for x in range(-50, 51) if x]
    for _ in range(500):
        a, b = rng.choice(nonzero), rng.choice(nonzero)
        places = {INFINITE_PLACE, 2} | _odd_prime_factors(a) | _odd_prime_factors(b)
        product = 1
        for place in places:
            product *= hilbert_symbol(a, b, place)
        _require(product == 1, f"Hilbert product over all places fails for ({a}, {b})")

    for token, result in sorted(results.items()):
        diag = result.diagonal
        expected = result.invariant.hasse
        checked = 0
        while checked < 100:
            change = [
                [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(5)]
                for _ in range(5)
            ]
            m = [
                [
                    sum(change[i][k] * diag[k] * change[j][k] for k in range(5))
                    for j in range(5)
                ]
                for i in range(5)
            ]
            try:
                new_diag = diagonalize(m)
            except ValueError:
                continue  # singular change of basis, resample
            checked += 1
            _require(
                hasse_invariant(new_diag) == expected,
                f"hasse set at t={token} changed under a basis change",
            )
    return "3 hasse sets, both equivalences, 500 product pairs, 300 basis changes"


def check_manifold_volume_identity() -> str:
    """The doubled closed form equals the glued-manifold volume formula
    throughout the upper regime."""
    worst = 0.0
    for i in range(101):
        t = T1 + (1.0 - T1) * i / 100
        lhs = 2 * closed_form_volume(t)
        rhs = manifold_volume_formula(6 * angle_theta(t), 4 * angle_phi(t))
        worst = max(worst, abs(lhs - rhs))
    _require(
        worst <= 1e-9,
        f"doubled closed form misses the glued-manifold formula by {worst:.3e}",
    )
    return "identity holds at 101 times across the upper regime"


CHECKS: tuple[tuple[str, Callable[[], str]], ...] = (
    ("f-vectors", check_f_vectors),
    ("angles", check_critical_angles),
    ("volumes", check_volume_methods),
    ("integrals", check_reference_integrals),
    ("euler-characteristics", check_euler_characteristics),
    ("assembly", check_assembly),
    ("commensurability", check_commensurability),
    ("volume-identity", check_manifold_volume_identity),
)


def run_checks(section: str = "") -> list[CheckResult]:
    """Run every check whose name contains ``section`` (all by default).

    Failures never raise: each item reports through its CheckResult so a
    batch always covers the full list.
    """
    results = []
    for name, fn in CHECKS:
        if section and section not in name:
            continue
        try:
            detail = fn()
        except CheckFailure as failure:
            results.append(CheckResult(name, False, str(failure)))
        except Exception as error:  # noqa: BLE001 - reported, not hidden
            results.append(CheckResult(name, False, f"{type(error).__name__}: {error}"))
        else:
            results.append(CheckResult(name, True, detail))
    return results
