"""Hyperbolic Coxeter 4-polytopes from space-like wall normals.

Combinatorial strata, deformation of dihedral angles, volume by several
independent methods, cone-manifold assembly, and arithmetic
commensurability invariants, with an exact multi-quadratic backend
alongside binary64 throughout.
"""

from __future__ import annotations

__version__ = "0.1.0"
