"""Exact rational checks behind the bilinear form.

Mixed moments counted by Dyck paths agree with brute-force enumeration of
non-crossing pair partitions, and the rescaled U polynomials diagonalize the
form with weights gamma_lr^(k+1).
"""
from fractions import Fraction

from subwigner.ensemble import OverlapGeometry
from subwigner.freeprob import moment_monomial, moment_polynomial, moment_via_partitions, scaled_u_coeffs

geom = OverlapGeometry.exact(Fraction(1, 2), Fraction(1, 3), Fraction(1, 4))
for k, q in [(2, 2), (3, 1), (4, 4), (5, 3)]:
    a, b = moment_monomial(k, q, geom), moment_via_partitions(k, q, geom)
    print(f"<x^{k}, x^{q}> = {a}  (partitions: {b})")

half = Fraction(1, 2)
sym = OverlapGeometry.exact(half, half, Fraction(1, 8))
for k in range(4):
    row = [moment_polynomial(scaled_u_coeffs(k, half), scaled_u_coeffs(q, half), sym) for q in range(4)]
    print(f"U_{k}: " + "  ".join(str(v) for v in row))
