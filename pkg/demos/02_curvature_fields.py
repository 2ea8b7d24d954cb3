#!/usr/bin/env python3
"""Curvature fields: parsing, symbolic gradients, and nonexistence evidence.

Prescribed-curvature loops cannot exist for every field K: boundedness
(|K| <= 1 everywhere) rules them out, and so does a gradient that keeps a
fixed sign against any of the Killing fields e1, z, z^2 of the half-plane.
Those conditions are global, so the report below is sampled evidence on a
grid, never a certificate.
"""

import numpy as np

from hyploop import RegionBox, check_nonexistence, eval_field, grad_field, parse_field

print("== parsing and evaluation ==")
field = parse_field("z1^2 + (z2-2)^2")
print("text round trip:", field.text())
print("K(0, 2) =", eval_field(field, 0.0, 2.0))
print("K on a grid:\n", eval_field(field, np.linspace(-1, 1, 3)[:, None], np.linspace(1, 3, 3)))

print("\n== symbolic gradients ==")
d1, d2 = grad_field(field)
print("dK/dz1 =", d1.text())
print("dK/dz2 =", d2.text())
print("gradient at the minimum:", eval_field(d1, 0.0, 2.0), eval_field(d2, 0.0, 2.0))
print("(the hyperbolic gradient is z2^2 times this, with the same zeros)")

box = RegionBox(-2.0, 2.0, 0.5, 3.0)

print("\n== nonexistence evidence ==")
for text in ("tanh(z1)", "1", "z1^2 + (z2-2)^2"):
    rep = check_nonexistence(text, box, samples=24)
    print(f"K = {text!r}")
    print(f"  sup|K| = {rep.sup_abs:.4f}  bounded-by-1: {rep.supnorm_le_one}")
    print(f"  fixed-sign pairings: e1={rep.monotone_e1} radial={rep.monotone_radial}"
          f" squared={rep.monotone_squared}")
    print(f"  blocked: {rep.blocked}   ({rep.note})")
