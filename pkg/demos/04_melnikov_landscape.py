#!/usr/bin/env python3
"""The disk-average landscape that selects where perturbed loops can live.

Averaging the perturbation field K over the hyperbolic disk of the
curvature-k circle centered at z gives a function F(z) whose critical
points are the only possible limits of (k + eps*K)-loops as eps -> 0.
This script maps F for a quadratic field, locates and classifies its
critical point, cross-checks against the weighted-area identity, and
watches the normalized average converge to K itself as k grows.
"""

import csv

import numpy as np

from hyploop import RegionBox, asymptotic_check, find_critical, melnikov_value
from hyploop.halfplane import translate
from hyploop.loops import reference_loop, signed_area
from hyploop.melnikov import melnikov_grid

k = 2.0
field = "z1^2 + (z2-2)^2"
box = RegionBox(-0.6, 0.6, 1.2, 2.8)

print("== landscape on a coarse grid (written to melnikov_demo.csv) ==")
g1 = np.linspace(box.z1min, box.z1max, 9)
g2 = np.linspace(box.z2min, box.z2max, 9)
zz1, zz2 = np.meshgrid(g1, g2, indexing="ij")
values = melnikov_grid(zz1.ravel(), zz2.ravel(), k, field).reshape(9, 9)
with open("melnikov_demo.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["z1", "z2", "F"])
    for i in range(9):
        for j in range(9):
            writer.writerow([g1[i], g2[j], values[i, j]])
print("min of F on the grid:", values.min(), "at grid point",
      np.unravel_index(values.argmin(), values.shape))

print("\n== refined critical point ==")
search = find_critical(k, field, box, grid=12)
for p in search.points:
    print(f"z = ({p.z[0]:.12f}, {p.z[1]:.12f})  F = {p.value:.9f}  {p.classification}")
    print("  |grad F| =", np.abs(p.grad).max(), " Hessian eigenvalues:",
          np.linalg.eigvalsh(p.hess))
print("grid shows a strict interior minimum:", search.interior_min)
print("note: the center sits near 2/(k R_k) * ... = sqrt(3), where the disk's")
print("Euclidean center crosses the field minimum, not at the minimum itself")

print("\n== identity with the weighted signed area ==")
z = (0.25, 1.8)
lhs = melnikov_value(z, k, field)
rhs = -2 * np.pi * signed_area(translate(z, reference_loop(k, 256)), field)
print(f"F(z) = {lhs:.12f}   -2 pi A_K = {rhs:.12f}   gap = {abs(lhs - rhs):.2e}")

print("\n== large-k limit: F/(pi R_k^2 z2^2) -> K(z)/z2^2 ==")
for kk in (10.0, 50.0, 250.0):
    chk = asymptotic_check((0.0, 2.0), kk, "z2")
    print(f"k = {kk:5.0f}: lhs {chk.lhs:.8f}  rhs {chk.rhs:.8f}  relerr {chk.relerr:.2e}")
