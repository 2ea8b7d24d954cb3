#!/usr/bin/env python3
"""Tour of the half-plane primitives and the constant-curvature circle.

The upper half-plane with metric z2**-2 makes circles, distances, and
curvature all explicitly computable.  A closed curve can only have constant
geodesic curvature k when k > 1, and then it is a circle of hyperbolic
radius artanh(1/k).  This script builds that circle, checks the closed
forms, and shows that translations z1*e1 + z2*u act as isometries.
"""

import numpy as np

from hyploop import (
    HypDisk,
    HyperPoint,
    energy,
    geodesic_curvature,
    hyp_distance,
    disk_to_euclid,
    loop_length,
    reference_loop,
    residual,
    translate,
)
from hyploop.loops import curvature_radius

k = 2.0

print("== distances ==")
print("d((0,1),(0,e))      =", hyp_distance((0, 1), (0, np.e)), "(exactly 1)")
print("d((0,1),(3,1))      =", hyp_distance((0, 1), (3, 1)), "= arccosh(5.5)")

print("\n== hyperbolic disks are Euclidean disks ==")
rho = np.arctanh(1 / k)
center, radius = disk_to_euclid(HypDisk(HyperPoint(0, 1), rho))
print(f"radius-{rho:.4f} disk about (0,1): Euclidean center {center}, radius {radius:.6f}")
print("(the curvature-2 circle: center (0, 2/sqrt3), radius 1/sqrt3)")

print("\n== the reference circle of curvature k =", k, "==")
u = reference_loop(k, 256)
rk = curvature_radius(k)
print("hyperbolic length L(u)  =", loop_length(u), " (closed form R_k =", rk, ")")
print("curvature range         =", geodesic_curvature(u).min(), "..", geodesic_curvature(u).max())
print("residual sup-norm        =", np.abs(residual(u, k)).max())
print("energy                   =", energy(u, k).total, " (closed form k - sqrt(k^2-1) =",
      k - np.sqrt(k * k - 1), ")")

print("\n== translations are isometries ==")
moved = translate((3.0, 0.5), u)
print("translated loop length   =", loop_length(moved))
print("translated curvature gap =", np.abs(geodesic_curvature(moved) - k).max())
print("translated energy        =", energy(moved, k).total)
