"""Exact primitives of the Poincare half-plane model.

The model is the upper half-plane ``{(z1, z2) : z2 > 0}`` with metric
``z2**-2 * delta``.  Everything here is a pure function of its inputs:
distances, hyperbolic-disk/Euclidean-disk conversion, the quadratic
connection term entering covariant derivatives along curves, the
translation group ``u -> z1*e1 + z2*u``, and pointwise geodesic curvature
of a sampled loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLoop

# A loop is "degenerate" when its slowest sample is this much below its
# fastest one; guards the division by |u'|^3 in curvature formulas.
SPEED_FLOOR = 1e-8


@dataclass(frozen=True)
class HyperPoint:
    """A point of the half-plane model; requires z2 > 0."""

    z1: float
    z2: float

    def __post_init__(self):
        if not self.z2 > 0:
            raise ValueError(f"HyperPoint needs z2 > 0, got z2={self.z2}")

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2], dtype=float)


@dataclass(frozen=True)
class HypDisk:
    """Hyperbolic disk: center in the half-plane, hyperbolic radius rho >= 0."""

    center: HyperPoint
    rho: float

    def __post_init__(self):
        if not self.rho >= 0:
            raise ValueError(f"HypDisk needs rho >= 0, got {self.rho}")


def as_point(z) -> HyperPoint:
    """Coerce a HyperPoint, pair, or length-2 array into a HyperPoint."""
    if isinstance(z, HyperPoint):
        return z
    z1, z2 = float(z[0]), float(z[1])
    return HyperPoint(z1, z2)


def rot90(v: np.ndarray) -> np.ndarray:
    """Complex multiplication by i on 2-vectors: (v1, v2) -> (-v2, v1).

    Works on a single vector or an (N, 2) array of vectors.
    """
    v = np.asarray(v, dtype=float)
    return np.stack((-v[..., 1], v[..., 0]), axis=-1)


def complex_square(v: np.ndarray) -> np.ndarray:
    """z**2 in complex notation: (v1**2 - v2**2, 2*v1*v2)."""
    v = np.asarray(v, dtype=float)
    return np.stack((v[..., 0] ** 2 - v[..., 1] ** 2, 2.0 * v[..., 0] * v[..., 1]), axis=-1)


def hyp_distance(p, q) -> float:
    """Hyperbolic distance, via cosh d = 1 + |p-q|**2 / (2 p2 q2)."""
    p, q = as_point(p), as_point(q)
    d2 = (p.z1 - q.z1) ** 2 + (p.z2 - q.z2) ** 2
    return float(np.arccosh(1.0 + d2 / (2.0 * p.z2 * q.z2)))


def disk_to_euclid(disk: HypDisk) -> tuple[np.ndarray, float]:
    """Euclidean center and radius of a hyperbolic disk.

    The image is the Euclidean disk of center ``(c1, c2*cosh(rho))`` and
    radius ``c2*sinh(rho)``; it always stays inside the half-plane.
    """
    c = disk.center
    return np.array([c.z1, c.z2 * np.cosh(disk.rho)]), float(c.z2 * np.sinh(disk.rho))


def christoffel(v) -> np.ndarray:
    """Quadratic connection term Gamma(v) = -i v**2 = (2 v1 v2, v2**2 - v1**2).

    Defined on all of R^2 (it is a polynomial); validity of the base point
    is the caller's concern, which lets Newton iterates evaluate it while
    transiently outside the half-plane.
    """
    v = np.asarray(v, dtype=float)
    return np.stack((2.0 * v[..., 0] * v[..., 1], v[..., 1] ** 2 - v[..., 0] ** 2), axis=-1)


def christoffel_jac(v, w) -> np.ndarray:
    """Differential of ``christoffel`` at v applied to w: 2*(w2*v - w1*i*v)."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return 2.0 * (w[..., 1:2] * v - w[..., 0:1] * rot90(v))


def translate(z, u):
    """Apply the hyperbolic translation ``u -> z1*e1 + z2*u``.

    ``u`` may be a point-like, an (N, 2) sample array, or a Loop (anything
    with a ``samples`` attribute and a one-argument constructor); the image
    has the same kind.  This is an isometry, so hyperbolic distances are
    preserved.
    """
    zp = as_point(z)
    if hasattr(u, "samples"):
        return type(u)(zp.z1 * np.array([1.0, 0.0]) + zp.z2 * u.samples)
    if isinstance(u, HyperPoint):
        return HyperPoint(zp.z1 + zp.z2 * u.z1, zp.z2 * u.z2)
    out = np.asarray(u, dtype=float) * zp.z2
    out[..., 0] += zp.z1
    return out


def speed_profile(u) -> np.ndarray:
    """Hyperbolic speed |u'|_g = u2**-1 |u'| at each sample of a loop."""
    up = u.deriv(1)
    return np.hypot(up[:, 0], up[:, 1]) / u.samples[:, 1]


def check_regular(u) -> np.ndarray:
    """Return |u'| per sample; raise DegenerateLoop when it nearly vanishes."""
    up = u.deriv(1)
    sp = np.hypot(up[:, 0], up[:, 1])
    if sp.max() == 0.0 or sp.min() < SPEED_FLOOR * sp.max():
        raise DegenerateLoop(
            f"loop speed collapses: min |u'| = {sp.min():.3e} vs max {sp.max():.3e}"
        )
    return sp


def geodesic_curvature(u) -> np.ndarray:
    """Signed geodesic curvature at every sample of a half-plane loop.

    kappa = u2 * (u'' - u2**-1 Gamma(u')) . (i u') / |u'|**3, positive for
    positively oriented circles.  Raises DegenerateLoop when the loop is
    not regular enough to divide by |u'|**3.
    """
    sp = check_regular(u)
    up, upp = u.deriv(1), u.deriv(2)
    u2 = u.samples[:, 1]
    cov = upp - christoffel(up) / u2[:, None]
    return u2 * (cov * rot90(up)).sum(axis=1) / sp**3
