"""Flat-plane counterpart of the half-plane pipeline; the built-in oracle.

Everything simplifies: the reference loop is the circle x/k, the metric
weight is 1 and the connection term vanishes, translations are literal,
and the disk average is a plain integral of K over D_{1/k}(z).  The
linearization at a translated circle,

    phi -> -phi'' + i phi' - k**2 * mean(phi . u_ref) * u_ref,

diagonalizes over complex Fourier modes of phi1 + i*phi2 with multipliers
m**2 - m plus a rank-one part at m = 1, so kernel handling and solves are
a few lines.  The reduction and critical-point machinery is shared with
the half-plane through the problem-adapter seam.
"""

from __future__ import annotations

import numpy as np

from ._quad import adaptive_gauss_legendre, disk_rule
from .errors import DegenerateLoop, NotOrthogonal, QuadratureFailure
from .fields import RegionBox, as_field, eval_field, grad_field
from .halfplane import rot90
from .loops import Loop, VerifyReport, dot_mean, is_embedded, smean, winding_number
from .melnikov import (
    NA_DEFAULT,
    NR_DEFAULT,
    CriticalSearch,
    search_critical_points,
)
from .reduction import (
    ContinuationResult,
    ReductionState,
    SolveReport,
    continue_generic,
    reduce_generic,
    solve_generic,
)


def reference_circle(k: float, n: int = 256) -> Loop:
    """The curvature-k circle x/k about the origin."""
    if not k > 0:
        raise ValueError(f"Euclidean curvature needs k > 0, got {k}")
    return Loop.from_function(
        lambda theta: np.column_stack((np.cos(theta), np.sin(theta))) / k, n
    )


def euclid_length(u: Loop) -> float:
    """L(u) = sqrt(mean |u'|^2)."""
    up = u.deriv(1)
    value = float(np.sqrt((up**2).sum(axis=1).mean()))
    if value < 1e-14 * max(1.0, float(np.abs(u.samples).max())):
        raise DegenerateLoop("loop is numerically constant")
    return value


def residual_euclid(u: Loop, k: float, eps: float = 0.0, field=None) -> np.ndarray:
    """Flat-plane curvature residual -u'' + L(u)(k + eps*K(u)) i u'."""
    length = euclid_length(u)
    kappa = np.full(u.n, float(k))
    if eps != 0.0:
        kappa = kappa + eps * eval_field(field, u.samples[:, 0], u.samples[:, 1])
    return -u.deriv(2) + length * kappa[:, None] * rot90(u.deriv(1))


def curvature_euclid(u: Loop) -> np.ndarray:
    up, upp = u.deriv(1), u.deriv(2)
    sp = np.hypot(up[:, 0], up[:, 1])
    if sp.min() < 1e-8 * sp.max():
        raise DegenerateLoop("loop speed collapses")
    return (upp * rot90(up)).sum(axis=1) / sp**3


def signed_area_euclid(u: Loop, field, tol: float = 1e-12) -> float:
    """A_K(u) = mean Q(u) . (i u') with div Q = K, split half/half per axis."""
    expr = as_field(field)
    u1, u2 = u.samples[:, 0], u.samples[:, 1]
    iup = rot90(u.deriv(1))
    q1 = adaptive_gauss_legendre(
        lambda idx, t: eval_field(expr, t, u2[idx]), np.zeros_like(u1), u1, tol=tol
    )
    q2 = adaptive_gauss_legendre(
        lambda idx, t: eval_field(expr, u1[idx], t), np.zeros_like(u2), u2, tol=tol
    )
    return dot_mean(np.column_stack((0.5 * q1, 0.5 * q2)), iup)


def energy_euclid(u: Loop, k: float, eps: float = 0.0, field=None, tol: float = 1e-12) -> float:
    """L(u) + k * A_1(u) + eps * A_K(u); A_1 via the closed gauge z/2."""
    area1 = 0.5 * dot_mean(u.samples, rot90(u.deriv(1)))
    pert = signed_area_euclid(u, field, tol) if (eps != 0.0 and field is not None) else 0.0
    return euclid_length(u) + k * area1 + eps * pert


# ---------------------------------------------------------------------------
# Linearization over complex Fourier modes
# ---------------------------------------------------------------------------


def _complex_modes(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n)


def apply_linearization_euclid(phi: np.ndarray, k: float) -> np.ndarray:
    """Apply the circle linearization to a field, exactly per complex mode."""
    from .linearized import denoise_spectrum

    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0]
    m = _complex_modes(n)
    (c,) = denoise_spectrum(np.fft.fft(phi[:, 0] + 1j * phi[:, 1]) / n)
    out = (m**2 - m) * c
    idx = int(np.where(m == 1.0)[0][0])
    out[idx] = -c[idx].real
    w = np.fft.ifft(out * n)
    return np.column_stack((w.real, w.imag))


def kernel_basis_euclid(k: float, n: int) -> np.ndarray:
    """Kernel of the circle linearization: (u_ref', e1, e2), shape (3, N, 2).

    The tangent field is built analytically (u_ref' = i x / k), not by
    spectral differentiation, so applying the operator to it stays at
    machine precision.
    """
    theta = 2.0 * np.pi * np.arange(n) / n
    tangent = np.column_stack((-np.sin(theta), np.cos(theta))) / k
    e1 = np.column_stack((np.ones(n), np.zeros(n)))
    e2 = np.column_stack((np.zeros(n), np.ones(n)))
    return np.stack((tangent, e1, e2))


def solve_linearization_euclid(f: np.ndarray, k: float, orth_tol: float = 1e-9) -> np.ndarray:
    """Solve the circle linearization for the kernel-orthogonal field.

    The right-hand side must be orthogonal to (u_ref', e1, e2); modes 0 and
    the real part at mode 1 carry the kernel, every other multiplier
    m**2 - m inverts directly.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    m = _complex_modes(n)
    fc = np.fft.fft(f[:, 0] + 1j * f[:, 1]) / n
    idx0 = int(np.where(m == 0.0)[0][0])
    idx1 = int(np.where(m == 1.0)[0][0])
    offending = max(abs(fc[idx0]), abs(fc[idx1].imag))
    fnorm = np.sqrt(dot_mean(f, f))
    if orth_tol is not None and offending > orth_tol * max(1.0, fnorm):
        raise NotOrthogonal(
            f"right-hand side has a kernel component of size {offending:.3e}",
            projection=np.array([fc[idx0].real, fc[idx0].imag, fc[idx1].imag]),
        )
    mult = m**2 - m
    mult[idx0] = np.inf
    mult[idx1] = np.inf
    g = fc / mult
    g[idx1] = -fc[idx1].real
    w = np.fft.ifft(g * n)
    return np.column_stack((w.real, w.imag))


# ---------------------------------------------------------------------------
# Disk average over D_{1/k}(z)
# ---------------------------------------------------------------------------


def melnikov_grid_euclid(z1, z2, k: float, field, nr: int = NR_DEFAULT, na: int = NA_DEFAULT):
    expr = as_field(field)
    z1 = np.asarray(z1, dtype=float).ravel()
    z2 = np.asarray(z2, dtype=float).ravel()
    q, w = disk_rule(nr, na)
    q, w = q / k, w / k**2
    out = np.empty(z1.size)
    for start in range(0, z1.size, 256):
        sl = slice(start, min(start + 256, z1.size))
        out[sl] = w @ eval_field(expr, z1[None, sl] + q[:, 0:1], z2[None, sl] + q[:, 1:2])
    return out


def melnikov_value_euclid(z, k: float, field, nr: int = NR_DEFAULT, na: int = NA_DEFAULT,
                          rtol: float = 1e-9, max_doublings: int = 3) -> float:
    """Integral of K over the Euclidean disk D_{1/k}(z), with refinement."""
    z = np.asarray([z[0], z[1]], dtype=float)
    prev = float(melnikov_grid_euclid([z[0]], [z[1]], k, field, nr, na)[0])
    for _ in range(max_doublings):
        nr, na = 2 * nr, 2 * na
        cur = float(melnikov_grid_euclid([z[0]], [z[1]], k, field, nr, na)[0])
        if abs(cur - prev) <= rtol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureFailure(f"disk rule did not stabilize to rtol={rtol}")


def melnikov_gradient_grid_euclid(z1, z2, k: float, field,
                                  nr: int = NR_DEFAULT, na: int = NA_DEFAULT):
    d1, d2 = grad_field(as_field(field))
    z1 = np.asarray(z1, dtype=float).ravel()
    z2 = np.asarray(z2, dtype=float).ravel()
    q, w = disk_rule(nr, na)
    q, w = q / k, w / k**2
    g1 = np.empty(z1.size)
    g2 = np.empty(z1.size)
    for start in range(0, z1.size, 256):
        sl = slice(start, min(start + 256, z1.size))
        p1 = z1[None, sl] + q[:, 0:1]
        p2 = z2[None, sl] + q[:, 1:2]
        g1[sl] = w @ eval_field(d1, p1, p2)
        g2[sl] = w @ eval_field(d2, p1, p2)
    return g1, g2


def find_critical_euclid(k: float, field, region: RegionBox, grid: int = 32,
                         nr: int = NR_DEFAULT, na: int = NA_DEFAULT) -> CriticalSearch:
    """Critical points of the flat disk average over a region box."""
    expr = as_field(field)
    return search_critical_points(
        lambda z1, z2: melnikov_grid_euclid(z1, z2, k, expr, nr, na),
        lambda z1, z2: melnikov_gradient_grid_euclid(z1, z2, k, expr, nr, na),
        region, grid, lower_z2=-np.inf,
    )


# ---------------------------------------------------------------------------
# Verification and the problem adapter
# ---------------------------------------------------------------------------


def killing_integrals_euclid(u: Loop, k: float, eps: float = 0.0, field=None) -> np.ndarray:
    """Pairings of the prescribed curvature with e1, e2, and the rotation field iz."""
    iup = rot90(u.deriv(1))
    kappa = np.full(u.n, float(k))
    if eps != 0.0:
        kappa = kappa + eps * eval_field(field, u.samples[:, 0], u.samples[:, 1])
    fields = (
        np.column_stack((np.ones(u.n), np.zeros(u.n))),
        np.column_stack((np.zeros(u.n), np.ones(u.n))),
        rot90(u.samples),
    )
    return np.array([smean(kappa * (x * iup).sum(axis=1)) for x in fields])


def verify_solution_euclid(u: Loop, k: float, eps: float = 0.0, field=None) -> VerifyReport:
    try:
        length = euclid_length(u)
        res = float(np.abs(residual_euclid(u, k, eps, field)).max())
        up = u.deriv(1)
        speed_defect = float(np.abs(np.hypot(up[:, 0], up[:, 1]) - length).max())
        target = np.full(u.n, float(k))
        if eps != 0.0:
            target = target + eps * eval_field(field, u.samples[:, 0], u.samples[:, 1])
        curvature_defect = float(np.abs(curvature_euclid(u) - target).max())
        return VerifyReport(
            residual_sup=res,
            speed_defect=speed_defect,
            curvature_defect=curvature_defect,
            killing=killing_integrals_euclid(u, k, eps, field),
            mu=winding_number(u),
            embedded=is_embedded(u),
            length=length,
        )
    except DegenerateLoop:
        return VerifyReport(np.inf, np.inf, np.inf, np.full(3, np.inf), 0, False, 0.0)


class EuclideanProblem:
    """Flat-plane callbacks for the shared reduction driver."""

    guard_floor = None
    mean_sq = 1.0

    def __init__(self, k: float, field, n: int = 256):
        self.k = float(k)
        self.field = as_field(field) if field is not None else None
        self.n = int(n)
        self.reference = reference_circle(k, n)
        e1 = np.column_stack((np.ones(n), np.zeros(n)))
        e2 = np.column_stack((np.zeros(n), np.ones(n)))
        self.tangent = np.stack((self.reference.deriv(1), e1, e2))
        self._gram = np.array([[dot_mean(a, b) for b in self.tangent] for a in self.tangent])
        self.reference_energy = energy_euclid(self.reference, k)

    def base_loop(self, z) -> Loop:
        return Loop(self.reference.samples + np.asarray(z, dtype=float))

    def residual(self, u: Loop, eps: float) -> np.ndarray:
        return residual_euclid(u, self.k, eps, self.field)

    def energy_total(self, u: Loop, eps: float) -> float:
        return energy_euclid(u, self.k, eps, self.field)

    def frozen_solve(self, z, rhs, cons):
        tang = self.tangent
        mults = np.linalg.solve(self._gram, -np.array([dot_mean(rhs, t) for t in tang]))
        f = rhs + np.tensordot(mults, tang, axes=1)
        phi_tan = np.tensordot(np.linalg.solve(self._gram, np.asarray(cons, float)), tang, axes=1)
        phi_perp = solve_linearization_euclid(f, self.k, orth_tol=None)
        tcoef = np.linalg.solve(self._gram, np.array([dot_mean(phi_perp, t) for t in tang]))
        phi_perp = phi_perp - np.tensordot(tcoef, tang, axes=1)
        return phi_tan + phi_perp, float(mults[0]), mults[1:]

    def verify(self, u: Loop, eps: float) -> VerifyReport:
        return verify_solution_euclid(u, self.k, eps, self.field)

    def length(self, u: Loop) -> float:
        return euclid_length(u)

    def is_admissible(self, samples: np.ndarray) -> bool:
        return True

    def melnikov_seed(self, region, grid):
        search = find_critical_euclid(self.k, self.field, region, grid)
        points = search.require_points()
        for p in points:
            if p.classification in ("min", "max", "saddle"):
                return np.asarray(p.z)
        return np.asarray(points[0].z)


def reduce_at_euclid(eps: float, z, k: float, field, n: int = 256,
                     warm: ReductionState | None = None) -> ReductionState:
    return reduce_generic(EuclideanProblem(k, field, n), eps, z, warm=warm)


def solve_full_euclid(eps: float, k: float, field, region: RegionBox,
                      grid: int = 16, n: int = 256, seed=None) -> SolveReport:
    """End-to-end flat-plane solve; mirrors the half-plane interface."""
    return solve_generic(EuclideanProblem(k, field, n), eps, region, grid, seed=seed)


def continue_eps_euclid(k: float, field, region: RegionBox, eps_targets,
                        grid: int = 16, n: int = 256) -> ContinuationResult:
    return continue_generic(EuclideanProblem(k, field, n), region, eps_targets, grid)
