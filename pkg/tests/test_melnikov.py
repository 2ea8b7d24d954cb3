import numpy as np
import pytest
from scipy import integrate

from hyploop.errors import NoCritical
from hyploop.fields import RegionBox, parse_field
from hyploop.halfplane import translate
from hyploop.loops import curvature_radius, reference_loop, signed_area
from hyploop.melnikov import (
    asymptotic_check,
    find_critical,
    melnikov_gradient,
    melnikov_grid,
    melnikov_value,
)

QUADRATIC = parse_field("z1^2 + (z2-2)^2")


def brute_force_value(z, k, field_fn):
    """Independent oracle: Cartesian dblquad of z2**-2 K over the Euclidean disk."""
    rk = curvature_radius(k)
    cx, cy = z[0], k * rk * z[1]
    radius = rk * z[1]
    val, _ = integrate.dblquad(
        lambda y, x: field_fn(x, y) / y**2,
        cx - radius, cx + radius,
        lambda x: cy - np.sqrt(max(radius**2 - (x - cx) ** 2, 0.0)),
        lambda x: cy + np.sqrt(max(radius**2 - (x - cx) ** 2, 0.0)),
        epsabs=1e-12, epsrel=1e-12,
    )
    return val


class TestValue:
    def test_constant_field_closed_form(self):
        # the weighted disk volume: 2 pi (k R_k - 1)
        for k in (1.5, 2.0, 5.0):
            rk = curvature_radius(k)
            expect = 2 * np.pi * (k * rk - 1)
            assert melnikov_value((0.7, 1.3), k, "1") == pytest.approx(expect, abs=1e-8)

    def test_constant_field_translation_invariant(self, rng):
        vals = [
            melnikov_value((z1, z2), 2.0, "1")
            for z1, z2 in zip(rng.normal(0, 3, 10), rng.uniform(0.3, 4, 10))
        ]
        assert np.ptp(vals) < 1e-9

    def test_vertical_field_closed_form(self):
        # for K = z2 the angular integral collapses: F = 2 pi z2 (k R_k - 1)
        k = 2.0
        for z in ((0.0, 1.0), (2.0, 0.5), (-1.0, 3.0)):
            expect = 2 * np.pi * z[1] * (k * curvature_radius(k) - 1)
            assert melnikov_value(z, k, "z2") == pytest.approx(expect, abs=1e-10)

    def test_against_brute_force_quadrature(self):
        k = 2.0
        val = melnikov_value((0.0, 1.0), k, "z2")
        oracle = brute_force_value((0.0, 1.0), k, lambda x, y: y)
        assert abs(val - oracle) / abs(oracle) < 1e-7

    def test_quadratic_against_brute_force(self):
        k = 2.0
        z = (0.3, 1.8)
        val = melnikov_value(z, k, QUADRATIC)
        oracle = brute_force_value(z, k, lambda x, y: x**2 + (y - 2) ** 2)
        assert abs(val - oracle) / abs(oracle) < 1e-7

    def test_matches_weighted_area_of_translated_reference(self, rng):
        # the disk average equals -2 pi times the weighted signed area
        k = 2.0
        fields = ["1", "z2", "z1^2 + (z2-2)^2", "tanh(z1)", "exp(-z2)"]
        for text in fields:
            z = (rng.normal(0, 1), rng.uniform(0.8, 2.5))
            lhs = melnikov_value(z, k, text)
            rhs = -2 * np.pi * signed_area(translate(z, reference_loop(k, 256)), text)
            assert lhs == pytest.approx(rhs, abs=1e-8)

    def test_quadrature_refinement_stable(self):
        a = melnikov_value((0.2, 1.5), 2.0, QUADRATIC, nr=64, na=128)
        b = melnikov_value((0.2, 1.5), 2.0, QUADRATIC, nr=128, na=256)
        assert abs(a - b) < 1e-10


class TestGradient:
    def test_constant_field(self):
        assert np.abs(melnikov_gradient((0.4, 1.1), 2.0, "1")).max() < 1e-12

    @pytest.mark.parametrize(
        "text", ["z2", "z1^2 + (z2-2)^2", "tanh(z1)", "sin(z1) * cos(z2)", "exp(-z2)"]
    )
    def test_matches_finite_differences(self, text, rng):
        k = 2.0
        z = np.array([rng.normal(0, 1), rng.uniform(1.0, 2.5)])
        g = melnikov_gradient(z, k, text)
        h = 1e-5
        fd = np.array(
            [
                (melnikov_value(z + [h, 0], k, text) - melnikov_value(z - [h, 0], k, text)) / (2 * h),
                (melnikov_value(z + [0, h], k, text) - melnikov_value(z - [0, h], k, text)) / (2 * h),
            ]
        )
        assert np.abs(g - fd).max() / max(1.0, np.abs(fd).max()) < 1e-6

    def test_even_field_symmetry(self):
        # K = z1^2 is even in q1, so dF/dz1 vanishes on the axis z1 = 0
        for z2 in (0.7, 1.5, 3.0):
            g = melnikov_gradient((0.0, z2), 2.0, "z1^2")
            assert abs(g[0]) < 1e-12


class TestCriticalSearch:
    BOX = RegionBox(-0.6, 0.6, 1.2, 2.8)

    def test_constant_field_no_critical_point(self):
        search = find_critical(2.0, "1", self.BOX, grid=8)
        assert search.points == ()
        assert "constant" in search.note
        with pytest.raises(NoCritical):
            search.require_points()

    def test_quadratic_minimum(self):
        search = find_critical(2.0, QUADRATIC, self.BOX, grid=12)
        assert len(search.points) == 1
        p = search.points[0]
        assert abs(p.z[0]) < 1e-8
        assert p.classification == "min"
        assert search.interior_min

    def test_quadratic_center_against_axis_scan(self):
        # cross-check the refined z2 with a 1-D brute scan of F(0, .)
        search = find_critical(2.0, QUADRATIC, self.BOX, grid=12)
        z2s = np.linspace(1.2, 2.8, 2001)
        values = melnikov_grid(np.zeros_like(z2s), z2s, 2.0, QUADRATIC)
        i = int(values.argmin())
        a, b, c = values[i - 1], values[i], values[i + 1]
        refined = z2s[i] + 0.5 * (a - c) / (a - 2 * b + c) * (z2s[1] - z2s[0])
        assert search.points[0].z[1] == pytest.approx(refined, abs=1e-9)

    def test_negated_field_is_max(self):
        search = find_critical(2.0, "-(z1^2) - (z2-2)^2", self.BOX, grid=12)
        assert len(search.points) == 1
        assert search.points[0].classification == "max"
        assert search.points[0].z[1] == pytest.approx(np.sqrt(3), abs=1e-4)
        assert search.interior_max

    def test_monotone_field_has_no_zero(self):
        search = find_critical(2.0, "tanh(z1)", self.BOX, grid=8)
        assert search.points == ()

    def test_gradient_at_root_small(self):
        search = find_critical(2.0, QUADRATIC, self.BOX, grid=12)
        assert np.abs(search.points[0].grad).max() < 1e-10


class TestAsymptotics:
    def test_vertical_field_decreasing(self):
        errs = [asymptotic_check((0.0, 2.0), k, "z2").relerr for k in (10.0, 50.0, 250.0)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-2

    def test_constant_field_closed_forms(self):
        # lhs = 2 (k R_k - 1) / (R_k^2 z2^2) against rhs = 1/z2^2
        z = (0.5, 1.5)
        errs = []
        for k in (10.0, 50.0, 250.0):
            chk = asymptotic_check(z, k, "1")
            rk = curvature_radius(k)
            lhs_exact = 2 * (k * rk - 1) / (rk**2 * z[1] ** 2)
            assert chk.lhs == pytest.approx(lhs_exact, rel=1e-9)
            assert chk.rhs == pytest.approx(1 / z[1] ** 2, rel=1e-14)
            errs.append(chk.relerr)
        assert errs[0] > errs[1] > errs[2]

    def test_zero_at_field_minimum_reports_absolute_gap(self):
        errs = []
        for k in (10.0, 50.0, 250.0):
            chk = asymptotic_check((0.0, 2.0), k, QUADRATIC)
            assert chk.rhs == 0.0
            errs.append(chk.relerr)  # absolute gap when rhs vanishes
        assert errs[0] > errs[1] > errs[2]
