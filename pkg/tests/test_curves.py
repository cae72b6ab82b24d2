"""Plane-curve hierarchy: closure, cusp angle, unit speed."""

import numpy as np
import pytest

import smoothpulse as sp
from smoothpulse.curves import (
    closure_defects,
    curve_area,
    curves_to_csv,
    cusp_tangent_jump,
    r_sequence,
)


class TestRSequence:
    def test_grid_validation(self):
        poly = sp.PhasePolynomial((1.0,))
        with pytest.raises(ValueError):
            r_sequence(poly, 0)
        with pytest.raises(ValueError):
            r_sequence(poly, 1, n_s=64)  # even
        with pytest.raises(ValueError):
            r_sequence(poly, 1, n_s=33)  # too small

    def test_zero_phase_line(self):
        # phi = 0: r_0(s) = s, r_1(s) = s^2/2
        poly = sp.PhasePolynomial((0.0,))
        h = r_sequence(poly, 2, n_s=257)
        np.testing.assert_allclose(h.curves[0], h.s_grid, atol=1e-12)
        np.testing.assert_allclose(h.curves[1], h.s_grid**2 / 2, atol=1e-10)

    def test_linear_phase_closed_form(self):
        # phi(x) = p1 (2s - 1): r_0(s) = (e^{i p1 (2s-1)} - e^{-i p1}) / (2 i p1)
        p1 = 3.0
        poly = sp.PhasePolynomial((p1,))
        h = r_sequence(poly, 1, n_s=2049)
        s = h.s_grid
        want = (np.exp(1j * p1 * (2 * s - 1)) - np.exp(-1j * p1)) / (2j * p1)
        np.testing.assert_allclose(h.curves[0], want, atol=1e-10)

    def test_unit_speed(self):
        # |dr_0/ds| = 1: arc length of r_0 equals the parameter span
        poly = sp.PhasePolynomial((2.0, -0.7))
        h = r_sequence(poly, 1, n_s=4097)
        seg = np.abs(np.diff(h.curves[0]))
        assert seg.sum() == pytest.approx(1.0, rel=1e-6)

    def test_closure_iff_moments_vanish(self, family):
        # converged order-k pulses close the first k curves but not r_k
        poly = family[3]
        h = r_sequence(poly, 4, n_s=4097)
        d = closure_defects(h)
        assert np.all(d[:3] < 1e-9)
        assert d[3] > 1e-4  # the next curve in the hierarchy stays open

    def test_defect_matches_moment_integral(self):
        # r_{m}(1) relates to the moments: for m=0 it is (1/2) eta_0
        from smoothpulse.solver import eta
        poly = sp.PhasePolynomial((2.3, -1.1))
        h = r_sequence(poly, 1, n_s=4097)
        # r_0(1) = int_0^1 e^{i phi(2s-1)} ds = eta_0 / 2
        assert h.curves[0][-1] == pytest.approx(eta(poly, 0) / 2, abs=1e-10)


class TestCuspAngle:
    def test_matches_rotation_angle(self, family):
        for k, poly in family.items():
            jump = cusp_tangent_jump(r_sequence(poly, 1, n_s=257), poly)
            want = ((k + 1) * np.pi) % (2 * np.pi)
            assert jump == pytest.approx(want, abs=1e-9) or \
                jump == pytest.approx(want + 2 * np.pi, abs=1e-9), f"k={k}"

    def test_linear_phase(self):
        poly = sp.PhasePolynomial((0.7,))
        h = r_sequence(poly, 1, n_s=257)
        assert cusp_tangent_jump(h, poly) == pytest.approx(1.4, rel=1e-12)


class TestCurveArea:
    def test_circle_area(self):
        # phi(x) = pi x traces a full circle of radius 1/(2 pi);
        # enclosed area = pi r^2 = 1 / (4 pi)
        poly = sp.PhasePolynomial((np.pi,))
        h = r_sequence(poly, 1, n_s=4097)
        assert abs(curve_area(h)) == pytest.approx(1.0 / (4 * np.pi), rel=1e-3)

    def test_open_line_has_zero_area(self):
        poly = sp.PhasePolynomial((0.0,))
        h = r_sequence(poly, 1, n_s=257)
        assert curve_area(h) == pytest.approx(0.0, abs=1e-12)


class TestCsvExport:
    def test_schema_and_roundtrip(self, tmp_path):
        poly = sp.PhasePolynomial((1.0, -0.3))
        h = r_sequence(poly, 2, n_s=65)
        path = tmp_path / "curves.csv"
        curves_to_csv(h, path)
        import csv
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["s", "m", "re", "im"]
        assert len(rows) == 1 + 2 * 65
        # spot-check one sample
        s, m, re, im = rows[1]
        assert float(s) == 0.0 and int(m) == 0
        assert complex(float(re), float(im)) == pytest.approx(h.curves[0][0])
