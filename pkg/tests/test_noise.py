"""Random-matrix bath and composite telegraph noise models."""

import numpy as np
import pytest

import smoothpulse as sp
from smoothpulse.noise import (
    build_bath,
    empirical_bath_spectrum,
    rtn_average_periodogram,
    rtn_spectrum,
    sample_gue,
    sample_rtn_trajectory,
    semicircle_pdf,
    vrqb_spectrum,
)


class TestGue:
    def test_hermitian(self):
        W = sample_gue(50, seed=1)
        np.testing.assert_allclose(W, W.conj().T, rtol=0, atol=1e-14)

    def test_seed_determinism(self):
        np.testing.assert_array_equal(sample_gue(20, seed=7), sample_gue(20, seed=7))
        assert not np.array_equal(sample_gue(20, seed=7), sample_gue(20, seed=8))

    def test_entry_variances(self):
        # diagonal real variance 1, off-diagonal complex variance 1,
        # averaged over >= 1e4 entries
        W = sample_gue(200, seed=3)
        diag = np.real(np.diag(W))
        off = W[np.triu_indices(200, k=1)]
        assert np.var(diag) == pytest.approx(1.0, abs=0.25)
        assert np.mean(np.abs(off) ** 2) == pytest.approx(1.0, abs=0.05)

    def test_semicircle_eigenvalue_law(self):
        # empirical CDF of eigenvalues of W/sqrt(m) vs semicircle, m = 200
        m = 200
        ev = np.sort(np.linalg.eigvalsh(sample_gue(m, seed=11) / np.sqrt(m)))
        from scipy.integrate import quad
        cdf = np.array([quad(semicircle_pdf, -2, x)[0] for x in ev])
        emp = (np.arange(m) + 0.5) / m
        assert np.max(np.abs(cdf - emp)) < 0.05


class TestBath:
    def test_thermal_state_normalized(self):
        bath = build_bath(m=30, omega_B=1.0, beta=0.7, lam=0.1, seed=5)
        assert bath.rho_diag.sum() == pytest.approx(1.0, rel=1e-12)
        assert np.all(bath.rho_diag >= 0)

    def test_infinite_temperature_uniform(self):
        bath = build_bath(m=30, omega_B=1.0, beta=0.0, lam=0.1, seed=5)
        np.testing.assert_allclose(bath.rho_diag, 1.0 / 30, rtol=1e-12)

    def test_rejects_tiny_dimension(self):
        with pytest.raises(ValueError):
            build_bath(m=1, omega_B=1.0, beta=0.0, lam=0.1, seed=0)


class TestVrqbSpectrum:
    def test_zero_frequency_value(self):
        # S(0) = 16 lam^2 / (3 pi omega_B) at infinite temperature
        lam, omega_B = 0.3, 2.0
        want = 16.0 * lam**2 / (3.0 * np.pi * omega_B)
        assert vrqb_spectrum(0.0, lam, omega_B) == pytest.approx(want, rel=1e-10)

    def test_hard_cutoff(self):
        assert vrqb_spectrum(4.0, 0.5, 1.0) == 0.0
        assert vrqb_spectrum(-4.5, 0.5, 1.0) == 0.0
        assert vrqb_spectrum(3.9, 0.5, 1.0) > 0.0

    def test_sum_rule(self):
        # total power int S domega / 2pi = lam^2 = C(0) at beta = 0
        from scipy.integrate import quad
        lam, omega_B = 0.4, 1.3
        total, _ = quad(lambda w: vrqb_spectrum(w, lam, omega_B),
                        -4 * omega_B, 4 * omega_B, limit=200, epsabs=1e-12)
        assert total / (2 * np.pi) == pytest.approx(lam**2, abs=1e-6)

    def test_even_in_omega_at_beta0(self):
        w = np.linspace(0.1, 3.9, 9)
        np.testing.assert_allclose(vrqb_spectrum(w, 0.2, 1.0),
                                   vrqb_spectrum(-w, 0.2, 1.0), rtol=1e-10)

    def test_detailed_balance(self):
        # S(-omega) = e^{-beta omega} S(omega) at finite temperature
        lam, omega_B, beta = 0.2, 1.0, 0.8
        for w in (0.5, 1.5, 3.0):
            assert vrqb_spectrum(-w, lam, omega_B, beta) == pytest.approx(
                np.exp(-beta * w) * vrqb_spectrum(w, lam, omega_B, beta),
                rel=1e-8)


class TestEmpiricalSpectrum:
    def test_correlator_bessel_form(self):
        # large-m limit: C(t) = lam^2 [J1(2 omega_B t) / (omega_B t)]^2
        from scipy.special import j1
        bath = build_bath(m=400, omega_B=1.0, beta=0.0, lam=0.2, seed=9)
        # 501 points would put the step exactly at the 0.05/omega_B
        # validation limit, where float rounding tips it over
        t = np.linspace(0.0, 25.0, 1001)
        C, _, _ = empirical_bath_spectrum(bath, t)
        x = 1.0 * t[1:]
        want = 0.2**2 * (j1(2 * x) / x) ** 2
        # finite-m corrections and the single-draw fluctuation are a few
        # times 1/m ~ 2.5e-3 of lam^2 at m = 400
        np.testing.assert_allclose(C[1:].real, want, atol=1e-2 * 0.2**2)
        assert C[0].real == pytest.approx(0.2**2, rel=0.1)

    def test_spectrum_matches_analytic(self):
        bath = build_bath(m=400, omega_B=1.0, beta=0.0, lam=0.2, seed=9)
        t = np.linspace(0.0, 60.0, 1301)
        _, omega, S = empirical_bath_spectrum(bath, t)
        want = vrqb_spectrum(omega, 0.2, 1.0)
        # single bath draw: agreement to ~10% of the peak inside the band
        assert np.max(np.abs(S - want)) < 0.12 * want.max()

    def test_grid_validation(self):
        bath = build_bath(m=20, omega_B=1.0, beta=0.0, lam=0.1, seed=0)
        with pytest.raises(ValueError):
            empirical_bath_spectrum(bath, np.linspace(0, 5, 200))  # too short
        with pytest.raises(ValueError):
            empirical_bath_spectrum(bath, np.linspace(0, 30, 50))  # too coarse


class TestRtnSpectrum:
    def test_closed_form_value(self):
        lam, nu_a, nu_b = 0.5, 0.01, 1.0
        w = 0.3
        C2 = 1.0 / np.log(nu_b / nu_a)
        want = 2 * lam**2 * C2 / w * (np.arctan(2 * nu_b / w) - np.arctan(2 * nu_a / w))
        assert rtn_spectrum(w, lam, nu_a, nu_b) == pytest.approx(want, rel=1e-12)

    def test_zero_frequency_limit(self):
        lam, nu_a, nu_b = 0.5, 0.01, 1.0
        C2 = 1.0 / np.log(nu_b / nu_a)
        want = lam**2 * C2 * (nu_b - nu_a) / (nu_a * nu_b)
        assert rtn_spectrum(0.0, lam, nu_a, nu_b) == pytest.approx(want, rel=1e-12)
        # continuity: tiny omega approaches the limit
        assert rtn_spectrum(1e-9, lam, nu_a, nu_b) == pytest.approx(want, rel=1e-6)

    def test_one_over_f_midband(self):
        # between nu_a and nu_b the spectrum falls like 1/omega:
        # arctan difference ~ pi/2 on a wide ratio
        lam, nu_a, nu_b = 1.0, 1e-4, 1e2
        w = np.array([0.1, 1.0])
        vals = rtn_spectrum(w, lam, nu_a, nu_b)
        expo = np.log(vals[1] / vals[0]) / np.log(w[1] / w[0])
        assert expo == pytest.approx(-1.0, abs=0.05)

    def test_high_frequency_tail(self):
        # far above nu_b the spectrum falls like 1/omega^2
        lam, nu_a, nu_b = 1.0, 0.01, 1.0
        w = np.array([100.0, 400.0])
        vals = rtn_spectrum(w, lam, nu_a, nu_b)
        expo = np.log(vals[1] / vals[0]) / np.log(w[1] / w[0])
        assert expo == pytest.approx(-2.0, abs=0.05)

    def test_invalid_rates(self):
        with pytest.raises(ValueError):
            rtn_spectrum(1.0, 1.0, 1.0, 0.5)


class TestRtnTrajectory:
    def test_determinism_and_values(self):
        a = sample_rtn_trajectory(0.01, 1.0, 20, T=5.0, dt=0.005, seed=4)
        b = sample_rtn_trajectory(0.01, 1.0, 20, T=5.0, dt=0.005, seed=4)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_unit_ensemble_variance(self):
        # initial values across >= 1e4 trajectories have variance 1
        vals = np.array([
            sample_rtn_trajectory(0.01, 1.0, 20, T=0.01, dt=0.005, seed=s).samples[0]
            for s in range(10000)
        ])
        assert np.var(vals) == pytest.approx(1.0, abs=0.05)

    def test_dt_validation(self):
        with pytest.raises(ValueError):
            sample_rtn_trajectory(0.01, 1.0, 20, T=1.0, dt=0.5, seed=0)

    def test_component_count_validation(self):
        with pytest.raises(ValueError):
            sample_rtn_trajectory(0.01, 1.0, 5, T=1.0, dt=0.005, seed=0)

    def test_bounded_samples(self):
        traj = sample_rtn_trajectory(0.01, 1.0, 20, T=5.0, dt=0.005, seed=2)
        # each component contributes +-w_i, so |eta| <= sum w_i
        bound = np.sum(traj.weights) + 1e-12
        assert np.max(np.abs(traj.samples)) <= bound

    def test_periodogram_matches_spectrum_midband(self):
        # ensemble periodogram vs closed form in the resolved band
        nu_a, nu_b = 0.01, 1.0
        omega, S = rtn_average_periodogram(nu_a, nu_b, 20, T=400.0, dt=0.01,
                                           n_traj=200, seed=1)
        mask = (omega > 0.1) & (omega < 5.0)
        want = rtn_spectrum(omega[mask], 1.0, nu_a, nu_b)
        # log-binned ratio within ~15% (200 trajectories, discrete components)
        ratio = S[mask] / want
        # average in log-spaced bins to beat periodogram scatter
        bins = np.geomspace(0.1, 5.0, 8)
        idx = np.digitize(omega[mask], bins)
        for b in range(1, len(bins)):
            sel = idx == b
            if np.count_nonzero(sel) < 3:
                continue
            assert np.mean(ratio[sel]) == pytest.approx(1.0, abs=0.3)


class TestSpectrumWrappers:
    def test_vrqb_wrapper(self):
        model = sp.VRQBSpectrum(lam=0.2, omega_B=1.5)
        assert model.cutoff == pytest.approx(6.0)
        assert model.density(0.0) == pytest.approx(
            vrqb_spectrum(0.0, 0.2, 1.5), rel=1e-12)

    def test_rtn_wrapper(self):
        model = sp.RTNSpectrum(lam=0.5, nu_a=0.01, nu_b=1.0)
        assert model.density(0.3) == pytest.approx(
            rtn_spectrum(0.3, 0.5, 0.01, 1.0), rel=1e-12)

    def test_static_wrapper(self):
        model = sp.StaticDeltaSpectrum(lam=0.1)
        assert model.lam == 0.1
