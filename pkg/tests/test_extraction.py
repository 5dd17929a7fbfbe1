import math

import numpy as np
import pytest

from cscavity import (PeakFitError, SpectraSet, build_system, crosstalk,
                      debias, default_windows, extract_mode_angle, fit_peak,
                      mode_angle, predicted_crosstalk_bias, spectra_for,
                      sxy_from_angle, thermal_area)
from cscavity.constants import TWO_PI
from cscavity.couplings import Couplings
from cscavity.qlt import compute_spectra

from conftest import peak_indices


def _bare_thermal_spectra(built, n_points=30001):
    coup = Couplings(g_x=0.0, g_y=0.0, g_xy=0.0, phi=built.phi, theta=built.theta,
                     alpha_bar=built.field.alpha_bar)
    s, n = built.system, built.noise
    span = 60.0 * n.gamma
    grid = np.linspace(s.omega_y - span, s.omega_x + span, n_points)
    return compute_spectra(grid, coup, s, n)


def _two_peak_synthetic(phi_angle=0.0, w_x=TWO_PI * 163e3, w_y=TWO_PI * 142e3,
                        width=TWO_PI * 2e3, n=4001, equal_height=True):
    omega = np.linspace(0.8 * w_y, 1.2 * w_x, n)
    lor_x = 1.0 / ((omega**2 - w_x**2) ** 2 + width**2 * omega**2)
    lor_y = 1.0 / ((omega**2 - w_y**2) ** 2 + width**2 * omega**2)
    scale = 1e-18 / lor_x.max()
    sxx = scale * lor_x
    syy = scale * lor_y * (1.0 if equal_height else 0.5)
    sxy = sxy_from_angle(phi_angle, sxx, syy)
    return SpectraSet(omega=omega, sxx=sxx, syy=syy, sxy=sxy, meta={})


def test_fit_bare_thermal_peak(reference_cfg):
    built = build_system(reference_cfg, include_cs_stiffening=False)
    spectra = _bare_thermal_spectra(built)
    s, n = built.system, built.noise
    window = (s.omega_x - 20 * n.gamma, s.omega_x + 20 * n.gamma)
    fit = fit_peak(spectra.omega, spectra.sxx, window)
    assert abs(fit.center - s.omega_x) / s.omega_x < 1e-3
    assert fit.area == pytest.approx(thermal_area(s.x_zpf, n.n_x), rel=0.01)
    assert fit.width == pytest.approx(n.gamma, rel=0.05)
    assert fit.residual_norm < 1e-3


def test_fit_full_qlt_peak_matches_prediction(near_resonance_cfg):
    built = build_system(near_resonance_cfg)  # node
    spectra = spectra_for(built)
    i_x, _ = peak_indices(spectra)
    center = spectra.omega[i_x]
    fit = fit_peak(spectra.omega, spectra.sxx,
                   (center - TWO_PI * 10e3, center + TWO_PI * 10e3))
    assert abs(fit.center - built.shifts.omega_x) < 0.5 * fit.width


def test_fit_rejects_windows_without_a_peak(near_resonance_cfg):
    built = build_system(near_resonance_cfg)
    spectra = spectra_for(built)
    flat_lo = spectra.omega[0]
    with pytest.raises(PeakFitError):
        fit_peak(spectra.omega, spectra.sxx, (flat_lo, flat_lo + TWO_PI * 3e3))
    with pytest.raises(PeakFitError):
        fit_peak(spectra.omega, spectra.sxx, (flat_lo, flat_lo + TWO_PI * 0.01))


def test_default_windows_split_cleanly(near_resonance_cfg):
    built = build_system(near_resonance_cfg)
    spectra = spectra_for(built)
    win_x, win_y = default_windows(spectra)
    assert win_y[1] <= win_x[0]  # y peak sits below the x peak
    i_x, i_y = peak_indices(spectra)
    assert win_x[0] < spectra.omega[i_x] < win_x[1]
    assert win_y[0] < spectra.omega[i_y] < win_y[1]


def test_angle_round_trip_noiseless():
    spectra = _two_peak_synthetic(phi_angle=0.05)
    win_x, win_y = default_windows(spectra)
    est = extract_mode_angle(spectra, win_x, win_y)
    assert est.phi_x == pytest.approx(0.05, abs=1e-6)
    assert est.phi_y == pytest.approx(0.05, abs=1e-6)
    assert est.reliable_x and est.reliable_y


def test_angle_round_trip_with_multiplicative_noise():
    rng = np.random.default_rng(99)
    for _ in range(25):
        phi_angle = rng.uniform(-0.2, 0.2)
        spectra = _two_peak_synthetic(phi_angle=phi_angle)
        noisy = SpectraSet(
            omega=spectra.omega,
            sxx=spectra.sxx * (1 + 0.01 * rng.standard_normal(spectra.omega.size)),
            syy=spectra.syy * (1 + 0.01 * rng.standard_normal(spectra.omega.size)),
            sxy=spectra.sxy * (1 + 0.01 * rng.standard_normal(spectra.omega.size)),
            meta={})
        win_x, win_y = default_windows(noisy)
        est = extract_mode_angle(noisy, win_x, win_y)
        assert abs(est.phi_x - phi_angle) <= 0.01
        assert abs(est.phi_y - phi_angle) <= 0.01


def test_angle_extraction_vs_rotation_module(near_resonance_cfg):
    """The averaged per-window estimate recovers the averaged hybridisation
    angle; individual windows deviate more because the full spectra include
    self-resonant feedback the two-term expression drops."""
    built = build_system(near_resonance_cfg, phi=0.2 * TWO_PI)
    spectra = spectra_for(built)
    win_x, win_y = default_windows(spectra)
    est = extract_mode_angle(spectra, win_x, win_y)
    angle = mode_angle(built.couplings, built.system, built.noise,
                       eval_omega_x=built.shifts.omega_x,
                       eval_omega_y=built.shifts.omega_y)
    averaged = 0.5 * (est.phi_x + est.phi_y)
    assert averaged == pytest.approx(angle.phi_avg, rel=0.15)
    assert est.phi_x == pytest.approx(-angle.phi_x_peak, rel=0.45)
    assert est.phi_y == pytest.approx(angle.phi_y_peak, rel=0.45)


def test_angle_unreliable_when_difference_vanishes():
    base = _two_peak_synthetic(phi_angle=0.0)
    # identical PSDs: the rescaling has nothing to divide by
    spectra = SpectraSet(omega=base.omega, sxx=base.sxx, syy=base.sxx.copy(),
                         sxy=np.zeros_like(base.sxx), meta={})
    win = (base.omega[0], base.omega[0] + TWO_PI * 20e3)
    est = extract_mode_angle(spectra, win, win)
    assert not est.reliable_x
    assert not est.reliable_y


def test_crosstalk_identity_at_zero():
    spectra = _two_peak_synthetic(phi_angle=0.07)
    mixed = crosstalk(spectra, 0.0)
    np.testing.assert_array_equal(mixed.syy, spectra.syy)
    np.testing.assert_array_equal(mixed.sxy, spectra.sxy)


def test_crosstalk_bias_on_uncorrelated_peaks():
    """2 degrees of detector mixing biases the x-window estimate by about
    -sin(beta) ~ -0.035."""
    spectra = _two_peak_synthetic(phi_angle=0.0)
    beta = math.radians(2.0)
    mixed = crosstalk(spectra, beta)
    win_x, win_y = default_windows(mixed)
    est = extract_mode_angle(mixed, win_x, win_y)
    assert 0.02 < abs(est.phi_x) < 0.04
    assert est.phi_x == pytest.approx(predicted_crosstalk_bias(beta), rel=0.05)
    assert abs(est.phi_y) < 0.005


def test_crosstalk_linearity_in_sin_beta():
    spectra = _two_peak_synthetic(phi_angle=0.0)
    biases = []
    betas = [math.radians(b) for b in (0.5, 1.0, 2.0, 3.0)]
    for beta in betas:
        mixed = crosstalk(spectra, beta)
        win_x, win_y = default_windows(mixed)
        est = extract_mode_angle(mixed, win_x, win_y)
        biases.append(est.phi_x)
    slopes = [b / math.sin(beta) for b, beta in zip(biases, betas)]
    for slope in slopes[1:]:
        assert slope == pytest.approx(slopes[0], rel=0.01)


def test_crosstalk_round_trip_debias(near_resonance_cfg):
    built = build_system(near_resonance_cfg, phi=0.2 * TWO_PI)
    spectra = spectra_for(built)
    win_x, win_y = default_windows(spectra)
    clean = extract_mode_angle(spectra, win_x, win_y)
    for beta_deg in (1.0, 2.0, 3.0):
        beta = math.radians(beta_deg)
        mixed = crosstalk(spectra, beta)
        wx, wy = default_windows(mixed)
        est = extract_mode_angle(mixed, wx, wy)
        restored = debias(est, predicted_crosstalk_bias(beta))
        assert restored.debiased_x == pytest.approx(clean.phi_x, rel=0.05)
        assert restored.bias == predicted_crosstalk_bias(beta)
    with pytest.raises(Exception):
        crosstalk(spectra, math.radians(15.0))
