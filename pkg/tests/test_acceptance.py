"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines. Criterion 7 asserts a 10% agreement bound for the closed-form
cross-spectrum approximation that the physical coupling strength of this
configuration does not satisfy (measured ~25% at the x peak); it is expected
to fail and the measured ratios are printed. The approximation does converge
to the full solution when the couplings are scaled down, which is covered by
the regular test suite.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from cscavity import (angle_coefficients, build_system, c_phi,
                      cancellation_point, compute_spectra, config_to_dict,
                      derive_params, extract_mode_angle, fit_peak,
                      hybridisation, mode_angle, phi_of_position,
                      re_i_eta_c, spectra_for, sxy_approx, thermal_area)
from cscavity.cli import main as cli_main
from cscavity.constants import TWO_PI
from cscavity.couplings import Couplings, frequency_shift_squared, shift_bracket

from conftest import make_config, peak_indices, sxy_at_peak

KAPPA = TWO_PI * 396e3
DELTA_FAR = -TWO_PI * 360e3
DELTA_NEAR = -TWO_PI * 176e3
OMEGA_Y_REF = TWO_PI * 136e3


def _report(number: int, label: str, ok: bool, detail: str, elapsed: float,
            limit: float) -> None:
    status = "PASS" if ok and elapsed < limit else "FAIL"
    print(f"[{status}] C{number:02d} {label}: {detail} [{elapsed * 1e3:.1f} ms]")


def test_criterion_01_large_detuning_cancellation():
    t0 = time.perf_counter()
    phi_c = cancellation_point(KAPPA, DELTA_FAR, OMEGA_Y_REF) / TWO_PI
    elapsed = time.perf_counter() - t0
    ok = abs(phi_c - 0.125) <= 0.002
    _report(1, "large-detuning cancellation", ok,
            f"phi_c/2pi = {phi_c:.5f} (0.125 +/- 0.002)", elapsed, 1e-3)
    assert ok and elapsed < 1e-3


def test_criterion_02_near_resonance_cancellation():
    t0 = time.perf_counter()
    phi_c = cancellation_point(KAPPA, DELTA_NEAR, OMEGA_Y_REF) / TWO_PI
    elapsed = time.perf_counter() - t0
    ok = 0.138 <= phi_c <= 0.150
    _report(2, "near-resonance cancellation", ok,
            f"phi_c/2pi = {phi_c:.5f} (in [0.138, 0.150])", elapsed, 1e-3)
    assert ok and elapsed < 1e-3


def test_criterion_03_ellipse_condition():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    misclassified = 0
    for _ in range(10_000):
        kappa = TWO_PI * rng.uniform(0.5e3, 900e3)
        delta = TWO_PI * rng.uniform(-900e3, 900e3)
        inside = delta**2 + kappa**2 / 4.0 < OMEGA_Y_REF**2
        if (c_phi(kappa, delta, OMEGA_Y_REF) < 0.0) != inside:
            misclassified += 1
    elapsed = time.perf_counter() - t0
    ok = misclassified == 0
    _report(3, "ellipse condition", ok,
            f"misclassified {misclassified}/10000 random (kappa, Delta) draws",
            elapsed, 1.0)
    assert ok and elapsed < 1.0


def test_criterion_04_power_polarisation_independence():
    t0 = time.perf_counter()
    base = make_config(detuning=DELTA_NEAR)
    dp0 = derive_params(base)
    phi_c_values = set()
    residuals = []
    for power_factor in (0.25, 1.0, 4.0):
        for theta_deg in (30.0, 49.0, 60.0):
            cfg = make_config(detuning=DELTA_NEAR,
                              tweezer_power=0.485 * power_factor,
                              polarisation_angle=math.radians(theta_deg))
            dp = derive_params(cfg)
            phi_c = cancellation_point(cfg.kappa, cfg.detuning, dp0.omega_y0)
            phi_c_values.add(phi_c)
            a_coeff, b_coeff = angle_coefficients(
                dp.drive_rate, dp.wavenumber, dp.x_zpf, dp.y_zpf,
                cfg.polarisation_angle, cfg.detuning, cfg.kappa)
            eta_y = float(re_i_eta_c(dp0.omega_y0, cfg.detuning, cfg.kappa))
            value = phi_of_position(phi_c, a_coeff, b_coeff, eta_y,
                                    dp0.omega_x0, dp0.omega_y0)
            scale = abs(phi_of_position(math.pi / 2, a_coeff, b_coeff, eta_y,
                                        dp0.omega_x0, dp0.omega_y0))
            residuals.append(abs(value) / scale)
    elapsed = time.perf_counter() - t0
    ok = len(phi_c_values) == 1 and max(residuals) < 1e-12
    _report(4, "power/polarisation independence", ok,
            f"distinct phi_c values: {len(phi_c_values)}, "
            f"max residual {max(residuals):.2e}", elapsed, 1.0)
    assert ok and elapsed < 1.0


def test_criterion_05_qlt_sign_flip(phi_sweep_spectra):
    t0 = time.perf_counter()
    phis, results = phi_sweep_spectra
    values = []
    for built, spectra in results:
        i_x, _ = peak_indices(spectra)
        v, _ = sxy_at_peak(spectra, i_x)
        values.append(v)
    values = np.array(values)
    flips = np.nonzero(np.diff(np.sign(values)))[0]
    dp = derive_params(make_config(detuning=DELTA_NEAR))
    phi_c = cancellation_point(KAPPA, DELTA_NEAR, dp.omega_y0) / TWO_PI
    ok = flips.size == 1
    detail = f"{flips.size} flips"
    if ok:
        i = flips[0]
        z = phis[i] + (phis[i + 1] - phis[i]) * values[i] / (values[i] - values[i + 1])
        ok = abs(z - phi_c) <= 0.01
        detail = (f"single flip at phi/2pi = {z:.4f}, analytic phi_c = {phi_c:.4f}, "
                  f"|diff| = {abs(z - phi_c):.4f} (<= 0.01)")
    elapsed = time.perf_counter() - t0
    _report(5, "sign flip of S_xy at the x peak", ok, detail, elapsed, 30.0)
    assert ok and elapsed < 30.0


def test_criterion_06_frequency_mirror():
    t0 = time.perf_counter()
    cfg = make_config(detuning=DELTA_NEAR)
    dp = derive_params(cfg)
    phi_c = cancellation_point(KAPPA, DELTA_NEAR, dp.omega_y0)

    def fitted_peaks(phi):
        built = build_system(cfg, phi=phi)
        spectra = spectra_for(built)
        out = []
        for idx, values in zip(peak_indices(spectra), (spectra.sxx, spectra.syy)):
            center = spectra.omega[idx]
            fit = fit_peak(spectra.omega, values,
                           (center - TWO_PI * 10e3, center + TWO_PI * 10e3))
            out.append(fit.center)
        return out

    node_x, node_y = fitted_peaks(math.pi / 2)
    cancel_x, cancel_y = fitted_peaks(phi_c)
    stiff_x, stiff_y = fitted_peaks(0.10 * TWO_PI)

    soften = node_x < dp.omega_x0 and node_y < dp.omega_y0
    returned = (abs(cancel_x - dp.omega_x0) / dp.omega_x0 < 0.01
                and abs(cancel_y - dp.omega_y0) / dp.omega_y0 < 0.01)
    stiffen = stiff_x > dp.omega_x0 and stiff_y > dp.omega_y0
    elapsed = time.perf_counter() - t0
    ok = soften and returned and stiffen
    _report(6, "frequency mirror", ok,
            f"soften {soften}, |shift(phi_c)| = "
            f"{abs(cancel_x - dp.omega_x0) / dp.omega_x0:.2e}/"
            f"{abs(cancel_y - dp.omega_y0) / dp.omega_y0:.2e} (< 1%), "
            f"stiffen {stiffen}", elapsed, 60.0)
    assert ok and elapsed < 60.0


def test_criterion_07_approximation_fidelity():
    """Closed-form cross spectrum within 10% of the full solve at both peaks.

    At the derived coupling strength the full solution carries self-resonant
    hybridisation feedback the closed form drops, and no constant prefactor
    matches both peak weights: the bound is exceeded (measured ~25% and ~21%
    at the node). The identical comparison at couplings scaled by <= 0.5
    passes, which the module test suite covers; here the criterion is
    asserted as stated and fails honestly.
    """
    t0 = time.perf_counter()
    built = build_system(make_config(detuning=DELTA_NEAR), phi=0.24 * TWO_PI)
    s, n = built.system, built.noise
    grid = np.linspace(0.75 * s.omega_y, 1.25 * s.omega_x, 6001)
    spectra = compute_spectra(grid, built.couplings, s, n)
    g, _, _ = hybridisation(spectra.omega, built.couplings.g_x, built.couplings.g_y,
                            built.couplings.g_xy, s.omega_x, s.omega_y,
                            n.gamma, s.delta, s.kappa)
    approx = sxy_approx(spectra.sxx, spectra.syy, g, s.omega_x, s.omega_y)
    deviations = []
    for idx in peak_indices(spectra):
        _, j = sxy_at_peak(spectra, idx)
        deviations.append(abs(approx[j] / spectra.sxy[j] - 1.0))
    elapsed = time.perf_counter() - t0
    ok = max(deviations) <= 0.10
    _report(7, "approximation fidelity", ok,
            f"|approx/full - 1| at (x, y) peaks = "
            f"({deviations[0]:.3f}, {deviations[1]:.3f}) (<= 0.10)",
            elapsed, 10.0)
    assert ok and elapsed < 10.0


def test_criterion_08_thermal_normalization():
    t0 = time.perf_counter()
    built = build_system(make_config(), include_cs_stiffening=False)
    s, n = built.system, built.noise
    coup = Couplings(g_x=0.0, g_y=0.0, g_xy=0.0, phi=built.phi, theta=built.theta,
                     alpha_bar=built.field.alpha_bar)
    span = 300.0 * n.gamma
    grid = np.linspace(s.omega_x - span, s.omega_x + span, 12001)
    spectra = compute_spectra(grid, coup, s, n)
    area = 2.0 * np.trapezoid(spectra.sxx, spectra.omega) / TWO_PI
    target = thermal_area(s.x_zpf, n.n_x)
    deviation = abs(area / target - 1.0)
    elapsed = time.perf_counter() - t0
    ok = deviation < 0.005
    _report(8, "thermal normalization", ok,
            f"area/target - 1 = {deviation:.2e} (< 5e-3)", elapsed, 5.0)
    assert ok and elapsed < 5.0


def test_criterion_09_anticorrelation_and_theta_flip(phi_sweep_spectra):
    t0 = time.perf_counter()
    phis, results = phi_sweep_spectra
    dp = derive_params(make_config(detuning=DELTA_NEAR))
    phi_c = cancellation_point(KAPPA, DELTA_NEAR, dp.omega_y0) / TWO_PI
    spacing = phis[1] - phis[0]
    violations = []
    for phi, (built, spectra) in zip(phis, results):
        if abs(phi - phi_c) <= spacing / 2.0:
            continue  # the cancellation point itself: S_xy ~ 0 there
        i_x, i_y = peak_indices(spectra)
        v_x, _ = sxy_at_peak(spectra, i_x)
        v_y, _ = sxy_at_peak(spectra, i_y)
        if not v_x * v_y < 0.0:
            violations.append(float(phi))
    anticorrelated = not violations

    cfg = make_config(detuning=DELTA_NEAR)
    built_a = build_system(cfg, phi=0.2 * TWO_PI, theta=math.pi / 4)
    built_b = build_system(cfg, phi=0.2 * TWO_PI, theta=3 * math.pi / 4)
    grid = np.linspace(0.8 * built_a.system.omega_y, 1.2 * built_a.system.omega_x, 2001)
    sp_a = spectra_for(built_a, grid=grid)
    sp_b = spectra_for(built_b, grid=grid)
    flip = np.allclose(sp_b.sxy, -sp_a.sxy, rtol=1e-8,
                       atol=1e-10 * np.abs(sp_a.sxy).max())
    elapsed = time.perf_counter() - t0
    ok = anticorrelated and flip
    _report(9, "anticorrelation and theta flip", ok,
            f"same-sign positions {violations or 'none'}; global flip {flip}",
            elapsed, 30.0)
    assert ok and elapsed < 30.0


def test_criterion_10_extraction_round_trip(tmp_path):
    t0 = time.perf_counter()
    cfg = make_config(detuning=DELTA_NEAR)
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config_to_dict(cfg)))
    prefix = str(tmp_path / "rt")
    assert cli_main(["spectra", "--config", str(cfg_path), "--phi", "0.2",
                     "--grid", "4001", "--out", prefix]) == 0
    csv_path = f"{prefix}_phi0.200000.csv"
    report_path = str(tmp_path / "fit.json")
    assert cli_main(["fit", "--spectra", csv_path, "--out", report_path]) == 0
    report = json.loads(open(report_path).read())

    built = build_system(cfg, phi=0.2 * TWO_PI)
    angle = mode_angle(built.couplings, built.system, built.noise,
                       eval_omega_x=built.shifts.omega_x,
                       eval_omega_y=built.shifts.omega_y)
    extracted = 0.5 * (report["angles"]["phi_x"] + report["angles"]["phi_y"])
    angle_ok = abs(extracted / angle.phi_avg - 1.0) <= 0.10

    biased_path = str(tmp_path / "fit_biased.json")
    assert cli_main(["fit", "--spectra", csv_path, "--crosstalk-beta", "2.0",
                     "--out", biased_path]) == 0
    biased = json.loads(open(biased_path).read())
    bias = biased["angles"]["phi_x"] - report["angles"]["phi_x"]
    bias_ok = 0.02 <= abs(bias) <= 0.04
    debias_ok = (abs(biased["angles"]["debiased_x"] - report["angles"]["phi_x"])
                 <= 0.05 * abs(report["angles"]["phi_x"]))
    elapsed = time.perf_counter() - t0
    ok = angle_ok and bias_ok and debias_ok
    _report(10, "extraction round trip", ok,
            f"angle {extracted:.4f} vs {angle.phi_avg:.4f} "
            f"({abs(extracted / angle.phi_avg - 1):.1%}), bias {bias:+.4f}, "
            f"debias residual "
            f"{abs(biased['angles']['debiased_x'] - report['angles']['phi_x']):.2e}",
            elapsed, 60.0)
    assert ok and elapsed < 60.0


def test_criterion_11_bracket_identity():
    t0 = time.perf_counter()
    dp = derive_params(make_config(detuning=DELTA_NEAR))
    omega_y = dp.omega_y0
    rng = np.random.default_rng(11)
    worst = 0.0
    checked = 0
    while checked < 100:
        delta = -TWO_PI * rng.uniform(50e3, 1500e3)
        kappa = TWO_PI * rng.uniform(20e3, 1500e3)
        root5 = cancellation_point(kappa, delta, omega_y)
        if root5 is None:
            continue
        root7 = brentq(lambda p: shift_bracket(omega_y, p, delta, kappa),
                       1e-6, math.pi / 2 - 1e-9, xtol=1e-14, rtol=8.9e-16)
        worst = max(worst, abs(root5 - root7))
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12
    _report(11, "shared bracket identity", ok,
            f"max |root difference| = {worst:.2e} rad (<= 1e-12)", elapsed, 1.0)
    assert ok and elapsed < 1.0
