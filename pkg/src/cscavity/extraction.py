"""Experimentalist-style spectrum analysis.

fit_peak performs a damped-oscillator line-shape fit

    S(w) = C / [(w^2 - w0^2)^2 + gamma^2 w^2] + baseline

on a window of a PSD. extract_mode_angle recovers the mode-rotation angle by
scalar least squares of S_xy against (S_yy - S_xx) per peak window, the same
rescaling an experimentalist applies. crosstalk models a detector imperfection
mixing a fraction of x into the measured y channel; debias removes the
resulting constant offset from angle estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .params import ConfigError
from .qlt import SpectraSet


class PeakFitError(RuntimeError):
    """Raised when a window holds no usable peak or the fit does not converge."""


@dataclass(frozen=True)
class PeakFit:
    """Damped-oscillator fit result for one spectral peak."""

    center: float          # rad/s
    width: float           # rad/s, full width gamma of the line shape
    area: float            # m^2, full-line integral of the fitted peak
    residual_norm: float   # rms of (model - data) / peak scale
    window: tuple[float, float]   # rad/s
    amplitude: float       # C in the line-shape formula
    baseline: float
    cov_diag: tuple[float, float, float, float]  # var of (C, w0, gamma, baseline)


@dataclass(frozen=True)
class AngleEstimate:
    """Per-peak rotation-angle estimates from measured spectra."""

    phi_x: float
    phi_y: float
    reliable_x: bool
    reliable_y: bool
    bias: float = 0.0
    debiased_x: float = 0.0
    debiased_y: float = 0.0


def _lineshape(omega, amp, center, width, baseline):
    return amp / ((omega**2 - center**2) ** 2 + width**2 * omega**2) + baseline


def fit_peak(omega, values, window: tuple[float, float],
             max_iter: int = 200, tol: float = 1e-8) -> PeakFit:
    """Least-squares fit of the damped-oscillator line shape in a window.

    The window must contain exactly one local maximum rising above three
    times the window median. Initial values: center at the window argmax,
    width from the half-maximum crossings, amplitude from the peak value.
    """
    omega = np.asarray(omega, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (omega >= lo) & (omega <= hi)
    if mask.sum() < 8:
        raise PeakFitError("window contains fewer than 8 samples")
    w = omega[mask]
    s = values[mask]

    median = float(np.median(s))
    threshold = 3.0 * median
    interior = (s[1:-1] > s[:-2]) & (s[1:-1] > s[2:]) & (s[1:-1] > threshold)
    n_peaks = int(np.count_nonzero(interior))
    if n_peaks == 0:
        raise PeakFitError("no peak above 3x the window median")
    if n_peaks > 1:
        raise PeakFitError(f"window contains {n_peaks} candidate peaks; narrow it")

    i0 = int(np.argmax(s))
    peak = float(s[i0])
    center0 = float(w[i0])
    half = (peak + median) / 2.0
    above = np.nonzero(s > half)[0]
    width0 = float(w[above[-1]] - w[above[0]]) if above.size > 1 else float(w[1] - w[0])
    width0 = max(width0, float(np.diff(w).min()))

    # normalised coordinates keep the Jacobian well scaled
    w_scale = center0
    s_scale = peak
    wn = w / w_scale
    sn = s / s_scale

    def residual(p):
        amp, c, g, base = p
        return _lineshape(wn, amp, c, g, base) - sn

    amp0 = (peak - median) / s_scale * (width0 / w_scale) ** 2 * (center0 / w_scale) ** 2
    p0 = np.array([amp0, 1.0, width0 / w_scale, median / s_scale])
    result = least_squares(residual, p0, method="lm", xtol=tol, ftol=tol,
                           gtol=tol, max_nfev=max_iter * len(p0))
    if not result.success or not np.all(np.isfinite(result.x)):
        raise PeakFitError(f"peak fit did not converge: {result.message}")

    amp_n, center_n, width_n, base_n = result.x
    center = abs(center_n) * w_scale
    width = abs(width_n) * w_scale
    if not lo <= center <= hi:
        raise PeakFitError("fitted center escaped the window")
    amp = amp_n * s_scale * w_scale**4
    baseline = base_n * s_scale
    area = amp / (2.0 * width * center**2)

    dof = max(s.size - 4, 1)
    rss = float(np.sum(result.fun**2))
    jtj = result.jac.T @ result.jac
    try:
        cov_n = np.linalg.inv(jtj) * (rss / dof)
        scale = np.array([s_scale * w_scale**4, w_scale, w_scale, s_scale])
        cov_diag = tuple(float(v) for v in np.diag(cov_n) * scale**2)
    except np.linalg.LinAlgError:
        cov_diag = (math.nan,) * 4
    return PeakFit(
        center=center, width=width, area=area,
        residual_norm=math.sqrt(rss / s.size),
        window=(float(lo), float(hi)),
        amplitude=amp, baseline=baseline, cov_diag=cov_diag,
    )


def default_windows(spectra: SpectraSet,
                    half_widths: float = 5.0) -> tuple[tuple[float, float], tuple[float, float]]:
    """Windows of +-half_widths estimated linewidths around the x and y peaks.

    The x peak is located on S_xx, the y peak on S_yy; overlapping windows
    are split at the midpoint between the two peak positions.
    """
    windows = []
    for values in (spectra.sxx, spectra.syy):
        i0 = int(np.argmax(values))
        center = spectra.omega[i0]
        half = (values[i0] + np.median(values)) / 2.0
        above = np.nonzero(values > half)[0]
        width = (spectra.omega[above[-1]] - spectra.omega[above[0]]
                 if above.size > 1 else spectra.omega[1] - spectra.omega[0])
        windows.append([center - half_widths * width, center + half_widths * width, center])
    (x_lo, x_hi, x_c), (y_lo, y_hi, y_c) = windows
    if x_lo < y_hi and y_lo < x_hi:  # overlap: split at the midpoint
        mid = 0.5 * (x_c + y_c)
        if x_c > y_c:
            x_lo, y_hi = max(x_lo, mid), min(y_hi, mid)
        else:
            x_hi, y_lo = min(x_hi, mid), max(y_lo, mid)
    lo = spectra.omega[0]
    hi = spectra.omega[-1]
    clamp = lambda a, b: (float(max(a, lo)), float(min(b, hi)))
    return clamp(x_lo, x_hi), clamp(y_lo, y_hi)


def extract_mode_angle(spectra: SpectraSet,
                       window_x: tuple[float, float],
                       window_y: tuple[float, float],
                       floor_ratio: float = 1e-3) -> AngleEstimate:
    """Scalar least squares of S_xy against (S_yy - S_xx) per peak window.

    A window whose PSD difference never exceeds floor_ratio times the
    spectrum maximum is marked unreliable (the rescaling divides by it).
    """
    diff = spectra.syy - spectra.sxx
    scale = max(float(spectra.sxx.max()), float(spectra.syy.max()))
    out = []
    for lo, hi in (window_x, window_y):
        mask = (spectra.omega >= lo) & (spectra.omega <= hi)
        if mask.sum() < 4:
            raise ConfigError("angle window contains fewer than 4 samples")
        d = diff[mask]
        c = spectra.sxy[mask]
        denom = float(np.dot(d, d))
        reliable = bool(np.abs(d).max() > floor_ratio * scale) and denom > 0.0
        value = float(np.dot(c, d) / denom) if denom > 0.0 else math.nan
        out.append((value, reliable))
    (phi_x, rel_x), (phi_y, rel_y) = out
    return AngleEstimate(phi_x=phi_x, phi_y=phi_y, reliable_x=rel_x, reliable_y=rel_y,
                         debiased_x=phi_x, debiased_y=phi_y)


def crosstalk(spectra: SpectraSet, beta: float) -> SpectraSet:
    """Detector mixing y' = y cos(beta) + x sin(beta); the x channel is unchanged.

    Propagates to S_y'y' = cos^2 S_yy + sin^2 S_xx + 2 sin cos S_xy and
    S_xy' = cos S_xy + sin S_xx. beta is in radians, |beta| < 10 degrees.
    """
    if abs(beta) >= math.radians(10.0):
        raise ConfigError("crosstalk model is restricted to |beta| < 10 degrees")
    cb = math.cos(beta)
    sb = math.sin(beta)
    syy = cb**2 * spectra.syy + sb**2 * spectra.sxx + 2.0 * cb * sb * spectra.sxy
    sxy = cb * spectra.sxy + sb * spectra.sxx
    meta = dict(spectra.meta)
    meta["crosstalk_beta_rad"] = float(beta)
    return SpectraSet(omega=spectra.omega.copy(), sxx=spectra.sxx.copy(),
                      syy=syy, sxy=sxy, meta=meta)


def predicted_crosstalk_bias(beta: float) -> float:
    """First-order angle bias from the mixing model: -sin(beta) on the x window.

    In the x window the PSD difference is dominated by -S_xx while the mixed
    cross spectrum gains +sin(beta) S_xx, so the x-window estimate shifts by
    about -sin(beta). Peak-overlap corrections are not included.
    """
    return -math.sin(beta)


def debias(estimate: AngleEstimate, bias: float) -> AngleEstimate:
    """Subtract a constant bias from both per-peak angle estimates."""
    return replace(estimate, bias=float(bias),
                   debiased_x=estimate.phi_x - float(bias),
                   debiased_y=estimate.phi_y - float(bias))
