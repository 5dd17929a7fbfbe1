"""Optomechanical coupling rates and the two competing frequency shifts.

Two mechanisms move the mechanical frequencies away from the bare tweezer
values, with opposite signs under red detuning:

* co-trapping by the static scattered field stiffens the trap
  (cs_stiffening, proportional to cos^2 phi),
* dynamical backaction softens it (optical_spring, proportional to sin^2 phi
  through g_j^2).

corrected_frequencies combines them, either via the compact single-bracket
expression ("simplified") or by summing the two standalone shifts ("full",
which keeps a small 2/w^2 waist term the bracket form drops).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import HBAR
from .params import ConfigError, DerivedParams, drive_rate
from .response import re_i_eta_c


@dataclass(frozen=True)
class Couplings:
    """Linearised coupling rates at a trap position phi and polarisation theta."""

    g_x: float           # rad/s, cavity coupling of x
    g_y: float           # rad/s, cavity coupling of y
    g_xy: float          # rad/s, direct x-y coupling
    phi: float
    theta: float
    alpha_bar: complex   # mean cavity field the couplings were built with


@dataclass(frozen=True)
class FrequencyShifts:
    """Squared-frequency corrections and the resulting mechanical frequencies."""

    cs_x: float          # rad^2/s^2, co-trapping stiffening
    cs_y: float
    os_x: float          # rad^2/s^2, optical spring
    os_y: float
    omega_x: float       # rad/s, corrected
    omega_y: float


def coupling_rates(dp: DerivedParams, theta: float, phi: float) -> tuple[float, float]:
    """Cavity coupling rates g_x, g_y = -E_d k {sin,cos}(theta) sin(phi) {X,Y}_zpf."""
    e_d = drive_rate(dp, theta)
    k = dp.wavenumber
    g_x = -e_d * k * math.sin(theta) * math.sin(phi) * dp.x_zpf
    g_y = -e_d * k * math.cos(theta) * math.sin(phi) * dp.y_zpf
    return g_x, g_y


def direct_coupling(g_x: float, g_y: float, phi: float, delta: float, kappa: float) -> float:
    """Direct x-y coupling g_xy = g_x g_y * 2 Delta cot^2(phi) / (Delta^2 + kappa^2/4)."""
    if not 0.0 < phi <= math.pi / 2.0:
        raise ConfigError("direct_coupling requires phi in (0, pi/2]")
    cot = math.cos(phi) / math.sin(phi)
    return g_x * g_y * 2.0 * delta * cot**2 / (delta**2 + kappa**2 / 4.0)


def direct_coupling_from_alpha(g_x: float, g_y: float, phi: float,
                               alpha_bar: complex, e_d: float) -> float:
    """Equivalent mean-field form -g_x g_y 2 Re(alpha_bar) cos(phi) / (E_d sin^2 phi)."""
    if not 0.0 < phi <= math.pi / 2.0:
        raise ConfigError("direct_coupling_from_alpha requires phi in (0, pi/2]")
    return -g_x * g_y * 2.0 * alpha_bar.real * math.cos(phi) / (e_d * math.sin(phi) ** 2)


def cs_stiffening(dp: DerivedParams, alpha_bar: complex, theta: float, phi: float,
                  drop_waist_term: bool = False) -> tuple[float, float]:
    """Co-trapping stiffening of the squared mechanical frequencies.

    delta(omega_x^2) = (E_d hbar / m) 2 Re(alpha_bar) cos(phi) [k^2 sin^2 theta + 2/w_x^2]
    and the y form with cos^2 theta and w_y. The 2/w^2 term is a small
    correction; drop_waist_term=True removes it (this reduces the x shift to
    exactly the bracket term used by the simplified corrected frequencies).
    """
    e_d = drive_rate(dp, theta)
    pref = e_d * HBAR / dp.mass * 2.0 * alpha_bar.real * math.cos(phi)
    k2 = dp.wavenumber**2
    wx_term = 0.0 if drop_waist_term else 2.0 / dp.waist_x**2
    wy_term = 0.0 if drop_waist_term else 2.0 / dp.waist_y**2
    d_x = pref * (k2 * math.sin(theta) ** 2 + wx_term)
    d_y = pref * (k2 * math.cos(theta) ** 2 + wy_term)
    return d_x, d_y


def optical_spring(g_j: float, omega_j0: float, delta: float, kappa: float) -> float:
    """Optical-spring shift squared: omega_j0 * Re(-2i g_j^2 eta_c(omega_j0))."""
    return -2.0 * g_j**2 * omega_j0 * re_i_eta_c(omega_j0, delta, kappa)


def shift_bracket(omega: float, phi: float, delta: float, kappa: float) -> float:
    """The shared bracket Re[i eta_c(w)] + 2 Delta cot^2(phi) / (kappa^2/4 + Delta^2).

    This same factor multiplies both the mode-rotation angle and the
    simplified squared-frequency shift, so rotation and frequency
    cancellation share their root in phi.
    """
    cot = math.cos(phi) / math.sin(phi)
    return float(re_i_eta_c(omega, delta, kappa)) + 2.0 * delta * cot**2 / (
        kappa**2 / 4.0 + delta**2
    )


def frequency_shift_squared(dp: DerivedParams, coup: Couplings, delta: float,
                            kappa: float, mode: str = "simplified") -> tuple[float, float]:
    """Total squared-frequency shifts (x, y) without the stability check."""
    if mode == "simplified":
        bx = shift_bracket(dp.omega_x0, coup.phi, delta, kappa)
        by = shift_bracket(dp.omega_y0, coup.phi, delta, kappa)
        return (
            -2.0 * coup.g_x**2 * dp.omega_x0 * bx,
            -2.0 * coup.g_y**2 * dp.omega_y0 * by,
        )
    if mode == "full":
        cs_x, cs_y = cs_stiffening(dp, coup.alpha_bar, coup.theta, coup.phi)
        os_x = optical_spring(coup.g_x, dp.omega_x0, delta, kappa)
        os_y = optical_spring(coup.g_y, dp.omega_y0, delta, kappa)
        return cs_x + os_x, cs_y + os_y
    raise ValueError(f"unknown mode {mode!r}; expected 'simplified' or 'full'")


def corrected_frequencies(dp: DerivedParams, coup: Couplings, delta: float,
                          kappa: float, mode: str = "simplified") -> FrequencyShifts:
    """Mechanical frequencies including both shift mechanisms.

    Raises ConfigError if a squared frequency would go negative (unstable
    configuration).
    """
    if mode == "simplified":
        # decompose the bracket so the components are still reported
        b = 2.0 * delta * (math.cos(coup.phi) / math.sin(coup.phi)) ** 2 / (
            kappa**2 / 4.0 + delta**2
        ) if coup.phi > 0.0 else 0.0
        cs_x = -2.0 * coup.g_x**2 * dp.omega_x0 * b
        cs_y = -2.0 * coup.g_y**2 * dp.omega_y0 * b
        os_x = optical_spring(coup.g_x, dp.omega_x0, delta, kappa)
        os_y = optical_spring(coup.g_y, dp.omega_y0, delta, kappa)
    elif mode == "full":
        cs_x, cs_y = cs_stiffening(dp, coup.alpha_bar, coup.theta, coup.phi)
        os_x = optical_spring(coup.g_x, dp.omega_x0, delta, kappa)
        os_y = optical_spring(coup.g_y, dp.omega_y0, delta, kappa)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'simplified' or 'full'")

    sq_x = dp.omega_x0**2 + cs_x + os_x
    sq_y = dp.omega_y0**2 + cs_y + os_y
    if sq_x <= 0.0 or sq_y <= 0.0:
        raise ConfigError("corrected squared frequency is not positive; configuration unstable")
    return FrequencyShifts(
        cs_x=cs_x, cs_y=cs_y, os_x=os_x, os_y=os_y,
        omega_x=math.sqrt(sq_x), omega_y=math.sqrt(sq_y),
    )
