"""Complex susceptibilities and hybridisation functions of the coupled system.

All functions accept a scalar or ndarray frequency argument and broadcast.
No rotating-wave truncation: mu and eta_c keep both of their chi terms, so
identities like eta_c(-w) = -conj(eta_c(w)) hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ComplexResponse:
    """A complex-valued response sampled on a strictly increasing grid."""

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if omega.ndim != 1 or values.shape != omega.shape:
            raise ValueError("omega and values must be 1-d arrays of equal length")
        if omega.size > 1 and not np.all(np.diff(omega) > 0.0):
            raise ValueError("frequency grid must be strictly increasing")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.omega.size


def chi(omega, omega0, width):
    """Lorentzian response 1 / (-i (omega - omega0) + width / 2)."""
    if not np.all(np.asarray(width) > 0.0):
        raise ValueError("width must be strictly positive")
    return 1.0 / (-1j * (np.asarray(omega) - omega0) + width / 2.0)


def mu(omega, omega_j, gamma):
    """Mechanical susceptibility chi(w, w_j) - conj(chi(-w, w_j))."""
    return chi(omega, omega_j, gamma) - np.conj(chi(-np.asarray(omega), omega_j, gamma))


def eta_c(omega, delta, kappa):
    """Cavity susceptibility chi(w, -Delta) - conj(chi(-w, -Delta))."""
    return chi(omega, -delta, kappa) - np.conj(chi(-np.asarray(omega), -delta, kappa))


def big_m(omega, g_j, omega_j, gamma, delta, kappa):
    """Backaction prefactor M_j = 1 + g_j^2 mu_j(w) eta_c(w)."""
    return 1.0 + g_j**2 * mu(omega, omega_j, gamma) * eta_c(omega, delta, kappa)


def coupling_interference(omega, g_x, g_y, g_xy, delta, kappa):
    """Combined coupling G(w) = i eta_c(w) g_x g_y + g_xy.

    The cavity-mediated term and the direct x-y term generally interfere
    destructively for red detuning; G -> 0 marks the cancellation point.
    """
    return 1j * eta_c(omega, delta, kappa) * g_x * g_y + g_xy


def hybridisation(omega, g_x, g_y, g_xy, omega_x, omega_y, gamma, delta, kappa,
                  full_backaction=False):
    """Hybridisation functions mixing the two mechanical quadratures.

    Returns (G, R_xy, R_yx) at the given frequencies, with
    R_xy = i mu_x / M_x * G and R_yx = i mu_y / M_y * G.
    By default M_j is replaced by 1, which is an excellent approximation at
    the frequencies that matter for cross-correlations (each R is consumed
    at the opposite mode's resonance); set full_backaction=True to keep M_j.
    """
    g = coupling_interference(omega, g_x, g_y, g_xy, delta, kappa)
    mu_x = mu(omega, omega_x, gamma)
    mu_y = mu(omega, omega_y, gamma)
    if full_backaction:
        m_x = big_m(omega, g_x, omega_x, gamma, delta, kappa)
        m_y = big_m(omega, g_y, omega_y, gamma, delta, kappa)
    else:
        m_x = 1.0
        m_y = 1.0
    return g, 1j * mu_x / m_x * g, 1j * mu_y / m_y * g


def re_i_eta_c(omega, delta, kappa):
    """Re[i eta_c(w)], the dispersive part of the cavity response.

    Equals 2 Delta (w^2 - Delta^2 - kappa^2/4) / (D+ D-) with
    D+- = kappa^2/4 + (w +- Delta)^2; tends to -2 Delta / (kappa^2/4 + Delta^2)
    for |Delta| >> w.
    """
    omega = np.asarray(omega, dtype=float)
    d_plus = kappa**2 / 4.0 + (omega + delta) ** 2
    d_minus = kappa**2 / 4.0 + (omega - delta) ** 2
    return 2.0 * delta * (omega**2 - delta**2 - kappa**2 / 4.0) / (d_plus * d_minus)
