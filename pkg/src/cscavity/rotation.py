"""Mode-rotation angle, its decomposition, and the cancellation point.

The cross-spectrum scales as S_xy = Phi (S_yy - S_xx) with a rotation angle
Phi = Phi_dyn + Phi_cs built from a cavity-mediated part and a static
direct-coupling part of opposite signs. cancellation_point returns the trap
position phi_c where they cancel; it depends only on (kappa, Delta, omega_y),
not on power or polarisation. phic_map rasterises phi_c over a (kappa, Delta)
plane, leaving the sub-resonance ellipse Delta^2 + kappa^2/4 < omega_y^2
undefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .couplings import Couplings
from .params import ConfigError
from .qlt import NoiseModel, SystemParams
from .response import hybridisation, re_i_eta_c


@dataclass(frozen=True)
class ModeAngle:
    """Rotation angle decomposition and per-peak values."""

    phi_dyn: float      # cavity-mediated contribution
    phi_cs: float       # static direct-coupling contribution
    phi_total: float    # phi_dyn + phi_cs
    phi_x_peak: float   # Re R_yx at the x resonance
    phi_y_peak: float   # Re R_xy at the y resonance
    phi_avg: float      # (Re R_xy(w_y) - Re R_yx(w_x)) / 2


@dataclass(frozen=True)
class CancellationMap:
    """phi_c over a (kappa, Delta) grid; NaN marks the undefined ellipse."""

    kappa: np.ndarray           # rad/s, strictly increasing
    delta: np.ndarray           # rad/s, strictly increasing
    phic: np.ndarray            # rad, shape (len(kappa), len(delta))
    omega_y: float

    def phic_over_2pi(self) -> np.ndarray:
        return self.phic / (2.0 * math.pi)


def mode_angle(coup: Couplings, system: SystemParams, noise: NoiseModel,
               eval_omega_x: float | None = None,
               eval_omega_y: float | None = None,
               full_backaction: bool = False) -> ModeAngle:
    """Rotation angle of the mechanical modes for the given operating point.

    The hybridisation functions are evaluated at the mode resonances
    (overridable via eval_omega_x/eval_omega_y, e.g. to use fitted peak
    frequencies). The dynamical part uses the cavity response at the y
    resonance.
    """
    w_x = system.omega_x if eval_omega_x is None else float(eval_omega_x)
    w_y = system.omega_y if eval_omega_y is None else float(eval_omega_y)
    gap = w_x - w_y
    if abs(gap) <= 1e-9 * max(abs(w_x), abs(w_y)):
        raise ConfigError("mode_angle requires non-degenerate modes")

    phi_dyn = float(re_i_eta_c(w_y, system.delta, system.kappa)) * coup.g_x * coup.g_y / gap
    phi_cs = coup.g_xy / gap

    _, _, r_yx_at_x = hybridisation(
        w_x, coup.g_x, coup.g_y, coup.g_xy, system.omega_x, system.omega_y,
        noise.gamma, system.delta, system.kappa, full_backaction=full_backaction)
    _, r_xy_at_y, _ = hybridisation(
        w_y, coup.g_x, coup.g_y, coup.g_xy, system.omega_x, system.omega_y,
        noise.gamma, system.delta, system.kappa, full_backaction=full_backaction)

    phi_x = float(np.real(r_yx_at_x))
    phi_y = float(np.real(r_xy_at_y))
    return ModeAngle(
        phi_dyn=phi_dyn,
        phi_cs=phi_cs,
        phi_total=phi_dyn + phi_cs,
        phi_x_peak=phi_x,
        phi_y_peak=phi_y,
        phi_avg=0.5 * (phi_y - phi_x),
    )


def phi_of_position(phi, a_coeff: float, b_coeff: float, re_i_eta_y: float,
                    omega_x: float, omega_y: float):
    """Closed-form rotation angle versus trap position:

        Phi(phi) = A / (omega_y - omega_x) * (Re[i eta_c(omega_y)] sin^2 phi
                                              + B cos^2 phi)

    Only the root in phi is consumed downstream; the overall sign convention
    here is opposite to mode_angle's decomposition.
    """
    gap = omega_y - omega_x
    if abs(gap) <= 1e-9 * max(abs(omega_x), abs(omega_y)):
        raise ConfigError("phi_of_position requires non-degenerate modes")
    phi = np.asarray(phi, dtype=float)
    return a_coeff / gap * (re_i_eta_y * np.sin(phi) ** 2 + b_coeff * np.cos(phi) ** 2)


def angle_coefficients(e_d: float, k: float, x_zpf: float, y_zpf: float,
                       theta: float, delta: float, kappa: float) -> tuple[float, float]:
    """The (A, B) pair for phi_of_position.

    A = E_d^2 k^2 X_zpf Y_zpf sin(theta) cos(theta) = g_x g_y / sin^2(phi);
    B = 2 Delta / (Delta^2 + kappa^2/4) = g_xy / (g_x g_y).
    """
    a_coeff = e_d**2 * k**2 * x_zpf * y_zpf * math.sin(theta) * math.cos(theta)
    b_coeff = 2.0 * delta / (delta**2 + kappa**2 / 4.0)
    return a_coeff, b_coeff


def c_phi(kappa: float, delta: float, omega_y: float) -> float:
    """tan^2 of the cancellation position:

        C = [(D^2 + k^2/4 - w^2)^2 + (k w)^2] / [(D^2 + k^2/4 - w^2)(D^2 + k^2/4)]

    Negative exactly when Delta^2 + kappa^2/4 < omega_y^2 (and divergent on
    that ellipse boundary).
    """
    s = delta**2 + kappa**2 / 4.0
    edge = s - omega_y**2
    if edge == 0.0:
        return math.inf
    return (edge**2 + (kappa * omega_y) ** 2) / (edge * s)


def cancellation_point(kappa: float, delta: float, omega_y: float) -> float | None:
    """Trap position phi_c = arctan(sqrt(C)) where the rotation cancels.

    Returns None when no cancellation exists (C < 0, i.e. inside the ellipse
    Delta^2 + kappa^2/4 < omega_y^2) or on the ellipse boundary.
    """
    if kappa <= 0.0:
        raise ConfigError("kappa must be strictly positive")
    c = c_phi(kappa, delta, omega_y)
    if not math.isfinite(c) or c < 0.0:
        return None
    return math.atan(math.sqrt(c))


def phic_map(kappa_range, delta_range, omega_y: float,
             resolution: int | tuple[int, int]) -> CancellationMap:
    """Rasterise phi_c over [kappa_lo, kappa_hi] x [delta_lo, delta_hi].

    resolution is the number of samples per axis (a pair applies to kappa
    and Delta respectively). Cells without a cancellation hold NaN.
    """
    if isinstance(resolution, int):
        n_k = n_d = resolution
    else:
        n_k, n_d = resolution
    if n_k < 1 or n_d < 1:
        raise ConfigError("resolution must be at least 1 per axis")
    k_lo, k_hi = map(float, kappa_range)
    d_lo, d_hi = map(float, delta_range)
    if k_lo <= 0.0 or k_hi < k_lo:
        raise ConfigError("kappa range must be positive and increasing")
    if d_hi < d_lo:
        raise ConfigError("delta range must be increasing")

    kappa = np.linspace(k_lo, k_hi, n_k) if n_k > 1 else np.array([k_lo])
    delta = np.linspace(d_lo, d_hi, n_d) if n_d > 1 else np.array([d_lo])
    kk = kappa[:, None]
    dd = delta[None, :]
    s = dd**2 + kk**2 / 4.0
    edge = s - omega_y**2
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (edge**2 + (kk * omega_y) ** 2) / (edge * s)
        phic = np.where(edge > 0.0, np.arctan(np.sqrt(np.where(c > 0.0, c, np.nan))), np.nan)
    return CancellationMap(kappa=kappa, delta=delta, phic=phic, omega_y=omega_y)


def map_to_csv(cmap: CancellationMap) -> str:
    """CSV rows kappa_hz,delta_hz,phic_over_2pi; empty last field where undefined."""
    two_pi = 2.0 * math.pi
    lines = ["kappa_hz,delta_hz,phic_over_2pi"]
    for i, k in enumerate(cmap.kappa):
        for j, d in enumerate(cmap.delta):
            v = cmap.phic[i, j]
            tail = "" if math.isnan(v) else "%.12g" % (v / two_pi)
            lines.append("%.12g,%.12g,%s" % (k / two_pi, d / two_pi, tail))
    return "\n".join(lines) + "\n"


def _segment_for_cell(x0, x1, y0, y1, v00, v01, v10, v11, level):
    """Marching-squares segments for one grid cell (corners v[xy]).

    Returns up to two ((x, y), (x, y)) segments of the level curve.
    """
    corners = (v00, v01, v10, v11)
    if any(math.isnan(v) for v in corners):
        return []
    idx = ((v00 > level) | (v01 > level) << 1 | (v10 > level) << 2
           | (v11 > level) << 3)
    if idx in (0, 15):
        return []

    def interp(pa, pb, va, vb):
        t = 0.5 if vb == va else (level - va) / (vb - va)
        return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

    p00, p01, p10, p11 = (x0, y0), (x0, y1), (x1, y0), (x1, y1)
    bottom = interp(p00, p10, v00, v10)
    top = interp(p01, p11, v01, v11)
    left = interp(p00, p01, v00, v01)
    right = interp(p10, p11, v10, v11)
    table = {
        1: [(left, bottom)], 14: [(left, bottom)],
        2: [(left, top)], 13: [(left, top)],
        3: [(bottom, top)], 12: [(bottom, top)],
        4: [(bottom, right)], 11: [(bottom, right)],
        6: [(left, top), (bottom, right)],
        9: [(left, bottom), (top, right)],
        5: [(left, right)], 10: [(left, right)],
        7: [(top, right)], 8: [(top, right)],
    }
    return table[idx]


def extract_contours(cmap: CancellationMap, levels_over_2pi) -> list[dict]:
    """Level curves of phi_c/2pi as chained polylines.

    Returns a list of {"level": float, "points": [[kappa_hz, delta_hz], ...]}
    entries, one per connected polyline, in deterministic order.
    """
    two_pi = 2.0 * math.pi
    values = cmap.phic_over_2pi()
    k_hz = cmap.kappa / two_pi
    d_hz = cmap.delta / two_pi
    results = []
    for level in levels_over_2pi:
        segments = []
        for i in range(len(k_hz) - 1):
            for j in range(len(d_hz) - 1):
                segments.extend(_segment_for_cell(
                    k_hz[i], k_hz[i + 1], d_hz[j], d_hz[j + 1],
                    values[i, j], values[i, j + 1],
                    values[i + 1, j], values[i + 1, j + 1], level))
        for polyline in _chain_segments(segments):
            results.append({"level": float(level),
                            "points": [[float(x), float(y)] for x, y in polyline]})
    return results


def _chain_segments(segments):
    """Greedily join segments sharing endpoints into polylines."""
    def key(p):
        return (round(p[0], 9), round(p[1], 9))

    remaining = {i: seg for i, seg in enumerate(sorted(segments))}
    endpoints: dict[tuple, list[int]] = {}
    for i, (a, b) in remaining.items():
        endpoints.setdefault(key(a), []).append(i)
        endpoints.setdefault(key(b), []).append(i)

    polylines = []
    while remaining:
        i = min(remaining)
        a, b = remaining.pop(i)
        chain = [a, b]
        for grow_front in (False, True):
            while True:
                end = chain[0] if grow_front else chain[-1]
                candidates = [j for j in endpoints.get(key(end), []) if j in remaining]
                if not candidates:
                    break
                j = candidates[0]
                c, d = remaining.pop(j)
                nxt = d if key(c) == key(end) else c
                if grow_front:
                    chain.insert(0, nxt)
                else:
                    chain.append(nxt)
        polylines.append(chain)
    return polylines
