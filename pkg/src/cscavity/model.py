"""Glue assembling a solvable system from an experimental configuration.

build_system resolves a config (plus optional trap-position / detuning /
polarisation overrides) into derived parameters, coupling rates, the drift
mechanical frequencies (bare tweezer values stiffened by the static
co-trapping shift) and the noise model. The optical spring is not folded in
here; it emerges from the spectral solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .couplings import (Couplings, FrequencyShifts, corrected_frequencies,
                        coupling_rates, cs_stiffening, direct_coupling)
from .params import (ConfigError, DerivedParams, ExperimentConfig, MeanField,
                     derive_params, drive_rate, mean_field, thermal_occupancy)
from .qlt import NoiseModel, SpectraSet, SystemParams, compute_spectra

DEFAULT_GRID_POINTS = 4001


@dataclass(frozen=True)
class BuiltSystem:
    """Everything needed to simulate and analyse one operating point."""

    config: ExperimentConfig
    derived: DerivedParams
    field: MeanField
    couplings: Couplings
    system: SystemParams
    noise: NoiseModel
    shifts: FrequencyShifts      # full-mode corrected frequencies
    phi: float
    theta: float
    delta: float


def build_system(cfg: ExperimentConfig, phi: float | None = None,
                 delta: float | None = None, theta: float | None = None,
                 include_cs_stiffening: bool = True) -> BuiltSystem:
    """Resolve one operating point (phi, delta, theta default to the config)."""
    phi = cfg.trap_position if phi is None else float(phi)
    delta = cfg.detuning if delta is None else float(delta)
    theta = cfg.polarisation_angle if theta is None else float(theta)
    if not 0.0 <= phi <= math.pi / 2.0:
        raise ConfigError("phi must lie in [0, pi/2]")

    dp = derive_params(cfg)
    e_d = drive_rate(dp, theta)
    mf = mean_field(e_d, phi, delta, cfg.kappa)
    g_x, g_y = coupling_rates(dp, theta, phi)
    g_xy = direct_coupling(g_x, g_y, phi, delta, cfg.kappa) if phi > 0.0 else 0.0

    coup = Couplings(g_x=g_x, g_y=g_y, g_xy=g_xy, phi=phi, theta=theta,
                     alpha_bar=mf.alpha_bar)

    if include_cs_stiffening:
        cs_x, cs_y = cs_stiffening(dp, mf.alpha_bar, theta, phi)
    else:
        cs_x = cs_y = 0.0
    sq_x = dp.omega_x0**2 + cs_x
    sq_y = dp.omega_y0**2 + cs_y
    if sq_x <= 0.0 or sq_y <= 0.0:
        raise ConfigError("stiffened squared frequency is not positive")

    system = SystemParams(
        omega_x=math.sqrt(sq_x), omega_y=math.sqrt(sq_y),
        delta=delta, kappa=cfg.kappa,
        x_zpf=dp.x_zpf, y_zpf=dp.y_zpf,
    )
    noise = NoiseModel(
        gamma=cfg.gas_damping,
        n_x=thermal_occupancy(cfg.temperature, dp.omega_x0),
        n_y=thermal_occupancy(cfg.temperature, dp.omega_y0),
    )
    shifts = corrected_frequencies(dp, coup, delta, cfg.kappa, mode="full")
    return BuiltSystem(config=cfg, derived=dp, field=mf, couplings=coup,
                       system=system, noise=noise, shifts=shifts,
                       phi=phi, theta=theta, delta=delta)


def default_grid(built: BuiltSystem, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """linspace over [0.7 omega_y0, 1.3 omega_x0], the band holding both peaks."""
    if points < 2:
        raise ConfigError("grid needs at least 2 points")
    return np.linspace(0.7 * built.derived.omega_y0, 1.3 * built.derived.omega_x0,
                       int(points))


def spectra_for(built: BuiltSystem, grid=None, backend: str | None = None) -> SpectraSet:
    """Spectra of a built system on the given (or default) grid."""
    if grid is None:
        grid = default_grid(built)
    spectra = compute_spectra(grid, built.couplings, built.system, built.noise,
                              backend=backend)
    spectra.meta["phi_over_2pi"] = built.phi / (2.0 * math.pi)
    spectra.meta["detuning_hz"] = built.delta / (2.0 * math.pi)
    spectra.meta["omega_x0"] = built.derived.omega_x0
    spectra.meta["omega_y0"] = built.derived.omega_y0
    spectra.meta["corrected_omega_x"] = built.shifts.omega_x
    spectra.meta["corrected_omega_y"] = built.shifts.omega_y
    return spectra
