"""Experimental configuration, derived physical constants and the cavity mean field.

A tweezer-trapped dielectric nanosphere sits on the standing wave of an
optical cavity. Everything downstream (couplings, spectra, rotation angles)
is computed from the quantities derived here:

* mechanical frequencies set by the tweezer trap,
  (omega_x0)^2 = alpha * eps_tw^2 / (m * w_x^2),
* the scattering drive rate E_d = alpha * eps_c * eps_tw * sin(theta) / (2 hbar),
* the intracavity mean field alpha_bar = -i E_d cos(phi) / (i Delta - kappa/2).

Unit policy: angular frequencies (rad/s) everywhere internally. The JSON
config format and the CLI use ordinary frequency (Hz) for kappa, kappa_in,
detuning and gas_damping; loading converts with an explicit 2*pi.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

from .constants import C, EPS0, HBAR, KB, TWO_PI


class ConfigError(ValueError):
    """Raised for non-physical or malformed configuration input."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Raw experimental inputs, SI units, angular frequencies in rad/s.

    Attributes:
        wavelength: tweezer/cavity wavelength [m]
        tweezer_power: optical power delivered to the tweezer focus [W]
        waist_x, waist_y: tweezer beam waists along x and y [m]
        particle_radius: nanosphere radius [m]
        density: material density [kg/m^3]
        rel_permittivity: relative dielectric permittivity (> 1)
        cavity_length: cavity length [m]
        cavity_waist: cavity mode waist [m]
        kappa: cavity amplitude linewidth [rad/s]
        kappa_in: input coupling rate [rad/s]; recorded, not used in dynamics
        detuning: tweezer minus cavity frequency [rad/s]; negative = red
        polarisation_angle: tweezer polarisation angle theta [rad], in [0, pi)
        trap_position: standing-wave offset phi [rad]; 0 = antinode, pi/2 = node
        gas_damping: mechanical damping Gamma [rad/s]
        temperature: gas bath temperature [K]
        pressure_mbar: chamber pressure, metadata only (no damping conversion)
    """

    wavelength: float
    tweezer_power: float
    waist_x: float
    waist_y: float
    particle_radius: float
    density: float
    rel_permittivity: float
    cavity_length: float
    cavity_waist: float
    kappa: float
    kappa_in: float
    detuning: float
    polarisation_angle: float
    trap_position: float
    gas_damping: float = TWO_PI * 10.0
    temperature: float = 300.0
    pressure_mbar: float | None = None

    def __post_init__(self):
        positive = [
            "wavelength", "tweezer_power", "waist_x", "waist_y",
            "particle_radius", "density", "cavity_length", "cavity_waist",
            "kappa", "gas_damping", "temperature",
        ]
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be strictly positive")
        if not self.rel_permittivity > 1.0:
            raise ConfigError("rel_permittivity must exceed 1")
        if not 0.0 <= self.polarisation_angle < math.pi:
            raise ConfigError("polarisation_angle must lie in [0, pi)")
        if not 0.0 <= self.trap_position <= math.pi / 2.0:
            raise ConfigError("trap_position must lie in [0, pi/2]")
        if self.kappa_in < 0.0:
            raise ConfigError("kappa_in must be non-negative")


@dataclass(frozen=True)
class DerivedParams:
    """Constants derived from an ExperimentConfig (SI, rad/s)."""

    mass: float                # kg
    polarizability: float      # C m^2 / V
    eps_tw: float              # tweezer field amplitude at focus [V/m]
    eps_c: float               # cavity field amplitude per photon [V/m]
    mode_volume: float         # cavity mode volume [m^3]
    drive_rate: float          # E_d at the configured theta [rad/s]
    wavenumber: float          # k = 2 pi / lambda [rad/m]
    omega_x0: float            # bare tweezer frequency, x [rad/s]
    omega_y0: float            # bare tweezer frequency, y [rad/s]
    x_zpf: float               # zero-point amplitude sqrt(hbar/(2 m omega_x0)) [m]
    y_zpf: float               # [m]
    fsr_hz: float              # free spectral range c/(2 L), informational [Hz]
    waist_x: float             # tweezer waists, carried through for the
    waist_y: float             # co-trapping shift [m]


@dataclass(frozen=True)
class MeanField:
    """Steady-state intracavity field in the displaced frame."""

    alpha_bar: complex
    alpha_r: float
    alpha_i: float
    n_photons: float


# JSON keys are the ExperimentConfig field names; these four are given in Hz
# in the file and converted to rad/s on load.
_HZ_FIELDS = ("kappa", "kappa_in", "detuning", "gas_damping")
_OPTIONAL_FIELDS = ("kappa_in", "gas_damping", "temperature", "pressure_mbar")


def load_config(path: str) -> ExperimentConfig:
    """Load a flat JSON config file. Unknown keys are rejected.

    Frequencies (kappa, kappa_in, detuning, gas_damping) are ordinary
    frequencies in Hz in the file and converted to rad/s here.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path} at byte offset {exc.pos}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(raw).__name__}")

    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(known - set(raw) - set(_OPTIONAL_FIELDS))
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")

    vals = {}
    for key, value in raw.items():
        if value is not None and not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key} must be numeric")
        if key in _HZ_FIELDS:
            value = TWO_PI * value
        vals[key] = value
    return ExperimentConfig(**vals)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Inverse of load_config: a JSON-ready dict with Hz frequency fields."""
    out = {}
    for f in fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if f.name in _HZ_FIELDS and value is not None:
            value = value / TWO_PI
        out[f.name] = value
    return out


def drive_rate(dp: DerivedParams, theta: float) -> float:
    """Scattering drive rate E_d = alpha eps_c eps_tw sin(theta) / (2 hbar)."""
    return dp.polarizability * dp.eps_c * dp.eps_tw * math.sin(theta) / (2.0 * HBAR)


def derive_params(cfg: ExperimentConfig) -> DerivedParams:
    """Populate all derived constants from the raw configuration."""
    radius = cfg.particle_radius
    volume = 4.0 / 3.0 * math.pi * radius**3
    mass = cfg.density * volume
    if mass <= 0.0:
        raise ConfigError("derived particle mass must be positive")
    pol = 3.0 * EPS0 * volume * (cfg.rel_permittivity - 1.0) / (cfg.rel_permittivity + 2.0)

    eps_tw_sq = 4.0 * cfg.tweezer_power / (cfg.waist_x * cfg.waist_y * math.pi * C * EPS0)
    eps_tw = math.sqrt(eps_tw_sq)

    omega_cav = TWO_PI * C / cfg.wavelength
    mode_volume = math.pi / 4.0 * cfg.cavity_waist**2 * cfg.cavity_length
    eps_c = math.sqrt(HBAR * omega_cav / (2.0 * EPS0 * mode_volume))

    omega_x0 = math.sqrt(pol * eps_tw_sq / (mass * cfg.waist_x**2))
    omega_y0 = math.sqrt(pol * eps_tw_sq / (mass * cfg.waist_y**2))

    e_d = pol * eps_c * eps_tw * math.sin(cfg.polarisation_angle) / (2.0 * HBAR)
    return DerivedParams(
        mass=mass,
        polarizability=pol,
        eps_tw=eps_tw,
        eps_c=eps_c,
        mode_volume=mode_volume,
        drive_rate=e_d,
        wavenumber=TWO_PI / cfg.wavelength,
        omega_x0=omega_x0,
        omega_y0=omega_y0,
        x_zpf=math.sqrt(HBAR / (2.0 * mass * omega_x0)),
        y_zpf=math.sqrt(HBAR / (2.0 * mass * omega_y0)),
        fsr_hz=C / (2.0 * cfg.cavity_length),
        waist_x=cfg.waist_x,
        waist_y=cfg.waist_y,
    )


def mean_field(e_d: float, phi: float, delta: float, kappa: float) -> MeanField:
    """Steady-state cavity amplitude alpha_bar = -i E_d cos(phi) / (i Delta - kappa/2)."""
    if kappa <= 0.0:
        raise ConfigError("kappa must be strictly positive")
    alpha = -1j * e_d * math.cos(phi) / (1j * delta - kappa / 2.0)
    return MeanField(
        alpha_bar=alpha,
        alpha_r=alpha.real,
        alpha_i=alpha.imag,
        n_photons=abs(alpha) ** 2,
    )


def thermal_occupancy(temperature: float, omega: float) -> float:
    """High-temperature phonon occupancy k_B T / (hbar omega)."""
    return KB * temperature / (HBAR * omega)
