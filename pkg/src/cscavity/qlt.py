"""Frequency-domain quantum-linear-theory spectra of the coupled system.

compute_spectra solves, for every grid frequency, the linearised equations of
the two mechanical modes and the cavity mode driven by thermal and vacuum
inputs, and assembles the symmetrised displacement spectra

    S_xx, S_yy  [m^2 s]   and   S_xy  [m^2 s, real].

The closed-form cross-spectrum approximation sxy_approx rescales the PSD
difference by the coupling interference term; it reproduces the full result
to a few percent in weak coupling.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import fill_drift, resolve_backend, spectra_kernel
from .couplings import Couplings
from .params import ConfigError
from .response import eta_c

COND_THRESHOLD = 1e12

CSV_HEADER = "omega_hz,sxx,syy,sxy"


class NumericalError(RuntimeError):
    """Raised when a solve cannot produce trustworthy numbers."""


@dataclass(frozen=True)
class SystemParams:
    """Scalar parameters of the linearised dynamics.

    omega_x/omega_y are the mechanical resonances entering the drift matrix;
    when built through model.build_system they already include the static
    co-trapping stiffening (the optical spring emerges from the solve).
    """

    omega_x: float
    omega_y: float
    delta: float
    kappa: float
    x_zpf: float
    y_zpf: float


@dataclass(frozen=True)
class NoiseModel:
    """Input noise channels: mechanical thermal baths and optical vacuum."""

    gamma: float
    n_x: float
    n_y: float
    n_opt: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ConfigError("gamma must be strictly positive")
        if self.n_x < 0.0 or self.n_y < 0.0 or self.n_opt < 0.0:
            raise ConfigError("occupancies must be non-negative")


@dataclass
class SpectraSet:
    """Spectra on a frequency grid plus solver metadata."""

    omega: np.ndarray          # rad/s, strictly increasing
    sxx: np.ndarray            # m^2 s
    syy: np.ndarray            # m^2 s
    sxy: np.ndarray            # m^2 s, symmetrised (real)
    meta: dict = field(default_factory=dict)
    cond: np.ndarray | None = None
    flagged: np.ndarray | None = None

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        for name in ("sxx", "syy", "sxy"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))


def drift_matrix(omega: float, coup: Couplings, system: SystemParams,
                 noise: NoiseModel) -> tuple[np.ndarray, np.ndarray]:
    """Drift matrix M(omega) and the diagonal input map.

    M acts on (b_x, b_x^dag, b_y, b_y^dag, a, a^dag); the input map carries
    sqrt(Gamma) per mechanical channel and sqrt(kappa) for the optical pair.

    Sign convention: Couplings.g_xy is the coefficient entering the
    interference term G = i eta_c g_x g_y + g_xy. Eliminating the cavity from
    this drift matrix yields R_xy = (i mu_x / M_x)(i eta_c g_x g_y - h_xy)
    with h_xy the Hamiltonian coefficient of (b_x+b_x^dag)(b_y+b_y^dag), so
    the matrix is filled with h_xy = -g_xy. The same flip follows from
    expanding the scattering potential directly.
    """
    m = np.empty((6, 6), dtype=complex)
    fill_drift(m, float(omega), system.omega_x, system.omega_y, noise.gamma,
               system.delta, system.kappa, coup.g_x, coup.g_y, -coup.g_xy)
    input_map = np.array([np.sqrt(noise.gamma)] * 4 + [np.sqrt(system.kappa)] * 2)
    return m, input_map


def _linewidth_estimates(coup: Couplings, system: SystemParams, noise: NoiseModel):
    """Gas damping plus optomechanical broadening, per mode."""
    widths = []
    for g_j, w_j in ((coup.g_x, system.omega_x), (coup.g_y, system.omega_y)):
        opt = 2.0 * g_j**2 * float(np.real(eta_c(w_j, system.delta, system.kappa)))
        widths.append(noise.gamma + max(opt, 0.0))
    return widths


def compute_spectra(grid, coup: Couplings, system: SystemParams, noise: NoiseModel,
                    backend: str | None = None) -> SpectraSet:
    """Solve the linear system per grid point and assemble symmetrised spectra.

    The grid must be strictly increasing (rad/s); it may include negative
    frequencies. Points whose 1-norm condition estimate exceeds
    COND_THRESHOLD are marked in the flagged array. A warning is emitted if
    the grid samples a predicted peak with fewer than 8 points per linewidth.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be a 1-d array with at least two points")
    if not np.all(np.diff(grid) > 0.0):
        raise ValueError("grid must be strictly increasing")

    chosen = resolve_backend(backend)
    spacing = np.diff(grid).max()
    for width, w_j in zip(_linewidth_estimates(coup, system, noise),
                          (system.omega_x, system.omega_y)):
        if grid[0] <= w_j <= grid[-1] and width / spacing < 8.0:
            warnings.warn(
                f"grid samples the peak near {w_j / (2 * np.pi):.3g} Hz with "
                f"{width / spacing:.1f} points per linewidth (< 8); refine the grid",
                stacklevel=2,
            )

    # -g_xy: the kernels take the Hamiltonian xy coefficient, see drift_matrix
    sxx, syy, sxy, imasym, cond = spectra_kernel(
        grid, system.omega_x, system.omega_y, noise.gamma, system.delta,
        system.kappa, coup.g_x, coup.g_y, -coup.g_xy, system.x_zpf,
        system.y_zpf, noise.n_x, noise.n_y, noise.n_opt, backend=chosen,
    )
    flagged = cond > COND_THRESHOLD
    meta = {
        "backend": chosen,
        "omega_x": system.omega_x,
        "omega_y": system.omega_y,
        "delta": system.delta,
        "kappa": system.kappa,
        "gamma": noise.gamma,
        "g_x": coup.g_x,
        "g_y": coup.g_y,
        "g_xy": coup.g_xy,
        "x_zpf": system.x_zpf,
        "y_zpf": system.y_zpf,
        "n_x": noise.n_x,
        "n_y": noise.n_y,
        "n_opt": noise.n_opt,
        "phi": coup.phi,
        "theta": coup.theta,
        "max_condition": float(cond.max()),
        "flagged_points": int(flagged.sum()),
        "max_imag_asymmetry": float(np.abs(imasym).max()),
    }
    return SpectraSet(omega=grid, sxx=sxx, syy=syy, sxy=sxy, meta=meta,
                      cond=cond, flagged=flagged)


def sxy_approx(sxx, syy, g, omega_x: float, omega_y: float):
    """Cross-spectrum approximation Re[G(w)] / (omega_x - omega_y) * (S_yy - S_xx).

    g may be the frequency-resolved coupling interference array or a scalar;
    passing the scalar rotation angle times (omega_x - omega_y) reduces this
    to the constant-angle form S_xy = Phi (S_yy - S_xx).
    """
    gap = omega_x - omega_y
    if abs(gap) <= 1e-9 * max(abs(omega_x), abs(omega_y)):
        raise ConfigError("sxy_approx requires non-degenerate modes")
    prefactor = np.real(np.asarray(g)) / gap
    return prefactor * (np.asarray(syy) - np.asarray(sxx))


def sxy_from_angle(angle: float, sxx, syy):
    """Constant-angle cross spectrum S_xy = Phi (S_yy - S_xx)."""
    return float(angle) * (np.asarray(syy) - np.asarray(sxx))


def thermal_area(x_zpf: float, n_bar: float) -> float:
    """Total displacement variance of a bare thermal mode, x_zpf^2 (2 n + 1)."""
    return x_zpf**2 * (2.0 * n_bar + 1.0)


def spectra_to_csv(spectra: SpectraSet) -> str:
    """Serialize to CSV (omega as ordinary frequency in Hz, 12 significant digits)."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    f_hz = spectra.omega / (2.0 * np.pi)
    for i in range(spectra.omega.size):
        buf.write("%.12g,%.12g,%.12g,%.12g\n"
                  % (f_hz[i], spectra.sxx[i], spectra.syy[i], spectra.sxy[i]))
    return buf.getvalue()


def spectra_from_csv(text: str, meta: dict | None = None) -> SpectraSet:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ConfigError(f"spectra CSV must start with header '{CSV_HEADER}'")
    rows = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise ConfigError("spectra CSV rows must have four columns")
    return SpectraSet(
        omega=rows[:, 0] * 2.0 * np.pi,
        sxx=rows[:, 1], syy=rows[:, 2], sxy=rows[:, 3],
        meta=dict(meta or {}),
    )


def write_spectra(path, spectra: SpectraSet, sidecar_path=None) -> None:
    """Write the CSV and a JSON sidecar with all solver parameters."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(spectra_to_csv(spectra))
    if sidecar_path is not None:
        with open(sidecar_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(spectra.meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_spectra(path, sidecar_path=None) -> SpectraSet:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    meta = None
    if sidecar_path is not None:
        with open(sidecar_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    return spectra_from_csv(text, meta=meta)
