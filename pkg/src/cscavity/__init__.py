"""Coherent-scattering levitated cavity optomechanics toolkit.

Simulates displacement power spectra and cross-correlation spectra of a
tweezer-trapped nanoparticle coupled to an optical cavity by coherent
scattering, predicts mode rotation and frequency shifts versus trap
position, locates the cancellation point, and recovers these quantities
back from spectra by peak fitting.
"""

__version__ = "0.1.0"

from ._kernels import DEFAULT_BACKEND, NUMBA_AVAILABLE, resolve_backend
from .couplings import (Couplings, FrequencyShifts, corrected_frequencies,
                        coupling_rates, cs_stiffening, direct_coupling,
                        direct_coupling_from_alpha, optical_spring,
                        shift_bracket)
from .extraction import (AngleEstimate, PeakFit, PeakFitError, crosstalk,
                         debias, default_windows, extract_mode_angle,
                         fit_peak, predicted_crosstalk_bias)
from .model import BuiltSystem, build_system, default_grid, spectra_for
from .params import (ConfigError, DerivedParams, ExperimentConfig, MeanField,
                     config_to_dict, derive_params, drive_rate, load_config,
                     mean_field, thermal_occupancy)
from .qlt import (NoiseModel, SpectraSet, SystemParams, compute_spectra,
                  drift_matrix, read_spectra, spectra_from_csv,
                  spectra_to_csv, sxy_approx, sxy_from_angle, thermal_area,
                  write_spectra)
from .response import (ComplexResponse, big_m, chi, coupling_interference,
                       eta_c, hybridisation, mu, re_i_eta_c)
from .rotation import (CancellationMap, ModeAngle, angle_coefficients,
                       c_phi, cancellation_point, extract_contours,
                       map_to_csv, mode_angle, phi_of_position, phic_map)
