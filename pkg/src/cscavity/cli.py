"""Command-line interface: reproducible figure-data pipelines.

Subcommands:
  derive    derived parameters and mean field as a JSON report
  spectra   PSDs and cross spectra to CSV (+ JSON sidecar, optional gnuplot)
  rotation  rotation-angle and corrected-frequency table over a phi sweep
  phic-map  cancellation-point atlas over (kappa, Delta), CSV + contours
  fit       peak fits and angle extraction from spectra files
  replay    re-run a command from its manifest, reproducing outputs

Units at this surface: ordinary frequencies in Hz, trap position as
phi/(2 pi) (0 = antinode, 0.25 = node), angles in degrees where noted.
Internally everything is rad/s; conversion is an explicit 2 pi.

Every command writes a manifest JSON recording the resolved parameters and
output paths; `replay` re-executes from it and reproduces the outputs
byte-identically. Exit codes: 0 success, 2 validation error, 3 numerical
failure, 4 I/O error. CSCAVITY_THREADS bounds the sweep worker count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from ._kernels import resolve_backend
from .extraction import (PeakFitError, crosstalk, debias, default_windows,
                         extract_mode_angle, fit_peak,
                         predicted_crosstalk_bias)
from .model import build_system, default_grid, spectra_for
from .params import ConfigError, config_to_dict, load_config
from .qlt import NumericalError, read_spectra, write_spectra
from .rotation import extract_contours, map_to_csv, mode_angle, phic_map

TWO_PI = 2.0 * math.pi


def _thread_count() -> int:
    raw = os.environ.get("CSCAVITY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"CSCAVITY_THREADS must be an integer, got {raw!r}")


def _parse_phi_values(text: str) -> list[float]:
    """phi/2pi values: '0.25', '0.25,0.1', or 'lo:hi:n' (inclusive sweep)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("phi sweep must be lo:hi:n")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ConfigError("phi sweep needs at least one point")
        values = list(np.linspace(lo, hi, n))
    else:
        values = [float(tok) for tok in text.split(",") if tok]
    if not values:
        raise ConfigError("no phi values given")
    for v in values:
        if not 0.0 <= v <= 0.25:
            raise ConfigError(f"phi/2pi must lie in [0, 0.25], got {v}")
    return values


def _parse_range_hz(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"range must be lo:hi in Hz, got {text!r}")
    return float(parts[0]), float(parts[1])


def _json_dump(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(path: str, command: str, parameters: dict,
                    outputs: list[str], t_start: float) -> None:
    _json_dump(path, {
        "command": command,
        "parameters": parameters,
        "outputs": sorted(outputs),
        "version": __version__,
        "duration_s": time.time() - t_start,
    })


def _spectra_filename(prefix: str, phi_over_2pi: float) -> str:
    return f"{prefix}_phi{phi_over_2pi:.6f}.csv"


# ---------------------------------------------------------------- commands


def cmd_derive(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    built = build_system(
        cfg,
        phi=None if args.phi is None else args.phi * TWO_PI,
        delta=None if args.detuning is None else args.detuning * TWO_PI,
        theta=None if args.theta_deg is None else math.radians(args.theta_deg),
    )
    dp, mf = built.derived, built.field
    report = {
        "mass_kg": dp.mass,
        "polarizability": dp.polarizability,
        "eps_tw": dp.eps_tw,
        "eps_c": dp.eps_c,
        "mode_volume_m3": dp.mode_volume,
        "drive_rate_hz": dp.drive_rate / TWO_PI,
        "wavenumber": dp.wavenumber,
        "omega_x0_hz": dp.omega_x0 / TWO_PI,
        "omega_y0_hz": dp.omega_y0 / TWO_PI,
        "x_zpf_m": dp.x_zpf,
        "y_zpf_m": dp.y_zpf,
        "fsr_hz": dp.fsr_hz,
        "mean_field": {
            "alpha_r": mf.alpha_r,
            "alpha_i": mf.alpha_i,
            "n_photons": mf.n_photons,
        },
        "couplings_hz": {
            "g_x": built.couplings.g_x / TWO_PI,
            "g_y": built.couplings.g_y / TWO_PI,
            "g_xy": built.couplings.g_xy / TWO_PI,
        },
        "corrected_omega_x_hz": built.shifts.omega_x / TWO_PI,
        "corrected_omega_y_hz": built.shifts.omega_y / TWO_PI,
        "thermal_occupancy_x": built.noise.n_x,
        "thermal_occupancy_y": built.noise.n_y,
        "phi_over_2pi": built.phi / TWO_PI,
        "detuning_hz": built.delta / TWO_PI,
        "theta_rad": built.theta,
    }
    _json_dump(args.out, report)
    _write_manifest(args.out + ".manifest.json", "derive", {
        "config": config_to_dict(cfg),
        "phi": args.phi,
        "detuning": args.detuning,
        "theta_deg": args.theta_deg,
        "out": args.out,
    }, [args.out], t0)
    print(f"wrote {args.out}")
    return 0


_GNUPLOT_TEMPLATE = """\
set datafile separator ','
set xlabel 'frequency [Hz]'
set ylabel 'S [m^2/Hz]'
plot '{csv}' skip 1 using 1:2 with lines title 'S_xx', \\
     '{csv}' skip 1 using 1:3 with lines title 'S_yy', \\
     '{csv}' skip 1 using 1:4 with lines title 'S_xy'
pause -1
"""


def cmd_spectra(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    phis = _parse_phi_values(args.phi)
    backend = resolve_backend(args.backend)
    outputs = []

    def run_one(phi_over_2pi: float):
        built = build_system(
            cfg, phi=phi_over_2pi * TWO_PI,
            delta=None if args.detuning is None else args.detuning * TWO_PI,
            theta=None if args.theta_deg is None else math.radians(args.theta_deg),
        )
        grid = default_grid(built, points=args.grid)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            spectra = spectra_for(built, grid=grid, backend=backend)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return spectra

    workers = _thread_count()
    if workers > 1 and len(phis) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, phis))
    else:
        results = [run_one(p) for p in phis]

    # canonical output order regardless of input order
    for phi_over_2pi, spectra in sorted(zip(phis, results), key=lambda t: t[0]):
        csv_path = _spectra_filename(args.out, phi_over_2pi)
        sidecar = csv_path.replace(".csv", ".json")
        write_spectra(csv_path, spectra, sidecar_path=sidecar)
        outputs.extend([csv_path, sidecar])
        if args.gnuplot:
            gp = csv_path.replace(".csv", ".gp")
            with open(gp, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(_GNUPLOT_TEMPLATE.format(csv=os.path.basename(csv_path)))
            outputs.append(gp)

    _write_manifest(args.out + ".manifest.json", "spectra", {
        "config": config_to_dict(cfg),
        "phi": args.phi,
        "detuning": args.detuning,
        "theta_deg": args.theta_deg,
        "grid": args.grid,
        "backend": backend,
        "gnuplot": bool(args.gnuplot),
        "out": args.out,
    }, outputs, t0)
    print(f"wrote {len(outputs)} files for {len(phis)} trap positions")
    return 0


_ROTATION_HEADER = ("phi_over_2pi,phi_dyn,phi_cs,phi_total,"
                    "phi_x_peak,phi_y_peak,omega_x_hz,omega_y_hz")


def cmd_rotation(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    phis = sorted(_parse_phi_values(args.phi_sweep))
    delta = None if args.detuning is None else args.detuning * TWO_PI

    def run_one(phi_over_2pi: float) -> str:
        built = build_system(cfg, phi=phi_over_2pi * TWO_PI, delta=delta)
        angle = mode_angle(built.couplings, built.system, built.noise,
                           eval_omega_x=built.shifts.omega_x,
                           eval_omega_y=built.shifts.omega_y)
        return "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g" % (
            phi_over_2pi, angle.phi_dyn, angle.phi_cs, angle.phi_total,
            angle.phi_x_peak, angle.phi_y_peak,
            built.shifts.omega_x / TWO_PI, built.shifts.omega_y / TWO_PI)

    workers = _thread_count()
    if workers > 1 and len(phis) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_one, phis))
    else:
        rows = [run_one(p) for p in phis]

    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_ROTATION_HEADER + "\n")
        fh.write("\n".join(rows) + "\n")
    _write_manifest(args.out + ".manifest.json", "rotation", {
        "config": config_to_dict(cfg),
        "phi_sweep": args.phi_sweep,
        "detuning": args.detuning,
        "out": args.out,
    }, [args.out], t0)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_phic_map(args) -> int:
    t0 = time.time()
    if args.omega_y is not None:
        omega_y = args.omega_y * TWO_PI
    elif args.config is not None:
        from .params import derive_params
        omega_y = derive_params(load_config(args.config)).omega_y0
    else:
        raise ConfigError("phic-map needs --omega-y or --config")

    k_lo, k_hi = _parse_range_hz(args.kappa_range)
    d_lo, d_hi = _parse_range_hz(args.delta_range)
    cmap = phic_map((k_lo * TWO_PI, k_hi * TWO_PI), (d_lo * TWO_PI, d_hi * TWO_PI),
                    omega_y, args.resolution)
    csv_path = args.out + ".csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(map_to_csv(cmap))
    outputs = [csv_path]

    if args.contours:
        levels = [float(tok) for tok in args.contours.split(",") if tok]
        contour_path = args.out + "_contours.json"
        _json_dump(contour_path, {"omega_y_hz": omega_y / TWO_PI,
                                  "polylines": extract_contours(cmap, levels)})
        outputs.append(contour_path)

    _write_manifest(args.out + ".manifest.json", "phic-map", {
        "omega_y": args.omega_y,
        "config": None if args.config is None else config_to_dict(load_config(args.config)),
        "kappa_range": args.kappa_range,
        "delta_range": args.delta_range,
        "resolution": args.resolution,
        "contours": args.contours,
        "out": args.out,
    }, outputs, t0)
    print(f"wrote {csv_path}")
    return 0


def _peak_report(fit) -> dict:
    return {
        "center_hz": fit.center / TWO_PI,
        "width_hz": fit.width / TWO_PI,
        "area_m2": fit.area,
        "amplitude": fit.amplitude,
        "baseline": fit.baseline,
        "residual_norm": fit.residual_norm,
        "window_hz": [fit.window[0] / TWO_PI, fit.window[1] / TWO_PI],
        "cov_diag": list(fit.cov_diag),
    }


def cmd_fit(args) -> int:
    t0 = time.time()
    if not os.path.exists(args.spectra):
        raise FileNotFoundError(f"spectra file not found: {args.spectra}")
    sidecar = args.sidecar
    if sidecar is None:
        candidate = args.spectra.replace(".csv", ".json")
        sidecar = candidate if os.path.exists(candidate) else None
    spectra = read_spectra(args.spectra, sidecar_path=sidecar)

    beta = math.radians(args.crosstalk_beta) if args.crosstalk_beta else 0.0
    measured = crosstalk(spectra, beta) if beta else spectra

    if args.windows:
        w_parts = args.windows.split(",")
        if len(w_parts) != 2:
            raise ConfigError("--windows must be xlo:xhi,ylo:yhi in Hz")
        win_x = tuple(v * TWO_PI for v in _parse_range_hz(w_parts[0]))
        win_y = tuple(v * TWO_PI for v in _parse_range_hz(w_parts[1]))
    else:
        win_x, win_y = default_windows(measured)

    fit_x = fit_peak(measured.omega, measured.sxx, win_x)
    fit_y = fit_peak(measured.omega, measured.syy, win_y)
    estimate = extract_mode_angle(measured, win_x, win_y)
    bias = predicted_crosstalk_bias(beta)
    debiased = debias(estimate, bias if beta else 0.0)

    report = {
        "spectra_file": args.spectra,
        "crosstalk_beta_deg": args.crosstalk_beta or 0.0,
        "predicted_bias": bias if beta else 0.0,
        "peaks": {"x": _peak_report(fit_x), "y": _peak_report(fit_y)},
        "angles": {
            "phi_x": estimate.phi_x,
            "phi_y": estimate.phi_y,
            "reliable_x": estimate.reliable_x,
            "reliable_y": estimate.reliable_y,
            "debiased_x": debiased.debiased_x,
            "debiased_y": debiased.debiased_y,
        },
    }
    _json_dump(args.out, report)
    _write_manifest(args.out + ".manifest.json", "fit", {
        "spectra": args.spectra,
        "sidecar": sidecar,
        "windows": args.windows,
        "crosstalk_beta": args.crosstalk_beta,
        "out": args.out,
    }, [args.out], t0)
    print(f"wrote {args.out}")
    return 0


def cmd_replay(args) -> int:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    params = manifest["parameters"]

    out_dir = args.out_dir
    tmp_cfg = None
    argv = [command]

    def relocated(path: str) -> str:
        if out_dir is None:
            return path
        os.makedirs(out_dir, exist_ok=True)
        return os.path.join(out_dir, os.path.basename(path))

    if params.get("config") is not None:
        import tempfile

        tmp = tempfile.NamedTemporaryFile("w", suffix=".json", delete=False,
                                          encoding="utf-8")
        json.dump(params["config"], tmp)
        tmp.close()
        tmp_cfg = tmp.name
        argv += ["--config", tmp_cfg]

    passthrough = {
        "derive": [("phi", "--phi"), ("detuning", "--detuning"),
                   ("theta_deg", "--theta-deg")],
        "spectra": [("phi", "--phi"), ("detuning", "--detuning"),
                    ("theta_deg", "--theta-deg"), ("grid", "--grid"),
                    ("backend", "--backend")],
        "rotation": [("phi_sweep", "--phi-sweep"), ("detuning", "--detuning")],
        "phic-map": [("omega_y", "--omega-y"), ("kappa_range", "--kappa-range"),
                     ("delta_range", "--delta-range"), ("resolution", "--resolution"),
                     ("contours", "--contours")],
        "fit": [("spectra", "--spectra"), ("sidecar", "--sidecar"),
                ("windows", "--windows"), ("crosstalk_beta", "--crosstalk-beta")],
    }
    if command not in passthrough:
        raise ConfigError(f"manifest command {command!r} cannot be replayed")
    for key, flag in passthrough[command]:
        value = params.get(key)
        if value is not None:
            argv += [flag, str(value)]
    if command == "spectra" and params.get("gnuplot"):
        argv.append("--gnuplot")
    argv += ["--out", relocated(params["out"])]
    try:
        return main(argv)
    finally:
        if tmp_cfg is not None:
            os.unlink(tmp_cfg)


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cscavity",
        description="Coherent-scattering cavity optomechanics: spectra, "
                    "mode rotation and cancellation-point analysis.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="derived parameters report (JSON)")
    p.add_argument("--config", required=True, help="config JSON path")
    p.add_argument("--phi", type=float, help="trap position phi/2pi override")
    p.add_argument("--detuning", type=float, help="detuning in Hz override")
    p.add_argument("--theta-deg", type=float, help="polarisation angle override [deg]")
    p.add_argument("--out", default="derived.json")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("spectra", help="PSDs and cross spectra to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--phi", default="0.25",
                   help="phi/2pi value(s): single, comma list, or lo:hi:n")
    p.add_argument("--detuning", type=float, help="detuning in Hz override")
    p.add_argument("--theta-deg", type=float)
    p.add_argument("--grid", type=int, default=4001, help="grid points")
    p.add_argument("--backend", choices=["numba", "numpy"], default=None)
    p.add_argument("--gnuplot", action="store_true",
                   help="emit a gnuplot script next to each CSV")
    p.add_argument("--out", default="spectra", help="output file prefix")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("rotation", help="rotation angle and frequencies vs phi")
    p.add_argument("--config", required=True)
    p.add_argument("--phi-sweep", default="0.02:0.25:47",
                   help="phi/2pi sweep lo:hi:n or comma list")
    p.add_argument("--detuning", type=float, help="detuning in Hz override")
    p.add_argument("--out", default="rotation.csv")
    p.set_defaults(func=cmd_rotation)

    p = sub.add_parser("phic-map", help="cancellation-point map over (kappa, Delta)")
    p.add_argument("--config", help="config used only for omega_y")
    p.add_argument("--omega-y", type=float, help="mechanical frequency in Hz")
    p.add_argument("--kappa-range", default="5e3:800e3", help="Hz lo:hi")
    p.add_argument("--delta-range", default="-1000e3:300e3", help="Hz lo:hi")
    p.add_argument("--resolution", type=int, default=201, help="samples per axis")
    p.add_argument("--contours", default=None,
                   help="comma list of phi_c/2pi contour levels")
    p.add_argument("--out", default="phic_map", help="output file prefix")
    p.set_defaults(func=cmd_phic_map)

    p = sub.add_parser("fit", help="peak fits and angle extraction")
    p.add_argument("--spectra", required=True, help="spectra CSV path")
    p.add_argument("--sidecar", default=None, help="JSON sidecar path")
    p.add_argument("--windows", default=None, help="Hz windows xlo:xhi,ylo:yhi")
    p.add_argument("--crosstalk-beta", type=float, default=None,
                   help="apply detector mixing of this angle [deg] before extraction")
    p.add_argument("--out", default="fit_report.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest", help="manifest JSON path")
    p.add_argument("--out-dir", default=None,
                   help="redirect outputs into this directory")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PeakFitError, NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
