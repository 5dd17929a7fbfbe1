"""Per-frequency solver kernels for the linearised tweezer-cavity system.

Two interchangeable backends compute the same quantities:

* "numba": an @njit loop over grid points (default when numba imports),
* "numpy": a batched pure-numpy path using stacked 6x6 inversions.

Selection: the CSCAVITY_BACKEND environment variable ("numba" or "numpy"),
else numba when available. Both backends evaluate every grid point
independently (no cross-point accumulation), so results do not depend on
scheduling or evaluation order.

State vector ordering: (b_x, b_x^dag, b_y, b_y^dag, a, a^dag). The drift
matrix row for each component equals the inverse bare susceptibility on the
diagonal plus i*(coupling) off-diagonal entries; daggered rows carry the
conjugated couplings with -i. Noise enters through sqrt(Gamma) / sqrt(kappa)
input maps with thermal weights (n+1, n) per channel pair.

For each requested frequency w the kernel solves the system at +w and -w
and contracts the transfer rows with the input correlators:

    P_ab(w) = sum_kl T_a,k(-w) C_kl T_b,l(+w)

with C the rate-weighted correlation matrix. The symmetrised spectra are
S_aa = Re P_aa and S_xy = Re[(P_xy + P_yx) / 2]; the imaginary remainder of
the symmetrised cross term is returned as a diagnostic (it should sit at
rounding level). A 1-norm condition estimate per point supports flagging
ill-conditioned solves.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco


DEFAULT_BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"


def resolve_backend(backend: str | None = None) -> str:
    """Pick the kernel backend from the argument or CSCAVITY_BACKEND."""
    choice = backend or os.environ.get("CSCAVITY_BACKEND", "") or DEFAULT_BACKEND
    choice = choice.lower()
    if choice not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {choice!r}; expected 'numba' or 'numpy'")
    if choice == "numba" and not NUMBA_AVAILABLE:
        choice = "numpy"
    return choice


def fill_drift(out, omega, omega_x, omega_y, gamma, delta, kappa, g_x, g_y, g_xy):
    """Write the 6x6 frequency-domain drift matrix M(omega) into out."""
    igx = 1j * g_x
    igy = 1j * g_y
    igxy = 1j * g_xy
    out[:] = 0.0
    out[0, 0] = 1j * (omega_x - omega) + gamma / 2.0
    out[0, 2] = igxy
    out[0, 3] = igxy
    out[0, 4] = igx
    out[0, 5] = igx
    out[1, 1] = -1j * (omega_x + omega) + gamma / 2.0
    out[1, 2] = -igxy
    out[1, 3] = -igxy
    out[1, 4] = -igx
    out[1, 5] = -igx
    out[2, 0] = igxy
    out[2, 1] = igxy
    out[2, 2] = 1j * (omega_y - omega) + gamma / 2.0
    out[2, 4] = igy
    out[2, 5] = igy
    out[3, 0] = -igxy
    out[3, 1] = -igxy
    out[3, 3] = -1j * (omega_y + omega) + gamma / 2.0
    out[3, 4] = -igy
    out[3, 5] = -igy
    out[4, 0] = igx
    out[4, 1] = igx
    out[4, 2] = igy
    out[4, 3] = igy
    out[4, 4] = -1j * (omega + delta) + kappa / 2.0
    out[5, 0] = -igx
    out[5, 1] = -igx
    out[5, 2] = -igy
    out[5, 3] = -igy
    out[5, 5] = -1j * (omega - delta) + kappa / 2.0


_fill_drift_jit = njit(cache=True)(fill_drift)


@njit(cache=True)
def _norm1(m):
    best = 0.0
    for j in range(6):
        s = 0.0
        for i in range(6):
            s += abs(m[i, j])
        if s > best:
            best = s
    return best


@njit(cache=True)
def _spectra_numba(omega, omega_x, omega_y, gamma, delta, kappa,
                   g_x, g_y, g_xy, x_zpf, y_zpf, n_x, n_y, n_opt):
    n = omega.size
    sxx = np.empty(n)
    syy = np.empty(n)
    sxy = np.empty(n)
    imasym = np.empty(n)
    cond = np.empty(n)
    mp = np.empty((6, 6), dtype=np.complex128)
    mn = np.empty((6, 6), dtype=np.complex128)
    for i in range(n):
        w = omega[i]
        _fill_drift_jit(mp, w, omega_x, omega_y, gamma, delta, kappa, g_x, g_y, g_xy)
        _fill_drift_jit(mn, -w, omega_x, omega_y, gamma, delta, kappa, g_x, g_y, g_xy)
        ap = np.linalg.inv(mp)
        an = np.linalg.inv(mn)
        cp = _norm1(mp) * _norm1(ap)
        cn = _norm1(mn) * _norm1(an)
        cond[i] = cp if cp > cn else cn

        txp = x_zpf * (ap[0] + ap[1])
        typ_ = y_zpf * (ap[2] + ap[3])
        txn = x_zpf * (an[0] + an[1])
        tyn = y_zpf * (an[2] + an[3])

        pxx = (gamma * ((n_x + 1.0) * txn[0] * txp[1] + n_x * txn[1] * txp[0])
               + gamma * ((n_y + 1.0) * txn[2] * txp[3] + n_y * txn[3] * txp[2])
               + kappa * ((n_opt + 1.0) * txn[4] * txp[5] + n_opt * txn[5] * txp[4]))
        pyy = (gamma * ((n_x + 1.0) * tyn[0] * typ_[1] + n_x * tyn[1] * typ_[0])
               + gamma * ((n_y + 1.0) * tyn[2] * typ_[3] + n_y * tyn[3] * typ_[2])
               + kappa * ((n_opt + 1.0) * tyn[4] * typ_[5] + n_opt * tyn[5] * typ_[4]))
        pxy = (gamma * ((n_x + 1.0) * txn[0] * typ_[1] + n_x * txn[1] * typ_[0])
               + gamma * ((n_y + 1.0) * txn[2] * typ_[3] + n_y * txn[3] * typ_[2])
               + kappa * ((n_opt + 1.0) * txn[4] * typ_[5] + n_opt * txn[5] * typ_[4]))
        pyx = (gamma * ((n_x + 1.0) * tyn[0] * txp[1] + n_x * tyn[1] * txp[0])
               + gamma * ((n_y + 1.0) * tyn[2] * txp[3] + n_y * tyn[3] * txp[2])
               + kappa * ((n_opt + 1.0) * tyn[4] * txp[5] + n_opt * tyn[5] * txp[4]))

        sxx[i] = pxx.real
        syy[i] = pyy.real
        half = 0.5 * (pxy + pyx)
        sxy[i] = half.real
        imasym[i] = half.imag
    return sxx, syy, sxy, imasym, cond


def _contract_numpy(ta_n, tb_p, gamma, kappa, n_x, n_y, n_opt):
    return (gamma * ((n_x + 1.0) * ta_n[:, 0] * tb_p[:, 1] + n_x * ta_n[:, 1] * tb_p[:, 0])
            + gamma * ((n_y + 1.0) * ta_n[:, 2] * tb_p[:, 3] + n_y * ta_n[:, 3] * tb_p[:, 2])
            + kappa * ((n_opt + 1.0) * ta_n[:, 4] * tb_p[:, 5] + n_opt * ta_n[:, 5] * tb_p[:, 4]))


def _spectra_numpy(omega, omega_x, omega_y, gamma, delta, kappa,
                   g_x, g_y, g_xy, x_zpf, y_zpf, n_x, n_y, n_opt):
    n = omega.size
    w = np.concatenate([omega, -omega])
    m = np.zeros((2 * n, 6, 6), dtype=np.complex128)
    igx = 1j * g_x
    igy = 1j * g_y
    igxy = 1j * g_xy
    m[:, 0, 0] = 1j * (omega_x - w) + gamma / 2.0
    m[:, 0, 2] = igxy
    m[:, 0, 3] = igxy
    m[:, 0, 4] = igx
    m[:, 0, 5] = igx
    m[:, 1, 1] = -1j * (omega_x + w) + gamma / 2.0
    m[:, 1, 2] = -igxy
    m[:, 1, 3] = -igxy
    m[:, 1, 4] = -igx
    m[:, 1, 5] = -igx
    m[:, 2, 0] = igxy
    m[:, 2, 1] = igxy
    m[:, 2, 2] = 1j * (omega_y - w) + gamma / 2.0
    m[:, 2, 4] = igy
    m[:, 2, 5] = igy
    m[:, 3, 0] = -igxy
    m[:, 3, 1] = -igxy
    m[:, 3, 3] = -1j * (omega_y + w) + gamma / 2.0
    m[:, 3, 4] = -igy
    m[:, 3, 5] = -igy
    m[:, 4, 0] = igx
    m[:, 4, 1] = igx
    m[:, 4, 2] = igy
    m[:, 4, 3] = igy
    m[:, 4, 4] = -1j * (w + delta) + kappa / 2.0
    m[:, 5, 0] = -igx
    m[:, 5, 1] = -igx
    m[:, 5, 2] = -igy
    m[:, 5, 3] = -igy
    m[:, 5, 5] = -1j * (w - delta) + kappa / 2.0

    a = np.linalg.inv(m)
    cond_all = (np.abs(m).sum(axis=1).max(axis=1)
                * np.abs(a).sum(axis=1).max(axis=1))
    cond = np.maximum(cond_all[:n], cond_all[n:])

    tx = x_zpf * (a[:, 0, :] + a[:, 1, :])
    ty = y_zpf * (a[:, 2, :] + a[:, 3, :])
    txp, txn = tx[:n], tx[n:]
    typ_, tyn = ty[:n], ty[n:]

    pxx = _contract_numpy(txn, txp, gamma, kappa, n_x, n_y, n_opt)
    pyy = _contract_numpy(tyn, typ_, gamma, kappa, n_x, n_y, n_opt)
    pxy = _contract_numpy(txn, typ_, gamma, kappa, n_x, n_y, n_opt)
    pyx = _contract_numpy(tyn, txp, gamma, kappa, n_x, n_y, n_opt)

    half = 0.5 * (pxy + pyx)
    return pxx.real, pyy.real, half.real, half.imag, cond


def spectra_kernel(omega, omega_x, omega_y, gamma, delta, kappa,
                   g_x, g_y, g_xy, x_zpf, y_zpf, n_x, n_y, n_opt,
                   backend: str | None = None):
    """Dispatch to the selected backend; see module docstring for outputs."""
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    args = (omega, float(omega_x), float(omega_y), float(gamma), float(delta),
            float(kappa), float(g_x), float(g_y), float(g_xy), float(x_zpf),
            float(y_zpf), float(n_x), float(n_y), float(n_opt))
    if resolve_backend(backend) == "numba":
        return _spectra_numba(*args)
    return _spectra_numpy(*args)
