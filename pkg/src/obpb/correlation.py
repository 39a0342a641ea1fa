"""Correlation matrices in mode space and beam space.

The central object is the spherical-mode correlation matrix of one link end,

    R[i, j] = integral P(psi) K_i(psi) . K_j(psi)^* dpsi,

with P the marginal angular power profile of that end and K_i the far-field
pattern functions.  Under 'theta' polarization only the theta components
enter the dot product; under 'full' both.  A beam described by mode
coefficients q radiates the pattern g(psi) = q^T K(psi) (no conjugation), so
the beam-space correlation of a coefficient matrix Q is Q^T R Q^*.

Assembly is a rank-k Hermitian update over quadrature nodes, done in node
chunks through BLAS zherk at half the gemm cost.
"""

import numpy as np
from scipy.linalg.blas import zherk

from . import modes as modes_mod

_DB = 10.0 / np.log(10.0)
_CHUNK_NODES = 8192

# marginal profiles are quadratures of nonnegative integrands: anything more
# negative than this (relative to the peak) indicates a caller bug
_NEGATIVE_TOL = 1e-10


def _hermitize(r):
    return 0.5 * (r + r.conj().T)


def _herk_accumulate(c, block):
    """c += block @ block^H via zherk on the conjugate upper triangle."""
    return zherk(1.0, block.T, beta=1.0, c=c, trans=2, lower=0, overwrite_c=1)


def mode_correlation(modeset, marginal, grid, polarization="theta", fields=None,
                     prune_tol=1e-15):
    """Spherical-mode correlation matrix for one link end.

    Parameters
    ----------
    modeset : ModeSet
    marginal : (n_nodes,) nonnegative marginal power profile on the grid
    grid : DirectionGrid carrying the quadrature weights
    polarization : 'theta' keeps only theta components, 'full' both
    fields : optional precomputed (K_theta, K_phi) matrices on the grid;
        K_phi may be None under 'theta' polarization
    prune_tol : nodes whose weighted power falls below prune_tol times the
        peak are skipped; the marginals here are sharply concentrated, so
        this drops most of the sphere at a relative error around the
        tolerance itself

    Returns the (J, J) Hermitian PSD matrix.
    """
    marginal = np.asarray(marginal, dtype=float)
    peak = marginal.max() if marginal.size else 0.0
    if peak > 0 and marginal.min() < -_NEGATIVE_TOL * peak:
        raise ValueError("marginal profile has significantly negative values")
    wm = np.maximum(grid.weights * marginal, 0.0)
    keep = np.flatnonzero(wm > prune_tol * wm.max())
    wp = np.sqrt(wm[keep])

    J = modeset.mode_count
    c = np.zeros((J, J), dtype=complex, order="F")
    for lo in range(0, keep.size, _CHUNK_NODES):
        sel = keep[lo:lo + _CHUNK_NODES]
        if fields is None:
            kth, kph = modes_mod.far_field_matrix(
                modeset, grid.theta[sel], grid.phi[sel])
            if polarization == "theta":
                kph = None
        else:
            kth = fields[0][:, sel]
            kph = None if fields[1] is None else fields[1][:, sel]
        c = _herk_accumulate(c, np.ascontiguousarray(kth * wp[lo:lo + _CHUNK_NODES]))
        if polarization == "full":
            if kph is None:
                raise ValueError("'full' polarization needs K_phi fields")
            c = _herk_accumulate(c, np.ascontiguousarray(kph * wp[lo:lo + _CHUNK_NODES]))
    r = (np.triu(c) + np.triu(c, 1).conj().T).conj()
    return _hermitize(r)


def beam_correlation(q, r_sph):
    """Beam-space correlation Q^T R Q^* of beams with mode coefficients Q."""
    q = np.asarray(q)
    if q.ndim == 1:
        q = q[:, None]
    return _hermitize(q.T @ r_sph @ q.conj())


def normalize_correlation(r):
    """Magnitude correlation coefficients |r_ij| / sqrt(r_ii r_jj)."""
    d = np.real(np.diag(r)).copy()
    if np.any(d <= 0):
        raise ValueError("correlation matrix has a nonpositive diagonal")
    out = np.abs(r) / np.sqrt(np.outer(d, d))
    np.fill_diagonal(out, 1.0)
    return out


def det_db(r):
    """10 log10 det(R); -inf when the determinant is not positive."""
    sign, logabs = np.linalg.slogdet(r)
    if not np.isfinite(logabs) or np.real(sign) <= 0:
        return -np.inf
    return float(_DB * logabs)


def omni_power(grid):
    """Radiated power pattern of the unit-norm lowest TM mode on a grid.

    This is the electrically small dipole reference: |K_201|^2, a
    sin^2(theta) donut carrying total power 4 pi like every mode.
    """
    kth, kph = modes_mod.far_field_function(2, 0, 1, grid.theta, grid.phi)
    return np.abs(kth) ** 2 + np.abs(kph) ** 2


def siso_reference(profile):
    """Mean channel power of the single-dipole link under a joint profile.

    r_omni = E|h|^2 for one unit-norm lowest-mode antenna at each end;
    the SNR calibration pins this link to a prescribed mean SNR.
    """
    pb = profile.bs_grid.weights * omni_power(profile.bs_grid)
    pu = profile.ue_grid.weights * omni_power(profile.ue_grid)
    return float(pb @ profile.joint_matrix @ pu)


def calibrated_snr(profile, siso_snr_db=-12.0):
    """Transmit SNR P/Pn making the dipole-to-dipole link sit at siso_snr_db."""
    return 10.0 ** (siso_snr_db / 10.0) / siso_reference(profile)
