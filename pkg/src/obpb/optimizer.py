"""Alternating eigenbeam optimization in spherical-mode space.

Each side of the link keeps M beams described by mode coefficient matrices
Q.  One half-step fixes the far side, forms the near-side marginal profile
weighted by the far beams' radiated power, assembles the near-side mode
correlation matrix and replaces the near beams with the conjugated dominant
eigenvectors.  The figure of merit after every half-step is

    det( Rtilde / M ) = prod_m lambda_m / M^M,

the determinant of the power-normalized beam correlation matrix, which the
eigenvector choice maximizes over all orthonormal coefficient sets for the
current far side.

The loop starts from a single electrically-small-dipole beam at the user
side and stops once two consecutive half-step transitions (one ending at
each side) change the figure of merit by less than a relative epsilon.
"""

import numpy as np
import scipy.linalg

from . import correlation, profiles

# eigenvalues closer than this (relatively) are treated as degenerate and
# their vectors ordered by anchor-entry position, for run-to-run determinism
_DEGENERACY_TOL = 1e-10


class ObpbConfig:
    """Knobs of the alternating optimization."""

    def __init__(self, epsilon=0.01, max_iterations=200):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        self.epsilon = float(epsilon)
        self.max_iterations = int(max_iterations)


class ObpbResult:
    """Outcome of one alternating run at fixed M."""

    def __init__(self, q_bs, q_ue, eigvals_bs, eigvals_ue, objective_history,
                 converged, iterations, r_bs=None):
        self.q_bs = q_bs
        self.q_ue = q_ue
        self.eigvals_bs = eigvals_bs
        self.eigvals_ue = eigvals_ue
        self.objective_history = objective_history
        self.converged = converged
        self.iterations = iterations
        # base-station mode correlation under the final user beams; the
        # matrix any post-hoc beam set (e.g. surface projections) is
        # evaluated against
        self.r_bs = r_bs

    @property
    def objective(self):
        return self.objective_history[-1]


def _phase_fix(vecs):
    """Rotate each column so its largest-magnitude entry is real positive."""
    anchors = np.argmax(np.abs(vecs), axis=0)
    ref = vecs[anchors, np.arange(vecs.shape[1])]
    mags = np.abs(ref)
    mags[mags == 0] = 1.0
    return vecs * (ref.conj() / mags)


def _order_descending(vals, vecs):
    """Sort eigenpairs by descending eigenvalue, breaking near-degenerate
    ties by the position of each vector's anchor entry."""
    idx = np.argsort(-vals, kind="stable")
    vals = vals[idx]
    vecs = vecs[:, idx]
    anchors = np.argmax(np.abs(vecs), axis=0)
    start = 0
    for stop in range(1, vals.size + 1):
        if stop < vals.size and abs(vals[stop] - vals[start]) <= (
                _DEGENERACY_TOL * max(abs(vals[start]), 1e-300)):
            continue
        if stop - start > 1:
            sub = start + np.argsort(anchors[start:stop], kind="stable")
            vals[start:stop] = vals[sub]
            vecs[:, start:stop] = vecs[:, sub]
        start = stop
    return vals, vecs


def dominant_beams(r_sph, m):
    """Top-M eigenbeams of a mode correlation matrix.

    Returns (Q, lam): coefficients (J, M) with orthonormal columns and the
    eigenvalues in descending order.  Beams radiate g = q^T K, so the
    coefficient vectors are the conjugated eigenvectors; the beam-space
    correlation Q^T R Q^* then equals diag(lam).
    """
    j = r_sph.shape[0]
    if not 1 <= m <= j:
        raise ValueError("need 1 <= M <= mode count")
    vals, vecs = scipy.linalg.eigh(r_sph, subset_by_index=[j - m, j - 1])
    vals, vecs = _order_descending(vals, vecs)
    return _phase_fix(vecs).conj(), vals


def optimize_side(q_far, profile, modeset, m, side, fields_near, fields_far):
    """One half-step: refresh the beams of `side` against fixed far beams.

    q_far: mode coefficients of the far side's current beams; fields_near /
    fields_far: precomputed (K_theta, K_phi) on the corresponding grids.
    Returns (Q, lam) for the refreshed side.
    """
    u = profiles.pattern_power(q_far, fields_far)
    if side == "bs":
        marginal = profile.marginal_bs(u)
        grid = profile.bs_grid
    elif side == "ue":
        marginal = profile.marginal_ue(u)
        grid = profile.ue_grid
    else:
        raise ValueError("side is 'bs' or 'ue'")
    r = correlation.mode_correlation(
        modeset, marginal, grid, polarization=profile.params.polarization,
        fields=fields_near)
    return dominant_beams(r, m)


def _converged(history, epsilon):
    if len(history) < 3:
        return False
    d1 = abs(history[-1] - history[-2])
    d2 = abs(history[-2] - history[-3])
    return (d1 <= epsilon * abs(history[-2])
            and d2 <= epsilon * abs(history[-3]))


def _bs_correlation(q_ue, profile, modes_bs, fields_bs, fields_ue):
    u = profiles.pattern_power(q_ue, fields_ue)
    return correlation.mode_correlation(
        modes_bs, profile.marginal_bs(u), profile.bs_grid,
        polarization=profile.params.polarization, fields=fields_bs)


def run(config, profile, modes_bs, modes_ue, m, fields=None):
    """Alternating optimization at fixed rank M.

    The objective tracked per half-step is det(R_h/M) of the base-station
    beam correlation matrix, re-evaluated after user-side updates as well:
    the two sides' determinants coincide only when the link is dual, and a
    cross-correlated profile leaves a permanent gap between them, while the
    single objective both increases monotonically and settles.  The user
    update's effect on the objective arrives for free, since the refreshed
    BS mode correlation is needed by the next half-step anyway.

    fields: optional ((K_theta_bs, K_phi_bs), (K_theta_ue, K_phi_ue)) on the
    profile's grids; computed here (and in 'theta' polarization without the
    phi components) when not supplied.  Returns an ObpbResult.
    """
    if m < 1 or m > min(modes_bs.mode_count, modes_ue.mode_count):
        raise ValueError("need 1 <= M <= min mode count of the two ends")
    if fields is None:
        fields = (profiles.profile_fields(profile, "bs", modes_bs),
                  profiles.profile_fields(profile, "ue", modes_ue))
    fields_bs, fields_ue = fields

    # single omnidirectional seed beam at the user
    from .modes import flat_index
    q_ue = np.zeros((modes_ue.mode_count, 1), dtype=complex)
    q_ue[flat_index(2, 0, 1) - 1, 0] = 1.0

    history = []
    lam_ue = None
    converged = False
    iterations = 0
    norm = float(m) ** m
    r_bs = _bs_correlation(q_ue, profile, modes_bs, fields_bs, fields_ue)
    for iterations in range(1, config.max_iterations + 1):
        q_bs, lam_bs = dominant_beams(r_bs, m)
        history.append(float(np.prod(lam_bs)) / norm)
        if _converged(history, config.epsilon):
            converged = True
            break
        q_ue, lam_ue = optimize_side(
            q_bs, profile, modes_ue, m, "ue", fields_ue, fields_bs)
        r_bs = _bs_correlation(q_ue, profile, modes_bs, fields_bs, fields_ue)
        r_h = correlation.beam_correlation(q_bs, r_bs)
        history.append(float(np.real(np.linalg.det(r_h))) / norm)
        if _converged(history, config.epsilon):
            converged = True
            break
    if lam_ue is None:
        # converged within the very first half-step window; give the user
        # side its matched update so both Q matrices have M columns
        q_ue, lam_ue = optimize_side(
            q_bs, profile, modes_ue, m, "ue", fields_ue, fields_bs)
    return ObpbResult(q_bs, q_ue, lam_bs, lam_ue, history, converged,
                      iterations, r_bs=r_bs)
