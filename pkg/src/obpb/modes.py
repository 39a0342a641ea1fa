"""Vector spherical mode machinery.

Modes follow the spherical near-field measurement convention (Hansen): a mode
is labelled (s, m, n) with s = 1 (TE) or 2 (TM), polar order n >= 1 and
azimuthal order m in [-n, n], and packed into a single flat index

    j = 2 (n (n + 1) + m - 1) + s,

so a truncation at polar order N keeps J = 2 N (N + 2) modes.

The far-field pattern functions are

    K_1mn = (-i)^(n+1) c_mn e^(i m phi) [ i m Pb/sin(theta) th^ - dPb/dth ph^ ]
    K_2mn = (-i)^n     c_mn e^(i m phi) [ dPb/dth th^ + i m Pb/sin(theta) ph^ ]

with c_mn = sqrt(2/(n(n+1))) (-m/|m|)^m and Pb the orthonormalized associated
Legendre function of degree n and order |m| without the Condon-Shortley phase
(integral of Pb^2 over [-1, 1] equals 1).  Under this normalization every mode
radiates the same power: integral |K_j|^2 dOmega = 4 pi.

The regular (standing-wave) functions share the angular factors.  Their
tangential part is K_smn times a per-mode radial scalar,

    s = 1:  j_n(kr)
    s = 2:  (kr j_n(kr))' / kr = j_n'(kr) + j_n(kr)/kr,

and the s = 2 modes add a radial component n(n+1)/(kr) j_n(kr) Pb r^.  All
lengths are in wavelengths, so k r = 2 pi r.
"""

import numpy as np
from scipy.special import spherical_jn

# Polar angles are clamped away from the poles; the limit formulas for
# m Pb/sin(theta) and dPb/dtheta are reproduced to ~1e-14 at this distance
# for n <= 20.
POLE_CLAMP = 1e-7


def truncation_order(r0):
    """Polar truncation order for an antenna enclosed in radius r0 (wavelengths).

    N = floor(2 pi r0 / lambda0).  The zero margin is the unique choice that
    gives J = 646 at r0 = 4/sqrt(2) and J = 48 at r0 = 1/sqrt(2); rounding up
    cannot produce either count for any constant margin.
    """
    if r0 <= 0:
        raise ValueError("enclosing radius must be positive")
    return int(np.floor(2.0 * np.pi * r0))


def mode_count_for_radius(r0):
    """Number of spherical modes J = 2 N (N + 2) kept for enclosing radius r0."""
    n = truncation_order(r0)
    return 2 * n * (n + 2)


def flat_index(s, m, n):
    """Flat mode index j = 2 (n (n + 1) + m - 1) + s."""
    _check_smn(s, m, n)
    return 2 * (n * (n + 1) + m - 1) + s


def mode_from_flat(j):
    """Invert the flat index: j -> (s, m, n)."""
    if j < 1:
        raise ValueError("flat index starts at 1")
    s = 2 - (j % 2)
    t = (j - s) // 2 + 1          # t = n (n + 1) + m in [n^2, n^2 + 2n]
    n = int(np.sqrt(t))
    m = t - n * (n + 1)
    _check_smn(s, m, n)
    return s, m, n


def _check_smn(s, m, n):
    if s not in (1, 2):
        raise ValueError("polarization class s must be 1 or 2")
    if n < 1:
        raise ValueError("polar order n must be >= 1")
    if abs(m) > n:
        raise ValueError("azimuthal order m must satisfy |m| <= n")


class ModeSet:
    """Truncated set of modes in flat-index order.

    Parameters
    ----------
    truncation_order : int, optional
        Polar order N; every (s, m, n) with n <= N is kept.
    enclosing_radius : float, optional
        Radius r0 in wavelengths; N is derived when not given explicitly.
    """

    def __init__(self, truncation_order=None, enclosing_radius=None):
        if truncation_order is None:
            if enclosing_radius is None:
                raise ValueError("give truncation_order or enclosing_radius")
            truncation_order = globals()["truncation_order"](enclosing_radius)
        if truncation_order < 1:
            raise ValueError("truncation order must be >= 1")
        self.truncation_order = int(truncation_order)
        self.enclosing_radius = enclosing_radius
        j = np.arange(1, 2 * self.truncation_order * (self.truncation_order + 2) + 1)
        self.s = 2 - (j % 2)
        t = (j - self.s) // 2 + 1
        self.n = np.sqrt(t).astype(int)
        self.m = t - self.n * (self.n + 1)

    @property
    def mode_count(self):
        return self.s.size

    def __len__(self):
        return self.s.size

    def __iter__(self):
        return zip(self.s, self.m, self.n)


def normalized_legendre(nmax, m, theta):
    """Orthonormal associated Legendre functions and theta derivatives.

    Returns (P, dP) of shape (nmax - m + 1, len(theta)) for degrees
    n = m .. nmax at order m >= 0.  Normalization is
    integral_{-1}^{1} P_n^m(x)^2 dx = 1, without the Condon-Shortley phase.
    Stable forward recurrence in n:

        P_m^m    propto sin(theta)^m
        P_n^m    = a_n (x P_{n-1}^m - P_{n-2}^m / a_{n-1}),
        a_n      = sqrt((4n^2 - 1)/(n^2 - m^2))
        dP_n/dth = (n x P_n - b_n P_{n-1}) / sin(theta),
        b_n      = sqrt((n^2 - m^2)(2n + 1)/(2n - 1)).
    """
    if m < 0 or nmax < m:
        raise ValueError("need 0 <= m <= nmax")
    theta = np.clip(np.asarray(theta, dtype=float), POLE_CLAMP, np.pi - POLE_CLAMP)
    x = np.cos(theta)
    sx = np.sin(theta)

    # seed P_m^m by climbing the diagonal from P_0^0 = 1/sqrt(2)
    pmm = np.full_like(x, 1.0 / np.sqrt(2.0))
    for k in range(1, m + 1):
        pmm = np.sqrt((2 * k + 1) / (2.0 * k)) * sx * pmm

    rows = nmax - m + 1
    P = np.empty((rows, x.size), dtype=float)
    dP = np.empty_like(P)
    P[0] = pmm
    dP[0] = m * x * pmm / sx
    if rows > 1:
        P[1] = np.sqrt(2 * m + 3.0) * x * pmm
        n = m + 1
        b = np.sqrt((n * n - m * m) * (2 * n + 1.0) / (2 * n - 1.0))
        dP[1] = (n * x * P[1] - b * P[0]) / sx
    a_prev = None
    for i in range(2, rows):
        n = m + i
        a = np.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
        if a_prev is None:
            a_prev = np.sqrt((4.0 * (n - 1) ** 2 - 1.0) / ((n - 1) ** 2 - m * m))
        P[i] = a * (x * P[i - 1] - P[i - 2] / a_prev)
        b = np.sqrt((n * n - m * m) * (2 * n + 1.0) / (2 * n - 1.0))
        dP[i] = (n * x * P[i] - b * P[i - 1]) / sx
        a_prev = a
    return P, dP


def _mode_sign(m):
    """Hansen prefactor (-m/|m|)^m, with the m = 0 convention of 1."""
    if m > 0 and m % 2 == 1:
        return -1.0
    return 1.0


def far_field_function(s, m, n, theta, phi):
    """Far-field pattern function K_smn at directions (theta, phi).

    Returns (K_theta, K_phi) as complex arrays broadcast over the inputs.
    """
    _check_smn(s, m, n)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    P, dP = normalized_legendre(n, abs(m), theta)
    pb, dpb = P[-1], dP[-1]
    st = np.sin(np.clip(theta, POLE_CLAMP, np.pi - POLE_CLAMP))
    c = np.sqrt(2.0 / (n * (n + 1.0))) * _mode_sign(m)
    azim = np.exp(1j * m * phi)
    mps = 1j * m * pb / st
    if s == 1:
        pref = c * (-1j) ** (n + 1)
        return pref * azim * mps, pref * azim * (-dpb)
    pref = c * (-1j) ** n
    return pref * azim * dpb, pref * azim * mps


def far_field_matrix(modes, theta, phi):
    """Stack K_smn for every mode in a ModeSet over a list of directions.

    theta and phi are 1-D arrays of equal length; returns (K_theta, K_phi),
    each of shape (J, len(theta)), rows in flat-index order.  Legendre blocks
    are shared across modes with the same |m|, which is what makes the
    J = 646 truncation affordable on large quadrature grids.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    phi = np.asarray(phi, dtype=float).ravel()
    if theta.size != phi.size:
        raise ValueError("theta and phi must have the same length")
    nmax = modes.truncation_order
    J = modes.mode_count
    Kth = np.empty((J, theta.size), dtype=complex)
    Kph = np.empty_like(Kth)
    st = np.sin(np.clip(theta, POLE_CLAMP, np.pi - POLE_CLAMP))

    for mu in range(0, nmax + 1):
        P, dP = normalized_legendre(nmax, mu, theta)
        for sign in ((1,) if mu == 0 else (1, -1)):
            m = sign * mu
            azim = np.exp(1j * m * phi)
            for n in range(max(mu, 1), nmax + 1):
                pb = P[n - mu]
                dpb = dP[n - mu]
                mps = (1j * m / st) * pb
                c = np.sqrt(2.0 / (n * (n + 1.0))) * _mode_sign(m)
                p1 = c * (-1j) ** (n + 1)
                p2 = c * (-1j) ** n
                Kth[flat_index(1, m, n) - 1] = (p1 * azim) * mps
                Kph[flat_index(1, m, n) - 1] = (p1 * azim) * (-dpb)
                Kth[flat_index(2, m, n) - 1] = (p2 * azim) * dpb
                Kph[flat_index(2, m, n) - 1] = (p2 * azim) * mps
    return Kth, Kph


def radial_factors(nmax, kr):
    """Radial dependence of the regular waves for n = 1 .. nmax.

    Returns (R1, R2, Rr): the s = 1 tangential factor j_n, the s = 2
    tangential factor (kr j_n)'/kr and the s = 2 radial factor
    n(n+1)/(kr) j_n, each of shape (nmax, len(kr)).
    """
    kr = np.maximum(np.asarray(kr, dtype=float), 1e-9)
    ns = np.arange(1, nmax + 1)[:, None]
    jn = np.stack([spherical_jn(n, kr) for n in range(1, nmax + 1)])
    jnp = np.stack([spherical_jn(n, kr, derivative=True) for n in range(1, nmax + 1)])
    R1 = jn
    R2 = jnp + jn / kr
    Rr = ns * (ns + 1) * jn / kr
    return R1, R2, Rr


def regular_wave_function(s, m, n, r, theta, phi):
    """Regular spherical wave function F^(1)_smn at points (r, theta, phi).

    Returns (F_r, F_theta, F_phi) in spherical components.  The tangential
    part equals K_smn times the per-mode radial scalar, so the phase
    conventions match far_field_function exactly.
    """
    _check_smn(s, m, n)
    r = np.asarray(r, dtype=float)
    R1, R2, Rr = radial_factors(n, 2.0 * np.pi * r)
    Kth, Kph = far_field_function(s, m, n, theta, phi)
    if s == 1:
        zero = np.zeros(np.broadcast(r, np.asarray(theta), np.asarray(phi)).shape)
        return zero, R1[-1] * Kth, R1[-1] * Kph
    P, _ = normalized_legendre(n, abs(m), theta)
    c = np.sqrt(2.0 / (n * (n + 1.0))) * _mode_sign(m)
    pref = c * (-1j) ** n
    Fr = Rr[-1] * pref * np.exp(1j * m * np.asarray(phi)) * P[-1]
    return Fr, R2[-1] * Kth, R2[-1] * Kph


def regular_wave_matrix(modes, r, theta, phi):
    """Regular waves for every mode in a ModeSet at a list of points.

    r, theta, phi are 1-D arrays of equal length P.  Returns
    (F_r, F_theta, F_phi), each (J, P) in flat-index order.
    """
    r = np.asarray(r, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    phi = np.asarray(phi, dtype=float).ravel()
    nmax = modes.truncation_order
    Kth, Kph = far_field_matrix(modes, theta, phi)
    R1, R2, Rr = radial_factors(nmax, 2.0 * np.pi * r)
    J = modes.mode_count
    Fr = np.zeros((J, r.size), dtype=complex)
    Fth = np.empty_like(Fr)
    Fph = np.empty_like(Fr)
    for i, (s, m, n) in enumerate(modes):
        rad = R1[n - 1] if s == 1 else R2[n - 1]
        Fth[i] = rad * Kth[i]
        Fph[i] = rad * Kph[i]
    # radial components of the s = 2 modes, sharing Legendre blocks per |m|
    for mu in range(0, nmax + 1):
        P, _ = normalized_legendre(nmax, mu, theta)
        for sign in ((1,) if mu == 0 else (1, -1)):
            m = sign * mu
            azim = np.exp(1j * m * phi)
            for n in range(max(mu, 1), nmax + 1):
                c = np.sqrt(2.0 / (n * (n + 1.0))) * _mode_sign(m)
                Fr[flat_index(2, m, n) - 1] = Rr[n - 1] * c * (-1j) ** n * azim * P[n - mu]
    return Fr, Fth, Fph
