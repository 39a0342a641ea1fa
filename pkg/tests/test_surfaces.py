"""Surface geometry and the radiatable-subspace projector.

The geometric identities pin the three reference shapes to the common
enclosing sphere: the plane is the inscribed square sheet, the 1/32-sphere
cap's corners touch the sphere, the hemisphere is half the sphere itself.
The projector checks exploit the hard symmetry of the x = 0 plane: a planar
current sheet radiates only the half of the modes that are even under the
x-reflection, so its rank must be exactly J/2.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from obpb import surfaces
from obpb.modes import ModeSet

R0_BS = 4.0 / np.sqrt(2.0)


@pytest.fixture(scope="module")
def small_plane_op():
    modeset = ModeSet(truncation_order=3)
    samp = surfaces.sample_surface(surfaces.plane_surface(1.0 / np.sqrt(2.0)))
    return surfaces.build_z(modeset, samp)


def test_named_surface_shapes():
    plane = surfaces.named_surface("plane", R0_BS)
    assert plane.kind == "plane"
    assert abs(plane.side - np.sqrt(2.0) * R0_BS) < 1e-12
    hemi = surfaces.named_surface("hemisphere", R0_BS)
    assert hemi.kind == "cap" and hemi.center_x == 0.0
    assert hemi.radius == R0_BS
    cap = surfaces.named_surface("one_32_sphere", R0_BS)
    assert cap.kind == "cap"
    assert cap.theta_c == cap.phi_c == np.pi / 8
    with pytest.raises(ValueError):
        surfaces.named_surface("paraboloid", R0_BS)


def test_cap_corner_touches_enclosing_sphere():
    # 2 R^2 (1 - cos t_c cos p_c) = r0^2 puts the four cap corners on the
    # enclosing sphere, same as the plane's corners
    cap = surfaces.named_surface("one_32_sphere", R0_BS)
    lhs = 2.0 * cap.radius ** 2 * (1.0 - np.cos(cap.theta_c)
                                   * np.cos(cap.phi_c))
    assert abs(lhs - R0_BS ** 2) < 1e-12 * R0_BS ** 2


def test_sampling_stays_inside_sphere_and_is_concave():
    for name in ("plane", "one_32_sphere", "hemisphere"):
        samp = surfaces.sample_surface(surfaces.named_surface(name, R0_BS))
        assert samp.r.max() <= R0_BS * (1.0 + 1e-9)
        assert samp.n_points > 0
    # the 1/32 cap is a dish cupped toward +x: its deepest point touches the
    # origin and the rim bends forward, so near-axis samples sit behind the
    # overall mean
    samp = surfaces.sample_surface(
        surfaces.named_surface("one_32_sphere", R0_BS))
    x = samp.points[:, 0]
    assert x.min() >= -1e-12
    assert x.max() - x.min() > 0.2 * R0_BS
    near_axis = ((np.abs(samp.points[:, 1]) < 0.15)
                 & (np.abs(samp.points[:, 2]) < 0.15))
    assert near_axis.any()
    assert x[near_axis].mean() < x.mean()


def test_sampling_tangent_frames_are_orthonormal():
    samp = surfaces.sample_surface(
        surfaces.named_surface("one_32_sphere", R0_BS))
    t0 = samp.tangents[:, 0, :]
    t1 = samp.tangents[:, 1, :]
    assert np.abs(np.linalg.norm(t0, axis=1) - 1.0).max() < 1e-12
    assert np.abs(np.linalg.norm(t1, axis=1) - 1.0).max() < 1e-12
    assert np.abs(np.sum(t0 * t1, axis=1)).max() < 1e-12
    # tangents are perpendicular to the local sphere radius through the point
    center = np.array([surfaces.named_surface("one_32_sphere", R0_BS).center_x,
                       0.0, 0.0])
    radial = samp.points - center
    radial /= np.linalg.norm(radial, axis=1, keepdims=True)
    assert np.abs(np.sum(t0 * radial, axis=1)).max() < 1e-12
    assert np.abs(np.sum(t1 * radial, axis=1)).max() < 1e-12


def test_sampling_density_scales_point_count():
    surf = surfaces.named_surface("one_32_sphere", R0_BS)
    n2 = surfaces.sample_surface(surf, density=2.0).n_points
    n4 = surfaces.sample_surface(surf, density=4.0).n_points
    assert 3.0 < n4 / n2 < 5.0  # area sampling: 4x points per density double
    with pytest.raises(ValueError):
        surfaces.sample_surface(surf, density=0.0)


def test_plane_rank_is_half_the_modes():
    # the x = 0 sheet cannot radiate the modes odd under x-reflection; at
    # J = 646 the numerical rank lands exactly on the symmetric half
    modeset = ModeSet(enclosing_radius=R0_BS)
    samp = surfaces.sample_surface(surfaces.plane_surface(R0_BS))
    op = surfaces.build_z(modeset, samp)
    assert op.mode_count == 646
    assert op.rank == 323
    # the cliff is sharp: a many-orders gap between the last kept singular
    # value and the first discarded one
    s = op.singular_values
    assert s[323] / s[322] < 1e-6


def test_hemisphere_reaches_full_rank():
    modeset = ModeSet(enclosing_radius=R0_BS)
    samp = surfaces.sample_surface(surfaces.hemisphere_surface(R0_BS))
    op = surfaces.build_z(modeset, samp)
    assert op.rank == modeset.mode_count
    # full rank makes the projector the identity: hemisphere currents can
    # reproduce any pattern of the enclosing sphere
    assert np.abs(op.p_op - np.eye(op.mode_count)).max() < 1e-8


def test_projector_laws_small(small_plane_op):
    p = small_plane_op.p_op
    assert np.abs(p - p.conj().T).max() < 1e-12
    assert np.abs(p @ p - p).max() < 1e-12
    assert small_plane_op.pinv.shape == (small_plane_op.z.shape[1],
                                         small_plane_op.mode_count)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_projection_never_amplifies(seed):
    # property: an orthogonal projection cannot increase the norm
    modeset = ModeSet(truncation_order=3)
    samp = surfaces.sample_surface(
        surfaces.plane_surface(1.0 / np.sqrt(2.0)))
    op = surfaces.build_z(modeset, samp)
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(modeset.mode_count) \
        + 1j * rng.standard_normal(modeset.mode_count)
    q_semi, _ = surfaces.project(op, q, normalize=False)
    assert np.linalg.norm(q_semi) <= np.linalg.norm(q) * (1.0 + 1e-12)


def test_project_shapes_and_normalization(small_plane_op):
    rng = np.random.default_rng(9)
    j = small_plane_op.mode_count
    q = rng.standard_normal((j, 3)) + 1j * rng.standard_normal((j, 3))
    q_semi, a = surfaces.project(small_plane_op, q)
    assert q_semi.shape == (j, 3)
    assert a.shape == (small_plane_op.z.shape[1], 3)
    assert np.abs(np.linalg.norm(q_semi, axis=0) - 1.0).max() < 1e-12
    # q_semi is the pattern the currents a actually radiate, rescaled; the
    # two evaluation routes agree up to the conditioning of the kept triplets
    radiated = small_plane_op.z @ a
    ratio = np.linalg.norm(radiated, axis=0)
    s = small_plane_op.singular_values
    cond = s[0] / s[small_plane_op.rank - 1]
    assert np.abs(radiated / ratio - q_semi).max() < 1e-13 * cond + 1e-12

    single, a1 = surfaces.project(small_plane_op, q[:, 0])
    assert single.shape == (j,) and a1.ndim == 1
    assert np.abs(single - q_semi[:, 0]).max() < 1e-12


def test_project_zero_vector_stays_zero(small_plane_op):
    q = np.zeros(small_plane_op.mode_count, dtype=complex)
    q_semi, a = surfaces.project(small_plane_op, q)
    assert np.all(q_semi == 0) and np.all(a == 0)


def test_projection_is_pop_application(small_plane_op):
    # project() and the explicit projector agree before normalization
    rng = np.random.default_rng(4)
    j = small_plane_op.mode_count
    q = rng.standard_normal(j) + 1j * rng.standard_normal(j)
    q_semi, _ = surfaces.project(small_plane_op, q, normalize=False)
    ref = small_plane_op.p_op @ q
    assert np.abs(q_semi - ref).max() < 1e-10 * np.linalg.norm(q)


def test_custom_rtol_trims_rank(small_plane_op):
    # a coarse tolerance keeps only the strongest couplings; monotone in rtol
    op_loose = surfaces.ProjectionOperator(small_plane_op.z, rtol=0.5)
    assert 1 <= op_loose.rank < small_plane_op.rank
