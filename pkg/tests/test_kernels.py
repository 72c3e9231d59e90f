"""Kernel values, cutoff profile, and the measured kernel estimates."""

import math

import numpy as np
import pytest

from euler2d import fields as FM
from euler2d import kernels as KM
from euler2d import nbody
from euler2d.errors import BadArgument, EmptyField, SingularPoint
from euler2d.growth import const_bound, mubar

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Biot-Savart kernel
# ---------------------------------------------------------------------------

def test_K_axis_values():
    assert np.allclose(KM.biot_savart_K(np.array([1.0, 0.0])), [0.0, 1.0 / TWO_PI])
    assert np.allclose(KM.biot_savart_K(np.array([0.0, 2.0])), [-1.0 / (4.0 * math.pi), 0.0])


def test_K_rotation_equivariance():
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])  # 90 degrees
    x = np.array([1.0, 1.0])
    assert np.allclose(KM.biot_savart_K(rot @ x), rot @ KM.biot_savart_K(x))


def test_K_magnitude_and_singularity():
    x = np.array([0.3, -0.4])
    assert np.linalg.norm(KM.biot_savart_K(x)) == pytest.approx(1.0 / (TWO_PI * 0.5))
    with pytest.raises(SingularPoint):
        KM.biot_savart_K(np.zeros(2))


# ---------------------------------------------------------------------------
# cutoff profile
# ---------------------------------------------------------------------------

def test_profile_plateaus_and_monotone():
    s = np.linspace(0, 1.5, 301)
    a = KM.bump_profile(s)
    assert np.all(a[s <= 0.5] == 1.0)
    assert np.all(a[s >= 1.0] == 0.0)
    band = a[(s > 0.5) & (s < 1.0)]
    assert np.all(np.diff(band) <= 1e-12)
    assert np.all((a >= 0.0) & (a <= 1.0))


def test_profile_matches_compiled_twin():
    s = np.linspace(0.0, 1.2, 400)
    py = KM.bump_profile(s)
    nb = np.array([nbody.cutoff_profile(float(v)) for v in s])
    assert np.allclose(py, nb, atol=1e-15)
    py1 = KM.bump_profile_d1(s)
    nb1 = np.array([nbody.cutoff_profile_d1(float(v)) for v in s])
    assert np.allclose(py1, nb1, atol=1e-15)


def test_profile_derivatives_by_finite_differences():
    s = np.linspace(0.55, 0.95, 41)
    step = 1e-6
    fd1 = (KM.bump_profile(s + step) - KM.bump_profile(s - step)) / (2 * step)
    assert np.allclose(KM.bump_profile_d1(s), fd1, atol=1e-5)
    d2 = np.array([nbody.cutoff_profile_d2(float(v)) for v in s])
    fd2 = (KM.bump_profile_d1(s + step) - KM.bump_profile_d1(s - step)) / (2 * step)
    assert np.allclose(d2, fd2, atol=1e-4)


# ---------------------------------------------------------------------------
# far-field tensor
# ---------------------------------------------------------------------------

def _fd_tensor(x, lam, step):
    """Central finite differences of (1 - a_lam) K, perp on the second slot."""
    def f(pt):
        r = np.linalg.norm(pt)
        return (1 - float(KM.bump_profile(r / lam))) * KM.biot_savart_K(pt)

    D = np.zeros((2, 2, 2))
    e = np.eye(2) * step
    for i in range(2):
        for m in range(2):
            if i == m:
                val = (f(x + 2 * e[i]) - 2 * f(x) + f(x - 2 * e[i])) / (4 * step**2)
            else:
                val = (
                    f(x + e[i] + e[m]) - f(x + e[i] - e[m]) - f(x - e[i] + e[m]) + f(x - e[i] - e[m])
                ) / (4 * step**2)
            D[:, i, m] = val
    T = np.zeros((2, 2, 2))
    T[:, :, 0] = -D[:, :, 1]
    T[:, :, 1] = D[:, :, 0]
    return T


def test_far_tensor_zero_inside_half_ball():
    kern = KM.make_kernel(1.0)
    x = np.array([0.25 / math.sqrt(2.0), 0.25 / math.sqrt(2.0)])  # |x| = lam/4
    assert np.all(KM.far_field_tensor(kern, x) == 0.0)


@pytest.mark.parametrize("xv,lam", [((10.0, 3.0), 1.0), ((0.9, -0.3), 1.2), ((-0.7, 0.65), 1.3)])
def test_far_tensor_matches_finite_differences(xv, lam):
    x = np.asarray(xv)
    kern = KM.make_kernel(lam)
    T = KM.far_field_tensor(kern, x)
    Tfd = _fd_tensor(x, lam, 1e-4 * np.linalg.norm(x))
    assert np.max(np.abs(T - Tfd)) <= 1e-5 * max(np.max(np.abs(Tfd)), 1.0)


def test_far_tensor_pure_kernel_outside_support():
    # at |x| = 10 lam the cutoff is inactive and the tensor is the exact
    # second perp-derivative of K
    lam = 0.4
    x = np.array([3.1, 2.6])
    T = KM.far_field_tensor(KM.make_kernel(lam), x)
    Tfd = _fd_tensor(x, lam, 1e-4 * np.linalg.norm(x))
    assert np.max(np.abs(T - Tfd)) <= 1e-5 * np.max(np.abs(Tfd))


def test_far_tensor_scaling():
    x = np.array([0.8, 0.5])
    lam = 1.7
    T = KM.far_field_tensor(KM.make_kernel(lam), x)
    T1 = KM.far_field_tensor(KM.make_kernel(1.0), x / lam)
    assert np.allclose(T, T1 / lam**3, rtol=1e-12, atol=1e-15)


def test_far_tensor_decay_bound():
    # |T| <= C / r^3 with a profile-dependent constant: the transition band
    # (cutoff derivative terms) carries the largest measured value, ~2.0
    kern = KM.make_kernel(1.0)
    for r in (0.55, 0.6, 0.8, 1.0, 3.0, 10.0):
        x = np.array([r, 0.0])
        T = KM.far_field_tensor(kern, x)
        assert np.max(np.abs(T)) <= 2.5 / r**3
    # outside the cutoff support the constant is the pure-kernel 1/pi
    assert np.max(np.abs(KM.far_field_tensor(kern, np.array([3.0, 0.0])))) * 27.0 == pytest.approx(
        1.0 / math.pi, rel=1e-12
    )


# ---------------------------------------------------------------------------
# L^1 / L^p norms
# ---------------------------------------------------------------------------

def test_l1_ratio_lambda_invariant():
    ratios = [KM.kernel_l1_bound_check(KM.make_kernel(lam)) for lam in (0.1, 1.0, 17.0)]
    assert max(ratios) - min(ratios) <= 1e-6
    assert 0.5 < ratios[0] <= 1.0
    # the exact ratio is the profile mass int_0^1 a = 3/4 (profile symmetry);
    # the fixed 512x256 polar measurement grid resolves it to ~1e-4
    assert ratios[0] == pytest.approx(KM.RadialCutoff().mass(), abs=2e-4)
    assert KM.RadialCutoff().mass() == pytest.approx(0.75, abs=1e-10)


def test_lp_rearrangement_p1():
    measured, bound = KM.lp_rearrangement_check(1.0, 1.0)
    assert measured == pytest.approx(1.0, rel=1e-6)   # int_{B_1} |K| = R = 1
    assert measured <= bound * (1 + 1e-6)
    measured2, _ = KM.lp_rearrangement_check(2.0, 1.0)
    assert measured2 == pytest.approx(2.0, rel=1e-6)


def test_lp_rearrangement_interior_p():
    for p in (1.3, 1.7, 1.9):
        measured, bound = KM.lp_rearrangement_check(1.0, p)
        assert measured <= bound * (1 + 1e-3)
    # away from p -> 2 the quadrature resolves the sharp attainment; near 2
    # the mass below the innermost radial edge is lost, so only for p <= 1.7
    for p in (1.3, 1.7):
        measured, bound = KM.lp_rearrangement_check(1.0, p)
        assert measured >= 0.99 * bound


def test_lp_center_dominates_boundary():
    center = KM.lp_norm_at(np.zeros(2), 1.0, 1.0)
    edge = KM.lp_norm_at(np.array([1.0, 0.0]), 1.0, 1.0)
    assert center >= edge


def test_lp_domain():
    with pytest.raises(BadArgument):
        KM.lp_rearrangement_check(1.0, 2.0)
    with pytest.raises(BadArgument):
        KM.lp_rearrangement_check(-1.0, 1.0)


# ---------------------------------------------------------------------------
# phi_lam and the curl identity
# ---------------------------------------------------------------------------

def test_phi_unit_mass():
    for lam in (0.5, 1.0, 7.0):
        assert abs(KM.phi_l1_norm(KM.make_kernel(lam)) - 1.0) <= 1e-6


_Z_FIELDS = [
    FM.AnalyticSField(
        h=const_bound(),
        V=lambda r: r * np.exp(-(r**2)),
        dV=lambda r: np.exp(-(r**2)) * (1 - 2 * r**2),
        label="gaussian-swirl",
    ),
    FM.AnalyticSField(
        h=const_bound(),
        V=lambda r: r / (1 + r**2),
        dV=lambda r: (1 - r**2) / (1 + r**2) ** 2,
        label="rational-swirl",
    ),
]


@pytest.mark.parametrize("z", _Z_FIELDS, ids=lambda z: z.label)
def test_curl_identity(z):
    # (a_lam K) * curl Z = Z - phi_lam * Z, to quadrature tolerance
    for x in [(0.3, 0.1), (1.0, -0.5), (-2.0, 0.4), (0.0, 0.0)]:
        for lam in (0.5, 1.5):
            res = KM.curl_identity_residual(KM.make_kernel(lam), z.u, z.omega, np.array(x))
            assert res <= 1e-4


@pytest.mark.parametrize("z", _Z_FIELDS, ids=lambda z: z.label)
def test_nearfield_curl_sup_bound(z):
    # ||(a_lam K) * curl Z||_inf <= 2 ||Z||_inf on sampled points
    grid = FM.sample_grid(5.0, 24, 16)
    z_sup = float(np.max(np.linalg.norm(z.u(grid), axis=1)))
    for lam in (0.5, 2.0):
        kern = KM.make_kernel(lam)
        vals = [np.linalg.norm(KM.nearfield_curl_convolve(kern, z.omega, x)) for x in grid[::9]]
        assert max(vals) <= 2.0 * z_sup * (1 + 1e-3)


# ---------------------------------------------------------------------------
# near-field convolution over particles
# ---------------------------------------------------------------------------

def test_near_field_zero_vorticity():
    field = FM.make_rankine(1.0, 0.0, 16)
    out = KM.near_field_convolve(KM.make_kernel(1.0), field, np.array([0.5, 0.5]))
    assert np.allclose(out, 0.0)


def test_near_field_rankine_wide_cutoff():
    # lam = 10 leaves the disk uncut: the azimuthal speed at r = 2 is
    # omega R^2 / (2 r) = 1/4, directed along +y at (2, 0)
    field = FM.make_rankine(1.0, 1.0, 64)
    out = KM.near_field_convolve(KM.make_kernel(10.0), field, np.array([2.0, 0.0]))
    assert np.allclose(out, [0.0, 0.25], atol=2e-3)


def test_near_field_narrow_cutoff_misses_support():
    field = FM.make_rankine(1.0, 1.0, 32)
    out = KM.near_field_convolve(KM.make_kernel(0.1), field, np.array([2.0, 0.0]))
    assert np.allclose(out, 0.0)


def test_near_field_linear_in_omega():
    field = FM.make_rankine(1.0, 1.0, 24)
    kern = KM.make_kernel(1.5)
    x = np.array([0.7, -0.2])
    one = KM.near_field_convolve(kern, field, x)
    two = KM.near_field_convolve(kern, field.scaled(2.0), x)
    assert np.allclose(two, 2.0 * one, rtol=1e-14)


def test_near_field_magnitude_bound():
    # |a_lam K * omega| <= mass(a) * lam * ||omega||_inf
    field = FM.make_rankine(1.0, 1.0, 48)
    for lam in (0.3, 1.0, 3.0):
        out = KM.near_field_convolve(KM.make_kernel(lam), field, np.array([0.4, 0.1]))
        assert np.linalg.norm(out) <= lam * field.max_abs_omega


def test_near_field_empty_field():
    empty = FM.VortexParticleField(
        positions=np.zeros((0, 2)), omega=np.zeros(0), areas=np.zeros(0),
        support_radius=1.0, spacing=0.1,
    )
    with pytest.raises(EmptyField):
        KM.near_field_convolve(KM.make_kernel(1.0), empty, np.zeros(2))


# ---------------------------------------------------------------------------
# flow-difference estimates
# ---------------------------------------------------------------------------

def test_flow_difference_l1_bound():
    # one constant works across the delta sweep and both radii
    for R in (1.0, 3.0):
        x = np.array([0.3 * R, 0.1])
        ratios = []
        for delta in (1e-4, 1e-3, 1e-2, 0.1, 0.3):
            measured, reference = KM.flow_difference_l1(x, delta * R, R)
            ratios.append(measured / reference)
        assert max(ratios) <= 2.0
        assert all(np.isfinite(ratios))


def test_cutoff_flow_difference_bound():
    # |int (a_lam K(.-X1) - a_lam K(.-X2)) omega| <= C lam mubar(delta/lam)
    field = FM.make_rankine(1.0, 1.0, 48)
    x = np.array([0.5, 0.2])
    ratios = []
    for lam in (0.5, 1.0, 2.0):
        kern = KM.make_kernel(lam)
        for delta in (1e-3, 1e-2, 0.1):
            measured, reference = KM.cutoff_flow_difference(field, kern, x, delta)
            ratios.append(measured / reference)
    assert max(ratios) <= 3.0
