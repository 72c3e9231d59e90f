"""Biot-Savart kernel, radial cutoff, and the kernel-estimate checks.

The cutoff ``a`` equals 1 on B_{1/2}, 0 outside B_1, and interpolates with
the bump-quotient smoothstep (see nbody.py for the closed form).  For a
scale lam > 0, a_lam(x) = a(x / lam).  The kernel splits into

* the near field a_lam K, summed directly over particle clouds, and
* the far-field tensor d_i d-perp_k [(1 - a_lam) K^j], which vanishes on
  B_{lam/2} and decays like |x|^{-3}.

The check functions at the bottom measure the L^1/L^p kernel estimates,
the mass of phi_lam = grad a_lam . K-perp, the curl identity
(a_lam K) * curl Z = Z - phi_lam * Z, and the flow-difference L^1 bound.
They are quadrature measurements, not proofs: each returns the measured
value (and the analytic comparison where one exists).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nbody
from .errors import BadArgument, EmptyField, SingularPoint
from .growth import mubar

TWO_PI = 2.0 * math.pi

# polar quadrature resolution for kernel-norm checks (radial x angular)
_NRAD = 512
_NANG = 256


def bump_profile(s):
    """Vectorized cutoff profile; twin of nbody.cutoff_profile."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    out[s <= 0.5] = 1.0
    band = (s > 0.5) & (s < 1.0)
    q = np.clip(2.0 * s[band] - 1.0, 1e-9, 1.0 - 1e-9)
    g = np.clip(1.0 / (1.0 - q) - 1.0 / q, -600.0, 600.0)
    out[band] = 1.0 / (1.0 + np.exp(g))
    return out


def bump_profile_d1(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    band = (s > 0.5) & (s < 1.0)
    q = np.clip(2.0 * s[band] - 1.0, 1e-9, 1.0 - 1e-9)
    g = np.clip(1.0 / (1.0 - q) - 1.0 / q, -600.0, 600.0)
    w = 1.0 / (1.0 + np.exp(g))
    gp = 1.0 / (1.0 - q) ** 2 + 1.0 / q**2
    out[band] = 2.0 * (-gp * w * (1.0 - w))
    return out


@dataclass(frozen=True)
class RadialCutoff:
    """Smooth radial profile: 1 on [0, 1/2], 0 on [1, inf)."""

    inner_radius: float = 0.5
    outer_radius: float = 1.0

    def profile(self, s):
        return bump_profile(s)

    def profile_d1(self, s):
        return bump_profile_d1(s)

    def mass(self) -> float:
        """int_0^1 a(s) ds, the lam-independent L^1 ratio of a_lam K."""
        s = np.linspace(0.0, 1.0, 4097)
        return float(np.trapezoid(self.profile(s), s))


@dataclass(frozen=True)
class CutoffKernel:
    """The Biot-Savart kernel paired with a cutoff at scale lam."""

    cutoff: RadialCutoff
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise BadArgument(f"cutoff scale must be positive, got {self.lam}")

    def a(self, x):
        """a_lam(x) = a(|x| / lam) for points x of shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        return self.cutoff.profile(np.linalg.norm(x, axis=-1) / self.lam)


def make_kernel(lam: float) -> CutoffKernel:
    return CutoffKernel(cutoff=RadialCutoff(), lam=lam)


def biot_savart_K(x):
    """K(x) = x_perp / (2 pi |x|^2) for points of shape (..., 2)."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularPoint("Biot-Savart kernel evaluated at the origin")
    out = np.empty_like(x)
    out[..., 0] = -x[..., 1] / (TWO_PI * r2)
    out[..., 1] = x[..., 0] / (TWO_PI * r2)
    return out


def near_field_convolve(kern: CutoffKernel, field, x) -> np.ndarray:
    """Direct quadrature of (a_lam K) * omega at x (single point or batch).

    Particles within the desingularization core (0.4 x local spacing) are
    dropped; the kernel is odd, so the continuum self-term vanishes.
    """
    if field.positions.shape[0] == 0:
        raise EmptyField("near_field_convolve needs at least one particle")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    out = nbody.velocity_cutoff(
        pts,
        field.positions,
        field.omega * field.areas,
        kern.lam,
        field.eps_core,
    )
    return out[0] if np.asarray(x).ndim == 1 else out


def far_field_tensor(kern: CutoffKernel, x) -> np.ndarray:
    """Components T[j, i, k] = d_i d-perp_k [(1 - a_lam) K^j](x), shape (2,2,2).

    Zero on B_{lam/2}; decays like |x|^{-3}.  Contraction with u (x) u sums
    over (i, k).
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((2, 2, 2))
    nbody.farfield_tensor(float(x[0]), float(x[1]), kern.lam, out)
    return out


# ---------------------------------------------------------------------------
# quadrature grids
# ---------------------------------------------------------------------------

def _polar_grid(r_lo: float, r_hi: float, n_rad: int = _NRAD, n_ang: int = _NANG):
    """Midpoint polar cells on the annulus [r_lo, r_hi], geometric radially.

    Returns (points (Q,2), weights (Q,)) with weights = r dr dtheta.
    """
    if r_lo <= 0:
        edges = np.concatenate([[0.0], np.geomspace(r_hi * 1e-8, r_hi, n_rad)])
    else:
        edges = np.geomspace(r_lo, r_hi, n_rad + 1)
    r_mid = 0.5 * (edges[1:] + edges[:-1])
    dr = np.diff(edges)
    th = (np.arange(n_ang) + 0.5) * (TWO_PI / n_ang)
    rr, tt = np.meshgrid(r_mid, th, indexing="ij")
    ww = np.broadcast_to((r_mid * dr)[:, None] * (TWO_PI / n_ang), rr.shape)
    pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)
    return pts, ww.reshape(-1), rr.reshape(-1)


def kernel_l1_bound_check(kern: CutoffKernel) -> float:
    """Measured ratio ||a_lam K||_{L^1} / lam.

    Equals int_0^1 a(s) ds exactly, independent of lam; the quadrature is
    the 512 x 256 polar grid so that the measurement is honest.
    """
    pts, w, r = _polar_grid(0.0, kern.lam)
    integrand = kern.cutoff.profile(r / kern.lam) / (TWO_PI * r)
    return float(np.sum(integrand * w)) / kern.lam


def lp_rearrangement_check(R: float, p: float) -> tuple[float, float]:
    """||K(x - .)||^p_{L^p(B_R)} for x at the disk center, with its bound.

    Returns (measured, bound) where bound is the sharp rearrangement value
    (2 pi)^{1-p} R^{2-p} / (2 - p), attained exactly by the centered disk.
    """
    if not 1.0 <= p < 2.0:
        raise BadArgument(f"p must lie in [1, 2), got {p}")
    if R <= 0:
        raise BadArgument(f"disk radius must be positive, got {R}")
    pts, w, r = _polar_grid(0.0, R)
    measured = float(np.sum((TWO_PI * r) ** (-p) * w))
    bound = (TWO_PI) ** (1.0 - p) * R ** (2.0 - p) / (2.0 - p)
    return measured, bound


def lp_norm_at(x, R: float, p: float, n_grid: int = 512) -> float:
    """||K(x - .)||^p_{L^p(B_R(0))} by Cartesian midpoint quadrature.

    Used for the rearrangement property: the centered position maximizes
    the norm among all x at fixed |B_R|.
    """
    if not 1.0 <= p < 2.0:
        raise BadArgument(f"p must lie in [1, 2), got {p}")
    x = np.asarray(x, dtype=float)
    s = np.linspace(-R, R, n_grid, endpoint=False) + R / n_grid
    zz0, zz1 = np.meshgrid(s, s, indexing="ij")
    inside = zz0**2 + zz1**2 <= R**2
    z = np.stack([zz0[inside], zz1[inside]], axis=-1)
    d = x[None, :] - z
    r = np.linalg.norm(d, axis=1)
    good = r > 1e-12
    cell = (2.0 * R / n_grid) ** 2
    return float(np.sum((TWO_PI * r[good]) ** (-p)) * cell)


def phi_lam(kern: CutoffKernel, x) -> np.ndarray:
    """phi_lam = grad a_lam . K_perp, a nonnegative bump of unit mass.

    Closed form: phi_lam(x) = -a'(|x|/lam) / (2 pi lam |x|).
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    out = np.zeros_like(r)
    good = r > 0
    out[good] = -bump_profile_d1(r[good] / kern.lam) / (TWO_PI * kern.lam * r[good])
    return out


def phi_l1_norm(kern: CutoffKernel) -> float:
    """Quadrature of ||phi_lam||_{L^1}; equals 1 for any lam."""
    lam = kern.lam
    pts, w, r = _polar_grid(0.45 * lam, lam)
    return float(np.sum(np.abs(phi_lam(kern, pts)) * w))


def nearfield_curl_convolve(kern: CutoffKernel, omega_fn, x, n_rad=_NRAD, n_ang=_NANG) -> np.ndarray:
    """(a_lam K) * omega at x by polar quadrature centered on x."""
    x = np.asarray(x, dtype=float)
    pts, w, r = _polar_grid(0.0, kern.lam, n_rad, n_ang)
    kvals = biot_savart_K(pts) * kern.cutoff.profile(r / kern.lam)[:, None]
    om = omega_fn(x[None, :] - pts)
    return np.sum(kvals * (om * w)[:, None], axis=0)


def phi_convolve(kern: CutoffKernel, u_fn, x, n_rad=_NRAD, n_ang=_NANG) -> np.ndarray:
    """(phi_lam * u)(x) by polar quadrature over the support annulus."""
    x = np.asarray(x, dtype=float)
    pts, w, r = _polar_grid(0.45 * kern.lam, kern.lam, n_rad, n_ang)
    phi = phi_lam(kern, pts)
    uv = u_fn(x[None, :] - pts)
    return np.sum(uv * (phi * w)[:, None], axis=0)


def curl_identity_residual(kern: CutoffKernel, u_fn, omega_fn, x) -> float:
    """| (a_lam K) * curl Z - (Z - phi_lam * Z) | at x, quadrature error only.

    Z must be divergence-free with bounded curl; u_fn/omega_fn evaluate Z
    and curl Z on batches of points.
    """
    lhs = nearfield_curl_convolve(kern, omega_fn, x)
    rhs = np.asarray(u_fn(np.asarray(x, dtype=float)[None, :]))[0] - phi_convolve(kern, u_fn, x)
    return float(np.linalg.norm(lhs - rhs))


# ---------------------------------------------------------------------------
# flow-difference kernel estimates
# ---------------------------------------------------------------------------

def flow_difference_l1(x, delta: float, R: float, n_grid: int = 256) -> tuple[float, float]:
    """||K(x - X1(z)) - K(x - X2(z))||_{L^1_z(B_R)} for a synthetic shear pair.

    X1 = id and X2 = X1 + delta * (z_2 / R, 0), a measure-preserving map
    with sup displacement delta on the disk.  Returns (measured, reference)
    with reference = R_eff * mubar(delta / R_eff), R_eff = |B_R|^{1/2} /
    sqrt(2 pi); the estimate asserts measured <= C * reference.
    """
    if delta < 0 or R <= 0:
        raise BadArgument("flow_difference_l1 needs delta >= 0 and R > 0")
    x = np.asarray(x, dtype=float)
    s = np.linspace(-R, R, n_grid, endpoint=False) + R / n_grid
    zz0, zz1 = np.meshgrid(s, s, indexing="ij")
    inside = zz0**2 + zz1**2 <= R**2
    z = np.stack([zz0[inside], zz1[inside]], axis=-1)
    cell = (2.0 * R / n_grid) ** 2
    x1 = z
    x2 = z + np.stack([delta * z[:, 1] / R, np.zeros(len(z))], axis=-1)
    d1 = x[None, :] - x1
    d2 = x[None, :] - x2
    # guard the kernel singularities: drop cells whose center coincides
    r1 = np.linalg.norm(d1, axis=1)
    r2 = np.linalg.norm(d2, axis=1)
    good = (r1 > 1e-12) & (r2 > 1e-12)
    diff = np.linalg.norm(biot_savart_K(d1[good]) - biot_savart_K(d2[good]), axis=1)
    measured = float(np.sum(diff) * cell)
    r_eff = math.sqrt(math.pi * R**2 / TWO_PI)
    reference = r_eff * float(mubar(delta / r_eff))
    return measured, reference


def cutoff_flow_difference(field, kern: CutoffKernel, x, delta: float) -> tuple[float, float]:
    """|int (a_lam K(x - X1(y)) - a_lam K(x - X2(y))) omega(y) dy| for shear maps.

    X1 = id, X2 = id + delta * (y_2 / r_sup, 0) applied to the particle
    cloud.  Returns (measured, reference) with reference =
    ||omega||_inf * lam * mubar(delta / lam).
    """
    pos1 = field.positions
    shift = np.stack(
        [delta * field.positions[:, 1] / field.support_radius, np.zeros(len(field.positions))],
        axis=-1,
    )
    pos2 = field.positions + shift
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    w = field.omega * field.areas
    v1 = nbody.velocity_cutoff(pts, pos1, w, kern.lam, field.eps_core)
    v2 = nbody.velocity_cutoff(pts, pos2, w, kern.lam, field.eps_core)
    measured = float(np.max(np.linalg.norm(v1 - v2, axis=1)))
    reference = float(np.max(np.abs(field.omega))) * kern.lam * float(mubar(delta / kern.lam))
    return measured, reference
