"""Direct pairwise Biot-Savart summation kernels (numba-compiled).

All hot loops used by the particle solver live here: plain and cutoff
kernel sums, and the far-field tensor contraction used by the identity
residual.  Loops are written one-target-per-iteration with a serial inner
sum so results are bit-reproducible regardless of threading configuration.

The scalar cutoff profile is the bump-quotient smoothstep

    a(s) = 1                        s <= 1/2
    a(s) = 1 / (1 + exp(g(2s-1)))   1/2 < s < 1,  g(q) = 1/(1-q) - 1/q
    a(s) = 0                        s >= 1

which is C-infinity, exactly 0/1 outside the transition band, and has
closed-form first and second derivatives.
"""

import math

import numpy as np
import numba
from numba import njit

# serial per-target loops; avoid the TBB layer probe (and its version warning)
numba.config.THREADING_LAYER = "workqueue"

TWO_PI = 2.0 * math.pi
_QEPS = 1e-9
_GCLIP = 600.0


@njit(cache=True)
def cutoff_profile(s: float) -> float:
    if s <= 0.5:
        return 1.0
    if s >= 1.0:
        return 0.0
    q = 2.0 * s - 1.0
    if q < _QEPS:
        return 1.0
    if q > 1.0 - _QEPS:
        return 0.0
    g = 1.0 / (1.0 - q) - 1.0 / q
    if g > _GCLIP:
        return 0.0
    if g < -_GCLIP:
        return 1.0
    return 1.0 / (1.0 + math.exp(g))


@njit(cache=True)
def cutoff_profile_d1(s: float) -> float:
    """d/ds of the profile; supported in (1/2, 1), nonpositive."""
    if s <= 0.5 or s >= 1.0:
        return 0.0
    q = 2.0 * s - 1.0
    if q < _QEPS or q > 1.0 - _QEPS:
        return 0.0
    g = 1.0 / (1.0 - q) - 1.0 / q
    if g > _GCLIP or g < -_GCLIP:
        return 0.0
    w = 1.0 / (1.0 + math.exp(g))
    gp = 1.0 / (1.0 - q) ** 2 + 1.0 / q**2
    return 2.0 * (-gp * w * (1.0 - w))


@njit(cache=True)
def cutoff_profile_d2(s: float) -> float:
    """d^2/ds^2 of the profile; supported in (1/2, 1)."""
    if s <= 0.5 or s >= 1.0:
        return 0.0
    q = 2.0 * s - 1.0
    if q < _QEPS or q > 1.0 - _QEPS:
        return 0.0
    g = 1.0 / (1.0 - q) - 1.0 / q
    if g > _GCLIP or g < -_GCLIP:
        return 0.0
    w = 1.0 / (1.0 + math.exp(g))
    gp = 1.0 / (1.0 - q) ** 2 + 1.0 / q**2
    gpp = 2.0 / (1.0 - q) ** 3 - 2.0 / q**3
    wpp = w * (1.0 - w) * (-gpp + gp * gp * (1.0 - 2.0 * w))
    return 4.0 * wpp


@njit(cache=True)
def velocity_direct(targets, pos, strength, eps_core):
    """u(x_m) = sum_i K(x_m - p_i) w_i, pairs closer than eps_core dropped.

    ``strength`` carries omega_i * area_i.  K(x) = x_perp / (2 pi |x|^2).
    """
    m = targets.shape[0]
    n = pos.shape[0]
    out = np.zeros((m, 2))
    eps2 = eps_core * eps_core
    for a in range(m):
        x0 = targets[a, 0]
        x1 = targets[a, 1]
        u0 = 0.0
        u1 = 0.0
        for i in range(n):
            dx = x0 - pos[i, 0]
            dy = x1 - pos[i, 1]
            r2 = dx * dx + dy * dy
            if r2 <= eps2:
                continue
            c = strength[i] / (TWO_PI * r2)
            u0 -= dy * c
            u1 += dx * c
        out[a, 0] = u0
        out[a, 1] = u1
    return out


@njit(cache=True)
def velocity_cutoff(targets, pos, strength, lam, eps_core):
    """Near-field sum a_lam(x-p) K(x-p) w, same core drop as velocity_direct."""
    m = targets.shape[0]
    n = pos.shape[0]
    out = np.zeros((m, 2))
    eps2 = eps_core * eps_core
    lam2 = lam * lam
    for a in range(m):
        x0 = targets[a, 0]
        x1 = targets[a, 1]
        u0 = 0.0
        u1 = 0.0
        for i in range(n):
            dx = x0 - pos[i, 0]
            dy = x1 - pos[i, 1]
            r2 = dx * dx + dy * dy
            if r2 <= eps2 or r2 >= lam2:
                continue
            w = cutoff_profile(math.sqrt(r2) / lam)
            if w == 0.0:
                continue
            c = w * strength[i] / (TWO_PI * r2)
            u0 -= dy * c
            u1 += dx * c
        out[a, 0] = u0
        out[a, 1] = u1
    return out


@njit(cache=True)
def farfield_tensor(x0, x1, lam, out):
    """T[j,i,k] = d_i d-perp_k [(1 - a_lam) K^j] at x, written into out.

    d-perp = (-d_2, d_1).  Identically zero for |x| <= lam/2.  Uses the
    product-rule expansion with closed-form kernel derivatives and the
    analytic cutoff derivatives.
    """
    rho2 = x0 * x0 + x1 * x1
    if rho2 <= 0.25 * lam * lam or rho2 == 0.0:
        for j in range(2):
            for i in range(2):
                for k in range(2):
                    out[j, i, k] = 0.0
        return
    rho = math.sqrt(rho2)
    rho4 = rho2 * rho2
    rho6 = rho4 * rho2
    c = 1.0 / TWO_PI
    x = (x0, x1)

    s = rho / lam
    a = cutoff_profile(s)
    ap = cutoff_profile_d1(s)
    app = cutoff_profile_d2(s)

    for j in range(2):
        # K^j = c * P[j,l] x_l / rho^2 with P = [[0,-1],[1,0]]
        if j == 0:
            kj = -c * x1 / rho2
            dk = (2.0 * c * x0 * x1 / rho4, -c / rho2 + 2.0 * c * x1 * x1 / rho4)
        else:
            kj = c * x0 / rho2
            dk = (c / rho2 - 2.0 * c * x0 * x0 / rho4, -2.0 * c * x0 * x1 / rho4)
        for i in range(2):
            for m in range(2):
                # second kernel derivative d_i d_m K^j
                if j == 0:
                    l, sgn = 1, -1.0
                else:
                    l, sgn = 0, 1.0
                dlm = 1.0 if l == m else 0.0
                dli = 1.0 if l == i else 0.0
                dim = 1.0 if i == m else 0.0
                ddk = sgn * c * (
                    -2.0 * (dlm * x[i] + dli * x[m] + dim * x[l]) / rho4
                    + 8.0 * x[l] * x[m] * x[i] / rho6
                )
                # cutoff derivatives
                da_i = ap * x[i] / (lam * rho)
                da_m = ap * x[m] / (lam * rho)
                dda = app * x[i] * x[m] / (lam * lam * rho2) + ap * (
                    dim / (lam * rho) - x[i] * x[m] / (lam * rho2 * rho)
                )
                val = (1.0 - a) * ddk - da_i * dk[m] - da_m * dk[i] - dda * kj
                # stash d_i d_m [(1-a)K^j]; perp applied below
                out[j, i, m] = val
        # apply d-perp on the second index: T[j,i,1(k=0)] = -d_2, T[j,i,2(k=1)] = d_1
        for i in range(2):
            t0 = -out[j, i, 1]
            t1 = out[j, i, 0]
            out[j, i, 0] = t0
            out[j, i, 1] = t1


@njit(cache=True)
def farfield_convolve(points, nodes, g11, g12, g22, weights, lam):
    """Far-field term sum_q w_q T[j,i,k](x - y_q) G_ik(y_q) at each point.

    G is the (symmetric) time-integrated momentum-flux tensor u (x) u.
    """
    p = points.shape[0]
    q = nodes.shape[0]
    out = np.zeros((p, 2))
    tens = np.zeros((2, 2, 2))
    for a in range(p):
        acc0 = 0.0
        acc1 = 0.0
        for b in range(q):
            dx = points[a, 0] - nodes[b, 0]
            dy = points[a, 1] - nodes[b, 1]
            rho2 = dx * dx + dy * dy
            if rho2 <= 0.25 * lam * lam:
                continue
            farfield_tensor(dx, dy, lam, tens)
            w = weights[b]
            acc0 += w * (
                tens[0, 0, 0] * g11[b]
                + (tens[0, 0, 1] + tens[0, 1, 0]) * g12[b]
                + tens[0, 1, 1] * g22[b]
            )
            acc1 += w * (
                tens[1, 0, 0] * g11[b]
                + (tens[1, 0, 1] + tens[1, 1, 0]) * g12[b]
                + tens[1, 1, 1] * g22[b]
            )
        out[a, 0] = acc0
        out[a, 1] = acc1
    return out
