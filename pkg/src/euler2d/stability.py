"""Solution-pair diagnostics: weighted flow/velocity gaps and their envelopes.

Two initial fields are advected on the same time grid from the same
tracked-point set, and the weighted gap quantities are reduced over the
tracked points plus a far ring (all weighted quantities decay like
1/(zeta |x|) outside compact vorticity, so the sup over the plane is
approximated by the sup over this set):

    eta(t) = sup_x |X1(t,x) - X2(t,x)| / zeta(x)
    L(t)   = sup_x |u1(t,X1(t,x)) - u2(t,X2(t,x))| / zeta(x)
    M(t)   = int_0^t L                 (composite trapezoid)
    Q(t)   = sup_z |u1(t,z) - u2(t,z)| / zeta(z)      (fixed points)

together with the kernel-commutator term J (cutoff scale h(x)) and the
initial-data gap

    a(T) = ||(u1_0 - u2_0)/zeta||_inf + sup_{t,x} |J(t,x)|/zeta(x).

The envelope fits are Chebyshev-style: the smallest constant making the
claimed envelope hold across the whole series.  The theorems assert the
existence of constants, not their values, so fits confirm shape only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import nbody
from .errors import BadArgument, HypothesisViolation
from .fields import VortexParticleField
from .flow import FlowTrajectorySet, advect
from .growth import (
    GrowthBound,
    Tier,
    mubar,
    phi_alpha,
    product_bound,
    ratio_bound,
    validate_tier,
)

__all__ = [
    "StabilityReport",
    "PairRun",
    "run_pair",
    "fit_m_envelope",
    "fit_m_linear",
    "fit_q_envelope",
    "q_envelope_check",
    "aT_simple_bound",
    "phi_alpha_bound_check",
    "chain_phi_windows",
]

_RING_FACTOR = 3.0
_RING_COUNT = 32


@dataclass
class StabilityReport:
    """Time series of the weighted gap quantities for one solution pair."""

    times: np.ndarray
    eta: np.ndarray
    L: np.ndarray
    M: np.ndarray
    Q: np.ndarray
    J_sup: np.ndarray          # per-time sup of |J|/zeta over the J eval set
    a0: float                  # ||(u1_0 - u2_0)/zeta||_inf
    aT: float                  # a0 + sup_t J_sup
    C0: float                  # max measured sup S_h norm of the two runs
    zeta_label: str
    h_label: str
    meta: dict = dc_field(default_factory=dict)
    envelopes: dict = dc_field(default_factory=dict)

    def aT_up_to(self, t_star: float) -> float:
        """a(T*) with the J sup restricted to [0, T*]."""
        mask = self.times <= t_star + 1e-12
        if not np.any(mask):
            raise BadArgument(f"T*={t_star} below the first stored time")
        return self.a0 + float(np.max(self.J_sup[mask]))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "eta", "L", "M", "Q", "J_sup"])
            for k in range(len(self.times)):
                writer.writerow(
                    [
                        f"{self.times[k]:.17g}",
                        f"{self.eta[k]:.17g}",
                        f"{self.L[k]:.17g}",
                        f"{self.M[k]:.17g}",
                        f"{self.Q[k]:.17g}",
                        f"{self.J_sup[k]:.17g}",
                    ]
                )

    def to_json_dict(self) -> dict:
        return {
            "a0": self.a0,
            "aT": self.aT,
            "C0": self.C0,
            "zeta": self.zeta_label,
            "h": self.h_label,
            "meta": self.meta,
            "envelopes": self.envelopes,
            "series": {
                "t": self.times.tolist(),
                "eta": self.eta.tolist(),
                "L": self.L.tolist(),
                "M": self.M.tolist(),
                "Q": self.Q.tolist(),
                "J_sup": self.J_sup.tolist(),
            },
        }


@dataclass
class PairRun:
    """A solution pair with the index bookkeeping for the shared tracked set."""

    report: StabilityReport
    run1: FlowTrajectorySet
    run2: FlowTrajectorySet
    common_idx1: np.ndarray
    common_idx2: np.ndarray
    eval_points: np.ndarray
    cloud_init: np.ndarray      # initial difference-cloud positions
    cloud_strength: np.ndarray  # signed omega * area of the difference cloud
    eps_core: float


def _check_hypotheses(zeta: GrowthBound, h: GrowthBound) -> None:
    r = np.geomspace(1e-3, 1e3, 64)
    zv = np.asarray(zeta.fn(r), dtype=float)
    hv = np.asarray(h.fn(r), dtype=float)
    if np.any(zv < hv * (1.0 - 1e-12)):
        i = int(np.argmax(zv < hv))
        raise HypothesisViolation(
            f"zeta >= h fails at r={r[i]:g}: zeta={zv[i]:g} < h={hv[i]:g}"
        )
    for derived, name in ((ratio_bound(zeta, h), "zeta/h"), (product_bound(zeta, h), "zeta*h")):
        tier = validate_tier(derived, samples=48, rmax=50.0).tier
        if tier < Tier.GROWTH:
            raise HypothesisViolation(f"{name} must be a growth bound, classified {tier.name}")


def _ring_points(radius: float, count: int = _RING_COUNT) -> np.ndarray:
    th = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
    return np.stack([radius * np.cos(th), radius * np.sin(th)], axis=-1)


def _j_term(
    x_pts: np.ndarray,
    x_mapped: np.ndarray,
    cloud_now: np.ndarray,
    cloud_init: np.ndarray,
    strength: np.ndarray,
    lam_per_point: np.ndarray,
    eps_core: float,
) -> np.ndarray:
    """J(t, x) = (a_lam K) * (dw0 o X1^{-1})(x) - (a_lam K) * dw0 (X1(t, x)).

    The first term uses the measure-preserving change of variables to sum
    over the advected difference cloud; the second sums over the initial
    cloud at the advected evaluation point.  lam = h(|x|) varies per point.
    """
    out = np.empty_like(x_pts)
    for i in range(x_pts.shape[0]):
        lam = float(lam_per_point[i])
        j2 = nbody.velocity_cutoff(x_pts[i : i + 1], cloud_now, strength, lam, eps_core)
        j1 = nbody.velocity_cutoff(x_mapped[i : i + 1], cloud_init, strength, lam, eps_core)
        out[i] = j2[0] - j1[0]
    return out


def run_pair(
    field1: VortexParticleField,
    field2: VortexParticleField,
    zeta: GrowthBound,
    h: GrowthBound,
    T: float,
    dt: float,
    j_subsample: int = 48,
    meta: dict | None = None,
) -> PairRun:
    """Advect both solutions and assemble the weighted gap diagnostics.

    Raises HypothesisViolation unless zeta >= h on samples and zeta/h,
    zeta*h classify at growth tier or better.
    """
    _check_hypotheses(zeta, h)
    n1, n2 = field1.n, field2.n
    r_ring = _RING_FACTOR * max(field1.support_radius, field2.support_radius, 1e-9)
    ring = _ring_points(r_ring)
    nr = ring.shape[0]

    # common tracked set: field1 lattice + far ring (fixed spatial points)
    common = np.concatenate([field1.positions, ring])
    # fixed evaluation set for Q and the initial gap
    eval_fixed = common

    run1 = advect(
        field1, T, dt,
        extra_tracked=np.concatenate([ring, field2.positions]),
        probes=eval_fixed, h=h,
    )
    run2 = advect(
        field2, T, dt,
        extra_tracked=common,
        probes=eval_fixed, h=h,
    )

    idx1 = np.concatenate([np.arange(n1), n1 + np.arange(nr)])            # field1 pts + ring in run1
    idx2 = np.concatenate([n2 + np.arange(n1), n2 + n1 + np.arange(nr)])  # same points in run2
    cloud2_in_run1 = n1 + nr + np.arange(n2)                              # field2 lattice under u1

    times = run1.times
    zeta_common = np.asarray(zeta.fn(np.linalg.norm(common, axis=1)), dtype=float)

    tracks1 = run1.tracks[idx1]
    tracks2 = run2.tracks[idx2]
    vel1 = run1.velocities[idx1]
    vel2 = run2.velocities[idx2]

    eta = np.max(np.linalg.norm(tracks1 - tracks2, axis=2) / zeta_common[:, None], axis=0)
    L = np.max(np.linalg.norm(vel1 - vel2, axis=2) / zeta_common[:, None], axis=0)
    dt_arr = np.diff(times)
    M = np.concatenate([[0.0], np.cumsum(0.5 * (L[1:] + L[:-1]) * dt_arr)])
    Q = np.max(
        np.linalg.norm(run1.probe_velocities - run2.probe_velocities, axis=2)
        / zeta_common[:, None],
        axis=0,
    )
    a0 = float(
        np.max(
            np.linalg.norm(run1.probe_velocities[:, 0, :] - run2.probe_velocities[:, 0, :], axis=1)
            / zeta_common
        )
    )

    # J on a subsample of the common set (patch points and the whole ring)
    stride = max(1, n1 // max(1, j_subsample - nr))
    j_sel = np.concatenate([np.arange(0, n1, stride), n1 + np.arange(nr)])
    j_pts = common[j_sel]
    lam_pts = np.asarray(h.fn(np.linalg.norm(j_pts, axis=1)), dtype=float)
    zeta_j = zeta_common[j_sel]
    cloud_init = np.concatenate([field1.positions, field2.positions])
    strength = np.concatenate([field1.omega * field1.areas, -(field2.omega * field2.areas)])
    eps = min(field1.eps_core, field2.eps_core)

    J_sup = np.zeros(len(times))
    for k in range(len(times)):
        cloud_now = np.concatenate(
            [run1.tracks[: n1, k, :], run1.tracks[cloud2_in_run1, k, :]]
        )
        x_mapped = run1.tracks[idx1[j_sel], k, :]
        jvals = _j_term(j_pts, x_mapped, cloud_now, cloud_init, strength, lam_pts, eps)
        J_sup[k] = float(np.max(np.linalg.norm(jvals, axis=1) / zeta_j))

    report = StabilityReport(
        times=times,
        eta=eta,
        L=L,
        M=M,
        Q=Q,
        J_sup=J_sup,
        a0=a0,
        aT=a0 + float(np.max(J_sup)),
        C0=max(run1.C0, run2.C0),
        zeta_label=zeta.label,
        h_label=h.label,
        meta=meta or {},
    )
    return PairRun(
        report=report,
        run1=run1,
        run2=run2,
        common_idx1=idx1,
        common_idx2=idx2,
        eval_points=eval_fixed,
        cloud_init=cloud_init,
        cloud_strength=strength,
        eps_core=eps,
    )


def j1_sup_series(pair: PairRun, zeta: GrowthBound, h: GrowthBound) -> np.ndarray:
    """Per-time sup of |(a_{h(x)} K) * dw0 (X1(t,x))| / zeta(x).

    The first half of the kernel-commutator term in isolation; bounded by
    a constant times the initial weighted velocity gap.
    """
    run1 = pair.run1
    # the common set is field1 positions + ring; reuse its run1 indices
    idx = pair.common_idx1
    pts0 = run1.tracks[idx, 0, :]
    lam_pts = np.asarray(h.fn(np.linalg.norm(pts0, axis=1)), dtype=float)
    zeta_pts = np.asarray(zeta.fn(np.linalg.norm(pts0, axis=1)), dtype=float)
    cloud_init = pair.cloud_init
    strength = pair.cloud_strength
    eps = pair.eps_core
    out = np.zeros(len(run1.times))
    sel = np.arange(0, len(idx), max(1, len(idx) // 64))
    for k in range(len(run1.times)):
        x_mapped = run1.tracks[idx[sel], k, :]
        vals = np.empty((len(sel), 2))
        for i in range(len(sel)):
            v = nbody.velocity_cutoff(
                x_mapped[i : i + 1], cloud_init, strength, float(lam_pts[sel][i]), eps
            )
            vals[i] = v[0]
        out[k] = float(np.max(np.linalg.norm(vals, axis=1) / zeta_pts[sel]))
    return out


# ---------------------------------------------------------------------------
# envelope fits
# ---------------------------------------------------------------------------

def _bisect_smallest(pred, lo: float, hi: float, iters: int = 60) -> float | None:
    """Smallest c in [lo, hi] with pred(c) true; None if even hi fails."""
    if not pred(hi):
        return None
    if pred(lo):
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def fit_m_envelope(report: StabilityReport, guard: float = math.exp(-1.0)) -> dict:
    """Smallest C with M(t) <= (t a(T))^{exp(-C t)} in the small-data regime.

    Only times with 0 < t a(T) < 1 and M below the ``guard`` level enter;
    the envelope is the double-log Osgood consequence of the gap bound and
    holds until M grows to the constant's own scale.
    """
    t = report.times
    keep = (t > 0) & (t * report.aT < 1.0) & (report.M < guard) & (report.M > 0)
    if not np.any(keep):
        return {"C": 0.0, "ok": True, "n_times": 0}
    tt, mm = t[keep], report.M[keep]
    x = tt * report.aT

    def holds(c):
        return bool(np.all(mm <= x ** np.exp(-c * tt)))

    c = _bisect_smallest(holds, 0.0, 200.0)
    return {"C": c if c is not None else math.inf, "ok": c is not None, "n_times": int(np.sum(keep))}


def fit_m_linear(report: StabilityReport) -> dict:
    """Fitted C in the large-data regime bound M(t) <= C t a(T)."""
    t = report.times
    keep = t > 0
    if report.aT == 0 or not np.any(keep):
        return {"C": 0.0, "ok": bool(np.all(report.M[keep] == 0.0))}
    c = float(np.max(report.M[keep] / (t[keep] * report.aT)))
    return {"C": c, "ok": math.isfinite(c)}


def q_envelope_values(report: StabilityReport, C: float) -> np.ndarray:
    """Envelope (a(T) + C mubar(C M(t))) exp(C t) on the report's time grid."""
    mb = np.asarray(mubar(np.minimum(C * report.M, 10.0)), dtype=float)
    return (report.aT + C * mb) * np.exp(np.minimum(C * report.times, 700.0))


def fit_q_envelope(report: StabilityReport) -> dict:
    """Smallest C with Q(t) <= (a(T) + C mubar(C M(t))) e^{C t} on the series."""
    def holds(c):
        return bool(np.all(report.Q <= q_envelope_values(report, c)))

    c = _bisect_smallest(holds, 0.0, 1000.0)
    ok = c is not None
    env = q_envelope_values(report, c) if ok else None
    margin = float(np.min(env - report.Q)) if ok else -math.inf
    return {"C": c if ok else math.inf, "ok": ok, "margin": margin}


def q_envelope_check(report: StabilityReport, C: float, q_scale: float = 1.0) -> bool:
    """Does q_scale * Q stay below the envelope with the given constant?"""
    return bool(np.all(q_scale * report.Q <= q_envelope_values(report, C)))


def aT_simple_bound(report: StabilityReport, omega_diff_sup: float) -> dict:
    """Both sides of a(T) <= C ||u1_0 - u2_0||_{S_zeta}.

    The S_zeta norm of the difference is the measured velocity gap a0 plus
    the sup of the vorticity difference (supplied analytically by the
    scenario; lattice samples cannot resolve indicator crescents).
    """
    s_norm = report.a0 + float(omega_diff_sup)
    if s_norm == 0.0:
        # identical data: a(T) vanishes to round-off (cancelling kernel sums)
        return {"aT": report.aT, "s_zeta_norm": 0.0, "C": 0.0, "ok": report.aT <= 1e-12}
    c = report.aT / s_norm
    return {"aT": report.aT, "s_zeta_norm": s_norm, "C": c, "ok": math.isfinite(c)}


def phi_alpha_bound_check(
    reports: list[StabilityReport],
    alpha: float,
    delta: float,
    T_star: float,
    C_hyp: float = 1.0,
) -> dict:
    """Continuous-dependence response check on bounded-velocity pairs.

    Requires h = const runs, 0 < delta < alpha < 1, and
    T* < min(T, (1 + delta)/(C_hyp C0)) with C0 the measured sup S_1 norm.
    Fits (C, C1) jointly over the sweep so that

        a(T*) <= C1 Phi_alpha(T, C a0^delta)

    and reports the fit and its margins.
    """
    if not 0.0 < delta < alpha < 1.0:
        raise HypothesisViolation(f"need 0 < delta < alpha < 1, got delta={delta}, alpha={alpha}")
    if not reports:
        raise BadArgument("no reports supplied")
    for rep in reports:
        if not rep.h_label.startswith("const"):
            raise HypothesisViolation(f"bounded-velocity runs required, got h={rep.h_label}")
        horizon = min(float(rep.times[-1]), (1.0 + delta) / (C_hyp * rep.C0))
        if not 0.0 < T_star < horizon:
            raise HypothesisViolation(
                f"T*={T_star} violates T* < min(T, (1+delta)/(C C0)) = {horizon:.6g}"
            )

    c0_max = max(rep.C0 for rep in reports)
    a_stars = np.array([rep.aT_up_to(T_star) for rep in reports])
    a0s = np.array([rep.a0 for rep in reports])
    T = max(float(rep.times[-1]) for rep in reports)

    nonzero = a0s > 0
    if not np.any(nonzero):
        return {"C": 1.0, "C1": 0.0, "ok": bool(np.all(a_stars == 0.0)), "margins": []}

    # joint fit: larger C always shrinks C1, so pick C by evenness of the
    # per-scenario ratios (tightest single C1 across the sweep), then set
    # C1 to the worst ratio at that C
    best = None
    for c in np.geomspace(1e-2, 1e2, 61):
        phis = np.array(
            [phi_alpha(c0_max, T, alpha, c * a0**delta) if a0 > 0 else 0.0 for a0 in a0s]
        )
        ratios = a_stars[nonzero] / np.maximum(phis[nonzero], 1e-300)
        spread = float(np.max(ratios) / max(np.min(ratios), 1e-300))
        c1 = float(np.max(ratios))
        if best is None or spread < best[2]:
            best = (float(c), c1, spread)
    c, c1, _ = best
    phis = np.array([phi_alpha(c0_max, T, alpha, c * a0**delta) if a0 > 0 else 0.0 for a0 in a0s])
    margins = [float(c1 * p - a) for p, a in zip(phis, a_stars)]
    return {"C": c, "C1": c1, "ok": math.isfinite(c1), "margins": margins, "a_stars": a_stars.tolist()}


def chain_phi_windows(
    report: StabilityReport, alpha: float, delta: float, T_star: float, C: float, C1: float
) -> list[dict]:
    """Iterate the response bound over consecutive T* windows covering [0, T].

    Each window propagates the measured weighted velocity gap at its start
    through the fitted response function; the per-window rows expose how
    the chained bound grows.  Utility for reporting, not an assertion.
    """
    T = float(report.times[-1])
    n_win = max(1, int(math.ceil(T / T_star - 1e-12)))
    rows = []
    gap = report.a0
    c0 = report.C0
    for i in range(n_win):
        t0, t1 = i * T_star, min((i + 1) * T_star, T)
        bound = C1 * float(phi_alpha(c0, T, alpha, C * gap**delta)) if gap > 0 else 0.0
        rows.append({"t0": t0, "t1": t1, "gap_in": gap, "bound_out": bound})
        k = int(np.searchsorted(report.times, t1 - 1e-12))
        k = min(k, len(report.times) - 1)
        gap = float(report.Q[k])
    return rows
