"""Growth bounds and the scalar calculus built on top of them.

A growth bound is a concave, increasing, positive function h on [0, inf)
used to prescribe how fast a velocity field may grow at infinity,
|u(x)| <= C h(|x|).  The module provides

* the tier hierarchy (pre-growth / growth / well-posedness / global
  well-posedness) with a sampling-based classifier,
* the tail integral H[h](r) = int_r^inf h(s)/s^2 ds,
* the quantity E(r) = (1 + sqrt(r) H[h^2](sqrt(r)))^2 r together with a
  calibrated convex envelope mu >= E,
* the Osgood-propagated radius Gamma_t (int_a^Gamma dr/h = C t) and its
  composition F_t = h(Gamma_t),
* the log-moduli mubar, chi_t and the response function phi_alpha,
* an existence-time estimator that inverts the Osgood bound
  int_{L0}^{L(t)} ds / mu(T s) <= C t / T.

All functions here are pure; GrowthBound instances are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Callable

import numpy as np

from .errors import (
    BadArgument,
    DivergentIntegral,
    EnvelopeFailure,
    InvalidFunction,
    TierRequired,
)

__all__ = [
    "Tier",
    "GrowthBound",
    "TierReport",
    "Diagnostic",
    "MuEnvelope",
    "OsgoodEnvelope",
    "builtin_bound",
    "const_bound",
    "power_bound",
    "quarterlog_bound",
    "linear_bound",
    "product_bound",
    "ratio_bound",
    "validate_tier",
    "classify",
    "compute_H",
    "compute_E",
    "compute_E_and_mu",
    "mu_envelope",
    "gamma_t",
    "gamma_many",
    "f_t",
    "f_many",
    "mubar",
    "chi_t",
    "phi_alpha",
    "scaling_constant",
    "osgood_envelope",
    "existence_time_estimate",
]

_FD_STEP = 1e-6          # one-sided step for bounds without an analytic derivative
_TAIL_RMAX = 1.0e12      # dyadic tail scan stops at this radius
_TAIL_RATIO = 0.97       # geometric-decrease threshold for tail convergence
_TAIL_WINDOW = 5         # number of trailing dyadic ratios that must agree
_ENVELOPE_GRID = 200     # log-spaced calibration points
_ENVELOPE_SLACK = 1.05   # calibrated constant is max ratio times this


class Tier(IntEnum):
    """Growth-bound hierarchy, ordered from weakest to strongest."""

    UNCLASSIFIED = 0
    PRE_GROWTH = 1
    GROWTH = 2
    WELL_POSEDNESS = 3
    GLOBAL_WELL_POSEDNESS = 4


@dataclass(frozen=True)
class GrowthBound:
    """A positive, concave, increasing scalar bound r -> h(r).

    ``fn`` and ``deriv`` must accept scalars and numpy arrays.  ``deriv``
    may be None, in which case a one-sided finite difference is used.
    ``mu_shape`` optionally supplies the shape of the convex envelope used
    for E <= mu; the constant in front is always calibrated numerically.
    """

    fn: Callable
    deriv: Callable | None
    label: str
    tier: Tier = Tier.UNCLASSIFIED
    mu_shape: Callable | None = None
    mu_shape_name: str = "r*(1+r)"

    def __call__(self, r):
        return self.fn(r)

    def deriv_at(self, r):
        if self.deriv is not None:
            return self.deriv(r)
        return (self.fn(np.asarray(r) + _FD_STEP) - self.fn(r)) / _FD_STEP

    def with_tier(self, tier: Tier) -> "GrowthBound":
        return replace(self, tier=tier)


# ---------------------------------------------------------------------------
# built-in bounds
# ---------------------------------------------------------------------------

def const_bound(c: float = 1.0) -> GrowthBound:
    """h(r) = c.  A constant bound admits the linear envelope mu = C r."""
    if c <= 0:
        raise BadArgument(f"constant bound must be positive, got {c}")
    return GrowthBound(
        fn=lambda r: np.full_like(np.asarray(r, dtype=float), c),
        deriv=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        label="const" if c == 1.0 else f"const:{c:g}",
        mu_shape=lambda r: np.asarray(r, dtype=float),
        mu_shape_name="r",
    )


def power_bound(alpha: float) -> GrowthBound:
    """h(r) = (1+r)^alpha.  Well-posedness tier requires alpha < 1/2."""
    if not 0.0 <= alpha < 1.0:
        raise BadArgument(f"power bound exponent must be in [0, 1), got {alpha}")
    return GrowthBound(
        fn=lambda r: (1.0 + np.asarray(r, dtype=float)) ** alpha,
        deriv=lambda r: alpha * (1.0 + np.asarray(r, dtype=float)) ** (alpha - 1.0),
        label=f"power:{alpha:g}",
        mu_shape=lambda r: (1.0 + np.asarray(r, dtype=float) ** alpha) * np.asarray(r, dtype=float),
        mu_shape_name="(1+r^a)*r",
    )


def quarterlog_bound() -> GrowthBound:
    """h(r) = log^{1/4}(e + r), the slowly growing global bound."""
    def fn(r):
        return np.log(np.e + np.asarray(r, dtype=float)) ** 0.25

    def deriv(r):
        r = np.asarray(r, dtype=float)
        return 0.25 * np.log(np.e + r) ** (-0.75) / (np.e + r)

    return GrowthBound(
        fn=fn,
        deriv=deriv,
        label="quarterlog",
        mu_shape=lambda r: (1.0 + np.log(np.e + np.asarray(r, dtype=float))) * np.asarray(r, dtype=float),
        mu_shape_name="(1+log(e+r))*r",
    )


def linear_bound() -> GrowthBound:
    """h(r) = 1 + r.  Pre-growth only: the tail integral of h/s^2 diverges."""
    return GrowthBound(
        fn=lambda r: 1.0 + np.asarray(r, dtype=float),
        deriv=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        label="linear",
    )


def builtin_bound(spec: str) -> GrowthBound:
    """Resolve a bound identifier: const | power:<alpha> | quarterlog | linear."""
    spec = spec.strip()
    if spec == "const":
        return const_bound()
    if spec == "quarterlog":
        return quarterlog_bound()
    if spec == "linear":
        return linear_bound()
    if spec.startswith("power:"):
        try:
            alpha = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise BadArgument(f"bad power bound spec {spec!r}") from exc
        return power_bound(alpha)
    raise BadArgument(f"unknown growth bound identifier {spec!r}")


def product_bound(a: GrowthBound, b: GrowthBound) -> GrowthBound:
    """Pointwise product a*b, with derivative by the product rule."""
    deriv = None
    if a.deriv is not None and b.deriv is not None:
        deriv = lambda r: a.deriv(r) * b.fn(r) + a.fn(r) * b.deriv(r)
    return GrowthBound(
        fn=lambda r: a.fn(r) * b.fn(r),
        deriv=deriv,
        label=f"({a.label})*({b.label})",
    )


def ratio_bound(a: GrowthBound, b: GrowthBound) -> GrowthBound:
    """Pointwise quotient a/b, with derivative by the quotient rule."""
    deriv = None
    if a.deriv is not None and b.deriv is not None:
        deriv = lambda r: (a.deriv(r) * b.fn(r) - a.fn(r) * b.deriv(r)) / b.fn(r) ** 2
    return GrowthBound(
        fn=lambda r: a.fn(r) / b.fn(r),
        deriv=deriv,
        label=f"({a.label})/({b.label})",
    )


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------

def _simpson_adaptive(f, a: float, b: float, tol: float, max_depth: int = 24) -> float:
    """Adaptive Simpson on [a, b] with absolute tolerance ``tol``.

    The tolerance is also applied relative to the running interval
    estimates so that a zero or underestimated ``tol`` cannot force the
    recursion to full depth on smooth integrands.
    """
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = abs(left + right - whole)
        limit = max(tol, 1e-14 * abs(left + right), 5e-16 * abs(whole))
        if depth >= max_depth or err <= 15.0 * limit:
            total += left + right + (left + right - whole) / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * tol, depth + 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))
    return total


def _improper_from_zero(f, b: float, rel_tol: float) -> float:
    """int_0^b f(w) dw for f with an integrable singularity at w = 0.

    The interval is split dyadically toward 0; each piece is integrated
    with adaptive Simpson and the scan stops once the running pieces are
    a negligible, geometrically decaying fraction of the accumulated sum.
    Raises DivergentIntegral when the pieces fail to decay.
    """
    scale = abs(f(0.5 * b)) * b + 1e-300
    total = 0.0
    hi = b
    prev_piece = math.inf
    for k in range(200):
        lo = hi * 0.5
        piece = _simpson_adaptive(f, lo, hi, tol=rel_tol * max(abs(total), scale))
        total += piece
        if not math.isfinite(piece):
            raise DivergentIntegral("non-finite quadrature piece in improper integral")
        if k > 4 and piece > prev_piece * 1.0000001 and piece > rel_tol * abs(total):
            raise DivergentIntegral("integrand pieces fail to decay toward the singular endpoint")
        if piece < rel_tol * abs(total) and k >= 8:
            # remaining tail is below the geometric bound of the last piece
            break
        prev_piece = piece
        hi = lo
    return total


def _dyadic_tail_pieces(f, r0: float = 1.0, doublings: int = 40) -> np.ndarray:
    """Contributions int_{R}^{2R} f(s) ds for R = r0 * 2^k, k < doublings.

    The default of 40 doublings from r0 = 1 scans out to ~1e12.
    """
    pieces = []
    radius = r0
    for _ in range(doublings):
        tol = 1e-9 * abs(f(radius)) * radius + 1e-300
        pieces.append(_simpson_adaptive(f, radius, 2.0 * radius, tol=tol))
        radius *= 2.0
    return np.asarray(pieces)


def _tail_converges(f, r0: float = 1.0) -> tuple[bool, np.ndarray]:
    """Geometric-decrease test for int_{r0}^inf f(s) ds.

    The integral is declared convergent when the trailing dyadic
    contributions shrink geometrically (ratio below _TAIL_RATIO); a ratio
    creeping toward 1 marks divergence.  Sound only up to the scanned range.
    """
    pieces = _dyadic_tail_pieces(f, r0=r0)
    if np.any(~np.isfinite(pieces)):
        return False, pieces
    tail = pieces[-(_TAIL_WINDOW + 1):]
    if np.any(tail <= 0):
        # integrand vanished identically in the tail: trivially convergent
        return True, pieces
    ratios = tail[1:] / tail[:-1]
    return bool(np.median(ratios) <= _TAIL_RATIO), pieces


# ---------------------------------------------------------------------------
# H, E and the mu envelope
# ---------------------------------------------------------------------------

_TAIL_CACHE: dict[tuple[str, int], bool] = {}


def _h_tail_converges(h: GrowthBound, power: int) -> bool:
    key = (h.label, power)
    if key not in _TAIL_CACHE:
        f = lambda s: float(h.fn(s)) ** power / s**2
        _TAIL_CACHE[key] = _tail_converges(f)[0]
    return _TAIL_CACHE[key]


def compute_H(h: GrowthBound, r: float, power: int = 1, rel_tol: float = 1e-8) -> float:
    """Tail integral int_r^inf h(s)^power / s^2 ds.

    Computed after the substitution w = 1/s, which maps the integral to
    int_0^{1/r} h(1/w)^power dw with an integrable endpoint singularity.
    """
    if r <= 0:
        raise BadArgument(f"H[h](r) requires r > 0, got {r}")
    if power not in (1, 2):
        raise BadArgument(f"power must be 1 or 2, got {power}")
    if not _h_tail_converges(h, power):
        raise DivergentIntegral(
            f"tail of {h.label}^{power}/s^2 fails the geometric-decrease test"
        )
    f = lambda w: float(h.fn(1.0 / w)) ** power
    value = _improper_from_zero(f, 1.0 / r, rel_tol=rel_tol)
    if not math.isfinite(value):
        raise DivergentIntegral(f"H[{h.label}]({r}) did not evaluate to a finite value")
    return value


def compute_E(h: GrowthBound, r: float) -> float:
    """E(r) = (1 + sqrt(r) * H[h^2](sqrt(r)))^2 * r."""
    if r <= 0:
        raise BadArgument(f"E(r) requires r > 0, got {r}")
    s = math.sqrt(r)
    return (1.0 + s * compute_H(h, s, power=2)) ** 2 * r


@dataclass(frozen=True)
class MuEnvelope:
    """Convex envelope mu(r) = constant * shape(r) with E <= mu calibrated."""

    shape_name: str
    constant: float
    shape: Callable

    def __call__(self, r):
        return self.constant * self.shape(r)


_ENVELOPE_CACHE: dict[str, MuEnvelope] = {}


def _default_shape(r):
    r = np.asarray(r, dtype=float)
    return r * (1.0 + r)


def mu_envelope(h: GrowthBound) -> MuEnvelope:
    """Calibrate the convex envelope mu >= E for ``h``.

    The shape is taken from the bound when it carries one (sharper shapes
    exist for the constant, power and quarter-log families); otherwise the
    generic r(1+r) shape is used.  The constant is 1.05 times the largest
    ratio E/shape over a 200-point log grid, then re-verified on a shifted
    grid.
    """
    if h.label in _ENVELOPE_CACHE:
        return _ENVELOPE_CACHE[h.label]
    shape = h.mu_shape if h.mu_shape is not None else _default_shape
    shape_name = h.mu_shape_name if h.mu_shape is not None else "r*(1+r)"
    grid = np.geomspace(1e-6, 1e6, _ENVELOPE_GRID)
    ratios = [compute_E(h, float(r)) / float(shape(r)) for r in grid]
    constant = _ENVELOPE_SLACK * max(ratios)
    if not math.isfinite(constant) or constant <= 0:
        raise EnvelopeFailure(f"envelope calibration for {h.label} produced {constant}")
    env = MuEnvelope(shape_name=shape_name, constant=constant, shape=shape)
    check = np.geomspace(2e-6, 5e5, 37)
    for r in check:
        if compute_E(h, float(r)) > env(float(r)) * (1.0 + 1e-9):
            raise EnvelopeFailure(
                f"calibrated envelope for {h.label} violated at r={r:g}"
            )
    _ENVELOPE_CACHE[h.label] = env
    return env


def compute_E_and_mu(h: GrowthBound, r: float) -> tuple[float, float]:
    """Return (E(r), mu(r)) with mu the calibrated envelope for ``h``."""
    env = mu_envelope(h)
    return compute_E(h, r), float(env(r))


# ---------------------------------------------------------------------------
# tier classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    name: str
    passed: bool
    witness: float | tuple | None = None
    detail: str = ""


@dataclass(frozen=True)
class TierReport:
    tier: Tier
    diagnostics: tuple[Diagnostic, ...]
    grid: np.ndarray

    def failed(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if not d.passed]


def validate_tier(h: GrowthBound, samples: int = 64, rmax: float = 100.0) -> TierReport:
    """Classify ``h`` into the tier hierarchy by sampled predicate checks.

    The verdict is the highest tier whose defining conditions all pass:
    (i) positivity/monotonicity/concavity/subadditivity sampling on the
    grid, (ii) geometric tail convergence of int h/s^2, (iii) same for h^2,
    (iv) divergence of int dr/mu for the calibrated envelope.  Soundness is
    limited by the grid; the grid is recorded in the report.
    """
    if samples < 16:
        raise BadArgument(f"samples must be >= 16, got {samples}")
    if rmax <= 1.0:
        raise BadArgument(f"rmax must exceed 1, got {rmax}")

    grid = np.concatenate([[0.0], np.geomspace(rmax * 1e-6, rmax, samples - 1)])
    values = np.asarray(h.fn(grid), dtype=float)
    if np.any(~np.isfinite(values)):
        bad = float(grid[np.argmax(~np.isfinite(values))])
        raise InvalidFunction(f"{h.label} is non-finite at r={bad:g}")

    diags: list[Diagnostic] = []
    tol = 1e-9 * float(np.max(np.abs(values)))

    def record(name: str, mask_ok: np.ndarray, witness_vals, detail: str = ""):
        ok = bool(np.all(mask_ok))
        witness = None
        if not ok:
            idx = int(np.argmax(~mask_ok))
            witness = witness_vals[idx]
        diags.append(Diagnostic(name=name, passed=ok, witness=witness, detail=detail))
        return ok

    pre_ok = record("positive", values > 0.0, grid)
    pre_ok &= record("nondecreasing", np.diff(values) >= -tol, grid[1:])

    mids = 0.5 * (grid[:-1] + grid[1:])
    mid_vals = np.asarray(h.fn(mids), dtype=float)
    pre_ok &= record(
        "concave-midpoint",
        mid_vals >= 0.5 * (values[:-1] + values[1:]) - tol,
        mids,
    )

    d0 = float(np.asarray(h.deriv_at(0.0), dtype=float))
    diags.append(Diagnostic("deriv0-finite", math.isfinite(d0), witness=None if math.isfinite(d0) else 0.0))
    pre_ok &= math.isfinite(d0)

    ri, rj = np.meshgrid(grid[:: max(1, samples // 12)], grid[:: max(1, samples // 12)])
    pair_lhs = np.asarray(h.fn(ri + rj), dtype=float)
    pair_rhs = np.asarray(h.fn(ri), dtype=float) + np.asarray(h.fn(rj), dtype=float)
    pre_ok &= record(
        "subadditive",
        (pair_lhs <= pair_rhs + tol).ravel(),
        list(zip(ri.ravel(), rj.ravel())),
    )

    if not pre_ok:
        return TierReport(Tier.UNCLASSIFIED, tuple(diags), grid)
    tier = Tier.PRE_GROWTH

    tail1 = _h_tail_converges(h, 1)
    diags.append(Diagnostic("tail-h-converges", tail1, detail="int_1^inf h/s^2"))
    if tail1:
        tier = Tier.GROWTH
        tail2 = _h_tail_converges(h, 2)
        diags.append(Diagnostic("tail-h2-converges", tail2, detail="int_1^inf h^2/s^2"))
        if tail2:
            tier = Tier.WELL_POSEDNESS
            try:
                env = mu_envelope(h)
            except (EnvelopeFailure, DivergentIntegral) as exc:
                diags.append(Diagnostic("mu-envelope", False, detail=str(exc)))
            else:
                inv_mu = lambda s: 1.0 / float(env(s))
                diverges = not _tail_converges(inv_mu)[0]
                diags.append(
                    Diagnostic(
                        "mu-osgood-at-infinity",
                        diverges,
                        detail=f"int_1^inf dr/mu with mu = {env.constant:.6g}*{env.shape_name}",
                    )
                )
                if diverges:
                    tier = Tier.GLOBAL_WELL_POSEDNESS
    return TierReport(tier, tuple(diags), grid)


def classify(h: GrowthBound, samples: int = 64, rmax: float = 100.0) -> GrowthBound:
    """Return a copy of ``h`` with its tier field filled in."""
    return h.with_tier(validate_tier(h, samples=samples, rmax=rmax).tier)


# ---------------------------------------------------------------------------
# Gamma_t, F_t
# ---------------------------------------------------------------------------

def gamma_t(h: GrowthBound, C: float, t: float, a: float, rel_tol: float = 1e-10) -> float:
    """Solve int_a^Gamma dr/h(r) = C t for Gamma (scalar, bracketed root).

    The bracket is grown as [a, a + h(a) C t 2^k]; sublinearity of h makes
    linear overshoot certain, so the root always exists.
    """
    if t < 0 or a < 0 or C <= 0:
        raise BadArgument(f"gamma_t requires t >= 0, a >= 0, C > 0 (got t={t}, a={a}, C={C})")
    if t == 0.0:
        return a
    target = C * t
    inv_h = lambda r: 1.0 / float(h.fn(r))

    hi = a + float(h.fn(a)) * target
    acc = _simpson_adaptive(inv_h, a, hi, tol=rel_tol * target)
    while acc < target:
        new_hi = a + 2.0 * (hi - a)
        acc += _simpson_adaptive(inv_h, hi, new_hi, tol=rel_tol * target)
        hi = new_hi
        if hi > 1e300:
            raise BadArgument("gamma_t bracket exploded; h is not a growth bound")

    from scipy.optimize import brentq

    def g(x):
        return _simpson_adaptive(inv_h, a, x, tol=rel_tol * target * 0.01) - target

    lo = a
    return float(brentq(g, lo, hi, xtol=1e-14 * max(1.0, hi), rtol=8.9e-16))


def _gamma_table(h: GrowthBound, span: float, n: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    """Dense antiderivative table P(r) = int_0^r dr/h on [0, span]."""
    grid = np.concatenate([[0.0], np.geomspace(span * 1e-9, span, n - 1)])
    inv = 1.0 / np.asarray(h.fn(grid), dtype=float)
    P = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(grid))])
    return grid, P


def gamma_many(h: GrowthBound, C: float, t: float, radii: np.ndarray) -> np.ndarray:
    """Vectorized Gamma_t over many radii via a dense antiderivative table."""
    radii = np.asarray(radii, dtype=float)
    if t < 0 or C <= 0 or np.any(radii < 0):
        raise BadArgument("gamma_many requires t >= 0, C > 0, radii >= 0")
    if t == 0.0:
        return radii.copy()
    amax = float(np.max(radii)) if radii.size else 1.0
    span = max(2.0 * (amax + float(h.fn(amax)) * C * t), 1.0)
    for _ in range(200):
        grid, P = _gamma_table(h, span)
        Pa = np.interp(radii, grid, P)
        target = Pa + C * t
        if float(np.max(target)) < float(P[-1]):
            return np.interp(target, P, grid)
        span *= 4.0
    raise BadArgument("gamma_many failed to bracket the inverse table")


def f_t(h: GrowthBound, C: float, t: float, r: float) -> float:
    """F_t(r) = h(Gamma_t(r)); satisfies h <= F_t <= C(t) h."""
    return float(h.fn(gamma_t(h, C, t, r)))


def f_many(h: GrowthBound, C: float, t: float, radii: np.ndarray) -> np.ndarray:
    return np.asarray(h.fn(gamma_many(h, C, t, radii)), dtype=float)


# ---------------------------------------------------------------------------
# log-moduli
# ---------------------------------------------------------------------------

_EINV = math.exp(-1.0)


def mubar(r):
    """The capped log-modulus: -r log r for r <= 1/e, constant 1/e above."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise BadArgument("mubar requires r >= 0")
    out = np.full_like(r, _EINV)
    small = (r > 0) & (r <= _EINV)
    out[small] = -r[small] * np.log(r[small])
    out[r == 0] = 0.0
    return out if out.ndim else float(out)


def chi_t(C0: float, t: float, r):
    """Flow-map modulus r^{exp(-C0 t)} below 1, identity above."""
    if C0 < 0 or t < 0:
        raise BadArgument("chi_t requires C0 >= 0 and t >= 0")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise BadArgument("chi_t requires r >= 0")
    beta = math.exp(-C0 * t)
    out = np.where(r <= 1.0, r**beta, r)
    return out if out.ndim else float(out)


def phi_alpha(C0: float, t: float, alpha: float, x):
    """Response function x + x^{beta/(alpha+beta)} with beta = exp(-C0 t)."""
    if not 0.0 < alpha < 1.0:
        raise BadArgument(f"alpha must lie in (0, 1), got {alpha}")
    if t < 0 or C0 < 0:
        raise BadArgument("phi_alpha requires t >= 0 and C0 >= 0")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise BadArgument("phi_alpha requires x >= 0")
    beta = math.exp(-C0 * t)
    out = x + x ** (beta / (alpha + beta))
    return out if out.ndim else float(out)


def scaling_constant(h: GrowthBound) -> float:
    """C(h) = 2 (h'(0) + h(h(0)) / h(0)), the sub-scaling constant of h."""
    h0 = float(h.fn(0.0))
    return 2.0 * (float(h.deriv_at(0.0)) + float(h.fn(h0)) / h0)


# ---------------------------------------------------------------------------
# Osgood existence-time estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OsgoodEnvelope:
    """Inverted Osgood bound: t_max and the envelope t -> Lambda(t)."""

    t_max: float
    _g_table: np.ndarray
    _lam_table: np.ndarray
    lambda0: float
    rate: float
    T: float

    def bound(self, t):
        """Largest Lambda compatible with int_{L0}^{L} ds/mu(T s) <= rate*t/T."""
        t = np.asarray(t, dtype=float)
        target = self.rate * t / self.T
        out = np.interp(target, self._g_table, self._lam_table, right=np.inf)
        out = np.where(t >= self.t_max, np.inf, out)
        return out if out.ndim else float(out)


def osgood_envelope(mu: Callable, lambda0: float, rate: float = 1.0, T: float = 1.0) -> OsgoodEnvelope:
    """Invert the bound int_{lambda0}^{Lambda(t)} ds / mu(T s) <= rate * t / T.

    Returns the blow-up time of the bound (inf when int^inf ds/mu diverges)
    and the envelope itself.  ``mu`` must be positive for s > 0.
    """
    if lambda0 < 0 or T <= 0 or rate <= 0:
        raise BadArgument("osgood_envelope requires lambda0 >= 0, T > 0, rate > 0")
    if lambda0 == 0.0:
        # mu(0) = 0 makes the integral diverge at the lower endpoint: the
        # envelope pins Lambda to zero for all time (the uniqueness case).
        return OsgoodEnvelope(
            t_max=math.inf,
            _g_table=np.array([0.0, math.inf]),
            _lam_table=np.array([0.0, 0.0]),
            lambda0=0.0,
            rate=rate,
            T=T,
        )

    lam = np.geomspace(lambda0, lambda0 * 1e30, 9000)
    integrand = lam / np.asarray([mu(T * s) for s in lam], dtype=float)
    # trapezoid in log-coordinates: int ds/mu = int (s/mu) dln s
    lng = np.log(lam)
    G = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(lng))])

    f = lambda s: 1.0 / float(mu(T * s))
    converges, pieces = _tail_converges(f, r0=float(lam[-1]))
    if converges:
        # sum the geometric tail beyond the table
        ratio = float(pieces[-1] / pieces[-2]) if len(pieces) > 1 and pieces[-2] > 0 else 0.5
        ratio = min(max(ratio, 0.0), 0.99)
        tail = float(np.sum(pieces)) + float(pieces[-1]) * ratio / (1.0 - ratio)
        g_inf = float(G[-1]) + tail
        t_max = g_inf * T / rate
    else:
        t_max = math.inf
    return OsgoodEnvelope(
        t_max=t_max, _g_table=G, _lam_table=lam, lambda0=lambda0, rate=rate, T=T
    )


def existence_time_estimate(
    h: GrowthBound, lambda0: float, C: float = 1.0, T: float = 1.0
) -> tuple[float, Callable]:
    """Existence-time estimator for a bound of well-posedness tier.

    Uses the calibrated envelope mu of ``h`` in the Osgood bound; returns
    (t_max, Lambda_bound) where t_max is inf exactly when the envelope
    satisfies the Osgood-at-infinity divergence (global tier).
    """
    tier = h.tier
    if tier is Tier.UNCLASSIFIED:
        tier = validate_tier(h).tier
    if tier < Tier.WELL_POSEDNESS:
        raise TierRequired(
            f"existence-time estimate needs tier >= WELL_POSEDNESS, {h.label} is {tier.name}"
        )
    env = mu_envelope(h)
    osg = osgood_envelope(env, lambda0, rate=C, T=T)
    return osg.t_max, osg.bound
