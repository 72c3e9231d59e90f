"""Identity residuals: steady-state vanishing, limits, and refinement."""

import math

import numpy as np
import pytest

from euler2d import fields as FM
from euler2d import flow as FL
from euler2d import serfati as SF
from euler2d.errors import BadArgument
from euler2d.growth import compute_H, const_bound, power_bound

_EVAL_PTS = np.array([[1.5, 0.0], [0.5, 0.5], [0.0, -2.0], [2.5, 1.0]])


@pytest.fixture(scope="module")
def rankine_traj():
    field = FM.make_rankine(1.0, 1.0, 32)
    return FL.advect(field, T=1.0, dt=0.02)


@pytest.fixture(scope="module")
def kirchhoff_traj():
    field = FM.make_kirchhoff(2.0, 1.0, 1.0, 32)
    return FL.advect(field, T=1.0, dt=0.02)


def test_steady_state_residual_vanishes(rankine_traj):
    # the radial patch is steady: u(t) = u(0), so both sides are zero up to
    # discretization error, for every cutoff scale
    ev = SF.SerfatiEvaluator(rankine_traj, _EVAL_PTS, np.array([1.0]), np.array([0.5, 1.0, 2.0]))
    res = ev.residual()
    assert np.max(np.abs(res.lhs)) <= 1e-2
    # quadrature error grows as the cutoff scale shrinks toward the spacing
    assert np.all(res.residual_norm <= np.array([4e-3, 5e-4, 1e-4]))
    # the far-field tensor contraction itself vanishes on a steady radial flow
    for lam in (1.0, 2.0):
        assert np.max(np.abs(ev.far_field(1.0, lam))) <= 2e-3


def test_rhs_zero_at_t0(rankine_traj):
    ev = SF.SerfatiEvaluator(rankine_traj, _EVAL_PTS, np.array([0.0]), np.array([1.0]))
    assert np.allclose(ev.rhs(0.0, 1.0), 0.0)
    assert np.allclose(ev.lhs(0.0), 0.0)


def test_serfati_rhs_time_validation(rankine_traj):
    with pytest.raises(BadArgument):
        SF.serfati_rhs(rankine_traj, np.array([1.0, 0.0]), 5.0, 1.0)


def test_wide_cutoff_reduces_to_biot_savart_difference(kirchhoff_traj):
    # lam beyond the supports and eval point: the near field carries the
    # whole velocity increment and the far field is negligible
    traj = kirchhoff_traj
    x = np.array([[2.5, 0.5]])
    t = 1.0
    lam = 60.0
    ev = SF.SerfatiEvaluator(traj, x, np.array([t]), np.array([lam]), window_tol=1e-10)
    rhs = ev.rhs(t, lam)
    k = traj.time_index(t)
    oracle = traj.velocity_at(x, k) - traj.velocity_at(x, 0)
    assert np.linalg.norm(rhs - oracle) <= 5e-4
    assert np.max(np.abs(ev.far_field(t, lam))) <= 5e-4


def test_residual_falls_under_refinement():
    # simultaneous (n, 1/dt) doubling must shrink the residual per scale
    norms = []
    for n, dt in [(24, 0.05), (48, 0.025)]:
        field = FM.make_kirchhoff(2.0, 1.0, 1.0, n)
        traj = FL.advect(field, T=1.0, dt=dt)
        res = SF.serfati_residual(
            traj, _EVAL_PTS, np.array([0.5, 1.0]), np.array([1.0, 2.0])
        )
        norms.append(res.residual_norm)
    ratios = norms[0] / norms[1]
    assert np.all(ratios >= 1.5)


def test_residual_rows_schema(rankine_traj):
    res = SF.serfati_residual(rankine_traj, _EVAL_PTS[:2], [1.0], [0.5])
    rows = res.rows(scenario="unit")
    assert len(rows) == 2
    row = rows[0]
    assert set(row) == {"scenario", "lambda", "time", "point", "lhs", "rhs", "abs_err"}
    assert row["scenario"] == "unit"
    assert row["abs_err"] >= 0.0


def test_far_field_instantaneous_bound(kirchhoff_traj):
    # |T_lam *. (u x u)(s, x)| <= C (H[h^2](lam/2) + h(x)^2 / lam) sup|u/h|^2
    traj = kirchhoff_traj
    h = const_bound()
    x = np.array([[2.5, 0.0]])
    sup_ratio = traj.C0 - traj.omega.max()  # velocity part of the recorded norm
    ratios = []
    for lam in (0.5, 1.0, 2.0):
        ev = SF.SerfatiEvaluator(traj, x, np.array([1.0]), np.array([lam]))
        inst = float(np.linalg.norm(ev.instantaneous_far_field(1.0, lam)))
        reference = (compute_H(h, lam / 2.0, power=2) + 1.0 / lam) * sup_ratio**2
        ratios.append(inst / reference)
    assert max(ratios) <= 1.0
    assert np.all(np.isfinite(ratios))


def test_lambda_star_values():
    hc = const_bound()
    assert SF.lambda_star(hc, np.zeros(2), lambda s: 1.0, 4.0) == pytest.approx(4.0)
    assert SF.lambda_star(hc, np.zeros(2), lambda s: 0.0, 4.0) == 0.0
    h1 = power_bound(0.25)
    x = np.array([15.0, 0.0])
    got = SF.lambda_star(h1, x, lambda s: 1.0, 1.0)
    assert got == pytest.approx(2.0 * 16.0**0.25, rel=1e-9)
    with pytest.raises(BadArgument):
        SF.lambda_star(hc, np.zeros(2), lambda s: 1.0, -1.0)
    with pytest.raises(BadArgument):
        SF.lambda_star(hc, np.zeros(2), lambda s: -1.0, 1.0)
