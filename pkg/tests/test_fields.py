"""Particle fields, analytic radial fields, norms, and CSV snapshots."""

import math

import numpy as np
import pytest

from euler2d import fields as FM
from euler2d.errors import BadArgument, EmptyField, InvalidFunction
from euler2d.growth import const_bound, power_bound


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def test_rankine_circulation():
    f = FM.make_rankine(1.0, 1.0, 64)
    assert f.circulation == pytest.approx(math.pi, rel=0.02)
    assert f.total_area == pytest.approx(f.n * f.spacing**2)


def test_rankine_zero_vorticity():
    f = FM.make_rankine(1.0, 0.0, 16)
    assert np.all(f.omega == 0.0)


def test_rankine_count_scales_with_area():
    f1 = FM.make_rankine(1.0, 1.0, 48)
    f2 = FM.make_rankine(2.0, 1.0, 48)
    # same cells-per-diameter: count is resolution-invariant, but at equal
    # spacing the count scales with area
    sp = f1.spacing
    f2_same_spacing = FM.make_rankine(2.0, 1.0, int(round(4.0 / sp)))
    assert f2_same_spacing.n / f1.n == pytest.approx(4.0, rel=0.05)
    assert f2.spacing == pytest.approx(2 * f1.spacing)


def test_rankine_argument_checks():
    with pytest.raises(BadArgument):
        FM.make_rankine(1.0, 1.0, 4)
    with pytest.raises(BadArgument):
        FM.make_rankine(-1.0, 1.0, 16)


def test_kirchhoff_degenerates_to_rankine():
    e = FM.make_kirchhoff(1.0, 1.0, 1.0, 32)
    d = FM.make_rankine(1.0, 1.0, 32)
    assert e.n == d.n
    assert np.allclose(np.sort(e.positions, axis=0), np.sort(d.positions, axis=0))


def test_kirchhoff_circulation():
    f = FM.make_kirchhoff(2.0, 1.0, 1.0, 96)
    assert f.circulation == pytest.approx(math.pi * 2.0, rel=0.02)


def test_kirchhoff_axis_order():
    with pytest.raises(BadArgument):
        FM.make_kirchhoff(1.0, 2.0, 1.0, 32)


def test_kirchhoff_rotation_rate_formula():
    assert FM.kirchhoff_rotation_rate(2.0, 1.0, 1.0) == pytest.approx(2.0 / 9.0)
    assert FM.kirchhoff_rotation_rate(1.0, 1.0, 2.0) == pytest.approx(0.5)


def test_field_invariant_checks():
    with pytest.raises(BadArgument):
        FM.VortexParticleField(
            positions=np.zeros((2, 2)), omega=np.zeros(2), areas=np.array([1.0, -1.0]),
            support_radius=1.0, spacing=1.0,
        )
    with pytest.raises(InvalidFunction):
        FM.VortexParticleField(
            positions=np.array([[np.nan, 0.0]]), omega=np.zeros(1), areas=np.ones(1),
            support_radius=1.0, spacing=1.0,
        )


# ---------------------------------------------------------------------------
# induced velocity vs analytic profiles
# ---------------------------------------------------------------------------

def test_discrete_velocity_matches_rankine_profile():
    f = FM.make_rankine(1.0, 1.0, 64)
    pts = np.array([[2.0, 0.0], [0.5, 0.0], [0.0, 1.5], [-1.2, 0.9]])
    got = f.velocity(pts)
    want = FM.rankine_velocity(pts, 1.0, 1.0)
    assert np.max(np.linalg.norm(got - want, axis=1)) <= 3e-3


def test_discrete_velocity_first_order_convergence():
    pts = np.array([[0.5, 0.0], [1.5, 0.5], [0.3, -0.8]])
    errs = []
    for n in (32, 64):
        f = FM.make_rankine(1.0, 1.0, n)
        err = np.max(
            np.linalg.norm(f.velocity(pts) - FM.rankine_velocity(pts, 1.0, 1.0), axis=1)
        )
        errs.append(err)
    assert errs[0] / errs[1] >= 1.7


# ---------------------------------------------------------------------------
# S_h norm
# ---------------------------------------------------------------------------

def test_s1_norm_of_rankine():
    # sup |u| = omega R / 2 = 1/2 at the patch edge, sup |omega| = 1
    f = FM.make_rankine(1.0, 1.0, 64)
    grid = FM.sample_grid(4.0, 48, 24)
    norm = FM.s_h_norm(f, const_bound(), grid)
    assert norm == pytest.approx(1.5, rel=0.02)


def test_s_h_norm_zero_field():
    f = FM.make_rankine(1.0, 0.0, 16)
    assert FM.s_h_norm(f, const_bound(), FM.sample_grid(3.0, 16, 8)) == 0.0


def test_s_h_norm_analytic_growing_field():
    alpha = 0.25
    h = power_bound(alpha)
    sf = FM.AnalyticSField(
        h=h,
        V=lambda r: r * (1 + r) ** (alpha - 1),
        dV=lambda r: (1 + r) ** (alpha - 1) + r * (alpha - 1) * (1 + r) ** (alpha - 2),
        label="subsqrt",
    )
    grid = FM.sample_grid(200.0, 64, 16)
    # |u|/h = r (1+r)^{-1} <= 1, and the vorticity stays bounded
    speeds = np.linalg.norm(sf.u(grid), axis=1)
    hv = np.asarray(h.fn(np.linalg.norm(grid, axis=1)))
    assert np.max(speeds / hv) <= 1.0 + 1e-12
    norm = FM.s_h_norm(sf, h, grid)
    assert 1.0 <= norm <= 4.0


def test_s_h_norm_empty_grid():
    with pytest.raises(BadArgument):
        FM.s_h_norm(FM.make_rankine(1.0, 1.0, 16), const_bound(), np.zeros((0, 2)))


# ---------------------------------------------------------------------------
# modulus of continuity
# ---------------------------------------------------------------------------

def test_morrey_zero_field():
    sf = FM.AnalyticSField(
        h=const_bound(), V=lambda r: 0.0 * r, dV=lambda r: 0.0 * r, label="zero"
    )
    assert FM.morrey_modulus_check(sf, const_bound(), n_samples=100) == 0.0


def test_morrey_rankine_profile_finite():
    R, w0 = 1.0, 1.0
    sf = FM.AnalyticSField(
        h=const_bound(),
        V=lambda r: FM.rankine_speed(r, R, w0),
        dV=lambda r: np.where(np.asarray(r) <= R, 0.5 * w0, -0.5 * w0 * R**2 / np.asarray(r) ** 2),
        label="rankine",
    )
    c = FM.morrey_modulus_check(sf, const_bound(), n_samples=10000, seed=2, x_max=10.0)
    assert np.isfinite(c)
    assert c <= 5.0


def test_morrey_growing_profile_finite():
    alpha = 0.25
    h = power_bound(alpha)
    sf = FM.AnalyticSField(
        h=h,
        V=lambda r: r * (1 + r) ** (-0.75),
        dV=lambda r: (1 + r) ** (-0.75) - 0.75 * r * (1 + r) ** (-1.75),
        label="threequarters",
    )
    c = FM.morrey_modulus_check(sf, h, n_samples=8000, seed=5, x_max=40.0)
    assert np.isfinite(c)
    assert c <= 5.0


def test_morrey_stable_under_refinement():
    sf = FM.AnalyticSField(
        h=const_bound(),
        V=lambda r: r / (1 + r**2),
        dV=lambda r: (1 - r**2) / (1 + r**2) ** 2,
        label="rational",
    )
    c1 = FM.morrey_modulus_check(sf, const_bound(), n_samples=2000, seed=0)
    c2 = FM.morrey_modulus_check(sf, const_bound(), n_samples=20000, seed=1)
    assert c2 <= 2.0 * c1 + 0.5


# ---------------------------------------------------------------------------
# CSV snapshots
# ---------------------------------------------------------------------------

def test_field_csv_roundtrip(tmp_path):
    f = FM.make_rankine(1.0, 1.3, 24)
    path = tmp_path / "field.csv"
    FM.save_field_csv(f, path)
    header = path.read_text().splitlines()[0]
    assert header == "x,y,omega,area"
    g = FM.load_field_csv(path, support_radius=1.0)
    assert np.allclose(g.positions, f.positions)
    assert np.allclose(g.omega, f.omega)
    assert np.allclose(g.areas, f.areas)


def test_field_csv_header_required(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c,d\n0,0,1,1\n")
    with pytest.raises(BadArgument):
        FM.load_field_csv(path)
    empty = tmp_path / "empty.csv"
    empty.write_text("x,y,omega,area\n")
    with pytest.raises(EmptyField):
        FM.load_field_csv(empty)
