"""Vorticity discretizations and analytic radial velocity fields.

Vorticity is particle-carried: a field is a lattice of cell centers inside
the support with one particle per cell, each carrying the local vorticity
value and the (constant) cell area.  Advection moves the particles and
never touches omega or the areas, so circulation sum(omega * area) is
conserved exactly.

Analytic fields use the radial ansatz u = V(|x|) x_perp / |x| (u(0) = 0),
which is exactly divergence-free with vorticity V'(r) + V(r)/r.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import nbody
from .errors import BadArgument, EmptyField, InvalidFunction
from .growth import GrowthBound, mubar

_EPS_CORE_FACTOR = 0.4  # desingularization core, in units of particle spacing


@dataclass(frozen=True)
class VortexParticleField:
    """Quadrature discretization of compactly supported bounded vorticity."""

    positions: np.ndarray       # (N, 2) cell centers
    omega: np.ndarray           # (N,) vorticity values
    areas: np.ndarray           # (N,) positive cell areas
    support_radius: float
    spacing: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        om = np.asarray(self.omega, dtype=float)
        ar = np.asarray(self.areas, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or om.shape != (pos.shape[0],) or ar.shape != om.shape:
            raise BadArgument("field arrays must be (N,2), (N,), (N,)")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(om)) and np.all(np.isfinite(ar))):
            raise InvalidFunction("field contains non-finite entries")
        if pos.shape[0] and np.any(ar <= 0):
            raise BadArgument("cell areas must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "areas", ar)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def eps_core(self) -> float:
        return _EPS_CORE_FACTOR * self.spacing

    @property
    def circulation(self) -> float:
        return float(np.sum(self.omega * self.areas))

    @property
    def total_area(self) -> float:
        return float(np.sum(self.areas))

    @property
    def max_abs_omega(self) -> float:
        return float(np.max(np.abs(self.omega))) if self.n else 0.0

    def velocity(self, points) -> np.ndarray:
        """Self-induced K * omega at the given points (direct sum)."""
        if self.n == 0:
            raise EmptyField("velocity of an empty field")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = nbody.velocity_direct(pts, self.positions, self.omega * self.areas, self.eps_core)
        return out[0] if np.asarray(points).ndim == 1 else out

    def with_positions(self, positions: np.ndarray) -> "VortexParticleField":
        return VortexParticleField(
            positions=np.asarray(positions, dtype=float),
            omega=self.omega,
            areas=self.areas,
            support_radius=self.support_radius,
            spacing=self.spacing,
        )

    def scaled(self, factor: float) -> "VortexParticleField":
        """Same lattice with vorticity scaled by ``factor``."""
        return VortexParticleField(
            positions=self.positions,
            omega=self.omega * factor,
            areas=self.areas,
            support_radius=self.support_radius,
            spacing=self.spacing,
        )

    def shifted(self, offset) -> "VortexParticleField":
        return VortexParticleField(
            positions=self.positions + np.asarray(offset, dtype=float)[None, :],
            omega=self.omega,
            areas=self.areas,
            support_radius=self.support_radius,
            spacing=self.spacing,
        )


def make_rankine(R: float, omega0: float, n: int) -> VortexParticleField:
    """Disk of constant vorticity omega0 on |x| <= R, n cells per diameter."""
    if n < 8:
        raise BadArgument(f"need n >= 8 particles per diameter, got {n}")
    if R <= 0:
        raise BadArgument(f"disk radius must be positive, got {R}")
    sp = 2.0 * R / n
    c = (np.arange(n) + 0.5) * sp - R
    xx, yy = np.meshgrid(c, c, indexing="ij")
    inside = xx**2 + yy**2 <= R**2
    pos = np.stack([xx[inside], yy[inside]], axis=-1)
    count = pos.shape[0]
    return VortexParticleField(
        positions=pos,
        omega=np.full(count, float(omega0)),
        areas=np.full(count, sp * sp),
        support_radius=R,
        spacing=sp,
    )


def make_kirchhoff(a: float, b: float, omega0: float, n: int) -> VortexParticleField:
    """Ellipse x^2/a^2 + y^2/b^2 <= 1 of constant vorticity, n cells per 2a."""
    if n < 8:
        raise BadArgument(f"need n >= 8 particles per diameter, got {n}")
    if not a >= b > 0:
        raise BadArgument(f"ellipse axes must satisfy a >= b > 0, got a={a}, b={b}")
    sp = 2.0 * a / n
    cx = (np.arange(n) + 0.5) * sp - a
    ny = int(math.ceil(2.0 * b / sp))
    cy = (np.arange(ny) + 0.5) * sp - b
    xx, yy = np.meshgrid(cx, cy, indexing="ij")
    inside = (xx / a) ** 2 + (yy / b) ** 2 <= 1.0
    pos = np.stack([xx[inside], yy[inside]], axis=-1)
    count = pos.shape[0]
    return VortexParticleField(
        positions=pos,
        omega=np.full(count, float(omega0)),
        areas=np.full(count, sp * sp),
        support_radius=a,
        spacing=sp,
    )


def rankine_speed(r, R: float, omega0: float):
    """Exact azimuthal speed of the Rankine disk: omega r/2 in, omega R^2/(2r) out."""
    r = np.asarray(r, dtype=float)
    out = np.where(r <= R, 0.5 * omega0 * r, 0.5 * omega0 * R**2 / np.maximum(r, 1e-300))
    return out if out.ndim else float(out)


def rankine_velocity(points, R: float, omega0: float) -> np.ndarray:
    """Exact Rankine velocity field at the given points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(pts, axis=1)
    speed = rankine_speed(r, R, omega0)
    out = np.zeros_like(pts)
    good = r > 0
    out[good, 0] = -speed[good] * pts[good, 1] / r[good]
    out[good, 1] = speed[good] * pts[good, 0] / r[good]
    return out[0] if np.asarray(points).ndim == 1 else out


def kirchhoff_rotation_rate(a: float, b: float, omega0: float) -> float:
    """Rigid rotation rate a b omega / (a + b)^2 of the constant-vorticity ellipse."""
    return a * b * omega0 / (a + b) ** 2


@dataclass(frozen=True)
class AnalyticSField:
    """Radial-profile velocity field u = V(|x|) x_perp/|x| with growth bound h."""

    h: GrowthBound
    V: Callable
    dV: Callable
    label: str = "analytic"

    def u(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        out = np.zeros_like(pts)
        good = r > 0
        speed = np.asarray(self.V(r[good]), dtype=float)
        out[good, 0] = -speed * pts[good, 1] / r[good]
        out[good, 1] = speed * pts[good, 0] / r[good]
        return out[0] if np.asarray(points).ndim == 1 else out

    def omega(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        out = np.empty_like(r)
        good = r > 0
        out[good] = np.asarray(self.dV(r[good]), dtype=float) + np.asarray(
            self.V(r[good]), dtype=float
        ) / r[good]
        # V(0) = 0 and V differentiable: omega(0) = 2 V'(0)
        out[~good] = 2.0 * float(np.asarray(self.dV(1e-12)))
        return out if np.asarray(points).ndim > 1 else float(out[0])


def sample_grid(r_max: float, n_radial: int = 48, n_angular: int = 32) -> np.ndarray:
    """Deterministic polar sampling set including the origin."""
    r = np.geomspace(r_max * 1e-4, r_max, n_radial)
    th = np.linspace(0.0, 2.0 * math.pi, n_angular, endpoint=False)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)
    return np.concatenate([[[0.0, 0.0]], pts])


def s_h_norm(u, h: GrowthBound, grid: np.ndarray, omega_sup: float | None = None) -> float:
    """||u/h||_inf + ||omega||_inf sampled on the grid.

    ``u`` is an AnalyticSField, a VortexParticleField (particle-carried
    omega sup), or a callable points -> velocities with ``omega_sup``
    supplied separately.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise BadArgument("sample grid must be nonempty")
    if isinstance(u, AnalyticSField):
        vel = u.u(grid)
        om = float(np.max(np.abs(u.omega(grid))))
    elif isinstance(u, VortexParticleField):
        vel = u.velocity(grid)
        om = u.max_abs_omega
    else:
        vel = np.atleast_2d(np.asarray(u(grid), dtype=float))
        if omega_sup is None:
            raise BadArgument("callable velocity needs omega_sup")
        om = float(omega_sup)
    speeds = np.linalg.norm(vel, axis=1)
    hv = np.asarray(h.fn(np.linalg.norm(grid, axis=1)), dtype=float)
    return float(np.max(speeds / hv)) + om


def morrey_modulus_check(
    sfield: AnalyticSField,
    h: GrowthBound,
    n_samples: int = 10000,
    seed: int = 0,
    x_max: float = 50.0,
    y_factor: float = 1.0,
) -> float:
    """Largest |u(x+y) - u(x)| / (||u||_{S_h} h(x) mubar(|y|/h(x))) over samples.

    Draws |y| log-uniformly down to 1e-8 and up to y_factor (1 + |x|); the
    ratio is the measured modulus-of-continuity constant and must stay
    bounded under sample refinement for u in S_h.
    """
    rng = np.random.default_rng(seed)
    norm = s_h_norm(sfield, h, sample_grid(x_max))
    if norm == 0.0:
        return 0.0
    rx = x_max * rng.uniform(0, 1, n_samples) ** 0.5
    tx = rng.uniform(0, 2 * math.pi, n_samples)
    x = np.stack([rx * np.cos(tx), rx * np.sin(tx)], axis=-1)
    ymax = y_factor * (1.0 + rx)
    ry = ymax * np.exp(rng.uniform(np.log(1e-8), 0.0, n_samples))
    ty = rng.uniform(0, 2 * math.pi, n_samples)
    y = np.stack([ry * np.cos(ty), ry * np.sin(ty)], axis=-1)
    du = np.linalg.norm(sfield.u(x + y) - sfield.u(x), axis=1)
    hx = np.asarray(h.fn(rx), dtype=float)
    denom = norm * hx * np.asarray(mubar(ry / hx), dtype=float)
    good = denom > 0
    return float(np.max(du[good] / denom[good]))


# ---------------------------------------------------------------------------
# CSV snapshots
# ---------------------------------------------------------------------------

def save_field_csv(field: VortexParticleField, path) -> None:
    """Write particles as CSV with mandatory header x,y,omega,area."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "omega", "area"])
        for i in range(field.n):
            writer.writerow(
                [
                    f"{field.positions[i, 0]:.17g}",
                    f"{field.positions[i, 1]:.17g}",
                    f"{field.omega[i]:.17g}",
                    f"{field.areas[i]:.17g}",
                ]
            )


def load_field_csv(path, support_radius: float | None = None) -> VortexParticleField:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["x", "y", "omega", "area"]:
            raise BadArgument(f"field CSV must start with header x,y,omega,area, got {header}")
        rows = np.array([[float(v) for v in row] for row in reader])
    if rows.size == 0:
        raise EmptyField(f"no particles in {path}")
    areas = rows[:, 3]
    spacing = float(math.sqrt(np.median(areas)))
    pos = rows[:, :2]
    radius = support_radius if support_radius is not None else float(np.max(np.linalg.norm(pos, axis=1)))
    return VortexParticleField(
        positions=pos, omega=rows[:, 2], areas=areas, support_radius=radius, spacing=spacing
    )
