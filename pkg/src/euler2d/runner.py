"""Scenario-driven batch runner.

A scenario is described by a flat key = value config (TOML-style scalars
and one-level arrays, no tables); ``run_config`` executes it, writes the
diagnostic artifacts into the output directory, and returns the summary.
Outputs are deterministic for a fixed config and seed: manifests carry no
timestamps, floats are printed with %.17g, and JSON keys are sorted.

Exit-code contract (enforced by the service layer and the CLI):
0 success, 2 invalid config, 3 theorem-hypothesis violation, 4 numerical
blow-up.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from . import __version__
from .errors import BadArgument, BlowUp, HypothesisViolation, InvalidConfig
from . import fields as fieldmod
from . import flow as flowmod
from . import growth
from . import serfati as serfatimod
from . import stability as stabmod

SCENARIOS = (
    "rankine_steady",
    "kirchhoff",
    "pair_shift",
    "pair_amplitude",
    "serfati_residual",
    "growthbound_audit",
    "morrey_sweep",
)

_PAIR_SCENARIOS = ("pair_shift", "pair_amplitude")
_CONVERGENCE_SCENARIOS = ("rankine_steady", "kirchhoff", "serfati_residual")


@dataclass
class ScenarioConfig:
    scenario: str
    h: str = "const"
    zeta: str = "const"
    n: int = 48
    dt: float = 0.02
    T: float = 1.0
    lambdas: list = dc_field(default_factory=lambda: [0.5, 1.0, 2.0])
    epsilon: float = 0.01
    out: str = "runs"
    seed: int = 0
    threads: int = 1
    a_axis: float = 2.0
    b_axis: float = 1.0
    omega0: float = 1.0
    radius: float = 1.0

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise InvalidConfig(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        for name in ("n", "dt", "T", "threads", "a_axis", "b_axis", "omega0", "radius"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be positive, got {getattr(self, name)}")
        if self.epsilon < 0:
            raise InvalidConfig(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.seed < 0:
            raise InvalidConfig(f"seed must be nonnegative, got {self.seed}")
        if not self.lambdas or any(l <= 0 for l in self.lambdas):
            raise InvalidConfig(f"lambda list must be positive, got {self.lambdas}")
        try:
            hb = growth.builtin_bound(self.h)
            zb = growth.builtin_bound(self.zeta)
        except BadArgument as exc:
            raise InvalidConfig(str(exc)) from exc
        if self.scenario in _PAIR_SCENARIOS:
            r = np.geomspace(1e-3, 1e3, 48)
            if np.any(np.asarray(zb.fn(r)) < np.asarray(hb.fn(r)) * (1 - 1e-12)):
                raise InvalidConfig(f"pair scenarios need zeta >= h, got zeta={self.zeta}, h={self.h}")
        steps = self.T / self.dt
        if abs(round(steps) - steps) > 1e-9:
            raise InvalidConfig(f"T={self.T} must be an integer multiple of dt={self.dt}")


def parse_config_text(text: str) -> dict:
    """Parse the flat key = value config format (one binding per line)."""
    out: dict = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {ln}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise InvalidConfig(f"line {ln}: empty key")
        out[key] = _parse_value(val, ln)
    return out


def _parse_value(val: str, ln: int):
    if val.startswith("[") and val.endswith("]"):
        inner = val[1:-1].strip()
        return [] if not inner else [_parse_scalar(v.strip(), ln) for v in inner.split(",")]
    return _parse_scalar(val, ln)


def _parse_scalar(val: str, ln: int):
    if len(val) >= 2 and val[0] == val[-1] and val[0] in "\"'":
        return val[1:-1]
    if val in ("true", "false"):
        return val == "true"
    try:
        return int(val)
    except ValueError:
        pass
    try:
        return float(val)
    except ValueError:
        raise InvalidConfig(f"line {ln}: cannot parse value {val!r}")


_KEY_ALIASES = {"lambda": "lambdas", "a": "a_axis", "b": "b_axis"}


def config_from_mapping(data: dict) -> ScenarioConfig:
    known = {f for f in ScenarioConfig.__dataclass_fields__}
    kwargs = {}
    for key, val in data.items():
        key = _KEY_ALIASES.get(key, key)
        if key not in known:
            raise InvalidConfig(f"unknown config key {key!r}")
        kwargs[key] = val
    if "scenario" not in kwargs:
        raise InvalidConfig("config must set a scenario")
    if "lambdas" in kwargs and not isinstance(kwargs["lambdas"], list):
        kwargs["lambdas"] = [kwargs["lambdas"]]
    try:
        cfg = ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from exc
    cfg.validate()
    return cfg


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    return config_from_mapping(parse_config_text(text))


@dataclass
class RunResult:
    summary: list
    constants: dict
    artifacts: list
    manifest_path: str


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_rows_csv(path: str, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _apply_threads(threads: int) -> None:
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(threads, limit)))


def run_config(cfg: ScenarioConfig, out_dir: str | None = None) -> RunResult:
    """Execute one scenario, write its artifacts, and return the summary."""
    cfg.validate()
    _apply_threads(cfg.threads)
    out = out_dir or cfg.out
    os.makedirs(out, exist_ok=True)
    driver = _DRIVERS[cfg.scenario]
    summary, constants, artifacts = driver(cfg, out)
    manifest = {
        "config": asdict(cfg),
        "version": __version__,
        "constants": constants,
        "summary": summary,
    }
    manifest_path = os.path.join(out, "manifest.json")
    _write_json(manifest_path, manifest)
    return RunResult(summary=summary, constants=constants, artifacts=artifacts, manifest_path=manifest_path)


# ---------------------------------------------------------------------------
# scenario drivers
# ---------------------------------------------------------------------------

def _ring(radius: float, count: int, phase: float = 0.0) -> np.ndarray:
    th = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False) + phase
    return np.stack([radius * np.cos(th), radius * np.sin(th)], axis=-1)


def _scenario_growthbound_audit(cfg: ScenarioConfig, out: str):
    bound = growth.builtin_bound(cfg.h)
    report = growth.validate_tier(bound)
    summary = [f"bound {bound.label}: tier {report.tier.name}"]
    constants: dict = {"tier": report.tier.name}
    for d in report.diagnostics:
        if not d.passed:
            summary.append(f"failed predicate {d.name} (witness {d.witness}) {d.detail}")
    rows = []
    rs = np.geomspace(0.05, 100.0, 40)
    wp = report.tier >= growth.Tier.WELL_POSEDNESS
    for r in rs:
        h1 = growth.compute_H(bound, float(r)) if report.tier >= growth.Tier.GROWTH else math.nan
        h2 = growth.compute_H(bound, float(r), power=2) if wp else math.nan
        if wp:
            e, mu = growth.compute_E_and_mu(bound, float(r))
        else:
            e, mu = math.nan, math.nan
        rows.append([float(r), h1, h2, e, mu])
    _write_rows_csv(os.path.join(out, "audit.csv"), ["r", "H1", "H2", "E", "mu"], rows)
    artifacts = ["audit.csv"]
    if wp:
        env = growth.mu_envelope(bound)
        t_max, _ = growth.existence_time_estimate(bound, lambda0=1.0)
        constants["mu_constant"] = env.constant
        constants["mu_shape"] = env.shape_name
        constants["existence_t_max"] = t_max if math.isfinite(t_max) else "inf"
        summary.append(f"mu = {env.constant:.6g} * {env.shape_name}")
        summary.append(f"existence-time estimate (Lambda0=1): {t_max if math.isfinite(t_max) else 'inf'}")
    return summary, constants, artifacts


def _probe_ring_points(r1: float, r2: float) -> np.ndarray:
    return np.concatenate([_ring(r1, 6), _ring(r2, 6, phase=0.26179938779914943)])


def _scenario_rankine_steady(cfg: ScenarioConfig, out: str):
    field = fieldmod.make_rankine(cfg.radius, cfg.omega0, cfg.n)
    probes = _probe_ring_points(1.3 * cfg.radius, 2.0 * cfg.radius)
    traj = flowmod.advect(field, cfg.T, cfg.dt, probes=probes)
    drift = float(
        np.max(
            np.linalg.norm(traj.probe_velocities - traj.probe_velocities[:, :1, :], axis=2)
        )
    )
    w = traj.strength
    centroids = np.einsum("pkc,p->kc", traj.tracks[: traj.n_active], w) / np.sum(w)
    centroid_drift = float(np.max(np.linalg.norm(centroids - centroids[0], axis=1)))
    ratios = flowmod.flow_bound_check(traj, growth.builtin_bound(cfg.h))
    inner = np.where(np.linalg.norm(field.positions, axis=1) < 0.5 * cfg.radius)[0]
    hull = flowmod.hull_area_series(traj, inner)
    hull_drift = float(np.max(np.abs(hull - hull[0])) / hull[0])

    rows = []
    for k in range(len(traj.times)):
        for p in range(probes.shape[0]):
            rows.append(
                [float(traj.times[k]), p, float(traj.probe_velocities[p, k, 0]), float(traj.probe_velocities[p, k, 1])]
            )
    _write_rows_csv(os.path.join(out, "probe_velocities.csv"), ["t", "probe_id", "ux", "uy"], rows)
    fieldmod.save_field_csv(field.with_positions(traj.active_positions_at(len(traj.times) - 1)),
                            os.path.join(out, "field_final.csv"))
    constants = {
        "probe_drift": drift,
        "centroid_drift": centroid_drift,
        "C0": traj.C0,
        "flow_bound_max_ratio": float(np.max(ratios[1:])) if len(ratios) > 1 else 0.0,
        "hull_area_drift": hull_drift,
        "error_metric": drift,
    }
    summary = [
        f"rankine n={cfg.n} T={cfg.T}: probe velocity drift {drift:.3e}",
        f"centroid drift {centroid_drift:.3e}, hull area drift {hull_drift:.3e}",
        f"flow-bound ratio {constants['flow_bound_max_ratio']:.4f} vs C0 {traj.C0:.4f}",
    ]
    return summary, constants, ["probe_velocities.csv", "field_final.csv"]


def _moment_angle_series(traj) -> np.ndarray:
    w = traj.strength
    phis = np.empty(len(traj.times))
    for k in range(len(traj.times)):
        p = traj.active_positions_at(k)
        cen = np.sum(p * w[:, None], axis=0) / np.sum(w)
        d = p - cen
        m11 = float(np.sum(w * d[:, 0] ** 2))
        m22 = float(np.sum(w * d[:, 1] ** 2))
        m12 = float(np.sum(w * d[:, 0] * d[:, 1]))
        # atan2(2 M12, M11 - M22) is twice the principal-axis angle
        phis[k] = math.atan2(2.0 * m12, m11 - m22)
    return 0.5 * np.unwrap(phis)


def estimate_rotation_rate(traj) -> float:
    """Least-squares slope of the patch principal-axis angle."""
    theta = _moment_angle_series(traj)
    A = np.vstack([traj.times, np.ones_like(traj.times)]).T
    return float(np.linalg.lstsq(A, theta, rcond=None)[0][0])


def _scenario_kirchhoff(cfg: ScenarioConfig, out: str):
    field = fieldmod.make_kirchhoff(cfg.a_axis, cfg.b_axis, cfg.omega0, cfg.n)
    traj = flowmod.advect(field, cfg.T, cfg.dt)
    omega_hat = estimate_rotation_rate(traj)
    omega_ref = fieldmod.kirchhoff_rotation_rate(cfg.a_axis, cfg.b_axis, cfg.omega0)
    rel_err = abs(omega_hat - omega_ref) / omega_ref
    ratios = flowmod.flow_bound_check(traj, growth.builtin_bound(cfg.h))
    moc_series, moc_fit = flowmod.moc_check(traj, n_pairs=1500, seed=cfg.seed)
    inner = np.where(np.linalg.norm(field.positions, axis=1) < 0.5 * cfg.b_axis)[0]
    hull = flowmod.hull_area_series(traj, inner)
    hull_drift = float(np.max(np.abs(hull - hull[0])) / hull[0])

    theta = _moment_angle_series(traj)
    _write_rows_csv(
        os.path.join(out, "axis_angle.csv"),
        ["t", "theta"],
        [[float(t), float(a)] for t, a in zip(traj.times, theta)],
    )
    flowmod.save_trajectories_csv(
        traj, os.path.join(out, "trajectories.csv"),
        track_ids=np.arange(0, traj.n_active, max(1, traj.n_active // 64)),
        stride=max(1, len(traj.times) // 64),
    )
    constants = {
        "Omega_measured": omega_hat,
        "Omega_reference": omega_ref,
        "Omega_rel_err": rel_err,
        "C0": traj.C0,
        "flow_bound_max_ratio": float(np.max(ratios[1:])),
        "moc_fitted_C": moc_fit,
        "hull_area_drift": hull_drift,
        "circulation": field.circulation,
        "error_metric": rel_err,
    }
    summary = [
        f"kirchhoff n={cfg.n} dt={cfg.dt} T={cfg.T}: Omega {omega_hat:.6f} vs {omega_ref:.6f} (rel err {rel_err:.3%})",
        f"flow-bound ratio {constants['flow_bound_max_ratio']:.4f} vs C0 {traj.C0:.4f}; moc C(T) {moc_fit:.4f}",
        f"hull area drift {hull_drift:.3e}",
    ]
    return summary, constants, ["axis_angle.csv", "trajectories.csv"]


def _serfati_eval_points(cfg: ScenarioConfig) -> np.ndarray:
    return np.concatenate(
        [_ring(1.2 * cfg.a_axis, 6), _ring(1.6 * cfg.a_axis, 6, phase=0.3)]
    )


def _scenario_serfati_residual(cfg: ScenarioConfig, out: str):
    field = fieldmod.make_kirchhoff(cfg.a_axis, cfg.b_axis, cfg.omega0, cfg.n)
    traj = flowmod.advect(field, cfg.T, cfg.dt)
    times = np.array([0.5 * cfg.T, cfg.T])
    ev = serfatimod.SerfatiEvaluator(
        traj, _serfati_eval_points(cfg), times, np.asarray(cfg.lambdas, dtype=float)
    )
    res = ev.residual()
    _write_json(os.path.join(out, "residuals.json"), {"rows": res.rows(scenario=cfg.scenario)})
    constants = {
        "residual_norms": {f"{lam:g}": float(v) for lam, v in zip(res.lambdas, res.residual_norm)},
        "window_radius": res.window_radius,
        "tail_estimate": res.tail_estimate,
        "error_metric": float(np.max(res.residual_norm)),
    }
    summary = [
        f"identity residual n={cfg.n} dt={cfg.dt} T={cfg.T}: "
        + ", ".join(f"lam={lam:g}: {v:.3e}" for lam, v in zip(res.lambdas, res.residual_norm)),
        f"far-field window radius {res.window_radius:.1f} (tail estimate {res.tail_estimate:.2e})",
    ]
    return summary, constants, ["residuals.json"]


def _pair_fields(cfg: ScenarioConfig):
    f1 = fieldmod.make_rankine(cfg.radius, cfg.omega0, cfg.n)
    if cfg.scenario == "pair_shift":
        f2 = f1.shifted([cfg.epsilon, 0.0])
        omega_diff_sup = abs(cfg.omega0) if cfg.epsilon > 0 else 0.0
    else:
        f2 = f1.scaled(1.0 + cfg.epsilon)
        omega_diff_sup = abs(cfg.omega0) * cfg.epsilon
    return f1, f2, omega_diff_sup


def _scenario_pair(cfg: ScenarioConfig, out: str):
    zeta = growth.builtin_bound(cfg.zeta)
    h = growth.builtin_bound(cfg.h)
    f1, f2, omega_diff_sup = _pair_fields(cfg)
    pair = stabmod.run_pair(
        f1, f2, zeta, h, cfg.T, cfg.dt, meta={"scenario": cfg.scenario, "epsilon": cfg.epsilon}
    )
    rep = pair.report
    rep.envelopes["m_small_data"] = stabmod.fit_m_envelope(rep)
    rep.envelopes["m_linear"] = stabmod.fit_m_linear(rep)
    rep.envelopes["q"] = stabmod.fit_q_envelope(rep)
    rep.envelopes["aT_simple"] = stabmod.aT_simple_bound(rep, omega_diff_sup)
    # allow the time-integrator's consistency order (RK4 vs trapezoid)
    eta_le_m = bool(np.all(rep.eta <= rep.M * (1 + 1e-6) + 1e-12))
    rep.to_csv(os.path.join(out, "stability.csv"))
    _write_json(os.path.join(out, "stability.json"), rep.to_json_dict())
    constants = {
        "a0": rep.a0,
        "aT": rep.aT,
        "M_final": float(rep.M[-1]),
        "Q_max": float(np.max(rep.Q)),
        "eta_le_M": eta_le_m,
        "envelopes": rep.envelopes,
    }
    summary = [
        f"{cfg.scenario} eps={cfg.epsilon:g} n={cfg.n}: a(T)={rep.aT:.4e}, M(T)={rep.M[-1]:.4e}, "
        f"max Q={np.max(rep.Q):.4e}",
        f"eta <= M: {eta_le_m}; M-envelope C={rep.envelopes['m_small_data']['C']:.4g}; "
        f"Q-envelope C={rep.envelopes['q']['C']:.4g}",
        f"a(T) <= C ||du0||_S_zeta with C={rep.envelopes['aT_simple']['C']:.4g}",
    ]
    return summary, constants, ["stability.csv", "stability.json"]


_MORREY_PROFILES = {
    "const": ("V(r)=r/(1+r)", lambda r: r / (1.0 + r), lambda r: 1.0 / (1.0 + r) ** 2),
}


def _morrey_profile_for(bound: growth.GrowthBound):
    if bound.label in _MORREY_PROFILES:
        return _MORREY_PROFILES[bound.label]
    if bound.label.startswith("power:"):
        alpha = float(bound.label.split(":")[1])
        return (
            f"V(r)=r*(1+r)^(a-1), a={alpha:g}",
            lambda r: r * (1.0 + r) ** (alpha - 1.0),
            lambda r: (1.0 + r) ** (alpha - 1.0) + r * (alpha - 1.0) * (1.0 + r) ** (alpha - 2.0),
        )
    if bound.label == "quarterlog":
        return (
            "V(r)=h2(r)*r/(1+r)",
            lambda r: np.log(np.e + r) ** 0.25 * r / (1.0 + r),
            lambda r: (
                0.25 * np.log(np.e + r) ** (-0.75) / (np.e + r) * r / (1.0 + r)
                + np.log(np.e + r) ** 0.25 / (1.0 + r) ** 2
            ),
        )
    raise InvalidConfig(f"no analytic profile for bound {bound.label}")


def _scenario_morrey_sweep(cfg: ScenarioConfig, out: str):
    bound = growth.builtin_bound(cfg.h)
    name, V, dV = _morrey_profile_for(bound)
    sfield = fieldmod.AnalyticSField(h=bound, V=V, dV=dV, label=name)
    rows = []
    consts = []
    for n_samples in (2000, 10000):
        c = fieldmod.morrey_modulus_check(sfield, bound, n_samples=n_samples, seed=cfg.seed)
        rows.append([n_samples, float(c)])
        consts.append(c)
    _write_rows_csv(os.path.join(out, "morrey.csv"), ["n_samples", "fitted_C"], rows)
    stable = abs(consts[1] - consts[0]) <= 0.5 * max(consts)
    constants = {"profile": name, "fitted_C": consts[-1], "stable": bool(stable)}
    summary = [
        f"modulus-of-continuity sweep for {bound.label} ({name}): C={consts[-1]:.4f} "
        f"(coarse {consts[0]:.4f})",
    ]
    return summary, constants, ["morrey.csv"]


_DRIVERS = {
    "growthbound_audit": _scenario_growthbound_audit,
    "rankine_steady": _scenario_rankine_steady,
    "kirchhoff": _scenario_kirchhoff,
    "serfati_residual": _scenario_serfati_residual,
    "pair_shift": _scenario_pair,
    "pair_amplitude": _scenario_pair,
    "morrey_sweep": _scenario_morrey_sweep,
}


def run_convergence(cfg: ScenarioConfig, levels: int, out_dir: str | None = None) -> RunResult:
    """Rerun a scenario with (n, 1/dt) doubled per level; tabulate the error."""
    if levels < 2:
        raise InvalidConfig(f"need at least 2 levels, got {levels}")
    if cfg.scenario not in _CONVERGENCE_SCENARIOS:
        raise InvalidConfig(
            f"convergence supports {_CONVERGENCE_SCENARIOS}, got {cfg.scenario!r}"
        )
    cfg.validate()
    out = out_dir or cfg.out
    os.makedirs(out, exist_ok=True)
    rows = []
    metrics = []
    per_level_constants = []
    for level in range(levels):
        sub = ScenarioConfig(**{**asdict(cfg), "n": cfg.n * 2**level, "dt": cfg.dt / 2**level,
                                "out": os.path.join(out, f"level{level}")})
        res = run_config(sub, out_dir=sub.out)
        metric = float(res.constants["error_metric"])
        metrics.append(metric)
        per_level_constants.append(res.constants)
        order = math.log2(metrics[-2] / metric) if level and metric > 0 else math.nan
        rows.append([level, sub.n, sub.dt, metric, order])
    _write_rows_csv(os.path.join(out, "convergence.csv"),
                    ["level", "n", "dt", "error", "observed_order"], rows)
    summary = [
        f"level {int(r[0])}: n={int(r[1])} dt={r[2]:g} error={r[3]:.4e}"
        + (f" order={r[4]:.2f}" if not math.isnan(r[4]) else "")
        for r in rows
    ]
    constants = {"errors": metrics, "levels": per_level_constants}
    manifest = {
        "config": asdict(cfg),
        "levels": levels,
        "version": __version__,
        "constants": constants,
        "summary": summary,
    }
    manifest_path = os.path.join(out, "manifest.json")
    _write_json(manifest_path, manifest)
    return RunResult(summary=summary, constants=constants,
                     artifacts=["convergence.csv"], manifest_path=manifest_path)
