"""Runners behind the command line: single simulations, epsilon ladders, reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import geometry as geo
from .compressible import energy, integrate, stable_dt
from .config import ExperimentConfig
from .diagnostics import (fast_fast_residual, fast_slow_average, fit_rate, make_test_function,
                          slow_residual, state_norms, strong_convergence_error, weak_pairing)
from .elliptic import harmonic_basis
from .errors import ConfigError, MachlabError, NumericalError
from .incompressible import enstrophy, inc_integrate, kinetic_energy
from .initial import make_initial_state, random_state
from .projection import State, apply_K, apply_L, project_Q, project_velocity, state_inner
from .rsw import (LEAST_SQUARES, RswState, k_integral, rsw_fast_fast_residual, rsw_integrate,
                  rsw_K, rsw_L, rsw_project_P, rsw_project_Q, rsw_stable_dt)
from .snapshot import write_snapshot

log = logging.getLogger(__name__)

TIMESERIES_COLUMNS = ("time", "l2_rho", "l2_u", "l2_uQ", "l2_uP", "mass", "energy")
REPORT_COLUMNS = ("epsilon", "error", "normalizer", "slope_running")


def snapshot_stride(cfg, U0, dt0):
    """Steps between snapshots: fixed, or about eps/snapshots_per_eps in time."""
    if cfg.record_every:
        return cfg.record_every
    return max(1, round(U0.epsilon / cfg.snapshots_per_eps / dt0))


def run_compressible(cfg, epsilon):
    U0 = make_initial_state(cfg, epsilon)
    stride = snapshot_stride(cfg, U0, stable_dt(U0, cfg.solver_config()))
    return integrate(U0, cfg.solver_config(stride))


def run_rsw(cfg, epsilon):
    U0 = make_initial_state(cfg, epsilon)
    U0 = RswState(U0.grid, U0.rho, U0.u, epsilon, 0.0)
    stride = snapshot_stride(cfg, U0, rsw_stable_dt(U0, cfg.solver_config()))
    return rsw_integrate(U0, cfg.solver_config(stride))


def reference_flow(cfg):
    """Incompressible flow from the slow initial velocity; it does not depend on eps."""
    U0 = make_initial_state(cfg, cfg.epsilon)
    return inc_integrate(U0.grid, project_velocity(U0.grid, U0.u), cfg.t_end, cfg.cfl)


def _format(x):
    return repr(float(x))


def _write_csv(path, columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _save_snapshots(out, snaps, cfg):
    ext = "txt" if cfg.encoding == "text" else "bin"
    last = len(snaps) - 1
    for i, snap in enumerate(snaps):
        if i % cfg.save_every == 0 or i == last:
            write_snapshot(out / f"snap_{i:05d}.{ext}", snap, cfg.encoding)


def compressible_timeseries(traj):
    law = traj.config.pressure
    rows = []
    for s in traj.snapshots:
        n = state_norms(s)
        rows.append([s.time, n["l2_rho"], n["l2_u"], n["l2_uQ"], n["l2_uP"],
                     geo.integrate(s.grid, s.rho), energy(s, law)])
    return rows


def _point_dir(out, epsilon):
    d = Path(out) / f"eps_{epsilon:g}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def simulate(cfg, out):
    out = Path(out)
    results = []
    for eps in cfg.epsilons:
        d = _point_dir(out, eps) if len(cfg.epsilons) > 1 else out
        d.mkdir(parents=True, exist_ok=True)
        traj = run_compressible(cfg, eps)
        _save_snapshots(d, traj.snapshots, cfg)
        rows = compressible_timeseries(traj)
        _write_csv(d / "timeseries.csv", TIMESERIES_COLUMNS, [[_format(x) for x in r] for r in rows])
        log.info("eps=%g: %d snapshots, dt=%.3e, max mass correction %.1e",
                 eps, len(traj), traj.dt, traj.corrections["mass"])
        results.append(traj)
    return results


def simulate_inc(cfg, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    g = cfg.grid()
    ref = reference_flow(cfg)
    snaps = [State(g, np.zeros(g.shape), v, 0.0, t) for t, v in ref]
    _save_snapshots(out, snaps, cfg)
    rows = []
    for t, v in ref:
        div = geo.divergence(g, v)[:, 1:-1]
        rows.append([_format(t), _format(geo.l2_norm(g, v)), _format(kinetic_energy(g, v)),
                     _format(enstrophy(g, v)), _format(np.abs(div).max())])
    _write_csv(out / "timeseries.csv", ("time", "l2_u", "energy", "enstrophy", "max_div"), rows)
    log.info("incompressible run: %d snapshots to t=%g", len(ref), cfg.t_end)
    return ref


def rsw_energy(U):
    g = U.grid
    kinetic = 0.5 * (1.0 + U.epsilon * U.rho) * (U.u**2).sum(axis=0)
    return geo.integrate(g, kinetic + 0.5 * U.rho**2)


def simulate_rsw(cfg, out):
    out = Path(out)
    results = []
    for eps in cfg.epsilons:
        d = _point_dir(out, eps) if len(cfg.epsilons) > 1 else out
        d.mkdir(parents=True, exist_ok=True)
        traj = run_rsw(cfg, eps)
        _save_snapshots(d, traj.snapshots, cfg)
        rows = []
        for s in traj.snapshots:
            slow = rsw_project_P(s)
            g = s.grid
            rows.append([s.time, geo.l2_norm(g, s.rho), geo.l2_norm(g, s.u),
                         geo.l2_norm(g, s.u - slow.u), geo.l2_norm(g, slow.u),
                         geo.integrate(g, s.rho), rsw_energy(s), k_integral(s)])
        _write_csv(d / "timeseries.csv", TIMESERIES_COLUMNS + ("k_integral",),
                   [[_format(x) for x in r] for r in rows])
        results.append(traj)
    return results


def decompose(cfg, out):
    """Write the initial state and its slow and fast parts for the first epsilon."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    U0 = make_initial_state(cfg, cfg.epsilon)
    dec = project_Q(U0)
    ext = "txt" if cfg.encoding == "text" else "bin"
    for name, s in (("initial", U0), ("slow", dec.slow), ("fast", dec.fast)):
        write_snapshot(out / f"{name}.{ext}", s, cfg.encoding)
    g = U0.grid
    summary = {
        "epsilon": cfg.epsilon,
        "l2_state": U0.norm(),
        "l2_slow": dec.slow.norm(),
        "l2_fast": dec.fast.norm(),
        "fast_fraction": dec.fast.norm() / max(U0.norm(), 1e-300),
        "harmonic_coefficients": [float(c) for c in dec.harmonic_coeffs],
        "potential_l2": geo.l2_norm(g, dec.potential),
    }
    (out / "decomposition.json").write_text(json.dumps(summary, indent=2) + "\n")
    return dec, summary


def evaluate_point(args):
    """One ladder point; returns a JSON-ready dict.  Module-level for process pools."""
    ini, epsilon, experiments, ref = args
    cfg = ExperimentConfig.from_string(ini)
    point = {"epsilon": epsilon, "status": "ok", "results": {}}
    try:
        traj = run_compressible(cfg, epsilon)
        U0 = traj.snapshots[0]
        point.update(n_snapshots=len(traj), dt=traj.dt,
                     max_norm_ratio=max(s.norm() for s in traj.snapshots) / U0.norm(),
                     corrections=traj.corrections)
        law = cfg.pressure
        for exp in experiments:
            if exp == "strong":
                point["results"][exp] = (strong_convergence_error(traj, ref, cfg.norm_order), 1.0)
            elif exp == "weak":
                test = make_test_function(U0.grid, cfg.test_preset, cfg.t_end)
                point["results"][exp] = weak_pairing(traj, test)
            elif exp == "fastslow":
                point["results"][exp] = (fast_slow_average(traj, law, uniform=True), 1.0)
            elif exp == "slowres":
                point["results"][exp] = (float(slow_residual(traj)[1].max()), 1.0)
            elif exp.startswith("weak:"):
                test = make_test_function(U0.grid, exp.split(":", 1)[1], cfg.t_end)
                point["results"][exp] = weak_pairing(traj, test)
            else:
                raise ConfigError(f"unknown experiment {exp!r}")
    except ConfigError:
        raise
    except MachlabError as exc:
        point["status"] = f"failed: {type(exc).__name__}: {exc}"
    return point


def ladder_points(cfg, experiments, workers=1):
    """Evaluate ``experiments`` at every epsilon of the ladder; ordered as ``cfg.epsilons``."""
    ref = reference_flow(cfg) if "strong" in experiments else None
    ini = cfg.to_ini()
    jobs = [(ini, eps, tuple(experiments), ref) for eps in cfg.epsilons]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate_point, jobs))
    return [evaluate_point(job) for job in jobs]


def report_rows(eps, errors, normalizers):
    rows = []
    for i in range(len(eps)):
        slope = ""
        if i >= 1:
            x = np.log(eps[: i + 1])
            y = np.log(np.maximum(np.array(errors[: i + 1]) / np.array(normalizers[: i + 1]), 1e-15))
            slope = _format(np.polyfit(x, y, 1)[0])
        rows.append([_format(eps[i]), _format(errors[i]), _format(normalizers[i]), slope])
    return rows


def loglog_svg(eps, values, title, width=480, height=360):
    """Minimal log-log line chart with a slope-one guide."""
    pad = 50
    lx, ly = np.log10(eps), np.log10(np.maximum(values, 1e-300))
    x0, x1 = lx.min() - 0.1, lx.max() + 0.1
    y0, y1 = min(ly.min(), ly[0] - (lx[0] - lx.min())) - 0.2, ly.max() + 0.2

    def px(x, y):
        return (pad + (x - x0) / (x1 - x0) * (width - 2 * pad),
                height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad))

    pts = " ".join("%.2f,%.2f" % px(x, y) for x, y in zip(lx, ly))
    guide = " ".join("%.2f,%.2f" % px(x, ly[0] + (x - lx[0])) for x in (lx.min(), lx.max()))
    marks = "".join('<circle cx="%.2f" cy="%.2f" r="3"/>' % px(x, y) for x, y in zip(lx, ly))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">log10 epsilon</text>\n'
        f'<text x="14" y="{height / 2}" font-size="12" transform="rotate(-90 14 {height / 2})"'
        f' text-anchor="middle">log10 error</text>\n'
        f'<polyline points="{guide}" fill="none" stroke="gray" stroke-dasharray="4 4"/>\n'
        f'<polyline points="{pts}" fill="none" stroke="navy" stroke-width="2"/>\n'
        f'<g fill="navy">{marks}</g>\n'
        "</svg>\n"
    )


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_experiment(cfg, out=None, workers=1, experiment=None):
    """Run one ladder experiment, write report.csv, report.svg and manifest.json."""
    experiment = experiment or cfg.experiment
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    points = ladder_points(cfg, (experiment,), workers)

    point_files = []
    for p in points:
        d = _point_dir(out / "points", p["epsilon"])
        path = d / "point.json"
        path.write_text(json.dumps(p, indent=2, sort_keys=True) + "\n")
        point_files.append(path)

    good = [p for p in points if p["status"] == "ok"]
    eps = [p["epsilon"] for p in good]
    errors = [p["results"][experiment][0] for p in good]
    norms = [p["results"][experiment][1] for p in good]
    _write_csv(out / "report.csv", REPORT_COLUMNS, report_rows(eps, errors, norms))

    meta = {"experiment": experiment, "grid": f"{cfg.kind} {cfg.n_periodic}x{cfg.n_wall}",
            "t_end": cfg.t_end, "failed": [p["epsilon"] for p in points if p["status"] != "ok"]}
    manifest = {"machlab_version": __version__, "config": cfg.to_ini(), "experiment": experiment,
                "points": [{k: p[k] for k in ("epsilon", "status")} for p in points]}
    if len(good) < 3:
        manifest["status"] = "insufficient surviving points"
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        raise NumericalError(f"only {len(good)} ladder points survived; a rate needs 3")

    report = fit_rate(zip(eps, np.array(errors) / np.array(norms)), meta)
    (out / "report.svg").write_text(
        loglog_svg(np.array(report.epsilons), np.array(report.errors),
                   f"{experiment}: slope {report.fitted_slope:.3f}"))
    files = [out / "report.csv", out / "report.svg"] + point_files
    manifest.update(status="ok", fitted_slope=report.fitted_slope, fit_residual=report.fit_residual,
                    floored=report.floored,
                    checksums={str(f.relative_to(out)): _sha256(f) for f in files})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    log.info("%s: slope %.3f, fit residual %.3f", experiment, report.fitted_slope,
             report.fit_residual)
    return report


def _rel(grid, a, b):
    return geo.l2_norm(grid, a) / max(b, 1e-300)


def check_invariants(cfg, n_states=10, seed=None, tol=1e-8):
    """Projection algebra, harmonic fields and fast-fast cancellation on random states.

    Returns ``[(name, worst_value, tolerance), ...]``.
    """
    g = cfg.grid()
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    law = cfg.pressure
    worst = {}

    def record(name, value, limit=tol):
        worst[name] = (max(worst.get(name, (0.0,))[0], float(value)), limit)

    for _ in range(n_states):
        U = random_state(g, rng, cfg.epsilon, 0.5)
        n = U.norm()
        dec = project_Q(U)
        slow, fast = dec.slow, dec.fast
        record("P idempotent", _rel(g, project_Q(slow).slow.packed() - slow.packed(), n))
        record("Q idempotent", _rel(g, project_Q(fast).fast.packed() - fast.packed(), n))
        record("P + Q = I", _rel(g, slow.packed() + fast.packed() - U.packed(), n))
        record("<PU, QU> = 0", abs(state_inner(slow, fast)) / n**2)
        record("K Q = 0", _rel(g, apply_K(g, fast.u), n))
        record("L P = 0", sum(_rel(g, x, n) for x in apply_L(g, slow.rho, slow.u)))
        record("fast-fast residual", fast_fast_residual(U, law), 1e-6)

        R = RswState(g, U.rho, U.u, U.epsilon)
        rs = rsw_project_P(R)
        rq = rsw_project_Q(R)
        record("RSW P idempotent", _rel(g, rsw_project_P(rs).packed() - rs.packed(), n))
        record("RSW <PU, QU> = 0", abs(state_inner(rs, rq)) / n**2)
        record("RSW K Q = 0", _rel(g, rsw_K(rq), n))
        record("RSW L P = 0", sum(_rel(g, x, n) for x in rsw_L(rs)))
        record("RSW elliptic = least squares",
               _rel(g, rs.packed() - rsw_project_P(R, LEAST_SQUARES).packed(), n))
        record("RSW fast-fast residual", rsw_fast_fast_residual(R), 1e-6)

    for h in harmonic_basis(g):
        H = State(g, np.zeros(g.shape), h, cfg.epsilon)
        record("harmonic P h = h", _rel(g, project_Q(H).slow.u - h, 1.0))
        record("harmonic div, curl", geo.l2_norm(g, geo.divergence(g, h))
               + geo.l2_norm(g, geo.curl2d(g, h)))
    return [(name, value, limit) for name, (value, limit) in worst.items()]
