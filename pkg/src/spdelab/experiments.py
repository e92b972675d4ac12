"""Experiment drivers and CSV/JSON result emission.

Each driver takes a validated :class:`~spdelab.config.ExperimentConfig` and
returns an :class:`ExperimentResult`: named CSV tables, JSON documents and a
small JSON-ready summary. Ensembles over run ids are integrated as one
vectorised batch, so results never depend on scheduling. All randomness is
drawn from the counter-based streams keyed by ``(seed, run id, step)``.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from spdelab import __version__
from spdelab.analysis import (bipolar_coordinates, discrete_stencil_constant,
                              histogram_quantiles)
from spdelab.config import ExperimentConfig
from spdelab.grid import PeriodicGrid, format_float, l2_norm_array
from spdelab.models import (ConstantCorrection, DivergenceCorrection, PolynomialCorrection,
                            burgers_conservative, burgers_fd, burgers_general,
                            corrected_counterpart, gradient_sin2, inviscid_regime,
                            limit_burgers, multiplicative_cos3, predicted_polynomial_target,
                            strange_spde)
from spdelab.noise import BatchNoise, NoiseBank, NoiseSpec
from spdelab.operators import CENTRED, LEFT, RIGHT, StencilSpec
from spdelab.optimize import SimplexConfig, fit_correction_polynomial
from spdelab.linalg import BACKEND_OPERATOR
from spdelab.stepper import StepperConfig, default_dt, simulate, steps_for

# one line per output file, shown by ``spdelab run --help``
CSV_SCHEMAS = {
    "scheme_comparison_means.csv": "seed,stencil,mean,l2_norm,diverged",
    "scheme_comparison_final.csv": "seed,stencil,x,u",
    "scheme_comparison_snapshots.csv": "seed,stencil,time,x,u (only when output.snapshot_stride > 0)",
    "gamma_sweep_<backend>.csv": "gamma,l2_diff,seed",
    "gamma_argmin.csv": "backend,gamma_star,gamma_predicted,rms_at_star",
    "roughness_norms.csv": "colour_exponent,stencil,seed,time,l2_norm",
    "roughness_runs.csv": "colour_exponent,stencil,seed,diverged,divergence_time,max_norm",
    "roughness_dichotomy.csv": "colour_exponent,seed,separation_time,separated",
    "fit_curve.csv": "u,fitted,predicted",
    "fit_histogram.csv": "bin_left,bin_right,count",
    "fit_result.json": "best_params, best_value, evals_used, converged, evaluation_log",
    "vector_comparison.csv": "seed,dist_corrected,dist_uncorrected,ratio",
    "vector_differences.csv": "seed,component,x,diff_corrected,diff_uncorrected",
    "viscosity_references.csv": "x,u_c0,u_c1",
    "viscosity_distances.csv": "eps,eps_over_delta,seed,d0,d1,diverged",
    "viscosity_bipolar.csv": "eps,eps_over_delta,d0,d1,D,x,y,x_over_D,clamped",
    "summary.json": "experiment-specific headline numbers",
    "manifest.json": "config echo, seeds, version, wall clock, output list",
}


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)


@dataclass
class ExperimentResult:
    tables: list = field(default_factory=list)
    documents: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def table(self, name: str) -> Table:
        return next(t for t in self.tables if t.name == name)


@dataclass
class RunManifest:
    config: dict
    master_seed: int
    run_ids: list
    code_version: str
    wall_clock_seconds: float
    outputs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "master_seed": self.master_seed,
            "run_ids": self.run_ids,
            "code_version": self.code_version,
            "wall_clock_seconds": self.wall_clock_seconds,
            "outputs": self.outputs,
        }


# ---------------------------------------------------------------- helpers

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _dump_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_json_safe(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def write_outputs(result: ExperimentResult, manifest: RunManifest, out_dir) -> list:
    """Write every table, document, the summary and the manifest into ``out_dir``.

    Returns the written file names; the manifest lists the same names.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for t in result.tables:
        write_csv(out / t.name, t.columns, t.rows)
        names.append(t.name)
    for name, doc in result.documents.items():
        _dump_json(out / name, doc)
        names.append(name)
    _dump_json(out / "summary.json", result.summary)
    names.append("summary.json")
    names.append("manifest.json")
    manifest.outputs = sorted(names)
    _dump_json(out / "manifest.json", manifest.to_dict())
    return manifest.outputs


def _stencil(cfg: ExperimentConfig) -> StencilSpec:
    if cfg["stencil.c"] is not None:
        return StencilSpec.general(cfg["stencil.c"])
    return StencilSpec.two_point(cfg["stencil.a"], cfg["stencil.b"])


def _two_point(cfg: ExperimentConfig) -> StencilSpec:
    return StencilSpec.two_point(cfg["stencil.a"], cfg["stencil.b"])


def _initial(cfg: ExperimentConfig, grid: PeriodicGrid, runs: int, components: int = 1):
    base = np.sin(grid.x) if cfg["u0.kind"] == "sine" else np.zeros(grid.N)
    base = base + cfg["u0.offset"]
    return np.broadcast_to(base, (runs, components, grid.N)).copy()


def _dt(cfg: ExperimentConfig, finest: PeriodicGrid) -> float:
    if cfg["stepper.dt"] is not None:
        return cfg["stepper.dt"]
    speed = float(np.max(np.abs(_initial(cfg, finest, 1))))
    return default_dt(finest.delta, speed, cfg["stepper.courant_limit"])


def _stepper(cfg: ExperimentConfig, dt: float, **changes) -> StepperConfig:
    opts = dict(dt=dt, theta=cfg["stepper.theta"], backend=cfg["stepper.backend"],
                courant_limit=cfg["stepper.courant_limit"], cfl_policy=cfg["stepper.cfl_policy"])
    opts.update(changes)
    return StepperConfig(**opts)


def _noise(cfg: ExperimentConfig, components: int = 1) -> NoiseSpec:
    return NoiseSpec.coloured(cfg["noise.colour_exponent"], components)


def _stride(cfg: ExperimentConfig, steps: int) -> int:
    return cfg["output.snapshot_stride"] or steps


# ---------------------------------------------------------------- drivers

def scheme_comparison(cfg: ExperimentConfig) -> ExperimentResult:
    """Left, centred and right stencils for Burgers, all driven by the same noise."""
    g = PeriodicGrid(cfg["grid.N"])
    seeds = cfg["seeds"]
    dt = _dt(cfg, g)
    K = steps_for(cfg["T"], dt)
    stride = cfg["output.snapshot_stride"]
    noise = BatchNoise(cfg["seed"], seeds, g, _noise(cfg), dt)
    u0 = _initial(cfg, g, len(seeds))
    means, finals, snaps = [], [], []
    mean_of = {}
    for st in (LEFT, CENTRED, RIGHT):
        model = burgers_fd(st.a, st.b, cfg["model.nu"], cfg["model.sigma"])
        r = simulate(model, g, _stepper(cfg, dt), u0, noise, K, record_every=stride or None)
        m = r.final[:, 0].mean(axis=-1)
        mean_of[st.label] = m
        norms = l2_norm_array(r.final, g.delta)
        for b, s in enumerate(seeds):
            means.append((s, st.label, m[b], norms[b], r.diverged[b]))
            finals.extend((s, st.label, x, u) for x, u in zip(g.x, r.final[b, 0]))
            for k, snap in r.snapshots:
                snaps.extend((s, st.label, k * dt, x, u) for x, u in zip(g.x, snap[b, 0]))
    ordered = (mean_of["left"] < mean_of["centred"]) & (mean_of["centred"] < mean_of["right"])
    tables = [Table("scheme_comparison_means.csv", ("seed", "stencil", "mean", "l2_norm", "diverged"), means),
              Table("scheme_comparison_final.csv", ("seed", "stencil", "x", "u"), finals)]
    if stride:
        tables.append(Table("scheme_comparison_snapshots.csv",
                            ("seed", "stencil", "time", "x", "u"), snaps))
    summary = {"ordered_seeds": int(ordered.sum()), "total_seeds": len(seeds),
               "ordered_fraction": float(ordered.mean())}
    return ExperimentResult(tables, {}, summary)


def gamma_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Distance between the one-sided scheme and the corrected fine scheme as a function of gamma."""
    gc = PeriodicGrid(cfg["grid.N"])
    m = cfg["grid.refine_factor"]
    gf = gc.refine(m)
    seeds = cfg["seeds"]
    dt = _dt(cfg, gf)
    K = steps_for(cfg["T"], dt)
    nu, sigma = cfg["model.nu"], cfg["model.sigma"]
    stencil = _stencil(cfg)
    if stencil.variant == "general":
        approx = burgers_general(stencil.c, nu, sigma)
    else:
        approx = burgers_fd(stencil.a, stencil.b, nu, sigma)
    gammas = cfg["sweep.values"]
    bank = NoiseBank(cfg["seed"], seeds, gf, _noise(cfg), dt, K)
    coarse = bank.coarsened(m)
    u0c, u0f = _initial(cfg, gc, len(seeds)), _initial(cfg, gf, len(seeds))

    tables, argmin_rows, summary = [], [], {}
    for backend in cfg["sweep.backends"]:
        scfg = _stepper(cfg, dt, backend=backend)
        ref = simulate(approx, gc, scfg, u0c, coarse.__getitem__, K).final
        rows, ms = [], []
        for gam in gammas:
            fine_model = burgers_conservative(nu, sigma, ConstantCorrection(gam))
            fine = simulate(fine_model, gf, scfg, u0f, bank.__getitem__, K).final[..., ::m]
            d = l2_norm_array(fine - ref, gc.delta)
            rows.extend((gam, d[b], s) for b, s in enumerate(seeds))
            ms.append(float(np.mean(d ** 2)))
        tables.append(Table(f"gamma_sweep_{backend}.csv", ("gamma", "l2_diff", "seed"), rows))
        predicted = discrete_stencil_constant(stencil, gc.N, BACKEND_OPERATOR[backend])
        if gammas:
            i = int(np.nanargmin(ms))
            argmin_rows.append((backend, gammas[i], predicted, math.sqrt(ms[i])))
            summary[backend] = {"gamma_star": gammas[i], "gamma_predicted": predicted}
        else:
            summary[backend] = {"gamma_star": None, "gamma_predicted": predicted}
    tables.append(Table("gamma_argmin.csv",
                        ("backend", "gamma_star", "gamma_predicted", "rms_at_star"), argmin_rows))
    return ExperimentResult(tables, {}, summary)


def roughness_study(cfg: ExperimentConfig) -> ExperimentResult:
    """Centred against one-sided Burgers under coloured noise, one panel per colour exponent.

    A seed "separates" when at some step the one-sided L2 norm exceeds ten
    times the centred one, or the one-sided run blows up.
    """
    g = PeriodicGrid(cfg["grid.N"])
    seeds = cfg["seeds"]
    dt = _dt(cfg, g)
    K = steps_for(cfg["T"], dt)
    stride = _stride(cfg, K)
    nu, sigma = cfg["model.nu"], cfg["model.sigma"]
    other = _two_point(cfg)
    u0 = _initial(cfg, g, len(seeds))
    norm_rows, run_rows, split_rows, panels = [], [], [], {}
    for exponent in cfg["sweep.values"]:
        noise = BatchNoise(cfg["seed"], seeds, g, NoiseSpec.coloured(exponent), dt)
        norms, results = {}, {}
        for st in (CENTRED, other):
            series = np.empty((K + 1, len(seeds)))

            def record(k, u, series=series):
                series[k] = l2_norm_array(u, g.delta)

            results[st.label] = simulate(burgers_fd(st.a, st.b, nu, sigma), g, _stepper(cfg, dt),
                                         u0, noise, K, observer=record)
            norms[st.label] = series
            for b, s in enumerate(seeds):
                r = results[st.label]
                finite = series[np.isfinite(series[:, b]), b]
                run_rows.append((exponent, st.label, s, r.diverged[b], r.divergence_time[b],
                                 float(finite.max()) if finite.size else math.nan))
                norm_rows.extend((exponent, st.label, s, k * dt, series[k, b])
                                 for k in range(0, K + 1, stride))
        c, o = norms["centred"], norms[other.label]
        with np.errstate(invalid="ignore"):
            split = (o > 10.0 * c) | ~np.isfinite(o)
        separated = split.any(axis=0)
        first = np.where(separated, split.argmax(axis=0) * dt, math.nan)
        split_rows.extend((exponent, s, first[b], separated[b]) for b, s in enumerate(seeds))
        panels[repr(float(exponent))] = {
            "separated_fraction": float(separated.mean()),
            "centred_all_finite": bool(not results["centred"].diverged.any()),
            "other_diverged": int(results[other.label].diverged.sum()),
        }
    tables = [Table("roughness_norms.csv", ("colour_exponent", "stencil", "seed", "time", "l2_norm"),
                    norm_rows),
              Table("roughness_runs.csv", ("colour_exponent", "stencil", "seed", "diverged",
                                           "divergence_time", "max_norm"), run_rows),
              Table("roughness_dichotomy.csv",
                    ("colour_exponent", "seed", "separation_time", "separated"), split_rows)]
    return ExperimentResult(tables, {}, {"other_stencil": other.label, "panels": panels})


def _fit_driver(cfg: ExperimentConfig, model) -> ExperimentResult:
    gc = PeriodicGrid(cfg["grid.N"])
    m = cfg["grid.refine_factor"]
    gf = gc.refine(m)
    run_ids = cfg["seeds"] if cfg["fit.seed_average"] else cfg["seeds"][:1]
    dt = _dt(cfg, gf)
    K = steps_for(cfg["T"], dt)
    scfg = _stepper(cfg, dt)
    bank = NoiseBank(cfg["seed"], run_ids, gf, _noise(cfg), dt, K)
    coarse = bank.coarsened(m)
    ref = simulate(model, gc, scfg, _initial(cfg, gc, len(run_ids)), coarse.__getitem__, K).final
    u0f = _initial(cfg, gf, len(run_ids))

    def solve(coeffs):
        corrected = corrected_counterpart(model, PolynomialCorrection(tuple(coeffs)))
        return simulate(corrected, gf, scfg, u0f, bank.__getitem__, K).final

    simplex = SimplexConfig(initial_step=cfg["fit.initial_step"], max_evals=cfg["fit.max_evals"],
                            f_tolerance=cfg["fit.f_tol"], x_tolerance=cfg["fit.x_tol"])
    fit = fit_correction_polynomial(ref, solve, cfg["fit.degree"], simplex,
                                    delta=gc.delta, refine_factor=m)

    q = histogram_quantiles(ref, cfg["fit.hist_bins"])
    u = np.linspace(q.q05, q.q95, 201)
    scale = model.sigma ** 2 / (4 * model.viscosity)
    fitted = -scale * PolynomialCorrection(tuple(fit.best_params))(u)
    predicted = -scale * np.asarray(predicted_polynomial_target(model)(u)) * np.ones_like(u)
    peak = float(np.max(np.abs(predicted)))
    max_dev = float(np.max(np.abs(fitted - predicted)))
    hist = [(q.edges[i], q.edges[i + 1], q.counts[i]) for i in range(len(q.counts))]
    summary = {
        "model": model.name,
        "degree": cfg["fit.degree"],
        "run_ids": list(run_ids),
        "q05": q.q05,
        "q95": q.q95,
        "max_deviation": max_dev,
        "max_predicted": peak,
        "relative_deviation": max_dev / peak if peak > 0 else math.inf,
        "best_value": fit.best_value,
        "evals_used": fit.evals_used,
        "converged": fit.converged,
    }
    return ExperimentResult(
        [Table("fit_curve.csv", ("u", "fitted", "predicted"), list(zip(u, fitted, predicted))),
         Table("fit_histogram.csv", ("bin_left", "bin_right", "count"), hist)],
        {"fit_result.json": fit.to_dict()}, summary)


def gradient_fit(cfg: ExperimentConfig) -> ExperimentResult:
    """Fit a polynomial correction for ``h'(u) = sin(u)^2`` and compare with ``h''``."""
    return _fit_driver(cfg, gradient_sin2(cfg["model.nu"], cfg["model.sigma"], _two_point(cfg)))


def multiplicative_fit(cfg: ExperimentConfig) -> ExperimentResult:
    """Fit a polynomial correction for multiplicative noise and compare with ``g' f^2``."""
    return _fit_driver(cfg, multiplicative_cos3(cfg["model.nu"], _two_point(cfg)))


def vector_comparison(cfg: ExperimentConfig) -> ExperimentResult:
    """One-sided two-component system against centred runs with and without the divergence correction."""
    g = PeriodicGrid(cfg["grid.N"])
    seeds = cfg["seeds"]
    dt = _dt(cfg, g)
    K = steps_for(cfg["T"], dt)
    sigma = cfg["model.sigma"]
    noise = BatchNoise(cfg["seed"], seeds, g, _noise(cfg, 2), dt)
    u0 = _initial(cfg, g, len(seeds), components=2)
    finals = {}
    for key, model in (("one_sided", strange_spde(sigma, _two_point(cfg))),
                       ("corrected", strange_spde(sigma, CENTRED, DivergenceCorrection())),
                       ("uncorrected", strange_spde(sigma, CENTRED))):
        finals[key] = simulate(model, g, _stepper(cfg, dt), u0, noise, K).final
    dc = finals["one_sided"] - finals["corrected"]
    du = finals["one_sided"] - finals["uncorrected"]
    nc, nu_ = l2_norm_array(dc, g.delta), l2_norm_array(du, g.delta)
    ratio = nc / nu_
    rows = [(s, nc[b], nu_[b], ratio[b]) for b, s in enumerate(seeds)]
    diffs = [(s, c, x, dc[b, c, j], du[b, c, j])
             for b, s in enumerate(seeds) for c in range(2) for j, x in enumerate(g.x)]
    passed = ratio <= 0.5
    summary = {"ratio_le_half_fraction": float(passed.mean()), "median_ratio": float(np.median(ratio))}
    return ExperimentResult(
        [Table("vector_comparison.csv", ("seed", "dist_corrected", "dist_uncorrected", "ratio"), rows),
         Table("vector_differences.csv", ("seed", "component", "x", "diff_corrected",
                                          "diff_uncorrected"), diffs)],
        {}, summary)


def _crossings(ratios, xs, level=0.5) -> list:
    """Points where ``xs`` passes upward through ``level``, interpolated in log2(ratio)."""
    lr = np.log2(ratios)
    out = []
    for j in range(len(xs) - 1):
        if xs[j] < level <= xs[j + 1]:
            t = (level - xs[j]) / (xs[j + 1] - xs[j])
            out.append(float(2.0 ** (lr[j] + t * (lr[j + 1] - lr[j]))))
    return out


def viscosity_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Small-noise, small-viscosity Burgers runs placed between the c = 0 and c = 1 limits.

    ``sweep.values`` are ratios eps / delta. The two references solve the
    deterministic limit equation with forcing c/4 on the refined grid with an
    upwind flux and viscosity equal to the fine spacing.
    """
    g = PeriodicGrid(cfg["grid.N"])
    m = cfg["grid.refine_factor"]
    gf = g.refine(m)
    seeds = cfg["seeds"]
    dt = _dt(cfg, gf)
    K = steps_for(cfg["T"], dt)
    ref_cfg = _stepper(cfg, dt, cfl_policy="reject")
    refs = {}
    for c in (0, 1):
        r = simulate(limit_burgers(c, gf.delta), gf, ref_cfg, _initial(cfg, gf, 1),
                     lambda k: 0.0, K)
        refs[c] = r.final[0, :, ::m]
    D = float(l2_norm_array(refs[1] - refs[0], g.delta))
    noise = BatchNoise(cfg["seed"], seeds, g, _noise(cfg), dt)
    u0 = _initial(cfg, g, len(seeds))
    ratios = list(cfg["sweep.values"])
    dist_rows, bip_rows, xs = [], [], []
    for ratio in ratios:
        eps = ratio * g.delta
        r = simulate(inviscid_regime(eps, _two_point(cfg)), g, _stepper(cfg, dt), u0, noise, K)
        d0 = l2_norm_array(r.final - refs[0], g.delta)
        d1 = l2_norm_array(r.final - refs[1], g.delta)
        dist_rows.extend((eps, ratio, s, d0[b], d1[b], r.diverged[b]) for b, s in enumerate(seeds))
        ok = ~r.diverged
        rms0 = math.sqrt(float(np.mean(d0[ok] ** 2))) if ok.any() else math.nan
        rms1 = math.sqrt(float(np.mean(d1[ok] ** 2))) if ok.any() else math.nan
        p = bipolar_coordinates(rms0, rms1, D)
        bip_rows.append((eps, ratio, rms0, rms1, D, p.x, p.y, p.x / D, p.clamped))
        xs.append(p.x / D)
    crossings = _crossings(ratios, xs) if len(ratios) > 1 else []
    refs_rows = list(zip(g.x, refs[0][0], refs[1][0]))
    summary = {"delta": g.delta, "reference_separation": D, "crossover_eps_over_delta": crossings,
               "x_over_D": xs}
    return ExperimentResult(
        [Table("viscosity_references.csv", ("x", "u_c0", "u_c1"), refs_rows),
         Table("viscosity_distances.csv", ("eps", "eps_over_delta", "seed", "d0", "d1", "diverged"),
               dist_rows),
         Table("viscosity_bipolar.csv", ("eps", "eps_over_delta", "d0", "d1", "D", "x", "y",
                                         "x_over_D", "clamped"), bip_rows)],
        {}, summary)


DRIVERS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "scheme_comparison": scheme_comparison,
    "gamma_sweep": gamma_sweep,
    "roughness_study": roughness_study,
    "gradient_fit": gradient_fit,
    "vector_comparison": vector_comparison,
    "multiplicative_fit": multiplicative_fit,
    "viscosity_sweep": viscosity_sweep,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None, write: bool = True):
    """Run the configured driver; write outputs unless ``write`` is false.

    Returns ``(manifest, result)``. ``out_dir`` overrides ``output.dir``.
    """
    start = time.perf_counter()
    result = DRIVERS[cfg.experiment_id](cfg)
    manifest = RunManifest(config=cfg.to_dict(), master_seed=cfg["seed"],
                           run_ids=list(cfg["seeds"]), code_version=__version__,
                           wall_clock_seconds=round(time.perf_counter() - start, 3))
    if write:
        write_outputs(result, manifest, out_dir if out_dir is not None else cfg["output.dir"])
    return manifest, result
