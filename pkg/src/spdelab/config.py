"""Experiment configuration: flat ``key = value`` text with dotted section names.

Values are parsed as JSON where possible (numbers, ``true``/``false``,
``null``, ``[lists]``, ``"strings"``) and otherwise kept as bare strings.
Every key must be known; defaults are filled in from :data:`DEFAULTS`
overlaid with the experiment's own :data:`EXPERIMENT_DEFAULTS`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

EXPERIMENTS = (
    "scheme_comparison",
    "gamma_sweep",
    "roughness_study",
    "gradient_fit",
    "vector_comparison",
    "multiplicative_fit",
    "viscosity_sweep",
)


class ConfigError(ValueError):
    pass


# key -> (type, description); None in DEFAULTS means "derive at run time"
SCHEMA: dict[str, tuple[type, str]] = {
    "experiment_id": (str, "one of " + ", ".join(EXPERIMENTS)),
    "seed": (int, "master seed of the counter-based noise streams"),
    "seeds": (list, "run ids under the master seed, one independent noise realisation each"),
    "model.name": (str, "catalog model to check against the experiment (optional)"),
    "model.nu": (float, "viscosity nu"),
    "model.sigma": (float, "additive noise amplitude (strange_spde: its sigma parameter)"),
    "stencil.a": (int, "forward offset a of the two-point stencil"),
    "stencil.b": (int, "backward offset b of the two-point stencil"),
    "stencil.c": (float, "use the second-order c-family stencil instead of (a, b) when set"),
    "noise.colour_exponent": (float, "noise colour exponent (1+n^2)^(-value); negative is rougher"),
    "grid.N": (int, "number of gridpoints of the approximating scheme"),
    "grid.refine_factor": (int, "fine/coarse resolution ratio for corrected or reference runs"),
    "stepper.theta": (float, "implicitness of the viscous term"),
    "stepper.dt": (float, "time step; null derives it from the CFL rule capped at 1e-3"),
    "stepper.backend": (str, "cyclic_tridiagonal or spectral_diagonal"),
    "stepper.courant_limit": (float, "Courant number limit C"),
    "stepper.cfl_policy": (str, "reject or warn"),
    "T": (float, "final time"),
    "sweep.values": (list, "sweep axis values (meaning depends on the experiment)"),
    "sweep.backends": (list, "linear backends compared in gamma_sweep"),
    "u0.kind": (str, "initial datum: zero or sine"),
    "u0.offset": (float, "constant added to the initial datum"),
    "fit.degree": (int, "degree of the fitted correction polynomial"),
    "fit.max_evals": (int, "Nelder-Mead evaluation budget"),
    "fit.f_tol": (float, "stop when the simplex value spread falls below this"),
    "fit.x_tol": (float, "stop when the simplex diameter falls below this"),
    "fit.initial_step": (float, "axis step of the initial simplex"),
    "fit.seed_average": (bool, "fit against all run ids at once instead of the first only"),
    "fit.hist_bins": (int, "histogram bins for the value distribution of u^N"),
    "output.dir": (str, "output directory"),
    "output.snapshot_stride": (int, "steps between recorded snapshots (0: final state only)"),
}

DEFAULTS: dict[str, Any] = {
    "seeds": [0, 1, 2, 3],
    "model.name": None,
    "model.nu": 1.0,
    "model.sigma": 1.0,
    "stencil.a": 1,
    "stencil.b": 0,
    "stencil.c": None,
    "noise.colour_exponent": 0.0,
    "grid.N": 64,
    "grid.refine_factor": 4,
    "stepper.theta": 0.5,
    "stepper.dt": None,
    "stepper.backend": "cyclic_tridiagonal",
    "stepper.courant_limit": 0.5,
    "stepper.cfl_policy": "warn",
    "T": 1.0,
    "sweep.values": [],
    "sweep.backends": [],
    "u0.kind": "zero",
    "u0.offset": 0.0,
    "fit.degree": 5,
    "fit.max_evals": 600,
    "fit.f_tol": 1e-9,
    "fit.x_tol": 1e-4,
    "fit.initial_step": 0.2,
    "fit.seed_average": False,
    "fit.hist_bins": 40,
    "output.dir": "out",
    "output.snapshot_stride": 0,
}

EXPERIMENT_DEFAULTS: dict[str, dict[str, Any]] = {
    "scheme_comparison": {"seeds": list(range(20))},
    "gamma_sweep": {
        "sweep.values": [round(0.01 * i, 2) for i in range(51)],
        "sweep.backends": ["cyclic_tridiagonal", "spectral_diagonal"],
    },
    "roughness_study": {
        "sweep.values": [-0.2, -0.1, 0.0],
        "seeds": list(range(10)),
        "grid.N": 512,
        "T": 2.0,
        "output.snapshot_stride": 10,
    },
    "gradient_fit": {"fit.degree": 5, "fit.seed_average": True},
    "vector_comparison": {"grid.N": 256, "seeds": list(range(10))},
    "multiplicative_fit": {"fit.degree": 6, "fit.seed_average": True},
    "viscosity_sweep": {
        "grid.N": 128,
        "seeds": list(range(16)),
        "sweep.values": [2.0 ** (k / 2) for k in range(-8, 9)],
        "u0.kind": "sine",
        "u0.offset": -2.0,
        "stepper.cfl_policy": "reject",
    },
}

# models each driver can run; model.name, when given, must be one of these
EXPERIMENT_MODELS = {
    "scheme_comparison": ("burgers_fd",),
    "gamma_sweep": ("burgers_fd", "burgers_general"),
    "roughness_study": ("burgers_fd",),
    "gradient_fit": ("gradient_sin2",),
    "vector_comparison": ("strange_spde",),
    "multiplicative_fit": ("multiplicative_cos3",),
    "viscosity_sweep": ("inviscid_regime",),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; index it with dotted keys, e.g. ``cfg["stepper.dt"]``."""

    values: Mapping[str, Any] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def experiment_id(self) -> str:
        return self.values["experiment_id"]

    def replace(self, **updates) -> "ExperimentConfig":
        merged = dict(self.values)
        merged.update({k.replace("__", "."): v for k, v in updates.items()})
        return validate(merged)

    def with_values(self, updates: Mapping[str, Any]) -> "ExperimentConfig":
        merged = dict(self.values)
        merged.update(updates)
        return validate(merged)

    def to_dict(self) -> dict:
        return dict(self.values)


def parse_value(text: str) -> Any:
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_text(text: str) -> dict[str, Any]:
    raw: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = parse_value(value)
    return raw


def parse_config(source, overrides: Mapping[str, Any] = None) -> ExperimentConfig:
    """Parse a config file path or config text, apply ``overrides``, validate."""
    if isinstance(source, Path) or (isinstance(source, str) and "=" not in source
                                    and Path(source).exists()):
        text = Path(source).read_text()
    else:
        text = source
    raw = parse_text(text)
    raw.update(overrides or {})
    return validate(raw)


def _coerce(key: str, value: Any) -> Any:
    kind = SCHEMA[key][0]
    if value is None:
        return None
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{key}: must be finite")
        return value
    if kind is int:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a [list], got {value!r}")
        return list(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def validate(raw: Mapping[str, Any]) -> ExperimentConfig:
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    missing = [k for k in ("experiment_id", "seed") if raw.get(k) is None]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    exp = raw["experiment_id"]
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment_id: unknown experiment {exp!r}; expected one of {EXPERIMENTS}")

    values = dict(DEFAULTS)
    values.update(EXPERIMENT_DEFAULTS[exp])
    values.update(raw)
    values = {k: _coerce(k, v) for k, v in values.items()}
    _check_invariants(values)
    return ExperimentConfig(dict(sorted(values.items())))


def _check_invariants(v: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(v["stencil.a"] >= 0, f"stencil.a: invariant a >= 0 violated (a = {v['stencil.a']})")
    need(v["stencil.b"] >= 0, f"stencil.b: invariant b >= 0 violated (b = {v['stencil.b']})")
    need(v["stencil.a"] + v["stencil.b"] > 0, "stencil: invariant a + b > 0 violated")
    need(v["model.nu"] > 0, "model.nu: invariant nu > 0 violated")
    need(v["model.sigma"] >= 0, "model.sigma: invariant sigma >= 0 violated")
    N = v["grid.N"]
    need(N > 0 and N % 2 == 0, f"grid.N: invariant N even and positive violated (N = {N})")
    need(v["grid.refine_factor"] >= 1, "grid.refine_factor: invariant refine_factor >= 1 violated")
    need(v["T"] > 0, "T: invariant T > 0 violated")
    need(0.0 <= v["stepper.theta"] <= 1.0, "stepper.theta: invariant 0 <= theta <= 1 violated")
    need(v["stepper.dt"] is None or v["stepper.dt"] > 0, "stepper.dt: invariant dt > 0 violated")
    need(v["stepper.backend"] in ("cyclic_tridiagonal", "spectral_diagonal"),
         f"stepper.backend: unknown backend {v['stepper.backend']!r}")
    need(v["stepper.cfl_policy"] in ("reject", "warn"),
         f"stepper.cfl_policy: expected reject or warn, got {v['stepper.cfl_policy']!r}")
    need(v["stepper.courant_limit"] > 0, "stepper.courant_limit: invariant C > 0 violated")
    sweep = v["sweep.values"]
    need(all(isinstance(s, (int, float)) and not isinstance(s, bool) and math.isfinite(s)
             for s in sweep), "sweep.values: invariant all values finite violated")
    need(list(sweep) == sorted(sweep), "sweep.values: invariant values sorted violated")
    for b in v["sweep.backends"]:
        need(b in ("cyclic_tridiagonal", "spectral_diagonal"), f"sweep.backends: unknown backend {b!r}")
    seeds = v["seeds"]
    need(len(seeds) > 0 and all(isinstance(s, int) and not isinstance(s, bool) for s in seeds),
         "seeds: expected a nonempty list of integer run ids")
    need(len(set(seeds)) == len(seeds), "seeds: run ids must be distinct")
    need(v["u0.kind"] in ("zero", "sine"), f"u0.kind: expected zero or sine, got {v['u0.kind']!r}")
    need(0 <= v["fit.degree"] <= 8, "fit.degree: invariant 0 <= degree <= 8 violated")
    need(v["fit.max_evals"] >= 1, "fit.max_evals: invariant max_evals >= 1 violated")
    need(v["fit.initial_step"] > 0, "fit.initial_step: invariant initial_step > 0 violated")
    need(v["fit.hist_bins"] >= 1, "fit.hist_bins: invariant bins >= 1 violated")
    need(v["output.snapshot_stride"] >= 0, "output.snapshot_stride: invariant stride >= 0 violated")
    name = v["model.name"]
    if name is not None:
        allowed = EXPERIMENT_MODELS[v["experiment_id"]]
        need(name in allowed,
             f"model.name: {name!r} is not runnable by {v['experiment_id']} (allowed: {allowed})")


def emit_config(cfg: ExperimentConfig) -> str:
    """Serialise to config text that :func:`parse_config` reads back to ``cfg``."""
    return "".join(f"{k} = {json.dumps(v)}\n" for k, v in cfg.values.items())
