"""Experiment configuration: schema, YAML round-trip, and presets.

A config fully determines one campaign: the heat-model discretization, the
field prior, the method (full data / single / batch subsampling), the flow
variant, the learning-rate schedule, horizons, run counts and seeds.
Validation reports the dotted path of the offending key.

Presets cover the benchmark matrix: three experiment families
(constant inflation ``vi``, diminishing inflation ``dimvi``, none ``novi``)
times three methods (``eki``, ``single``, ``batch``), each at full scale
and at desk scale (``_desk``: coarser mesh, fewer runs, shorter horizons),
plus a tiny smoke preset.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import yaml

from .heat import HeatConfig
from .index_process import (
    ConstantRate,
    ExponentialRate,
    PiecewiseRate,
    ReciprocalRate,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "config_to_dict",
    "config_from_dict",
    "load_config",
    "save_config",
    "list_presets",
    "preset",
]

METHODS = ("eki_full", "single_subsampling", "batch_subsampling")
CAMPAIGN_VARIANTS = ("teki", "teki_vi", "teki_dim_vi")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted key location."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one campaign."""

    name: str
    method: str
    variant: str
    alpha: float
    alpha_vi: float | None
    heat: HeatConfig
    sigma2: float
    l_sc: float
    n_terms: int
    n_ens: int
    noise_std: float
    schedule: object | None
    t_end: float
    n_runs: int
    master_seed: int
    n_samples: int = 200
    t_min: float | None = None
    rtol: float = 1e-6
    atol: float = 1e-9

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {METHODS}")
        if self.variant not in CAMPAIGN_VARIANTS:
            raise ConfigError("variant", f"must be one of {CAMPAIGN_VARIANTS}")
        if not self.alpha > 0:
            raise ConfigError("alpha", "must be positive")
        if self.variant in ("teki_vi", "teki_dim_vi"):
            if self.alpha_vi is None or not self.alpha_vi > 0:
                raise ConfigError("alpha_vi", "inflated variants need alpha_vi > 0")
        if self.method != "eki_full" and self.schedule is None:
            raise ConfigError("schedule", "subsampled methods need a schedule")
        if self.n_ens < 2:
            raise ConfigError("ensemble.n_ens", "need at least two particles")
        if not self.noise_std > 0:
            raise ConfigError("noise_std", "must be positive")
        if not self.t_end > 0:
            raise ConfigError("run.t_end", "must be positive")
        if self.n_runs < 1:
            raise ConfigError("run.n_runs", "must be at least 1")
        if self.n_samples < 2:
            raise ConfigError("run.n_samples", "must be at least 2")
        if self.t_min is not None and not 0 < self.t_min < self.t_end:
            raise ConfigError("run.t_min", "must lie in (0, t_end)")
        if not 1 <= self.n_terms <= self.heat.n_interior:
            raise ConfigError("field.n_terms", "must lie in [1, interior nodes]")

    @property
    def subsampling(self) -> str:
        return {"eki_full": "none", "single_subsampling": "single",
                "batch_subsampling": "batch"}[self.method]

    def sample_t_min(self) -> float:
        return self.t_min if self.t_min is not None else self.t_end * 1e-3


def _schedule_to_dict(s) -> dict:
    if isinstance(s, ConstantRate):
        return {"kind": "constant", "c": s.c}
    if isinstance(s, ExponentialRate):
        return {"kind": "exponential", "a": s.a, "b": s.b}
    if isinstance(s, ReciprocalRate):
        return {"kind": "reciprocal", "a": s.a, "b": s.b}
    if isinstance(s, PiecewiseRate):
        return {
            "kind": "piecewise",
            "decaying": _schedule_to_dict(s.decaying),
            "t_switch": s.t_switch,
            "step": s.step,
        }
    raise TypeError(f"unknown schedule type {type(s)!r}")


def _num(d: dict, path: str, key: str, required: bool = True):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}", "missing")
        return None
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    return v


def _schedule_from_dict(d, path: str):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected a mapping")
    kind = d.get("kind")
    try:
        if kind == "constant":
            return ConstantRate(_num(d, path, "c"))
        if kind == "exponential":
            return ExponentialRate(_num(d, path, "a"), _num(d, path, "b"))
        if kind == "reciprocal":
            return ReciprocalRate(_num(d, path, "a"), _num(d, path, "b"))
        if kind == "piecewise":
            if "decaying" not in d:
                raise ConfigError(f"{path}.decaying", "missing")
            return PiecewiseRate(
                _schedule_from_dict(d["decaying"], f"{path}.decaying"),
                _num(d, path, "t_switch"),
                _num(d, path, "step"),
            )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc
    raise ConfigError(
        f"{path}.kind",
        "must be one of constant, exponential, reciprocal, piecewise",
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain nested mapping, the YAML image of the config."""
    out = {
        "name": cfg.name,
        "method": cfg.method,
        "variant": cfg.variant,
        "alpha": cfg.alpha,
        "model": {"h": cfg.heat.h, "dt": cfg.heat.dt, "horizon": cfg.heat.T},
        "field": {"sigma2": cfg.sigma2, "l_sc": cfg.l_sc, "n_terms": cfg.n_terms},
        "ensemble": {"n_ens": cfg.n_ens},
        "noise_std": cfg.noise_std,
        "run": {
            "t_end": cfg.t_end,
            "n_runs": cfg.n_runs,
            "master_seed": cfg.master_seed,
            "n_samples": cfg.n_samples,
        },
        "integrator": {"rtol": cfg.rtol, "atol": cfg.atol},
    }
    if cfg.alpha_vi is not None:
        out["alpha_vi"] = cfg.alpha_vi
    if cfg.heat.obs_per_step is not None:
        out["model"]["obs_per_step"] = cfg.heat.obs_per_step
    if cfg.schedule is not None:
        out["schedule"] = _schedule_to_dict(cfg.schedule)
    if cfg.t_min is not None:
        out["run"]["t_min"] = cfg.t_min
    return out


def config_from_dict(d: dict) -> ExperimentConfig:
    """Validate a nested mapping; errors carry the dotted key path."""
    if not isinstance(d, dict):
        raise ConfigError("<root>", "expected a mapping at the top level")
    known = {"name", "method", "variant", "alpha", "alpha_vi", "model", "field",
             "ensemble", "noise_std", "schedule", "run", "integrator"}
    for key in d:
        if key not in known:
            raise ConfigError(key, "unknown key")

    name = d.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "must be a non-empty string")
    for sect in ("model", "field", "ensemble", "run"):
        if not isinstance(d.get(sect), dict):
            raise ConfigError(sect, "missing or not a mapping")

    model = d["model"]
    try:
        heat = HeatConfig(
            h=_num(model, "model", "h"),
            dt=_num(model, "model", "dt"),
            T=_num(model, "model", "horizon"),
            obs_per_step=model.get("obs_per_step"),
        )
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from exc

    field = d["field"]
    run = d["run"]
    integ = d.get("integrator", {})
    schedule = None
    if "schedule" in d and d["schedule"] is not None:
        schedule = _schedule_from_dict(d["schedule"], "schedule")

    n_terms = _num(field, "field", "n_terms")
    if int(n_terms) != n_terms:
        raise ConfigError("field.n_terms", "must be an integer")
    try:
        return ExperimentConfig(
            name=name,
            method=d.get("method", ""),
            variant=d.get("variant", ""),
            alpha=_num(d, "<root>", "alpha"),
            alpha_vi=_num(d, "<root>", "alpha_vi", required=False),
            heat=heat,
            sigma2=_num(field, "field", "sigma2"),
            l_sc=_num(field, "field", "l_sc"),
            n_terms=int(n_terms),
            n_ens=int(_num(d["ensemble"], "ensemble", "n_ens")),
            noise_std=_num(d, "<root>", "noise_std"),
            schedule=schedule,
            t_end=_num(run, "run", "t_end"),
            n_runs=int(_num(run, "run", "n_runs")),
            master_seed=int(_num(run, "run", "master_seed")),
            n_samples=int(_num(run, "run", "n_samples", required=False) or 200),
            t_min=_num(run, "run", "t_min", required=False),
            rtol=_num(integ, "integrator", "rtol", required=False) or 1e-6,
            atol=_num(integ, "integrator", "atol", required=False) or 1e-9,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("<root>", str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML campaign file."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(str(path), "file not found") from None
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}") from exc
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)


# --- presets -------------------------------------------------------------

_FULL_HEAT = dict(h=0.01, dt=0.05, T=0.3)
_DESK_HEAT = dict(h=0.02, dt=0.05, T=0.3)
_METHOD_OF = {"eki": "eki_full", "single": "single_subsampling",
              "batch": "batch_subsampling"}


def _vi_schedule():
    return ExponentialRate(a=0.01, b=10.0)


def _novi_schedule(t_end: float, n_equidistant: int):
    return PiecewiseRate(
        decaying=ReciprocalRate(a=100.0, b=100.0),
        t_switch=10.0,
        step=(t_end - 10.0) / n_equidistant,
    )


def _matrix_cell(family: str, method_key: str, desk: bool) -> ExperimentConfig:
    heat = HeatConfig(**(_DESK_HEAT if desk else _FULL_HEAT))
    method = _METHOD_OF[method_key]
    subsampled = method_key != "eki"
    if family == "vi":
        variant, alpha_vi = "teki_vi", 0.01
        t_end = 0.6 if desk else 1.0
        schedule = _vi_schedule() if subsampled else None
    elif family == "dimvi":
        variant, alpha_vi = "teki_dim_vi", 0.01
        t_end = 0.6 if desk else 1.0
        schedule = _vi_schedule() if subsampled else None
    elif family == "novi":
        variant, alpha_vi = "teki", None
        t_end = 1e4 if desk else 1e6
        # Desk runs keep a ~2-time-unit switching interval in the equidistant
        # phase: a coarser interval lets the per-switch re-targeting noise
        # balance the ensemble contraction and stalls the batch collapse.
        n_eq = 5000 if desk else 100_000
        schedule = _novi_schedule(t_end, n_eq) if subsampled else None
    else:
        raise ValueError(family)
    suffix = "_desk" if desk else ""
    return ExperimentConfig(
        name=f"heat_{family}_{method_key}{suffix}",
        method=method,
        variant=variant,
        alpha=10.0,
        alpha_vi=alpha_vi,
        heat=heat,
        sigma2=10.0,
        l_sc=0.1,
        n_terms=8,
        n_ens=5,
        noise_std=0.1,
        schedule=schedule,
        t_end=t_end,
        n_runs=8 if desk else 32,
        master_seed=1894,
    )


def _smoke() -> ExperimentConfig:
    return ExperimentConfig(
        name="heat_smoke",
        method="single_subsampling",
        variant="teki_vi",
        alpha=10.0,
        alpha_vi=0.01,
        heat=HeatConfig(h=0.1, dt=0.05, T=0.1),
        sigma2=10.0,
        l_sc=0.1,
        n_terms=6,
        n_ens=5,
        noise_std=0.1,
        schedule=ConstantRate(0.05),
        t_end=0.5,
        n_runs=2,
        master_seed=1894,
        n_samples=50,
    )


def _build_presets() -> dict[str, ExperimentConfig]:
    out: dict[str, ExperimentConfig] = {}
    for family in ("vi", "dimvi", "novi"):
        for method_key in ("eki", "single", "batch"):
            for desk in (False, True):
                cfg = _matrix_cell(family, method_key, desk)
                out[cfg.name] = cfg
    smoke = _smoke()
    out[smoke.name] = smoke
    return out


def list_presets() -> list[str]:
    """Names of the built-in campaign presets."""
    return list(_build_presets().keys())


def preset(name: str) -> ExperimentConfig:
    """Look up a preset by name; raises ConfigError for unknown names."""
    table = _build_presets()
    if name not in table:
        raise ConfigError("preset", f"unknown preset {name!r}; try list-presets")
    return table[name]
