"""Campaign driver: repeated seeded runs, per-run CSVs, aggregate, manifest.

A campaign fixes the forward model, the truth and the noisy data once (from
the master seed), then executes ``n_runs`` independent runs.  Each run draws
its own initial ensemble and index process from seeds derived via a
splittable counter scheme, integrates the configured flow, and records
diagnostics against its own constrained Tikhonov reference.  Failed runs
are recorded in the manifest and do not stop the campaign.

For inflated variants the inflation matrix is the orthogonal projector onto
the centered span of the run's initial ensemble: restricted to the frame
coordinates (where all spectral diagnostics live) this is the identity, and
it keeps every flow inside the affine span of the initial ensemble.
"""

from __future__ import annotations

import json
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .configs import ExperimentConfig
from .diagnostics import TrajectoryRecord, TrajectoryRecorder, aggregate_runs
from .dopri import IntegratorConfig, integrate
from .flows import FlowSpec, SubsampledProblem, build_subsampled
from .heat import (
    KLBasis,
    KLFieldSpec,
    assemble_forward,
    draw_initial_ensemble,
    interior_grid,
    kl_basis,
    partition_by_timestep,
    sample_kl_field,
)
from .index_process import start_process
from .problems import LinearProblem, whiten
from .reference import build_frame, constrained_tikhonov

__all__ = [
    "CampaignData",
    "run_single",
    "run_experiment",
    "aggregate",
    "sample_times",
]

_DATA_TAG = 0  # entropy tag for the campaign-fixed truth and noise


class CampaignData:
    """Campaign-fixed objects shared by all runs of one config."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        A = assemble_forward(cfg.heat)
        self.grid = interior_grid(cfg.heat)
        self.basis: KLBasis = kl_basis(
            KLFieldSpec(cfg.sigma2, cfg.l_sc, cfg.n_terms, self.grid)
        )
        rng = np.random.default_rng(np.random.SeedSequence([cfg.master_seed, _DATA_TAG]))
        self.truth = sample_kl_field(self.basis, rng)
        noise = cfg.noise_std * rng.standard_normal(A.shape[0])
        y = A @ self.truth + noise
        gamma = cfg.noise_std ** 2 * np.eye(A.shape[0])
        part = partition_by_timestep(cfg.heat)
        white = whiten(LinearProblem(A, y, gamma), part)
        self.problem: SubsampledProblem = build_subsampled(white, part, cfg.alpha)


def sample_times(cfg: ExperimentConfig) -> np.ndarray:
    """Zero followed by log-spaced sample times up to exactly ``t_end``."""
    times = np.logspace(
        np.log10(cfg.sample_t_min()), np.log10(cfg.t_end), cfg.n_samples
    )
    times[-1] = cfg.t_end
    return np.concatenate(([0.0], times))


def run_single(cfg: ExperimentConfig, run_index: int,
               data: CampaignData | None = None, observers: tuple = ()):
    """Execute run ``run_index`` (0-based) of a campaign.

    Returns ``(record, result, theta_star, ens0)``.  Deterministic in
    ``(cfg, run_index)``: the run's ensemble and index streams come from
    ``SeedSequence([master_seed, run_index + 1])``.  Extra integrator
    ``observers`` are attached after the trajectory recorder; observers
    taking an ``on_run_start(frame, theta_star)`` hook are told the run's
    subspace frame before integration.
    """
    data = data or CampaignData(cfg)
    ss = np.random.SeedSequence([cfg.master_seed, run_index + 1])
    ens_seed, idx_seed = ss.spawn(2)

    ens0 = draw_initial_ensemble(data.basis, cfg.n_ens, np.random.default_rng(ens_seed))
    frame = build_frame(ens0)
    _, theta_star = constrained_tikhonov(frame, data.problem.full)

    c_vi = None
    if cfg.variant in ("teki_vi", "teki_dim_vi"):
        c_vi = frame.basis @ frame.basis.T
    flow = FlowSpec(
        variant=cfg.variant,
        subsampling=cfg.subsampling,
        problem=data.problem,
        alpha_vi=cfg.alpha_vi or 0.0,
        c_vi=c_vi,
    )

    index_state = None
    if cfg.subsampling != "none":
        index_state = start_process(
            cfg.schedule, data.problem.n_sub, cfg.subsampling,
            np.random.default_rng(idx_seed), n_coords=cfg.n_ens,
        )

    recorder = TrajectoryRecorder(theta_star, data.problem.full, frame.basis)
    for obs in observers:
        if hasattr(obs, "on_run_start"):
            obs.on_run_start(frame, theta_star)
    icfg = IntegratorConfig(
        rtol=cfg.rtol, atol=cfg.atol, dense_output_times=sample_times(cfg)
    )
    result = integrate(flow, ens0, index_state, (0.0, cfg.t_end), icfg,
                       (recorder, *observers))
    return recorder.record(), result, theta_star, ens0


def _run_task(cfg: ExperimentConfig, run_index: int, out_dir: str) -> dict:
    """Worker-side run: rebuilds campaign data, writes the run CSV."""
    started = time.perf_counter()
    status: dict = {"index": run_index + 1, "status": "ok"}
    try:
        data = CampaignData(cfg)
        record, result, theta_star, _ = run_single(cfg, run_index, data)
        path = Path(out_dir) / f"run_{run_index + 1:03d}.csv"
        record.save_csv(path)
        status.update(jumps=result.n_jumps, steps=result.n_steps,
                      csv=path.name, seconds=round(time.perf_counter() - started, 3))
        if run_index == 0:
            _write_snapshot(Path(out_dir) / "snapshot.csv", data,
                            result.ensemble.particles, theta_star)
    except Exception as exc:  # recorded, campaign continues
        status.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                      trace=traceback.format_exc(limit=5))
    return status


def _write_snapshot(path: Path, data: CampaignData, final_particles: np.ndarray,
                    theta_star: np.ndarray) -> None:
    """Final-state snapshot of the first run: truth, reference, ensemble mean."""
    mean = final_particles.mean(axis=1)
    with open(path, "w") as fh:
        fh.write("x,truth,theta_star,theta_mean\n")
        for i, x in enumerate(data.grid):
            fh.write(
                f"{data.grid[i]:.17g},{data.truth[i]:.17g},"
                f"{theta_star[i]:.17g},{mean[i]:.17g}\n"
            )


def run_experiment(cfg: ExperimentConfig, out_dir, n_jobs: int = 1) -> Path:
    """Run a full campaign into ``out_dir``; returns the campaign directory.

    Writes one ``run_XXX.csv`` per successful run, ``snapshot.csv`` for the
    first run, ``aggregate.csv`` over all successful runs, and
    ``manifest.json`` echoing the config, seeds, version and per-run status.
    """
    from .configs import config_to_dict

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if n_jobs > 1 and cfg.n_runs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            statuses = list(
                pool.map(_run_task, [cfg] * cfg.n_runs, range(cfg.n_runs),
                         [str(out)] * cfg.n_runs)
            )
    else:
        data = CampaignData(cfg)
        statuses = []
        for r in range(cfg.n_runs):
            st = _run_task_local(cfg, r, out, data)
            statuses.append(st)

    manifest = {
        "name": cfg.name,
        "tool": f"subeki {__version__}",
        "config": config_to_dict(cfg),
        "master_seed": cfg.master_seed,
        "run_seed_scheme": "SeedSequence([master_seed, run_index + 1])",
        "n_obs": cfg.heat.n_obs,
        "dim": cfg.heat.n_interior,
        "runs": statuses,
    }
    ok = [s for s in statuses if s["status"] == "ok"]
    if ok:
        aggregate(out)
        manifest["aggregate"] = "aggregate.csv"
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return out


def _run_task_local(cfg, run_index, out: Path, data: CampaignData) -> dict:
    """Same as :func:`_run_task` but reusing already-built campaign data."""
    started = time.perf_counter()
    status: dict = {"index": run_index + 1, "status": "ok"}
    try:
        record, result, theta_star, _ = run_single(cfg, run_index, data)
        path = out / f"run_{run_index + 1:03d}.csv"
        record.save_csv(path)
        status.update(jumps=result.n_jumps, steps=result.n_steps,
                      csv=path.name, seconds=round(time.perf_counter() - started, 3))
        if run_index == 0:
            _write_snapshot(out / "snapshot.csv", data,
                            result.ensemble.particles, theta_star)
    except Exception as exc:
        status.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                      trace=traceback.format_exc(limit=5))
    return status


def aggregate(campaign_dir) -> Path:
    """Aggregate all run CSVs in a campaign directory into ``aggregate.csv``."""
    out = Path(campaign_dir)
    run_files = sorted(out.glob("run_*.csv"))
    if not run_files:
        raise FileNotFoundError(f"no run CSVs found in {out}")
    records = []
    for f in run_files:
        try:
            records.append(TrajectoryRecord.load_csv(f))
        except Exception as exc:
            raise ValueError(f"corrupted run CSV {f.name}: {exc}") from exc
    table = aggregate_runs(records)
    path = out / "aggregate.csv"
    table.save_csv(path)
    return path
