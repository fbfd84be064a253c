"""End-to-end acceptance gate.

Each test measures one agreed behavior of the package at benchmark or desk
scale, prints a single machine-readable verdict line, and then asserts it.
The verdict lines are echoed in the terminal summary by a conftest hook.
"""

import dataclasses
import filecmp
import time

import numpy as np
import pytest
from conftest import DESK_CELLS, N_DESK_RUNS, record_criterion
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.stats import expon, kstest

from subeki.configs import preset
from subeki.diagnostics import (
    TrajectoryRecorder,
    aggregate_runs,
    lambda_min_bound_check,
    rate_slope,
)
from subeki.dopri import IntegratorConfig, integrate
from subeki.flows import FlowSpec, gradient_lyapunov
from subeki.heat import draw_initial_ensemble
from subeki.index_process import (
    ConstantRate,
    ExponentialRate,
    ReciprocalRate,
    next_index,
    sample_waiting_time,
    start_process,
)
from subeki.problems import Ensemble
from subeki.reference import build_frame, constrained_tikhonov, coordinates_of, restrict_problem
from subeki.runner import CampaignData, run_experiment, run_single, sample_times
from subeki.tikhonov import potential


def _report(num: int, passed: bool, details: str, wall: float) -> None:
    status = "PASS" if passed else "FAIL"
    line = f"criterion {num}: {status} — {details} (wall {wall:.1f}s)"
    print(line)
    record_criterion(line)
    assert passed, line


def _run_seeds(cfg, run_index: int):
    ss = np.random.SeedSequence([cfg.master_seed, run_index + 1])
    return ss.spawn(2)


class _EnsembleTap:
    """Store dense samples as (t, copy-of-particles)."""

    def __init__(self):
        self.samples = []

    def on_sample(self, t, theta):
        self.samples.append((t, theta.copy()))


def test_criterion_01_reference_matches_qr_oracle(desk_data):
    t0 = time.perf_counter()
    cfg = desk_data.cfg
    full = desk_data.problem.full
    ens_seed, _ = _run_seeds(cfg, 0)
    ens = draw_initial_ensemble(desk_data.basis, cfg.n_ens,
                                np.random.default_rng(ens_seed))
    frame = build_frame(ens)
    _, theta_star = constrained_tikhonov(frame, full)

    # independent orthogonal-factorization solve of the reduced system
    b = full.a_tilde @ frame.basis
    rhs = full.y_tilde - full.a_tilde @ frame.offset
    q, r = np.linalg.qr(b)
    coeffs = np.linalg.solve(r, q.T @ rhs)
    want = frame.basis @ coeffs + frame.offset

    err = np.abs(theta_star - want).max() / max(np.abs(want).max(), 1.0)
    _report(1, err <= 1e-9,
            f"reference vs QR solve relative error {err:.2e} <= 1e-09",
            time.perf_counter() - t0)


def test_criterion_02_block_potentials_sum_to_full():
    t0 = time.perf_counter()
    data = CampaignData(preset("heat_vi_single"))  # benchmark scale, 594 x 99
    sub = data.problem
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        theta = 3.0 * rng.standard_normal(sub.dim)
        phi_full = potential(sub.full, theta)
        phi_sum = sum(potential(blk, theta) for blk in sub.subsets)
        worst = max(worst, abs(phi_full - phi_sum) / (1.0 + abs(phi_full)))
    _report(2, worst <= 1e-10,
            f"splitting identity worst relative defect {worst:.2e} <= 1e-10 "
            f"at 100 states, {sub.n_sub} blocks",
            time.perf_counter() - t0)


def test_criterion_03_flows_stay_in_initial_span(desk_matrix):
    t0 = time.perf_counter()
    worst_cell, worst = None, -1.0
    for name in DESK_CELLS:
        cell = desk_matrix[name]
        r = max(cell.worst_residuals)
        if r > worst:
            worst_cell, worst = name, r
    wall = sum(desk_matrix[name].wall_seconds for name in DESK_CELLS)
    _report(3, worst <= 1e-8,
            f"worst span-projection residual {worst:.2e} <= 1e-08 "
            f"({worst_cell}; {len(DESK_CELLS)} cells x {N_DESK_RUNS} runs)",
            wall + (time.perf_counter() - t0))


def test_criterion_04_index_process_statistics():
    t0 = time.perf_counter()

    # (a) waiting-time law under a constant schedule
    rng = np.random.default_rng(104)
    sched = ConstantRate(0.5)
    waits = np.array([sample_waiting_time(sched, 0.0, rng) for _ in range(10_000)])
    ks = kstest(waits, expon(scale=0.5).cdf).statistic

    # (b) closed-form waiting inverses against a quadrature oracle
    def oracle(schedule, t_start, s):
        def cum(w):
            val, _ = quad(lambda u: 1.0 / schedule.value(u + t_start), 0.0, w,
                          limit=200, epsabs=1e-14, epsrel=1e-13)
            return val - s
        hi = 1.0
        while cum(hi) < 0.0:
            hi *= 2.0
        return brentq(cum, 0.0, hi, xtol=1e-13, rtol=8.9e-16)

    inv_err = 0.0
    check = np.random.default_rng(105)
    for schedule in (ExponentialRate(0.01, 10.0), ReciprocalRate(100.0, 100.0)):
        for _ in range(50):
            t_start = float(check.uniform(0.0, 0.5))
            s = float(check.exponential())
            got = schedule.invert_wait(t_start, s)
            inv_err = max(inv_err, abs(got - oracle(schedule, t_start, s)))

    # (c) jump targets uniform over the other blocks
    draw = np.random.default_rng(106)
    counts = np.zeros(6)
    for _ in range(100_000):
        counts[next_index(2, 6, draw)] += 1
    freqs = counts / counts.sum()
    freq_err = max(abs(freqs[i] - 0.2) for i in range(6) if i != 2)
    never_self = counts[2] == 0

    passed = ks < 0.02 and inv_err <= 1e-8 and freq_err <= 0.01 and never_self
    _report(4, passed,
            f"waiting-law KS {ks:.4f} < 0.02, inverse-vs-quadrature "
            f"{inv_err:.2e} <= 1e-08, target frequencies off by "
            f"{freq_err:.4f} <= 0.01, self-jumps {int(counts[2])}",
            time.perf_counter() - t0)


def test_criterion_05_inflated_misfit_decays_exponentially():
    t0 = time.perf_counter()
    cfg = dataclasses.replace(preset("heat_vi_single_desk"), t_end=1.0)
    rec, _, _, _ = run_single(cfg, 0)
    series = rec.obs_misfit.mean(axis=1)
    fit = rate_slope(rec.times, series, (0.2, 1.0), axes="semilogy")
    passed = fit.slope <= -2.0 and fit.r_squared >= 0.95
    _report(5, passed,
            f"misfit decay rate {fit.slope:.3f} (need <= -2.0), "
            f"R^2 {fit.r_squared:.3f} (need >= 0.95) on [0.2, 1.0]",
            time.perf_counter() - t0)


def test_criterion_06_uninflated_error_decays_like_one_over_t(desk_matrix):
    t0 = time.perf_counter()
    cell = desk_matrix["heat_novi_eki_desk"]
    sq = np.mean([r.param_error ** 2 for r in cell.records], axis=(0, 2))
    times = cell.records[0].times
    fit = rate_slope(times, sq, (1e2, 1e4), axes="loglog")
    passed = abs(fit.slope + 1.0) <= 0.3
    _report(6, passed,
            f"squared-error decay exponent {fit.slope:.3f} within -1 +/- 0.3 "
            f"on [1e2, 1e4], R^2 {fit.r_squared:.3f}",
            time.perf_counter() - t0)


def test_criterion_07_subsampling_matches_full_data_accuracy(desk_matrix):
    t0 = time.perf_counter()

    def final_error(name):
        cell = desk_matrix[name]
        return float(np.mean([r.param_error[-1].mean() for r in cell.records]))

    base = final_error("heat_novi_eki_desk")
    ratios = {}
    for key in ("single", "batch"):
        val = final_error(f"heat_novi_{key}_desk")
        r = val / base
        ratios[key] = max(r, 1.0 / r)
    passed = all(r <= 3.0 for r in ratios.values())
    _report(7, passed,
            f"final-error ratio vs full data: single {ratios['single']:.2f}, "
            f"batch {ratios['batch']:.2f} (need <= 3.0)",
            time.perf_counter() - t0)


def test_criterion_08_covariance_floor_in_coordinates():
    t0 = time.perf_counter()
    cfg = preset("heat_vi_single_desk")
    data = CampaignData(cfg)
    ens_seed, idx_seed = _run_seeds(cfg, 0)
    ens0 = draw_initial_ensemble(data.basis, cfg.n_ens,
                                 np.random.default_rng(ens_seed))
    frame = build_frame(ens0)
    sub_r = restrict_problem(frame, data.problem)
    coords = coordinates_of(frame, ens0)
    star_r, *_ = np.linalg.lstsq(sub_r.full.a_tilde, sub_r.full.y_tilde,
                                 rcond=None)

    flow = FlowSpec("teki_vi", "single", sub_r, alpha_vi=cfg.alpha_vi)
    state = start_process(cfg.schedule, sub_r.n_sub, "single",
                          np.random.default_rng(idx_seed), n_coords=cfg.n_ens)
    recorder = TrajectoryRecorder(star_r, sub_r.full, np.eye(frame.rank))
    icfg = IntegratorConfig(rtol=cfg.rtol, atol=cfg.atol,
                            dense_output_times=sample_times(cfg))
    integrate(flow, coords, state, (0.0, cfg.t_end), icfg, (recorder,))

    report = lambda_min_bound_check(recorder.record(), sub_r.subsets,
                                    slack=1e-10)
    _report(8, report.passed,
            f"min margin {report.margins.min():.2e} >= -1e-10 against "
            f"1/(2ct + 1/l0) with c = {report.c:.3f}",
            time.perf_counter() - t0)


def test_criterion_09_frozen_selection_dissipates_gradient_energy():
    t0 = time.perf_counter()
    base = preset("heat_novi_batch_desk")
    cfg = dataclasses.replace(base, schedule=ConstantRate(1e15), n_samples=50)
    data = CampaignData(cfg)
    ens_seed, idx_seed = _run_seeds(cfg, 0)
    ens0 = draw_initial_ensemble(data.basis, cfg.n_ens,
                                 np.random.default_rng(ens_seed))
    flow = FlowSpec(cfg.variant, "batch", data.problem)
    state = start_process(cfg.schedule, data.problem.n_sub, "batch",
                          np.random.default_rng(idx_seed), n_coords=cfg.n_ens)
    blocks = [data.problem.subsets[i] for i in state.current]

    tap = _EnsembleTap()
    icfg = IntegratorConfig(rtol=cfg.rtol, atol=cfg.atol,
                            dense_output_times=sample_times(cfg))
    result = integrate(flow, ens0, state, (0.0, cfg.t_end), icfg, (tap,))

    energies = np.array([
        [gradient_lyapunov(Ensemble(theta), blocks[j], j)
         for j in range(cfg.n_ens)]
        for _, theta in tap.samples
    ])
    increases = np.diff(energies, axis=0)
    worst = float(increases.max())
    scale = float(energies[0].max())
    passed = result.n_jumps == 0 and worst <= 1e-9 * max(scale, 1.0)
    _report(9, passed,
            f"max per-particle energy increase {worst:.2e} over "
            f"{energies.shape[0]} samples (jumps {result.n_jumps})",
            time.perf_counter() - t0)


def test_criterion_10_benchmark_switching_volume():
    t0 = time.perf_counter()
    cfg = preset("heat_vi_single")
    _, result, _, _ = run_single(cfg, 0)
    jumps = result.n_jumps
    _report(10, 1e5 <= jumps <= 4e5,
            f"index switches in one benchmark run: {jumps} in [1e5, 4e5]",
            time.perf_counter() - t0)


def test_criterion_11_campaigns_reproduce_byte_identically(tmp_path):
    t0 = time.perf_counter()
    cfg = preset("heat_smoke")
    a = run_experiment(cfg, tmp_path / "a")
    b = run_experiment(cfg, tmp_path / "b")
    files = ("run_001.csv", "run_002.csv", "aggregate.csv", "snapshot.csv")
    same = {f: filecmp.cmp(a / f, b / f, shallow=False) for f in files}
    _report(11, all(same.values()),
            "independent executions byte-identical: "
            + ", ".join(f"{f} {'yes' if ok else 'NO'}" for f, ok in same.items()),
            time.perf_counter() - t0)
