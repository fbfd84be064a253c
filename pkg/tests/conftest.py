"""Shared fixtures: small synthetic problems and the desk-scale campaign matrix.

The desk matrix (all nine method/variant cells, eight runs each) is expensive,
so it is built once per session and shared by every test that needs real
trajectories.  Each run carries an extra observer tracking how far particles
drift from the affine span of their initial ensemble.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

from subeki.configs import ExperimentConfig, list_presets, preset
from subeki.flows import subspace_projection_residual
from subeki.problems import DataPartition, Ensemble, LinearProblem
from subeki.runner import CampaignData, run_single

N_DESK_RUNS = 8


class SpanDriftProbe:
    """Observer recording the worst relative off-span residual of a run."""

    def __init__(self):
        self.worst = 0.0
        self._basis = None
        self._offset = None

    def on_run_start(self, frame, theta_star):
        self._basis = frame.basis
        self._offset = frame.offset

    def on_sample(self, t, theta):
        r = subspace_projection_residual(Ensemble(theta), self._basis, self._offset)
        if r > self.worst:
            self.worst = r


@dataclass
class CellRuns:
    """All runs of one campaign cell, kept in memory for the test session."""

    cfg: ExperimentConfig
    records: list
    theta_stars: list
    worst_residuals: list
    jump_counts: list
    wall_seconds: float


def run_cell(cfg: ExperimentConfig, n_runs: int | None = None) -> CellRuns:
    data = CampaignData(cfg)
    started = time.perf_counter()
    records, stars, resids, jumps = [], [], [], []
    for r in range(n_runs if n_runs is not None else cfg.n_runs):
        probe = SpanDriftProbe()
        record, result, theta_star, _ = run_single(cfg, r, data, observers=(probe,))
        records.append(record)
        stars.append(theta_star)
        resids.append(probe.worst)
        jumps.append(result.n_jumps)
    return CellRuns(cfg, records, stars, resids, jumps,
                    time.perf_counter() - started)


DESK_CELLS = tuple(name for name in list_presets() if name.endswith("_desk"))


@pytest.fixture(scope="session")
def desk_matrix() -> dict[str, CellRuns]:
    """Eight runs of every desk-scale preset, with span-drift tracking."""
    return {name: run_cell(preset(name), N_DESK_RUNS) for name in DESK_CELLS}


@pytest.fixture(scope="session")
def desk_data() -> CampaignData:
    """Campaign-fixed heat problem of the no-inflation desk preset."""
    return CampaignData(preset("heat_novi_eki_desk"))


@pytest.fixture(scope="session")
def small_problem():
    """Tiny dense problem with three data blocks for unit-level flow tests."""
    rng = np.random.default_rng(7)
    d, rows = 4, (2, 3, 2)
    A = rng.standard_normal((sum(rows), d))
    theta_true = rng.standard_normal(d)
    y = A @ theta_true + 0.05 * rng.standard_normal(sum(rows))
    problem = LinearProblem(A, y, np.eye(sum(rows)))
    return problem, DataPartition(rows)


# --- acceptance reporting ---------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_criterion(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
