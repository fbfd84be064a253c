"""Observed quantities along ensemble trajectories, and their aggregation.

A trajectory record stores, at every sample time: per-particle distances to
the constrained Tikhonov reference in parameter space and (through the
augmented operator) in observation space, per-particle collapse norms, the
smallest covariance eigenvalue in subspace coordinates, and the number of
index jumps so far.  Records of repeated runs aggregate into mean/std
series keyed by series name.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import Ensemble

__all__ = [
    "TrajectoryRecord",
    "TrajectoryRecorder",
    "collapse_norms",
    "lambda_min_subspace",
    "BoundReport",
    "lambda_min_bound_check",
    "wasserstein_to_dirac",
    "FitResult",
    "rate_slope",
    "AggregateTable",
    "aggregate_runs",
]

_RUN_HEADER = "time,particle,param_error,obs_misfit,collapse,lambda_min,jumps"


def collapse_norms(ens: Ensemble) -> np.ndarray:
    """Distance of each particle from the ensemble mean, shape ``(n_ens,)``."""
    return np.linalg.norm(ens.centered(), axis=0)


def lambda_min_subspace(theta: np.ndarray, basis: np.ndarray) -> float:
    """Smallest eigenvalue of the particle covariance in frame coordinates.

    In the ambient space the covariance of a small ensemble is singular;
    restricted to the ``n_ens - 1`` frame coordinates it has full rank and
    spectral lower bounds are meaningful.
    """
    coords = basis.T @ (theta - theta.mean(axis=1, keepdims=True))
    cov = coords @ coords.T / (theta.shape[1] - 1)
    return float(np.linalg.eigvalsh(cov)[0])


@dataclass
class TrajectoryRecord:
    """Diagnostics of one run at sorted sample times.

    Per-particle arrays have shape ``(n_times, n_ens)``; ``lambda_min`` and
    ``jumps`` are per-time scalars.
    """

    times: np.ndarray
    param_error: np.ndarray
    obs_misfit: np.ndarray
    collapse: np.ndarray
    lambda_min: np.ndarray
    jumps: np.ndarray

    def __post_init__(self):
        n = self.times.size
        for name in ("param_error", "obs_misfit", "collapse"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} rows do not match the time axis")
        if self.lambda_min.shape != (n,) or self.jumps.shape != (n,):
            raise ValueError("per-time series do not match the time axis")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("times must be sorted")

    @property
    def n_ens(self) -> int:
        return self.param_error.shape[1]

    def series(self) -> dict[str, np.ndarray]:
        """Named scalar series: per-particle, particle means, and per-time."""
        out: dict[str, np.ndarray] = {}
        for name in ("param_error", "obs_misfit", "collapse"):
            block = getattr(self, name)
            for j in range(self.n_ens):
                out[f"{name}_p{j + 1}"] = block[:, j]
            out[f"{name}_mean"] = block.mean(axis=1)
        out["lambda_min"] = self.lambda_min
        out["jumps"] = self.jumps.astype(float)
        return out

    def save_csv(self, path) -> None:
        """Long-format CSV, one row per (time, particle)."""
        with open(path, "w") as fh:
            fh.write(_RUN_HEADER + "\n")
            for i, t in enumerate(self.times):
                for j in range(self.n_ens):
                    fh.write(
                        f"{t:.17g},{j + 1},{self.param_error[i, j]:.17g},"
                        f"{self.obs_misfit[i, j]:.17g},{self.collapse[i, j]:.17g},"
                        f"{self.lambda_min[i]:.17g},{int(self.jumps[i])}\n"
                    )

    @classmethod
    def load_csv(cls, path) -> "TrajectoryRecord":
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        with open(path) as fh:
            header = fh.readline().strip()
        if header != _RUN_HEADER:
            raise ValueError(f"unexpected run CSV header: {header!r}")
        n_ens = int(raw[:, 1].max())
        times = raw[::n_ens, 0]
        def col(k):
            return raw[:, k].reshape(-1, n_ens)
        return cls(
            times=times,
            param_error=col(2),
            obs_misfit=col(3),
            collapse=col(4),
            lambda_min=raw[::n_ens, 5],
            jumps=raw[::n_ens, 6].astype(int),
        )


class TrajectoryRecorder:
    """Integrator observer that assembles a :class:`TrajectoryRecord`.

    Needs the run's reference point ``theta_star``, the augmented full
    system (for observation-space distances) and the subspace frame basis
    (for the covariance eigenvalue).
    """

    def __init__(self, theta_star: np.ndarray, full_block, basis: np.ndarray):
        self._theta_star = np.asarray(theta_star, dtype=float)
        self._a = full_block.a_tilde
        self._obs_star = self._a @ self._theta_star
        self._basis = basis
        self._rows: list[tuple] = []
        self._jumps = 0

    def on_jump(self, event) -> None:
        self._jumps += 1

    def on_sample(self, t: float, theta: np.ndarray) -> None:
        diff = theta - self._theta_star[:, None]
        param = np.linalg.norm(diff, axis=0)
        obs = np.linalg.norm(self._a @ theta - self._obs_star[:, None], axis=0)
        coll = np.linalg.norm(theta - theta.mean(axis=1, keepdims=True), axis=0)
        lam = lambda_min_subspace(theta, self._basis)
        self._rows.append((t, param, obs, coll, lam, self._jumps))

    def record(self) -> TrajectoryRecord:
        if not self._rows:
            raise ValueError("no samples were recorded")
        times = np.array([r[0] for r in self._rows])
        return TrajectoryRecord(
            times=times,
            param_error=np.vstack([r[1] for r in self._rows]),
            obs_misfit=np.vstack([r[2] for r in self._rows]),
            collapse=np.vstack([r[3] for r in self._rows]),
            lambda_min=np.array([r[4] for r in self._rows]),
            jumps=np.array([r[5] for r in self._rows], dtype=int),
        )


@dataclass(frozen=True)
class BoundReport:
    """Outcome of the covariance eigenvalue lower-bound check."""

    times: np.ndarray
    lambda_min: np.ndarray
    bound: np.ndarray
    margins: np.ndarray
    c: float
    passed: bool


def lambda_min_bound_check(record: TrajectoryRecord, blocks,
                           slack: float = 1e-10) -> BoundReport:
    """Check ``lambda_min(t) >= 1 / (2 c t + 1/lambda_min(0))`` along a run.

    ``c`` is the largest squared spectral norm over the given least-squares
    blocks (the active system changes over time, so the worst block bounds
    the decay).  Margins are ``lambda_min - bound``; the check passes when
    no margin is below ``-slack``.
    """
    lam0 = float(record.lambda_min[0])
    if not lam0 > 0.0:
        raise ValueError("initial lambda_min must be positive (use subspace coordinates)")
    c = max(float(np.linalg.norm(b.a_tilde, 2)) ** 2 for b in blocks)
    bound = 1.0 / (2.0 * c * record.times + 1.0 / lam0)
    margins = record.lambda_min - bound
    return BoundReport(
        times=record.times,
        lambda_min=record.lambda_min,
        bound=bound,
        margins=margins,
        c=c,
        passed=bool(margins.min() >= -slack),
    )


def wasserstein_to_dirac(samples: np.ndarray, target: np.ndarray, q: float = 1.0) -> float:
    """Truncated transport distance from an empirical measure to a point mass.

    Computes ``mean_j min(1, |theta_j - target|^q)``, the transport cost with
    ground metric ``min(1, dist^q)``; useful as a bounded convergence
    indicator for ensembles.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] == 0:
        raise ValueError("need a non-empty (d, m) sample matrix")
    dist = np.linalg.norm(samples - np.asarray(target, dtype=float)[:, None], axis=0)
    return float(np.mean(np.minimum(1.0, dist ** q)))


@dataclass(frozen=True)
class FitResult:
    """Least-squares line fit in transformed axes."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int


def rate_slope(times: np.ndarray, values: np.ndarray, window: tuple[float, float],
               axes: str = "loglog") -> FitResult:
    """Fit a decay rate on ``axes`` ('loglog' or 'semilogy').

    Restricts to sample times inside the closed ``window``; requires at
    least 10 points there and strictly positive values (and times, for
    loglog), otherwise raises ``ValueError``.  On loglog axes the slope is
    the algebraic decay exponent (log values against log times, so the
    log base cancels); on semilogy it is the exponential rate, i.e. the
    slope of the natural log of the values against time, so that
    ``values = exp(-c*t)`` yields slope ``-c`` exactly.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (times >= lo) & (times <= hi)
    t, v = times[mask], values[mask]
    if t.size < 10:
        raise ValueError(f"only {t.size} samples inside [{lo}, {hi}]; need >= 10")
    if np.any(v <= 0.0):
        raise ValueError("values must be positive for a log fit")
    if axes == "loglog":
        if np.any(t <= 0.0):
            raise ValueError("times must be positive for a loglog fit")
        x = np.log(t)
    elif axes == "semilogy":
        x = t
    else:
        raise ValueError(f"unknown axes {axes!r}")
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), r2, int(t.size))


@dataclass
class AggregateTable:
    """Mean/std of named series across runs, on a shared time axis."""

    times: np.ndarray
    names: list[str]
    mean: np.ndarray  # (n_times, n_series)
    std: np.ndarray
    n_runs: int

    def column(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        k = self.names.index(name)
        return self.mean[:, k], self.std[:, k]

    def save_csv(self, path) -> None:
        """Tidy CSV with columns time, series_name, mean, std, n_runs."""
        with open(path, "w") as fh:
            fh.write("time,series_name,mean,std,n_runs\n")
            for k, name in enumerate(self.names):
                for i, t in enumerate(self.times):
                    fh.write(
                        f"{t:.17g},{name},{self.mean[i, k]:.17g},"
                        f"{self.std[i, k]:.17g},{self.n_runs}\n"
                    )

    @classmethod
    def load_csv(cls, path) -> "AggregateTable":
        names: list[str] = []
        rows: dict[str, list[tuple[float, float, float]]] = {}
        n_runs = None
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "time,series_name,mean,std,n_runs":
                raise ValueError(f"unexpected aggregate CSV header: {header!r}")
            for line in fh:
                t, name, m, s, n = line.strip().split(",")
                if name not in rows:
                    rows[name] = []
                    names.append(name)
                rows[name].append((float(t), float(m), float(s)))
                n_runs = int(n)
        if not names:
            raise ValueError("aggregate CSV contains no data rows")
        times = np.array([r[0] for r in rows[names[0]]])
        mean = np.column_stack([[r[1] for r in rows[n]] for n in names])
        std = np.column_stack([[r[2] for r in rows[n]] for n in names])
        return cls(times, names, mean, std, n_runs)


def aggregate_runs(records: list[TrajectoryRecord]) -> AggregateTable:
    """Combine repeated runs into per-series mean and std (ddof=1).

    All records must share an identical time axis.  With a single run the
    std columns are zero.
    """
    if not records:
        raise ValueError("need at least one record")
    times = records[0].times
    for r in records[1:]:
        if not np.array_equal(r.times, times):
            raise ValueError("records disagree on the time axis")
    all_series = [r.series() for r in records]
    names = list(all_series[0].keys())
    stacks = {n: np.column_stack([s[n] for s in all_series]) for n in names}
    mean = np.column_stack([stacks[n].mean(axis=1) for n in names])
    if len(records) > 1:
        std = np.column_stack([stacks[n].std(axis=1, ddof=1) for n in names])
    else:
        std = np.zeros_like(mean)
    return AggregateTable(times, names, mean, std, len(records))
