"""1D heat equation source identification: the benchmark forward model.

The unknown is a time-independent source ``f`` on the unit interval with
homogeneous Dirichlet boundaries and zero initial temperature.  The forward
map observes the Crank-Nicolson solution at equidistant interior points
after every time step and stacks the observation blocks, so one block per
time step gives a natural data partition.  Priors and truths are drawn from
a squared-exponential Gaussian random field through a truncated
Karhunen-Loeve expansion on the interior grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .problems import DataPartition, Ensemble

__all__ = [
    "HeatConfig",
    "KLFieldSpec",
    "KLBasis",
    "assemble_forward",
    "partition_by_timestep",
    "interior_grid",
    "kl_basis",
    "sample_kl_field",
    "draw_initial_ensemble",
]


def _int_ratio(num: float, den: float, what: str) -> int:
    ratio = num / den
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9:
        raise ValueError(f"{what}: {num} is not an integral multiple of {den}")
    return n


@dataclass(frozen=True)
class HeatConfig:
    """Discretization of the heat problem.

    h             spatial mesh width; 1/h must be an integer.
    dt            time step of the Crank-Nicolson scheme.
    T             time horizon; T/dt time steps, at least two (each step
                  contributes one observation block).
    obs_per_step  number of equidistant interior observation points per
                  step; ``None`` observes every interior node.
    """

    h: float
    dt: float
    T: float
    obs_per_step: int | None = None

    def __post_init__(self):
        if not 0.0 < self.h < 1.0:
            raise ValueError("h must lie in (0, 1)")
        _int_ratio(1.0, self.h, "mesh")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.n_steps < 2:
            raise ValueError("need at least two time steps (blocks)")
        m = self.n_obs_per_step
        if not 1 <= m <= self.n_interior:
            raise ValueError("obs_per_step out of range")

    @property
    def n_interior(self) -> int:
        return _int_ratio(1.0, self.h, "mesh") - 1

    @property
    def n_steps(self) -> int:
        return _int_ratio(self.T, self.dt, "horizon")

    @property
    def n_obs_per_step(self) -> int:
        return self.n_interior if self.obs_per_step is None else int(self.obs_per_step)

    @property
    def n_obs(self) -> int:
        return self.n_steps * self.n_obs_per_step

    def observation_rows(self) -> np.ndarray:
        """Indices of observed interior nodes, equidistant over the grid."""
        n, m = self.n_interior, self.n_obs_per_step
        rows = np.round(np.linspace(0, n - 1, m)).astype(int)
        if np.any(np.diff(rows) <= 0):
            raise ValueError("obs_per_step incompatible with the mesh")
        return rows


def interior_grid(cfg: HeatConfig) -> np.ndarray:
    """Interior node coordinates ``h, 2h, ..., 1-h``."""
    n = cfg.n_interior
    return (np.arange(1, n + 1)) * cfg.h


def assemble_forward(cfg: HeatConfig) -> np.ndarray:
    """Dense forward matrix mapping a source vector to all stacked observations.

    Row block ``k`` holds the observed Crank-Nicolson solution after step
    ``k+1``: ``(I/dt + L/2) u_{k+1} = (I/dt - L/2) u_k + f`` with the
    three-point Laplacian ``L``, zero initial state and Dirichlet walls.
    """
    n = cfg.n_interior
    dt = cfg.dt
    inv_h2 = 1.0 / (cfg.h * cfg.h)

    # banded storage of the tridiagonal left-hand matrix I/dt + L/2
    ab = np.zeros((3, n))
    ab[0, 1:] = -0.5 * inv_h2
    ab[1, :] = 1.0 / dt + inv_h2
    ab[2, :-1] = -0.5 * inv_h2

    def rhs_apply(U: np.ndarray) -> np.ndarray:
        # (I/dt - L/2) U  for tridiagonal L
        out = (1.0 / dt - inv_h2) * U
        out[:-1] += 0.5 * inv_h2 * U[1:]
        out[1:] += 0.5 * inv_h2 * U[:-1]
        return out

    rows = cfg.observation_rows()
    A = np.empty((cfg.n_obs, n))
    U = np.zeros((n, n))  # column j: solution for source = unit vector j
    eye = np.eye(n)
    for k in range(cfg.n_steps):
        U = solve_banded((1, 1), ab, rhs_apply(U) + eye)
        A[k * len(rows):(k + 1) * len(rows)] = U[rows]
    return A


def partition_by_timestep(cfg: HeatConfig) -> DataPartition:
    """One data block per time step, matching :func:`assemble_forward` rows."""
    return DataPartition((cfg.n_obs_per_step,) * cfg.n_steps)


@dataclass(frozen=True)
class KLFieldSpec:
    """Squared-exponential Gaussian field, truncated Karhunen-Loeve expansion.

    Covariance ``sigma2 * exp(-|s-t|^2 / l_sc)`` on the unit interval,
    discretized on ``grid`` with uniform quadrature weights; the expansion
    keeps the ``n_terms`` leading eigenpairs.
    """

    sigma2: float
    l_sc: float
    n_terms: int
    grid: np.ndarray

    def __post_init__(self):
        if self.sigma2 < 0.0:
            raise ValueError("sigma2 must be non-negative")
        if not self.l_sc > 0.0:
            raise ValueError("l_sc must be positive")
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not 1 <= self.n_terms <= g.size:
            raise ValueError("n_terms must lie in [1, len(grid)]")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "n_terms", int(self.n_terms))

    def covariance(self) -> np.ndarray:
        """Kernel matrix on the grid."""
        diff = self.grid[:, None] - self.grid[None, :]
        return self.sigma2 * np.exp(-(diff * diff) / self.l_sc)


@dataclass(frozen=True)
class KLBasis:
    """Leading eigenpairs of the discretized field covariance.

    ``modes`` columns are eigenfunctions orthonormal in the quadrature inner
    product; ``fields = modes * sqrt(eigenvalues)`` so a standard normal
    coefficient vector maps to one field sample.
    """

    eigenvalues: np.ndarray
    modes: np.ndarray
    fields: np.ndarray
    trace_fraction: float

    @property
    def n_terms(self) -> int:
        return self.eigenvalues.size


def kl_basis(spec: KLFieldSpec) -> KLBasis:
    """Solve the discretized eigenproblem and keep the leading terms.

    Uses the symmetrized quadrature form: with uniform weight ``w`` the
    matrix ``w * C`` shares eigenvalues with the integral operator's
    discretization, and eigenfunctions are recovered by ``1/sqrt(w)``.
    Eigenvalues are returned in descending order.
    """
    grid = spec.grid
    w = float(np.mean(np.diff(grid)))
    c = spec.covariance()
    vals, vecs = np.linalg.eigh(w * c)
    order = np.argsort(vals)[::-1][: spec.n_terms]
    lam = vals[order]
    if spec.sigma2 > 0.0 and lam[-1] <= 0.0:
        raise ValueError("requested more terms than positive eigenvalues")
    lam = np.clip(lam, 0.0, None)
    modes = vecs[:, order] / np.sqrt(w)
    total = np.trace(w * c)
    frac = float(lam.sum() / total) if total > 0.0 else 1.0
    return KLBasis(lam, modes, modes * np.sqrt(lam), frac)


def sample_kl_field(basis: KLBasis, rng: np.random.Generator,
                    n_draws: int = 1) -> np.ndarray:
    """Draw field realizations; shape ``(n_grid,)`` or ``(n_grid, n_draws)``."""
    xi = rng.standard_normal((basis.n_terms, n_draws))
    out = basis.fields @ xi
    return out[:, 0] if n_draws == 1 else out


def draw_initial_ensemble(basis: KLBasis, n_ens: int, rng: np.random.Generator,
                          max_retries: int = 10) -> Ensemble:
    """Sample an initial ensemble of fields with maximal centered rank.

    The centered particles must span a space of dimension
    ``min(n_ens - 1, n_terms)`` (the generic rank of that many draws); rank
    deficient draws are rejected and retried a bounded number of times.
    """
    want = min(n_ens - 1, basis.n_terms)
    for _ in range(max_retries + 1):
        ens = Ensemble(sample_kl_field(basis, rng, n_ens))
        if ens.centered_rank() == want:
            return ens
    raise RuntimeError(
        f"could not draw an ensemble of centered rank {want} "
        f"in {max_retries + 1} attempts"
    )
