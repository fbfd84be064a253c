"""Linear inverse problem containers and elementary ensemble statistics.

A problem is the triple ``(A, y, gamma)`` for observations
``y = A theta + noise`` with noise covariance ``gamma``.  Data may be split
row-wise into contiguous blocks (one block per observation event); whitening
rescales the rows so the noise covariance becomes the identity, block by
block, which keeps the block structure exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LinearProblem",
    "DataPartition",
    "Ensemble",
    "whiten",
    "partition",
    "empirical_mean",
    "empirical_covariance",
    "cross_covariance",
    "save_matrix",
    "load_matrix",
]

_SYM_TOL = 1e-12


def _as_readonly(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LinearProblem:
    """Linear observation model ``y = A theta + noise``.

    Parameters
    ----------
    A : ndarray, shape (n_obs, d)
        Forward operator.
    y : ndarray, shape (n_obs,)
        Observed data.
    gamma : ndarray, shape (n_obs, n_obs)
        Symmetric positive definite noise covariance.

    All arrays are copied and frozen; instances are safe to share between
    worker processes.
    """

    A: np.ndarray
    y: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        A = _as_readonly(self.A)
        y = _as_readonly(self.y)
        gamma = _as_readonly(self.gamma)
        if A.ndim != 2:
            raise ValueError("A must be a 2-d array")
        n_obs, _ = A.shape
        if y.shape != (n_obs,):
            raise ValueError(f"y has shape {y.shape}, expected ({n_obs},)")
        if gamma.shape != (n_obs, n_obs):
            raise ValueError(f"gamma has shape {gamma.shape}, expected ({n_obs}, {n_obs})")
        scale = max(np.abs(gamma).max(), 1.0)
        if np.abs(gamma - gamma.T).max() > _SYM_TOL * scale:
            raise ValueError("gamma is not symmetric")
        if _diagonal(gamma):
            if gamma.diagonal().min() <= 0.0:
                raise ValueError("gamma is not positive definite")
        elif np.linalg.eigvalsh(gamma).min() <= 0.0:
            raise ValueError("gamma is not positive definite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n_obs(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class DataPartition:
    """Contiguous row-wise split of the observations into blocks.

    ``block_sizes`` lists the number of rows per block, in order.  At least
    two blocks are required (a single block is just the full problem) and
    every block must be non-empty.
    """

    block_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if len(sizes) < 2:
            raise ValueError("a partition needs at least two blocks")
        if any(s < 1 for s in sizes):
            raise ValueError("every block must contain at least one row")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def n_sub(self) -> int:
        return len(self.block_sizes)

    @property
    def n_rows(self) -> int:
        return int(sum(self.block_sizes))

    def offsets(self) -> np.ndarray:
        """Row offsets of the blocks: ``offsets[i]:offsets[i+1]`` is block i."""
        return np.concatenate(([0], np.cumsum(self.block_sizes)))


@dataclass(frozen=True)
class Ensemble:
    """A set of particles stored column-wise, shape ``(d, n_ens)``."""

    particles: np.ndarray

    def __post_init__(self):
        p = _as_readonly(self.particles)
        if p.ndim != 2:
            raise ValueError("particles must be a 2-d array (d, n_ens)")
        if p.shape[1] < 2:
            raise ValueError("an ensemble needs at least two particles")
        object.__setattr__(self, "particles", p)

    @property
    def dim(self) -> int:
        return self.particles.shape[0]

    @property
    def n_ens(self) -> int:
        return self.particles.shape[1]

    def centered(self) -> np.ndarray:
        """Particles with the ensemble mean subtracted."""
        return self.particles - self.particles.mean(axis=1, keepdims=True)

    def centered_rank(self, rtol: float = 1e-10) -> int:
        """Numerical rank of the centered particle family.

        Centered particles always sum to zero, so the rank is at most
        ``n_ens - 1``.
        """
        s = np.linalg.svd(self.centered(), compute_uv=False)
        if s[0] == 0.0:
            return 0
        return int(np.count_nonzero(s > rtol * s[0]))


def _diagonal(m: np.ndarray) -> bool:
    return np.count_nonzero(m - np.diag(m.diagonal())) == 0


def _inv_sqrt_spd(m: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root of an SPD matrix (exact for diagonal input)."""
    if _diagonal(m):
        return np.diag(1.0 / np.sqrt(m.diagonal()))
    w, v = np.linalg.eigh(m)
    if w.min() <= 0.0:
        raise ValueError("matrix is not positive definite")
    return (v / np.sqrt(w)) @ v.T


def whiten(problem: LinearProblem, part: DataPartition | None = None) -> LinearProblem:
    """Rescale a problem so its noise covariance becomes the identity.

    Multiplies ``A`` and ``y`` by the symmetric inverse square root of
    ``gamma``.  With a partition the transform is applied block by block,
    which preserves the block-diagonal structure exactly; diagonal
    covariances take an exact per-row scaling path either way.  Whitening an
    already-white problem returns it unchanged.
    """
    gamma = problem.gamma
    n = problem.n_obs
    if np.array_equal(gamma, np.eye(n)):
        return problem
    if _diagonal(gamma):
        scale = 1.0 / np.sqrt(gamma.diagonal())
        A = problem.A * scale[:, None]
        y = problem.y * scale
    elif part is not None:
        _check_block_diagonal(gamma, part)
        off = part.offsets()
        A = np.empty_like(problem.A)
        y = np.empty_like(problem.y)
        for i in range(part.n_sub):
            lo, hi = off[i], off[i + 1]
            w = _inv_sqrt_spd(gamma[lo:hi, lo:hi])
            A[lo:hi] = w @ problem.A[lo:hi]
            y[lo:hi] = w @ problem.y[lo:hi]
    else:
        w = _inv_sqrt_spd(gamma)
        A = w @ problem.A
        y = w @ problem.y
    return LinearProblem(A, y, np.eye(n))


def _check_block_diagonal(gamma: np.ndarray, part: DataPartition) -> None:
    off = part.offsets()
    for i in range(part.n_sub):
        lo, hi = off[i], off[i + 1]
        rest = np.delete(gamma[lo:hi], np.s_[lo:hi], axis=1)
        if np.count_nonzero(rest) != 0:
            raise ValueError(
                f"gamma couples block {i} to other blocks; partition does not match"
            )


def partition(problem: LinearProblem, part: DataPartition) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split ``(A, y)`` into the partition's row blocks.

    Returns a list of ``(A_i, y_i)`` views in block order.  Stacking the
    blocks reproduces the inputs exactly.  The partition must cover all rows
    and ``gamma`` must not couple distinct blocks.
    """
    if part.n_rows != problem.n_obs:
        raise ValueError(
            f"partition covers {part.n_rows} rows but the problem has {problem.n_obs}"
        )
    _check_block_diagonal(problem.gamma, part)
    off = part.offsets()
    return [
        (problem.A[off[i]: off[i + 1]], problem.y[off[i]: off[i + 1]])
        for i in range(part.n_sub)
    ]


def empirical_mean(ens: Ensemble) -> np.ndarray:
    """Ensemble mean, shape ``(d,)``."""
    return ens.particles.mean(axis=1)


def empirical_covariance(ens: Ensemble) -> np.ndarray:
    """Sample covariance of the particles with divisor ``n_ens - 1``.

    The result is symmetric positive semi-definite and its rank equals the
    rank of the centered particle family.
    """
    e = ens.centered()
    c = e @ e.T / (ens.n_ens - 1)
    return 0.5 * (c + c.T)


def cross_covariance(ens: Ensemble, A: np.ndarray) -> np.ndarray:
    """Sample cross-covariance between particles and their images under ``A``.

    Equals ``empirical_covariance(ens) @ A.T`` up to rounding, but is formed
    from centered particle/image pairs directly.
    """
    e = ens.centered()
    return e @ (A @ e).T / (ens.n_ens - 1)


def save_matrix(path, m: np.ndarray) -> None:
    """Write a 1-d or 2-d array as CSV (``.csv``) or columnar binary (``.npy``)."""
    path = str(path)
    if path.endswith(".csv"):
        np.savetxt(path, np.atleast_2d(m), delimiter=",", fmt="%.17g")
    elif path.endswith(".npy"):
        np.save(path, np.asarray(m, dtype=float))
    else:
        raise ValueError(f"unsupported fixture extension: {path}")


def load_matrix(path) -> np.ndarray:
    """Inverse of :func:`save_matrix`; CSV round-trips to 1e-15 relative, binary exactly."""
    path = str(path)
    if path.endswith(".csv"):
        return np.loadtxt(path, delimiter=",", ndmin=2)
    if path.endswith(".npy"):
        return np.load(path)
    raise ValueError(f"unsupported fixture extension: {path}")
