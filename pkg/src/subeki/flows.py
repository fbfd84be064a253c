"""Right-hand sides of the ensemble flows.

Every variant is a preconditioned gradient flow

    d theta_j / dt = -P(t) grad Phi_sel(theta_j),

where ``P(t)`` is the ensemble covariance, optionally inflated by a constant
or ``1/(1+t)``-decaying multiple of a fixed matrix, and ``Phi_sel`` is the
least-squares potential of either the full data or the block currently
selected by the index process (one shared block, or one block per particle).
The plain Kalman variant uses the cross-covariance form
``-Chat_xy (A theta_j - y)``, which coincides with the preconditioned
gradient for linear forward maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import DataPartition, Ensemble, LinearProblem, partition
from .tikhonov import AugmentedProblem, augment_full, augment_subset, potential

__all__ = [
    "LstsqBlock",
    "SubsampledProblem",
    "build_subsampled",
    "FlowSpec",
    "rhs",
    "drift_matrix",
    "subspace_projection_residual",
    "gradient_lyapunov",
    "gradient_lyapunov_dual",
]

VARIANTS = ("eki", "teki", "teki_vi", "teki_dim_vi")
SUBSAMPLING_MODES = ("none", "single", "batch")


@dataclass(frozen=True)
class LstsqBlock:
    """A bare least-squares system ``0.5 |y_tilde - a_tilde theta|^2``.

    Carries the same operator/data attributes as an augmented problem, so
    flows accept either; used for problems already expressed in reduced
    coordinates.
    """

    a_tilde: np.ndarray
    y_tilde: np.ndarray


@dataclass(frozen=True)
class SubsampledProblem:
    """A whitened linear problem together with its block decomposition.

    ``full`` is the augmented full-data system, ``subsets`` the augmented
    per-block systems whose potentials sum exactly to the full potential.
    ``raw`` and ``raw_blocks`` keep the unaugmented operator and data for
    the plain Kalman variant.
    """

    raw: LinearProblem
    part: DataPartition
    full: AugmentedProblem | LstsqBlock
    subsets: tuple

    def __post_init__(self):
        if len(self.subsets) != self.part.n_sub:
            raise ValueError("one augmented system per block is required")
        # Additive decomposition of the potential, probed at fixed vectors.
        d = self.full.a_tilde.shape[1]
        probe_rng = np.random.default_rng(0)
        probes = probe_rng.standard_normal((d, 3))
        full_val = np.asarray(potential(self.full, probes))
        sub_val = sum(np.asarray(potential(s, probes)) for s in self.subsets)
        gap = np.abs(sub_val - full_val)
        if np.any(gap > 1e-10 * (1.0 + full_val)):
            raise ValueError("block potentials do not sum to the full potential")

    @property
    def n_sub(self) -> int:
        return self.part.n_sub

    @property
    def dim(self) -> int:
        return self.full.a_tilde.shape[1]

    def raw_blocks(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return partition(self.raw, self.part)


def build_subsampled(problem: LinearProblem, part: DataPartition, alpha: float,
                     c0: np.ndarray | None = None) -> SubsampledProblem:
    """Partition a whitened problem and augment the full system and every block.

    Each block receives the split weight ``alpha / n_sub`` so the block
    potentials add up to the full regularized potential.
    """
    blocks = partition(problem, part)
    full = augment_full(problem.A, problem.y, alpha, c0)
    subsets = tuple(
        augment_subset(A_i, y_i, alpha, part.n_sub, c0) for A_i, y_i in blocks
    )
    return SubsampledProblem(problem, part, full, subsets)


@dataclass(frozen=True)
class FlowSpec:
    """Which flow to integrate.

    variant      'eki' (plain Kalman), 'teki' (regularized), 'teki_vi'
                 (constant inflation), 'teki_dim_vi' (inflation decaying
                 like 1/(1+t)).
    subsampling  'none', 'single' (one shared block) or 'batch' (one block
                 per particle).
    alpha_vi     inflation magnitude, required by the *_vi variants.
    c_vi         symmetric positive semidefinite inflation matrix; ``None``
                 means the identity.  A projector onto the centered span of
                 the initial ensemble keeps the flow inside that span.
    """

    variant: str
    subsampling: str
    problem: SubsampledProblem
    alpha_vi: float = 0.0
    c_vi: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.subsampling not in SUBSAMPLING_MODES:
            raise ValueError(f"unknown subsampling mode {self.subsampling!r}")
        if self.variant in ("teki_vi", "teki_dim_vi"):
            if not self.alpha_vi > 0.0:
                raise ValueError("inflated variants need alpha_vi > 0")
            if self.c_vi is not None:
                c = np.asarray(self.c_vi, dtype=float)
                if c.shape != (self.problem.dim, c.shape[0]):
                    raise ValueError("c_vi has the wrong shape")
                if np.abs(c - c.T).max() > 1e-12 * max(np.abs(c).max(), 1.0):
                    raise ValueError("c_vi is not symmetric")
                if np.linalg.eigvalsh(c).min() < -1e-10 * max(np.abs(c).max(), 1.0):
                    raise ValueError("c_vi is not positive semidefinite")
        # Normal-matrix form of every block's gradient, prepared once so the
        # drift evaluation is a single small matmul per call.
        full = self.problem.full
        object.__setattr__(self, "_gram_full", full.a_tilde.T @ full.a_tilde)
        object.__setattr__(self, "_mom_full",
                           (full.a_tilde.T @ full.y_tilde)[:, None])
        subs = self.problem.subsets
        if subs:
            object.__setattr__(self, "_gram_sub", np.stack(
                [b.a_tilde.T @ b.a_tilde for b in subs]))
            object.__setattr__(self, "_mom_sub", np.stack(
                [b.a_tilde.T @ b.y_tilde for b in subs]))

    def inflation_coefficient(self, t: float) -> float:
        """Weight of the inflation term at time ``t`` (0 when not inflated)."""
        if self.variant == "teki_vi":
            return self.alpha_vi
        if self.variant == "teki_dim_vi":
            return self.alpha_vi / (1.0 + t)
        return 0.0


def drift_matrix(spec: FlowSpec, theta: np.ndarray, t: float,
                 indices: np.ndarray | None = None) -> np.ndarray:
    """Drift of all particles, on bare arrays; the hot path of the solver.

    ``theta`` has shape ``(d, n_ens)``; ``indices`` gives the active block
    per particle (ignored for subsampling='none').  The ensemble covariance
    is reassembled from the current particles on every call.
    """
    n_ens = theta.shape[1]
    centered = theta - theta.sum(axis=1)[:, None] * (1.0 / n_ens)

    if spec.variant == "eki":
        # cross-covariance form on the raw (unaugmented) system
        if spec.subsampling == "none":
            A, y = spec.problem.raw.A, spec.problem.raw.y
            resid = A @ theta - y[:, None]
            return -centered @ ((A @ centered).T @ resid) / (n_ens - 1)
        drift = np.empty_like(theta)
        blocks = spec.problem.raw_blocks()
        for i, cols in _groups(spec, indices, n_ens):
            A, y = blocks[i]
            resid = A @ theta[:, cols] - y[:, None]
            drift[:, cols] = -centered @ ((A @ centered).T @ resid) / (n_ens - 1)
        return drift

    if spec.subsampling == "none":
        grad = spec._gram_full @ theta
        grad -= spec._mom_full
    elif spec.subsampling == "single":
        if indices is None:
            raise ValueError("subsampled flows need the active block indices")
        i = int(indices[0]) if getattr(indices, "ndim", 0) else int(indices)
        grad = spec._gram_sub[i] @ theta
        grad -= spec._mom_sub[i][:, None]
    else:
        if indices is None:
            raise ValueError("subsampled flows need the active block indices")
        if indices.shape != (n_ens,):
            raise ValueError("batch mode needs one index per particle")
        grad = np.einsum("jdk,kj->dj", spec._gram_sub[indices], theta)
        grad -= spec._mom_sub[indices].T

    drift = centered @ (centered.T @ grad)
    drift *= -1.0 / (n_ens - 1)
    coef = spec.inflation_coefficient(t)
    if coef != 0.0:
        if spec.c_vi is None:
            drift -= coef * grad
        else:
            drift -= coef * (spec.c_vi @ grad)
    return drift


def _groups(spec: FlowSpec, indices: np.ndarray | None, n_ens: int):
    """(block, particle-columns) pairs for the current index assignment."""
    if indices is None:
        raise ValueError("subsampled flows need the active block indices")
    idx = np.asarray(indices)
    if spec.subsampling == "single":
        i = int(idx[0]) if idx.ndim else int(idx)
        return [(i, slice(None))]
    if idx.shape != (n_ens,):
        raise ValueError("batch mode needs one index per particle")
    return [(int(i), np.flatnonzero(idx == i)) for i in np.unique(idx)]


def rhs(spec: FlowSpec, ens: Ensemble, t: float,
        indices: np.ndarray | int | None = None) -> np.ndarray:
    """Drift of every particle as a ``(d, n_ens)`` array.

    Convenience wrapper around :func:`drift_matrix` accepting an
    :class:`~subeki.problems.Ensemble` and a scalar index in single mode.
    """
    idx = None
    if indices is not None:
        idx = np.atleast_1d(np.asarray(indices, dtype=np.intp))
    return drift_matrix(spec, ens.particles, float(t), idx)


def subspace_projection_residual(ens: Ensemble, basis: np.ndarray,
                                 offset: np.ndarray) -> float:
    """Largest relative distance of any particle from the affine span.

    For each particle, ``theta_j - offset`` is projected onto the
    orthonormal columns of ``basis``; the residual norm is divided by the
    particle's own deviation norm.  Exactly spanned ensembles give 0.
    """
    v = ens.particles - np.asarray(offset, dtype=float)[:, None]
    resid = v - basis @ (basis.T @ v)
    num = np.linalg.norm(resid, axis=0)
    den = np.maximum(np.linalg.norm(v, axis=0), 1e-300)
    return float((num / den).max())


def gradient_lyapunov(ens: Ensemble, block, j: int) -> float:
    """Gradient energy ``g' (A~'A~) g = |A~ g|^2`` of particle ``j``.

    ``g`` is the potential gradient of ``block`` at the particle.  Zero
    exactly at the block's least-squares minimizer.
    """
    g = block.a_tilde.T @ (block.a_tilde @ ens.particles[:, j] - block.y_tilde)
    ag = block.a_tilde @ g
    return float(ag @ ag)


def gradient_lyapunov_dual(ens: Ensemble, block, j: int) -> float:
    """Dual-weighted gradient energy ``g' (A~'A~)^{-1} g`` of particle ``j``.

    This is the quantity that decreases monotonically along the flow when
    the particle keeps a fixed data block: its derivative is
    ``-2/(n_ens-1) * sum_k <e_k, g>^2 <= 0``.
    """
    a = block.a_tilde
    g = a.T @ (a @ ens.particles[:, j] - block.y_tilde)
    sol = np.linalg.solve(a.T @ a, g)
    return float(g @ sol)
