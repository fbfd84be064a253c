"""Reference solutions inside the affine span of the initial ensemble.

Ensemble flows never leave ``offset + range(E)``, where ``E`` spans the
centered initial particles and ``offset`` is the part of the initial mean
orthogonal to that span.  The natural reference point is therefore the
regularized least-squares minimizer constrained to this affine space, which
is available in closed form.  Problems can also be rewritten in the frame's
coordinates, where the ensemble covariance has full rank and spectral
statements apply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flows import LstsqBlock, SubsampledProblem
from .problems import Ensemble, LinearProblem, _as_readonly

__all__ = [
    "SubspaceFrame",
    "build_frame",
    "constrained_tikhonov",
    "restrict_problem",
    "coordinates_of",
]


@dataclass(frozen=True)
class SubspaceFrame:
    """Orthonormal basis of the centered-ensemble span plus the affine offset.

    ``basis`` has shape ``(d, n_ens - 1)`` with orthonormal columns;
    ``offset`` is orthogonal to every column.
    """

    basis: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        basis = _as_readonly(self.basis)
        offset = _as_readonly(self.offset)
        k = basis.shape[1]
        gram_err = np.abs(basis.T @ basis - np.eye(k)).max()
        if gram_err > 1e-12:
            raise ValueError("basis columns are not orthonormal")
        if offset.shape != (basis.shape[0],):
            raise ValueError("offset has the wrong shape")
        proj = basis.T @ offset
        if np.abs(proj).max() > 1e-10 * max(1.0, np.linalg.norm(offset)):
            raise ValueError("offset is not orthogonal to the basis")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "offset", offset)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


def build_frame(ens: Ensemble, rank_rtol: float = 1e-10) -> SubspaceFrame:
    """Orthonormalize the centered initial ensemble.

    Requires the generic situation where the centered particles span a space
    of dimension ``n_ens - 1``; rank-deficient ensembles are rejected so a
    degenerate frame can never silently define a reference solution.
    """
    centered = ens.centered()
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    want = ens.n_ens - 1
    have = 0 if s[0] == 0.0 else int(np.count_nonzero(s > rank_rtol * s[0]))
    if have != want:
        raise ValueError(
            f"centered ensemble has rank {have}, need {want}; redraw the ensemble"
        )
    basis = u[:, :want]
    mean = ens.particles.mean(axis=1)
    offset = mean - basis @ (basis.T @ mean)
    return SubspaceFrame(basis, offset)


def constrained_tikhonov(frame: SubspaceFrame, aug) -> tuple[np.ndarray, np.ndarray]:
    """Minimize ``0.5 |a_tilde theta - y_tilde|^2`` over the frame's affine span.

    Returns ``(coeffs, theta_star)`` with
    ``theta_star = basis @ coeffs + offset``.  Solved by orthogonal-
    factorization least squares on the reduced operator ``a_tilde @ basis``;
    at the solution the reduced residual gradient vanishes.
    """
    b = aug.a_tilde @ frame.basis
    rhs = aug.y_tilde - aug.a_tilde @ frame.offset
    coeffs, _, rank, _ = np.linalg.lstsq(b, rhs, rcond=None)
    if rank < frame.rank:
        raise ValueError("reduced operator is rank deficient")
    theta_star = frame.basis @ coeffs + frame.offset
    return coeffs, theta_star


def coordinates_of(frame: SubspaceFrame, ens: Ensemble) -> Ensemble:
    """Express particles in frame coordinates: ``basis' (theta - offset)``."""
    return Ensemble(frame.basis.T @ (ens.particles - frame.offset[:, None]))


def restrict_problem(frame: SubspaceFrame, sub: SubsampledProblem) -> SubsampledProblem:
    """Rewrite a subsampled problem in frame coordinates.

    Every system ``(M, z)`` becomes ``(M basis, z - M offset)``; flows of the
    restricted problem are exactly the frame coordinates of the ambient
    flows, but with a full-rank ensemble covariance.
    """
    def restrict(block) -> LstsqBlock:
        return LstsqBlock(
            block.a_tilde @ frame.basis,
            block.y_tilde - block.a_tilde @ frame.offset,
        )

    raw = sub.raw
    raw_restricted = LinearProblem(
        raw.A @ frame.basis,
        raw.y - raw.A @ frame.offset,
        raw.gamma,
    )
    return SubsampledProblem(
        raw_restricted,
        sub.part,
        restrict(sub.full),
        tuple(restrict(s) for s in sub.subsets),
    )
