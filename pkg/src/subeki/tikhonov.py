"""Tikhonov regularization by augmenting the least-squares system.

Appending ``sqrt(alpha) * C0^{1/2}`` as extra rows (with zero data) turns the
regularized objective ``0.5 * |y - A theta|^2 + alpha/2 * theta' C0 theta``
into a plain least-squares potential for the augmented pair.  For a data
block out of ``n_sub`` blocks the weight is ``alpha / n_sub``, so the block
potentials sum exactly to the full regularized potential.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import _as_readonly, _diagonal

__all__ = [
    "AugmentedProblem",
    "augment_full",
    "augment_subset",
    "potential",
    "potential_gradient",
    "spd_sqrt",
]


def spd_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric square root of an SPD matrix; exact for diagonal input."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if np.abs(m - m.T).max() > 1e-12 * max(np.abs(m).max(), 1.0):
        raise ValueError("matrix is not symmetric")
    if _diagonal(m):
        d = m.diagonal()
        if d.min() <= 0.0:
            raise ValueError("matrix is not positive definite")
        return np.diag(np.sqrt(d))
    w, v = np.linalg.eigh(m)
    if w.min() <= 0.0:
        raise ValueError("matrix is not positive definite")
    return (v * np.sqrt(w)) @ v.T


@dataclass(frozen=True)
class AugmentedProblem:
    """Least-squares system with regularization rows appended.

    Attributes
    ----------
    a_tilde : ndarray, shape (n_rows + d, d)
        Operator rows followed by ``(alpha_eff * C0)^{1/2}``.
    y_tilde : ndarray, shape (n_rows + d,)
        Data followed by ``d`` zeros.
    alpha : float
        Regularization weight of the full objective.
    alpha_eff : float
        Weight carried by this block: ``alpha`` for the full system,
        ``alpha / n_sub`` for one of ``n_sub`` blocks.
    c0_sqrt : ndarray, shape (d, d)
        SPD square root of the regularization covariance ``C0``.
    """

    a_tilde: np.ndarray
    y_tilde: np.ndarray
    alpha: float
    alpha_eff: float
    c0_sqrt: np.ndarray

    def __post_init__(self):
        a = _as_readonly(self.a_tilde)
        y = _as_readonly(self.y_tilde)
        c = _as_readonly(self.c0_sqrt)
        if a.shape[0] != y.shape[0]:
            raise ValueError("a_tilde and y_tilde disagree on the number of rows")
        d = a.shape[1]
        if c.shape != (d, d):
            raise ValueError("c0_sqrt has the wrong shape")
        if a.shape[0] < d:
            raise ValueError("augmented system has fewer rows than columns")
        object.__setattr__(self, "a_tilde", a)
        object.__setattr__(self, "y_tilde", y)
        object.__setattr__(self, "c0_sqrt", c)

    @property
    def dim(self) -> int:
        return self.a_tilde.shape[1]

    @property
    def n_data_rows(self) -> int:
        return self.a_tilde.shape[0] - self.dim


def _augment(A: np.ndarray, y: np.ndarray, alpha: float, alpha_eff: float,
             c0: np.ndarray | None) -> AugmentedProblem:
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2 or y.shape != (A.shape[0],):
        raise ValueError("operator and data shapes are inconsistent")
    if not alpha > 0.0:
        raise ValueError("regularization weight must be positive")
    d = A.shape[1]
    c0_sqrt = np.eye(d) if c0 is None else spd_sqrt(c0)
    tail = np.sqrt(alpha_eff) * c0_sqrt
    a_tilde = np.vstack([A, tail])
    y_tilde = np.concatenate([y, np.zeros(d)])
    return AugmentedProblem(a_tilde, y_tilde, float(alpha), float(alpha_eff), c0_sqrt)


def augment_full(A: np.ndarray, y: np.ndarray, alpha: float,
                 c0: np.ndarray | None = None) -> AugmentedProblem:
    """Augment the full system with weight ``alpha`` (``c0=None`` means identity)."""
    return _augment(A, y, alpha, alpha, c0)


def augment_subset(A_i: np.ndarray, y_i: np.ndarray, alpha: float, n_sub: int,
                   c0: np.ndarray | None = None) -> AugmentedProblem:
    """Augment one of ``n_sub`` data blocks with the split weight ``alpha / n_sub``.

    The split makes the block potentials an exact additive decomposition of
    the full regularized potential.
    """
    if n_sub < 2:
        raise ValueError("n_sub must be at least 2")
    return _augment(A_i, y_i, alpha, alpha / n_sub, c0)


def potential(p: AugmentedProblem, theta: np.ndarray) -> np.ndarray | float:
    """Least-squares potential ``0.5 * |y_tilde - a_tilde theta|^2``.

    ``theta`` may be a single vector ``(d,)`` or a stack ``(d, m)``; the
    result is a float or an ``(m,)`` array accordingly.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        r = p.y_tilde - p.a_tilde @ theta
        return 0.5 * float(r @ r)
    r = p.y_tilde[:, None] - p.a_tilde @ theta
    return 0.5 * np.einsum("ij,ij->j", r, r)


def potential_gradient(p: AugmentedProblem, theta: np.ndarray) -> np.ndarray:
    """Gradient ``a_tilde' (a_tilde theta - y_tilde)`` of :func:`potential`.

    Accepts a vector or a ``(d, m)`` stack, matching the input shape.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        return p.a_tilde.T @ (p.a_tilde @ theta - p.y_tilde)
    return p.a_tilde.T @ (p.a_tilde @ theta - p.y_tilde[:, None])
