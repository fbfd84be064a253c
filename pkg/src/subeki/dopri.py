"""Embedded Runge-Kutta 4(5) integration of the ensemble flows.

The driver integrates the smooth flow between consecutive index-process
jumps with the Dormand-Prince 4(5) pair (first-same-as-last) under
proportional-integral step-size control, truncates the final step of every
segment so the accepted nodes hit each jump time exactly, applies the jump,
and restarts with a fresh step size.  Diagnostics are taken at requested
sample times from a fourth-order dense interpolant, and at every jump.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flows import FlowSpec, drift_matrix
from .index_process import IndexProcessState, JumpEvent, apply_next_jump
from .problems import Ensemble

__all__ = [
    "IntegratorConfig",
    "IntegrationResult",
    "DivergenceError",
    "StepSizeUnderflow",
    "integrate",
]

# Dormand-Prince 4(5) tableau.  Rows of _A are the stage weights, _C the
# stage abscissae, _E the difference between the 5th- and 4th-order weights,
# _D the dense-output weights (Hairer, Norsett & Wanner).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
])
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
    -10690763975 / 1880347072, 701980252875 / 199316789632,
    -1453857185 / 822651844, 69997945 / 29380423,
])

_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_FAC_MIN = 0.2
_FAC_MAX = 10.0


class DivergenceError(RuntimeError):
    """The state left the finite range; ``t_last`` is the last finite time."""

    def __init__(self, t_last: float):
        super().__init__(f"trajectory diverged after t = {t_last:.6g}")
        self.t_last = t_last


class StepSizeUnderflow(RuntimeError):
    """Step control collapsed below 1e-14 of the integration span."""

    def __init__(self, t: float, h: float):
        super().__init__(f"step size underflow at t = {t:.6g} (h = {h:.3g})")
        self.t = t
        self.h = h


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and sampling plan for :func:`integrate`."""

    rtol: float = 1e-6
    atol: float = 1e-9
    h_init: float = 1e-4
    h_max: float = np.inf
    dense_output_times: np.ndarray | None = None

    def __post_init__(self):
        for name in ("rtol", "atol", "h_init", "h_max"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.dense_output_times is not None:
            t = np.asarray(self.dense_output_times, dtype=float)
            if t.ndim != 1 or np.any(np.diff(t) < 0.0):
                raise ValueError("dense_output_times must be a sorted 1-d array")
            object.__setattr__(self, "dense_output_times", t)


@dataclass
class IntegrationResult:
    """Final state plus the audit trail of one integration."""

    ensemble: Ensemble
    t_final: float
    step_times: np.ndarray
    n_jumps: int
    n_steps: int
    n_rejected: int

    def save_step_log(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("time\n")
            for t in self.step_times:
                fh.write(f"{t:.17g}\n")


def integrate(spec: FlowSpec, ens0: Ensemble, index_state: IndexProcessState | None,
              t_span: tuple[float, float], cfg: IntegratorConfig | None = None,
              observers: tuple = ()) -> IntegrationResult:
    """Integrate an ensemble flow over ``t_span``.

    ``index_state`` supplies the block-selection jumps (``None`` for
    subsampling='none'); it is consumed and left at ``t_span[1]``.
    Observers may define ``on_sample(t, theta)``, called at every dense
    output time with a read-only particle view, and ``on_jump(event)``.

    Raises :class:`DivergenceError` on non-finite states and
    :class:`StepSizeUnderflow` when step control collapses.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise ValueError("t_span must be increasing")
    if (spec.subsampling == "none") != (index_state is None):
        raise ValueError("index process must be given exactly for subsampled flows")

    theta = np.array(ens0.particles, dtype=float, order="C")
    n_ens = theta.shape[1]
    samples = cfg.dense_output_times
    samples = np.empty(0) if samples is None else samples
    on_sample = [o.on_sample for o in observers if hasattr(o, "on_sample")]
    on_jump = [o.on_jump for o in observers if hasattr(o, "on_jump")]

    si = 0
    while si < samples.size and samples[si] <= t0:
        for cb in on_sample:
            cb(float(samples[si]), theta)
        si += 1

    step_times = [t0]
    n_steps = n_rejected = n_jumps = 0
    h_floor = 1e-14 * max(t1 - t0, 1.0)
    t = t0

    while t < t1:
        if index_state is None:
            t_stop, idx = t1, None
        else:
            t_stop = min(t1, index_state.earliest())
            idx = index_state.current
            if index_state.mode == "batch" and idx.shape[0] != n_ens:
                raise ValueError("batch process has a different number of coordinates")

        t, si, a, r = _run_segment(
            spec, theta, t, t_stop, idx, cfg, samples, si, on_sample, step_times, h_floor
        )
        n_steps += a
        n_rejected += r

        if index_state is not None and index_state.earliest() <= t and t <= t1:
            ev = apply_next_jump(index_state)
            n_jumps += 1
            for cb in on_jump:
                cb(ev)

    if index_state is not None:
        # flush coincident jumps landing exactly on t1, then settle the clock
        while index_state.earliest() <= t1:
            ev = apply_next_jump(index_state)
            n_jumps += 1
            for cb in on_jump:
                cb(ev)
        index_state.t_now = t1

    theta.setflags(write=False)
    return IntegrationResult(
        ensemble=Ensemble(theta),
        t_final=t1,
        step_times=np.asarray(step_times),
        n_jumps=n_jumps,
        n_steps=n_steps,
        n_rejected=n_rejected,
    )


def _run_segment(spec, theta, t_a, t_b, idx, cfg, samples, si, on_sample,
                 step_times, h_floor):
    """Adaptively integrate the smooth flow on [t_a, t_b] with fixed indices.

    Mutates ``theta`` in place and appends accepted node times (the last one
    is exactly ``t_b``).  Returns (t_b, sample pointer, accepted, rejected).
    """
    if t_b <= t_a:
        return t_a, si, 0, 0

    shape = theta.shape
    flat = theta.reshape(-1)
    k = np.empty((7, flat.size))
    k[0] = drift_matrix(spec, theta, t_a, idx).reshape(-1)
    if not np.all(np.isfinite(k[0])) or not np.all(np.isfinite(flat)):
        raise DivergenceError(t_a)

    have_samples = si < samples.size and samples[si] <= t_b
    rtol, atol = cfg.rtol, cfg.atol
    h = min(cfg.h_init, cfg.h_max, t_b - t_a)
    facold = 1e-4
    accepted = rejected = 0
    bad = 0
    t = t_a
    y_new = np.empty_like(flat)

    while t < t_b:
        h = min(h, t_b - t)
        if h < h_floor:
            raise StepSizeUnderflow(t, h)

        for i in range(1, 7):
            stage = flat + h * (_A[i, :i] @ k[:i])
            k[i] = drift_matrix(spec, stage.reshape(shape), t + _C[i] * h, idx).reshape(-1)
        # stage 7 is the 5th-order solution evaluated at t + h
        np.copyto(y_new, stage)

        err_vec = h * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(flat), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2))

        if not np.isfinite(err):
            bad += 1
            if bad > 25:
                raise DivergenceError(t)
            h *= 0.1
            rejected += 1
            continue
        bad = 0

        if err <= 1.0:
            t_new = t_b if t + h >= t_b else t + h
            if have_samples and samples[si] <= t_new:
                si = _emit_dense(flat, y_new, k, h, t, t_new, samples, si, on_sample, shape)
                have_samples = si < samples.size and samples[si] <= t_b
            np.copyto(flat, y_new)
            k[0] = k[6]
            t = t_new
            step_times.append(t)
            accepted += 1
            fac11 = err ** _EXPO
            fac = fac11 / facold ** _BETA
            fac = max(1.0 / _FAC_MAX, min(1.0 / _FAC_MIN, fac / _SAFETY))
            h = min(h / fac, cfg.h_max)
            facold = max(err, 1e-4)
        else:
            fac11 = err ** _EXPO
            h = h / min(1.0 / _FAC_MIN, fac11 / _SAFETY)
            rejected += 1

    return t_b, si, accepted, rejected


def _emit_dense(y0, y1, k, h, t, t_new, samples, si, on_sample, shape):
    """Evaluate the 4th-order interpolant at pending sample times in (t, t_new]."""
    ydiff = y1 - y0
    bspl = h * k[0] - ydiff
    rcont = (y0, ydiff, bspl, ydiff - h * k[6] - bspl, h * (_D @ k))
    while si < samples.size and samples[si] <= t_new:
        ts = float(samples[si])
        s = (ts - t) / (t_new - t)
        s1 = 1.0 - s
        out = rcont[0] + s * (rcont[1] + s1 * (rcont[2] + s * (rcont[3] + s1 * rcont[4])))
        view = out.reshape(shape)
        view.setflags(write=False)
        for cb in on_sample:
            cb(ts, view)
        si += 1
    return si
