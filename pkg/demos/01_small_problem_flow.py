"""Ensemble flows on a small ill-conditioned linear problem.

Builds a 12-observation / 6-parameter problem, splits the data into three
blocks, and integrates three flavours of the ensemble flow with the full
data active (no subsampling):

* ``eki``       plain Kalman flow toward the data-fit minimizer,
* ``teki``      flow on the regularized least-squares potential,
* ``teki_vi``   the same potential with a statically inflated preconditioner.

Each flavour is measured against its own target.  The two uninflated flows
are trapped in the affine span of the starting ensemble, so their target is
the minimizer restricted to that span; the inflated flow escapes the span
(that is what inflation buys) and its target is the global regularized
minimizer, which the others cannot reach with a small ensemble.

Run with:  python3 demos/01_small_problem_flow.py
"""

import numpy as np

from subeki.diagnostics import TrajectoryRecorder
from subeki.dopri import IntegratorConfig, integrate
from subeki.flows import FlowSpec, build_subsampled, subspace_projection_residual
from subeki.problems import DataPartition, Ensemble, LinearProblem, whiten
from subeki.reference import build_frame, constrained_tikhonov

rng = np.random.default_rng(20240817)

# An overdetermined problem with a mildly nasty spectrum and noisy data.
dim, n_obs = 6, 12
U, _ = np.linalg.qr(rng.standard_normal((n_obs, n_obs)))
V, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
spectrum = np.logspace(0, -3, dim)
A = U[:, :dim] * spectrum @ V.T
truth = rng.standard_normal(dim)
y = A @ truth + 0.05 * rng.standard_normal(n_obs)

problem = whiten(LinearProblem(A, y, 0.05**2 * np.eye(n_obs)))
part = DataPartition((4, 4, 4))
sub = build_subsampled(problem, part, alpha=1.0)

ens0 = Ensemble(rng.standard_normal((dim, 4)))
frame = build_frame(ens0)
print(f"problem: {n_obs} observations, {dim} parameters, "
      f"ensemble of {ens0.n_ens} spans {frame.rank} directions")

# Targets.  "Data fit" uses the whitened problem without regularization rows.
data_block = type("Block", (), {"a_tilde": problem.A, "y_tilde": problem.y})
_, ref_data_span = constrained_tikhonov(frame, data_block)
_, ref_reg_span = constrained_tikhonov(frame, sub.full)
ref_reg_global, *_ = np.linalg.lstsq(sub.full.a_tilde, sub.full.y_tilde,
                                     rcond=None)
print(f"global regularized minimizer is {np.linalg.norm(ref_reg_global - ref_reg_span):.3f} "
      "away from the best point inside the starting span\n")

sample_times = np.array([0.0, 1.0, 4.0, 16.0, 64.0])
cfg = IntegratorConfig(rtol=1e-8, atol=1e-11, dense_output_times=sample_times)

cases = [
    ("eki", 0.0, ref_data_span, "data-fit minimizer in the span"),
    ("teki", 0.0, ref_reg_span, "regularized minimizer in the span"),
    ("teki_vi", 1.0, ref_reg_global, "global regularized minimizer"),
]
for variant, alpha_vi, target, target_name in cases:
    spec = FlowSpec(variant, "none", sub, alpha_vi=alpha_vi)
    recorder = TrajectoryRecorder(target, sub.full, frame.basis)

    class SpanWatch:
        """Largest distance of any particle from the starting span."""
        worst = 0.0

        def on_sample(self, t, theta):
            r = subspace_projection_residual(Ensemble(theta), frame.basis,
                                             frame.offset)
            SpanWatch.worst = max(SpanWatch.worst, float(np.max(r)))

    res = integrate(spec, ens0, None, (0.0, sample_times[-1]), cfg,
                    observers=(recorder, SpanWatch()))
    record = recorder.record()
    err = record.param_error.mean(axis=1)
    spread = record.collapse.mean(axis=1)
    print(f"{variant:8s} target: {target_name}   "
          f"({res.n_steps} steps, {res.n_rejected} rejected)")
    print("   t      |mean - target|   spread")
    for t, e, s in zip(record.times, err, spread):
        print(f"  {t:4.1f}      {e:10.3e}   {s:8.2e}")
    print(f"  farthest excursion from the starting span: {SpanWatch.worst:.2e}\n")

print("Both uninflated flows stay in the span to machine precision, but their "
      "\npreconditioner is the ensemble covariance, which collapses -- so they "
      "creep\ntoward their in-span targets on an ever-slower algebraic clock "
      "(error and\nspread shrink together).  The inflated flow keeps a floor "
      "under the\npreconditioner: it leaves the span and converges "
      "exponentially to the global\nminimizer.")
